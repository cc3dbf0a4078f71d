#include "webtrail/program.hpp"

#include "webtrail/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <variant>

namespace webtrail::program {

namespace {

// ---------------------------------------------------------------- lexing

struct Token {
  enum class Kind { Name, Number, String, Op, End };
  Kind kind = Kind::End;
  std::string text;
  double number = 0.0;
};

struct LineLexer {
  std::string_view line;
  int number;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& why) const {
    throw Error("dialect-parse-error", "line " + std::to_string(number) + ": " + why);
  }

  Token next() {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size() || line[pos] == '#') return {};
    char c = line[pos];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[pos])) || line[pos] == '_')) {
        ++pos;
      }
      return {Token::Kind::Name, std::string(line.substr(start, pos - start)), 0.0};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos + 1 < line.size() &&
         std::isdigit(static_cast<unsigned char>(line[pos + 1])))) {
      std::size_t start = pos;
      while (pos < line.size() && (std::isdigit(static_cast<unsigned char>(line[pos])) ||
                                   line[pos] == '.')) {
        ++pos;
      }
      std::string text(line.substr(start, pos - start));
      try {
        return {Token::Kind::Number, text, std::stod(text)};
      } catch (const std::exception&) {
        fail("bad number literal '" + text + "'");
      }
    }
    if (c == '"') {
      ++pos;
      std::string value;
      while (pos < line.size() && line[pos] != '"') {
        if (line[pos] == '\\') {
          if (pos + 1 >= line.size()) fail("dangling escape");
          char esc = line[pos + 1];
          switch (esc) {
            case '\\': value.push_back('\\'); break;
            case '"': value.push_back('"'); break;
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            default: fail(std::string("unknown escape '\\") + esc + "'");
          }
          pos += 2;
          continue;
        }
        value.push_back(line[pos++]);
      }
      if (pos >= line.size()) fail("unterminated string literal");
      ++pos;
      return {Token::Kind::String, value, 0.0};
    }
    static const char* kTwoChar[] = {"==", "!=", "<=", ">="};
    for (const char* op : kTwoChar) {
      if (line.compare(pos, 2, op) == 0) {
        pos += 2;
        return {Token::Kind::Op, op, 0.0};
      }
    }
    if (std::string_view("=<>+-*/(),").find(c) != std::string_view::npos) {
      ++pos;
      return {Token::Kind::Op, std::string(1, c), 0.0};
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

std::vector<Token> tokenize_line(std::string_view line, int number) {
  LineLexer lexer{line, number};
  std::vector<Token> tokens;
  while (true) {
    Token t = lexer.next();
    if (t.kind == Token::Kind::End) break;
    tokens.push_back(std::move(t));
  }
  return tokens;
}

// ------------------------------------------------------------------ AST

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  enum class Kind { Number, String, Bool, Var, Call, Binary, Negate };
  Kind kind;
  double number = 0.0;
  std::string text;          // string literal, variable name, call name, operator
  std::vector<ExprPtr> args; // call arguments / binary operands / negate operand
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
  enum class Kind { Assign, For, If };
  Kind kind;
  int line = 0;
  std::string name;  // assignment target / loop variable
  ExprPtr expr;      // assignment value / loop list / condition
  std::vector<StmtPtr> body;
  std::vector<StmtPtr> else_body;
};

// ---------------------------------------------------------------- parser

struct ExprParser {
  const std::vector<Token>& tokens;
  std::size_t pos = 0;
  int line;

  [[noreturn]] void fail(const std::string& why) const {
    throw Error("dialect-parse-error", "line " + std::to_string(line) + ": " + why);
  }

  bool at_op(std::string_view op) const {
    return pos < tokens.size() && tokens[pos].kind == Token::Kind::Op && tokens[pos].text == op;
  }

  ExprPtr parse() {
    ExprPtr e = parse_comparison();
    if (pos != tokens.size()) fail("unexpected trailing tokens");
    return e;
  }

  ExprPtr parse_comparison() {
    ExprPtr left = parse_additive();
    static const char* kOps[] = {"==", "!=", "<=", ">=", "<", ">"};
    for (const char* op : kOps) {
      if (at_op(op)) {
        ++pos;
        ExprPtr right = parse_additive();
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::Binary;
        e->text = op;
        e->args.push_back(std::move(left));
        e->args.push_back(std::move(right));
        return e;
      }
    }
    return left;
  }

  ExprPtr parse_additive() {
    ExprPtr left = parse_term();
    while (at_op("+") || at_op("-")) {
      std::string op = tokens[pos++].text;
      ExprPtr right = parse_term();
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Binary;
      e->text = op;
      e->args.push_back(std::move(left));
      e->args.push_back(std::move(right));
      left = std::move(e);
    }
    return left;
  }

  ExprPtr parse_term() {
    ExprPtr left = parse_factor();
    while (at_op("*") || at_op("/")) {
      std::string op = tokens[pos++].text;
      ExprPtr right = parse_factor();
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Binary;
      e->text = op;
      e->args.push_back(std::move(left));
      e->args.push_back(std::move(right));
      left = std::move(e);
    }
    return left;
  }

  ExprPtr parse_factor() {
    if (pos >= tokens.size()) fail("expected an expression");
    const Token& t = tokens[pos];
    if (t.kind == Token::Kind::Op && t.text == "-") {
      ++pos;
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Negate;
      e->args.push_back(parse_factor());
      return e;
    }
    if (t.kind == Token::Kind::Op && t.text == "(") {
      ++pos;
      ExprPtr inner = parse_comparison();
      if (!at_op(")")) fail("expected ')'");
      ++pos;
      return inner;
    }
    if (t.kind == Token::Kind::Number) {
      ++pos;
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Number;
      e->number = t.number;
      return e;
    }
    if (t.kind == Token::Kind::String) {
      ++pos;
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::String;
      e->text = t.text;
      return e;
    }
    if (t.kind == Token::Kind::Name) {
      ++pos;
      if (t.text == "true" || t.text == "false") {
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::Bool;
        e->number = (t.text == "true") ? 1.0 : 0.0;
        return e;
      }
      if (at_op("(")) {
        ++pos;
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::Call;
        e->text = t.text;
        if (!at_op(")")) {
          while (true) {
            e->args.push_back(parse_comparison());
            if (at_op(",")) {
              ++pos;
              continue;
            }
            break;
          }
        }
        if (!at_op(")")) fail("expected ')' in call to " + t.text);
        ++pos;
        return e;
      }
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Var;
      e->text = t.text;
      return e;
    }
    fail("unexpected token '" + t.text + "'");
  }
};

ExprPtr parse_expr_tokens(const std::vector<Token>& tokens, std::size_t start, int line) {
  std::vector<Token> slice(tokens.begin() + static_cast<long>(start), tokens.end());
  ExprParser parser{slice, 0, line};
  return parser.parse();
}

struct SourceLine {
  std::vector<Token> tokens;
  int number;
};

struct StmtParser {
  const std::vector<SourceLine>& lines;
  std::size_t pos = 0;

  [[noreturn]] void fail(int line, const std::string& why) const {
    throw Error("dialect-parse-error", "line " + std::to_string(line) + ": " + why);
  }

  bool line_is_keyword(const SourceLine& line, std::string_view kw) const {
    return !line.tokens.empty() && line.tokens[0].kind == Token::Kind::Name &&
           line.tokens[0].text == kw;
  }

  std::vector<StmtPtr> parse_block(bool allow_else, bool& hit_else) {
    std::vector<StmtPtr> block;
    hit_else = false;
    while (pos < lines.size()) {
      const SourceLine& line = lines[pos];
      if (line_is_keyword(line, "end")) {
        if (line.tokens.size() != 1) fail(line.number, "'end' takes nothing else");
        ++pos;
        return block;
      }
      if (line_is_keyword(line, "else")) {
        if (!allow_else) fail(line.number, "'else' outside an if");
        if (line.tokens.size() != 1) fail(line.number, "'else' takes nothing else");
        ++pos;
        hit_else = true;
        return block;
      }
      block.push_back(parse_statement());
    }
    fail(lines.empty() ? 0 : lines.back().number, "missing 'end'");
  }

  StmtPtr parse_statement() {
    const SourceLine& line = lines[pos];
    auto stmt = std::make_unique<Stmt>();
    stmt->line = line.number;
    if (line_is_keyword(line, "for")) {
      if (line.tokens.size() < 4 || line.tokens[1].kind != Token::Kind::Name ||
          line.tokens[2].kind != Token::Kind::Name || line.tokens[2].text != "in") {
        fail(line.number, "expected 'for <name> in <expr>'");
      }
      stmt->kind = Stmt::Kind::For;
      stmt->name = line.tokens[1].text;
      stmt->expr = parse_expr_tokens(line.tokens, 3, line.number);
      ++pos;
      bool hit_else = false;
      stmt->body = parse_block(false, hit_else);
      return stmt;
    }
    if (line_is_keyword(line, "if")) {
      if (line.tokens.size() < 2) fail(line.number, "expected 'if <expr>'");
      stmt->kind = Stmt::Kind::If;
      stmt->expr = parse_expr_tokens(line.tokens, 1, line.number);
      ++pos;
      bool hit_else = false;
      stmt->body = parse_block(true, hit_else);
      if (hit_else) {
        bool nested_else = false;
        stmt->else_body = parse_block(false, nested_else);
      }
      return stmt;
    }
    if (line.tokens.size() >= 2 && line.tokens[0].kind == Token::Kind::Name &&
        line.tokens[1].kind == Token::Kind::Op && line.tokens[1].text == "=") {
      if (line.tokens[0].text == "task" || line.tokens[0].text == "state") {
        fail(line.number, "'" + line.tokens[0].text + "' is a read-only binding");
      }
      stmt->kind = Stmt::Kind::Assign;
      stmt->name = line.tokens[0].text;
      stmt->expr = parse_expr_tokens(line.tokens, 2, line.number);
      ++pos;
      return stmt;
    }
    fail(line.number, "expected an assignment, 'for' or 'if'");
  }
};

// -------------------------------------------------------------- selectors

struct SelectorPart {
  enum class Kind { Tag, Class, Id, Attr, AttrValue };
  Kind kind;
  std::string name;
  std::string value;
};

std::vector<SelectorPart> parse_selector(const std::string& text, int line) {
  auto fail = [&](const std::string& why) -> void {
    throw Error("runtime-error",
                "line " + std::to_string(line) + ": bad selector '" + text + "': " + why);
  };
  std::vector<SelectorPart> parts;
  std::size_t pos = 0;
  auto take_name = [&]() {
    std::size_t start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                 text[pos] == '-' || text[pos] == '_')) {
      ++pos;
    }
    if (pos == start) fail("expected a name");
    return text.substr(start, pos - start);
  };
  if (text.empty()) fail("empty selector");
  if (std::isalpha(static_cast<unsigned char>(text[0]))) {
    parts.push_back({SelectorPart::Kind::Tag, take_name(), ""});
  }
  while (pos < text.size()) {
    char c = text[pos];
    if (c == '.') {
      ++pos;
      parts.push_back({SelectorPart::Kind::Class, take_name(), ""});
    } else if (c == '#') {
      ++pos;
      parts.push_back({SelectorPart::Kind::Id, take_name(), ""});
    } else if (c == '[') {
      ++pos;
      std::string name = take_name();
      if (pos < text.size() && text[pos] == '=') {
        ++pos;
        std::size_t close = text.find(']', pos);
        if (close == std::string::npos) fail("missing ']'");
        parts.push_back({SelectorPart::Kind::AttrValue, name, text.substr(pos, close - pos)});
        pos = close + 1;
      } else if (pos < text.size() && text[pos] == ']') {
        ++pos;
        parts.push_back({SelectorPart::Kind::Attr, name, ""});
      } else {
        fail("missing ']'");
      }
    } else {
      fail("unexpected character");
    }
  }
  if (parts.empty()) fail("empty selector");
  return parts;
}

bool selector_matches(const std::vector<SelectorPart>& parts, const html::Node& node) {
  if (!node.is_element() || node.tag == "#document") return false;
  for (const SelectorPart& part : parts) {
    switch (part.kind) {
      case SelectorPart::Kind::Tag:
        if (node.tag != part.name) return false;
        break;
      case SelectorPart::Kind::Id: {
        const std::string* id = node.attr("id");
        if (id == nullptr || *id != part.name) return false;
        break;
      }
      case SelectorPart::Kind::Class: {
        const std::string* classes = node.attr("class");
        if (classes == nullptr) return false;
        bool found = false;
        std::size_t start = 0;
        while (start < classes->size()) {
          while (start < classes->size() && classes->at(start) == ' ') ++start;
          std::size_t end = classes->find(' ', start);
          if (end == std::string::npos) end = classes->size();
          if (classes->substr(start, end - start) == part.name) {
            found = true;
            break;
          }
          start = end;
        }
        if (!found) return false;
        break;
      }
      case SelectorPart::Kind::Attr:
        if (node.attr(part.name) == nullptr) return false;
        break;
      case SelectorPart::Kind::AttrValue: {
        const std::string* v = node.attr(part.name);
        if (v == nullptr || *v != part.value) return false;
        break;
      }
    }
  }
  return true;
}

// ------------------------------------------------------------- evaluation

using NodeList = std::vector<const html::Node*>;
using Value = std::variant<double, std::string, bool, const html::Node*, NodeList>;

std::string type_name(const Value& v) {
  switch (v.index()) {
    case 0: return "number";
    case 1: return "string";
    case 2: return "bool";
    case 3: return "node";
    default: return "nodelist";
  }
}

std::string format_number(double x) {
  if (std::isfinite(x) && x == std::floor(x) && std::fabs(x) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(x));
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Executor {
  const TaskSpec& task;
  const html::Document& state;
  std::size_t step_limit;
  std::size_t steps = 0;
  std::map<std::string, Value> vars;

  [[noreturn]] void fail(int line, const std::string& what, const std::string& why) const {
    throw Error("runtime-error", what + " at line " + std::to_string(line) + ": " + why);
  }

  void tick(int line) {
    if (++steps > step_limit) {
      throw Error("runtime-error",
                  "step-limit exceeded (" + std::to_string(step_limit) + ") at line " +
                      std::to_string(line));
    }
  }

  std::string value_to_string(const Value& v, int line) {
    switch (v.index()) {
      case 0: return format_number(std::get<double>(v));
      case 1: return std::get<std::string>(v);
      case 2: return std::get<bool>(v) ? "true" : "false";
      default: fail(line, "type-error", "cannot convert " + type_name(v) + " to string");
    }
  }

  double value_to_number(const Value& v, int line) {
    if (v.index() == 0) return std::get<double>(v);
    fail(line, "type-error", "expected a number, got " + type_name(v));
  }

  NodeList select_in(const html::Node& scope, const std::string& selector, int line) {
    auto parts = parse_selector(selector, line);
    NodeList out;
    std::function<void(const html::Node&)> walk = [&](const html::Node& n) {
      for (const auto& child : n.children) {
        if (child->is_element() && selector_matches(parts, *child)) out.push_back(child.get());
        walk(*child);
      }
    };
    walk(scope);
    return out;
  }

  Value call_builtin(const std::string& name, std::vector<Value>& args, int line) {
    auto arity = [&](std::size_t n) {
      if (args.size() != n) {
        fail(line, "type-error",
             name + " expects " + std::to_string(n) + " argument(s), got " +
                 std::to_string(args.size()));
      }
    };
    auto as_node = [&](const Value& v) -> const html::Node* {
      if (v.index() == 3) return std::get<const html::Node*>(v);
      fail(line, "type-error", name + " expects a node, got " + type_name(v));
    };
    auto as_list = [&](const Value& v) -> const NodeList& {
      if (v.index() == 4) return std::get<NodeList>(v);
      fail(line, "type-error", name + " expects a node list, got " + type_name(v));
    };
    auto as_string = [&](const Value& v) -> const std::string& {
      if (v.index() == 1) return std::get<std::string>(v);
      fail(line, "type-error", name + " expects a string, got " + type_name(v));
    };

    if (name == "select") {
      if (args.size() == 1) {
        return select_in(state.root(), as_string(args[0]), line);
      }
      arity(2);
      return select_in(*as_node(args[0]), as_string(args[1]), line);
    }
    if (name == "first") {
      arity(1);
      const NodeList& list = as_list(args[0]);
      if (list.empty()) fail(line, "empty-selection", "first() over an empty node list");
      return list.front();
    }
    if (name == "item") {
      arity(2);
      const NodeList& list = as_list(args[0]);
      long i = static_cast<long>(value_to_number(args[1], line));
      if (i < 0 || static_cast<std::size_t>(i) >= list.size()) {
        fail(line, "index-out-of-range",
             "item(" + std::to_string(i) + ") over " + std::to_string(list.size()) + " nodes");
      }
      return list[static_cast<std::size_t>(i)];
    }
    if (name == "count") {
      arity(1);
      return static_cast<double>(as_list(args[0]).size());
    }
    if (name == "text") {
      arity(1);
      return as_node(args[0])->text_content();
    }
    if (name == "attr") {
      arity(2);
      const html::Node* node = as_node(args[0]);
      const std::string& attr_name = as_string(args[1]);
      const std::string* v = node->attr(attr_name);
      if (v == nullptr) {
        fail(line, "missing-attribute", "'" + attr_name + "' on <" + node->tag + ">");
      }
      return *v;
    }
    if (name == "has_attr") {
      arity(2);
      return as_node(args[0])->attr(as_string(args[1])) != nullptr;
    }
    if (name == "num") {
      arity(1);
      if (args[0].index() == 0) return args[0];
      const std::string& s = as_string(args[0]);
      // first decimal number in the string, optional sign and fraction
      for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        bool start = std::isdigit(static_cast<unsigned char>(c)) ||
                     ((c == '-' || c == '+') && i + 1 < s.size() &&
                      std::isdigit(static_cast<unsigned char>(s[i + 1])));
        if (!start) continue;
        std::size_t end = i + ((c == '-' || c == '+') ? 1 : 0);
        bool dot = false;
        while (end < s.size() && (std::isdigit(static_cast<unsigned char>(s[end])) ||
                                  (s[end] == '.' && !dot))) {
          if (s[end] == '.') dot = true;
          ++end;
        }
        return std::stod(s.substr(i, end - i));
      }
      fail(line, "not-a-number", "no numeric value in '" + s + "'");
    }
    if (name == "str") {
      arity(1);
      return value_to_string(args[0], line);
    }
    if (name == "lower") {
      arity(1);
      std::string out = as_string(args[0]);
      for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      return out;
    }
    if (name == "contains") {
      arity(2);
      return as_string(args[0]).find(as_string(args[1])) != std::string::npos;
    }
    if (name == "format") {
      if (args.empty()) fail(line, "format-arity", "format needs a format string");
      const std::string& fmt = as_string(args[0]);
      std::string out;
      std::size_t next_arg = 1;
      for (std::size_t i = 0; i < fmt.size(); ++i) {
        if (fmt[i] == '{' && i + 1 < fmt.size() && fmt[i + 1] == '}') {
          if (next_arg >= args.size()) {
            fail(line, "format-arity", "more '{}' placeholders than arguments");
          }
          out += value_to_string(args[next_arg++], line);
          ++i;
        } else {
          out.push_back(fmt[i]);
        }
      }
      if (next_arg != args.size()) {
        fail(line, "format-arity", "unused format arguments");
      }
      return out;
    }
    fail(line, "undefined-function", "'" + name + "'");
  }

  Value eval(const Expr& e, int line) {
    tick(line);
    switch (e.kind) {
      case Expr::Kind::Number: return e.number;
      case Expr::Kind::String: return e.text;
      case Expr::Kind::Bool: return e.number != 0.0;
      case Expr::Kind::Var: {
        if (e.text == "task") return task.description;
        auto it = vars.find(e.text);
        if (it == vars.end()) {
          if (e.text == "state") {
            fail(line, "type-error", "'state' is a node; pass selectors to select()");
          }
          fail(line, "undefined-variable", "'" + e.text + "'");
        }
        return it->second;
      }
      case Expr::Kind::Negate: {
        Value v = eval(*e.args[0], line);
        return -value_to_number(v, line);
      }
      case Expr::Kind::Call: {
        std::vector<Value> args;
        args.reserve(e.args.size());
        for (const ExprPtr& a : e.args) args.push_back(eval(*a, line));
        return call_builtin(e.text, args, line);
      }
      case Expr::Kind::Binary: {
        Value left = eval(*e.args[0], line);
        Value right = eval(*e.args[1], line);
        const std::string& op = e.text;
        if (op == "+") {
          if (left.index() == 1 && right.index() == 1) {
            return std::get<std::string>(left) + std::get<std::string>(right);
          }
          return value_to_number(left, line) + value_to_number(right, line);
        }
        if (op == "-") return value_to_number(left, line) - value_to_number(right, line);
        if (op == "*") return value_to_number(left, line) * value_to_number(right, line);
        if (op == "/") {
          double denom = value_to_number(right, line);
          if (denom == 0.0) fail(line, "type-error", "division by zero");
          return value_to_number(left, line) / denom;
        }
        if (op == "==" || op == "!=") {
          bool equal;
          if (left.index() == 1 && right.index() == 1) {
            equal = std::get<std::string>(left) == std::get<std::string>(right);
          } else if (left.index() == 2 && right.index() == 2) {
            equal = std::get<bool>(left) == std::get<bool>(right);
          } else {
            equal = value_to_number(left, line) == value_to_number(right, line);
          }
          return op == "==" ? equal : !equal;
        }
        // ordered comparisons on numbers or strings
        if (left.index() == 1 && right.index() == 1) {
          int cmp = std::get<std::string>(left).compare(std::get<std::string>(right));
          if (op == "<") return cmp < 0;
          if (op == ">") return cmp > 0;
          if (op == "<=") return cmp <= 0;
          return cmp >= 0;
        }
        double l = value_to_number(left, line);
        double r = value_to_number(right, line);
        if (op == "<") return l < r;
        if (op == ">") return l > r;
        if (op == "<=") return l <= r;
        return l >= r;
      }
    }
    fail(line, "type-error", "unreachable expression kind");
  }

  bool truthy(const Value& v, int line) {
    if (v.index() == 2) return std::get<bool>(v);
    if (v.index() == 0) return std::get<double>(v) != 0.0;
    fail(line, "type-error", "condition must be a bool or number, got " + type_name(v));
  }

  void run_block(const std::vector<StmtPtr>& block) {
    for (const StmtPtr& stmt : block) {
      tick(stmt->line);
      switch (stmt->kind) {
        case Stmt::Kind::Assign:
          vars[stmt->name] = eval(*stmt->expr, stmt->line);
          break;
        case Stmt::Kind::For: {
          Value list = eval(*stmt->expr, stmt->line);
          if (list.index() != 4) {
            fail(stmt->line, "type-error",
                 "for loops iterate node lists, got " + type_name(list));
          }
          for (const html::Node* node : std::get<NodeList>(list)) {
            vars[stmt->name] = node;
            run_block(stmt->body);
          }
          break;
        }
        case Stmt::Kind::If: {
          Value cond = eval(*stmt->expr, stmt->line);
          if (truthy(cond, stmt->line)) {
            run_block(stmt->body);
          } else {
            run_block(stmt->else_body);
          }
          break;
        }
      }
    }
  }
};

}  // namespace

struct Program::Impl {
  std::vector<StmtPtr> statements;
};

Program::Program() : impl_(std::make_unique<Impl>()) {}
Program::Program(Program&&) noexcept = default;
Program& Program::operator=(Program&&) noexcept = default;
Program::~Program() = default;

Program Program::parse(std::string_view source, Origin origin) {
  std::vector<SourceLine> lines;
  std::size_t start = 0;
  int number = 1;
  while (start <= source.size()) {
    std::size_t end = source.find('\n', start);
    std::string_view line =
        (end == std::string_view::npos) ? source.substr(start) : source.substr(start, end - start);
    auto tokens = tokenize_line(line, number);
    if (!tokens.empty()) lines.push_back({std::move(tokens), number});
    if (end == std::string_view::npos) break;
    start = end + 1;
    ++number;
  }

  Program program;
  program.source_ = std::string(source);
  program.origin_ = origin;
  StmtParser parser{lines};
  while (parser.pos < lines.size()) {
    program.impl_->statements.push_back(parser.parse_statement());
  }
  return program;
}

std::string Program::execute(const TaskSpec& task, const html::Document& state,
                             std::size_t step_limit) const {
  Executor executor{task, state, step_limit, 0, {}};
  executor.run_block(impl_->statements);
  auto it = executor.vars.find("obs");
  if (it == executor.vars.end()) {
    throw Error("runtime-error", "obs-not-set: program finished without assigning 'obs'");
  }
  if (it->second.index() != 1) {
    throw Error("runtime-error", "obs-not-set: 'obs' must be a string, got " +
                                     type_name(it->second));
  }
  return std::get<std::string>(it->second);
}

std::string extract_code_block(std::string_view completion) {
  std::size_t open = completion.find("```");
  if (open == std::string_view::npos) {
    throw Error("no-code-block", "completion has no triple-backtick block");
  }
  std::size_t line_end = completion.find('\n', open);
  if (line_end == std::string_view::npos) {
    throw Error("no-code-block", "opening fence is not followed by code");
  }
  std::size_t close = completion.find("```", line_end + 1);
  if (close == std::string_view::npos) {
    throw Error("no-code-block", "code block is never closed");
  }
  // exclude the newline that precedes the closing fence
  std::size_t end = close;
  if (end > line_end + 1 && completion[end - 1] == '\n') --end;
  return std::string(completion.substr(line_end + 1, end - (line_end + 1)));
}

}  // namespace webtrail::program
