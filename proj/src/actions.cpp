#include "webtrail/actions.hpp"

#include "webtrail/error.hpp"
#include "webtrail/xpath.hpp"

#include <cctype>
#include <optional>
#include <sstream>

namespace webtrail::actions {

namespace {

struct Line {
  std::string_view text;
  int number = 0;  // 1-based within the full response
};

std::vector<Line> split_lines(std::string_view text, int first_number) {
  std::vector<Line> lines;
  std::size_t start = 0;
  int number = first_number;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back({text.substr(start), number});
      break;
    }
    lines.push_back({text.substr(start, end - start), number});
    start = end + 1;
    ++number;
  }
  return lines;
}

std::string_view lstrip(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

std::string_view rstrip(std::string_view s) {
  std::size_t n = s.size();
  while (n > 0 && std::isspace(static_cast<unsigned char>(s[n - 1]))) --n;
  return s.substr(0, n);
}

std::string_view strip(std::string_view s) { return rstrip(lstrip(s)); }

std::size_t indent_width(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return i;
}

[[noreturn]] void fail(const std::string& kind, int line, const std::string& why) {
  throw Error(kind, "line " + std::to_string(line) + ": " + why);
}

// Parses a quoted string literal starting at position `pos` of `text`.
// Returns the decoded value and advances `pos` past the closing quote.
// Errors carry 1-based line and column positions.
std::string parse_string_literal(std::string_view text, std::size_t& pos, int line) {
  auto fail_at = [&](const std::string& why) {
    fail("malformed-literal", line, "column " + std::to_string(pos + 1) + ": " + why);
  };
  if (pos >= text.size() || (text[pos] != '\'' && text[pos] != '"')) {
    fail_at("expected a quoted string literal");
  }
  char quote = text[pos++];
  std::string value;
  while (pos < text.size()) {
    char c = text[pos];
    if (c == quote) {
      ++pos;
      return value;
    }
    if (c == '\\') {
      if (pos + 1 >= text.size()) fail_at("dangling escape");
      char esc = text[pos + 1];
      switch (esc) {
        case '\\': value.push_back('\\'); break;
        case '\'': value.push_back('\''); break;
        case '"': value.push_back('"'); break;
        case 'n': value.push_back('\n'); break;
        case 't': value.push_back('\t'); break;
        default:
          fail_at(std::string("unknown escape '\\") + esc + "'");
      }
      pos += 2;
      continue;
    }
    value.push_back(c);
    ++pos;
  }
  fail_at("unterminated string literal");
  throw Error("malformed-literal", "unreachable");
}

std::string comment_text(std::string_view line_after_hash) {
  std::string_view t = line_after_hash;
  if (!t.empty() && t.front() == ' ') t.remove_prefix(1);
  return std::string(rstrip(t));
}

// Parses "agent.<method>(<literal>)" with an optional trailing "# comment".
// Returns the action and, when present, the inline comment text.
std::pair<Action, std::optional<std::string>> parse_call(std::string_view line, int number) {
  std::string_view t = lstrip(line);
  constexpr std::string_view kPrefix = "agent.";
  if (t.substr(0, kPrefix.size()) != kPrefix) {
    fail("unsupported-construct", number, "expected an agent.<method>(...) call");
  }
  std::size_t pos = kPrefix.size();
  std::size_t name_start = pos;
  while (pos < t.size() &&
         (std::isalnum(static_cast<unsigned char>(t[pos])) || t[pos] == '_')) {
    ++pos;
  }
  std::string method(t.substr(name_start, pos - name_start));
  if (pos >= t.size() || t[pos] != '(') {
    fail("unsupported-construct", number, "expected '(' after method name");
  }
  ++pos;
  while (pos < t.size() && t[pos] == ' ') ++pos;
  std::string argument = parse_string_literal(t, pos, number);
  while (pos < t.size() && t[pos] == ' ') ++pos;
  if (pos >= t.size() || t[pos] != ')') {
    fail("malformed-literal", number, "expected ')' after the string argument");
  }
  ++pos;
  std::string_view rest = lstrip(t.substr(pos));
  std::optional<std::string> inline_comment;
  if (!rest.empty()) {
    if (rest.front() == '#') {
      inline_comment = comment_text(rest.substr(1));
    } else {
      fail("unsupported-construct", number, "unexpected trailing text after call");
    }
  }

  Action action;
  try {
    if (method == "type") action = Action::type(argument);
    else if (method == "click_xpath") action = Action::click_xpath(argument);
    else if (method == "press") action = Action::press(argument);
    else if (method == "click_option") action = Action::click_option(argument);
    else if (method == "movemouse") action = Action::move_mouse(argument);
    else fail("unknown-method", number, "agent." + method + " is not in the action catalogue");
  } catch (const Error& e) {
    if (e.kind() == "invariant-violation") {
      fail("invalid-argument", number, e.what());
    }
    throw;
  }
  return {action, inline_comment};
}

// Matches "for _ in range(<N>):" and returns N, or nullopt if the line is not
// a for statement at all.
std::optional<int> parse_loop_header(std::string_view line, int number) {
  std::string_view t = lstrip(line);
  if (t.substr(0, 3) != "for") return std::nullopt;
  std::istringstream in{std::string(t)};
  std::string word;
  in >> word;  // "for"
  std::string var, kw;
  in >> var >> kw;
  if (var != "_" || kw != "in") {
    fail("unsupported-construct", number, "only 'for _ in range(N):' loops are supported");
  }
  std::string rest;
  std::getline(in, rest);
  std::string_view r = strip(rest);
  if (r.substr(0, 6) != "range(") {
    fail("unsupported-construct", number, "only 'for _ in range(N):' loops are supported");
  }
  r.remove_prefix(6);
  std::size_t close = r.find(')');
  if (close == std::string_view::npos) {
    fail("unsupported-construct", number, "missing ')' in range");
  }
  std::string_view count_text = strip(r.substr(0, close));
  std::string_view tail = strip(r.substr(close + 1));
  if (tail != ":") fail("unsupported-construct", number, "expected ':' after range(N)");
  if (count_text.empty()) fail("unsupported-construct", number, "range needs a literal count");
  for (char c : count_text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      fail("unsupported-construct", number, "loop count must be an integer literal");
    }
  }
  int count = std::stoi(std::string(count_text));
  if (count < 1) fail("unsupported-construct", number, "loop count must be >= 1");
  return count;
}

}  // namespace

ActionScript parse_code_actions(std::string_view response) {
  auto all_lines = split_lines(response, 1);

  // locate the first fence
  std::size_t open = all_lines.size();
  for (std::size_t i = 0; i < all_lines.size(); ++i) {
    std::string_view t = strip(all_lines[i].text);
    if (t.substr(0, 3) == "```") {
      open = i;
      break;
    }
  }
  if (open == all_lines.size()) {
    throw Error("no-fence", "response contains no triple-backtick code fence");
  }
  std::size_t close = all_lines.size();
  for (std::size_t i = open + 1; i < all_lines.size(); ++i) {
    if (strip(all_lines[i].text) == "```") {
      close = i;
      break;
    }
  }
  if (close == all_lines.size()) {
    throw Error("no-fence", "code fence opened on line " +
                                std::to_string(all_lines[open].number) + " is never closed");
  }

  ActionScript script;
  {
    std::string inner;
    for (std::size_t i = open + 1; i < close; ++i) {
      if (i > open + 1) inner.push_back('\n');
      inner += std::string(all_lines[i].text);
    }
    script.fence_text = std::move(inner);
  }

  std::size_t i = open + 1;
  while (i < close) {
    const Line& line = all_lines[i];
    std::string_view stripped = strip(line.text);
    if (stripped.empty()) {
      ++i;
      continue;
    }
    if (stripped.front() == '#') {
      Statement st;
      st.kind = Statement::Kind::Comment;
      st.comment = comment_text(stripped.substr(1));
      script.statements.push_back(std::move(st));
      ++i;
      continue;
    }
    if (auto count = parse_loop_header(line.text, line.number)) {
      Statement st;
      st.kind = Statement::Kind::Loop;
      st.loop_count = *count;
      std::size_t header_indent = indent_width(line.text);
      ++i;
      while (i < close) {
        const Line& body_line = all_lines[i];
        std::string_view body_stripped = strip(body_line.text);
        if (body_stripped.empty()) {
          ++i;
          continue;
        }
        if (indent_width(body_line.text) <= header_indent) break;
        if (body_stripped.front() == '#') {
          fail("unsupported-construct", body_line.number, "comments inside loop bodies");
        }
        if (parse_loop_header(body_line.text, body_line.number)) {
          fail("unsupported-construct", body_line.number, "nested loops");
        }
        auto [action, inline_comment] = parse_call(body_line.text, body_line.number);
        if (inline_comment) {
          fail("unsupported-construct", body_line.number, "comments inside loop bodies");
        }
        st.body.push_back(std::move(action));
        ++i;
      }
      if (st.body.empty()) {
        fail("unsupported-construct", line.number, "loop body is empty");
      }
      script.statements.push_back(std::move(st));
      continue;
    }
    auto [action, inline_comment] = parse_call(line.text, line.number);
    Statement st;
    st.kind = Statement::Kind::Call;
    st.action = std::move(action);
    script.statements.push_back(std::move(st));
    if (inline_comment) {
      Statement c;
      c.kind = Statement::Kind::Comment;
      c.comment = *inline_comment;
      script.statements.push_back(std::move(c));
    }
    ++i;
  }
  return script;
}

ActionBlock expand(const ActionScript& script) {
  ActionBlock block;
  block.raw_text = script.fence_text;
  for (const Statement& st : script.statements) {
    switch (st.kind) {
      case Statement::Kind::Call:
        block.actions.push_back(st.action);
        break;
      case Statement::Kind::Loop:
        for (int i = 0; i < st.loop_count; ++i) {
          block.actions.insert(block.actions.end(), st.body.begin(), st.body.end());
        }
        break;
      case Statement::Kind::Comment:
        block.comments.push_back(st.comment);
        break;
    }
  }
  if (block.actions.empty()) {
    throw Error("empty-block", "script expands to zero primitive actions");
  }
  return block;
}

namespace {

std::string quote_single(const std::string& value) {
  std::string out = "'";
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

std::string render_call(const Action& a) {
  switch (a.kind) {
    case ActionKind::Type: return "agent.type(" + quote_single(a.text) + ")";
    case ActionKind::ClickXpath: return "agent.click_xpath(" + quote_single(a.xpath) + ")";
    case ActionKind::Press: return "agent.press(" + quote_single(a.key) + ")";
    case ActionKind::ClickOption: return "agent.click_option(" + quote_single(a.xpath) + ")";
    case ActionKind::MoveMouse: return "agent.movemouse(" + quote_single(a.xpath) + ")";
    default:
      throw Error("invariant-violation", "action kind has no code-dialect rendering");
  }
}

}  // namespace

std::string render(const ActionScript& script) {
  std::string out = "```\n";
  for (const Statement& st : script.statements) {
    switch (st.kind) {
      case Statement::Kind::Call:
        out += render_call(st.action);
        out.push_back('\n');
        break;
      case Statement::Kind::Comment:
        out += "# " + st.comment + "\n";
        break;
      case Statement::Kind::Loop:
        out += "for _ in range(" + std::to_string(st.loop_count) + "):\n";
        for (const Action& a : st.body) {
          out += "    " + render_call(a) + "\n";
        }
        break;
    }
  }
  out += "```";
  return out;
}

namespace {

Action m2w_action_from_span(std::string_view span) {
  // span layout: OP [id] or OP [id] [value]
  std::size_t sp = span.find(' ');
  if (sp == std::string_view::npos) {
    throw Error("pattern-mismatch", "expected 'OP [id]' inside backticks, got '" +
                                        std::string(span) + "'");
  }
  std::string op(span.substr(0, sp));
  if (op != "CLICK" && op != "TYPE" && op != "SELECT") {
    throw Error("pattern-mismatch", "unknown operation '" + op + "'");
  }
  std::string_view rest = lstrip(span.substr(sp));
  if (rest.empty() || rest.front() != '[') {
    throw Error("pattern-mismatch", "expected '[id]' after the operation");
  }
  std::size_t id_close = rest.find(']');
  if (id_close == std::string_view::npos) {
    throw Error("pattern-mismatch", "unterminated '[id]'");
  }
  std::string_view id_text = rest.substr(1, id_close - 1);
  if (id_text.empty()) throw Error("non-integer-id", "empty element id");
  for (char c : id_text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw Error("non-integer-id", "element id '" + std::string(id_text) +
                                        "' is not a non-negative integer");
    }
  }
  long id = std::stol(std::string(id_text));

  std::string_view after = lstrip(rest.substr(id_close + 1));
  std::optional<std::string> value;
  if (!after.empty()) {
    if (after.front() != '[' || after.back() != ']') {
      throw Error("pattern-mismatch", "expected '[value]' after the id");
    }
    value = std::string(after.substr(1, after.size() - 2));
  }

  if (op == "CLICK") {
    if (value) throw Error("pattern-mismatch", "CLICK takes no value");
    return Action::click(id);
  }
  if (!value) throw Error("missing-value", op + " requires a '[value]'");
  if (op == "TYPE") return Action::type_by_id(id, *value);
  return Action::select_by_id(id, *value);
}

std::string_view first_backtick_span(std::string_view response) {
  std::size_t open = response.find('`');
  if (open == std::string_view::npos) {
    throw Error("pattern-mismatch", "response contains no backtick span");
  }
  std::size_t close = response.find('`', open + 1);
  if (close == std::string_view::npos) {
    throw Error("pattern-mismatch", "unterminated backtick span");
  }
  return response.substr(open + 1, close - open - 1);
}

}  // namespace

Action parse_m2w_action(std::string_view response) {
  return m2w_action_from_span(first_backtick_span(response));
}

ActionBlock parse_m2w_action_block(std::string_view response) {
  std::string_view span = first_backtick_span(response);
  ActionBlock block;
  block.actions.push_back(m2w_action_from_span(span));
  block.raw_text = "`" + std::string(span) + "`";
  return block;
}

std::string render_m2w_action(const Action& action) {
  switch (action.kind) {
    case ActionKind::Click:
      return "CLICK [" + std::to_string(action.element_id) + "]";
    case ActionKind::TypeById:
      return "TYPE [" + std::to_string(action.element_id) + "] [" + action.text + "]";
    case ActionKind::SelectById:
      return "SELECT [" + std::to_string(action.element_id) + "] [" + action.text + "]";
    default:
      throw Error("invariant-violation", "action kind has no id-dialect rendering");
  }
}

ValidationVerdict validate_against_state(const Action& action, const html::Document& doc) {
  ValidationVerdict verdict;
  switch (action.kind) {
    case ActionKind::Type:
    case ActionKind::Press:
      verdict.valid = true;
      return verdict;
    case ActionKind::ClickXpath:
    case ActionKind::ClickOption:
    case ActionKind::MoveMouse: {
      xpath::Expression expr;
      try {
        expr = xpath::Expression::parse(action.xpath);
      } catch (const Error& e) {
        verdict.reason = std::string("bad-xpath: ") + e.what();
        return verdict;
      }
      const html::Node* node = expr.first(doc.root());
      if (node == nullptr) {
        verdict.reason = "no-match";
        return verdict;
      }
      verdict.valid = true;
      verdict.target = node;  // first element in document order
      return verdict;
    }
    case ActionKind::Click:
    case ActionKind::TypeById:
    case ActionKind::SelectById: {
      const std::string wanted = std::to_string(action.element_id);
      for (const html::Node* n : doc.elements()) {
        const std::string* id = n->attr("id");
        if (id != nullptr && *id == wanted) {
          verdict.valid = true;
          verdict.target = n;
          return verdict;
        }
      }
      verdict.reason = "unknown-id";
      return verdict;
    }
  }
  verdict.reason = "unknown-action";
  return verdict;
}

ValidationVerdict validate_against_state(const Action& action, const RawState& state) {
  html::Document doc = html::Document::parse(state.html);
  ValidationVerdict verdict = validate_against_state(action, doc);
  verdict.target = nullptr;  // node would dangle once doc goes out of scope
  return verdict;
}

}  // namespace webtrail::actions
