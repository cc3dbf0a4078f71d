#include "webtrail/html.hpp"

#include "webtrail/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>

namespace webtrail::html {

namespace {

bool is_void_element(std::string_view tag) {
  static constexpr std::array<std::string_view, 14> kVoid = {
      "area", "base", "br",    "col",  "embed",  "hr",    "img",
      "input", "link", "meta", "param", "source", "track", "wbr"};
  return std::find(kVoid.begin(), kVoid.end(), tag) != kVoid.end();
}

bool is_rawtext_element(std::string_view tag) { return tag == "script" || tag == "style"; }

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(text[i++]);
      continue;
    }
    std::string_view name = text.substr(i + 1, semi - i - 1);
    if (name == "amp") out.push_back('&');
    else if (name == "lt") out.push_back('<');
    else if (name == "gt") out.push_back('>');
    else if (name == "quot") out.push_back('"');
    else if (name == "apos") out.push_back('\'');
    else if (name == "nbsp") out.push_back(' ');
    else if (!name.empty() && name[0] == '#') {
      long code = 0;
      bool ok = name.size() > 1;
      std::size_t p = 1;
      int base = 10;
      if (name.size() > 2 && (name[1] == 'x' || name[1] == 'X')) {
        base = 16;
        p = 2;
        ok = name.size() > 2;
      }
      for (; p < name.size() && ok; ++p) {
        char c = name[p];
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (base == 16 && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else { ok = false; break; }
        code = code * base + digit;
        if (code > 0x10FFFF) { ok = false; break; }
      }
      if (!ok || code == 0) {
        out.push_back(text[i++]);
        continue;
      }
      // UTF-8 encode
      unsigned long cp = static_cast<unsigned long>(code);
      if (cp < 0x80) out.push_back(static_cast<char>(cp));
      else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      }
    } else {
      out.push_back(text[i++]);
      continue;
    }
    i = semi + 1;
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = true;  // trim leading
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

const std::string* Node::attr(std::string_view name) const {
  for (const auto& [k, v] : attrs) {
    if (k == name) return &v;
  }
  return nullptr;
}

// Text nodes are concatenated verbatim: the source document's own whitespace
// decides word boundaries, so tight inline spans stay tight ("extension
// <span>.gpg</span>" reads "extension .gpg", not "extension . gpg").
std::string Node::text_content() const {
  std::string raw;
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.kind == Kind::Text) raw += n.text;
    for (const auto& child : n.children) walk(*child);
  };
  walk(*this);
  return normalize_whitespace(raw);
}

std::string Node::own_text() const {
  std::string raw;
  for (const auto& child : children) {
    if (child->kind == Kind::Text) raw += child->text;
  }
  return normalize_whitespace(raw);
}

namespace {

struct Parser {
  std::string_view input;
  std::size_t pos = 0;
  int next_order = 0;

  bool eof() const { return pos >= input.size(); }
  char peek() const { return input[pos]; }

  void parse_into(Node* parent) {
    std::vector<Node*> stack = {parent};
    while (!eof()) {
      Node* top = stack.back();
      if (peek() == '<') {
        if (input.compare(pos, 4, "<!--") == 0) {
          std::size_t end = input.find("-->", pos + 4);
          pos = (end == std::string_view::npos) ? input.size() : end + 3;
          continue;
        }
        if (pos + 1 < input.size() && (input[pos + 1] == '!' || input[pos + 1] == '?')) {
          std::size_t end = input.find('>', pos);
          pos = (end == std::string_view::npos) ? input.size() : end + 1;
          continue;
        }
        if (pos + 1 < input.size() && input[pos + 1] == '/') {
          std::string tag = parse_close_tag();
          // pop to the matching open element; ignore a stray close tag
          for (std::size_t i = stack.size(); i-- > 1;) {
            if (stack[i]->tag == tag) {
              stack.resize(i);
              break;
            }
          }
          continue;
        }
        if (pos + 1 < input.size() &&
            (std::isalpha(static_cast<unsigned char>(input[pos + 1])))) {
          bool self_closed = false;
          Node* element = parse_open_tag(top, self_closed);
          if (element == nullptr) continue;
          if (!self_closed && !is_void_element(element->tag)) {
            if (is_rawtext_element(element->tag)) {
              consume_rawtext(element);
            } else {
              stack.push_back(element);
            }
          }
          continue;
        }
        // lone '<' that opens nothing: literal text
        append_text(top, "<");
        ++pos;
        continue;
      }
      std::size_t next = input.find('<', pos);
      if (next == std::string_view::npos) next = input.size();
      append_text(top, input.substr(pos, next - pos));
      pos = next;
    }
  }

  void append_text(Node* parent, std::string_view raw) {
    if (raw.empty()) return;
    auto node = std::make_unique<Node>();
    node->kind = Node::Kind::Text;
    node->text = decode_entities(raw);
    node->parent = parent;
    node->doc_order = next_order++;
    parent->children.push_back(std::move(node));
  }

  std::string parse_close_tag() {
    pos += 2;  // "</"
    std::size_t start = pos;
    while (!eof() && is_name_char(peek())) ++pos;
    std::string tag = to_lower(input.substr(start, pos - start));
    std::size_t end = input.find('>', pos);
    pos = (end == std::string_view::npos) ? input.size() : end + 1;
    return tag;
  }

  Node* parse_open_tag(Node* parent, bool& self_closed) {
    ++pos;  // '<'
    std::size_t start = pos;
    while (!eof() && is_name_char(peek())) ++pos;
    auto node = std::make_unique<Node>();
    node->tag = to_lower(input.substr(start, pos - start));
    node->parent = parent;
    node->doc_order = next_order++;

    while (!eof()) {
      while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos;
      if (eof()) break;
      if (peek() == '>') {
        ++pos;
        break;
      }
      if (peek() == '/') {
        ++pos;
        if (!eof() && peek() == '>') {
          ++pos;
          self_closed = true;
          break;
        }
        continue;  // stray slash
      }
      // attribute
      std::size_t name_start = pos;
      while (!eof() && is_name_char(peek())) ++pos;
      if (pos == name_start) {
        ++pos;  // unparseable char inside tag, skip it
        continue;
      }
      std::string name = to_lower(input.substr(name_start, pos - name_start));
      std::string value;
      while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos;
      if (!eof() && peek() == '=') {
        ++pos;
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos;
        if (!eof() && (peek() == '"' || peek() == '\'')) {
          char quote = peek();
          ++pos;
          std::size_t vstart = pos;
          while (!eof() && peek() != quote) ++pos;
          value = decode_entities(input.substr(vstart, pos - vstart));
          if (!eof()) ++pos;
        } else {
          std::size_t vstart = pos;
          while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != '>' &&
                 peek() != '/') {
            ++pos;
          }
          value = decode_entities(input.substr(vstart, pos - vstart));
        }
      }
      node->attrs.emplace_back(std::move(name), std::move(value));
    }

    Node* raw = node.get();
    parent->children.push_back(std::move(node));
    return raw;
  }

  void consume_rawtext(Node* element) {
    std::string close = "</" + element->tag;
    std::size_t end = pos;
    while (true) {
      end = input.find(close, end);
      if (end == std::string_view::npos) {
        end = input.size();
        break;
      }
      std::size_t after = end + close.size();
      if (after >= input.size() || input[after] == '>' ||
          std::isspace(static_cast<unsigned char>(input[after]))) {
        break;
      }
      ++end;
    }
    append_text(element, input.substr(pos, end - pos));
    if (end == input.size()) {
      pos = end;
    } else {
      std::size_t gt = input.find('>', end);
      pos = (gt == std::string_view::npos) ? input.size() : gt + 1;
    }
  }
};

}  // namespace

Document Document::parse(std::string_view html) {
  Document doc;
  doc.root_ = std::make_unique<Node>();
  doc.root_->tag = "#document";
  doc.root_->doc_order = -1;
  Parser parser{html};
  parser.next_order = 0;
  parser.parse_into(doc.root_.get());
  if (doc.elements().empty()) {
    throw Error("parse-failure", "no HTML elements found in input");
  }
  return doc;
}

std::vector<const Node*> Document::elements() const {
  std::vector<const Node*> out;
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.is_element() && n.tag != "#document") out.push_back(&n);
    for (const auto& child : n.children) walk(*child);
  };
  walk(*root_);
  return out;
}

}  // namespace webtrail::html
