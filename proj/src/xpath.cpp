#include "webtrail/xpath.hpp"

#include "webtrail/error.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace webtrail::xpath {

namespace {

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

[[noreturn]] void fail(std::string_view text, const std::string& why) {
  throw Error("bad-xpath", why + " in '" + std::string(text) + "'");
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression expr;
  expr.text_ = std::string(text);
  std::size_t pos = 0;
  if (text.empty()) fail(text, "empty expression");
  while (pos < text.size()) {
    if (text.compare(pos, 2, "//") != 0) {
      fail(text, "expected '//' step");
    }
    pos += 2;
    Step step;
    if (pos < text.size() && text[pos] == '*') {
      step.tag = "*";
      ++pos;
    } else {
      std::size_t start = pos;
      while (pos < text.size() && is_name_char(text[pos])) ++pos;
      if (pos == start) fail(text, "expected element name or '*'");
      step.tag = std::string(text.substr(start, pos - start));
      std::transform(step.tag.begin(), step.tag.end(), step.tag.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    if (pos < text.size() && text[pos] == '[') {
      ++pos;
      Predicate pred;
      if (text.compare(pos, 7, "text()=") == 0) {
        pred.kind = Predicate::Kind::Text;
        pos += 7;
      } else if (pos < text.size() && text[pos] == '@') {
        ++pos;
        std::size_t start = pos;
        while (pos < text.size() && is_name_char(text[pos])) ++pos;
        if (pos == start) fail(text, "expected attribute name");
        pred.kind = Predicate::Kind::Attribute;
        pred.name = std::string(text.substr(start, pos - start));
        if (pos >= text.size() || text[pos] != '=') fail(text, "expected '=' after attribute");
        ++pos;
      } else {
        fail(text, "unsupported predicate");
      }
      if (pos >= text.size() || (text[pos] != '\'' && text[pos] != '"')) {
        fail(text, "expected quoted value");
      }
      char quote = text[pos++];
      std::size_t vstart = pos;
      while (pos < text.size() && text[pos] != quote) ++pos;
      if (pos >= text.size()) fail(text, "unterminated string");
      pred.value = std::string(text.substr(vstart, pos - vstart));
      ++pos;
      if (pos >= text.size() || text[pos] != ']') fail(text, "expected ']'");
      ++pos;
      step.predicate = std::move(pred);
    }
    expr.steps_.push_back(std::move(step));
  }
  if (expr.steps_.empty()) fail(text, "no steps");
  return expr;
}

std::vector<const html::Node*> Expression::select(const html::Node& root) const {
  std::vector<const html::Node*> context = {&root};
  for (const Step& step : steps_) {
    std::vector<const html::Node*> next;
    auto matches = [&](const html::Node& n) {
      if (!n.is_element() || n.tag == "#document") return false;
      if (step.tag != "*" && n.tag != step.tag) return false;
      if (step.predicate) {
        const Predicate& p = *step.predicate;
        if (p.kind == Predicate::Kind::Attribute) {
          const std::string* v = n.attr(p.name);
          if (v == nullptr || *v != p.value) return false;
        } else {
          // any direct text child whose normalized content equals the value
          bool found = false;
          for (const auto& child : n.children) {
            if (child->kind == html::Node::Kind::Text &&
                html::normalize_whitespace(child->text) == p.value) {
              found = true;
              break;
            }
          }
          if (!found) return false;
        }
      }
      return true;
    };
    for (const html::Node* ctx : context) {
      std::function<void(const html::Node&)> walk = [&](const html::Node& n) {
        for (const auto& child : n.children) {
          if (child->is_element() && matches(*child)) next.push_back(child.get());
          walk(*child);
        }
      };
      walk(*ctx);
    }
    // document order + dedupe (contexts may overlap)
    std::sort(next.begin(), next.end(), [](const html::Node* a, const html::Node* b) {
      return a->doc_order < b->doc_order;
    });
    next.erase(std::unique(next.begin(), next.end()), next.end());
    context = std::move(next);
    if (context.empty()) break;
  }
  return context;
}

const html::Node* Expression::first(const html::Node& root) const {
  auto all = select(root);
  return all.empty() ? nullptr : all.front();
}

}  // namespace webtrail::xpath
