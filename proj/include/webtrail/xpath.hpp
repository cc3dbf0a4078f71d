#pragma once

#include "webtrail/html.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webtrail::xpath {

/// The XPath subset used by the action dialect (see docs/action-grammar.md):
/// chains of descendant steps `//name` or `//*`, each with at most one
/// predicate of the form `[@attr='value']` or `[text()='value']`.
class Expression {
public:
  /// Throws Error("bad-xpath") on anything outside the subset.
  static Expression parse(std::string_view text);

  /// Matching elements in document order, without duplicates.
  std::vector<const html::Node*> select(const html::Node& root) const;

  /// First match in document order, or nullptr.
  const html::Node* first(const html::Node& root) const;

  const std::string& text() const { return text_; }

private:
  struct Predicate {
    enum class Kind { Attribute, Text };
    Kind kind = Kind::Attribute;
    std::string name;   // attribute name (Attribute only)
    std::string value;  // expected value
  };
  struct Step {
    std::string tag;  // "*" matches any element
    std::optional<Predicate> predicate;
  };

  std::string text_;
  std::vector<Step> steps_;
};

}  // namespace webtrail::xpath
