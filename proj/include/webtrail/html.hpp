#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace webtrail::html {

/// One DOM node: an element with attributes and children, or a text node.
struct Node {
  enum class Kind { Element, Text };

  Kind kind = Kind::Element;
  std::string tag;  // lowercased; empty for text nodes
  std::vector<std::pair<std::string, std::string>> attrs;  // document order
  std::string text;  // text nodes only
  std::vector<std::unique_ptr<Node>> children;
  Node* parent = nullptr;
  int doc_order = 0;  // pre-order index over the whole document

  bool is_element() const { return kind == Kind::Element; }

  /// First value of the named attribute, or nullptr.
  const std::string* attr(std::string_view name) const;

  /// Whitespace-normalized concatenation of all descendant text.
  std::string text_content() const;

  /// Whitespace-normalized concatenation of direct child text nodes only.
  std::string own_text() const;
};

/// Error-recovering HTML document. Unknown constructs are skipped, unclosed
/// tags are closed at end of input, and stray close tags are ignored.
class Document {
public:
  /// Throws Error("parse-failure") only when no element at all can be found.
  static Document parse(std::string_view html);

  const Node& root() const { return *root_; }

  /// All element nodes in document (pre-order) order.
  std::vector<const Node*> elements() const;

private:
  std::unique_ptr<Node> root_;  // synthetic document node (tag "#document")
};

/// Decodes the common named entities plus numeric character references.
std::string decode_entities(std::string_view text);

/// Collapses whitespace runs to single spaces and trims the ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace webtrail::html
