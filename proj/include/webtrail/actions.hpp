#pragma once

#include "webtrail/html.hpp"
#include "webtrail/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace webtrail::actions {

/// One statement in the code action dialect: a single agent call, a literal
/// counted loop over calls, or a comment line.
struct Statement {
  enum class Kind { Call, Loop, Comment };

  Kind kind = Kind::Call;
  Action action;              // Call
  int loop_count = 0;         // Loop
  std::vector<Action> body;   // Loop
  std::string comment;        // Comment (leading '#' stripped)

  bool operator==(const Statement&) const = default;
};

struct ActionScript {
  std::vector<Statement> statements;
  std::string fence_text;  // verbatim inner text of the parsed code fence

  bool operator==(const ActionScript& other) const { return statements == other.statements; }
};

/// Parses the first triple-backtick fence of an LLM response under the code
/// action grammar (docs/action-grammar.md). Errors carry 1-based line numbers
/// relative to the full response: "no-fence", "unknown-method",
/// "malformed-literal", "unsupported-construct", "invalid-argument".
ActionScript parse_code_actions(std::string_view response);

/// Unrolls loops and collects comments. Throws Error("empty-block") when the
/// script contains no calls.
ActionBlock expand(const ActionScript& script);

/// Canonical code rendering (single-quoted literals, 4-space loop bodies).
/// parse(render(s)) == s for any valid script, modulo comment whitespace.
std::string render(const ActionScript& script);

/// Parses a Mind2Web-style response: the first `...` span matching
/// `OP [id]` or `OP [id] [value]` with OP in {CLICK, TYPE, SELECT}. Trailing
/// rationale outside the backticks is ignored. Errors: "pattern-mismatch",
/// "non-integer-id", "missing-value".
Action parse_m2w_action(std::string_view response);

/// parse_m2w_action plus the verbatim backtick span as ActionBlock.raw_text.
ActionBlock parse_m2w_action_block(std::string_view response);

/// Renders an id-dialect action back to its `OP [id]`/`OP [id] [value]` form.
std::string render_m2w_action(const Action& action);

struct ValidationVerdict {
  bool valid = false;
  std::string reason;                    // set when invalid
  const html::Node* target = nullptr;    // first matching node when relevant
};

/// Checks an action against a parsed state. Never throws on malformed
/// targets; the verdict carries the failure reason instead.
ValidationVerdict validate_against_state(const Action& action, const html::Document& doc);
ValidationVerdict validate_against_state(const Action& action, const RawState& state);

}  // namespace webtrail::actions
