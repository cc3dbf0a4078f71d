#pragma once

#include "webtrail/html.hpp"
#include "webtrail/model.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace webtrail::program {

/// A parsed program in the state-parsing dialect (docs/abstraction-dialect.md).
/// Line-oriented: assignments, `for <name> in <expr> ... end` loops over node
/// lists, `if <cond> ... [else ...] end`, and expressions over strings,
/// numbers, booleans, DOM nodes and node lists. The final value of `obs`
/// becomes the observation.
class Program {
public:
  enum class Origin { Memory, LlmGenerated };

  /// Throws Error("dialect-parse-error") with a 1-based line number.
  static Program parse(std::string_view source, Origin origin = Origin::Memory);

  /// Runs against the bindings `task` (string) and `state` (document root).
  /// Deterministic and side-effect free; execution cost is bounded by
  /// `step_limit`. Throws Error("runtime-error") on any evaluation failure.
  std::string execute(const TaskSpec& task, const html::Document& state,
                      std::size_t step_limit = 100000) const;

  Origin origin() const { return origin_; }
  const std::string& source() const { return source_; }

  Program();
  Program(Program&&) noexcept;
  Program& operator=(Program&&) noexcept;
  ~Program();

private:
  struct Impl;
  std::string source_;
  Origin origin_ = Origin::Memory;
  std::unique_ptr<Impl> impl_;
};

/// Extracts the first triple-backtick fenced block of an LLM completion.
/// Throws Error("no-code-block") when there is none.
std::string extract_code_block(std::string_view completion);

}  // namespace webtrail::program
