#pragma once

#include "webtrail/html.hpp"
#include "webtrail/llm.hpp"
#include "webtrail/model.hpp"
#include "webtrail/program.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace webtrail::abstraction {

enum class PromptMode { Explicit, Implicit };

std::string to_string(PromptMode mode);
PromptMode prompt_mode_from_string(std::string_view s);

/// Few-shot state-abstraction prompt: explicit (state, observation) pairs or
/// implicit (task, program) pairs in the state-parsing dialect.
struct AbstractionPrompt {
  PromptMode mode = PromptMode::Explicit;
  std::vector<std::pair<RawState, Observation>> explicit_pairs;
  std::vector<std::pair<std::string, std::string>> implicit_pairs;  // (task, program source)
  std::string instruction_preamble;

  bool operator==(const AbstractionPrompt&) const = default;
};

/// Serialization used by memory persistence and demo packs.
std::string abstraction_prompt_to_json(const AbstractionPrompt& prompt);
AbstractionPrompt abstraction_prompt_from_json_text(std::string_view text);

struct Config {
  std::size_t observation_budget = 8000;  // characters (code points)
  std::size_t token_budget = 16384;       // prompt estimate limit for LLM calls
  std::size_t max_output_tokens = 512;
  std::string model_id;
  std::size_t program_step_limit = 100000;
};

/// Versioned zero-shot fallback template; {task} and {state} are substituted.
extern const char* const kZeroShotFallbackTemplate;

std::string render_zero_shot_fallback(const TaskSpec& task, const RawState& state);

/// Builds the explicit few-shot prompt text: "State:/Observation:" pairs
/// ending with the current state and an empty observation slot.
std::string render_explicit_prompt(const AbstractionPrompt& prompt, const RawState& state);

/// Builds the implicit program-generation prompt text for a task.
std::string render_generation_prompt(const AbstractionPrompt& prompt, const TaskSpec& task);

/// Explicit abstraction: LLM completion over the few-shot pairs.
/// Errors: precondition violations, "over-budget", and LLM failures.
Observation abstract_explicit(const AbstractionPrompt& prompt, const RawState& state,
                              llm::Backend& backend, const Config& config = {});

/// Asks the LLM for a state-parsing program and parses its first code block.
/// Errors: "no-code-block", "dialect-parse-error" (callers fall back).
program::Program generate_program(const AbstractionPrompt& prompt, const TaskSpec& task,
                                  llm::Backend& backend, const Config& config = {});

/// Runs a parsed program with the task/state bindings.
Observation execute_program(const program::Program& prog, const TaskSpec& task,
                            const RawState& state, const Config& config = {});

struct ImplicitOutcome {
  Observation observation;
  bool used_fallback = false;
  bool generated = false;  // a generation call was made
};

/// Implicit abstraction: memory programs first, then generation + execution,
/// then the zero-shot fallback. Program errors never escape; only LLM
/// transport failures propagate.
ImplicitOutcome abstract_implicit(const AbstractionPrompt& prompt, const TaskSpec& task,
                                  const RawState& state, llm::Backend& backend,
                                  const Config& config = {});

/// Raw state as observation (budget-truncated).
Observation raw_passthrough(const RawState& state, const Config& config = {});

/// A candidate element produced by a ranking model.
struct RankedElement {
  long element_id = 0;
  double score = 0.0;
  std::string snippet;

  bool operator==(const RankedElement&) const = default;
};

/// Top-k snippets (score descending, ties by element_id ascending) inside a
/// minimal html wrapper. k larger than the ranking returns everything.
Observation filter_topk(std::span<const RankedElement> ranking, std::size_t k,
                        const Config& config = {});

/// Ids that survive filter_topk at k, in filter order.
std::vector<long> topk_ids(std::span<const RankedElement> ranking, std::size_t k);

struct RecallRecord {
  std::vector<RankedElement> ranking;
  long target_element_id = 0;
};

/// Fraction of records whose target appears among the top-k ids.
double recall_at_k(std::span<const RecallRecord> dataset, std::size_t k);

/// Deterministic lexical stand-in for a pretrained element ranker: weighted
/// term overlap between element text/attributes/tag and the task tokens.
/// Weights: text 2.0, attribute value 1.0, tag name 0.5 per distinct task
/// token. Ties keep document order.
std::vector<RankedElement> reference_rank(const RawState& state, const TaskSpec& task);

/// The m2w-flavored snippet form used by reference_rank.
std::string element_snippet(const html::Node& node, long element_id);

std::vector<std::string> tokenize_lower(std::string_view text);

}  // namespace webtrail::abstraction
