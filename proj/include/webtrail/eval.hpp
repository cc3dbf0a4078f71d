#pragma once

#include "webtrail/abstraction.hpp"
#include "webtrail/env.hpp"
#include "webtrail/llm.hpp"
#include "webtrail/memory.hpp"
#include "webtrail/model.hpp"
#include "webtrail/prompting.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace webtrail::eval {

struct AgentConfig {
  prompting::Mode mode = prompting::Mode::MiniWob;
  std::size_t token_budget = 16384;
  std::size_t observation_budget = 8000;
  std::size_t max_output_tokens = 512;
  std::string model_id;
  int max_steps = 10;
  std::size_t retrieve_n = 3;
  // states longer than this route to implicit abstraction when available
  std::size_t explicit_state_limit = 3000;
  std::size_t k_prev = 3;  // top-k for history observations (Mind2Web)
  std::size_t k_cur = 5;   // top-k for the current observation (Mind2Web)
  bool strict_values = false;  // exact value matching instead of trim+casefold
};

struct EpisodeResult {
  std::string task_id;
  bool success = false;
  int steps_taken = 0;
  int llm_calls = 0;  // action completions (abstraction calls counted apart)
  int abstraction_calls = 0;
  int fallback_calls = 0;
  Trajectory trajectory;
  std::optional<std::string> failure_reason;
};

/// Closed-loop episode: retrieve exemplars by majority vote, then iterate
/// abstract -> prompt -> complete -> parse -> execute until the environment
/// succeeds, a parse fails, or max_steps runs out.
EpisodeResult run_episode(env::Environment& environment, const AgentConfig& config,
                          const memory::MemoryIndex& memory, llm::Backend& backend, long seed);

// ------------------------------------------------------------------ metrics

/// Fraction of steps whose predicted element id equals the gold id.
/// Errors: "length-mismatch".
double element_accuracy(std::span<const long> predictions, std::span<const long> golds);

struct StepAction {
  long element_id = -1;
  ActionKind op = ActionKind::Click;  // Click, TypeById or SelectById
  std::string value;
};

/// Element, operation and (for TYPE/SELECT) value must all match; values are
/// compared after trimming and ASCII case-folding unless strict.
bool step_correct(const StepAction& predicted, const StepAction& gold, bool strict_values = false);

/// Micro-averaged fraction of correct steps. Errors: "length-mismatch".
double step_success_rate(std::span<const StepAction> predictions,
                         std::span<const StepAction> golds, bool strict_values = false);

/// Fraction of tasks whose every step verdict is true.
/// Errors: "empty-task" when a task has no verdicts.
double task_success_rate(std::span<const std::vector<bool>> per_task_verdicts);

// -------------------------------------------------------------- static eval

struct StaticStep {
  std::vector<abstraction::RankedElement> ranking;
  StepAction gold;
};

struct StaticRecord {
  TaskSpec task;
  std::string split;  // "cross-task", "cross-website" or "cross-domain"
  std::vector<StaticStep> steps;
};

std::string serialize_static_record(const StaticRecord& record);
StaticRecord deserialize_static_record(std::string_view line);
std::vector<StaticRecord> load_static_dataset(const std::filesystem::path& path);
void save_static_dataset(std::span<const StaticRecord> records,
                         const std::filesystem::path& path);

struct SplitStats {
  std::size_t tasks = 0;
  std::size_t steps = 0;
  double ele_acc = 0.0;
  double step_sr = 0.0;
  double sr = 0.0;
  double mean_top1_distance = 0.0;
};

struct EvalReport {
  double ele_acc = 0.0;
  double step_sr = 0.0;
  double sr = 0.0;
  std::map<int, double> recall_at_k;
  double mean_top1_retrieval_distance = 0.0;
  std::map<std::string, SplitStats> splits;

  std::string to_json() const;  // canonical bytes (sorted keys, compact)
  static EvalReport from_json(std::string_view text);
  std::string to_table() const;  // human-readable, Ele. Acc / Step SR / SR per split
};

/// Default report ks for recall@k.
const std::vector<int>& default_recall_ks();

/// Exemplars of the retrieved entries in retrieval order, deduplicated.
std::vector<Trajectory> exemplars_from_retrieval(
    std::span<const memory::RetrievalResult> retrieved);

/// The exact prompt evaluate_static issues for one step of a record: gold
/// history at k_prev, current observation at k_cur, Mind2Web layout.
prompting::PromptBundle build_static_step_prompt(const StaticRecord& record,
                                                 std::size_t step_index,
                                                 std::span<const Trajectory> exemplars,
                                                 const AgentConfig& config);

/// One completion per step over gold history, parsed with the id dialect and
/// scored against the ground truth; aggregates metrics and per-split stats.
/// Errors: "empty-dataset", "split-leakage" (a test metadata string equals a
/// memory key), plus anything the backend raises.
EvalReport evaluate_static(std::span<const StaticRecord> dataset, const AgentConfig& config,
                           const memory::MemoryIndex& memory, llm::Backend& backend,
                           int workers = 1);

}  // namespace webtrail::eval
