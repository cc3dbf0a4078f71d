#pragma once

#include "webtrail/chat.hpp"
#include "webtrail/model.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace webtrail::prompting {

enum class Mode { MiniWob, Mind2Web };

std::string to_string(Mode mode);
Mode mode_from_string(std::string_view s);

/// Versioned verbatim system text per mode. Both share the first line.
ChatMessage build_system_prompt(Mode mode);

/// One exemplar trajectory as role-tagged messages. MiniWob layout:
///   user      "Task: {description}\nTrajectory:"
///   user      "Observation:\n{obs}\nAction:"
///   assistant "```\n{raw_text}\n```"
/// Mind2Web layout:
///   user      "Task: {description}\nTrajectory:"
///   user      "Observation: `{obs}`"
///   assistant "Action: {raw_text}"
/// Errors: "unsuccessful-trajectory".
std::vector<ChatMessage> serialize_exemplar(const Trajectory& trajectory, Mode mode = Mode::MiniWob);

/// A trajectory being built during an episode: closed steps plus at most one
/// observation awaiting its action.
class TrajectoryInProgress {
public:
  explicit TrajectoryInProgress(TaskSpec task) : task_(std::move(task)) {}

  const TaskSpec& task() const { return task_; }
  const std::vector<Step>& closed_steps() const { return closed_; }
  bool has_pending() const { return pending_.has_value(); }
  const Observation& pending() const;

  /// Errors: "pending-already-open".
  void open(Observation observation);
  /// Errors: "no-pending-observation".
  void close(ActionBlock block);

  Trajectory finish(Outcome outcome) const;

private:
  TaskSpec task_;
  std::vector<Step> closed_;
  std::optional<Observation> pending_;
};

/// Closes the pending step with `block` and opens a new pending step with
/// `next_observation`. Errors: "no-pending-observation".
TrajectoryInProgress& append_step(TrajectoryInProgress& current, ActionBlock block,
                                  Observation next_observation);

struct PromptBundle {
  std::vector<ChatMessage> messages;
  std::vector<std::string> stop_tokens;
  std::size_t token_estimate = 0;
  std::vector<std::string> truncation_log;  // dropped exemplar task ids
};

/// Pluggable token estimator; the default heuristic is ceil(chars / 4).
using TokenEstimator = std::function<std::size_t(std::string_view)>;

std::size_t heuristic_token_estimate(std::string_view text);

/// Stop tokens for TaE completions: the observation delimiter and the
/// transcript role marker.
std::vector<std::string> default_stop_tokens();

/// System + exemplars (retrieval order) + current trajectory ending with the
/// pending "Observation:...\nAction:" user turn. When the estimate exceeds
/// the budget, whole exemplars are dropped farthest-first (list tail) and
/// logged; the current trajectory is never truncated.
/// Errors: "over-budget-even-empty", "no-pending-observation",
/// "unsuccessful-trajectory".
PromptBundle build_episode_prompt(const ChatMessage& system,
                                  std::span<const Trajectory> exemplars,
                                  const TrajectoryInProgress& current, std::size_t budget,
                                  Mode mode = Mode::MiniWob,
                                  const TokenEstimator& estimator = nullptr);

/// The current trajectory's message segment (without system or exemplars).
std::vector<ChatMessage> serialize_current(const TrajectoryInProgress& current, Mode mode);

}  // namespace webtrail::prompting
