#include "webtrail/prompting.hpp"

#include "webtrail/error.hpp"

namespace webtrail::prompting {

std::string to_string(Mode mode) { return mode == Mode::MiniWob ? "miniwob" : "mind2web"; }

Mode mode_from_string(std::string_view s) {
  if (s == "miniwob") return Mode::MiniWob;
  if (s == "mind2web") return Mode::Mind2Web;
  throw Error("invariant-violation", "prompt mode: unknown value '" + std::string(s) + "'");
}

namespace {

const char* const kMiniWobSystemPrompt =
    "You are a large language model trained to navigate the web.\n"
    "To accomplish the task, use methods in the following Agent class to generate actions "
    "until you need the new state to proceed.\n"
    "```\n"
    "class Agent:\n"
    "    def __init__(self, args):\n"
    "        ...\n"
    "\n"
    "    # Action: type a string via the keyboard\n"
    "    def type(self, characters: str) -> None:\n"
    "        ...\n"
    "\n"
    "    # Action: click an HTML element with a valid xpath\n"
    "    def click_xpath(self, xpath: str):\n"
    "        ...\n"
    "\n"
    "    # Actions: press a key on the keyboard, including:\n"
    "    # enter, space, arrowleft, arrowright, backspace, arrowup, arrowdown, "
    "command+a, command+c, command+v\n"
    "    def press(self, key_type: str) -> None:\n"
    "        ...\n"
    "\n"
    "    # Action: click an option HTML element in a list with a valid xpath\n"
    "    def click_option(self, xpath: str):\n"
    "        ...\n"
    "\n"
    "    # Action: move mouse cursor on an HTML element with a valid xpath\n"
    "    def movemouse(self, xpath: str):\n"
    "        ...\n"
    "```";

const char* const kMind2WebSystemPrompt =
    "You are a large language model trained to navigate the web.\n"
    "Output the next action and wait for the next observation. Here is the action space:\n"
    "1. `CLICK [id]`: Click on an HTML element with its id.\n"
    "2. `TYPE [id] [value]`: Type a string into the element with the id.\n"
    "3. `SELECT [id] [value]`: Select a value for an HTML element by its id.";

ChatMessage task_message(const TaskSpec& task) {
  return user_message("Task: " + task.description + "\nTrajectory:");
}

ChatMessage observation_message(const Observation& observation, Mode mode, bool pending) {
  if (mode == Mode::MiniWob) {
    return user_message("Observation:\n" + observation.text + "\nAction:");
  }
  // Mind2Web: the model answers with its own "Action: ..." turn
  (void)pending;
  return user_message("Observation: `" + observation.text + "`");
}

ChatMessage action_message(const ActionBlock& block, Mode mode) {
  if (mode == Mode::MiniWob) {
    return assistant_message("```\n" + block.raw_text + "\n```");
  }
  return assistant_message("Action: " + block.raw_text);
}

}  // namespace

ChatMessage build_system_prompt(Mode mode) {
  return system_message(mode == Mode::MiniWob ? kMiniWobSystemPrompt : kMind2WebSystemPrompt);
}

std::vector<ChatMessage> serialize_exemplar(const Trajectory& trajectory, Mode mode) {
  if (trajectory.outcome != Outcome::Success) {
    throw Error("unsuccessful-trajectory",
                "exemplar '" + trajectory.task.id + "' has outcome " +
                    to_string(trajectory.outcome));
  }
  std::vector<ChatMessage> messages;
  messages.push_back(task_message(trajectory.task));
  for (const Step& step : trajectory.steps) {
    messages.push_back(observation_message(step.observation, mode, false));
    messages.push_back(action_message(step.action_block, mode));
  }
  return messages;
}

const Observation& TrajectoryInProgress::pending() const {
  if (!pending_) throw Error("no-pending-observation", "no observation is awaiting an action");
  return *pending_;
}

void TrajectoryInProgress::open(Observation observation) {
  if (pending_) {
    throw Error("pending-already-open", "an observation is already awaiting an action");
  }
  pending_ = std::move(observation);
}

void TrajectoryInProgress::close(ActionBlock block) {
  if (!pending_) throw Error("no-pending-observation", "no observation is awaiting an action");
  closed_.push_back(Step{std::move(*pending_), std::move(block)});
  pending_.reset();
}

Trajectory TrajectoryInProgress::finish(Outcome outcome) const {
  Trajectory t;
  t.task = task_;
  t.steps = closed_;
  t.outcome = outcome;
  return t;
}

TrajectoryInProgress& append_step(TrajectoryInProgress& current, ActionBlock block,
                                  Observation next_observation) {
  current.close(std::move(block));
  current.open(std::move(next_observation));
  return current;
}

std::size_t heuristic_token_estimate(std::string_view text) { return (text.size() + 3) / 4; }

std::vector<std::string> default_stop_tokens() { return {"Observation:", "> Role: User"}; }

std::vector<ChatMessage> serialize_current(const TrajectoryInProgress& current, Mode mode) {
  std::vector<ChatMessage> messages;
  messages.push_back(task_message(current.task()));
  for (const Step& step : current.closed_steps()) {
    messages.push_back(observation_message(step.observation, mode, false));
    messages.push_back(action_message(step.action_block, mode));
  }
  messages.push_back(observation_message(current.pending(), mode, true));
  return messages;
}

PromptBundle build_episode_prompt(const ChatMessage& system,
                                  std::span<const Trajectory> exemplars,
                                  const TrajectoryInProgress& current, std::size_t budget,
                                  Mode mode, const TokenEstimator& estimator) {
  if (!current.has_pending()) {
    throw Error("no-pending-observation", "current trajectory is not awaiting an action");
  }
  auto estimate = [&](std::string_view text) {
    return estimator ? estimator(text) : heuristic_token_estimate(text);
  };

  std::vector<std::vector<ChatMessage>> exemplar_messages;
  exemplar_messages.reserve(exemplars.size());
  for (const Trajectory& exemplar : exemplars) {
    exemplar_messages.push_back(serialize_exemplar(exemplar, mode));
  }
  std::vector<ChatMessage> current_messages = serialize_current(current, mode);

  auto segment_estimate = [&](std::span<const ChatMessage> messages) {
    std::size_t total = 0;
    for (const ChatMessage& m : messages) total += estimate(m.content);
    return total;
  };

  std::size_t fixed = estimate(system.content) + segment_estimate(current_messages);
  if (fixed > budget) {
    throw Error("over-budget-even-empty",
                "system and current trajectory alone need " + std::to_string(fixed) +
                    " tokens against a budget of " + std::to_string(budget));
  }

  PromptBundle bundle;
  std::size_t keep = exemplar_messages.size();
  std::size_t total = fixed;
  for (std::size_t i = 0; i < exemplar_messages.size(); ++i) {
    total += segment_estimate(exemplar_messages[i]);
  }
  // drop whole exemplars from the far end (largest retrieval distance first)
  while (keep > 0 && total > budget) {
    --keep;
    total -= segment_estimate(exemplar_messages[keep]);
    bundle.truncation_log.push_back(exemplars[keep].task.id);
  }

  bundle.messages.push_back(system);
  for (std::size_t i = 0; i < keep; ++i) {
    bundle.messages.insert(bundle.messages.end(), exemplar_messages[i].begin(),
                           exemplar_messages[i].end());
  }
  bundle.messages.insert(bundle.messages.end(), current_messages.begin(), current_messages.end());
  bundle.stop_tokens = default_stop_tokens();
  bundle.token_estimate = total;
  return bundle;
}

}  // namespace webtrail::prompting
