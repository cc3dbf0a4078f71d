#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "webtrail/error.hpp"
#include "webtrail/prompting.hpp"

#include "support.hpp"

using namespace webtrail;
using namespace webtrail::prompting;

namespace {

std::vector<Trajectory> load_exemplars(const std::string& relative) {
  std::vector<Trajectory> out;
  for (const std::string& line :
       testsupport::read_lines(testsupport::fixture_dir() / relative)) {
    out.push_back(deserialize_trajectory(line));
  }
  return out;
}

Trajectory one_step_trajectory() {
  Trajectory t;
  t.task.id = "one";
  t.task.description = "single step task";
  Step step;
  step.observation = {"obs text", ObservationSource::Explicit, false};
  step.action_block.actions.push_back(Action::type("x"));
  step.action_block.raw_text = "agent.type('x')";
  t.steps.push_back(step);
  t.outcome = Outcome::Success;
  return t;
}

}  // namespace

TEST_CASE("system prompts embed their action catalogues and share the first line") {
  ChatMessage miniwob = build_system_prompt(Mode::MiniWob);
  CHECK(miniwob.role == Role::System);
  CHECK(miniwob.content.find("click_xpath") != std::string::npos);
  for (const char* method : {"def type", "def click_xpath", "def press", "def click_option",
                             "def movemouse"}) {
    CHECK(miniwob.content.find(method) != std::string::npos);
  }

  ChatMessage m2w = build_system_prompt(Mode::Mind2Web);
  CHECK(m2w.content.find("`CLICK [id]`") != std::string::npos);
  CHECK(m2w.content.find("`TYPE [id] [value]`") != std::string::npos);
  CHECK(m2w.content.find("`SELECT [id] [value]`") != std::string::npos);

  auto first_line = [](const std::string& text) { return text.substr(0, text.find('\n')); };
  CHECK(first_line(miniwob.content) == first_line(m2w.content));
  CHECK(first_line(miniwob.content).find("trained to navigate the web") != std::string::npos);
}

TEST_CASE("exemplar serialization matches the fixture layout") {
  auto exemplars = load_exemplars("trajectories/terminal_exemplars.jsonl");
  REQUIRE(exemplars.size() == 3);
  auto messages = serialize_exemplar(exemplars[0]);
  REQUIRE(messages.size() == 5);
  CHECK(messages[0].role == Role::User);
  CHECK(messages[0].content ==
        "Task: Use the terminal below to delete a file ending with the extension "
        ".png\nTrajectory:");
  CHECK(messages[1].content ==
        "Observation:\nUse the terminal below to delete a file ending with the extension "
        ".png\nAction:");
  CHECK(messages[2].role == Role::Assistant);
  CHECK(messages[2].content == "```\nagent.type('ls')\nagent.press('enter')\n```");
  CHECK(messages[4].content.find("agent.type('rm alloy.png')") != std::string::npos);
}

TEST_CASE("a single-step exemplar yields exactly three messages") {
  auto messages = serialize_exemplar(one_step_trajectory());
  REQUIRE(messages.size() == 3);
  CHECK(messages[0].role == Role::User);
  CHECK(messages[1].role == Role::User);
  CHECK(messages[2].role == Role::Assistant);
}

TEST_CASE("failed trajectories cannot be exemplars") {
  Trajectory failed = one_step_trajectory();
  failed.outcome = Outcome::Failure;
  try {
    serialize_exemplar(failed);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == "unsuccessful-trajectory");
  }
}

TEST_CASE("every assistant message in a serialized exemplar is one code fence") {
  for (const char* name :
       {"trajectories/terminal_exemplars.jsonl", "trajectories/book_flight_exemplars.jsonl"}) {
    for (const Trajectory& exemplar : load_exemplars(name)) {
      for (const ChatMessage& message : serialize_exemplar(exemplar)) {
        if (message.role != Role::Assistant) continue;
        CHECK(message.content.rfind("```\n", 0) == 0);
        CHECK(message.content.substr(message.content.size() - 4) == "\n```");
        // exactly one opening and one closing fence
        std::size_t count = 0;
        for (std::size_t at = message.content.find("```"); at != std::string::npos;
             at = message.content.find("```", at + 3)) {
          ++count;
        }
        CHECK(count == 2);
      }
    }
  }
}

TEST_CASE("append_step closes the pending step and opens the next") {
  TaskSpec task;
  task.id = "t";
  task.description = "terminal task";
  TrajectoryInProgress current(task);
  CHECK_FALSE(current.has_pending());
  CHECK_THROWS_AS(current.pending(), Error);

  current.open({"first obs", ObservationSource::Explicit, false});
  ActionBlock block;
  block.actions.push_back(Action::type("ls"));
  block.raw_text = "agent.type('ls')";
  append_step(current, block, {"second obs", ObservationSource::Explicit, false});
  CHECK(current.closed_steps().size() == 1);
  CHECK(current.has_pending());
  CHECK(current.pending().text == "second obs");

  // closing twice without an observation in between is an error
  current.close(block);
  try {
    current.close(block);
    FAIL("expected no-pending-observation");
  } catch (const Error& e) {
    CHECK(e.kind() == "no-pending-observation");
  }

  // five appends leave five closed steps in order
  TrajectoryInProgress five(task);
  five.open({"obs 0", ObservationSource::Explicit, false});
  for (int i = 1; i <= 5; ++i) {
    append_step(five, block, {"obs " + std::to_string(i), ObservationSource::Explicit, false});
  }
  CHECK(five.closed_steps().size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(five.closed_steps()[i].observation.text == "obs " + std::to_string(i));
  }

  CHECK_THROWS_AS(five.open({"again", ObservationSource::Explicit, false}), Error);
}

TEST_CASE("episode prompts reproduce the frozen golden bundles") {
  auto exemplars = load_exemplars("trajectories/terminal_exemplars.jsonl");
  TaskSpec task;
  task.id = "terminal-gpg";
  task.description = "Use the terminal below to delete a file ending with the extension .gpg";
  TrajectoryInProgress current(task);
  current.open({"Use the terminal below to delete a file ending with the extension .gpg",
                ObservationSource::Explicit, false});

  PromptBundle bundle =
      build_episode_prompt(build_system_prompt(Mode::MiniWob), exemplars, current, 16384);
  CHECK(messages_to_json(bundle.messages) ==
        testsupport::read_fixture("prompts/terminal_step2.json"));
  CHECK(bundle.stop_tokens == std::vector<std::string>{"Observation:", "> Role: User"});
  CHECK(bundle.truncation_log.empty());
  CHECK(bundle.token_estimate > 0);

  // identical inputs give byte-identical bundles
  PromptBundle again =
      build_episode_prompt(build_system_prompt(Mode::MiniWob), exemplars, current, 16384);
  CHECK(messages_to_json(again.messages) == messages_to_json(bundle.messages));
}

TEST_CASE("the current trajectory must end in a pending observation") {
  TaskSpec task;
  task.id = "t";
  task.description = "x";
  TrajectoryInProgress current(task);
  CHECK_THROWS_AS(
      build_episode_prompt(build_system_prompt(Mode::MiniWob), {}, current, 1000), Error);
}

TEST_CASE("over-tight budgets fail before any exemplar is considered") {
  TaskSpec task;
  task.id = "t";
  task.description = "x";
  TrajectoryInProgress current(task);
  current.open({"obs", ObservationSource::Explicit, false});
  try {
    build_episode_prompt(build_system_prompt(Mode::MiniWob), {}, current, 10);
    FAIL("expected over-budget-even-empty");
  } catch (const Error& e) {
    CHECK(e.kind() == "over-budget-even-empty");
  }
}

TEST_CASE("exemplars drop from the far end and land in the truncation log") {
  // three exemplars with known sizes under the 1-token-per-4-chars heuristic
  auto make = [](const std::string& id, std::size_t obs_len) {
    Trajectory t;
    t.task.id = id;
    t.task.description = "d";
    Step step;
    step.observation = {std::string(obs_len, 'o'), ObservationSource::Explicit, false};
    step.action_block.actions.push_back(Action::type("x"));
    step.action_block.raw_text = "agent.type('x')";
    t.steps.push_back(step);
    t.outcome = Outcome::Success;
    return t;
  };
  std::vector<Trajectory> exemplars = {make("nearest", 40), make("middle", 40),
                                       make("farthest", 40)};
  TaskSpec task;
  task.id = "t";
  task.description = "d";
  TrajectoryInProgress current(task);
  current.open({"obs", ObservationSource::Explicit, false});

  ChatMessage system = build_system_prompt(Mode::MiniWob);
  PromptBundle full = build_episode_prompt(system, exemplars, current, 100000);
  CHECK(full.truncation_log.empty());

  // shave just enough budget to force exactly one drop
  PromptBundle trimmed = build_episode_prompt(system, exemplars, current,
                                              full.token_estimate - 1);
  CHECK(trimmed.truncation_log == std::vector<std::string>{"farthest"});
  CHECK(trimmed.token_estimate <= full.token_estimate - 1);

  // survivors keep their order; the current trajectory is intact
  std::vector<std::string> tasks;
  for (const ChatMessage& message : trimmed.messages) {
    if (message.content.rfind("Task: ", 0) == 0) tasks.push_back(message.content);
  }
  REQUIRE(tasks.size() == 3);  // nearest, middle, current
  CHECK(trimmed.messages.back().content == "Observation:\nobs\nAction:");

  // budget below everything still keeps the current trajectory
  PromptBundle minimal = build_episode_prompt(
      system, exemplars, current,
      heuristic_token_estimate(system.content) + heuristic_token_estimate("Task: d\nTrajectory:") +
          heuristic_token_estimate("Observation:\nobs\nAction:"));
  CHECK(minimal.truncation_log.size() == 3);
  CHECK(minimal.truncation_log[0] == "farthest");
  CHECK(minimal.truncation_log[1] == "middle");
  CHECK(minimal.truncation_log[2] == "nearest");
}

TEST_CASE("splitting on Task: recovers exemplar count plus one") {
  auto exemplars = load_exemplars("trajectories/book_flight_exemplars.jsonl");
  TaskSpec task;
  task.id = "current";
  task.description = "Book the cheapest one-way flight from: Anvik, AK to: MOT on 12/23/2016.";
  TrajectoryInProgress current(task);
  current.open({"pending", ObservationSource::Explicit, false});
  PromptBundle bundle =
      build_episode_prompt(build_system_prompt(Mode::MiniWob), exemplars, current, 1 << 20);
  std::size_t segments = 0;
  for (const ChatMessage& message : bundle.messages) {
    if (message.content.rfind("Task: ", 0) == 0) ++segments;
  }
  CHECK(segments == exemplars.size() + 1);
}

TEST_CASE("a custom token estimator is honored") {
  TaskSpec task;
  task.id = "t";
  task.description = "d";
  TrajectoryInProgress current(task);
  current.open({"obs", ObservationSource::Explicit, false});
  // a 1-token-per-message estimator makes the totals tiny and predictable
  TokenEstimator one_each = [](std::string_view) { return std::size_t(1); };
  PromptBundle bundle = build_episode_prompt(build_system_prompt(Mode::MiniWob), {}, current, 3,
                                             Mode::MiniWob, one_each);
  CHECK(bundle.token_estimate == 3);
}

TEST_CASE("mind2web layout wraps observations in backticks") {
  Trajectory t;
  t.task.id = "m";
  t.task.description = "Remove the SSD on my cart";
  Step step;
  step.observation = {"<html> <a id=131 /> </html>", ObservationSource::TopkFilter, false};
  step.action_block.actions.push_back(Action::click(131));
  step.action_block.raw_text = "`CLICK [131]` ([link]  Shopping Cart -> CLICK)";
  t.steps.push_back(step);
  t.outcome = Outcome::Success;

  auto messages = serialize_exemplar(t, Mode::Mind2Web);
  REQUIRE(messages.size() == 3);
  CHECK(messages[1].content == "Observation: `<html> <a id=131 /> </html>`");
  CHECK(messages[2].content == "Action: `CLICK [131]` ([link]  Shopping Cart -> CLICK)");

  TrajectoryInProgress current(t.task);
  current.open({"<html> <button id=18445 /> </html>", ObservationSource::TopkFilter, false});
  std::vector<Trajectory> exemplars = {t};
  PromptBundle bundle = build_episode_prompt(build_system_prompt(Mode::Mind2Web), exemplars,
                                             current, 16384, Mode::Mind2Web);
  CHECK(bundle.messages.back().content ==
        "Observation: `<html> <button id=18445 /> </html>`");
}
