// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Everything runs offline against the scripted backends.

#include "webtrail/abstraction.hpp"
#include "webtrail/actions.hpp"
#include "webtrail/chat.hpp"
#include "webtrail/embedding.hpp"
#include "webtrail/env.hpp"
#include "webtrail/error.hpp"
#include "webtrail/eval.hpp"
#include "webtrail/llm.hpp"
#include "webtrail/memory.hpp"
#include "webtrail/model.hpp"
#include "webtrail/program.hpp"
#include "webtrail/prompting.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace webtrail;

namespace {

fs::path fixture_dir() { return WEBTRAIL_FIXTURE_DIR; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing-file", path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string read_fixture_trimmed(const std::string& relative) {
  std::string text = read_file(fixture_dir() / relative);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing-file", path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void expect(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error(message);
}

struct Harness {
  int failures = 0;

  void criterion(const std::string& name, const std::function<void()>& body) {
    try {
      body();
      std::printf("PASS: %s\n", name.c_str());
    } catch (const std::exception& e) {
      std::printf("FAIL: %s: %s\n", name.c_str(), e.what());
      ++failures;
    }
    std::fflush(stdout);
  }
};

std::uint64_t rng_state = 0x243f6a8885a308d3ull;
double unit_random() {
  return static_cast<double>(splitmix64(rng_state) >> 11) / 9007199254740992.0;
}

std::vector<Trajectory> load_exemplars(const std::string& relative) {
  std::vector<Trajectory> out;
  for (const std::string& line : read_lines(fixture_dir() / relative)) {
    out.push_back(deserialize_trajectory(line));
  }
  return out;
}

memory::MemoryIndex ingest_pack(const std::string& relative, llm::Backend& backend,
                                std::size_t dim) {
  memory::MemoryIndex index(dim);
  for (const std::string& line : read_lines(fixture_dir() / relative)) {
    json j = json::parse(line);
    TaskSpec task;
    task.id = j.at("task").at("id").get<std::string>();
    task.description = j.at("task").at("description").get<std::string>();
    task.benchmark_mode = benchmark_mode_from_string(
        j.at("task").value("benchmark_mode", std::string("episodic")));
    for (auto it = j.at("task").at("metadata_fields").begin();
         it != j.at("task").at("metadata_fields").end(); ++it) {
      task.metadata_fields[it.key()] = it.value().get<std::string>();
    }
    std::string metadata;
    if (task.benchmark_mode == BenchmarkMode::Episodic) {
      RawState initial{j.at("initial_state_html").get<std::string>(), 0, 0};
      metadata = memory::build_metadata_miniwob(task, initial);
    } else {
      metadata = memory::build_metadata_mind2web(task);
    }
    std::vector<Trajectory> exemplars;
    for (const json& t : j.at("exemplars")) exemplars.push_back(deserialize_trajectory(t.dump()));
    std::vector<abstraction::AbstractionPrompt> prompts;
    for (const json& p : j.at("abstraction_prompts")) {
      prompts.push_back(abstraction::abstraction_prompt_from_json_text(p.dump()));
    }
    index.insert(metadata, backend.embed(metadata), j.at("group_id").get<std::string>(),
                 std::move(exemplars), std::move(prompts));
  }
  return index;
}

int run_command(const std::string& command) {
  int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

// ----------------------------------------------------------- the criteria

void retrieval_oracle_equivalence() {
  auto start = std::chrono::steady_clock::now();
  const std::size_t dim = 64;
  std::vector<EmbeddingVector> keys;
  memory::MemoryIndex index(dim);
  for (int i = 0; i < 1000; ++i) {
    EmbeddingVector v;
    for (std::size_t d = 0; d < dim; ++d) {
      v.values.push_back(static_cast<float>(unit_random() * 2.0 - 1.0));
    }
    keys.push_back(v);
    index.insert("k" + std::to_string(i), std::move(v), "g" + std::to_string(i % 13), {}, {});
  }
  for (int q = 0; q < 100; ++q) {
    EmbeddingVector query;
    for (std::size_t d = 0; d < dim; ++d) {
      query.values.push_back(static_cast<float>(unit_random() * 2.0 - 1.0));
    }
    // exhaustive oracle: stable sort of every (distance, index) pair
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      double sum = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        double diff = double(query.values[d]) - double(keys[i].values[d]);
        sum += diff * diff;
      }
      all.emplace_back(std::sqrt(sum), i);
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(10)}) {
      auto got = index.retrieve_topn(query, n);
      expect(got.size() == n, "result size mismatch");
      for (std::size_t i = 0; i < n; ++i) {
        expect(got[i].entry->insertion_index == all[i].second,
               "retrieval id diverges from the oracle at rank " + std::to_string(i));
        expect(std::abs(got[i].distance - all[i].first) <= 1e-9,
               "retrieval distance diverges from the oracle");
      }
    }
  }
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  expect(elapsed < 5.0, "oracle sweep took " + std::to_string(elapsed) + "s (budget 5s)");
}

void majority_vote() {
  // the worked example: {enter-date, enter-date, click-button} -> enter-date
  memory::MemoryIndex index(1);
  index.insert("a", EmbeddingVector{{0.0f}}, "enter-date", {}, {});
  index.insert("b", EmbeddingVector{{1.0f}}, "enter-date", {}, {});
  index.insert("c", EmbeddingVector{{2.0f}}, "click-button", {}, {});
  auto results = index.retrieve_topn(EmbeddingVector{{0.4f}}, 3);
  expect(memory::resolve_majority(results) == "enter-date",
         "the worked example must resolve to enter-date");

  // exhaustive over 3-element group multisets (labels A/B/C) and all distance
  // assignments: frequency majority wins, frequency ties go to the nearest
  const char* labels[] = {"A", "B", "C"};
  for (int l0 = 0; l0 < 3; ++l0) {
    for (int l1 = 0; l1 < 3; ++l1) {
      for (int l2 = 0; l2 < 3; ++l2) {
        int perm[] = {0, 1, 2};
        std::sort(perm, perm + 3);
        do {
          // distances 1.0, 2.0, 3.0 assigned by permutation; results arrive
          // sorted by distance as retrieve_topn would produce them
          struct Row {
            std::string group;
            double distance;
          };
          std::vector<Row> rows = {{labels[l0], 1.0 + perm[0]},
                                   {labels[l1], 1.0 + perm[1]},
                                   {labels[l2], 1.0 + perm[2]}};
          std::sort(rows.begin(), rows.end(),
                    [](const Row& a, const Row& b) { return a.distance < b.distance; });

          memory::MemoryIndex scratch(1);
          float x = 0.0f;
          for (const Row& row : rows) {
            scratch.insert("k" + std::to_string(x), EmbeddingVector{{row.distance > 0 ? float(row.distance) : x}},
                           row.group, {}, {});
            x += 1.0f;
          }
          auto retrieved = scratch.retrieve_topn(EmbeddingVector{{0.0f}}, 3);

          // independent statement of the rule
          std::map<std::string, int> freq;
          for (const Row& row : rows) ++freq[row.group];
          int best_freq = 0;
          for (const auto& [group, count] : freq) best_freq = std::max(best_freq, count);
          std::string expected;
          for (const Row& row : rows) {  // rows are distance-sorted
            if (freq[row.group] == best_freq) {
              expected = row.group;
              break;
            }
          }
          expect(memory::resolve_majority(retrieved) == expected,
                 "majority mismatch for labels " + rows[0].group + rows[1].group +
                     rows[2].group);
        } while (std::next_permutation(perm, perm + 3));
      }
    }
  }
}

void golden_prompts() {
  auto terminal = load_exemplars("trajectories/terminal_exemplars.jsonl");
  auto flight = load_exemplars("trajectories/book_flight_exemplars.jsonl");
  ChatMessage system = prompting::build_system_prompt(prompting::Mode::MiniWob);

  auto check_bundle = [&](const std::vector<Trajectory>& exemplars,
                          const prompting::TrajectoryInProgress& current,
                          const std::string& golden) {
    prompting::PromptBundle bundle =
        prompting::build_episode_prompt(system, exemplars, current, 16384);
    expect(messages_to_json(bundle.messages) == read_fixture_trimmed(golden),
           golden + " is not byte-identical");
  };

  TaskSpec gpg;
  gpg.id = "terminal-gpg";
  gpg.description = "Use the terminal below to delete a file ending with the extension .gpg";
  prompting::TrajectoryInProgress t2(gpg);
  t2.open({gpg.description, ObservationSource::Explicit, false});
  check_bundle(terminal, t2, "prompts/terminal_step2.json");

  prompting::TrajectoryInProgress t4(gpg);
  t4.open({gpg.description, ObservationSource::Explicit, false});
  ActionBlock ls;
  ls.actions = {Action::type("ls"), Action::press("enter")};
  ls.raw_text = "agent.type('ls')\nagent.press('enter')";
  prompting::append_step(t4, ls,
                         {gpg.description + "\nuser$ ls\nindex.rb media.html window.gpg",
                          ObservationSource::Explicit, false});
  check_bundle(terminal, t4, "prompts/terminal_step4.json");

  TaskSpec anvik;
  anvik.id = "book-flight-anvik";
  anvik.description = "Book the cheapest one-way flight from: Anvik, AK to: MOT on 12/23/2016.";
  const std::string anvik_obs =
      "Type the flight from: 'Anvik, AK' to: '(MOT)' (MOT is an airport code. Anvik, AK is not "
      "an airport code.), and select the date 12/23/2016.";
  prompting::TrajectoryInProgress f2(anvik);
  f2.open({anvik_obs, ObservationSource::Explicit, false});
  check_bundle(flight, f2, "prompts/book_flight_step2.json");

  prompting::TrajectoryInProgress f4(anvik);
  f4.open({anvik_obs, ObservationSource::Explicit, false});
  std::string form_script = json::parse(read_file(fixture_dir() / "currents/book_flight_step4.json"))
                                .at("steps")[0]
                                .at("action_block")
                                .at("raw_text")
                                .get<std::string>();
  ActionBlock form_block = actions::expand(actions::parse_code_actions("```\n" + form_script + "\n```"));
  form_block.raw_text = form_script;
  prompting::append_step(f4, form_block,
                         {"The price of the cheapest one-way flight is $65.",
                          ObservationSource::ImplicitProgram, false});
  check_bundle(flight, f4, "prompts/book_flight_step4.json");
}

void action_parsing_corpus() {
  // every assistant code fence in the shipped corpus parses
  std::size_t fences = 0;
  for (const char* name :
       {"trajectories/terminal_exemplars.jsonl", "trajectories/book_flight_exemplars.jsonl",
        "trajectories/text_transform_exemplars.jsonl"}) {
    for (const std::string& line : read_lines(fixture_dir() / name)) {
      Trajectory t = deserialize_trajectory(line);
      for (const Step& step : t.steps) {
        ActionBlock block = actions::expand(
            actions::parse_code_actions("```\n" + step.action_block.raw_text + "\n```"));
        expect(!block.actions.empty(), "fence expanded to nothing");
        ++fences;
      }
    }
  }
  expect(fences == 18, "expected 18 code fences in the corpus, saw " + std::to_string(fences));

  // the loop-bearing booking script expands to its hand-counted total:
  // 8 form actions + datepicker + 2 unrolled Prev clicks + day + search = 13
  auto flight = load_exemplars("trajectories/book_flight_exemplars.jsonl");
  actions::ActionScript script = actions::parse_code_actions(
      "```\n" + flight[0].steps[0].action_block.raw_text + "\n```");
  bool loop_found = false;
  for (const auto& st : script.statements) {
    if (st.kind == actions::Statement::Kind::Loop) {
      loop_found = true;
      expect(st.loop_count == 2, "the Prev loop must count 2");
      expect(st.body.size() == 1 && st.body[0] == Action::click_xpath("//*[@title='Prev']"),
             "the Prev loop body is a single click");
    }
  }
  expect(loop_found, "the booking script must contain the counted loop");
  expect(actions::expand(script).actions.size() == 13,
         "hand-counted expansion of the loop-bearing script is 13 primitives");

  // id-dialect actions from the fixture corpus
  Action click = actions::parse_m2w_action("`CLICK [131]` ([link]  Shopping Cart -> CLICK)");
  expect(click == Action::click(131), "CLICK [131] must parse to Click(131)");
  Action type = actions::parse_m2w_action("`TYPE [36915] [Western Digital internal SSD 1 TB]`");
  expect(type == Action::type_by_id(36915, "Western Digital internal SSD 1 TB"),
         "TYPE [36915] [...] must parse to TypeById");
}

void closed_loop() {
  auto start = std::chrono::steady_clock::now();

  llm::ScriptedBackend terminal_script =
      llm::ScriptedBackend::load_yaml(fixture_dir() / "scripts/terminal.yaml");
  memory::MemoryIndex miniwob = ingest_pack("demos/miniwob_demos.jsonl", terminal_script, 8);
  eval::AgentConfig config;

  auto terminal_env = env::make_environment("terminal");
  for (long seed = 0; seed < 50; ++seed) {
    eval::EpisodeResult result =
        eval::run_episode(*terminal_env, config, miniwob, terminal_script, seed);
    expect(result.success, "terminal seed " + std::to_string(seed) + " failed: " +
                               result.failure_reason.value_or("?"));
    expect(result.llm_calls == 2,
           "terminal episodes make exactly 2 action completions (seed " +
               std::to_string(seed) + " made " + std::to_string(result.llm_calls) + ")");
  }

  llm::ScriptedBackend flight_script =
      llm::ScriptedBackend::load_yaml(fixture_dir() / "scripts/flight_search.yaml");
  auto flight_env = env::make_environment("flight-search");
  for (long seed = 0; seed < 50; ++seed) {
    eval::EpisodeResult result =
        eval::run_episode(*flight_env, config, miniwob, flight_script, seed);
    expect(result.success, "flight seed " + std::to_string(seed) + " failed: " +
                               result.failure_reason.value_or("?"));
    expect(result.llm_calls == 2, "flight episodes make exactly 2 action completions");
    // the final click is derived from the program-computed price observation
    expect(result.trajectory.steps.size() == 2, "flight episodes close in two steps");
    const Observation& price_obs = result.trajectory.steps[1].observation;
    expect(price_obs.source == ObservationSource::ImplicitProgram,
           "the booking observation must come from the state-parsing program");
    const std::string prefix = "The price of the cheapest one-way flight is $";
    expect(price_obs.text.rfind(prefix, 0) == 0,
           "unexpected price observation: " + price_obs.text);
    std::string digits = price_obs.text.substr(prefix.size());
    digits = digits.substr(0, digits.find('.'));
    const Action& booking = result.trajectory.steps[1].action_block.actions[0];
    expect(booking.xpath == "//button[text()='Book flight for $" + digits + "']",
           "the booking click must target the program-computed price");
  }

  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  expect(elapsed < 30.0, "closed loop took " + std::to_string(elapsed) + "s (budget 30s)");
}

void fallback_behavior() {
  llm::ScriptedBackend script =
      llm::ScriptedBackend::load_yaml(fixture_dir() / "scripts/flight_fallback.yaml");
  memory::MemoryIndex index = ingest_pack("demos/flight_fallback_demos.jsonl", script, 8);
  auto environment = env::make_environment("flight-search");
  eval::AgentConfig config;
  eval::EpisodeResult result = eval::run_episode(*environment, config, index, script, 0);
  expect(result.success, "the fallback episode must still complete: " +
                             result.failure_reason.value_or("?"));
  expect(result.fallback_calls == 1, "expected exactly one zero-shot fallback call, saw " +
                                         std::to_string(result.fallback_calls));
  expect(result.trajectory.steps.size() == 2, "fallback episode closes in two steps");
  expect(result.trajectory.steps[1].observation.source == ObservationSource::ZeroShotFallback,
         "the recovered observation must carry the zero-shot-fallback source flag");
}

void metrics_planted() {
  // ten tasks of five steps; planted correctness gives ele 0.8, step 0.7, sr 0.4
  std::vector<eval::StaticRecord> dataset;
  for (int t = 0; t < 10; ++t) {
    eval::StaticRecord record;
    record.task.id = "task-" + std::to_string(t);
    record.task.description = "planted task " + std::to_string(t);
    record.task.benchmark_mode = BenchmarkMode::StaticDataset;
    record.task.metadata_fields = {{"website", "site" + std::to_string(t)},
                                   {"domain", "planted"},
                                   {"description", record.task.description}};
    record.split = "cross-task";
    for (int s = 0; s < 5; ++s) {
      eval::StaticStep step;
      long gold_id = 100 + t * 10 + s;
      for (long offset = 0; offset < 6; ++offset) {
        step.ranking.push_back({gold_id + offset, 10.0 - double(offset),
                                "<a id=" + std::to_string(gold_id + offset) + " />"});
      }
      step.gold = {gold_id, s % 2 == 0 ? ActionKind::Click : ActionKind::TypeById,
                   s % 2 == 0 ? "" : "value"};
      record.steps.push_back(std::move(step));
    }
    dataset.push_back(std::move(record));
  }

  // wrong-step plan per task: (#wrong-element steps, #gold-element-wrong-op steps)
  const std::pair<int, int> plan[10] = {{0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 1},
                                        {0, 1}, {1, 0}, {2, 0}, {3, 2}, {4, 1}};

  llm::ScriptedBackend backend(16);
  memory::MemoryIndex index(16);
  {
    Trajectory exemplar;
    exemplar.task.id = "planted-exemplar";
    exemplar.task.description = "exemplar";
    exemplar.task.metadata_fields = {
        {"website", "train"}, {"domain", "planted"}, {"description", "exemplar"}};
    Step step;
    step.observation = {"<html> <a id=1 /> </html>", ObservationSource::TopkFilter, false};
    step.action_block.actions.push_back(Action::click(1));
    step.action_block.raw_text = "`CLICK [1]`";
    exemplar.steps.push_back(step);
    exemplar.outcome = Outcome::Success;
    std::string key = memory::build_metadata_mind2web(exemplar.task);
    index.insert(key, backend.embed(key), exemplar.task.id, {exemplar}, {});
  }

  eval::AgentConfig config;
  config.mode = prompting::Mode::Mind2Web;
  std::size_t expected_ele = 0, expected_step = 0, expected_tasks = 0;
  for (int t = 0; t < 10; ++t) {
    const auto& record = dataset[t];
    auto retrieved = index.retrieve_topn(
        backend.embed(memory::build_metadata_mind2web(record.task)), config.retrieve_n);
    auto exemplars = eval::exemplars_from_retrieval(retrieved);
    auto [wrong_element, wrong_op] = plan[t];
    int task_correct = 0;
    for (int s = 0; s < 5; ++s) {
      auto bundle = eval::build_static_step_prompt(record, s, exemplars, config);
      const eval::StepAction& gold = record.steps[s].gold;
      std::string response;
      if (s < wrong_element) {
        response = "Action: `CLICK [" + std::to_string(gold.element_id + 1) + "]`";
      } else if (s < wrong_element + wrong_op) {
        response = gold.op == ActionKind::Click
                       ? "Action: `TYPE [" + std::to_string(gold.element_id) + "] [oops]`"
                       : "Action: `CLICK [" + std::to_string(gold.element_id) + "]`";
        ++expected_ele;
      } else {
        response = "Action: `" +
                   (gold.op == ActionKind::Click
                        ? "CLICK [" + std::to_string(gold.element_id) + "]"
                        : "TYPE [" + std::to_string(gold.element_id) + "] [" + gold.value + "]") +
                   "`";
        ++expected_ele;
        ++expected_step;
        ++task_correct;
      }
      backend.add_exact(bundle.messages, response);
    }
    if (task_correct == 5) ++expected_tasks;
  }
  expect(expected_ele == 40 && expected_step == 35 && expected_tasks == 4,
         "the planted construction must yield 40/35/4");

  eval::EvalReport report = eval::evaluate_static(dataset, config, index, backend);
  expect(report.ele_acc == 0.8, "ele_acc must be exactly 0.8, got " +
                                    std::to_string(report.ele_acc));
  expect(report.step_sr == 0.7, "step_sr must be exactly 0.7, got " +
                                    std::to_string(report.step_sr));
  expect(report.sr == 0.4, "sr must be exactly 0.4, got " + std::to_string(report.sr));

  // the identity step_sr <= ele_acc over randomized datasets
  for (int round = 0; round < 1000; ++round) {
    std::size_t steps = 1 + static_cast<std::size_t>(splitmix64(rng_state) % 40);
    std::vector<eval::StepAction> golds, preds;
    std::vector<long> gold_ids, pred_ids;
    for (std::size_t i = 0; i < steps; ++i) {
      auto pick_op = [&]() {
        switch (splitmix64(rng_state) % 3) {
          case 0: return ActionKind::Click;
          case 1: return ActionKind::TypeById;
          default: return ActionKind::SelectById;
        }
      };
      eval::StepAction gold{static_cast<long>(splitmix64(rng_state) % 5), pick_op(), "v"};
      eval::StepAction pred{static_cast<long>(splitmix64(rng_state) % 5), pick_op(),
                            (splitmix64(rng_state) % 2) == 0 ? "v" : "other"};
      golds.push_back(gold);
      preds.push_back(pred);
      gold_ids.push_back(gold.element_id);
      pred_ids.push_back(pred.element_id);
    }
    double step_sr = eval::step_success_rate(preds, golds);
    double ele_acc = eval::element_accuracy(pred_ids, gold_ids);
    expect(step_sr <= ele_acc + 1e-12, "step_sr exceeded ele_acc on a random dataset");
  }
}

void recall_tradeoff() {
  std::vector<abstraction::RecallRecord> dataset;
  for (int i = 0; i < 100; ++i) {
    abstraction::RecallRecord record;
    for (long id = 1; id <= 60; ++id) {
      record.ranking.push_back({id, 1000.0 - double(id), ""});
    }
    long rank;
    if (i < 53) rank = 1 + (i % 5);
    else if (i < 86) rank = 6 + ((i - 53) % 45);
    else rank = 51 + ((i - 86) % 10);
    record.target_element_id = rank;
    dataset.push_back(std::move(record));
  }
  double recall5 = abstraction::recall_at_k(dataset, 5);
  double recall50 = abstraction::recall_at_k(dataset, 50);
  expect(recall5 == 0.53, "recall@5 must equal 0.53 exactly, got " + std::to_string(recall5));
  expect(recall50 == 0.86, "recall@50 must equal 0.86 exactly, got " + std::to_string(recall50));
  double previous = 0.0;
  for (std::size_t k = 1; k <= 50; ++k) {
    double value = abstraction::recall_at_k(dataset, k);
    expect(value >= previous, "recall@k must be monotone in k");
    previous = value;
  }
}

void distance_ordering() {
  llm::ScriptedBackend backend =
      llm::ScriptedBackend::load_yaml(fixture_dir() / "scripts/m2w_oracle.yaml");
  memory::MemoryIndex index = ingest_pack("demos/m2w_demos.jsonl", backend, 4);
  auto dataset = eval::load_static_dataset(fixture_dir() / "datasets/m2w_synthetic.jsonl");
  eval::AgentConfig config;
  config.mode = prompting::Mode::Mind2Web;
  eval::EvalReport report = eval::evaluate_static(dataset, config, index, backend);
  double task_distance = report.splits.at("cross-task").mean_top1_distance;
  double website_distance = report.splits.at("cross-website").mean_top1_distance;
  double domain_distance = report.splits.at("cross-domain").mean_top1_distance;
  expect(task_distance < website_distance && website_distance < domain_distance,
         "mean top-1 distances must order cross-task < cross-website < cross-domain (got " +
             std::to_string(task_distance) + ", " + std::to_string(website_distance) + ", " +
             std::to_string(domain_distance) + ")");
}

void determinism() {
  fs::path base = fs::temp_directory_path() / "webtrail_acceptance_determinism";
  fs::remove_all(base);
  fs::create_directories(base);
  std::string cli = WEBTRAIL_CLI_BIN;
  std::string fixtures = fixture_dir().string();

  for (int run = 1; run <= 2; ++run) {
    fs::path run_dir = base / ("run" + std::to_string(run));
    fs::create_directories(run_dir);
    std::string mem = (run_dir / "memory").string();
    expect(run_command(cli + " ingest --demos " + fixtures + "/demos/m2w_demos.jsonl --memory " +
                       mem + " --mode mind2web --script " + fixtures +
                       "/scripts/m2w_oracle.yaml >/dev/null 2>&1") == 0,
           "ingest run " + std::to_string(run) + " failed");
    expect(run_command(cli + " eval --dataset " + fixtures +
                       "/datasets/m2w_synthetic.jsonl --memory " + mem + " --script " + fixtures +
                       "/scripts/m2w_oracle.yaml --out " + (run_dir / "report.json").string() +
                       " >/dev/null 2>&1") == 0,
           "eval run " + std::to_string(run) + " failed");
  }
  expect(read_file(base / "run1/report.json") == read_file(base / "run2/report.json"),
         "reports differ between identical runs");
  for (const char* file : {"manifest.json", "keys.f32le", "exemplars.jsonl"}) {
    expect(read_file(base / "run1/memory" / file) == read_file(base / "run2/memory" / file),
           std::string("memory file ") + file + " differs between identical runs");
  }
  fs::remove_all(base);
}

void serialization_round_trip() {
  // randomized trajectories round trip bit-exactly
  std::uint64_t state = 0xfeedfacecafebeefull;
  auto rnd = [&]() { return splitmix64(state); };
  auto random_text = [&](std::size_t max_len) {
    static const char* kAlphabet =
        "abcdefghijklmnopqrstuvwxyz0123456789 _-.'\"\\\n\t<>&";
    std::string out;
    std::size_t len = 1 + rnd() % max_len;
    for (std::size_t i = 0; i < len; ++i) out.push_back(kAlphabet[rnd() % 50]);
    if (rnd() % 5 == 0) out += "\xC3\xA9";
    return out;
  };
  const auto& keys = allowed_press_keys();
  for (int i = 0; i < 1000; ++i) {
    Trajectory t;
    t.task.id = "t" + std::to_string(i);
    t.task.description = random_text(50);
    t.task.benchmark_mode = (rnd() % 2) == 0 ? BenchmarkMode::Episodic
                                             : BenchmarkMode::StaticDataset;
    for (std::size_t f = 0; f < rnd() % 3; ++f) {
      t.task.metadata_fields["k" + std::to_string(rnd() % 9)] = random_text(20);
    }
    t.outcome = static_cast<Outcome>(rnd() % 3);
    for (std::size_t s = 0; s < rnd() % 4; ++s) {
      Step step;
      step.observation = {random_text(100), static_cast<ObservationSource>(rnd() % 5),
                          (rnd() % 7) == 0};
      for (std::size_t a = 0; a < 1 + rnd() % 3; ++a) {
        switch (rnd() % 5) {
          case 0: step.action_block.actions.push_back(Action::type(random_text(20))); break;
          case 1:
            step.action_block.actions.push_back(Action::press(keys[rnd() % keys.size()]));
            break;
          case 2: step.action_block.actions.push_back(Action::click_xpath("//a")); break;
          case 3:
            step.action_block.actions.push_back(Action::click(static_cast<long>(rnd() % 9999)));
            break;
          default:
            step.action_block.actions.push_back(
                Action::type_by_id(static_cast<long>(rnd() % 9999), random_text(10)));
        }
      }
      step.action_block.raw_text = random_text(60);
      t.steps.push_back(std::move(step));
    }
    std::string record = serialize_trajectory(t);
    Trajectory back = deserialize_trajectory(record);
    expect(back == t, "round trip lost information at iteration " + std::to_string(i));
    expect(serialize_trajectory(back) == record, "re-serialization diverged");
  }

  // persisted memory round trips bit-exactly
  llm::ScriptedBackend backend =
      llm::ScriptedBackend::load_yaml(fixture_dir() / "scripts/terminal.yaml");
  memory::MemoryIndex index = ingest_pack("demos/miniwob_demos.jsonl", backend, 8);
  fs::path dir_a = fs::temp_directory_path() / "webtrail_acceptance_mem_a";
  fs::path dir_b = fs::temp_directory_path() / "webtrail_acceptance_mem_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  memory::persist(index, dir_a);
  memory::MemoryIndex loaded = memory::load(dir_a);
  memory::persist(loaded, dir_b);
  for (const char* file : {"manifest.json", "keys.f32le", "exemplars.jsonl"}) {
    expect(read_file(dir_a / file) == read_file(dir_b / file),
           std::string("memory round trip changed ") + file);
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

}  // namespace

int main() {
  Harness harness;
  harness.criterion("retrieval-oracle-equivalence", retrieval_oracle_equivalence);
  harness.criterion("majority-vote", majority_vote);
  harness.criterion("golden-prompts", golden_prompts);
  harness.criterion("action-parsing-corpus", action_parsing_corpus);
  harness.criterion("closed-loop", closed_loop);
  harness.criterion("fallback-behavior", fallback_behavior);
  harness.criterion("metrics-planted", metrics_planted);
  harness.criterion("recall-tradeoff", recall_tradeoff);
  harness.criterion("distance-ordering", distance_ordering);
  harness.criterion("determinism", determinism);
  harness.criterion("serialization-round-trip", serialization_round_trip);
  if (harness.failures > 0) {
    std::printf("%d criterion(s) failed\n", harness.failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
