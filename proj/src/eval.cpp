#include "webtrail/eval.hpp"

#include "webtrail/actions.hpp"
#include "webtrail/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace webtrail::eval {

using nlohmann::json;

namespace {

// Picks the abstraction route for a state: explicit pairs for short states,
// implicit programs for long ones, raw passthrough when the group carries no
// abstraction prompts at all.
struct Abstractor {
  const std::vector<abstraction::AbstractionPrompt>& prompts;
  const AgentConfig& config;
  llm::Backend& backend;
  int abstraction_calls = 0;
  int fallback_calls = 0;

  Observation abstract(const TaskSpec& task, const RawState& state) {
    const abstraction::AbstractionPrompt* explicit_prompt = nullptr;
    const abstraction::AbstractionPrompt* implicit_prompt = nullptr;
    for (const auto& prompt : prompts) {
      if (prompt.mode == abstraction::PromptMode::Explicit && explicit_prompt == nullptr) {
        explicit_prompt = &prompt;
      }
      if (prompt.mode == abstraction::PromptMode::Implicit && implicit_prompt == nullptr) {
        implicit_prompt = &prompt;
      }
    }
    abstraction::Config abs_config;
    abs_config.observation_budget = config.observation_budget;
    abs_config.token_budget = config.token_budget;
    abs_config.max_output_tokens = config.max_output_tokens;
    abs_config.model_id = config.model_id;

    bool state_is_short = state.html.size() <= config.explicit_state_limit;
    if (explicit_prompt != nullptr && (implicit_prompt == nullptr || state_is_short)) {
      ++abstraction_calls;
      return abstraction::abstract_explicit(*explicit_prompt, state, backend, abs_config);
    }
    if (implicit_prompt != nullptr) {
      auto outcome =
          abstraction::abstract_implicit(*implicit_prompt, task, state, backend, abs_config);
      if (outcome.generated) ++abstraction_calls;
      if (outcome.used_fallback) {
        ++abstraction_calls;
        ++fallback_calls;
      }
      return outcome.observation;
    }
    return abstraction::raw_passthrough(state, abs_config);
  }
};

}  // namespace

EpisodeResult run_episode(env::Environment& environment, const AgentConfig& config,
                          const memory::MemoryIndex& memory, llm::Backend& backend, long seed) {
  EpisodeResult result;
  RawState initial_state = environment.reset(seed);
  TaskSpec task = environment.task();
  result.task_id = task.id;

  std::string metadata = memory::build_metadata_miniwob(task, initial_state);
  EmbeddingVector query = backend.embed(metadata);
  auto retrieved = memory.retrieve_topn(query, config.retrieve_n);
  std::string group = memory::resolve_majority(retrieved);
  std::vector<Trajectory> exemplars = memory.exemplars_for_group(group);
  std::vector<abstraction::AbstractionPrompt> prompts = memory.prompts_for_group(group);

  Abstractor abstractor{prompts, config, backend};
  ChatMessage system = prompting::build_system_prompt(config.mode);
  prompting::TrajectoryInProgress current(task);

  auto finish = [&](Outcome outcome) {
    result.trajectory = current.finish(outcome);
    result.abstraction_calls = abstractor.abstraction_calls;
    result.fallback_calls = abstractor.fallback_calls;
    return result;
  };

  if (config.max_steps <= 0) {
    result.failure_reason = "budget-exhausted";
    return finish(Outcome::Failure);
  }

  current.open(abstractor.abstract(task, initial_state));

  for (int round = 0; round < config.max_steps; ++round) {
    prompting::PromptBundle bundle =
        prompting::build_episode_prompt(system, exemplars, current, config.token_budget,
                                        config.mode);
    llm::CompletionRequest request;
    request.messages = bundle.messages;
    request.stop = bundle.stop_tokens;
    request.max_output_tokens = config.max_output_tokens;
    request.model_id = config.model_id;
    std::string completion = backend.complete(request);
    ++result.llm_calls;

    ActionBlock block;
    try {
      actions::ActionScript script = actions::parse_code_actions(completion);
      block = actions::expand(script);
    } catch (const Error& e) {
      result.failure_reason = e.kind();
      return finish(Outcome::Failure);
    }

    for (const Action& action : block.actions) {
      environment.apply(action);
    }
    result.steps_taken = round + 1;

    if (environment.succeeded()) {
      current.close(std::move(block));
      result.success = true;
      return finish(Outcome::Success);
    }
    if (round + 1 == config.max_steps) {
      current.close(std::move(block));
      result.failure_reason = "budget-exhausted";
      return finish(Outcome::Failure);
    }
    Observation next = abstractor.abstract(task, environment.current_state());
    prompting::append_step(current, std::move(block), std::move(next));
  }
  result.failure_reason = "budget-exhausted";
  return finish(Outcome::Failure);
}

double element_accuracy(std::span<const long> predictions, std::span<const long> golds) {
  if (predictions.size() != golds.size()) {
    throw Error("length-mismatch", std::to_string(predictions.size()) + " predictions vs " +
                                       std::to_string(golds.size()) + " golds");
  }
  if (predictions.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == golds[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

namespace {

std::string normalize_value(std::string_view value) {
  std::size_t begin = 0;
  std::size_t end = value.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(value[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(value[end - 1]))) --end;
  std::string out(value.substr(begin, end - begin));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

bool step_correct(const StepAction& predicted, const StepAction& gold, bool strict_values) {
  if (predicted.element_id != gold.element_id) return false;
  if (predicted.op != gold.op) return false;
  if (gold.op == ActionKind::TypeById || gold.op == ActionKind::SelectById) {
    if (strict_values) return predicted.value == gold.value;
    return normalize_value(predicted.value) == normalize_value(gold.value);
  }
  return true;
}

double step_success_rate(std::span<const StepAction> predictions,
                         std::span<const StepAction> golds, bool strict_values) {
  if (predictions.size() != golds.size()) {
    throw Error("length-mismatch", std::to_string(predictions.size()) + " predictions vs " +
                                       std::to_string(golds.size()) + " golds");
  }
  if (predictions.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (step_correct(predictions[i], golds[i], strict_values)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double task_success_rate(std::span<const std::vector<bool>> per_task_verdicts) {
  if (per_task_verdicts.empty()) return 0.0;
  std::size_t successes = 0;
  for (std::size_t i = 0; i < per_task_verdicts.size(); ++i) {
    const std::vector<bool>& verdicts = per_task_verdicts[i];
    if (verdicts.empty()) {
      throw Error("empty-task", "task " + std::to_string(i) + " has no step verdicts");
    }
    if (std::all_of(verdicts.begin(), verdicts.end(), [](bool v) { return v; })) {
      ++successes;
    }
  }
  return static_cast<double>(successes) / static_cast<double>(per_task_verdicts.size());
}

namespace {

std::string op_to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Click: return "CLICK";
    case ActionKind::TypeById: return "TYPE";
    case ActionKind::SelectById: return "SELECT";
    default:
      throw Error("invariant-violation", "ground-truth operation must be CLICK/TYPE/SELECT");
  }
}

ActionKind op_from_string(const std::string& s) {
  if (s == "CLICK") return ActionKind::Click;
  if (s == "TYPE") return ActionKind::TypeById;
  if (s == "SELECT") return ActionKind::SelectById;
  throw Error("invariant-violation", "gold.operation: unknown value '" + s + "'");
}

}  // namespace

std::string serialize_static_record(const StaticRecord& record) {
  json j;
  j["split"] = record.split;
  json task;
  task["id"] = record.task.id;
  task["description"] = record.task.description;
  task["benchmark_mode"] = to_string(record.task.benchmark_mode);
  task["metadata_fields"] = json::object();
  for (const auto& [k, v] : record.task.metadata_fields) task["metadata_fields"][k] = v;
  j["task"] = std::move(task);
  j["steps"] = json::array();
  for (const StaticStep& step : record.steps) {
    json s;
    s["gold"] = {{"element_id", step.gold.element_id},
                 {"operation", op_to_string(step.gold.op)},
                 {"value", step.gold.value}};
    s["ranking"] = json::array();
    for (const abstraction::RankedElement& e : step.ranking) {
      s["ranking"].push_back(
          {{"element_id", e.element_id}, {"score", e.score}, {"snippet", e.snippet}});
    }
    j["steps"].push_back(std::move(s));
  }
  return j.dump();
}

StaticRecord deserialize_static_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error("malformed-record",
                "static record at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  StaticRecord record;
  record.split = j.at("split").get<std::string>();
  const json& task = j.at("task");
  record.task.id = task.at("id").get<std::string>();
  record.task.description = task.at("description").get<std::string>();
  record.task.benchmark_mode =
      benchmark_mode_from_string(task.value("benchmark_mode", std::string("static-dataset")));
  for (auto it = task.at("metadata_fields").begin(); it != task.at("metadata_fields").end();
       ++it) {
    record.task.metadata_fields[it.key()] = it.value().get<std::string>();
  }
  for (const json& s : j.at("steps")) {
    StaticStep step;
    step.gold.element_id = s.at("gold").at("element_id").get<long>();
    step.gold.op = op_from_string(s.at("gold").at("operation").get<std::string>());
    step.gold.value = s.at("gold").value("value", std::string());
    for (const json& e : s.at("ranking")) {
      abstraction::RankedElement element;
      element.element_id = e.at("element_id").get<long>();
      element.score = e.at("score").get<double>();
      element.snippet = e.at("snippet").get<std::string>();
      step.ranking.push_back(std::move(element));
    }
    if (step.ranking.empty()) {
      throw Error("invariant-violation", "static step has an empty ranking");
    }
    record.steps.push_back(std::move(step));
  }
  if (record.steps.empty()) {
    throw Error("invariant-violation", "static record has no steps");
  }
  return record;
}

std::vector<StaticRecord> load_static_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing-file", path.string());
  std::vector<StaticRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(deserialize_static_record(line));
  }
  return records;
}

void save_static_dataset(std::span<const StaticRecord> records,
                         const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("missing-file", "cannot write " + path.string());
  for (const StaticRecord& record : records) {
    out << serialize_static_record(record) << "\n";
  }
}

const std::vector<int>& default_recall_ks() {
  static const std::vector<int> ks = {1, 3, 5, 10, 50};
  return ks;
}

namespace {

struct RecordOutcome {
  std::string split;
  double top1_distance = 0.0;
  std::vector<StepAction> predictions;
  std::vector<StepAction> golds;
  std::vector<bool> verdicts;
};

ActionBlock gold_action_block(const StepAction& gold) {
  Action action;
  switch (gold.op) {
    case ActionKind::Click: action = Action::click(gold.element_id); break;
    case ActionKind::TypeById: action = Action::type_by_id(gold.element_id, gold.value); break;
    case ActionKind::SelectById:
      action = Action::select_by_id(gold.element_id, gold.value);
      break;
    default:
      throw Error("invariant-violation", "gold operation must be CLICK/TYPE/SELECT");
  }
  ActionBlock block;
  block.raw_text = "`" + actions::render_m2w_action(action) + "`";
  block.actions.push_back(std::move(action));
  return block;
}

StepAction prediction_from_action(const Action& action) {
  StepAction pred;
  pred.element_id = action.element_id;
  pred.op = action.kind;
  pred.value = action.text;
  return pred;
}

}  // namespace

std::vector<Trajectory> exemplars_from_retrieval(
    std::span<const memory::RetrievalResult> retrieved) {
  std::vector<Trajectory> exemplars;
  std::set<std::string> seen;
  for (const auto& result : retrieved) {
    for (const Trajectory& t : result.entry->exemplars) {
      std::string bytes = serialize_trajectory(t);
      if (seen.insert(bytes).second) exemplars.push_back(t);
    }
  }
  return exemplars;
}

prompting::PromptBundle build_static_step_prompt(const StaticRecord& record,
                                                 std::size_t step_index,
                                                 std::span<const Trajectory> exemplars,
                                                 const AgentConfig& config) {
  abstraction::Config abs_config;
  abs_config.observation_budget = config.observation_budget;
  prompting::TrajectoryInProgress current(record.task);
  for (std::size_t j = 0; j < step_index; ++j) {
    current.open(abstraction::filter_topk(record.steps[j].ranking, config.k_prev, abs_config));
    current.close(gold_action_block(record.steps[j].gold));
  }
  current.open(
      abstraction::filter_topk(record.steps[step_index].ranking, config.k_cur, abs_config));
  return prompting::build_episode_prompt(
      prompting::build_system_prompt(prompting::Mode::Mind2Web), exemplars, current,
      config.token_budget, prompting::Mode::Mind2Web);
}

EvalReport evaluate_static(std::span<const StaticRecord> dataset, const AgentConfig& config,
                           const memory::MemoryIndex& memory, llm::Backend& backend,
                           int workers) {
  if (dataset.empty()) throw Error("empty-dataset", "no static records to evaluate");

  // memory isolation: no test metadata string may appear among memory keys
  std::vector<std::string> metadata_texts;
  metadata_texts.reserve(dataset.size());
  for (const StaticRecord& record : dataset) {
    std::string metadata = memory::build_metadata_mind2web(record.task);
    if (memory.contains_key_text(metadata)) {
      throw Error("split-leakage",
                  "test task '" + record.task.id + "' metadata is present in memory");
    }
    metadata_texts.push_back(std::move(metadata));
  }

  std::vector<RecordOutcome> outcomes(dataset.size());

  auto evaluate_record = [&](std::size_t index) {
    const StaticRecord& record = dataset[index];
    RecordOutcome outcome;
    outcome.split = record.split;

    EmbeddingVector query = backend.embed(metadata_texts[index]);
    auto retrieved = memory.retrieve_topn(query, config.retrieve_n);
    outcome.top1_distance = retrieved.front().distance;
    std::vector<Trajectory> exemplars = exemplars_from_retrieval(retrieved);

    for (std::size_t i = 0; i < record.steps.size(); ++i) {
      prompting::PromptBundle bundle = build_static_step_prompt(record, i, exemplars, config);
      llm::CompletionRequest request;
      request.messages = bundle.messages;
      request.stop = bundle.stop_tokens;
      request.max_output_tokens = config.max_output_tokens;
      request.model_id = config.model_id;
      std::string completion = backend.complete(request);

      StepAction pred;
      try {
        pred = prediction_from_action(actions::parse_m2w_action(completion));
      } catch (const Error&) {
        pred.element_id = -1;  // unparseable response scores as incorrect
      }
      outcome.predictions.push_back(pred);
      outcome.golds.push_back(record.steps[i].gold);
      outcome.verdicts.push_back(step_correct(pred, record.steps[i].gold, config.strict_values));
    }
    outcomes[index] = std::move(outcome);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) evaluate_record(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= dataset.size()) break;
          evaluate_record(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  // deterministic reduction in dataset order
  EvalReport report;
  std::vector<long> pred_ids, gold_ids;
  std::vector<StepAction> preds, golds;
  std::vector<std::vector<bool>> per_task;
  std::map<std::string, std::vector<std::size_t>> split_members;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const RecordOutcome& outcome = outcomes[i];
    for (std::size_t s = 0; s < outcome.predictions.size(); ++s) {
      pred_ids.push_back(outcome.predictions[s].element_id);
      gold_ids.push_back(outcome.golds[s].element_id);
      preds.push_back(outcome.predictions[s]);
      golds.push_back(outcome.golds[s]);
    }
    per_task.push_back(outcome.verdicts);
    split_members[outcome.split].push_back(i);
  }
  report.ele_acc = element_accuracy(pred_ids, gold_ids);
  report.step_sr = step_success_rate(preds, golds, config.strict_values);
  report.sr = task_success_rate(per_task);

  double distance_sum = 0.0;
  for (const RecordOutcome& outcome : outcomes) distance_sum += outcome.top1_distance;
  report.mean_top1_retrieval_distance = distance_sum / static_cast<double>(outcomes.size());

  // recall@k over every step's ranking vs its gold element
  std::vector<abstraction::RecallRecord> recall_records;
  for (const StaticRecord& record : dataset) {
    for (const StaticStep& step : record.steps) {
      recall_records.push_back({step.ranking, step.gold.element_id});
    }
  }
  for (int k : default_recall_ks()) {
    report.recall_at_k[k] =
        abstraction::recall_at_k(recall_records, static_cast<std::size_t>(k));
  }

  for (const auto& [split, members] : split_members) {
    SplitStats stats;
    std::vector<long> split_pred_ids, split_gold_ids;
    std::vector<StepAction> split_preds, split_golds;
    std::vector<std::vector<bool>> split_tasks;
    double split_distance = 0.0;
    for (std::size_t index : members) {
      const RecordOutcome& outcome = outcomes[index];
      for (std::size_t s = 0; s < outcome.predictions.size(); ++s) {
        split_pred_ids.push_back(outcome.predictions[s].element_id);
        split_gold_ids.push_back(outcome.golds[s].element_id);
        split_preds.push_back(outcome.predictions[s]);
        split_golds.push_back(outcome.golds[s]);
      }
      split_tasks.push_back(outcome.verdicts);
      split_distance += outcome.top1_distance;
    }
    stats.tasks = members.size();
    stats.steps = split_pred_ids.size();
    stats.ele_acc = element_accuracy(split_pred_ids, split_gold_ids);
    stats.step_sr = step_success_rate(split_preds, split_golds, config.strict_values);
    stats.sr = task_success_rate(split_tasks);
    stats.mean_top1_distance = split_distance / static_cast<double>(members.size());
    report.splits[split] = stats;
  }
  return report;
}

std::string EvalReport::to_json() const {
  json j;
  j["ele_acc"] = ele_acc;
  j["step_sr"] = step_sr;
  j["sr"] = sr;
  j["mean_top1_retrieval_distance"] = mean_top1_retrieval_distance;
  j["recall_at_k"] = json::object();
  for (const auto& [k, v] : recall_at_k) j["recall_at_k"][std::to_string(k)] = v;
  j["splits"] = json::object();
  for (const auto& [split, stats] : splits) {
    j["splits"][split] = {{"tasks", stats.tasks},
                          {"steps", stats.steps},
                          {"ele_acc", stats.ele_acc},
                          {"step_sr", stats.step_sr},
                          {"sr", stats.sr},
                          {"mean_top1_distance", stats.mean_top1_distance}};
  }
  return j.dump();
}

EvalReport EvalReport::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("malformed-record", std::string("report: ") + e.what());
  }
  EvalReport report;
  report.ele_acc = j.at("ele_acc").get<double>();
  report.step_sr = j.at("step_sr").get<double>();
  report.sr = j.at("sr").get<double>();
  report.mean_top1_retrieval_distance = j.at("mean_top1_retrieval_distance").get<double>();
  for (auto it = j.at("recall_at_k").begin(); it != j.at("recall_at_k").end(); ++it) {
    report.recall_at_k[std::stoi(it.key())] = it.value().get<double>();
  }
  for (auto it = j.at("splits").begin(); it != j.at("splits").end(); ++it) {
    SplitStats stats;
    stats.tasks = it.value().at("tasks").get<std::size_t>();
    stats.steps = it.value().at("steps").get<std::size_t>();
    stats.ele_acc = it.value().at("ele_acc").get<double>();
    stats.step_sr = it.value().at("step_sr").get<double>();
    stats.sr = it.value().at("sr").get<double>();
    stats.mean_top1_distance = it.value().at("mean_top1_distance").get<double>();
    report.splits[it.key()] = stats;
  }
  return report;
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %6s %6s %9s %9s %7s %10s\n", "split", "tasks", "steps",
                "Ele. Acc", "Step SR", "SR", "top1-dist");
  out << line;
  auto row = [&](const std::string& name, std::size_t tasks, std::size_t steps, double ele,
                 double step, double sr_value, double dist) {
    std::snprintf(line, sizeof line, "%-14s %6zu %6zu %9.3f %9.3f %7.3f %10.4f\n", name.c_str(),
                  tasks, steps, ele, step, sr_value, dist);
    out << line;
  };
  static const char* kOrder[] = {"cross-task", "cross-website", "cross-domain"};
  for (const char* split : kOrder) {
    auto it = splits.find(split);
    if (it != splits.end()) {
      row(split, it->second.tasks, it->second.steps, it->second.ele_acc, it->second.step_sr,
          it->second.sr, it->second.mean_top1_distance);
    }
  }
  for (const auto& [split, stats] : splits) {
    if (std::none_of(std::begin(kOrder), std::end(kOrder),
                     [&](const char* name) { return split == name; })) {
      row(split, stats.tasks, stats.steps, stats.ele_acc, stats.step_sr, stats.sr,
          stats.mean_top1_distance);
    }
  }
  std::size_t total_tasks = 0;
  std::size_t total_steps = 0;
  for (const auto& [split, stats] : splits) {
    total_tasks += stats.tasks;
    total_steps += stats.steps;
  }
  row("overall", total_tasks, total_steps, ele_acc, step_sr, sr, mean_top1_retrieval_distance);
  out << "recall@k:";
  for (const auto& [k, v] : recall_at_k) {
    std::snprintf(line, sizeof line, " %d=%.3f", k, v);
    out << line;
  }
  out << "\n";
  return out.str();
}

}  // namespace webtrail::eval
