#include "webtrail/cli.hpp"

#include "webtrail/abstraction.hpp"
#include "webtrail/actions.hpp"
#include "webtrail/chat.hpp"
#include "webtrail/env.hpp"
#include "webtrail/error.hpp"
#include "webtrail/eval.hpp"
#include "webtrail/llm.hpp"
#include "webtrail/memory.hpp"
#include "webtrail/model.hpp"
#include "webtrail/prompting.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

namespace webtrail::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_backend_error(const Error& e) {
  return e.kind() == "network-failure" || e.kind() == "rate-limit" ||
         e.kind() == "backend-error" || e.kind() == "unmatched-script";
}

void print_effective_config(std::ostream& err, const std::string& command,
                            const std::map<std::string, std::string>& values) {
  err << "# effective-config\n";
  err << "command = " << command << "\n";
  for (const auto& [key, value] : values) {
    err << key << " = " << value << "\n";
  }
}

fs::path resolve(const fs::path& root, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  return root / p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing-file", path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::unique_ptr<llm::Backend> make_backend(const std::string& backend_name,
                                           const std::string& script_path, std::size_t dim,
                                           const fs::path& root) {
  if (backend_name == "http") {
    return std::make_unique<llm::HttpBackend>(llm::HttpBackend::from_env());
  }
  if (backend_name != "scripted") {
    throw Error("invariant-violation", "unknown backend '" + backend_name + "'");
  }
  if (!script_path.empty()) {
    auto backend = std::make_unique<llm::ScriptedBackend>(
        llm::ScriptedBackend::load_yaml(resolve(root, script_path)));
    return backend;
  }
  return std::make_unique<llm::ScriptedBackend>(dim);
}

struct DemoRecord {
  std::string group_id;
  TaskSpec task;
  std::string initial_state_html;
  std::vector<Trajectory> exemplars;
  std::vector<abstraction::AbstractionPrompt> prompts;
};

DemoRecord parse_demo_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error("malformed-record", std::string("demo record: ") + e.what());
  }
  DemoRecord record;
  record.group_id = j.at("group_id").get<std::string>();
  record.initial_state_html = j.value("initial_state_html", std::string());
  const json& task = j.at("task");
  record.task.id = task.at("id").get<std::string>();
  record.task.description = task.at("description").get<std::string>();
  record.task.benchmark_mode =
      benchmark_mode_from_string(task.value("benchmark_mode", std::string("episodic")));
  if (task.contains("metadata_fields")) {
    for (auto it = task["metadata_fields"].begin(); it != task["metadata_fields"].end(); ++it) {
      record.task.metadata_fields[it.key()] = it.value().get<std::string>();
    }
  }
  for (const json& t : j.at("exemplars")) {
    record.exemplars.push_back(deserialize_trajectory(t.dump()));
  }
  for (const json& p : j.value("abstraction_prompts", json::array())) {
    record.prompts.push_back(abstraction::abstraction_prompt_from_json_text(p.dump()));
  }
  return record;
}

std::vector<long> parse_seed_range(const std::string& text) {
  std::size_t dots = text.find("..");
  std::vector<long> seeds;
  if (dots == std::string::npos) {
    seeds.push_back(std::stol(text));
    return seeds;
  }
  long begin = std::stol(text.substr(0, dots));
  long end = std::stol(text.substr(dots + 2));
  if (end < begin) throw Error("invariant-violation", "seed range end before begin");
  for (long s = begin; s <= end; ++s) seeds.push_back(s);
  return seeds;
}

// ------------------------------------------------------------------- verbs

int cmd_ingest(const fs::path& root, const std::string& demos, const std::string& memory_dir,
               const std::string& mode, const std::string& backend_name,
               const std::string& script, std::size_t dim, std::ostream& out,
               std::ostream& err) {
  print_effective_config(err, "ingest",
                         {{"backend", backend_name},
                          {"demos", demos},
                          {"dim", std::to_string(dim)},
                          {"memory", memory_dir},
                          {"mode", mode},
                          {"root", root.string()},
                          {"script", script}});
  auto backend = make_backend(backend_name, script, dim, root);

  std::ifstream in(resolve(root, demos), std::ios::binary);
  if (!in) {
    err << "error: cannot open demos file " << demos << "\n";
    return 3;
  }
  std::unique_ptr<memory::MemoryIndex> index;
  std::string line;
  std::size_t record_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      DemoRecord record = parse_demo_record(line);
      std::string metadata;
      if (mode == "miniwob") {
        RawState initial{record.initial_state_html, 0, 0};
        metadata = memory::build_metadata_miniwob(record.task, initial);
      } else {
        metadata = memory::build_metadata_mind2web(record.task);
      }
      EmbeddingVector key = backend->embed(metadata);
      if (!index) index = std::make_unique<memory::MemoryIndex>(key.dim());
      index->insert(metadata, std::move(key), record.group_id, std::move(record.exemplars),
                    std::move(record.prompts));
    } catch (const Error& e) {
      err << "error: record " << record_index << ": " << e.what() << "\n";
      return is_backend_error(e) ? 4 : 3;
    }
    ++record_index;
  }
  if (!index) {
    // an empty demo pack still produces a well-formed (empty) memory
    index = std::make_unique<memory::MemoryIndex>(dim);
  }
  memory::persist(*index, resolve(root, memory_dir));
  out << index->size() << " entries, dim " << index->dim() << "\n";
  return 0;
}

int cmd_memory_query(const fs::path& root, const std::string& memory_dir,
                     const std::string& query, std::size_t n, bool resolve_vote,
                     const std::string& backend_name, const std::string& script, std::size_t dim,
                     std::ostream& out, std::ostream& err) {
  print_effective_config(err, "memory-query",
                         {{"backend", backend_name},
                          {"memory", memory_dir},
                          {"n", std::to_string(n)},
                          {"query", query},
                          {"resolve", resolve_vote ? "true" : "false"},
                          {"root", root.string()},
                          {"script", script}});
  memory::MemoryIndex index = memory::load(resolve(root, memory_dir));
  auto backend = make_backend(backend_name, script, dim == 0 ? index.dim() : dim, root);
  EmbeddingVector q = backend->embed(query);
  auto results = index.retrieve_topn(q, n);
  char line[512];
  for (const auto& result : results) {
    std::snprintf(line, sizeof line, "%s %.6f\n", result.entry->group_id.c_str(),
                  result.distance);
    out << line;
  }
  if (resolve_vote) {
    auto top3 = index.retrieve_topn(q, 3);
    out << memory::resolve_majority(top3) << "\n";
  }
  return 0;
}

int cmd_prompt(const fs::path& root, const std::string& mode, const std::string& exemplars_path,
               const std::string& current_path, std::size_t budget, bool print_hash,
               std::ostream& out, std::ostream& err) {
  print_effective_config(err, "prompt",
                         {{"budget", std::to_string(budget)},
                          {"current", current_path},
                          {"exemplars", exemplars_path},
                          {"mode", mode},
                          {"root", root.string()}});
  std::vector<Trajectory> exemplars;
  {
    std::ifstream in(resolve(root, exemplars_path), std::ios::binary);
    if (!in) {
      err << "error: cannot open exemplars " << exemplars_path << "\n";
      return 3;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) exemplars.push_back(deserialize_trajectory(line));
    }
  }
  json current_json = json::parse(read_file(resolve(root, current_path)));
  TaskSpec task;
  task.id = current_json.at("task").at("id").get<std::string>();
  task.description = current_json.at("task").at("description").get<std::string>();
  task.benchmark_mode = benchmark_mode_from_string(
      current_json.at("task").value("benchmark_mode", std::string("episodic")));
  if (current_json.at("task").contains("metadata_fields")) {
    const json& fields = current_json.at("task").at("metadata_fields");
    for (auto it = fields.begin(); it != fields.end(); ++it) {
      task.metadata_fields[it.key()] = it.value().get<std::string>();
    }
  }
  prompting::TrajectoryInProgress current(task);
  for (const json& s : current_json.value("steps", json::array())) {
    Observation obs;
    obs.text = s.at("observation").at("text").get<std::string>();
    obs.source = observation_source_from_string(
        s.at("observation").value("source", std::string("explicit")));
    obs.truncated = s.at("observation").value("truncated", false);
    current.open(std::move(obs));
    ActionBlock block;
    block.raw_text = s.at("action_block").at("raw_text").get<std::string>();
    for (const json& a : s.at("action_block").value("comments", json::array())) {
      block.comments.push_back(a.get<std::string>());
    }
    actions::ActionScript script;
    if (prompting::mode_from_string(mode) == prompting::Mode::MiniWob) {
      script = actions::parse_code_actions("```\n" + block.raw_text + "\n```");
      block.actions = actions::expand(script).actions;
    } else {
      block = actions::parse_m2w_action_block(block.raw_text);
    }
    current.close(std::move(block));
  }
  const json& pending = current_json.at("pending_observation");
  Observation obs;
  obs.text = pending.at("text").get<std::string>();
  obs.source =
      observation_source_from_string(pending.value("source", std::string("explicit")));
  obs.truncated = pending.value("truncated", false);
  current.open(std::move(obs));

  prompting::Mode prompt_mode = prompting::mode_from_string(mode);
  prompting::PromptBundle bundle =
      prompting::build_episode_prompt(prompting::build_system_prompt(prompt_mode), exemplars,
                                      current, budget, prompt_mode);
  out << messages_to_json(bundle.messages) << "\n";
  if (print_hash) {
    err << "prompt-hash " << prompt_hash_hex(bundle.messages) << "\n";
    err << "token-estimate " << bundle.token_estimate << "\n";
    for (const std::string& dropped : bundle.truncation_log) {
      err << "dropped-exemplar " << dropped << "\n";
    }
  }
  return 0;
}

int cmd_run(const fs::path& root, const std::string& env_name, const std::string& script,
            const std::string& memory_dir, const std::string& seeds_text, int max_steps,
            std::size_t budget, std::ostream& out, std::ostream& err) {
  print_effective_config(err, "run",
                         {{"budget", std::to_string(budget)},
                          {"env", env_name},
                          {"max-steps", std::to_string(max_steps)},
                          {"memory", memory_dir},
                          {"root", root.string()},
                          {"script", script},
                          {"seeds", seeds_text}});
  memory::MemoryIndex memory_index = memory::load(resolve(root, memory_dir));
  auto backend = make_backend("scripted", script, memory_index.dim(), root);
  auto environment = env::make_environment(env_name);
  eval::AgentConfig config;
  config.max_steps = max_steps;
  config.token_budget = budget;

  std::vector<long> seeds = parse_seed_range(seeds_text);
  std::size_t successes = 0;
  for (long seed : seeds) {
    eval::EpisodeResult result =
        eval::run_episode(*environment, config, memory_index, *backend, seed);
    out << "seed " << seed << ": " << (result.success ? "success" : "failure");
    if (!result.success && result.failure_reason) {
      out << " (" << *result.failure_reason << ")";
    }
    out << " steps=" << result.steps_taken << " action_calls=" << result.llm_calls << "\n";
    if (result.success) ++successes;
  }
  out << successes << "/" << seeds.size() << " success\n";
  return successes == seeds.size() ? 0 : 1;
}

int cmd_eval(const fs::path& root, const std::string& dataset_path,
             const std::string& memory_dir, const std::string& script,
             const std::string& out_path, int workers, std::size_t k_prev, std::size_t k_cur,
             std::size_t retrieve_n, std::ostream& out, std::ostream& err) {
  print_effective_config(err, "eval",
                         {{"dataset", dataset_path},
                          {"k-cur", std::to_string(k_cur)},
                          {"k-prev", std::to_string(k_prev)},
                          {"memory", memory_dir},
                          {"out", out_path},
                          {"retrieve-n", std::to_string(retrieve_n)},
                          {"root", root.string()},
                          {"script", script},
                          {"workers", std::to_string(workers)}});
  auto dataset = eval::load_static_dataset(resolve(root, dataset_path));
  memory::MemoryIndex memory_index = memory::load(resolve(root, memory_dir));
  auto backend = make_backend("scripted", script, memory_index.dim(), root);
  eval::AgentConfig config;
  config.mode = prompting::Mode::Mind2Web;
  config.k_prev = k_prev;
  config.k_cur = k_cur;
  config.retrieve_n = retrieve_n;
  eval::EvalReport report =
      eval::evaluate_static(dataset, config, memory_index, *backend, workers);
  if (!out_path.empty()) {
    std::ofstream file(resolve(root, out_path), std::ios::binary);
    if (!file) {
      err << "error: cannot write report " << out_path << "\n";
      return 3;
    }
    file << report.to_json() << "\n";
  }
  out << report.to_table();
  return 0;
}

int cmd_report(const fs::path& root, const std::string& in_path, std::ostream& out,
               std::ostream& err) {
  print_effective_config(err, "report", {{"in", in_path}, {"root", root.string()}});
  eval::EvalReport report = eval::EvalReport::from_json(read_file(resolve(root, in_path)));
  out << report.to_table();
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"webtrail: exemplar-memory web agent toolkit"};
  app.set_config("--config", "", "TOML config file (flags > env > file)");
  std::string root = ".";
  app.add_option("--root", root, "base directory for relative paths")->envname("WEBTRAIL_ROOT");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "embed demo metadata and build a memory directory");
  std::string ingest_demos, ingest_memory, ingest_mode = "miniwob", ingest_backend = "scripted",
              ingest_script;
  std::size_t ingest_dim = 64;
  ingest->add_option("--demos", ingest_demos, "demo pack JSONL")->required();
  ingest->add_option("--memory", ingest_memory, "memory output directory")->required();
  ingest->add_option("--mode", ingest_mode, "miniwob or mind2web")
      ->check(CLI::IsMember({"miniwob", "mind2web"}));
  ingest->add_option("--backend", ingest_backend, "scripted or http")
      ->check(CLI::IsMember({"scripted", "http"}));
  ingest->add_option("--script", ingest_script, "scripted backend YAML");
  ingest->add_option("--dim", ingest_dim, "hash embedding dimension (scripted, no table)");

  // memory-query
  auto* query = app.add_subcommand("memory-query", "retrieve nearest memory entries for a query");
  std::string query_memory, query_text, query_backend = "scripted", query_script;
  std::size_t query_n = 3, query_dim = 0;
  bool query_resolve = false;
  query->add_option("--memory", query_memory, "memory directory")->required();
  query->add_option("--query", query_text, "query metadata text")->required();
  query->add_option("--n", query_n, "number of results");
  query->add_flag("--resolve", query_resolve, "majority-vote the top-3 groups");
  query->add_option("--backend", query_backend)->check(CLI::IsMember({"scripted", "http"}));
  query->add_option("--script", query_script, "scripted backend YAML");
  query->add_option("--dim", query_dim, "hash embedding dimension override");

  // prompt
  auto* prompt = app.add_subcommand("prompt", "assemble a trajectory-as-exemplar prompt");
  std::string prompt_mode = "miniwob", prompt_exemplars, prompt_current;
  std::size_t prompt_budget = 16384;
  bool prompt_dry = false, prompt_hash_flag = false;
  prompt->add_option("--mode", prompt_mode)->check(CLI::IsMember({"miniwob", "mind2web"}));
  prompt->add_option("--exemplars", prompt_exemplars, "exemplar trajectories JSONL")->required();
  prompt->add_option("--current", prompt_current, "current trajectory JSON")->required();
  prompt->add_option("--budget", prompt_budget, "token budget");
  prompt->add_flag("--dry-run", prompt_dry, "emit the exact message-list JSON");
  prompt->add_flag("--print-hash", prompt_hash_flag, "print the prompt hash to stderr");

  // run
  auto* run_cmd = app.add_subcommand("run", "run closed-loop episodes against a built-in env");
  std::string run_env, run_script, run_memory, run_seeds = "0";
  int run_max_steps = 10;
  std::size_t run_budget = 16384;
  run_cmd->add_option("--env", run_env, "terminal | flight-search | form-fill")->required();
  run_cmd->add_option("--script", run_script, "scripted backend YAML")->required();
  run_cmd->add_option("--memory", run_memory, "memory directory")->required();
  run_cmd->add_option("--seeds", run_seeds, "seed or inclusive range a..b");
  run_cmd->add_option("--max-steps", run_max_steps, "action rounds per episode");
  run_cmd->add_option("--budget", run_budget, "token budget");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score a static dataset");
  std::string eval_dataset, eval_memory, eval_script, eval_out;
  int eval_workers = 1;
  std::size_t eval_k_prev = 3, eval_k_cur = 5, eval_retrieve_n = 3;
  eval_cmd->add_option("--dataset", eval_dataset, "StaticRecord JSONL")->required();
  eval_cmd->add_option("--memory", eval_memory, "memory directory")->required();
  eval_cmd->add_option("--script", eval_script, "scripted backend YAML")->required();
  eval_cmd->add_option("--out", eval_out, "report JSON output path");
  eval_cmd->add_option("--workers", eval_workers, "parallel workers");
  eval_cmd->add_option("--k-prev", eval_k_prev, "top-k for history observations");
  eval_cmd->add_option("--k-cur", eval_k_cur, "top-k for the current observation");
  eval_cmd->add_option("--retrieve-n", eval_retrieve_n, "memory entries to retrieve");

  // report
  auto* report_cmd = app.add_subcommand("report", "render a report JSON as a table");
  std::string report_in;
  report_cmd->add_option("--in", report_in, "report JSON path")->required();

  app.require_subcommand(1);

  try {
    std::vector<const char*> args(argv, argv + argc);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  fs::path root_path(root);
  try {
    if (*ingest) {
      return cmd_ingest(root_path, ingest_demos, ingest_memory, ingest_mode, ingest_backend,
                        ingest_script, ingest_dim, out, err);
    }
    if (*query) {
      return cmd_memory_query(root_path, query_memory, query_text, query_n, query_resolve,
                              query_backend, query_script, query_dim, out, err);
    }
    if (*prompt) {
      (void)prompt_dry;  // emitting the bundle is the only mode
      return cmd_prompt(root_path, prompt_mode, prompt_exemplars, prompt_current, prompt_budget,
                        prompt_hash_flag, out, err);
    }
    if (*run_cmd) {
      return cmd_run(root_path, run_env, run_script, run_memory, run_seeds, run_max_steps,
                     run_budget, out, err);
    }
    if (*eval_cmd) {
      return cmd_eval(root_path, eval_dataset, eval_memory, eval_script, eval_out, eval_workers,
                      eval_k_prev, eval_k_cur, eval_retrieve_n, out, err);
    }
    if (*report_cmd) {
      return cmd_report(root_path, report_in, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_backend_error(e) ? 4 : 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  err << "usage error: no subcommand\n";
  return 2;
}

}  // namespace webtrail::cli
