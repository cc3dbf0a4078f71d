#include "webtrail/abstraction.hpp"

#include "webtrail/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

namespace webtrail::abstraction {

using nlohmann::json;

std::string to_string(PromptMode mode) {
  return mode == PromptMode::Explicit ? "explicit" : "implicit";
}

PromptMode prompt_mode_from_string(std::string_view s) {
  if (s == "explicit") return PromptMode::Explicit;
  if (s == "implicit") return PromptMode::Implicit;
  throw Error("invariant-violation", "abstraction mode: unknown value '" + std::string(s) + "'");
}

std::string abstraction_prompt_to_json(const AbstractionPrompt& prompt) {
  json j;
  j["mode"] = to_string(prompt.mode);
  j["instruction_preamble"] = prompt.instruction_preamble;
  j["explicit_pairs"] = json::array();
  for (const auto& [state, obs] : prompt.explicit_pairs) {
    json pair;
    pair["state"] = {{"html", state.html}, {"step_index", state.step_index}, {"seed", state.seed}};
    pair["observation"] = {{"text", obs.text},
                           {"source", to_string(obs.source)},
                           {"truncated", obs.truncated}};
    j["explicit_pairs"].push_back(std::move(pair));
  }
  j["implicit_pairs"] = json::array();
  for (const auto& [task, code] : prompt.implicit_pairs) {
    j["implicit_pairs"].push_back({{"task", task}, {"program", code}});
  }
  return j.dump();
}

AbstractionPrompt abstraction_prompt_from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("malformed-record", std::string("abstraction prompt: ") + e.what());
  }
  AbstractionPrompt prompt;
  prompt.mode = prompt_mode_from_string(j.at("mode").get<std::string>());
  prompt.instruction_preamble = j.value("instruction_preamble", std::string());
  for (const json& pair : j.value("explicit_pairs", json::array())) {
    RawState state;
    state.html = pair.at("state").at("html").get<std::string>();
    state.step_index = pair.at("state").value("step_index", 0);
    state.seed = pair.at("state").value("seed", 0L);
    Observation obs;
    obs.text = pair.at("observation").at("text").get<std::string>();
    obs.source = observation_source_from_string(
        pair.at("observation").value("source", std::string("explicit")));
    obs.truncated = pair.at("observation").value("truncated", false);
    prompt.explicit_pairs.emplace_back(std::move(state), std::move(obs));
  }
  for (const json& pair : j.value("implicit_pairs", json::array())) {
    prompt.implicit_pairs.emplace_back(pair.at("task").get<std::string>(),
                                       pair.at("program").get<std::string>());
  }
  if (prompt.mode == PromptMode::Explicit && prompt.explicit_pairs.empty()) {
    throw Error("invariant-violation", "explicit prompt needs explicit_pairs");
  }
  if (prompt.mode == PromptMode::Implicit && prompt.implicit_pairs.empty()) {
    throw Error("invariant-violation", "implicit prompt needs implicit_pairs");
  }
  return prompt;
}

const char* const kZeroShotFallbackTemplate =
    "Extract only the task-relevant information from the following webpage state for the task: "
    "{task}. State: {state}. Observation:";

std::string render_zero_shot_fallback(const TaskSpec& task, const RawState& state) {
  std::string out = kZeroShotFallbackTemplate;
  auto replace_once = [&](const std::string& needle, const std::string& value) {
    std::size_t at = out.find(needle);
    if (at != std::string::npos) out.replace(at, needle.size(), value);
  };
  replace_once("{task}", task.description);
  replace_once("{state}", state.html);
  return out;
}

std::string render_explicit_prompt(const AbstractionPrompt& prompt, const RawState& state) {
  if (prompt.mode != PromptMode::Explicit) {
    throw Error("invariant-violation", "abstract_explicit requires an explicit-mode prompt");
  }
  if (prompt.explicit_pairs.empty()) {
    throw Error("invariant-violation", "explicit prompt has no pairs");
  }
  std::string out;
  for (const auto& [pair_state, pair_obs] : prompt.explicit_pairs) {
    out += "State:\n" + pair_state.html + "\nObservation:\n" + pair_obs.text + "\n";
  }
  out += "State:\n" + state.html + "\nObservation:";
  return out;
}

namespace {

std::size_t heuristic_tokens(std::string_view text) { return (text.size() + 3) / 4; }

llm::CompletionRequest make_request(std::vector<ChatMessage> messages, const Config& config,
                                    std::vector<std::string> stop) {
  llm::CompletionRequest req;
  req.messages = std::move(messages);
  req.temperature = 0.0;
  req.stop = std::move(stop);
  req.max_output_tokens = config.max_output_tokens;
  req.model_id = config.model_id;
  return req;
}

}  // namespace

Observation abstract_explicit(const AbstractionPrompt& prompt, const RawState& state,
                              llm::Backend& backend, const Config& config) {
  if (state.html.empty()) {
    throw Error("invariant-violation", "abstract_explicit requires a non-empty state");
  }
  std::string text = render_explicit_prompt(prompt, state);
  if (heuristic_tokens(text) > config.token_budget) {
    throw Error("over-budget", "explicit abstraction prompt exceeds the token budget");
  }
  std::string completion = backend.complete(
      make_request({user_message(std::move(text))}, config, {"State:"}));
  Observation obs;
  obs.text = std::move(completion);
  obs.source = ObservationSource::Explicit;
  return apply_observation_budget(std::move(obs), config.observation_budget);
}

std::string render_generation_prompt(const AbstractionPrompt& prompt, const TaskSpec& task) {
  if (prompt.mode != PromptMode::Implicit) {
    throw Error("invariant-violation", "program generation requires an implicit-mode prompt");
  }
  if (prompt.implicit_pairs.empty()) {
    throw Error("invariant-violation", "implicit prompt has no pairs");
  }
  std::string out = prompt.instruction_preamble;
  out += "\n\nHere are some examples:\n\n";
  for (const auto& [pair_task, code] : prompt.implicit_pairs) {
    out += "Write code within three backticks '```' to: " + pair_task + "\nCode:\n```\n" + code +
           "\n```\n\n";
  }
  out += "Now, write code within three backticks '```' to: " + task.description + "\nCode:";
  return out;
}

program::Program generate_program(const AbstractionPrompt& prompt, const TaskSpec& task,
                                  llm::Backend& backend, const Config& config) {
  std::string text = render_generation_prompt(prompt, task);
  if (heuristic_tokens(text) > config.token_budget) {
    throw Error("over-budget", "program generation prompt exceeds the token budget");
  }
  std::string completion =
      backend.complete(make_request({user_message(std::move(text))}, config, {}));
  std::string code = program::extract_code_block(completion);
  return program::Program::parse(code, program::Program::Origin::LlmGenerated);
}

Observation execute_program(const program::Program& prog, const TaskSpec& task,
                            const RawState& state, const Config& config) {
  html::Document doc = html::Document::parse(state.html);
  Observation obs;
  obs.text = prog.execute(task, doc, config.program_step_limit);
  obs.source = ObservationSource::ImplicitProgram;
  return apply_observation_budget(std::move(obs), config.observation_budget);
}

ImplicitOutcome abstract_implicit(const AbstractionPrompt& prompt, const TaskSpec& task,
                                  const RawState& state, llm::Backend& backend,
                                  const Config& config) {
  if (prompt.mode != PromptMode::Implicit) {
    throw Error("invariant-violation", "abstract_implicit requires an implicit-mode prompt");
  }
  if (prompt.implicit_pairs.empty()) {
    throw Error("invariant-violation", "implicit prompt has no pairs");
  }
  ImplicitOutcome outcome;

  // memory-origin programs first
  for (const auto& [pair_task, code] : prompt.implicit_pairs) {
    try {
      program::Program prog = program::Program::parse(code, program::Program::Origin::Memory);
      outcome.observation = execute_program(prog, task, state, config);
      return outcome;
    } catch (const Error& e) {
      if (e.kind() == "dialect-parse-error" || e.kind() == "runtime-error" ||
          e.kind() == "parse-failure") {
        continue;
      }
      throw;
    }
  }

  // fresh generation
  try {
    outcome.generated = true;
    program::Program prog = generate_program(prompt, task, backend, config);
    outcome.observation = execute_program(prog, task, state, config);
    return outcome;
  } catch (const Error& e) {
    if (e.kind() != "no-code-block" && e.kind() != "dialect-parse-error" &&
        e.kind() != "runtime-error" && e.kind() != "parse-failure") {
      throw;  // llm transport failures propagate
    }
  }

  // zero-shot fallback
  std::string text = render_zero_shot_fallback(task, state);
  std::string completion =
      backend.complete(make_request({user_message(std::move(text))}, config, {"State:"}));
  outcome.used_fallback = true;
  Observation obs;
  obs.text = std::move(completion);
  obs.source = ObservationSource::ZeroShotFallback;
  outcome.observation = apply_observation_budget(std::move(obs), config.observation_budget);
  return outcome;
}

Observation raw_passthrough(const RawState& state, const Config& config) {
  Observation obs;
  obs.text = state.html;
  obs.source = ObservationSource::RawPassthrough;
  return apply_observation_budget(std::move(obs), config.observation_budget);
}

std::vector<long> topk_ids(std::span<const RankedElement> ranking, std::size_t k) {
  if (k == 0) throw Error("invariant-violation", "k must be positive");
  std::vector<const RankedElement*> sorted;
  sorted.reserve(ranking.size());
  for (const RankedElement& e : ranking) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const RankedElement* a, const RankedElement* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->element_id < b->element_id;
  });
  if (sorted.size() > k) sorted.resize(k);
  std::vector<long> ids;
  ids.reserve(sorted.size());
  for (const RankedElement* e : sorted) ids.push_back(e->element_id);
  return ids;
}

Observation filter_topk(std::span<const RankedElement> ranking, std::size_t k,
                        const Config& config) {
  if (ranking.empty()) throw Error("invariant-violation", "ranking must be non-empty");
  if (k == 0) throw Error("invariant-violation", "k must be positive");
  std::vector<const RankedElement*> sorted;
  sorted.reserve(ranking.size());
  for (const RankedElement& e : ranking) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const RankedElement* a, const RankedElement* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->element_id < b->element_id;
  });
  if (sorted.size() > k) sorted.resize(k);
  std::string text = "<html>";
  for (const RankedElement* e : sorted) {
    text += " " + e->snippet;
  }
  text += " </html>";
  Observation obs;
  obs.text = std::move(text);
  obs.source = ObservationSource::TopkFilter;
  return apply_observation_budget(std::move(obs), config.observation_budget);
}

double recall_at_k(std::span<const RecallRecord> dataset, std::size_t k) {
  if (dataset.empty()) throw Error("empty-dataset", "recall_at_k over zero records");
  if (k == 0) throw Error("invariant-violation", "k must be positive");
  std::size_t hits = 0;
  for (const RecallRecord& record : dataset) {
    auto ids = topk_ids(record.ranking, k);
    if (std::find(ids.begin(), ids.end(), record.target_element_id) != ids.end()) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

std::vector<std::string> tokenize_lower(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string element_snippet(const html::Node& node, long element_id) {
  std::string out = "<" + node.tag + " id=" + std::to_string(element_id);
  for (const auto& [name, value] : node.attrs) {
    if (name == "id") continue;
    std::string normalized = html::normalize_whitespace(value);
    if (normalized.empty()) continue;
    out += " " + normalized;
  }
  std::string text = node.own_text();
  if (text.empty()) {
    out += " />";
  } else {
    out += "> " + text + " </" + node.tag + ">";
  }
  return out;
}

std::vector<RankedElement> reference_rank(const RawState& state, const TaskSpec& task) {
  html::Document doc = html::Document::parse(state.html);

  static const std::set<std::string> kStructural = {"html",  "head", "body", "script",
                                                    "style", "meta", "link", "title"};
  struct Candidate {
    const html::Node* node;
    long element_id;
  };
  std::vector<Candidate> candidates;
  bool numeric_ids = false;
  std::set<long> seen_ids;
  auto numeric_id = [](const html::Node& n) -> std::optional<long> {
    const std::string* id = n.attr("id");
    if (id == nullptr || id->empty()) return std::nullopt;
    for (char c : *id) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    return std::stol(*id);
  };
  for (const html::Node* n : doc.elements()) {
    if (numeric_id(*n)) {
      numeric_ids = true;
      break;
    }
  }
  long ordinal = 0;
  for (const html::Node* n : doc.elements()) {
    if (numeric_ids) {
      auto id = numeric_id(*n);
      if (!id || !seen_ids.insert(*id).second) continue;  // skip non-ids and duplicates
      candidates.push_back({n, *id});
    } else {
      if (kStructural.count(n->tag) != 0) continue;
      candidates.push_back({n, ordinal++});
    }
  }

  auto task_tokens_vec = tokenize_lower(task.description);
  std::set<std::string> task_tokens(task_tokens_vec.begin(), task_tokens_vec.end());

  std::vector<RankedElement> ranking;
  ranking.reserve(candidates.size());
  for (const Candidate& candidate : candidates) {
    const html::Node& n = *candidate.node;
    auto text_tokens_vec = tokenize_lower(n.text_content());
    std::set<std::string> text_tokens(text_tokens_vec.begin(), text_tokens_vec.end());
    std::set<std::string> attr_tokens;
    for (const auto& [name, value] : n.attrs) {
      for (auto& tok : tokenize_lower(value)) attr_tokens.insert(std::move(tok));
    }
    double score = 0.0;
    for (const std::string& token : task_tokens) {
      if (text_tokens.count(token) != 0) score += 2.0;
      if (attr_tokens.count(token) != 0) score += 1.0;
      if (token == n.tag) score += 0.5;
    }
    RankedElement element;
    element.element_id = candidate.element_id;
    element.score = score;
    element.snippet = element_snippet(n, candidate.element_id);
    ranking.push_back(std::move(element));
  }
  // stable: ties keep document order
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const RankedElement& a, const RankedElement& b) { return a.score > b.score; });
  return ranking;
}

}  // namespace webtrail::abstraction
