#include "webtrail/model.hpp"

#include "webtrail/error.hpp"

#include <json.hpp>

#include <algorithm>

namespace webtrail {

using nlohmann::json;

std::string to_string(BenchmarkMode mode) {
  switch (mode) {
    case BenchmarkMode::Episodic: return "episodic";
    case BenchmarkMode::StaticDataset: return "static-dataset";
  }
  throw Error("invariant-violation", "unknown benchmark mode");
}

BenchmarkMode benchmark_mode_from_string(std::string_view s) {
  if (s == "episodic") return BenchmarkMode::Episodic;
  if (s == "static-dataset") return BenchmarkMode::StaticDataset;
  throw Error("invariant-violation", "benchmark_mode: unknown value '" + std::string(s) + "'");
}

std::string to_string(ObservationSource source) {
  switch (source) {
    case ObservationSource::Explicit: return "explicit";
    case ObservationSource::ImplicitProgram: return "implicit-program";
    case ObservationSource::ZeroShotFallback: return "zero-shot-fallback";
    case ObservationSource::TopkFilter: return "topk-filter";
    case ObservationSource::RawPassthrough: return "raw-passthrough";
  }
  throw Error("invariant-violation", "unknown observation source");
}

ObservationSource observation_source_from_string(std::string_view s) {
  if (s == "explicit") return ObservationSource::Explicit;
  if (s == "implicit-program") return ObservationSource::ImplicitProgram;
  if (s == "zero-shot-fallback") return ObservationSource::ZeroShotFallback;
  if (s == "topk-filter") return ObservationSource::TopkFilter;
  if (s == "raw-passthrough") return ObservationSource::RawPassthrough;
  throw Error("invariant-violation", "observation.source: unknown value '" + std::string(s) + "'");
}

std::string to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::ClickXpath: return "click_xpath";
    case ActionKind::Type: return "type";
    case ActionKind::Press: return "press";
    case ActionKind::ClickOption: return "click_option";
    case ActionKind::MoveMouse: return "move_mouse";
    case ActionKind::Click: return "click";
    case ActionKind::TypeById: return "type_by_id";
    case ActionKind::SelectById: return "select_by_id";
  }
  throw Error("invariant-violation", "unknown action kind");
}

ActionKind action_kind_from_string(std::string_view s) {
  if (s == "click_xpath") return ActionKind::ClickXpath;
  if (s == "type") return ActionKind::Type;
  if (s == "press") return ActionKind::Press;
  if (s == "click_option") return ActionKind::ClickOption;
  if (s == "move_mouse") return ActionKind::MoveMouse;
  if (s == "click") return ActionKind::Click;
  if (s == "type_by_id") return ActionKind::TypeById;
  if (s == "select_by_id") return ActionKind::SelectById;
  throw Error("invariant-violation", "action.kind: unknown value '" + std::string(s) + "'");
}

const std::vector<std::string>& allowed_press_keys() {
  static const std::vector<std::string> keys = {
      "enter",     "space",     "arrowleft", "arrowright", "backspace",
      "arrowup",   "arrowdown", "command+a", "command+c",  "command+v",
  };
  return keys;
}

Action Action::click_xpath(std::string xpath) {
  Action a;
  a.kind = ActionKind::ClickXpath;
  a.xpath = std::move(xpath);
  return a;
}

Action Action::type(std::string characters) {
  Action a;
  a.kind = ActionKind::Type;
  a.text = std::move(characters);
  return a;
}

Action Action::press(const std::string& key) {
  const auto& keys = allowed_press_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw Error("invariant-violation", "press key '" + key + "' not in the allowed key set");
  }
  Action a;
  a.kind = ActionKind::Press;
  a.key = key;
  return a;
}

Action Action::click_option(std::string xpath) {
  Action a;
  a.kind = ActionKind::ClickOption;
  a.xpath = std::move(xpath);
  return a;
}

Action Action::move_mouse(std::string xpath) {
  Action a;
  a.kind = ActionKind::MoveMouse;
  a.xpath = std::move(xpath);
  return a;
}

Action Action::click(long element_id) {
  if (element_id < 0) {
    throw Error("invariant-violation", "element_id must be non-negative");
  }
  Action a;
  a.kind = ActionKind::Click;
  a.element_id = element_id;
  return a;
}

Action Action::type_by_id(long element_id, std::string value) {
  if (element_id < 0) {
    throw Error("invariant-violation", "element_id must be non-negative");
  }
  Action a;
  a.kind = ActionKind::TypeById;
  a.element_id = element_id;
  a.text = std::move(value);
  return a;
}

Action Action::select_by_id(long element_id, std::string value) {
  if (element_id < 0) {
    throw Error("invariant-violation", "element_id must be non-negative");
  }
  Action a;
  a.kind = ActionKind::SelectById;
  a.element_id = element_id;
  a.text = std::move(value);
  return a;
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::Unknown: return "unknown";
  }
  throw Error("invariant-violation", "unknown outcome");
}

Outcome outcome_from_string(std::string_view s) {
  if (s == "success") return Outcome::Success;
  if (s == "failure") return Outcome::Failure;
  if (s == "unknown") return Outcome::Unknown;
  throw Error("invariant-violation", "outcome: unknown value '" + std::string(s) + "'");
}

namespace {

json action_to_json(const Action& a) {
  json j;
  j["kind"] = to_string(a.kind);
  switch (a.kind) {
    case ActionKind::ClickXpath:
    case ActionKind::ClickOption:
    case ActionKind::MoveMouse:
      j["xpath"] = a.xpath;
      break;
    case ActionKind::Type:
      j["characters"] = a.text;
      break;
    case ActionKind::Press:
      j["key"] = a.key;
      break;
    case ActionKind::Click:
      j["element_id"] = a.element_id;
      break;
    case ActionKind::TypeById:
    case ActionKind::SelectById:
      j["element_id"] = a.element_id;
      j["value"] = a.text;
      break;
  }
  return j;
}

const json& require_field(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error("invariant-violation", path + "." + key + ": missing");
  }
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& path) {
  const json& v = require_field(j, key, path);
  if (!v.is_string()) {
    throw Error("invariant-violation", path + "." + key + ": expected string");
  }
  return v.get<std::string>();
}

Action action_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw Error("invariant-violation", path + ": expected object");
  ActionKind kind = action_kind_from_string(require_string(j, "kind", path));
  auto require_id = [&]() {
    const json& v = require_field(j, "element_id", path);
    if (!v.is_number_integer()) {
      throw Error("invariant-violation", path + ".element_id: expected integer");
    }
    return v.get<long>();
  };
  try {
    switch (kind) {
      case ActionKind::ClickXpath: return Action::click_xpath(require_string(j, "xpath", path));
      case ActionKind::ClickOption: return Action::click_option(require_string(j, "xpath", path));
      case ActionKind::MoveMouse: return Action::move_mouse(require_string(j, "xpath", path));
      case ActionKind::Type: return Action::type(require_string(j, "characters", path));
      case ActionKind::Press: return Action::press(require_string(j, "key", path));
      case ActionKind::Click: return Action::click(require_id());
      case ActionKind::TypeById: return Action::type_by_id(require_id(), require_string(j, "value", path));
      case ActionKind::SelectById:
        return Action::select_by_id(require_id(), require_string(j, "value", path));
    }
  } catch (const Error& e) {
    if (e.kind() == "invariant-violation") {
      throw Error("invariant-violation", path + ": " + e.what());
    }
    throw;
  }
  throw Error("invariant-violation", path + ".kind: unknown");
}

}  // namespace

std::string serialize_trajectory(const Trajectory& trajectory) {
  if (trajectory.task.description.empty()) {
    throw Error("invariant-violation", "task.description: must be non-empty");
  }
  json j;
  j["schema_version"] = kTrajectorySchemaVersion;
  j["outcome"] = to_string(trajectory.outcome);
  json task;
  task["id"] = trajectory.task.id;
  task["description"] = trajectory.task.description;
  task["benchmark_mode"] = to_string(trajectory.task.benchmark_mode);
  task["metadata_fields"] = json::object();
  for (const auto& [k, v] : trajectory.task.metadata_fields) {
    task["metadata_fields"][k] = v;
  }
  j["task"] = std::move(task);
  j["steps"] = json::array();
  for (const Step& step : trajectory.steps) {
    json s;
    json obs;
    obs["text"] = step.observation.text;
    obs["source"] = to_string(step.observation.source);
    obs["truncated"] = step.observation.truncated;
    s["observation"] = std::move(obs);
    json block;
    block["raw_text"] = step.action_block.raw_text;
    block["comments"] = step.action_block.comments;
    block["actions"] = json::array();
    for (const Action& a : step.action_block.actions) {
      block["actions"].push_back(action_to_json(a));
    }
    s["action_block"] = std::move(block);
    j["steps"].push_back(std::move(s));
  }
  return j.dump();
}

Trajectory deserialize_trajectory(std::string_view record) {
  json j;
  try {
    j = json::parse(record);
  } catch (const json::parse_error& e) {
    throw Error("malformed-record",
                "not valid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw Error("malformed-record", "record is not a JSON object");

  const json& version = require_field(j, "schema_version", "record");
  if (!version.is_number_integer() || version.get<int>() != kTrajectorySchemaVersion) {
    throw Error("invariant-violation", "record.schema_version: expected " +
                                           std::to_string(kTrajectorySchemaVersion));
  }

  Trajectory t;
  t.outcome = outcome_from_string(require_string(j, "outcome", "record"));

  const json& task = require_field(j, "task", "record");
  t.task.id = require_string(task, "id", "task");
  t.task.description = require_string(task, "description", "task");
  if (t.task.description.empty()) {
    throw Error("invariant-violation", "task.description: must be non-empty");
  }
  t.task.benchmark_mode = benchmark_mode_from_string(require_string(task, "benchmark_mode", "task"));
  const json& fields = require_field(task, "metadata_fields", "task");
  if (!fields.is_object()) {
    throw Error("invariant-violation", "task.metadata_fields: expected object");
  }
  for (auto it = fields.begin(); it != fields.end(); ++it) {
    if (!it.value().is_string()) {
      throw Error("invariant-violation", "task.metadata_fields." + it.key() + ": expected string");
    }
    t.task.metadata_fields[it.key()] = it.value().get<std::string>();
  }

  const json& steps = require_field(j, "steps", "record");
  if (!steps.is_array()) throw Error("invariant-violation", "record.steps: expected array");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string path = "steps[" + std::to_string(i) + "]";
    const json& s = steps[i];
    if (!s.is_object()) throw Error("invariant-violation", path + ": expected object");
    Step step;
    const json& obs = require_field(s, "observation", path);
    step.observation.text = require_string(obs, "text", path + ".observation");
    step.observation.source =
        observation_source_from_string(require_string(obs, "source", path + ".observation"));
    const json& truncated = require_field(obs, "truncated", path + ".observation");
    if (!truncated.is_boolean()) {
      throw Error("invariant-violation", path + ".observation.truncated: expected boolean");
    }
    step.observation.truncated = truncated.get<bool>();

    const json& block = require_field(s, "action_block", path);
    step.action_block.raw_text = require_string(block, "raw_text", path + ".action_block");
    const json& comments = require_field(block, "comments", path + ".action_block");
    if (!comments.is_array()) {
      throw Error("invariant-violation", path + ".action_block.comments: expected array");
    }
    for (const json& c : comments) {
      if (!c.is_string()) {
        throw Error("invariant-violation", path + ".action_block.comments: expected strings");
      }
      step.action_block.comments.push_back(c.get<std::string>());
    }
    const json& actions = require_field(block, "actions", path + ".action_block");
    if (!actions.is_array()) {
      throw Error("invariant-violation", path + ".action_block.actions: expected array");
    }
    if (actions.empty()) {
      throw Error("invariant-violation", path + ".action_block.actions: must be non-empty");
    }
    for (std::size_t a = 0; a < actions.size(); ++a) {
      step.action_block.actions.push_back(
          action_from_json(actions[a], path + ".action_block.actions[" + std::to_string(a) + "]"));
    }
    t.steps.push_back(std::move(step));
  }
  return t;
}

std::size_t count_code_points(std::string_view text) {
  std::size_t count = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++count;  // skip UTF-8 continuation bytes
  }
  return count;
}

std::string truncate_code_points(std::string_view text, std::size_t budget) {
  std::size_t count = 0;
  std::size_t cut = text.size();
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if ((c & 0xC0) != 0x80) {
      if (count == budget) {
        cut = i;
        break;
      }
      ++count;
    }
  }
  return std::string(text.substr(0, cut));
}

Observation apply_observation_budget(Observation observation, std::size_t budget) {
  if (count_code_points(observation.text) > budget) {
    observation.text = truncate_code_points(observation.text, budget);
    observation.truncated = true;
  }
  return observation;
}

}  // namespace webtrail
