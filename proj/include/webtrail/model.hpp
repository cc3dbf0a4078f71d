#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webtrail {

enum class BenchmarkMode { Episodic, StaticDataset };

std::string to_string(BenchmarkMode mode);
BenchmarkMode benchmark_mode_from_string(std::string_view s);

/// A task to accomplish: natural-language goal plus benchmark-specific
/// metadata fields (kept in a deterministically ordered map).
struct TaskSpec {
  std::string id;
  std::string description;
  BenchmarkMode benchmark_mode = BenchmarkMode::Episodic;
  std::map<std::string, std::string> metadata_fields;

  bool operator==(const TaskSpec&) const = default;
};

/// Raw environment state: the full HTML document as observed.
struct RawState {
  std::string html;
  int step_index = 0;
  long seed = 0;

  bool operator==(const RawState&) const = default;
};

enum class ObservationSource {
  Explicit,
  ImplicitProgram,
  ZeroShotFallback,
  TopkFilter,
  RawPassthrough,
};

std::string to_string(ObservationSource source);
ObservationSource observation_source_from_string(std::string_view s);

/// Task-relevant abstraction of a raw state. `truncated` records that the
/// text was cut to fit the configured observation budget.
struct Observation {
  std::string text;
  ObservationSource source = ObservationSource::RawPassthrough;
  bool truncated = false;

  bool operator==(const Observation&) const = default;
};

enum class ActionKind {
  ClickXpath,
  Type,
  Press,
  ClickOption,
  MoveMouse,
  Click,
  TypeById,
  SelectById,
};

std::string to_string(ActionKind kind);
ActionKind action_kind_from_string(std::string_view s);

/// Key names accepted by Action::press().
const std::vector<std::string>& allowed_press_keys();

/// One primitive action. Construct through the factory functions, which
/// enforce the per-kind invariants (closed press-key set, non-negative ids).
struct Action {
  ActionKind kind = ActionKind::Click;
  std::string xpath;     // ClickXpath, ClickOption, MoveMouse
  std::string text;      // Type characters; TypeById/SelectById value
  std::string key;       // Press
  long element_id = -1;  // Click, TypeById, SelectById

  static Action click_xpath(std::string xpath);
  static Action type(std::string characters);
  static Action press(const std::string& key);
  static Action click_option(std::string xpath);
  static Action move_mouse(std::string xpath);
  static Action click(long element_id);
  static Action type_by_id(long element_id, std::string value);
  static Action select_by_id(long element_id, std::string value);

  bool operator==(const Action&) const = default;
};

/// The parsed result of one LLM action response: an ordered run of primitive
/// actions plus the verbatim text it was parsed from.
struct ActionBlock {
  std::vector<Action> actions;
  std::string raw_text;
  std::vector<std::string> comments;

  bool operator==(const ActionBlock&) const = default;
};

struct Step {
  Observation observation;
  ActionBlock action_block;

  bool operator==(const Step&) const = default;
};

enum class Outcome { Success, Failure, Unknown };

std::string to_string(Outcome outcome);
Outcome outcome_from_string(std::string_view s);

/// A task plus its ordered (observation, action-block) steps. Outcome stays
/// Unknown for live episodes until the environment reports a terminal state.
struct Trajectory {
  TaskSpec task;
  std::vector<Step> steps;
  Outcome outcome = Outcome::Unknown;

  bool operator==(const Trajectory&) const = default;
};

inline constexpr int kTrajectorySchemaVersion = 1;

/// Canonical single-line JSON record: sorted keys, no insignificant
/// whitespace, UTF-8 preserved. Stable across runs and platforms.
std::string serialize_trajectory(const Trajectory& trajectory);

/// Inverse of serialize_trajectory. Throws Error("malformed-record") with a
/// byte offset for unparseable input and Error("invariant-violation") naming
/// the offending field for schema violations.
Trajectory deserialize_trajectory(std::string_view record);

/// Count of Unicode code points in UTF-8 text (invalid bytes count as one).
std::size_t count_code_points(std::string_view text);

/// Truncates to at most `budget` code points, cutting on a boundary.
std::string truncate_code_points(std::string_view text, std::size_t budget);

/// Applies the character budget to observation text, setting `truncated`.
Observation apply_observation_budget(Observation observation, std::size_t budget);

}  // namespace webtrail
