#pragma once

#include "webtrail/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace webtrail::env {

/// A deterministic episodic environment over HTML states. reset(seed) picks
/// the scenario; apply() advances the state machine one primitive action.
class Environment {
public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual RawState reset(long seed) = 0;
  virtual RawState apply(const Action& action) = 0;
  virtual RawState current_state() const = 0;
  virtual TaskSpec task() const = 0;
  virtual bool succeeded() const = 0;
};

/// Built-in environments: "terminal", "flight-search", "form-fill".
/// Throws Error("unknown-environment") otherwise.
std::unique_ptr<Environment> make_environment(const std::string& name);

const std::vector<std::string>& environment_names();

}  // namespace webtrail::env
