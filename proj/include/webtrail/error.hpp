#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace webtrail {

// All recoverable failures carry a stable machine-readable kind (e.g.
// "dimension-mismatch", "malformed-record") next to the human message.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

}  // namespace webtrail
