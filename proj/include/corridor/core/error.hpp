#pragma once

#include <stdexcept>
#include <string>

namespace corridor {

// Invalid user input: scenario documents, manifests, flags. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message) {}
};

// Failure during compute (non-finite loss, env failure). CLI exit code 3.
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace corridor
