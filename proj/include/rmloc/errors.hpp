#pragma once

#include <stdexcept>

namespace rmloc {

// Bad configuration or arguments. CLI exit code 1.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unreadable files, write failures. CLI exit code 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally broken data files. CLI exit code 2.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A scenario that cannot produce samples (empty eligible set, impossible
// Tx placement). CLI exit code 3.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rmloc
