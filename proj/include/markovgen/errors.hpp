#pragma once

#include <stdexcept>

namespace markovgen {

// File cannot be opened, parsed, or written. Kept distinct from validation
// failures so callers can map the two to different exit codes.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace markovgen
