#pragma once

#include <stdexcept>
#include <string>

namespace weakform {

// Error taxonomy mirrors the CLI exit codes: ValueError -> 2 (bad
// configuration or domain violation), NumericError -> 3 (solver or
// floating-point failure), IoError -> 4 (file problems).
struct ValueError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace weakform
