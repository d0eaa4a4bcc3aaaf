#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ceqln {

enum class ErrorKind {
  kConfig,          // malformed network/config, shape mismatch
  kInput,           // unreadable or unparsable input file
  kInfeasible,      // no point satisfies the constraints
  kRedundant,       // linearly dependent but consistent constraint rows
  kIllConditioned,  // KKT system numerically singular
  kNonConvergence,  // active-set iteration cap hit
  kInitialization,  // every random restart was infeasible
  kNumerical,       // NaN/Inf encountered during training
  kDegenerateGradient,
};

std::string_view to_string(ErrorKind kind);

// Process exit status for the command line tool:
// 0 success, 2 input error, 3 infeasibility/initialization, 4 numerical failure.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  std::optional<int> constraint_set;
  std::optional<double> condition_estimate;
  std::optional<int> epoch;
  std::optional<std::size_t> byte_offset;
  std::string file;
  std::string field;

 private:
  ErrorKind kind_;
};

}  // namespace ceqln
