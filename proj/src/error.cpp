#include "ceqln/error.hpp"

namespace ceqln {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return "config_error";
    case ErrorKind::kInput:
      return "input_error";
    case ErrorKind::kInfeasible:
      return "infeasible";
    case ErrorKind::kRedundant:
      return "redundant_constraints";
    case ErrorKind::kIllConditioned:
      return "ill_conditioned";
    case ErrorKind::kNonConvergence:
      return "nonconvergence";
    case ErrorKind::kInitialization:
      return "initialization_failed";
    case ErrorKind::kNumerical:
      return "numerical_failure";
    case ErrorKind::kDegenerateGradient:
      return "degenerate_gradient";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInput:
      return 2;
    case ErrorKind::kInfeasible:
    case ErrorKind::kRedundant:
    case ErrorKind::kInitialization:
      return 3;
    case ErrorKind::kIllConditioned:
    case ErrorKind::kNonConvergence:
    case ErrorKind::kNumerical:
    case ErrorKind::kDegenerateGradient:
      return 4;
  }
  return 4;
}

}  // namespace ceqln
