#pragma once

#include <stdexcept>
#include <string>

namespace shadowlab {

/// Input violates a precondition (bad tolerance, wrong range, non-Hermitian...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Refusal to run an instance that exceeds a configured size budget
/// (statevector amplitudes, enumeration terms, branch counts).
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No parameters satisfy the planner constraints below the configured ceiling.
class InfeasiblePlan : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace shadowlab
