#pragma once

#include <stdexcept>
#include <string>

namespace msk {

/// Invalid arguments or malformed inputs (dimension mismatch, non-finite
/// entries, off-manifold points, bad configuration).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure of an otherwise well-posed computation (eigensolver
/// non-convergence, ill-conditioned solve, overflow).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training residual blew past the divergence sentinel.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, int iteration)
      : NumericalError(what), iteration(iteration) {}
  int iteration;
};

}  // namespace msk
