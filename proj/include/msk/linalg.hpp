#pragma once

#include <Eigen/Dense>

#include "msk/errors.hpp"

namespace msk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction symmetrizes ((A+A^T)/2) and rejects
/// non-finite entries, so downstream code can rely on exact symmetry.
class SymMatrix {
 public:
  static SymMatrix from_dense(const Matrix& a);
  /// Caller guarantees symmetry (e.g. V D V^T products); entries checked finite.
  static SymMatrix from_symmetric(Matrix a);

  int n() const { return static_cast<int>(a_.rows()); }
  const Matrix& dense() const { return a_; }
  double operator()(int i, int j) const { return a_(i, j); }

 private:
  explicit SymMatrix(Matrix a) : a_(std::move(a)) {}
  Matrix a_;
};

/// Eigendecomposition with eigenvalues sorted descending, column-orthonormal
/// eigenvectors, and a deterministic sign convention (largest-|entry| of each
/// column is nonnegative).
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  int n() const { return static_cast<int>(eigenvalues.size()); }
  Matrix reconstruct() const;
};

SpectralDecomposition eigh(const SymMatrix& a);

/// Solve (A + ridge I) x = b for SPD A + ridge I.
/// Residual guaranteed <= 1e-8 ||b|| or a NumericalError reports the smallest
/// eigenvalue of the shifted matrix.
Vector solve_spd(const SymMatrix& a, const Vector& b, double ridge);

double frobenius_distance(const SymMatrix& a, const SymMatrix& b);

/// Copy of `d` with eigenvalues below eps_lambda raised to eps_lambda.
/// Default floor is 1e-12 * lambda_max. Near-singular kernel matrices need
/// this before anything divides by an eigenvalue.
SpectralDecomposition clamp_floor(const SpectralDecomposition& d, double eps_lambda = -1.0);

/// Relative floor used throughout when none is given explicitly.
inline constexpr double kDefaultFloorRel = 1e-12;

/// x = (A + gamma I)^+ b through an existing decomposition: directions whose
/// eigenvalue (+gamma) falls below floor_rel * lambda_max are dropped, not
/// clamped up.
Vector pseudo_solve(const SpectralDecomposition& d, const Vector& b, double gamma,
                    double floor_rel = kDefaultFloorRel);

}  // namespace msk
