#include "msk/linalg.hpp"

#include <cmath>
#include <string>

namespace msk {

namespace {

void require_finite(const Matrix& a, const char* who) {
  if (!a.allFinite()) {
    throw InputError(std::string(who) + ": matrix has non-finite entries");
  }
}

// Largest-|entry| component of each column made nonnegative; ties broken by
// lowest row index.
void fix_signs(Matrix& v) {
  for (int j = 0; j < v.cols(); ++j) {
    int imax = 0;
    double best = 0.0;
    for (int i = 0; i < v.rows(); ++i) {
      double m = std::abs(v(i, j));
      if (m > best) {
        best = m;
        imax = i;
      }
    }
    if (v(imax, j) < 0.0) v.col(j) = -v.col(j);
  }
}

}  // namespace

SymMatrix SymMatrix::from_dense(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw InputError("SymMatrix: matrix must be square, got " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  require_finite(a, "SymMatrix");
  Matrix s = 0.5 * (a + a.transpose());
  return SymMatrix(std::move(s));
}

SymMatrix SymMatrix::from_symmetric(Matrix a) {
  if (a.rows() != a.cols()) {
    throw InputError("SymMatrix: matrix must be square");
  }
  require_finite(a, "SymMatrix");
  return SymMatrix(std::move(a));
}

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

SpectralDecomposition eigh(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.dense());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigh: eigensolver failed to converge on " +
                         std::to_string(a.n()) + "x" + std::to_string(a.n()) +
                         " matrix");
  }
  SpectralDecomposition d;
  const int n = a.n();
  d.eigenvalues = solver.eigenvalues().reverse();
  d.eigenvectors = solver.eigenvectors().rowwise().reverse();
  (void)n;
  fix_signs(d.eigenvectors);
  return d;
}

Vector solve_spd(const SymMatrix& a, const Vector& b, double ridge) {
  if (b.size() != a.n()) {
    throw InputError("solve_spd: vector length " + std::to_string(b.size()) +
                     " does not match matrix dimension " + std::to_string(a.n()));
  }
  if (ridge < 0.0) throw InputError("solve_spd: ridge must be nonnegative");
  Matrix shifted = a.dense();
  shifted.diagonal().array() += ridge;

  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() == Eigen::Success) {
    Vector x = llt.solve(b);
    // one step of iterative refinement
    x += llt.solve(b - shifted * x);
    double res = (shifted * x - b).norm();
    if (res <= 1e-8 * std::max(1.0, b.norm())) return x;
  }
  // Not positive definite (or too ill-conditioned for the residual contract):
  // report the offending eigenvalue.
  Eigen::SelfAdjointEigenSolver<Matrix> es(shifted, Eigen::EigenvaluesOnly);
  double lam_min = es.eigenvalues().minCoeff();
  throw NumericalError("solve_spd: matrix ill-conditioned beyond ridge repair "
                       "(smallest eigenvalue " + std::to_string(lam_min) + ")");
}

double frobenius_distance(const SymMatrix& a, const SymMatrix& b) {
  if (a.n() != b.n()) {
    throw InputError("frobenius_distance: dimension mismatch " +
                     std::to_string(a.n()) + " vs " + std::to_string(b.n()));
  }
  return (a.dense() - b.dense()).norm();
}

SpectralDecomposition clamp_floor(const SpectralDecomposition& d, double eps_lambda) {
  SpectralDecomposition out = d;
  if (out.n() == 0) return out;
  double floor = eps_lambda;
  if (floor < 0.0) floor = kDefaultFloorRel * std::max(0.0, out.eigenvalues(0));
  for (int i = 0; i < out.n(); ++i) {
    if (out.eigenvalues(i) < floor) out.eigenvalues(i) = floor;
  }
  return out;
}

Vector pseudo_solve(const SpectralDecomposition& d, const Vector& b, double gamma,
                    double floor_rel) {
  if (b.size() != d.n()) {
    throw InputError("pseudo_solve: dimension mismatch");
  }
  double lam_max = d.n() ? std::abs(d.eigenvalues(0)) + gamma : 0.0;
  double floor = floor_rel * std::max(lam_max, 0.0);
  Vector proj = d.eigenvectors.transpose() * b;
  for (int i = 0; i < d.n(); ++i) {
    double lam = d.eigenvalues(i) + gamma;
    proj(i) = (lam > floor && lam > 0.0) ? proj(i) / lam : 0.0;
  }
  return d.eigenvectors * proj;
}

}  // namespace msk
