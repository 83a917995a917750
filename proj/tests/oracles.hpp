#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <Eigen/Dense>
#include <cmath>

#include "msk/linalg.hpp"
#include "msk/rng.hpp"

namespace oracles {

using msk::Matrix;
using msk::Vector;

inline Matrix random_gaussian(int rows, int cols, std::uint64_t seed) {
  msk::rng::Stream s(seed);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = s.normal();
  return m;
}

inline Matrix random_orthogonal(int n, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(random_gaussian(n, n, seed));
  Matrix q = qr.householderQ();
  return q;
}

/// Symmetric matrix with a prescribed spectrum and random eigenbasis.
inline Matrix with_spectrum(const Vector& lambda, std::uint64_t seed) {
  Matrix q = random_orthogonal(static_cast<int>(lambda.size()), seed);
  return q * lambda.asDiagonal() * q.transpose();
}

/// Well-conditioned random SPD matrix (Wishart plus a diagonal shift).
inline Matrix random_spd(int n, std::uint64_t seed, double shift = 0.1) {
  Matrix g = random_gaussian(n, 2 * n, seed);
  Matrix a = g * g.transpose() / (2.0 * n);
  a.diagonal().array() += shift;
  return a;
}

/// Frobenius distance by the definition (elementwise double loop).
inline double frobenius_brute(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      double d = a(i, j) - b(i, j);
      acc += d * d;
    }
  return std::sqrt(acc);
}

/// Norm sequence of explicit dense powers (I - eta M)^t y.
inline std::vector<double> dense_power_norms(const Matrix& m, const Vector& y, double eta,
                                             int T) {
  Matrix step = Matrix::Identity(m.rows(), m.cols()) - eta * m;
  Vector cur = y;
  std::vector<double> out;
  out.push_back(cur.norm());
  for (int t = 1; t <= T; ++t) {
    cur = step * cur;
    out.push_back(cur.norm());
  }
  return out;
}

/// Central finite difference of f along coordinate i of a flat parameter
/// vector, for a callable f(params) -> double.
template <typename F>
double central_difference(F&& f, Vector params, int i, double h) {
  double orig = params(i);
  params(i) = orig + h;
  double up = f(params);
  params(i) = orig - h;
  double dn = f(params);
  params(i) = orig;
  return (up - dn) / (2.0 * h);
}

}  // namespace oracles
