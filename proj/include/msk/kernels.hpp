#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "msk/linalg.hpp"

namespace msk {

/// Points (rows) with labels and generator provenance.
struct Dataset {
  Matrix points;  // n x d
  Vector labels;  // n
  std::string generator;
  std::uint64_t seed = 0;

  int n() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

struct LaplaceKernel {
  double bandwidth = 1.0;
};

struct GaussianKernel {
  double bandwidth = 1.0;
};

/// Infinite-width tangent kernel of a fully connected ReLU network with
/// `depth` hidden layers, evaluated by the arc-cosine recursion. Inputs must
/// lie on the unit sphere.
struct NtkReluKernel {
  int depth = 2;
  double bias_scale = 0.0;
};

/// Rank-(2R+1) kernel on the unit circle with explicit Fourier eigenfunctions
/// {1, sqrt2 cos k t, sqrt2 sin k t} and caller-supplied eigenvalues ordered
/// [lambda_0, lambda_1c, lambda_1s, ..., lambda_Rc, lambda_Rs]. This is the
/// ground-truth instrument for the spectrum-surgery consistency tests: its
/// remapped version is computable exactly.
struct MercerCircleKernel {
  int truncation = 32;
  std::vector<double> eigenvalues;  // size 2*truncation+1, all > 0

  /// lambda_0 = 1 and the (cos,sin) pair at frequency k both k^-4.
  static MercerCircleKernel default_spectrum(int truncation = 32);
};

using KernelSpec =
    std::variant<LaplaceKernel, GaussianKernel, NtkReluKernel, MercerCircleKernel>;

std::string kernel_name(const KernelSpec& spec);

double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& z);

enum class Normalization { none, by_n };

/// K_ij = k(x_i, x_j), divided by n when normalization = by_n. Exactly
/// symmetric by construction.
SymMatrix kernel_matrix(const KernelSpec& spec, const Dataset& data,
                        Normalization normalization);
SymMatrix kernel_matrix(const KernelSpec& spec, const Matrix& points,
                        Normalization normalization);

/// Cross-kernel block k(a_i, b_j) (no normalization).
Matrix kernel_cross(const KernelSpec& spec, const Matrix& a, const Matrix& b);

/// n x (2R+1) matrix whose column k holds eigenfunction Phi_k at every point,
/// scaled by 1/sqrt(n). Satisfies K = n * Phi diag(lambda) Phi^T for the
/// unnormalized kernel matrix (exact finite-rank identity).
Matrix mercer_feature_matrix(const MercerCircleKernel& spec, const Matrix& points);

}  // namespace msk
