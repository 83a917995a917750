#pragma once

#include <cstdint>
#include <vector>

#include "msk/kernels.hpp"
#include "msk/spectrum_map.hpp"

namespace msk {

/// g applied through the eigendecomposition of K: returns V diag(g(lam)) V^T.
/// Eigenvalues below floor_rel * lambda_max pass through unchanged (noise
/// directions must not be amplified by maps like Shift that lift zero).
/// Throws InputError if g maps any kept eigenvalue to a negative value.
SymMatrix build_msk_matrix(const SymMatrix& K, const SpectrumMap& g,
                           double floor_rel = kDefaultFloorRel);

/// Same surgery but on an existing decomposition; returns the decomposition
/// with remapped eigenvalues (shared eigenvectors).
SpectralDecomposition remap_spectrum(const SpectralDecomposition& d, const SpectrumMap& g,
                                     double floor_rel = kDefaultFloorRel);

enum class PredictMode {
  /// Per test point, remap the (n+1)-point joint kernel matrix and read off
  /// the prediction row. O((n+1)^3) per test point; the construction the
  /// consistency theorem is stated for.
  exact_joint,
  /// One decomposition of the train block plus Nystrom extension of the
  /// remapped kernel to test points. Fast, approximate.
  nystrom_fast,
};

/// Kernel-regression prediction with the remapped kernel:
/// f(x) = [Kg]_{n+1,1:n} ([Kg]_{1:n,1:n} + gamma I)^{-1} y, joint matrix
/// 1/n-normalized (n = train size). gamma = 0 routes through the eigenvalue-
/// floored pseudo-solve.
Vector msk_predict(const KernelSpec& spec, const Dataset& train, const Matrix& test_points,
                   const SpectrumMap& g, double gamma,
                   PredictMode mode = PredictMode::exact_joint);

struct ConsistencyRow {
  int n = 0;
  double mean_frobenius = 0.0;
  double std_frobenius = 0.0;
};

/// For each n: sample points on the circle, build the empirical remapped
/// matrix and the exact finite-rank remapped kernel matrix, and record their
/// Frobenius distance averaged over seeds. Requires a pointwise map (the
/// exact side applies g to the true eigenvalues).
std::vector<ConsistencyRow> msk_consistency_sweep(const MercerCircleKernel& spec,
                                                  const SpectrumMap& g,
                                                  const std::vector<int>& sizes,
                                                  const std::vector<std::uint64_t>& seeds);

}  // namespace msk
