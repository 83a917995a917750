#include "msk/msk.hpp"

#include <cmath>

#include "msk/rng.hpp"

namespace msk {

namespace {

int count_above_floor(const Vector& sorted_desc, double floor_rel, double* floor_out) {
  double lam_max = sorted_desc.size() ? std::max(0.0, sorted_desc(0)) : 0.0;
  double floor = floor_rel * lam_max;
  if (floor_out) *floor_out = floor;
  int kept = 0;
  while (kept < sorted_desc.size() && sorted_desc(kept) >= floor && sorted_desc(kept) > 0.0) {
    ++kept;
  }
  return kept;
}

}  // namespace

SpectralDecomposition remap_spectrum(const SpectralDecomposition& d, const SpectrumMap& g,
                                     double floor_rel) {
  int kept = count_above_floor(d.eigenvalues, floor_rel, nullptr);
  SpectralDecomposition out = d;
  out.eigenvalues = g.apply(d.eigenvalues, kept);
  for (int i = 0; i < kept; ++i) {
    if (out.eigenvalues(i) < 0.0) {
      throw InputError("invalid spectrum map: g(" + std::to_string(d.eigenvalues(i)) +
                       ") = " + std::to_string(out.eigenvalues(i)) + " < 0");
    }
  }
  return out;
}

SymMatrix build_msk_matrix(const SymMatrix& K, const SpectrumMap& g, double floor_rel) {
  SpectralDecomposition d = remap_spectrum(eigh(K), g, floor_rel);
  return SymMatrix::from_dense(d.reconstruct());
}

namespace {

Vector predict_exact_joint(const KernelSpec& spec, const Dataset& train,
                           const Matrix& test_points, const SpectrumMap& g, double gamma) {
  const int n = train.n();
  const int m = static_cast<int>(test_points.rows());
  Vector out(m);
  Matrix joint(n + 1, train.dim());
  joint.topRows(n) = train.points;

  // Each test point gets its own joint decomposition; they are independent.
  std::vector<Matrix> joints(m, joint);
  for (int t = 0; t < m; ++t) joints[t].row(n) = test_points.row(t);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < m; ++t) {
    Matrix Kj = kernel_matrix(spec, joints[t], Normalization::none).dense() /
                static_cast<double>(n);
    SpectralDecomposition d = remap_spectrum(eigh(SymMatrix::from_symmetric(Kj)), g);
    Matrix Kg = d.reconstruct();
    SymMatrix block = SymMatrix::from_dense(Kg.topLeftCorner(n, n));
    Vector row = Kg.row(n).head(n);
    Vector alpha = pseudo_solve(eigh(block), train.labels, gamma);
    out(t) = row.dot(alpha);
  }
  return out;
}

Vector predict_nystrom(const KernelSpec& spec, const Dataset& train,
                       const Matrix& test_points, const SpectrumMap& g, double gamma) {
  const int n = train.n();
  Matrix Kt = kernel_matrix(spec, train.points, Normalization::none).dense() /
              static_cast<double>(n);
  SpectralDecomposition d = eigh(SymMatrix::from_symmetric(Kt));
  SpectralDecomposition dg = remap_spectrum(d, g);

  double floor;
  int kept = count_above_floor(d.eigenvalues, kDefaultFloorRel, &floor);

  // Nystrom extension of the remapped kernel to a test point:
  // kg(x, .) = V diag(g(lam)/lam) V^T k(x, .), below-floor directions dropped.
  Vector ratio = Vector::Zero(n);
  for (int i = 0; i < kept; ++i) ratio(i) = dg.eigenvalues(i) / d.eigenvalues(i);

  Vector alpha = pseudo_solve(dg, train.labels, gamma);
  Matrix cross = kernel_cross(spec, test_points, train.points) / static_cast<double>(n);
  Matrix ext = cross * d.eigenvectors * ratio.asDiagonal() * d.eigenvectors.transpose();
  return ext * alpha;
}

}  // namespace

Vector msk_predict(const KernelSpec& spec, const Dataset& train, const Matrix& test_points,
                   const SpectrumMap& g, double gamma, PredictMode mode) {
  if (gamma < 0.0) throw InputError("msk_predict: gamma must be nonnegative");
  if (test_points.cols() != train.dim()) {
    throw InputError("msk_predict: test point dimension mismatch");
  }
  if (mode == PredictMode::exact_joint) {
    return predict_exact_joint(spec, train, test_points, g, gamma);
  }
  return predict_nystrom(spec, train, test_points, g, gamma);
}

std::vector<ConsistencyRow> msk_consistency_sweep(const MercerCircleKernel& spec,
                                                  const SpectrumMap& g,
                                                  const std::vector<int>& sizes,
                                                  const std::vector<std::uint64_t>& seeds) {
  if (!g.pointwise()) {
    throw InputError("msk_consistency_sweep: needs a pointwise map (the exact side "
                     "applies g to the true eigenvalues)");
  }
  const int R = spec.truncation;
  Vector true_lam(2 * R + 1);
  for (int i = 0; i < 2 * R + 1; ++i) true_lam(i) = spec.eigenvalues[i];
  Vector g_lam(2 * R + 1);
  for (int i = 0; i < 2 * R + 1; ++i) g_lam(i) = g.apply_scalar(true_lam(i));

  const int ns = static_cast<int>(sizes.size());
  const int nseed = static_cast<int>(seeds.size());
  Matrix dist(ns, nseed);

#pragma omp parallel for collapse(2) schedule(dynamic)
  for (int si = 0; si < ns; ++si) {
    for (int vi = 0; vi < nseed; ++vi) {
      const int n = sizes[si];
      rng::Stream stream(rng::mix(rng::hash_string("msk-consistency"),
                                  rng::mix(seeds[vi], static_cast<std::uint64_t>(n))));
      Matrix pts(n, 2);
      for (int i = 0; i < n; ++i) {
        double theta = 2.0 * M_PI * stream.uniform();
        pts(i, 0) = std::cos(theta);
        pts(i, 1) = std::sin(theta);
      }
      KernelSpec ks = spec;
      SymMatrix K = kernel_matrix(ks, pts, Normalization::by_n);
      SymMatrix Kg_hat = build_msk_matrix(K, g);
      // Exact remapped kernel matrix: finite rank, 1/n carried by the features.
      Matrix phi = mercer_feature_matrix(spec, pts);
      SymMatrix Kg_exact =
          SymMatrix::from_dense(phi * g_lam.asDiagonal() * phi.transpose());
      dist(si, vi) = frobenius_distance(Kg_hat, Kg_exact);
    }
  }

  std::vector<ConsistencyRow> rows(ns);
  for (int si = 0; si < ns; ++si) {
    double mean = dist.row(si).mean();
    double var = (dist.row(si).array() - mean).square().sum() /
                 std::max(1, nseed - 1);
    rows[si] = ConsistencyRow{sizes[si], mean, std::sqrt(var)};
  }
  return rows;
}

}  // namespace msk
