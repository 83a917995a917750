#include "msk/precond.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "msk/rng.hpp"

namespace msk {

Preconditioner Preconditioner::identity(int n) {
  Preconditioner s;
  s.n_ = n;
  s.vectors_ = Matrix::Zero(n, 0);
  s.coefficients_ = Vector::Zero(0);
  s.ratios_ = Vector::Zero(0);
  s.source_spectrum_ = Vector::Zero(0);
  return s;
}

Vector Preconditioner::apply(const Vector& r) const {
  if (r.size() != n_) throw InputError("Preconditioner::apply: dimension mismatch");
  if (k() == 0) return r;
  return r - vectors_ * coefficients_.cwiseProduct(vectors_.transpose() * r);
}

Vector Preconditioner::apply_sqrt(const Vector& r) const {
  if (r.size() != n_) throw InputError("Preconditioner::apply_sqrt: dimension mismatch");
  if (k() == 0) return r;
  Vector c = ratios_.array().sqrt().matrix();
  c = Vector::Ones(k()) - c;
  return r - vectors_ * c.cwiseProduct(vectors_.transpose() * r);
}

Vector Preconditioner::apply_inverse(const Vector& r) const {
  if (r.size() != n_) throw InputError("Preconditioner::apply_inverse: dimension mismatch");
  if (k() == 0) return r;
  Vector c = Vector::Ones(k()) - ratios_.cwiseInverse();
  return r - vectors_ * c.cwiseProduct(vectors_.transpose() * r);
}

Matrix Preconditioner::dense() const {
  Matrix s = Matrix::Identity(n_, n_);
  if (k() > 0) {
    s -= vectors_ * coefficients_.asDiagonal() * vectors_.transpose();
  }
  return s;
}

Preconditioner build_preconditioner(const SpectralDecomposition& decomp,
                                    const SpectrumMap& g, int k, bool include_all) {
  const int n = decomp.n();
  if (k < 0) throw InputError("build_preconditioner: k must be >= 0");
  if (include_all) {
    if (k != n) throw InputError("build_preconditioner: include_all requires k = n");
  } else if (k >= n) {
    throw InputError("build_preconditioner: k must be < n (got k = " + std::to_string(k) +
                     ", n = " + std::to_string(n) + ")");
  }
  if (k < n && !(decomp.eigenvalues(k) > 0.0) && !include_all) {
    throw InputError("build_preconditioner: lambda_{k+1} must be positive after floor");
  }
  if (include_all && !(decomp.eigenvalues(n - 1) > 0.0)) {
    throw InputError("build_preconditioner: spectrum must be positive for k = n");
  }

  Vector mapped = g.apply(decomp.eigenvalues, k);
  Preconditioner s;
  s.n_ = n;
  s.vectors_ = decomp.eigenvectors.leftCols(k);
  s.coefficients_ = Vector(k);
  s.ratios_ = Vector(k);
  for (int i = 0; i < k; ++i) {
    double lam = decomp.eigenvalues(i);
    if (!(lam > 0.0)) {
      throw InputError("build_preconditioner: modified eigenvalue " + std::to_string(i + 1) +
                       " is not positive");
    }
    if (!(mapped(i) > 0.0)) {
      throw InputError("build_preconditioner: g(lambda_" + std::to_string(i + 1) +
                       ") = " + std::to_string(mapped(i)) + " must be positive");
    }
    s.ratios_(i) = mapped(i) / lam;
    s.coefficients_(i) = 1.0 - s.ratios_(i);
  }
  int keep = std::min(k + 1, n);
  s.source_spectrum_ = decomp.eigenvalues.head(keep);
  return s;
}

Vector ks_spectrum(const SpectralDecomposition& decomp, const SpectrumMap& g, int k) {
  const int n = decomp.n();
  if (k < 0 || k > n) throw InputError("ks_spectrum: k out of range");
  if (k < n && !(decomp.eigenvalues(k) > 0.0)) {
    throw InputError("ks_spectrum: lambda_{k+1} must be positive");
  }
  return g.apply(decomp.eigenvalues, k);
}

double max_stable_lr(const Vector& spectrum) {
  if (spectrum.size() == 0) throw InputError("max_stable_lr: empty spectrum");
  double lo = spectrum.minCoeff(), hi = spectrum.maxCoeff();
  if (!(lo > 0.0)) {
    throw InputError("max_stable_lr: spectrum must be positive (min = " +
                     std::to_string(lo) + ")");
  }
  return 2.0 / (lo + hi);
}

std::vector<double> linear_dynamics(const Vector& spectrum, const Vector& projections,
                                    double eta0, int T) {
  if (spectrum.size() != projections.size()) {
    throw InputError("linear_dynamics: spectrum/projection length mismatch");
  }
  Vector sq = projections.array().square();
  Vector fac = (1.0 - eta0 * spectrum.array()).square();
  std::vector<double> norms(T + 1);
  for (int t = 0; t <= T; ++t) {
    norms[t] = std::sqrt(sq.sum());
    sq = sq.cwiseProduct(fac);
  }
  return norms;
}

namespace {

std::vector<std::vector<int>> sgd_schedule(int n, int batch, std::uint64_t seed) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng::Stream stream(rng::mix(rng::hash_string("sgd-schedule"), seed));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(stream.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch) {
    int end = std::min(n, start + batch);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

}  // namespace

std::pair<MlpState, TrainTrace> pgd_train(const MlpState& net, const Matrix& X,
                                          const Vector& y, const Preconditioner& S,
                                          double eta0, const TrainOptions& options) {
  const int n = static_cast<int>(X.rows());
  if (y.size() != n) throw InputError("pgd_train: label length mismatch");
  if (S.n() != n) throw InputError("pgd_train: preconditioner built for different n");
  if (!(eta0 > 0.0)) throw InputError("pgd_train: eta0 must be positive");
  if (!(options.eps > 0.0)) throw InputError("pgd_train: eps must be positive");

  const double eta = eta0 / net.config.width;
  const auto t_start = std::chrono::steady_clock::now();

  MlpState work = net;
  Preconditioner precond = S;
  Vector f0;
  if (options.center_at_init) f0 = mlp_forward(net, X);

  std::vector<std::vector<int>> batches;
  if (options.sgd_batch > 0) batches = sgd_schedule(n, options.sgd_batch, options.sgd_schedule_seed);

  TrainTrace trace;
  trace.eta0 = eta0;
  trace.residual_norms.reserve(std::min(options.max_iter + 1, 1 << 20));

  double r0_norm = -1.0;
  for (int t = 0;; ++t) {
    ForwardCache cache = mlp_forward_cached(work, X);
    Vector r = cache.outputs - y;
    if (options.center_at_init) r -= f0;
    double rn = r.norm();
    trace.residual_norms.push_back(rn);
    if (options.tracked_directions) {
      trace.projections.push_back(options.tracked_directions->transpose() * r);
    }
    if (t == 0) r0_norm = rn;
    if (!trace.iterations_to_threshold && rn <= options.eps) {
      trace.iterations_to_threshold = t;
    }
    if (rn > options.divergence_factor * std::max(r0_norm, 1e-300)) {
      throw DivergenceError("pgd_train: residual " + std::to_string(rn) + " exceeded " +
                            std::to_string(options.divergence_factor) +
                            " x initial at iteration " + std::to_string(t), t);
    }
    if (trace.iterations_to_threshold || t == options.max_iter) break;

    if (options.refresh && options.refresh->every > 0 && t > 0 &&
        t % options.refresh->every == 0) {
      SpectralDecomposition d = eigh(empirical_ntk(work, X));
      precond = build_preconditioner(d, options.refresh->g, options.refresh->k);
    }

    Vector weights;
    if (options.sgd_batch > 0) {
      const auto& batch = batches[t % batches.size()];
      // Restrict S to the batch block: rows outside the batch get weight 0.
      Vector rb = Vector::Zero(n);
      for (int idx : batch) rb(idx) = r(idx);
      Vector srb = precond.apply(rb);
      weights = Vector::Zero(n);
      for (int idx : batch) weights(idx) = srb(idx);
    } else {
      weights = precond.apply(r);
    }
    LayerGrads grads = weighted_gradient(work, cache, weights);
    apply_update_in_place(work, grads, -eta);
  }

  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(work), std::move(trace)};
}

Vector preconditioned_loss_grad(const MlpState& net, const Matrix& X, const Vector& y,
                                const Preconditioner& S) {
  ForwardCache cache = mlp_forward_cached(net, X);
  Vector r = cache.outputs - y;
  LayerGrads grads = weighted_gradient(net, cache, S.apply(r));
  Vector flat(net.param_count);
  std::int64_t off = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    const auto& w = grads.weights[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) flat(off++) = w(i, j);
    const auto& b = grads.biases[l];
    for (int i = 0; i < b.size(); ++i) flat(off++) = b(i);
  }
  return flat;
}

std::optional<int> iterations_to_learn(const TrainTrace& trace, int direction_index,
                                       double delta) {
  if (trace.projections.empty()) {
    throw InputError("iterations_to_learn: trace has no tracked projections");
  }
  if (direction_index < 0 || direction_index >= trace.projections[0].size()) {
    throw InputError("iterations_to_learn: direction " + std::to_string(direction_index) +
                     " was not tracked");
  }
  if (!(delta > 0.0)) throw InputError("iterations_to_learn: delta must be positive");
  double initial = std::abs(trace.projections[0](direction_index));
  for (std::size_t t = 0; t < trace.projections.size(); ++t) {
    if (std::abs(trace.projections[t](direction_index)) <= delta * initial) {
      return static_cast<int>(t);
    }
  }
  return std::nullopt;
}

void export_trace(const std::filesystem::path& csv_path, const TrainTrace& trace,
                  const std::string& metadata_json) {
  std::ofstream out(csv_path);
  if (!out) throw InputError("export_trace: cannot open " + csv_path.string());
  const int j = trace.projections.empty() ? 0 : static_cast<int>(trace.projections[0].size());
  out << "iter,residual_norm";
  for (int i = 1; i <= j; ++i) out << ",proj_" << i;
  out << "\n";
  char buf[64];
  for (std::size_t t = 0; t < trace.residual_norms.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.17g", trace.residual_norms[t]);
    out << t << "," << buf;
    for (int i = 0; i < j; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", trace.projections[t](i));
      out << "," << buf;
    }
    out << "\n";
  }
  std::filesystem::path meta = csv_path;
  meta.replace_extension(".json");
  std::ofstream mout(meta);
  mout << metadata_json << "\n";
}

}  // namespace msk
