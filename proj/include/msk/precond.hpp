#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msk/linalg.hpp"
#include "msk/mlp.hpp"
#include "msk/spectrum_map.hpp"

namespace msk {

/// Rank-k correction preconditioner S = I - sum_i c_i v_i v_i^T with
/// c_i = 1 - g(lambda_i)/lambda_i over the top-k eigenvectors of the kernel
/// matrix. Applying it costs O(nk); S stays symmetric positive definite as
/// long as g is positive on the modified eigenvalues.
class Preconditioner {
 public:
  static Preconditioner identity(int n);

  int n() const { return n_; }
  int k() const { return static_cast<int>(coefficients_.size()); }
  const Matrix& vectors() const { return vectors_; }
  const Vector& coefficients() const { return coefficients_; }
  const Vector& source_spectrum() const { return source_spectrum_; }

  Vector apply(const Vector& r) const;          // S r
  Vector apply_sqrt(const Vector& r) const;     // S^{1/2} r
  Vector apply_inverse(const Vector& r) const;  // S^{-1} r
  Matrix dense() const;

  friend Preconditioner build_preconditioner(const SpectralDecomposition& decomp,
                                             const SpectrumMap& g, int k,
                                             bool include_all);

 private:
  int n_ = 0;
  Matrix vectors_;        // n x k
  Vector coefficients_;   // c_i = 1 - g(lambda_i)/lambda_i
  Vector ratios_;         // g(lambda_i)/lambda_i
  Vector source_spectrum_;
};

/// k < n uses eigenvalue lambda_{k+1} as the flatten target where g needs it;
/// include_all permits k = n (every direction modified, e.g. Shift giving
/// K S = K + gamma I exactly).
Preconditioner build_preconditioner(const SpectralDecomposition& decomp,
                                    const SpectrumMap& g, int k,
                                    bool include_all = false);

/// Eigenvalues of K S in the listed (not sorted) order:
/// [g(lambda_1), ..., g(lambda_k), lambda_{k+1}, ..., lambda_n].
Vector ks_spectrum(const SpectralDecomposition& decomp, const SpectrumMap& g, int k);

/// 2 / (lambda_min + lambda_max); the trainer default steps at 0.9x this.
double max_stable_lr(const Vector& spectrum);

/// Closed-form residual-norm sequence sqrt(sum_i (1-eta0 lambda_i)^{2t} p_i^2)
/// for t = 0..T; entry 0 equals the norm of the projection vector.
std::vector<double> linear_dynamics(const Vector& spectrum, const Vector& projections,
                                    double eta0, int T);

struct TrainTrace {
  std::vector<double> residual_norms;     // ||r_t||, t = 0..T
  std::vector<Vector> projections;        // tracked-direction projections per t
  std::optional<int> iterations_to_threshold;
  double wall_seconds = 0.0;
  double eta0 = 0.0;

  int steps() const { return static_cast<int>(residual_norms.size()) - 1; }
};

struct PrecondRefresh {
  SpectrumMap g = SpectrumMap::identity();
  int k = 0;
  int every = 0;  // iterations between rebuilds; 0 disables
};

struct TrainOptions {
  double eps = 1e-2;
  int max_iter = 50000;
  /// Residuals measured against f - f(., w_0) so r_0 = -y exactly; the
  /// exact-linearization device for dynamics comparisons.
  bool center_at_init = false;
  /// > 0 trains on fixed round-robin batches of this size (update restricted
  /// to the batch block of S); 0 is full-batch.
  int sgd_batch = 0;
  std::uint64_t sgd_schedule_seed = 0;
  std::optional<PrecondRefresh> refresh;
  /// Directions (columns) whose residual projections the trace records.
  std::optional<Matrix> tracked_directions;
  double divergence_factor = 1e3;
};

/// Preconditioned gradient descent w <- w - (eta0/m) J^T S r until
/// ||r|| <= eps or max_iter. Throws DivergenceError when the residual exceeds
/// divergence_factor times its initial norm.
std::pair<MlpState, TrainTrace> pgd_train(const MlpState& net, const Matrix& X,
                                          const Vector& y, const Preconditioner& S,
                                          double eta0, const TrainOptions& options);

/// Gradient of the preconditioned loss 0.5 ||S^{1/2}(f(X,w)-y)||^2, flattened;
/// identical to the PGD step direction J^T S r.
Vector preconditioned_loss_grad(const MlpState& net, const Matrix& X, const Vector& y,
                                const Preconditioner& S);

/// First t with |proj_t[i]| <= delta * |proj_0[i]|.
std::optional<int> iterations_to_learn(const TrainTrace& trace, int direction_index,
                                       double delta);

/// CSV (iter, residual_norm, proj_1..proj_j) plus a JSON metadata sidecar.
void export_trace(const std::filesystem::path& csv_path, const TrainTrace& trace,
                  const std::string& metadata_json);

}  // namespace msk
