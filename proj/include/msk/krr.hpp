#pragma once

#include <vector>

#include "msk/kernels.hpp"
#include "msk/mlp.hpp"
#include "msk/precond.hpp"

namespace msk {

struct KrrModel {
  KernelSpec spec;
  Matrix train_points;
  Vector alpha;
  double gamma = 0.0;
};

/// alpha = (K + gamma I)^{-1} y with the 1/n-normalized kernel matrix;
/// gamma = 0 routes through the eigenvalue-floored pseudo-solve.
KrrModel krr_fit(const KernelSpec& spec, const Dataset& train, double gamma);

/// f(x) = k_x^T alpha with [k_x]_i = (1/n) k(x, x_i).
Vector krr_predict(const KrrModel& model, const Matrix& test_points);

/// Minimizer of the preconditioned ridge objective:
/// alpha* = (K0 + gamma S^{-1})^{-1} y, S^{-1} taken analytically from the
/// rank-k form.
Vector pkrr_closed_form(const SymMatrix& K0, const Preconditioner& S, double gamma,
                        const Vector& y);

/// Gradient descent on the preconditioned ridge loss of the linear model
/// h(x, w) = <w, phi(x)> from w_0 = 0:
/// w <- w - eta (Phi^T S (Phi w - y) + gamma w). Returns w_T.
Vector linear_model_pgd(const Matrix& features, const Vector& y, const Preconditioner& S,
                        double gamma, double eta, int T);

/// Rows phi(x_i) = grad f(x_i, w_0). Materialized features are allowed only
/// at desk scale (width <= 4096, n <= 32); larger requests are rejected.
Matrix feature_matrix(const MlpState& state, const Matrix& X);

struct ConsistencyCheckResult {
  Vector network_predictions;  // f(x, w_T), centered when requested
  Vector linear_predictions;   // h(x, w'_T)
  Vector gaps;                 // |h - f| per test point
  double max_gap = 0.0;
};

/// Trains the network with PGD and iterates the linearized model (in
/// coefficient space, an exact reduction) from the same initialization, then
/// reports per-test-point prediction gaps.
ConsistencyCheckResult consistency_check(const MlpConfig& config, const Dataset& train,
                                         const Matrix& test_points, const SpectrumMap& g,
                                         int k, double eta0, int T,
                                         bool center_at_init = true);

}  // namespace msk
