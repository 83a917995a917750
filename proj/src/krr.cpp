#include "msk/krr.hpp"

#include <cmath>

namespace msk {

KrrModel krr_fit(const KernelSpec& spec, const Dataset& train, double gamma) {
  if (gamma < 0.0) throw InputError("krr_fit: gamma must be nonnegative");
  SymMatrix K = kernel_matrix(spec, train, Normalization::by_n);
  KrrModel model{spec, train.points, Vector(), gamma};
  if (gamma > 0.0) {
    model.alpha = solve_spd(K, train.labels, gamma);
  } else {
    model.alpha = pseudo_solve(eigh(K), train.labels, 0.0);
  }
  return model;
}

Vector krr_predict(const KrrModel& model, const Matrix& test_points) {
  Matrix cross = kernel_cross(model.spec, test_points, model.train_points);
  return (cross / static_cast<double>(model.train_points.rows())) * model.alpha;
}

Vector pkrr_closed_form(const SymMatrix& K0, const Preconditioner& S, double gamma,
                        const Vector& y) {
  if (!(gamma > 0.0)) throw InputError("pkrr_closed_form: gamma must be positive");
  if (S.n() != K0.n()) throw InputError("pkrr_closed_form: dimension mismatch");
  // S^{-1} = I - sum (1 - lambda_i/g(lambda_i)) v_i v_i^T
  Matrix sinv = Matrix::Identity(K0.n(), K0.n());
  if (S.k() > 0) {
    Vector c(S.k());
    for (int i = 0; i < S.k(); ++i) {
      double ratio = 1.0 - S.coefficients()(i);  // g(lambda_i)/lambda_i
      c(i) = 1.0 - 1.0 / ratio;
    }
    sinv -= S.vectors() * c.asDiagonal() * S.vectors().transpose();
  }
  SymMatrix system = SymMatrix::from_dense(K0.dense() + gamma * sinv);
  try {
    return solve_spd(system, y, 0.0);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("pkrr_closed_form: combined system ill-conditioned: ") +
                         e.what());
  }
}

Vector linear_model_pgd(const Matrix& features, const Vector& y, const Preconditioner& S,
                        double gamma, double eta, int T) {
  const int n = static_cast<int>(features.rows());
  if (y.size() != n) throw InputError("linear_model_pgd: label length mismatch");
  if (S.n() != n) throw InputError("linear_model_pgd: preconditioner dimension mismatch");
  if (T < 0) throw InputError("linear_model_pgd: T must be >= 0");
  Vector w = Vector::Zero(features.cols());
  const double y_norm = std::max(y.norm(), 1e-300);
  for (int t = 0; t < T; ++t) {
    Vector r = features * w - y;
    if (r.norm() > 1e3 * y_norm) {
      throw DivergenceError("linear_model_pgd: residual exceeded 1e3 x ||y|| at iteration " +
                            std::to_string(t), t);
    }
    Vector grad = features.transpose() * S.apply(r);
    if (gamma != 0.0) grad += gamma * w;
    w -= eta * grad;
  }
  return w;
}

Matrix feature_matrix(const MlpState& state, const Matrix& X) {
  const int n = static_cast<int>(X.rows());
  if (state.config.width > 4096 || n > 32) {
    throw InputError("feature_matrix: materialized features limited to width <= 4096 "
                     "and n <= 32 (got width " + std::to_string(state.config.width) +
                     ", n " + std::to_string(n) + ")");
  }
  Matrix phi(n, state.param_count);
  for (int i = 0; i < n; ++i) {
    phi.row(i) = per_sample_gradient(state, X.row(i).transpose()).transpose();
  }
  return phi;
}

ConsistencyCheckResult consistency_check(const MlpConfig& config, const Dataset& train,
                                         const Matrix& test_points, const SpectrumMap& g,
                                         int k, double eta0, int T, bool center_at_init) {
  MlpState net = mlp_init(config);
  const int m = config.width;
  SymMatrix K0 = empirical_ntk(net, train.points);
  SpectralDecomposition d = eigh(K0);
  Preconditioner S = (k > 0) ? build_preconditioner(d, g, k)
                             : Preconditioner::identity(train.n());

  TrainOptions opts;
  opts.eps = 1e-14;
  opts.max_iter = T;
  opts.center_at_init = center_at_init;
  auto [trained, trace] = pgd_train(net, train.points, train.labels, S, eta0, opts);

  Vector f_pred = mlp_forward(trained, test_points);
  if (center_at_init) f_pred -= mlp_forward(net, test_points);

  // Linearized model iterated in coefficient space: w'_t = Phi^T a_t gives
  // a <- a - (eta0/m) S (m K0 a - y), h(x) = m K0(x, train) a.
  Matrix K0raw = static_cast<double>(m) * K0.dense();
  Matrix cross_raw = static_cast<double>(m) * empirical_ntk_cross(net, test_points, train.points);
  Vector a = Vector::Zero(train.n());
  const double eta = eta0 / m;
  for (int t = 0; t < T; ++t) {
    Vector r = K0raw * a - train.labels;
    a -= eta * S.apply(r);
  }
  Vector h_pred = cross_raw * a;

  ConsistencyCheckResult res;
  res.network_predictions = f_pred;
  res.linear_predictions = h_pred;
  res.gaps = (h_pred - f_pred).cwiseAbs();
  res.max_gap = res.gaps.size() ? res.gaps.maxCoeff() : 0.0;
  return res;
}

}  // namespace msk
