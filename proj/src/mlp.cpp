#include "msk/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "msk/rng.hpp"

namespace msk {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

double act_apply(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// ReLU derivative at exactly 0 is 0 by convention.
double act_deriv(Activation a, double z) {
  if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
  double t = std::tanh(z);
  return 1.0 - t * t;
}

Matrix act_apply_mat(Activation a, const Matrix& z) {
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

Matrix act_deriv_mat(Activation a, const Matrix& z) {
  if (a == Activation::relu) {
    return (z.array() > 0.0).cast<double>().matrix();
  }
  return (1.0 - z.array().tanh().square()).matrix();
}

std::uint64_t weight_key(std::uint64_t seed, int layer) {
  return rng::mix(rng::mix(seed, 0x5757575757575757ULL), static_cast<std::uint64_t>(layer));
}
std::uint64_t bias_key(std::uint64_t seed, int layer) {
  return rng::mix(rng::mix(seed, 0xB1B1B1B1B1B1B1B1ULL), static_cast<std::uint64_t>(layer));
}

void fill_normal(Matrix& w, std::uint64_t key, double stddev) {
  const auto cols = static_cast<std::uint64_t>(w.cols());
  for (int i = 0; i < w.rows(); ++i) {
    for (int j = 0; j < w.cols(); ++j) {
      w(i, j) = stddev * rng::normal_at(key, static_cast<std::uint64_t>(i) * cols + j);
    }
  }
}

void fill_normal(Vector& v, std::uint64_t key, double stddev) {
  for (int i = 0; i < v.size(); ++i) {
    v(i) = stddev * rng::normal_at(key, static_cast<std::uint64_t>(i));
  }
}

struct Scales {
  double c;      // c_rho
  double in;     // first-layer forward factor sqrt(m/c)
  double out;    // last-layer forward factor sqrt(c)
  double bias;   // hidden-bias forward factor beta/sqrt(c)
};

Scales scales_for(const MlpConfig& cfg) {
  double c = c_rho(cfg.activation);
  return Scales{c, std::sqrt(cfg.width / c), std::sqrt(c), cfg.bias_scale / std::sqrt(c)};
}

void check_config(const MlpConfig& cfg) {
  if (cfg.width < 1 || cfg.depth < 1) throw InputError("mlp: width and depth must be >= 1");
  if (cfg.input_dim < 1) throw InputError("mlp: input_dim must be >= 1");
  if (cfg.last_layer_scale <= 0.0) throw InputError("mlp: last_layer_scale must be > 0");
  if (cfg.bias_scale < 0.0) throw InputError("mlp: bias_scale must be >= 0");
}

}  // namespace

double c_rho(Activation act) {
  if (act == Activation::relu) return 2.0;
  // 1 / E[tanh(z)^2] under the standard normal, by Simpson on [-10, 10].
  static const double value = [] {
    const int steps = 4000;
    const double lo = -10.0, hi = 10.0;
    const double h = (hi - lo) / steps;
    double acc = 0.0;
    auto f = [](double z) {
      double t = std::tanh(z);
      return t * t * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    };
    for (int i = 0; i <= steps; ++i) {
      double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * f(lo + i * h);
    }
    return 1.0 / (acc * h / 3.0);
  }();
  return value;
}

MlpState mlp_init(const MlpConfig& config) {
  check_config(config);
  const int d = config.input_dim, L = config.depth, m = config.width;
  const double c = c_rho(config.activation);
  MlpState s;
  s.config = config;
  s.weights.resize(L + 1);
  s.biases.resize(L + 1);

  s.weights[0] = Matrix(m, d);
  fill_normal(s.weights[0], weight_key(config.seed, 0), std::sqrt(c / m));
  for (int l = 1; l < L; ++l) {
    s.weights[l] = Matrix(m, m);
    fill_normal(s.weights[l], weight_key(config.seed, l), std::sqrt(c / m));
  }
  s.weights[L] = Matrix(1, m);
  fill_normal(s.weights[L], weight_key(config.seed, L),
              std::sqrt(config.last_layer_scale / m));
  for (int l = 0; l < L; ++l) {
    s.biases[l] = Vector(m);
    fill_normal(s.biases[l], bias_key(config.seed, l), std::sqrt(c));
  }
  s.biases[L] = Vector(1);
  fill_normal(s.biases[L], bias_key(config.seed, L), std::sqrt(config.last_layer_scale));

  s.param_count = 0;
  for (int l = 0; l <= L; ++l) {
    s.param_count += s.weights[l].size() + s.biases[l].size();
  }
  return s;
}

ForwardCache mlp_forward_cached(const MlpState& state, const Matrix& X) {
  const auto& cfg = state.config;
  if (X.cols() != cfg.input_dim) {
    throw InputError("mlp_forward: input dimension " + std::to_string(X.cols()) +
                     " does not match config (" + std::to_string(cfg.input_dim) + ")");
  }
  const int L = cfg.depth;
  const Scales sc = scales_for(cfg);

  ForwardCache cache;
  cache.inputs = X;
  cache.preacts.resize(L);
  cache.acts.resize(L);

  Matrix z = sc.in * (X * state.weights[0].transpose());
  z.rowwise() += sc.bias * state.biases[0].transpose();
  for (int l = 0;; ++l) {
    if (!z.allFinite()) {
      throw NumericalError("mlp_forward: non-finite pre-activation at layer " +
                           std::to_string(l + 1));
    }
    cache.preacts[l] = z;
    cache.acts[l] = act_apply_mat(cfg.activation, z);
    if (l + 1 == L) break;
    z = cache.acts[l] * state.weights[l + 1].transpose();
    z.rowwise() += sc.bias * state.biases[l + 1].transpose();
  }
  cache.outputs = sc.out * (cache.acts[L - 1] * state.weights[L].transpose());
  cache.outputs.array() += state.biases[L](0);
  if (!cache.outputs.allFinite()) {
    throw NumericalError("mlp_forward: non-finite output at layer " + std::to_string(L + 1));
  }
  return cache;
}

Vector mlp_forward(const MlpState& state, const Matrix& X) {
  return mlp_forward_cached(state, X).outputs;
}

namespace {

// Backprop deltas D_l = df/dz_l for all samples (n x m each).
std::vector<Matrix> backprop_deltas(const MlpState& state, const ForwardCache& cache) {
  const auto& cfg = state.config;
  const int L = cfg.depth;
  const Scales sc = scales_for(cfg);
  std::vector<Matrix> deltas(L);
  Matrix dL = act_deriv_mat(cfg.activation, cache.preacts[L - 1]);
  dL.array().rowwise() *= (sc.out * state.weights[L].row(0)).array();
  deltas[L - 1] = std::move(dL);
  for (int l = L - 2; l >= 0; --l) {
    deltas[l] = (deltas[l + 1] * state.weights[l + 1])
                    .cwiseProduct(act_deriv_mat(cfg.activation, cache.preacts[l]));
  }
  return deltas;
}

}  // namespace

Vector per_sample_gradient(const MlpState& state, const Vector& x) {
  const auto& cfg = state.config;
  const int L = cfg.depth, m = cfg.width;
  const Scales sc = scales_for(cfg);
  ForwardCache cache = mlp_forward_cached(state, x.transpose());
  std::vector<Matrix> deltas = backprop_deltas(state, cache);

  Vector grad(state.param_count);
  std::int64_t off = 0;
  auto put_matrix = [&](const Matrix& g) {
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) grad(off++) = g(i, j);
  };
  auto put_vector = [&](const Vector& g) {
    for (int i = 0; i < g.size(); ++i) grad(off++) = g(i);
  };

  // layer 1: df/dW_1 = sqrt(m/c) delta_1 x^T, df/db_1 = (beta/sqrt(c)) delta_1
  put_matrix(sc.in * deltas[0].row(0).transpose() * x.transpose());
  put_vector(sc.bias * deltas[0].row(0).transpose());
  for (int l = 1; l < L; ++l) {
    put_matrix(deltas[l].row(0).transpose() * cache.acts[l - 1].row(0));
    put_vector(sc.bias * deltas[l].row(0).transpose());
  }
  put_matrix(sc.out * cache.acts[L - 1].row(0));
  Vector last_bias(1);
  last_bias(0) = 1.0;
  put_vector(last_bias);
  (void)m;
  return grad;
}

LayerGrads weighted_gradient(const MlpState& state, const ForwardCache& cache,
                             const Vector& sample_weights) {
  const auto& cfg = state.config;
  const int L = cfg.depth;
  const Scales sc = scales_for(cfg);
  if (sample_weights.size() != cache.outputs.size()) {
    throw InputError("weighted_gradient: weight vector length mismatch");
  }
  std::vector<Matrix> deltas = backprop_deltas(state, cache);
  for (int l = 0; l < L; ++l) {
    deltas[l].array().colwise() *= sample_weights.array();
  }
  LayerGrads g;
  g.weights.resize(L + 1);
  g.biases.resize(L + 1);
  g.weights[0] = sc.in * deltas[0].transpose() * cache.inputs;
  g.biases[0] = sc.bias * deltas[0].colwise().sum().transpose();
  for (int l = 1; l < L; ++l) {
    g.weights[l] = deltas[l].transpose() * cache.acts[l - 1];
    g.biases[l] = sc.bias * deltas[l].colwise().sum().transpose();
  }
  g.weights[L] = sc.out * (sample_weights.transpose() * cache.acts[L - 1]);
  g.biases[L] = Vector::Constant(1, sample_weights.sum());
  return g;
}

namespace {

// Shared tail of the factorized kernel computation given caches and deltas for
// two point sets (which may alias).
Matrix ntk_from_parts(const MlpConfig& cfg, const ForwardCache& ca,
                      const std::vector<Matrix>& da, const ForwardCache& cb,
                      const std::vector<Matrix>& db) {
  const int L = cfg.depth;
  const int m = cfg.width;
  const Scales sc = scales_for(cfg);
  const double c = sc.c;
  const double beta2 = cfg.bias_scale * cfg.bias_scale;

  Matrix K = (m / c) * (da[0] * db[0].transpose()).cwiseProduct(ca.inputs * cb.inputs.transpose());
  for (int l = 1; l < L; ++l) {
    K += (da[l] * db[l].transpose()).cwiseProduct(ca.acts[l - 1] * cb.acts[l - 1].transpose());
  }
  K += c * (ca.acts[L - 1] * cb.acts[L - 1].transpose());
  if (beta2 > 0.0) {
    for (int l = 0; l < L; ++l) {
      K += (beta2 / c) * (da[l] * db[l].transpose());
    }
  }
  K.array() += 1.0;  // last bias: unit gradient for every sample
  return K / static_cast<double>(m);
}

}  // namespace

SymMatrix empirical_ntk(const MlpState& state, const Matrix& X) {
  ForwardCache cache = mlp_forward_cached(state, X);
  std::vector<Matrix> deltas = backprop_deltas(state, cache);
  Matrix K = ntk_from_parts(state.config, cache, deltas, cache, deltas);
  return SymMatrix::from_dense(K);
}

Matrix empirical_ntk_cross(const MlpState& state, const Matrix& Xa, const Matrix& Xb) {
  ForwardCache ca = mlp_forward_cached(state, Xa);
  ForwardCache cb = mlp_forward_cached(state, Xb);
  std::vector<Matrix> da = backprop_deltas(state, ca);
  std::vector<Matrix> db = backprop_deltas(state, cb);
  return ntk_from_parts(state.config, ca, da, cb, db);
}

SymMatrix empirical_ntk_at_init(const MlpConfig& config, const Matrix& X, int block_rows) {
  check_config(config);
  if (X.cols() != config.input_dim) throw InputError("empirical_ntk_at_init: dim mismatch");
  const int L = config.depth, m = config.width;
  const int n = static_cast<int>(X.rows());
  const Scales sc = scales_for(config);
  const double c = sc.c;
  const double sigma_hidden = std::sqrt(c / m);
  const double sigma_last = std::sqrt(config.last_layer_scale / m);

  auto block_of = [&](std::uint64_t key, int r0, int rows, int cols, double stddev) {
    Matrix w(rows, cols);
    for (int i = 0; i < rows; ++i) {
      std::uint64_t base = static_cast<std::uint64_t>(r0 + i) * cols;
      for (int j = 0; j < cols; ++j) w(i, j) = stddev * rng::normal_at(key, base + j);
    }
    return w;
  };

  // Forward, caching activations and pre-activation values layer by layer.
  ForwardCache cache;
  cache.inputs = X;
  cache.preacts.resize(L);
  cache.acts.resize(L);
  for (int l = 0; l < L; ++l) {
    Matrix z(n, m);
    const Matrix& src = (l == 0) ? X : cache.acts[l - 1];
    int in_cols = static_cast<int>(src.cols());
    for (int r0 = 0; r0 < m; r0 += block_rows) {
      int rows = std::min(block_rows, m - r0);
      Matrix wb = block_of(weight_key(config.seed, l), r0, rows, in_cols, sigma_hidden);
      z.middleCols(r0, rows) = src * wb.transpose();
    }
    if (l == 0) z *= sc.in;
    Vector b(m);
    fill_normal(b, bias_key(config.seed, l), std::sqrt(c));
    z.rowwise() += sc.bias * b.transpose();
    cache.preacts[l] = z;
    cache.acts[l] = act_apply_mat(config.activation, z);
  }
  Matrix wlast = block_of(weight_key(config.seed, L), 0, 1, m, sigma_last);

  // Backward deltas with the same blockwise regeneration.
  std::vector<Matrix> deltas(L);
  Matrix dL = act_deriv_mat(config.activation, cache.preacts[L - 1]);
  dL.array().rowwise() *= (sc.out * wlast.row(0)).array();
  deltas[L - 1] = std::move(dL);
  for (int l = L - 2; l >= 0; --l) {
    Matrix acc = Matrix::Zero(n, m);
    for (int r0 = 0; r0 < m; r0 += block_rows) {
      int rows = std::min(block_rows, m - r0);
      Matrix wb = block_of(weight_key(config.seed, l + 1), r0, rows, m, sigma_hidden);
      acc += deltas[l + 1].middleCols(r0, rows) * wb;
    }
    deltas[l] = acc.cwiseProduct(act_deriv_mat(config.activation, cache.preacts[l]));
  }

  Matrix K = ntk_from_parts(config, cache, deltas, cache, deltas);
  return SymMatrix::from_dense(K);
}

MlpState apply_update(const MlpState& state, const Vector& delta) {
  if (delta.size() != state.param_count) {
    throw InputError("apply_update: delta length " + std::to_string(delta.size()) +
                     " does not match parameter count " +
                     std::to_string(state.param_count));
  }
  MlpState out = state;
  std::int64_t off = 0;
  for (std::size_t l = 0; l < out.weights.size(); ++l) {
    auto& w = out.weights[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) += delta(off++);
    auto& b = out.biases[l];
    for (int i = 0; i < b.size(); ++i) b(i) += delta(off++);
  }
  return out;
}

void apply_update_in_place(MlpState& state, const LayerGrads& grads, double scale) {
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    state.weights[l].noalias() += scale * grads.weights[l];
    state.biases[l] += scale * grads.biases[l];
  }
}

Vector flatten_params(const MlpState& state) {
  Vector out(state.param_count);
  std::int64_t off = 0;
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    const auto& w = state.weights[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) out(off++) = w(i, j);
    const auto& b = state.biases[l];
    for (int i = 0; i < b.size(); ++i) out(off++) = b(i);
  }
  return out;
}

namespace {
constexpr std::uint64_t kCheckpointMagic = 0x314e4b43504c4d53ULL;  // "SMLPCKN1"
}

void save_checkpoint(const std::filesystem::path& path, const MlpState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("save_checkpoint: cannot open " + path.string());
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  put_u64(kCheckpointMagic);
  put_u64(static_cast<std::uint64_t>(state.config.input_dim));
  put_u64(static_cast<std::uint64_t>(state.config.depth));
  put_u64(static_cast<std::uint64_t>(state.config.width));
  put_u64(state.config.activation == Activation::relu ? 0 : 1);
  put_f64(state.config.bias_scale);
  put_f64(state.config.last_layer_scale);
  put_u64(state.config.seed);
  Vector flat = flatten_params(state);
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw NumericalError("save_checkpoint: write failed for " + path.string());
}

MlpState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("load_checkpoint: cannot open " + path.string());
  auto get_u64 = [&] {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto get_f64 = [&] {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  if (get_u64() != kCheckpointMagic) {
    throw InputError("load_checkpoint: bad magic in " + path.string());
  }
  MlpConfig cfg;
  cfg.input_dim = static_cast<int>(get_u64());
  cfg.depth = static_cast<int>(get_u64());
  cfg.width = static_cast<int>(get_u64());
  cfg.activation = get_u64() == 0 ? Activation::relu : Activation::tanh;
  cfg.bias_scale = get_f64();
  cfg.last_layer_scale = get_f64();
  cfg.seed = get_u64();

  MlpState s = mlp_init(cfg);  // correct shapes; values overwritten below
  Vector flat(s.param_count);
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!in) throw InputError("load_checkpoint: truncated file " + path.string());
  std::int64_t off = 0;
  for (std::size_t l = 0; l < s.weights.size(); ++l) {
    auto& w = s.weights[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) = flat(off++);
    auto& b = s.biases[l];
    for (int i = 0; i < b.size(); ++i) b(i) = flat(off++);
  }
  return s;
}

}  // namespace msk
