#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "msk/linalg.hpp"

namespace msk {

enum class Activation { relu, tanh };

/// 1 / E_{z~N(0,1)}[rho(z)^2]; 2 for ReLU, computed by quadrature for tanh.
double c_rho(Activation act);

struct MlpConfig {
  int input_dim = 2;
  int depth = 2;  // hidden layers
  int width = 256;
  Activation activation = Activation::relu;
  double bias_scale = 1.0;        // beta
  double last_layer_scale = 1e-2; // nu
  std::uint64_t seed = 0;
};

// Tangent-kernel parametrization. Stored parameters are what init draws and
// what gradients/finite differences act on; the forward pass applies fixed
// scale factors so that pre-activation covariances follow the arc-cosine
// recursion with Sigma^0 = x.z + beta^2 and, at nu = c_rho and beta = 0,
// (1/m) J J^T converges to the analytic tangent kernel.
//
//   z_1 = sqrt(m/c) W_1 x + (beta/sqrt(c)) b_1        W_1 ~ N(0, c/m), b ~ N(0, c)
//   z_l = W_l a_{l-1} + (beta/sqrt(c)) b_l            W_l ~ N(0, c/m), b ~ N(0, c)
//   f   = sqrt(c) W_{L+1} a_L + b_{L+1}               W_{L+1} ~ N(0, nu/m), b ~ N(0, nu)
//
// Parameter flattening order: W_1 (row-major), b_1, W_2, b_2, ..., W_{L+1}, b_{L+1}.
struct MlpState {
  MlpConfig config;
  std::vector<Matrix> weights;  // [m x d, m x m ..., 1 x m]
  std::vector<Vector> biases;   // [m, ..., m, 1]
  std::int64_t param_count = 0;
};

MlpState mlp_init(const MlpConfig& config);

/// Activations cached by a forward pass; gradient routines reuse it.
struct ForwardCache {
  Matrix inputs;                // n x d
  std::vector<Matrix> preacts;  // z_l, n x m, l = 1..L
  std::vector<Matrix> acts;     // a_l = rho(z_l)
  Vector outputs;               // n
};

ForwardCache mlp_forward_cached(const MlpState& state, const Matrix& X);
Vector mlp_forward(const MlpState& state, const Matrix& X);

/// Exact reverse-mode gradient of the scalar output at one input, flattened.
Vector per_sample_gradient(const MlpState& state, const Vector& x);

/// Per-layer gradients of sum_i w_i f(x_i) (one batched backward pass);
/// this is J^T w without materializing J.
struct LayerGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};
LayerGrads weighted_gradient(const MlpState& state, const ForwardCache& cache,
                             const Vector& sample_weights);

/// K = (1/m) J J^T computed from the layer structure (gradients of each layer
/// are rank-one per sample, so the Gram factorizes into activation and
/// backprop Grams); exact, O(n m) memory.
SymMatrix empirical_ntk(const MlpState& state, const Matrix& X);
Matrix empirical_ntk_cross(const MlpState& state, const Matrix& Xa, const Matrix& Xb);

/// Same kernel at the initial state, but weights are regenerated blockwise
/// from the seed instead of stored; handles widths whose hidden layers would
/// not fit in memory. block_rows bounds the regeneration buffer.
SymMatrix empirical_ntk_at_init(const MlpConfig& config, const Matrix& X,
                                int block_rows = 1024);

MlpState apply_update(const MlpState& state, const Vector& delta);
void apply_update_in_place(MlpState& state, const LayerGrads& grads, double scale);

Vector flatten_params(const MlpState& state);

void save_checkpoint(const std::filesystem::path& path, const MlpState& state);
MlpState load_checkpoint(const std::filesystem::path& path);

}  // namespace msk
