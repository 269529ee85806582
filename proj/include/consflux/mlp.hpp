#pragma once

#include "consflux/rng.hpp"
#include "consflux/types.hpp"

namespace consflux {

// Fully connected feed-forward network, ReLU on hidden layers, affine output.
struct MlpParams {
  std::vector<int> dims;  // [d_in, hidden..., d_out]
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  int n_layers() const { return static_cast<int>(weights.size()); }
  int d_in() const { return dims.front(); }
  int d_out() const { return dims.back(); }
  std::size_t n_parameters() const;
  void validate() const;
};

struct GradientBundle {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static GradientBundle zeros_like(const MlpParams& params);
  void validate_against(const MlpParams& params) const;
};

struct AdamState {
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_biases, v_biases;
  long step = 0;

  static AdamState zeros_like(const MlpParams& params);
};

// Glorot-uniform weights, zero biases. The draw order (layer by layer,
// weights row-major) is part of the determinism contract.
MlpParams mlp_init(const std::vector<int>& dims, Rng& rng);

Vector mlp_forward(const MlpParams& params, const Vector& x);
// Columns are independent samples.
Matrix mlp_forward_batch(const MlpParams& params, const Matrix& x);

// Standard Adam with bias correction; mutates params and state in place.
void adam_step(MlpParams& params, const GradientBundle& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace consflux
