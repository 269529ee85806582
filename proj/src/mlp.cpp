#include "consflux/mlp.hpp"

#include <cmath>

namespace consflux {

std::size_t MlpParams::n_parameters() const {
  std::size_t n = 0;
  for (int l = 0; l < n_layers(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MlpParams::validate() const {
  require(dims.size() >= 2, "mlp needs at least input and output dims");
  for (int d : dims) require(d >= 1, "mlp dims must be positive");
  require(weights.size() + 1 == dims.size() && biases.size() == weights.size(),
          "mlp parameter count must match dims");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require(weights[l].rows() == dims[l + 1] && weights[l].cols() == dims[l],
            "mlp weight shape mismatch");
    require(biases[l].size() == dims[l + 1], "mlp bias shape mismatch");
    if (!(weights[l].allFinite() && biases[l].allFinite()))
      throw NumericError("mlp parameters must be finite");
  }
}

GradientBundle GradientBundle::zeros_like(const MlpParams& params) {
  GradientBundle g;
  for (int l = 0; l < params.n_layers(); ++l) {
    g.weights.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
    g.biases.push_back(Vector::Zero(params.biases[l].size()));
  }
  return g;
}

void GradientBundle::validate_against(const MlpParams& params) const {
  require(weights.size() == params.weights.size() && biases.size() == params.biases.size(),
          "gradient layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l)
    require(weights[l].rows() == params.weights[l].rows() &&
                weights[l].cols() == params.weights[l].cols() &&
                biases[l].size() == params.biases[l].size(),
            "gradient shape mismatch");
}

AdamState AdamState::zeros_like(const MlpParams& params) {
  AdamState s;
  for (int l = 0; l < params.n_layers(); ++l) {
    s.m_weights.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
    s.v_weights.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
    s.m_biases.push_back(Vector::Zero(params.biases[l].size()));
    s.v_biases.push_back(Vector::Zero(params.biases[l].size()));
  }
  return s;
}

MlpParams mlp_init(const std::vector<int>& dims, Rng& rng) {
  require(dims.size() >= 2, "mlp needs at least input and output dims");
  MlpParams params;
  params.dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Vector::Zero(fan_out));
  }
  params.validate();
  return params;
}

Matrix mlp_forward_batch(const MlpParams& params, const Matrix& x) {
  require(x.rows() == params.d_in(), "mlp input dimension mismatch");
  Matrix h = x;
  for (int l = 0; l < params.n_layers(); ++l) {
    Matrix z = params.weights[l] * h;
    z.colwise() += params.biases[l];
    h = l + 1 < params.n_layers() ? z.cwiseMax(0.0) : std::move(z);
  }
  return h;
}

Vector mlp_forward(const MlpParams& params, const Vector& x) {
  return mlp_forward_batch(params, x);
}

void adam_step(MlpParams& params, const GradientBundle& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  require(lr > 0.0, "adam learning rate must be positive");
  grads.validate_against(params);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(beta2, double(state.step));
  for (int l = 0; l < params.n_layers(); ++l) {
    auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
      theta.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    };
    update(params.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l]);
    update(params.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l]);
  }
}

}  // namespace consflux
