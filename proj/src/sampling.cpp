#include "consflux/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace consflux {

std::string to_string(IcFamily f) {
  switch (f) {
    case IcFamily::BurgersSine: return "burgers_sine";
    case IcFamily::DamBreak: return "dam_break";
    case IcFamily::ShuOsher: return "shu_osher";
  }
  throw ValidationError("unknown ic family");
}

IcFamily ic_family_from_string(const std::string& name) {
  if (name == "burgers_sine") return IcFamily::BurgersSine;
  if (name == "dam_break") return IcFamily::DamBreak;
  if (name == "shu_osher") return IcFamily::ShuOsher;
  throw ValidationError("unknown ic family: " + name);
}

IcSamplerSpec IcSamplerSpec::burgers_sine() {
  IcSamplerSpec s;
  s.family = IcFamily::BurgersSine;
  return s;
}

IcSamplerSpec IcSamplerSpec::dam_break() {
  IcSamplerSpec s;
  s.family = IcFamily::DamBreak;
  return s;
}

IcSamplerSpec IcSamplerSpec::shu_osher() {
  IcSamplerSpec s;
  s.family = IcFamily::ShuOsher;
  return s;
}

SystemId IcSamplerSpec::system() const {
  switch (family) {
    case IcFamily::BurgersSine: return SystemId::Burgers;
    case IcFamily::DamBreak: return SystemId::ShallowWater;
    case IcFamily::ShuOsher: return SystemId::Euler;
  }
  throw ValidationError("unknown ic family");
}

void IcSamplerSpec::validate() const {
  require(eps_s >= 0 && eps_h_left >= 0 && eps_h_right >= 0 && eps_dam >= 0 && eps_rel >= 0,
          "sampler spreads must be nonnegative");
  require(h_left_mean - eps_h_left > 0 && h_right_mean - eps_h_right > 0,
          "dam break depth range must stay positive");
  require(gamma > 1.0, "shu-osher gamma must exceed 1");
}

StateField evaluate_burgers_ic(const Grid1D& grid, double alpha, double beta) {
  Matrix values(1, grid.n_cells);
  for (int j = 0; j < grid.n_cells; ++j) values(0, j) = alpha + beta * std::sin(grid.center(j));
  return StateField(grid, std::move(values));
}

StateField evaluate_dam_break_ic(const Grid1D& grid, double h_l, double h_r, double v_l,
                                 double v_r, double x0) {
  if (!(h_l > 0.0 && h_r > 0.0)) throw NumericError("dam break depth must be positive");
  Matrix values(2, grid.n_cells);
  for (int j = 0; j < grid.n_cells; ++j) {
    const double x = grid.center(j);
    const double h = x <= x0 ? h_l : h_r;
    const double v = x <= x0 ? v_l : v_r;
    values(0, j) = h;
    values(1, j) = h * v;
  }
  return StateField(grid, std::move(values));
}

StateField evaluate_shu_osher_ic(const Grid1D& grid, double rho_l, double wave_amp, double p_l,
                                 double p_r, double u_l, double x0, double x1, double gamma) {
  if (!(rho_l > 0.0 && p_l > 0.0 && p_r > 0.0))
    throw NumericError("shu-osher state must be admissible");
  const double gm1 = gamma - 1.0;
  Matrix values(3, grid.n_cells);
  for (int j = 0; j < grid.n_cells; ++j) {
    const double x = grid.center(j);
    double rho, u, p;
    if (x <= x0) {
      rho = rho_l;
      u = u_l;
      p = p_l;
    } else {
      const double wave = wave_amp * std::sin(5.0 * x);
      // The sine is damped past x1 so the profile is flat at the boundary.
      rho = x <= x1 ? 1.0 + wave : 1.0 + wave * std::exp(-std::pow(x - x1, 4));
      u = 0.0;
      p = p_r;
    }
    if (!(rho > 0.0)) throw NumericError("shu-osher density must stay positive");
    values(0, j) = rho;
    values(1, j) = rho * u;
    values(2, j) = p / gm1 + 0.5 * rho * u * u;
  }
  return StateField(grid, std::move(values));
}

namespace {

// U[m*(1-eps), m*(1+eps)] with the endpoints sorted, so negative means work.
double scaled_uniform(Rng& rng, double mean, double eps) {
  const double lo = mean * (1.0 - eps);
  const double hi = mean * (1.0 + eps);
  return rng.uniform(std::min(lo, hi), std::max(lo, hi));
}

SampledIc sample_burgers(const IcSamplerSpec& spec, const Grid1D& grid, Rng& rng) {
  const double alpha = rng.uniform(-spec.eps_s, spec.eps_s);
  const double beta = rng.uniform(1.0 - spec.eps_s, 1.0 + spec.eps_s);
  return {evaluate_burgers_ic(grid, alpha, beta), {{"alpha", alpha}, {"beta", beta}}};
}

SampledIc sample_dam_break(const IcSamplerSpec& spec, const Grid1D& grid, Rng& rng) {
  const double h_l = rng.uniform(spec.h_left_mean - spec.eps_h_left, spec.h_left_mean + spec.eps_h_left);
  const double h_r = rng.uniform(spec.h_right_mean - spec.eps_h_right, spec.h_right_mean + spec.eps_h_right);
  const double v_l = rng.uniform(-spec.eps_dam, spec.eps_dam);
  const double v_r = rng.uniform(-spec.eps_dam, spec.eps_dam);
  const double x0 = rng.uniform(-spec.eps_dam, spec.eps_dam);
  return {evaluate_dam_break_ic(grid, h_l, h_r, v_l, v_r, x0),
          {{"h_l", h_l}, {"h_r", h_r}, {"v_l", v_l}, {"v_r", v_r}, {"x0", x0}}};
}

SampledIc sample_shu_osher(const IcSamplerSpec& spec, const Grid1D& grid, Rng& rng) {
  const double rho_l = scaled_uniform(rng, spec.rho_left_hat, spec.eps_rel);
  const double amp = scaled_uniform(rng, spec.wave_amp_hat, spec.eps_rel);
  const double p_l = scaled_uniform(rng, spec.p_left_hat, spec.eps_rel);
  const double p_r = scaled_uniform(rng, spec.p_right_hat, spec.eps_rel);
  const double u_l = scaled_uniform(rng, spec.u_left_hat, spec.eps_rel);
  const double x0 = scaled_uniform(rng, spec.x0_hat, spec.eps_rel);
  return {evaluate_shu_osher_ic(grid, rho_l, amp, p_l, p_r, u_l, x0, spec.x1, spec.gamma),
          {{"rho_l", rho_l}, {"wave_amp", amp}, {"p_l", p_l}, {"p_r", p_r}, {"u_l", u_l}, {"x0", x0}}};
}

}  // namespace

SampledIc sample_ic(const IcSamplerSpec& spec, const Grid1D& grid, Rng& rng) {
  spec.validate();
  // The families are defined on fixed domains.
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  if (spec.family == IcFamily::BurgersSine)
    require(std::abs(grid.a) <= 1e-9 && std::abs(grid.b - kTwoPi) <= 1e-9,
            "burgers family needs the domain (0, 2*pi)");
  else
    require(std::abs(grid.a + 5.0) <= 1e-9 && std::abs(grid.b - 5.0) <= 1e-9,
            "this family needs the domain (-5, 5)");
  constexpr int kRetryCap = 100;
  for (int attempt = 0;; ++attempt) {
    try {
      switch (spec.family) {
        case IcFamily::BurgersSine: return sample_burgers(spec, grid, rng);
        case IcFamily::DamBreak: return sample_dam_break(spec, grid, rng);
        case IcFamily::ShuOsher: return sample_shu_osher(spec, grid, rng);
      }
      throw ValidationError("unknown ic family");
    } catch (const NumericError&) {
      if (attempt + 1 >= kRetryCap) throw;
    }
  }
}

Dataset add_noise(const Dataset& dataset, const NoiseSpec& spec, std::uint64_t seed) {
  spec.validate();
  Dataset noisy = dataset;
  noisy.noise_level = spec.level;
  if (spec.level == 0.0) return noisy;

  // Per-component sigma from the clean data's spatiotemporal mean of |u|.
  const int n_comp = dataset.n_comp();
  Vector abs_sum = Vector::Zero(n_comp);
  long n_vals = 0;
  for (const auto& traj : dataset.trajectories)
    for (const auto& snap : traj.snapshots) {
      abs_sum += snap.values.cwiseAbs().rowwise().sum();
      n_vals += snap.values.cols();
    }
  const Vector sigma = spec.level * abs_sum / double(n_vals);

  for (int k = 0; k < noisy.n_traj(); ++k) {
    Rng rng = Rng::stream(seed, rng_tag::noise, std::uint64_t(k));
    for (auto& snap : noisy.trajectories[k].snapshots)
      for (int c = 0; c < n_comp; ++c)
        for (int j = 0; j < snap.values.cols(); ++j)
          snap.values(c, j) += rng.normal(0.0, sigma(c));
  }
  return noisy;
}

Dataset subsample_windows(const Dataset& dataset, int length, std::uint64_t seed) {
  const int m = dataset.n_snapshots() - 1;
  require(length >= 1, "window length must be >= 1");
  require(length <= m, "window length exceeds trajectory length");

  Dataset out = dataset;
  for (int k = 0; k < out.n_traj(); ++k) {
    Rng rng = Rng::stream(seed, rng_tag::window, std::uint64_t(k));
    const int start = int(rng.uniform_below(std::uint64_t(m - length + 1)));
    auto& traj = out.trajectories[k];
    std::vector<StateField> window(traj.snapshots.begin() + start,
                                   traj.snapshots.begin() + start + length + 1);
    traj.snapshots = std::move(window);
    traj.ic_params["window_start"] = double(start);
  }
  return out;
}

}  // namespace consflux
