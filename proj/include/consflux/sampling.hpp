#pragma once

#include "consflux/rng.hpp"
#include "consflux/types.hpp"

namespace consflux {

enum class IcFamily { BurgersSine, DamBreak, ShuOsher };
std::string to_string(IcFamily f);
IcFamily ic_family_from_string(const std::string& name);

// Randomized initial-condition families with their sampling parameters.
// Defaults reproduce the benchmark settings.
struct IcSamplerSpec {
  IcFamily family = IcFamily::BurgersSine;

  // BurgersSine: u0 = alpha + beta sin(x), alpha ~ U[-eps_s, eps_s],
  // beta ~ U[1 - eps_s, 1 + eps_s], on (0, 2*pi), periodic.
  double eps_s = 0.25;

  // DamBreak on (-5, 5): piecewise (h, v) around x0 with
  // h_l ~ U[2 -+ eps_h_left], h_r ~ U[1 -+ eps_h_right],
  // v_l, v_r, x0 ~ U[-eps_dam, eps_dam].
  double h_left_mean = 2.0;
  double eps_h_left = 0.2;
  double h_right_mean = 1.0;
  double eps_h_right = 0.1;
  double eps_dam = 0.1;

  // ShuOsher on (-5, 5): every hatted mean scaled by U[1 - eps_rel, 1 + eps_rel].
  double rho_left_hat = 3.857135;
  double wave_amp_hat = 0.2;
  double p_left_hat = 10.33333;
  double p_right_hat = 1.0;
  double u_left_hat = 2.62936;
  double x0_hat = -4.0;
  double eps_rel = 0.1;
  double x1 = 3.29867;
  double gamma = 1.4;

  static IcSamplerSpec burgers_sine();
  static IcSamplerSpec dam_break();
  static IcSamplerSpec shu_osher();

  SystemId system() const;
  void validate() const;
};

struct SampledIc {
  StateField field;
  std::map<std::string, double> params;
};

// Deterministic IC evaluation at cell centers for given parameters; the
// samplers draw the parameters and delegate here.
StateField evaluate_burgers_ic(const Grid1D& grid, double alpha, double beta);
StateField evaluate_dam_break_ic(const Grid1D& grid, double h_l, double h_r, double v_l,
                                 double v_r, double x0);
StateField evaluate_shu_osher_ic(const Grid1D& grid, double rho_l, double wave_amp, double p_l,
                                 double p_r, double u_l, double x0, double x1, double gamma);

// Draw the family parameters from their uniform laws and evaluate the IC at
// cell centers. Inadmissible draws (h <= 0, p <= 0) are resampled up to a
// retry cap, then rejected.
SampledIc sample_ic(const IcSamplerSpec& spec, const Grid1D& grid, Rng& rng);

// Gaussian observation noise: sigma_c = level * mean |u_c| over the clean
// dataset; every stored value gets an independent draw.
struct NoiseSpec {
  double level = 0.0;
  void validate() const { require(level >= 0.0, "noise level must be >= 0"); }
};

Dataset add_noise(const Dataset& dataset, const NoiseSpec& spec, std::uint64_t seed);

// Per trajectory, keep the L-transition window starting at a start index
// drawn uniformly from {0, ..., M - L}.
Dataset subsample_windows(const Dataset& dataset, int length, std::uint64_t seed);

}  // namespace consflux
