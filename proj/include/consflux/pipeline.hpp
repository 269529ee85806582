#pragma once

#include <optional>

#include "consflux/sampling.hpp"
#include "consflux/solver.hpp"

namespace consflux {

// Everything needed to regenerate one dataset bit-for-bit.
struct RunConfig {
  int schema_version = 1;
  SystemId system = SystemId::Burgers;
  BoundaryKind bc = BoundaryKind::Periodic;
  double domain_a = 0.0;
  double domain_b = 6.283185307179586;
  int n_cells = 512;
  double dt = 0.005;
  int n_traj = 1;
  int length = 20;                     // L
  std::optional<int> extended_length;  // M; windows of length L are drawn from it
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  IcSamplerSpec sampler;
  double gravity = 1.0;
  double gamma = 1.4;
  // Non-empty: use this named figure IC for every trajectory instead of
  // sampling (reference-solution runs).
  std::string fixed_ic;

  SystemSpec system_spec() const;
  Grid1D grid() const { return Grid1D(domain_a, domain_b, n_cells); }
  void validate() const;
};

std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);

// FNV-1a hash of the canonical JSON form; recorded as dataset provenance.
std::string config_hash(const RunConfig& config);

// Sample n_traj initial conditions, march the reference solver, then apply
// window sub-sampling and noise as configured. `threads` parallelizes over
// trajectories without changing results.
Dataset generate_dataset(const RunConfig& config, int threads = 1);

}  // namespace consflux
