#include "consflux/presets.hpp"

#include <cmath>

namespace consflux {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

RunConfig burgers_base() {
  RunConfig c;
  c.system = SystemId::Burgers;
  c.bc = BoundaryKind::Periodic;
  c.domain_a = 0.0;
  c.domain_b = kTwoPi;
  c.n_cells = 512;
  c.dt = 0.005;
  c.n_traj = 200;
  c.length = 20;
  c.extended_length = 300;
  c.sampler = IcSamplerSpec::burgers_sine();
  return c;
}

RunConfig swe_base() {
  RunConfig c;
  c.system = SystemId::ShallowWater;
  c.bc = BoundaryKind::ZerothOrder;
  c.domain_a = -5.0;
  c.domain_b = 5.0;
  c.n_cells = 512;
  c.dt = 0.005;
  c.n_traj = 200;
  c.length = 20;
  c.sampler = IcSamplerSpec::dam_break();
  c.gravity = 1.0;
  return c;
}

RunConfig euler_base() {
  RunConfig c;
  c.system = SystemId::Euler;
  c.bc = BoundaryKind::ZerothOrder;
  c.domain_a = -5.0;
  c.domain_b = 5.0;
  c.n_cells = 512;
  c.dt = 0.002;
  c.n_traj = 300;
  c.length = 20;
  c.extended_length = 300;
  c.sampler = IcSamplerSpec::shu_osher();
  c.gamma = 1.4;
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"burgers-caseI", "burgers-caseII", "burgers-caseIII",
          "swe-caseI",     "swe-caseII",     "swe-caseIII",
          "euler-caseI",   "euler-caseII",   "euler-caseIII"};
}

RunConfig preset_run_config(const std::string& name) {
  // Case I: dense noise-free; case II: sparse (coarse-grid solves);
  // case III: dense with noise, default level 100%.
  if (name == "burgers-caseI") return burgers_base();
  if (name == "burgers-caseII") {
    RunConfig c = burgers_base();
    c.n_cells = 32;
    return c;
  }
  if (name == "burgers-caseIII") {
    RunConfig c = burgers_base();
    c.noise_level = 1.0;
    return c;
  }
  if (name == "swe-caseI") return swe_base();
  if (name == "swe-caseII") {
    RunConfig c = swe_base();
    c.n_cells = 64;
    return c;
  }
  if (name == "swe-caseIII") {
    RunConfig c = swe_base();
    c.noise_level = 1.0;
    return c;
  }
  if (name == "euler-caseI") return euler_base();
  if (name == "euler-caseII") {
    RunConfig c = euler_base();
    c.n_cells = 128;
    return c;
  }
  if (name == "euler-caseIII") {
    RunConfig c = euler_base();
    c.noise_level = 1.0;
    return c;
  }
  throw ValidationError("unknown preset: " + name);
}

std::vector<std::string> figure_ic_names() {
  return {"burgers-figure", "swe-figure", "euler-figure"};
}

Grid1D figure_ic_grid(const std::string& name, int n_cells) {
  if (name == "burgers-figure") return Grid1D(0.0, kTwoPi, n_cells > 0 ? n_cells : 512);
  if (name == "swe-figure" || name == "euler-figure")
    return Grid1D(-5.0, 5.0, n_cells > 0 ? n_cells : 512);
  throw ValidationError("unknown figure IC: " + name);
}

StateField figure_ic(const std::string& name, const Grid1D& grid) {
  if (name == "burgers-figure") return evaluate_burgers_ic(grid, 0.06342, 1.17322);
  if (name == "swe-figure")
    return evaluate_dam_break_ic(grid, 3.5691196, 1.17867352, -0.06466697, -0.04519738,
                                 0.00383271);
  if (name == "euler-figure")
    return evaluate_shu_osher_ic(grid, 3.857135, 0.2, 10.33333, 1.0, 2.62936, -4.0, 3.29867,
                                 1.4);
  throw ValidationError("unknown figure IC: " + name);
}

}  // namespace consflux
