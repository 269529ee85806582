#pragma once

#include <functional>

#include "consflux/system.hpp"
#include "consflux/types.hpp"

namespace consflux {

enum class NumericalFlux { EngquistOsher, Hlle };
std::string to_string(NumericalFlux f);
NumericalFlux numerical_flux_from_string(const std::string& name);

// Either a fixed step or a CFL number in (0, 1]; with a CFL number the step
// is re-evaluated from the current max wave speed and clipped so snapshot
// times are hit exactly.
struct CflPolicy {
  enum class Mode { FixedDt, Number };
  Mode mode = Mode::FixedDt;
  double value = 0.0;

  static CflPolicy fixed_dt(double dt);
  static CflPolicy number(double cfl);
};

using RhsFn = std::function<StateField(const StateField&)>;

// One TVD-RK3 step: u1 = u + dt r(u); u2 = 3/4 u + 1/4 u1 + 1/4 dt r(u1);
// out = 1/3 u + 2/3 u2 + 2/3 dt r(u2). Errors on non-finite stage values.
StateField tvd_rk3_step(const StateField& field, const RhsFn& rhs, double dt);

// First-order Godunov-type semi-discrete RHS: edge fluxes of adjacent cell
// averages, then -(f_{j+1/2} - f_{j-1/2}) / dx.
StateField fv_rhs(const StateField& field, const SystemSpec& sys, BoundaryKind bc,
                  NumericalFlux flux);

// March the reference solver from `ic` to t_end, recording snapshots at
// multiples of record_dt (the initial state included).
Trajectory solve_reference(const StateField& ic, const SystemSpec& sys, BoundaryKind bc,
                           double t_end, const CflPolicy& cfl, double record_dt);

}  // namespace consflux
