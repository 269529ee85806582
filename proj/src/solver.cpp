#include "consflux/solver.hpp"

#include <cmath>

namespace consflux {

std::string to_string(NumericalFlux f) {
  return f == NumericalFlux::EngquistOsher ? "engquist_osher" : "hlle";
}

NumericalFlux numerical_flux_from_string(const std::string& name) {
  if (name == "engquist_osher" || name == "eo") return NumericalFlux::EngquistOsher;
  if (name == "hlle") return NumericalFlux::Hlle;
  throw ValidationError("unknown numerical flux: " + name);
}

CflPolicy CflPolicy::fixed_dt(double dt) {
  require(dt > 0.0, "fixed dt must be positive");
  return {Mode::FixedDt, dt};
}

CflPolicy CflPolicy::number(double cfl) {
  require(cfl > 0.0 && cfl <= 1.0, "CFL number must lie in (0, 1]");
  return {Mode::Number, cfl};
}

namespace {

void check_stage(const Matrix& values, double time) {
  if (!values.allFinite())
    throw BlowUpError("non-finite state in RK stage near t = " + std::to_string(time), time, -1);
}

}  // namespace

StateField tvd_rk3_step(const StateField& field, const RhsFn& rhs, double dt) {
  require(dt > 0.0, "rk3 step requires dt > 0");
  const Matrix& u = field.values;

  StateField u1(field.grid, u + dt * rhs(field).values, field.time);
  check_stage(u1.values, field.time);

  StateField u2(field.grid, 0.75 * u + 0.25 * u1.values + 0.25 * dt * rhs(u1).values,
                field.time);
  check_stage(u2.values, field.time);

  Matrix out = (1.0 / 3.0) * u + (2.0 / 3.0) * u2.values + (2.0 / 3.0) * dt * rhs(u2).values;
  check_stage(out, field.time);
  return StateField(field.grid, std::move(out), field.time + dt);
}

StateField fv_rhs(const StateField& field, const SystemSpec& sys, BoundaryKind bc,
                  NumericalFlux flux) {
  require(field.n_comp() == sys.n_comp(), "field components must match system");
  if (flux == NumericalFlux::EngquistOsher)
    require(sys.id == SystemId::Burgers, "Engquist-Osher flux applies to Burgers only");

  const int n = field.n_cells();
  const double dx = field.grid.dx();
  const Matrix padded = ghost_pad(field, bc, 1, 1);

  // Edge e separates padded columns e and e+1; e = 0..n.
  Matrix edge_flux(field.n_comp(), n + 1);
  if (flux == NumericalFlux::EngquistOsher) {
    for (int e = 0; e <= n; ++e)
      edge_flux(0, e) = engquist_osher_flux(padded(0, e), padded(0, e + 1));
  } else {
    for (int e = 0; e <= n; ++e)
      edge_flux.col(e) = hlle_flux(padded.col(e), padded.col(e + 1), sys);
  }

  Matrix rhs = (edge_flux.leftCols(n) - edge_flux.rightCols(n)) / dx;
  return StateField(field.grid, std::move(rhs), field.time);
}

Trajectory solve_reference(const StateField& ic, const SystemSpec& sys, BoundaryKind bc,
                           double t_end, const CflPolicy& cfl, double record_dt) {
  require(t_end > 0.0, "t_end must be positive");
  require(record_dt > 0.0, "record_dt must be positive");
  const NumericalFlux flux =
      sys.id == SystemId::Burgers ? NumericalFlux::EngquistOsher : NumericalFlux::Hlle;
  const RhsFn rhs = [&](const StateField& u) { return fv_rhs(u, sys, bc, flux); };

  const long n_records = std::lround(t_end / record_dt);
  require(std::abs(n_records * record_dt - t_end) <= 1e-9 * t_end,
          "t_end must be a multiple of record_dt");

  Trajectory traj;
  traj.dt = record_dt;
  traj.snapshots.reserve(n_records + 1);
  traj.snapshots.push_back(ic);

  StateField u = ic;
  long steps_per_record = 0;
  if (cfl.mode == CflPolicy::Mode::FixedDt) {
    steps_per_record = std::lround(record_dt / cfl.value);
    require(steps_per_record >= 1 &&
                std::abs(double(steps_per_record) * cfl.value - record_dt) <= 1e-9 * record_dt,
            "record_dt must be an integer multiple of the fixed step");
  }

  for (long rec = 1; rec <= n_records; ++rec) {
    const double t_target = ic.time + double(rec) * record_dt;
    try {
      if (cfl.mode == CflPolicy::Mode::FixedDt) {
        const double dt = record_dt / double(steps_per_record);
        for (long s = 0; s < steps_per_record; ++s) u = tvd_rk3_step(u, rhs, dt);
      } else {
        while (u.time < t_target - 1e-12 * std::max(1.0, std::abs(t_target))) {
          const double speed = max_wave_speed(u, sys);
          require(speed > 0.0, "zero wave speed under CFL-number stepping");
          double dt = cfl.value * u.grid.dx() / speed;
          dt = std::min(dt, t_target - u.time);  // clip to hit the snapshot time
          u = tvd_rk3_step(u, rhs, dt);
        }
      }
    } catch (const NumericError& e) {
      throw BlowUpError("reference solve failed near t = " + std::to_string(u.time) + ": " +
                            e.what(),
                        u.time, rec);
    }
    u.time = t_target;  // pin recorded times against fp accumulation
    traj.snapshots.push_back(u);
  }
  return traj;
}

}  // namespace consflux
