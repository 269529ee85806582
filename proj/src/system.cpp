#include "consflux/system.hpp"

#include <algorithm>
#include <cmath>

namespace consflux {

SystemSpec SystemSpec::shallow_water(double g) {
  require(g > 0.0, "shallow water requires g > 0");
  return {SystemId::ShallowWater, g, 1.4};
}

SystemSpec SystemSpec::euler(double gamma) {
  require(gamma > 1.0, "euler requires gamma > 1");
  return {SystemId::Euler, 1.0, gamma};
}

EulerPrimitive euler_primitive(const Vector& state, double gamma) {
  const double rho = state(0);
  if (!(rho > 0.0)) throw NumericError("euler state has nonpositive density");
  const double u = state(1) / rho;
  const double p = (gamma - 1.0) * (state(2) - 0.5 * rho * u * u);
  if (!(p > 0.0)) throw NumericError("euler state has nonpositive pressure");
  return {rho, u, p};
}

namespace {

void check_swe(const Vector& state) {
  if (!(state(0) > 0.0)) throw NumericError("shallow water state has nonpositive depth");
}

// Characteristic speed bounds of one state point.
void wave_bounds(const Vector& state, const SystemSpec& sys, double& lo, double& hi) {
  switch (sys.id) {
    case SystemId::Burgers:
      lo = hi = state(0);
      return;
    case SystemId::ShallowWater: {
      check_swe(state);
      const double h = state(0);
      const double v = state(1) / h;
      const double c = std::sqrt(sys.gravity * h);
      lo = v - c;
      hi = v + c;
      return;
    }
    case SystemId::Euler: {
      const auto w = euler_primitive(state, sys.gamma);
      const double c = std::sqrt(sys.gamma * w.p / w.rho);
      lo = w.u - c;
      hi = w.u + c;
      return;
    }
  }
  throw ValidationError("unknown system id");
}

}  // namespace

Vector physical_flux(const Vector& state_point, const SystemSpec& sys) {
  require(state_point.size() == sys.n_comp(), "state size must match system");
  Vector f(state_point.size());
  switch (sys.id) {
    case SystemId::Burgers:
      f(0) = 0.5 * state_point(0) * state_point(0);
      return f;
    case SystemId::ShallowWater: {
      check_swe(state_point);
      const double h = state_point(0);
      const double hv = state_point(1);
      f(0) = hv;
      f(1) = hv * hv / h + 0.5 * sys.gravity * h * h;
      return f;
    }
    case SystemId::Euler: {
      const auto w = euler_primitive(state_point, sys.gamma);
      f(0) = state_point(1);
      f(1) = state_point(1) * w.u + w.p;
      f(2) = w.u * (state_point(2) + w.p);
      return f;
    }
  }
  throw ValidationError("unknown system id");
}

double engquist_osher_flux(double ul, double ur) {
  const double up = std::max(ul, 0.0);
  const double um = std::min(ur, 0.0);
  return 0.5 * up * up + 0.5 * um * um;
}

Vector hlle_flux(const Vector& left, const Vector& right, const SystemSpec& sys) {
  double lo_l, hi_l, lo_r, hi_r;
  wave_bounds(left, sys, lo_l, hi_l);
  wave_bounds(right, sys, lo_r, hi_r);

  // Roe-averaged state speeds.
  double roe_lo = 0.0, roe_hi = 0.0;
  switch (sys.id) {
    case SystemId::Burgers:
      roe_lo = roe_hi = 0.5 * (left(0) + right(0));
      break;
    case SystemId::ShallowWater: {
      const double sl = std::sqrt(left(0));
      const double sr = std::sqrt(right(0));
      const double v = (sl * (left(1) / left(0)) + sr * (right(1) / right(0))) / (sl + sr);
      const double c = std::sqrt(0.5 * sys.gravity * (left(0) + right(0)));
      roe_lo = v - c;
      roe_hi = v + c;
      break;
    }
    case SystemId::Euler: {
      const auto wl = euler_primitive(left, sys.gamma);
      const auto wr = euler_primitive(right, sys.gamma);
      const double sl = std::sqrt(wl.rho);
      const double sr = std::sqrt(wr.rho);
      const double u = (sl * wl.u + sr * wr.u) / (sl + sr);
      const double hl = (left(2) + wl.p) / wl.rho;
      const double hr = (right(2) + wr.p) / wr.rho;
      const double h = (sl * hl + sr * hr) / (sl + sr);
      const double c2 = (sys.gamma - 1.0) * (h - 0.5 * u * u);
      if (!(c2 > 0.0)) throw NumericError("roe average has nonpositive sound speed");
      const double c = std::sqrt(c2);
      roe_lo = u - c;
      roe_hi = u + c;
      break;
    }
  }

  const double s_l = std::min(lo_l, roe_lo);
  const double s_r = std::max(hi_r, roe_hi);

  if (s_l >= 0.0) return physical_flux(left, sys);
  if (s_r <= 0.0) return physical_flux(right, sys);
  const Vector fl = physical_flux(left, sys);
  const Vector fr = physical_flux(right, sys);
  return (s_r * fl - s_l * fr + s_l * s_r * (right - left)) / (s_r - s_l);
}

double max_wave_speed(const StateField& field, const SystemSpec& sys) {
  require(field.n_comp() == sys.n_comp(), "field components must match system");
  double speed = 0.0;
  for (int j = 0; j < field.n_cells(); ++j) {
    double lo, hi;
    wave_bounds(field.values.col(j), sys, lo, hi);
    speed = std::max(speed, std::max(std::abs(lo), std::abs(hi)));
  }
  return speed;
}

}  // namespace consflux
