#pragma once

#include "consflux/types.hpp"

namespace consflux {

// Physical system with its closure parameters (gravity for shallow water,
// adiabatic index for Euler).
struct SystemSpec {
  SystemId id = SystemId::Burgers;
  double gravity = 1.0;
  double gamma = 1.4;

  static SystemSpec burgers() { return {SystemId::Burgers, 1.0, 1.4}; }
  static SystemSpec shallow_water(double g = 1.0);
  static SystemSpec euler(double gamma = 1.4);

  int n_comp() const { return n_components(id); }
};

// Primitive variables for the Euler system; construction validates
// admissibility (rho > 0, p > 0).
struct EulerPrimitive {
  double rho;
  double u;
  double p;
};
EulerPrimitive euler_primitive(const Vector& state, double gamma);

// Exact flux f(u) of the governing system, evaluated at one state point.
Vector physical_flux(const Vector& state_point, const SystemSpec& sys);

// Engquist-Osher two-point flux for Burgers.
double engquist_osher_flux(double ul, double ur);

// HLLE two-wave flux with Einfeldt speed estimates from Roe averages.
Vector hlle_flux(const Vector& left, const Vector& right, const SystemSpec& sys);

// Fastest characteristic speed over the whole field.
double max_wave_speed(const StateField& field, const SystemSpec& sys);

}  // namespace consflux
