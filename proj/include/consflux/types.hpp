#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "consflux/errors.hpp"

namespace consflux {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class SystemId { Burgers, ShallowWater, Euler };

// Component ordering is fixed: Burgers (u); SWE (h, hv); Euler (rho, rho*u, E).
int n_components(SystemId id);
std::string to_string(SystemId id);
SystemId system_from_string(const std::string& name);

enum class BoundaryKind { Periodic, ZerothOrder };
std::string to_string(BoundaryKind bc);
BoundaryKind boundary_from_string(const std::string& name);

// Uniform cell-centered grid on (a, b): cell j has center a + (j + 1/2) dx,
// j = 0..n_cells-1.
struct Grid1D {
  double a = 0.0;
  double b = 1.0;
  int n_cells = 0;

  Grid1D() = default;
  Grid1D(double a_, double b_, int n_cells_);

  double dx() const { return (b - a) / n_cells; }
  double center(int j) const { return a + (j + 0.5) * dx(); }
  double edge(int e) const { return a + e * dx(); }
  bool operator==(const Grid1D&) const = default;
};

// Per-component cell averages at one time instant.
struct StateField {
  Grid1D grid;
  Matrix values;  // n_comp x n_cells
  double time = 0.0;

  StateField() = default;
  StateField(Grid1D grid_, Matrix values_, double time_ = 0.0);

  int n_comp() const { return static_cast<int>(values.rows()); }
  int n_cells() const { return grid.n_cells; }
};

// L+1 snapshots evolved from one sampled initial condition, at times
// t0 + l*dt. ic_params records the sampled IC parameters.
struct Trajectory {
  std::vector<StateField> snapshots;
  double dt = 0.0;
  std::map<std::string, double> ic_params;

  int n_transitions() const { return static_cast<int>(snapshots.size()) - 1; }
  void validate() const;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  SystemId system = SystemId::Burgers;
  BoundaryKind bc = BoundaryKind::Periodic;
  std::uint64_t seed = 0;
  double noise_level = 0.0;
  std::string config_hash;
  double gravity = 1.0;  // system closure parameters
  double gamma = 1.4;

  int n_traj() const { return static_cast<int>(trajectories.size()); }
  int n_transitions() const { return n_snapshots() - 1; }
  const Grid1D& grid() const { return trajectories.front().snapshots.front().grid; }
  int n_comp() const { return trajectories.front().snapshots.front().n_comp(); }
  int n_snapshots() const { return static_cast<int>(trajectories.front().snapshots.size()); }
  double dt() const { return trajectories.front().dt; }
  void validate() const;
};

// Ghost padding. Periodic wraps modulo n_cells; ZerothOrder replicates the
// first/last cell. Widths may not exceed n_cells.
Matrix ghost_pad(const Matrix& values, BoundaryKind bc, int left, int right);
Matrix ghost_pad(const StateField& field, BoundaryKind bc, int left, int right);

// Block-average a fine field onto a grid coarsened by `factor`.
StateField restrict_to_coarse(const StateField& fine, int factor);

// Per-component discrete totals sum_j u[c][j] * dx.
Vector total_conserved(const StateField& field);

}  // namespace consflux
