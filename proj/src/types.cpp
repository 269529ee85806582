#include "consflux/types.hpp"

#include <cmath>

namespace consflux {

int n_components(SystemId id) {
  switch (id) {
    case SystemId::Burgers: return 1;
    case SystemId::ShallowWater: return 2;
    case SystemId::Euler: return 3;
  }
  throw ValidationError("unknown system id");
}

std::string to_string(SystemId id) {
  switch (id) {
    case SystemId::Burgers: return "burgers";
    case SystemId::ShallowWater: return "shallow_water";
    case SystemId::Euler: return "euler";
  }
  throw ValidationError("unknown system id");
}

SystemId system_from_string(const std::string& name) {
  if (name == "burgers") return SystemId::Burgers;
  if (name == "shallow_water") return SystemId::ShallowWater;
  if (name == "euler") return SystemId::Euler;
  throw ValidationError("unknown system: " + name);
}

std::string to_string(BoundaryKind bc) {
  return bc == BoundaryKind::Periodic ? "periodic" : "zeroth_order";
}

BoundaryKind boundary_from_string(const std::string& name) {
  if (name == "periodic") return BoundaryKind::Periodic;
  if (name == "zeroth_order") return BoundaryKind::ZerothOrder;
  throw ValidationError("unknown boundary condition: " + name);
}

Grid1D::Grid1D(double a_, double b_, int n_cells_) : a(a_), b(b_), n_cells(n_cells_) {
  require(b > a, "grid requires b > a");
  require(n_cells >= 4, "grid requires n_cells >= 4");
}

StateField::StateField(Grid1D grid_, Matrix values_, double time_)
    : grid(grid_), values(std::move(values_)), time(time_) {
  require(values.cols() == grid.n_cells, "state values must have n_cells columns");
  require(values.rows() >= 1, "state needs at least one component");
  if (!values.allFinite()) throw NumericError("state values must be finite");
}

void Trajectory::validate() const {
  require(!snapshots.empty(), "trajectory has no snapshots");
  require(dt > 0.0, "trajectory dt must be positive");
  const auto& first = snapshots.front();
  for (std::size_t l = 0; l < snapshots.size(); ++l) {
    const auto& s = snapshots[l];
    require(s.grid == first.grid && s.n_comp() == first.n_comp(),
            "trajectory snapshots must share grid and components");
    require(std::abs(s.time - (first.time + double(l) * dt)) <= 1e-9 * std::max(1.0, std::abs(s.time)),
            "trajectory snapshot times must be evenly spaced by dt");
  }
}

void Dataset::validate() const {
  require(!trajectories.empty(), "dataset has no trajectories");
  for (const auto& t : trajectories) {
    t.validate();
    require(t.snapshots.front().grid == grid(), "dataset trajectories must share one grid");
    require(t.snapshots.front().n_comp() == n_comp(), "dataset trajectories must share components");
    require(t.dt == dt(), "dataset trajectories must share dt");
    require(static_cast<int>(t.snapshots.size()) == n_snapshots(),
            "dataset trajectories must share length");
  }
  require(n_comp() == n_components(system), "component count must match system");
}

Matrix ghost_pad(const Matrix& values, BoundaryKind bc, int left, int right) {
  const int n = static_cast<int>(values.cols());
  require(left >= 0 && right >= 0, "padding widths must be nonnegative");
  require(left <= n && right <= n, "padding wider than the domain");
  Matrix padded(values.rows(), n + left + right);
  padded.middleCols(left, n) = values;
  if (bc == BoundaryKind::Periodic) {
    for (int i = 0; i < left; ++i) padded.col(i) = values.col(n - left + i);
    for (int i = 0; i < right; ++i) padded.col(left + n + i) = values.col(i);
  } else {
    for (int i = 0; i < left; ++i) padded.col(i) = values.col(0);
    for (int i = 0; i < right; ++i) padded.col(left + n + i) = values.col(n - 1);
  }
  return padded;
}

Matrix ghost_pad(const StateField& field, BoundaryKind bc, int left, int right) {
  return ghost_pad(field.values, bc, left, right);
}

StateField restrict_to_coarse(const StateField& fine, int factor) {
  require(factor >= 1, "coarsening factor must be >= 1");
  require(fine.n_cells() % factor == 0, "coarsening factor must divide n_cells");
  const int nc = fine.n_cells() / factor;
  Matrix coarse(fine.n_comp(), nc);
  for (int j = 0; j < nc; ++j)
    coarse.col(j) = fine.values.middleCols(j * factor, factor).rowwise().mean();
  return StateField(Grid1D(fine.grid.a, fine.grid.b, nc), std::move(coarse), fine.time);
}

Vector total_conserved(const StateField& field) {
  return field.values.rowwise().sum() * field.grid.dx();
}

}  // namespace consflux
