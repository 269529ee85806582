#pragma once

#include "consflux/pipeline.hpp"

namespace consflux {

// Named experiment presets covering the full benchmark matrix
// (three systems x dense / sparse / noisy observation cases).
std::vector<std::string> preset_names();
RunConfig preset_run_config(const std::string& name);

// Deterministic single initial conditions used for the benchmark figures.
std::vector<std::string> figure_ic_names();
StateField figure_ic(const std::string& name, const Grid1D& grid);
// Default grid of the figure IC's system at the given resolution (0 = preset default).
Grid1D figure_ic_grid(const std::string& name, int n_cells = 0);

}  // namespace consflux
