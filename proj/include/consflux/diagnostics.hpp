#pragma once

#include "consflux/training.hpp"

namespace consflux {

// Conserved-quantity remainder along a model rollout, one column per
// recorded time (l = 0..steps; the l = 0 column is zero).
Matrix remainder_series(const ModelSpec& model, const StateField& u0, int steps, double dt,
                        const BoundaryFluxSeries& flux_series);

struct ErrorNorms {
  Vector l1;    // per component, dx-weighted
  Vector l2;
  Vector linf;
};

// Restrict the fine reference onto the prediction grid (block averaging),
// then report L1 = sum |e| dx, L2 = sqrt(sum e^2 dx), Linf = max |e|.
ErrorNorms error_norms(const StateField& prediction, const StateField& reference_fine);

// Absolute per-cell error on the prediction grid after restriction.
Matrix pointwise_error(const StateField& prediction, const StateField& reference_fine);

struct ShockLocation {
  double x = 0.0;      // edge coordinate of the largest jump
  double jump = 0.0;   // its magnitude
  bool significant = false;  // false when the jump is below threshold
};

// Edge maximizing |u_{j+1} - u_j|; ties resolve to the smaller x. Jumps
// below 1e-8 are flagged as "no shock".
ShockLocation shock_location(const StateField& field, int component);

// Everything needed to reproduce the evaluation figures for one run.
struct EvaluationReport {
  std::string config_echo;               // JSON text
  StateField profile_prediction;         // final common snapshot
  StateField profile_reference;          // restricted to the prediction grid
  Matrix abs_error;                      // per component x cell
  ErrorNorms norms;
  Matrix remainder_prediction;           // n_comp x (n_times)
  Matrix remainder_reference;
  std::vector<double> remainder_times;
  std::vector<ShockLocation> shocks_prediction;  // per component
  std::vector<ShockLocation> shocks_reference;
  bool has_profiles = false;
};

// Compare a predicted trajectory against a (possibly finer) reference
// trajectory at their final common time.
EvaluationReport evaluate_prediction(const Trajectory& prediction, const Trajectory& reference,
                                     const SystemSpec& sys, BoundaryKind bc);

// Write metrics.json plus profiles.csv, errors.csv, remainder.csv and
// summary.csv under out_dir.
void emit_report(const EvaluationReport& report, const std::string& out_dir);

}  // namespace consflux
