#pragma once

#include <limits>
#include <span>

#include "consflux/flux_model.hpp"
#include "consflux/system.hpp"
#include "consflux/types.hpp"

namespace consflux {

struct TrainConfig {
  ModelForm form = ModelForm::Cfn;
  double lambda2 = 0.0;
  bool lambda2_auto = false;
  std::vector<double> lambda2_grid = {1.0, 5e-2, 1e-2, 1e-4, 1e-6};
  std::string dataset_path;
  int epochs = 10000;
  double lr = 1e-4;
  int batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  int checkpoint_every = 1000;  // 0 = final checkpoint only
  int probe_epochs = 200;       // lambda2 selection budget
  int max_consecutive_failures = 25;
  std::vector<int> hidden = {64, 64, 64, 64, 64};
  std::string out_dir;  // empty = keep everything in memory

  void validate() const;
};

struct EpochRecord {
  int epoch;
  double loss;
  double reg_term;
  double lambda2;
  double wall_time_s;
};

struct TrainResult {
  ModelSpec model;
  std::vector<EpochRecord> history;
  // Loss of the freshly initialized model (first epoch's pre-update value).
  double initial_loss = std::numeric_limits<double>::quiet_NaN();
};

// Time-averaged boundary fluxes per observation interval, trapezoid rule on
// the bracketing snapshots' first/last cell states. Periodic boundaries
// contribute nothing and yield zeros by convention.
struct BoundaryFluxSeries {
  Matrix at_a;  // n_comp x L
  Matrix at_b;
  int length() const { return static_cast<int>(at_a.cols()); }
};

BoundaryFluxSeries boundary_flux_series(const Trajectory& trajectory, const SystemSpec& sys,
                                        BoundaryKind bc);

// Conserved-quantity remainder per component and interval end l = 1..L:
// |sum_j (u_j(t_l) - u_j(t_0)) dx - sum_{k<=l} (F_a - F_b) dt|.
Matrix conserved_remainder(const std::vector<StateField>& prediction,
                           const StateField& initial, const BoundaryFluxSeries& flux_series,
                           double dt);

// Mean over trajectories and steps of the squared Euclidean mismatch between
// the model rollout (seeded at each observed t_0) and the observations.
double recurrent_loss(const ModelSpec& model, std::span<const Trajectory> batch);

// Sum over trajectories, components and steps of the squared remainder of
// the model rollout.
double regularizer(const ModelSpec& model, std::span<const Trajectory> batch,
                   std::span<const BoundaryFluxSeries> flux_series);

double regularized_loss(const ModelSpec& model, std::span<const Trajectory> batch,
                        double lambda2, std::span<const BoundaryFluxSeries> flux_series);

// Short probe training per candidate, identical seed and config; returns the
// candidate with the smallest one-step residual on held-out trajectories,
// ties broken toward the smaller value.
double select_lambda2(const TrainConfig& config, const Dataset& dataset);

TrainResult train(const TrainConfig& config, const Dataset& dataset);
TrainResult train(const TrainConfig& config);

}  // namespace consflux
