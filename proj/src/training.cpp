#include "consflux/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "consflux/dataset_io.hpp"

namespace consflux {

void TrainConfig::validate() const {
  require(epochs >= 0, "epochs must be >= 0");
  require(lr > 0.0, "learning rate must be positive");
  require(batch_size >= 0, "batch size must be >= 0");
  require(lambda2 >= 0.0, "lambda2 must be >= 0");
  require(checkpoint_every >= 0, "checkpoint cadence must be >= 0");
  require(probe_epochs >= 0, "probe epochs must be >= 0");
  require(max_consecutive_failures >= 1, "failure cap must be >= 1");
  require(!hidden.empty(), "network needs at least one hidden layer");
  if (form != ModelForm::NcfnReg)
    require(lambda2 == 0.0 && !lambda2_auto, "lambda2 applies to ncfn-reg only");
}

BoundaryFluxSeries boundary_flux_series(const Trajectory& trajectory, const SystemSpec& sys,
                                        BoundaryKind bc) {
  trajectory.validate();
  const int length = trajectory.n_transitions();
  const int n_comp = trajectory.snapshots.front().n_comp();
  BoundaryFluxSeries series;
  series.at_a = Matrix::Zero(n_comp, length);
  series.at_b = Matrix::Zero(n_comp, length);
  if (bc == BoundaryKind::Periodic) return series;  // the two terms cancel

  require(n_comp == sys.n_comp(), "trajectory components must match system");
  const int last = trajectory.snapshots.front().n_cells() - 1;
  for (int l = 0; l < length; ++l) {
    const auto& s0 = trajectory.snapshots[l];
    const auto& s1 = trajectory.snapshots[l + 1];
    series.at_a.col(l) =
        0.5 * (physical_flux(s0.values.col(0), sys) + physical_flux(s1.values.col(0), sys));
    series.at_b.col(l) =
        0.5 * (physical_flux(s0.values.col(last), sys) + physical_flux(s1.values.col(last), sys));
  }
  return series;
}

Matrix conserved_remainder(const std::vector<StateField>& prediction,
                           const StateField& initial, const BoundaryFluxSeries& flux_series,
                           double dt) {
  const int length = static_cast<int>(prediction.size());
  require(flux_series.length() >= length, "flux series shorter than prediction");
  const double dx = initial.grid.dx();
  const Vector base = initial.values.rowwise().sum() * dx;
  Matrix remainder(initial.n_comp(), length);
  Vector flux_budget = Vector::Zero(initial.n_comp());
  for (int l = 0; l < length; ++l) {
    flux_budget += (flux_series.at_a.col(l) - flux_series.at_b.col(l)) * dt;
    const Vector totals = prediction[l].values.rowwise().sum() * dx;
    remainder.col(l) = (totals - base - flux_budget).cwiseAbs();
  }
  return remainder;
}

namespace {

struct BatchTensors {
  Matrix u0;
  std::vector<Matrix> targets;        // observations at l = 1..L
  std::vector<Matrix> totals_target;  // conserved totals implied by the data
  ad::FieldLayout layout;
  int length = 0;
  double dt = 0.0;
};

BatchTensors make_batch(std::span<const Trajectory> batch, double dx, bool with_reg,
                        std::span<const BoundaryFluxSeries> series) {
  require(!batch.empty(), "batch must not be empty");
  const int n_comp = batch[0].snapshots.front().n_comp();
  const int n_cells = batch[0].snapshots.front().n_cells();
  const int b_count = static_cast<int>(batch.size());

  BatchTensors bt;
  bt.layout = {n_comp, n_cells, b_count};
  bt.length = batch[0].n_transitions();
  bt.dt = batch[0].dt;
  require(bt.length >= 1, "trajectories need at least one transition");

  bt.u0.resize(n_comp, bt.layout.cols());
  for (int b = 0; b < b_count; ++b)
    bt.u0.middleCols(b * n_cells, n_cells) = batch[b].snapshots.front().values;

  bt.targets.resize(bt.length);
  for (int l = 1; l <= bt.length; ++l) {
    Matrix target(n_comp, bt.layout.cols());
    for (int b = 0; b < b_count; ++b)
      target.middleCols(b * n_cells, n_cells) = batch[b].snapshots[l].values;
    bt.targets[l - 1] = std::move(target);
  }

  if (with_reg) {
    require(series.size() == batch.size(), "flux series must match batch");
    bt.totals_target.resize(bt.length);
    Matrix budget = Matrix::Zero(n_comp, b_count);
    Matrix base(n_comp, b_count);
    for (int b = 0; b < b_count; ++b)
      base.col(b) = batch[b].snapshots.front().values.rowwise().sum() * dx;
    for (int l = 0; l < bt.length; ++l) {
      for (int b = 0; b < b_count; ++b)
        budget.col(b) += (series[b].at_a.col(l) - series[b].at_b.col(l)) * bt.dt;
      bt.totals_target[l] = base + budget;
    }
  }
  return bt;
}

struct LossParts {
  double data = 0.0;
  double reg = 0.0;
  double total() const { return data; }
};

// One recorded forward+backward over a trajectory chunk. The data term is
// scaled by 1/(n_total * L) inside the tape so chunk gradients sum exactly
// to the full-batch gradient.
LossParts chunk_loss(const ModelSpec& model, const BatchTensors& bt, int n_total,
                     double lambda2, GradientBundle* grads) {
  ad::Tape tape;
  const ad::MlpVars net = ad::bind_mlp(tape, model.mlp);
  const auto states = rollout_tape(tape, net, model, bt.u0, bt.layout, bt.length, bt.dt);

  ad::Var sq_sum;
  for (int l = 0; l < bt.length; ++l) {
    const ad::Var term = tape.sq_diff_sum(states[l], bt.targets[l]);
    sq_sum = l == 0 ? term : tape.add(sq_sum, term);
  }
  const double norm = 1.0 / (double(n_total) * double(bt.length));
  ad::Var root = tape.scale(sq_sum, norm);

  ad::Var reg;
  if (!bt.totals_target.empty()) {
    for (int l = 0; l < bt.length; ++l) {
      const ad::Var totals = tape.block_totals(states[l], bt.layout, model.dx);
      const ad::Var term = tape.sq_diff_sum(totals, bt.totals_target[l]);
      reg = l == 0 ? term : tape.add(reg, term);
    }
    if (lambda2 > 0.0) root = tape.add(root, tape.scale(reg, lambda2));
  }

  LossParts parts;
  parts.data = tape.value(root)(0, 0) - (lambda2 > 0.0 && reg.valid()
                                             ? lambda2 * tape.value(reg)(0, 0)
                                             : 0.0);
  if (reg.valid()) parts.reg = tape.value(reg)(0, 0);

  if (grads) {
    tape.backward(root);
    GradientBundle g = ad::collect_gradients(tape, net, model.mlp);
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      grads->weights[l] += g.weights[l];
      grads->biases[l] += g.biases[l];
    }
  }
  return parts;
}

// Trajectory chunking keeps the recorded tape within a fixed memory budget;
// the chunk size depends only on the problem shape, not on the machine.
int chunk_size(const ad::FieldLayout& layout, int length, const MlpParams& mlp) {
  std::size_t per_stage = std::size_t(mlp.d_in()) * (layout.n_cells + 1);
  for (std::size_t l = 0; l + 1 < mlp.dims.size(); ++l)
    per_stage += 2 * std::size_t(mlp.dims[l + 1]) * (layout.n_cells + 1);
  const std::size_t per_traj = per_stage * 3 * std::size_t(length) * sizeof(double) * 2;
  constexpr std::size_t budget = std::size_t(1) << 30;  // 1 GiB of tape
  return std::max<std::size_t>(1, budget / std::max<std::size_t>(1, per_traj));
}

LossParts batch_loss_and_grad(const ModelSpec& model, std::span<const Trajectory> batch,
                              int n_total, double lambda2, bool with_reg,
                              std::span<const BoundaryFluxSeries> series,
                              GradientBundle* grads) {
  const int n_cells = batch[0].snapshots.front().n_cells();
  const int n_comp = batch[0].snapshots.front().n_comp();
  const int chunk = chunk_size({n_comp, n_cells, 1}, batch[0].n_transitions(), model.mlp);
  LossParts parts;
  for (std::size_t begin = 0; begin < batch.size(); begin += chunk) {
    const std::size_t count = std::min<std::size_t>(chunk, batch.size() - begin);
    const auto sub = batch.subspan(begin, count);
    const auto sub_series =
        with_reg ? series.subspan(begin, count) : std::span<const BoundaryFluxSeries>{};
    const BatchTensors bt = make_batch(sub, model.dx, with_reg, sub_series);
    const LossParts p = chunk_loss(model, bt, n_total, lambda2, grads);
    parts.data += p.data;
    parts.reg += p.reg;
  }
  return parts;
}

std::vector<BoundaryFluxSeries> all_flux_series(const Dataset& ds) {
  const SystemSpec sys = ds.system == SystemId::Burgers ? SystemSpec::burgers()
                         : ds.system == SystemId::ShallowWater
                             ? SystemSpec::shallow_water(ds.gravity)
                             : SystemSpec::euler(ds.gamma);
  std::vector<BoundaryFluxSeries> series;
  series.reserve(ds.trajectories.size());
  for (const auto& t : ds.trajectories) series.push_back(boundary_flux_series(t, sys, ds.bc));
  return series;
}

}  // namespace

double recurrent_loss(const ModelSpec& model, std::span<const Trajectory> batch) {
  const BatchTensors bt = make_batch(batch, model.dx, false, {});
  const auto states = rollout_batch(model, bt.u0, bt.layout, bt.length, bt.dt);
  double sum = 0.0;
  for (int l = 0; l < bt.length; ++l) sum += (states[l] - bt.targets[l]).squaredNorm();
  return sum / (double(batch.size()) * double(bt.length));
}

double regularizer(const ModelSpec& model, std::span<const Trajectory> batch,
                   std::span<const BoundaryFluxSeries> flux_series) {
  const BatchTensors bt = make_batch(batch, model.dx, true, flux_series);
  const auto states = rollout_batch(model, bt.u0, bt.layout, bt.length, bt.dt);
  double sum = 0.0;
  for (int l = 0; l < bt.length; ++l) {
    Matrix totals(bt.layout.n_comp, bt.layout.n_blocks);
    for (int b = 0; b < bt.layout.n_blocks; ++b)
      totals.col(b) =
          model.dx *
          states[l].middleCols(b * bt.layout.n_cells, bt.layout.n_cells).rowwise().sum();
    sum += (totals - bt.totals_target[l]).squaredNorm();
  }
  return sum;
}

double regularized_loss(const ModelSpec& model, std::span<const Trajectory> batch,
                        double lambda2, std::span<const BoundaryFluxSeries> flux_series) {
  require(lambda2 >= 0.0, "lambda2 must be >= 0");
  return recurrent_loss(model, batch) + lambda2 * regularizer(model, batch, flux_series);
}

namespace {

void write_history(const std::string& out_dir, const std::vector<EpochRecord>& history) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/history.csv";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open history for writing: " + path);
  out << "epoch,loss,reg_term,lambda2,wall_time_s\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.3f\n", r.epoch, r.loss, r.reg_term,
                  r.lambda2, r.wall_time_s);
    out << line;
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& dataset) {
  config.validate();
  dataset.validate();
#if defined(__GLIBC__)
  // The recorded tape allocates the same large blocks every epoch; keep them
  // on the heap instead of round-tripping through mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif

  double lambda2 = config.lambda2;
  if (config.form == ModelForm::NcfnReg && config.lambda2_auto) {
    TrainConfig base = config;
    base.lambda2_auto = false;
    lambda2 = select_lambda2(base, dataset);
  }

  const Grid1D grid = dataset.grid();
  Rng init_rng = Rng::stream(config.seed, rng_tag::init, 0);
  ModelSpec model = ModelSpec::make(config.form, dataset.n_comp(), dataset.bc, grid.dx(),
                                    config.hidden, init_rng, lambda2);

  const bool with_reg = config.form == ModelForm::NcfnReg;
  const std::vector<BoundaryFluxSeries> series =
      with_reg ? all_flux_series(dataset) : std::vector<BoundaryFluxSeries>{};

  CheckpointMeta meta;
  meta.seed = config.seed;
  meta.grid = grid;
  meta.dt = dataset.dt();
  meta.system = dataset.system;

  TrainResult result;
  result.history.reserve(config.epochs);

  const int n_total = dataset.n_traj();
  const int batch = config.batch_size > 0 ? std::min(config.batch_size, n_total) : n_total;
  AdamState adam = AdamState::zeros_like(model.mlp);
  const auto t_start = std::chrono::steady_clock::now();
  int consecutive_failures = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_acc = 0.0, reg_acc = 0.0;
    int covered = 0;
    bool failed = false;
    for (int begin = 0; begin < n_total && !failed; begin += batch) {
      const int count = std::min(batch, n_total - begin);
      const std::span<const Trajectory> slice(dataset.trajectories.data() + begin, count);
      const std::span<const BoundaryFluxSeries> slice_series =
          with_reg ? std::span<const BoundaryFluxSeries>(series.data() + begin, count)
                   : std::span<const BoundaryFluxSeries>{};
      GradientBundle grads = GradientBundle::zeros_like(model.mlp);
      try {
        const LossParts parts =
            batch_loss_and_grad(model, slice, count, lambda2, with_reg, slice_series, &grads);
        adam_step(model.mlp, grads, adam, config.lr);
        loss_acc += parts.data * count;
        reg_acc += parts.reg;
        covered += count;
      } catch (const NumericError&) {
        failed = true;  // skip this epoch's remaining updates, keep the model
      }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (failed) {
      consecutive_failures += 1;
      result.history.push_back(
          {epoch, std::numeric_limits<double>::quiet_NaN(), 0.0, lambda2, wall});
      if (consecutive_failures > config.max_consecutive_failures) {
        if (!config.out_dir.empty()) write_history(config.out_dir, result.history);
        throw NumericError("training aborted: " + std::to_string(consecutive_failures) +
                           " consecutive epochs with non-finite rollouts (epoch " +
                           std::to_string(epoch) + ")");
      }
    } else {
      consecutive_failures = 0;
      const double loss = loss_acc / double(covered);
      if (std::isnan(result.initial_loss)) result.initial_loss = loss;
      result.history.push_back({epoch, loss, reg_acc, lambda2, wall});
    }

    if (!config.out_dir.empty() && config.checkpoint_every > 0 &&
        epoch % config.checkpoint_every == 0 && epoch != config.epochs) {
      meta.epoch = epoch;
      meta.loss = result.history.back().loss;
      save_checkpoint(model, meta, config.out_dir + "/checkpoint_" + std::to_string(epoch) +
                                       ".json");
      write_history(config.out_dir, result.history);
    }
  }

  result.model = model;
  if (!config.out_dir.empty()) {
    meta.epoch = config.epochs;
    meta.loss = result.history.empty() ? 0.0 : result.history.back().loss;
    if (std::isnan(meta.loss)) meta.loss = 0.0;
    save_checkpoint(model, meta, config.out_dir + "/checkpoint.json");
    write_history(config.out_dir, result.history);
  }
  return result;
}

TrainResult train(const TrainConfig& config) {
  require(!config.dataset_path.empty(), "training requires a dataset path");
  return train(config, read_dataset(config.dataset_path));
}

double select_lambda2(const TrainConfig& config, const Dataset& dataset) {
  require(config.form == ModelForm::NcfnReg, "lambda2 selection applies to ncfn-reg only");
  require(!config.lambda2_grid.empty(), "lambda2 grid must not be empty");
  dataset.validate();

  const int n_total = dataset.n_traj();
  const int n_hold = std::max(1, n_total / 5);
  const int n_train = std::max(1, n_total - n_hold);

  Dataset probe_data = dataset;
  probe_data.trajectories.assign(dataset.trajectories.begin(),
                                 dataset.trajectories.begin() + n_train);

  double best_lambda2 = 0.0;
  double best_residual = std::numeric_limits<double>::infinity();
  bool any_ok = false;
  for (const double candidate : config.lambda2_grid) {
    TrainConfig probe = config;
    probe.lambda2 = candidate;
    probe.lambda2_auto = false;
    probe.epochs = config.probe_epochs;
    probe.out_dir.clear();
    double residual = std::numeric_limits<double>::infinity();
    try {
      const TrainResult r = train(probe, probe_data);
      // One-step prediction residual on the held-out trajectories.
      double sum = 0.0;
      for (int k = n_train; k < n_total; ++k) {
        const auto& traj = dataset.trajectories[k];
        const auto pred = rollout(r.model, traj.snapshots[0], 1, traj.dt);
        sum += (pred[0].values - traj.snapshots[1].values).squaredNorm();
      }
      residual = sum / double(n_total - n_train);
      any_ok = true;
    } catch (const NumericError&) {
      // candidate blew up; leave residual infinite
    }
    if (residual < best_residual ||
        (residual == best_residual && std::isfinite(residual) && candidate < best_lambda2)) {
      best_residual = residual;
      best_lambda2 = candidate;
    }
  }
  if (!any_ok) throw NumericError("all lambda2 probe trainings failed");
  return best_lambda2;
}

}  // namespace consflux
