#include "consflux/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace consflux {

Matrix remainder_series(const ModelSpec& model, const StateField& u0, int steps, double dt,
                        const BoundaryFluxSeries& flux_series) {
  require(steps >= 0, "steps must be >= 0");
  Matrix series = Matrix::Zero(u0.n_comp(), steps + 1);
  if (steps == 0) return series;
  const auto states = rollout(model, u0, steps, dt);
  series.rightCols(steps) = conserved_remainder(states, u0, flux_series, dt);
  return series;
}

namespace {

StateField restrict_reference(const StateField& prediction, const StateField& reference_fine) {
  require(reference_fine.n_comp() == prediction.n_comp(),
          "prediction and reference component mismatch");
  require(reference_fine.n_cells() % prediction.n_cells() == 0,
          "reference cells must be divisible by prediction cells");
  return restrict_to_coarse(reference_fine, reference_fine.n_cells() / prediction.n_cells());
}

}  // namespace

ErrorNorms error_norms(const StateField& prediction, const StateField& reference_fine) {
  const StateField ref = restrict_reference(prediction, reference_fine);
  const Matrix err = prediction.values - ref.values;
  const double dx = prediction.grid.dx();
  ErrorNorms norms;
  norms.l1 = err.cwiseAbs().rowwise().sum() * dx;
  norms.l2 = (err.cwiseProduct(err).rowwise().sum() * dx).cwiseSqrt();
  norms.linf = err.cwiseAbs().rowwise().maxCoeff();
  return norms;
}

Matrix pointwise_error(const StateField& prediction, const StateField& reference_fine) {
  const StateField ref = restrict_reference(prediction, reference_fine);
  return (prediction.values - ref.values).cwiseAbs();
}

ShockLocation shock_location(const StateField& field, int component) {
  require(component >= 0 && component < field.n_comp(), "component index out of range");
  require(field.n_cells() >= 3, "shock location needs at least 3 cells");
  ShockLocation loc;
  int best = 0;
  for (int j = 0; j + 1 < field.n_cells(); ++j) {
    const double jump = std::abs(field.values(component, j + 1) - field.values(component, j));
    if (jump > loc.jump) {
      loc.jump = jump;
      best = j;
    }
  }
  loc.x = field.grid.edge(best + 1);
  loc.significant = loc.jump > 1e-8;
  return loc;
}

EvaluationReport evaluate_prediction(const Trajectory& prediction, const Trajectory& reference,
                                     const SystemSpec& sys, BoundaryKind bc) {
  prediction.validate();
  reference.validate();

  // Match prediction snapshots to reference snapshots by time.
  const double t_tol = 1e-9;
  std::vector<std::pair<int, int>> matched;
  for (int i = 0; i < int(prediction.snapshots.size()); ++i) {
    const double t = prediction.snapshots[i].time;
    for (int r = 0; r < int(reference.snapshots.size()); ++r) {
      if (std::abs(reference.snapshots[r].time - t) <= t_tol * std::max(1.0, std::abs(t))) {
        matched.emplace_back(i, r);
        break;
      }
    }
  }
  require(!matched.empty(), "prediction and reference share no snapshot times");

  EvaluationReport report;
  const auto [pi, ri] = matched.back();
  report.profile_prediction = prediction.snapshots[pi];
  report.profile_reference =
      restrict_reference(prediction.snapshots[pi], reference.snapshots[ri]);
  report.abs_error = pointwise_error(prediction.snapshots[pi], reference.snapshots[ri]);
  report.norms = error_norms(prediction.snapshots[pi], reference.snapshots[ri]);
  report.has_profiles = true;

  const int n_comp = prediction.snapshots.front().n_comp();
  for (int c = 0; c < n_comp; ++c) {
    report.shocks_prediction.push_back(shock_location(report.profile_prediction, c));
    report.shocks_reference.push_back(shock_location(report.profile_reference, c));
  }

  // Remainder series of both trajectories, each against its own initial
  // state, using boundary fluxes from the reference (the observable data).
  const BoundaryFluxSeries series_pred = boundary_flux_series(prediction, sys, bc);
  const BoundaryFluxSeries series_ref = boundary_flux_series(reference, sys, bc);
  std::vector<StateField> pred_states(prediction.snapshots.begin() + 1,
                                      prediction.snapshots.end());
  std::vector<StateField> ref_states(reference.snapshots.begin() + 1, reference.snapshots.end());
  report.remainder_prediction = Matrix::Zero(n_comp, prediction.snapshots.size());
  report.remainder_prediction.rightCols(pred_states.size()) = conserved_remainder(
      pred_states, prediction.snapshots.front(), series_pred, prediction.dt);
  report.remainder_reference = Matrix::Zero(n_comp, reference.snapshots.size());
  report.remainder_reference.rightCols(ref_states.size()) =
      conserved_remainder(ref_states, reference.snapshots.front(), series_ref, reference.dt);
  for (const auto& s : prediction.snapshots) report.remainder_times.push_back(s.time);
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open report file for writing: " + path);
  return out;
}

}  // namespace

void emit_report(const EvaluationReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  // metrics.json carries pure results; the config echo goes to config.json
  // so the metrics are byte-identical across reruns from different paths.
  nlohmann::json metrics;
  metrics["schema_version"] = 1;

  if (report.has_profiles) {
    const int n_comp = report.profile_prediction.n_comp();
    {
      auto out = open_out(out_dir + "/profiles.csv");
      out << "x,component,value_model,value_reference\n";
      for (int c = 0; c < n_comp; ++c)
        for (int j = 0; j < report.profile_prediction.n_cells(); ++j)
          out << fmt(report.profile_prediction.grid.center(j)) << "," << c << ","
              << fmt(report.profile_prediction.values(c, j)) << ","
              << fmt(report.profile_reference.values(c, j)) << "\n";
    }
    {
      auto out = open_out(out_dir + "/errors.csv");
      out << "x,component,abs_error\n";
      for (int c = 0; c < n_comp; ++c)
        for (int j = 0; j < report.profile_prediction.n_cells(); ++j)
          out << fmt(report.profile_prediction.grid.center(j)) << "," << c << ","
              << fmt(report.abs_error(c, j)) << "\n";
    }
    {
      auto out = open_out(out_dir + "/remainder.csv");
      out << "t,component,C\n";
      for (int c = 0; c < n_comp; ++c)
        for (std::size_t l = 0; l < report.remainder_times.size(); ++l)
          out << fmt(report.remainder_times[l]) << "," << c << ","
              << fmt(report.remainder_prediction(c, int(l))) << "\n";
    }
    {
      auto out = open_out(out_dir + "/summary.csv");
      out << "metric,component,value\n";
      for (int c = 0; c < n_comp; ++c) {
        out << "l1," << c << "," << fmt(report.norms.l1(c)) << "\n";
        out << "l2," << c << "," << fmt(report.norms.l2(c)) << "\n";
        out << "linf," << c << "," << fmt(report.norms.linf(c)) << "\n";
        out << "shock_x_model," << c << "," << fmt(report.shocks_prediction[c].x) << "\n";
        out << "shock_x_reference," << c << "," << fmt(report.shocks_reference[c].x) << "\n";
        out << "final_remainder," << c << ","
            << fmt(report.remainder_prediction(c, int(report.remainder_times.size()) - 1))
            << "\n";
      }
    }
    nlohmann::json norms;
    for (int c = 0; c < n_comp; ++c) {
      norms.push_back({{"component", c},
                       {"l1", report.norms.l1(c)},
                       {"l2", report.norms.l2(c)},
                       {"linf", report.norms.linf(c)},
                       {"shock_x_model", report.shocks_prediction[c].x},
                       {"shock_x_model_significant", report.shocks_prediction[c].significant},
                       {"shock_x_reference", report.shocks_reference[c].x}});
    }
    metrics["norms"] = std::move(norms);
    metrics["final_time"] = report.remainder_times.back();
  }

  auto out = open_out(out_dir + "/metrics.json");
  out << metrics.dump(2) << "\n";
}

}  // namespace consflux
