#include "consflux/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "consflux/dataset_io.hpp"
#include "consflux/diagnostics.hpp"
#include "consflux/presets.hpp"
#include "consflux/training.hpp"

namespace consflux {

using nlohmann::json;

namespace {

json parse_config(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw ValidationError(std::string("invalid ") + what + " config: not valid JSON");
  if (!j.is_object())
    throw ValidationError(std::string("invalid ") + what + " config: expected an object");
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
  if (!out) throw IoError("failed writing: " + path);
}

void echo_config(const std::string& out_dir, const std::string& text) {
  write_text(out_dir + "/config.json", text);
}

SystemSpec dataset_system_spec(const Dataset& ds) {
  switch (ds.system) {
    case SystemId::Burgers: return SystemSpec::burgers();
    case SystemId::ShallowWater: return SystemSpec::shallow_water(ds.gravity);
    case SystemId::Euler: return SystemSpec::euler(ds.gamma);
  }
  throw ValidationError("unknown system id");
}

}  // namespace

std::string resolve_generate_config(const std::string& config_json) {
  json j = parse_config(config_json, "generate");
  if (j.contains("preset")) {
    const RunConfig preset = preset_run_config(j.at("preset").get<std::string>());
    json resolved = json::parse(run_config_to_json(preset));
    j.erase("preset");
    for (const auto& [key, value] : j.items()) resolved[key] = value;  // overrides
    j = std::move(resolved);
  }
  // Round-trip through the typed config to validate and normalize.
  const RunConfig config = run_config_from_json(j.dump());
  return run_config_to_json(config);
}

void cmd_generate(const std::string& config_json, const std::string& out_dir, int threads) {
  const std::string resolved = resolve_generate_config(config_json);
  const RunConfig config = run_config_from_json(resolved);
  const Dataset ds = generate_dataset(config, threads);
  std::filesystem::create_directories(out_dir);
  write_dataset(ds, out_dir + "/dataset.json");
  echo_config(out_dir, resolved);
}

void cmd_train(const std::string& config_json, const std::string& out_dir, int threads) {
  (void)threads;  // training is bit-reproducible single-stream work
  json j = parse_config(config_json, "train");

  TrainConfig config;
  try {
    config.form = model_form_from_string(j.at("model").get<std::string>());
    config.dataset_path = j.at("data").get<std::string>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("epochs")) config.epochs = j.at("epochs").get<int>();
    if (j.contains("lr")) config.lr = j.at("lr").get<double>();
    if (j.contains("batch_size")) config.batch_size = j.at("batch_size").get<int>();
    if (j.contains("checkpoint_every")) config.checkpoint_every = j.at("checkpoint_every").get<int>();
    if (j.contains("probe_epochs")) config.probe_epochs = j.at("probe_epochs").get<int>();
    if (j.contains("hidden")) config.hidden = j.at("hidden").get<std::vector<int>>();
    if (j.contains("lambda2")) {
      if (j.at("lambda2").is_string()) {
        require(j.at("lambda2").get<std::string>() == "auto",
                "lambda2 must be a number or \"auto\"");
        config.lambda2_auto = true;
      } else {
        config.lambda2 = j.at("lambda2").get<double>();
      }
    }
    if (j.contains("lambda2_grid"))
      config.lambda2_grid = j.at("lambda2_grid").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid train config: ") + e.what());
  }
  config.out_dir = out_dir;
  config.validate();

  // Echo the resolved config before the long run starts.
  json echo;
  echo["model"] = to_string(config.form);
  echo["data"] = config.dataset_path;
  echo["seed"] = config.seed;
  echo["epochs"] = config.epochs;
  echo["lr"] = config.lr;
  echo["batch_size"] = config.batch_size;
  echo["checkpoint_every"] = config.checkpoint_every;
  echo["probe_epochs"] = config.probe_epochs;
  echo["hidden"] = config.hidden;
  if (config.form == ModelForm::NcfnReg) {
    if (config.lambda2_auto) {
      echo["lambda2"] = "auto";
      echo["lambda2_grid"] = config.lambda2_grid;
    } else {
      echo["lambda2"] = config.lambda2;
    }
  }
  std::filesystem::create_directories(out_dir);
  echo_config(out_dir, echo.dump(2));

  train(config);
}

void cmd_predict(const std::string& config_json, const std::string& out_dir, int threads) {
  (void)threads;
  json j = parse_config(config_json, "predict");

  std::string checkpoint_path;
  double t_end = 0.0;
  try {
    checkpoint_path = j.at("checkpoint").get<std::string>();
    t_end = j.at("t_end").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid predict config: ") + e.what());
  }
  require(t_end >= 0.0, "t_end must be >= 0");

  CheckpointMeta meta;
  const ModelSpec model = load_checkpoint(checkpoint_path, &meta);

  // The initial state: a named figure IC or a snapshot from a dataset.
  StateField u0;
  if (!j.contains("ic")) throw ValidationError("predict config needs an \"ic\" entry");
  if (j.at("ic").is_string()) {
    u0 = figure_ic(j.at("ic").get<std::string>(), meta.grid);
  } else {
    try {
      const std::string data_path = j.at("ic").at("dataset").get<std::string>();
      const int traj = j.at("ic").value("trajectory", 0);
      const int snap = j.at("ic").value("snapshot", 0);
      const Dataset ds = read_dataset(data_path);
      require(traj >= 0 && traj < ds.n_traj(), "ic trajectory index out of range");
      require(snap >= 0 && snap < ds.n_snapshots(), "ic snapshot index out of range");
      u0 = ds.trajectories[traj].snapshots[snap];
    } catch (const json::exception& e) {
      throw ValidationError(std::string("invalid predict ic: ") + e.what());
    }
  }
  require(u0.grid == meta.grid, "initial state grid does not match the checkpoint grid");
  require(u0.n_comp() == model.n_comp, "initial state components do not match the checkpoint");

  const double dt = meta.dt;
  require(dt > 0.0, "checkpoint carries no time step");
  const long steps = std::lround(t_end / dt);
  require(std::abs(double(steps) * dt - t_end) <= 1e-9 * std::max(1.0, t_end),
          "t_end must be a multiple of the checkpoint dt");

  Trajectory traj;
  traj.dt = dt;
  traj.snapshots.push_back(u0);
  StateField u = u0;
  std::exception_ptr blow_up;
  for (long s = 1; s <= steps; ++s) {
    try {
      u = rollout(model, u, 1, dt)[0];
    } catch (const NumericError& e) {
      blow_up = std::make_exception_ptr(BlowUpError(
          "prediction blew up at step " + std::to_string(s) + ": " + e.what(), u.time, s));
      break;
    }
    traj.snapshots.push_back(u);
  }

  // The (possibly partial) trajectory goes to disk either way.
  Dataset out;
  out.system = meta.system;
  out.bc = model.bc;
  out.trajectories.push_back(std::move(traj));
  std::filesystem::create_directories(out_dir);
  write_dataset(out, out_dir + "/prediction.json");
  echo_config(out_dir, j.dump(2));
  if (blow_up) std::rethrow_exception(blow_up);
}

void cmd_evaluate(const std::string& config_json, const std::string& out_dir, int threads) {
  (void)threads;
  json j = parse_config(config_json, "evaluate");
  std::string prediction_path, reference_path;
  try {
    prediction_path = j.at("prediction").get<std::string>();
    reference_path = j.at("reference").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid evaluate config: ") + e.what());
  }
  const Dataset prediction = read_dataset(prediction_path);
  const Dataset reference = read_dataset(reference_path);
  require(prediction.system == reference.system,
          "prediction and reference must share the system");
  const int traj = j.value("trajectory", 0);
  require(traj >= 0 && traj < prediction.n_traj() && traj < reference.n_traj(),
          "trajectory index out of range");

  EvaluationReport report =
      evaluate_prediction(prediction.trajectories[traj], reference.trajectories[traj],
                          dataset_system_spec(reference), reference.bc);
  report.config_echo = j.dump(2);
  emit_report(report, out_dir);
  echo_config(out_dir, j.dump(2));
}

}  // namespace consflux
