// consflux command-line front end. Links against the shared C API only.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "consflux.h"

namespace {

using nlohmann::json;

int finish(cf_status status) {
  if (status != CF_OK) std::fprintf(stderr, "error: %s\n", cf_last_error());
  return int(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct GenerateArgs {
  std::string config_path;
  std::string preset;
  std::string out;
  std::string fixed_ic;
  int n_cells = 0;
  int n_traj = 0;
  int length = 0;
  int extended_length = -1;
  double noise = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_generate(const GenerateArgs& args) {
  json config;
  if (!args.config_path.empty()) config = json::parse(read_file(args.config_path));
  if (!args.preset.empty()) config["preset"] = args.preset;
  if (args.n_cells > 0) config["n_cells"] = args.n_cells;
  if (args.n_traj > 0) config["n_traj"] = args.n_traj;
  if (args.length > 0) config["length"] = args.length;
  if (args.extended_length == 0) config["extended_length"] = nullptr;
  if (args.extended_length > 0) config["extended_length"] = args.extended_length;
  if (args.noise >= 0.0) config["noise_level"] = args.noise;
  if (args.seed_set) config["seed"] = args.seed;
  if (!args.fixed_ic.empty()) config["fixed_ic"] = args.fixed_ic;
  return finish(cf_generate(config.dump().c_str(), args.out.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consflux: learn conservative fluxes of 1-D hyperbolic systems from snapshots"};
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "worker threads (default 1, bit-reproducible)")
      ->envname("CONSFLUX_THREADS");

  // generate
  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "synthesize a training/reference dataset");
  generate->add_option("--config", gen.config_path, "generation config JSON file");
  generate->add_option("--preset", gen.preset,
                       "experiment preset (burgers|swe|euler-caseI|II|III)");
  generate->add_option("--out", gen.out, "output directory")->required();
  generate->add_option("--n-cells", gen.n_cells, "override grid resolution");
  generate->add_option("--n-traj", gen.n_traj, "override trajectory count");
  generate->add_option("--length", gen.length, "override trajectory length L");
  generate->add_option("--extended-length", gen.extended_length,
                       "override extended length M (0 disables sub-sampling)");
  generate->add_option("--noise", gen.noise, "override noise level");
  auto* gen_seed = generate->add_option("--seed", gen.seed, "override RNG seed");
  generate->add_option("--ic", gen.fixed_ic, "fixed figure IC for every trajectory");

  // train
  std::string train_model, train_data, train_out, train_lambda2;
  int train_epochs = -1, train_batch = -1, train_ckpt = -1, train_probe = -1;
  double train_lr = 0.0;
  std::uint64_t train_seed = 0;
  std::vector<int> train_hidden;
  auto* train = app.add_subcommand("train", "train a flux model on a dataset");
  train->add_option("--model", train_model, "cfn | ncfn | ncfn-reg")->required();
  train->add_option("--data", train_data, "dataset manifest path")->required();
  train->add_option("--out", train_out, "output directory")->required();
  auto* train_seed_opt = train->add_option("--seed", train_seed, "RNG seed");
  train->add_option("--epochs", train_epochs, "training epochs (default 10000)");
  train->add_option("--lr", train_lr, "learning rate (default 1e-4)");
  train->add_option("--lambda2", train_lambda2,
                    "regularization weight for ncfn-reg, or \"auto\"");
  train->add_option("--batch-size", train_batch, "mini-batch size (default full batch)");
  train->add_option("--checkpoint-every", train_ckpt, "checkpoint cadence in epochs");
  train->add_option("--probe-epochs", train_probe, "lambda2 selection probe budget");
  train->add_option("--hidden", train_hidden, "hidden layer widths (default 5 x 64)");

  // predict
  std::string pred_checkpoint, pred_ic, pred_out;
  double pred_t_end = 0.0;
  auto* predict = app.add_subcommand("predict", "roll a trained model forward");
  predict->add_option("--checkpoint", pred_checkpoint, "checkpoint path")->required();
  predict->add_option("--ic", pred_ic,
                      "figure IC name, or DATASET[:TRAJ[:SNAP]] for a stored snapshot")
      ->required();
  predict->add_option("--t-end", pred_t_end, "prediction horizon (multiple of dt)")->required();
  predict->add_option("--out", pred_out, "output directory")->required();

  // evaluate
  std::string eval_prediction, eval_reference, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "compare a prediction against a reference");
  evaluate->add_option("--prediction", eval_prediction, "prediction dataset manifest")
      ->required();
  evaluate->add_option("--reference", eval_reference, "reference dataset manifest")->required();
  evaluate->add_option("--out", eval_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (cf_set_threads(threads) != CF_OK) return finish(CF_ERROR_VALIDATION);

  if (generate->parsed()) {
    gen.seed_set = gen_seed->count() > 0;
    return run_generate(gen);
  }

  if (train->parsed()) {
    json config;
    config["model"] = train_model;
    config["data"] = train_data;
    if (train_seed_opt->count() > 0) config["seed"] = train_seed;
    if (train_epochs >= 0) config["epochs"] = train_epochs;
    if (train_lr > 0.0) config["lr"] = train_lr;
    if (!train_lambda2.empty()) {
      if (train_lambda2 == "auto")
        config["lambda2"] = "auto";
      else
        config["lambda2"] = std::stod(train_lambda2);
    }
    if (train_batch >= 0) config["batch_size"] = train_batch;
    if (train_ckpt >= 0) config["checkpoint_every"] = train_ckpt;
    if (train_probe >= 0) config["probe_epochs"] = train_probe;
    if (!train_hidden.empty()) config["hidden"] = train_hidden;
    return finish(cf_train(config.dump().c_str(), train_out.c_str()));
  }

  if (predict->parsed()) {
    json config;
    config["checkpoint"] = pred_checkpoint;
    config["t_end"] = pred_t_end;
    if (pred_ic.find(".json") != std::string::npos) {
      // DATASET[:TRAJ[:SNAP]]
      std::string path = pred_ic;
      int traj = 0, snap = 0;
      if (auto pos = pred_ic.find(":", pred_ic.find(".json")); pos != std::string::npos) {
        path = pred_ic.substr(0, pos);
        std::string rest = pred_ic.substr(pos + 1);
        if (auto pos2 = rest.find(':'); pos2 != std::string::npos) {
          traj = std::stoi(rest.substr(0, pos2));
          snap = std::stoi(rest.substr(pos2 + 1));
        } else {
          traj = std::stoi(rest);
        }
      }
      config["ic"] = {{"dataset", path}, {"trajectory", traj}, {"snapshot", snap}};
    } else {
      config["ic"] = pred_ic;
    }
    return finish(cf_predict(config.dump().c_str(), pred_out.c_str()));
  }

  if (evaluate->parsed()) {
    json config;
    config["prediction"] = eval_prediction;
    config["reference"] = eval_reference;
    return finish(cf_evaluate(config.dump().c_str(), eval_out.c_str()));
  }

  return 0;
}
