#include "consflux/flux_model.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace consflux {

using nlohmann::json;

std::string to_string(ModelForm form) {
  switch (form) {
    case ModelForm::Cfn: return "cfn";
    case ModelForm::Ncfn: return "ncfn";
    case ModelForm::NcfnReg: return "ncfn-reg";
  }
  throw ValidationError("unknown model form");
}

ModelForm model_form_from_string(const std::string& name) {
  if (name == "cfn") return ModelForm::Cfn;
  if (name == "ncfn") return ModelForm::Ncfn;
  if (name == "ncfn-reg" || name == "ncfn_reg") return ModelForm::NcfnReg;
  throw ValidationError("unknown model form: " + name);
}

void ModelSpec::validate() const {
  require(stencil_left >= 0 && stencil_right >= 0, "stencil widths must be nonnegative");
  require(n_comp >= 1, "model needs at least one component");
  require(dx > 0.0, "model dx must be positive");
  require(lambda2 >= 0.0, "lambda2 must be nonnegative");
  if (form != ModelForm::NcfnReg)
    require(lambda2 == 0.0, "lambda2 applies to ncfn-reg only");
  mlp.validate();
  require(mlp.d_in() == stencil_width() * n_comp,
          "network input must be (p+q+1) * n_comp");
  require(mlp.d_out() == n_comp, "network output must be n_comp");
}

ModelSpec ModelSpec::make(ModelForm form, int n_comp, BoundaryKind bc, double dx,
                          const std::vector<int>& hidden, Rng& rng, double lambda2) {
  ModelSpec spec;
  spec.form = form;
  spec.stencil_left = form == ModelForm::Cfn ? 2 : 3;
  spec.stencil_right = 3;
  spec.n_comp = n_comp;
  spec.bc = bc;
  spec.dx = dx;
  spec.lambda2 = form == ModelForm::NcfnReg ? lambda2 : 0.0;
  std::vector<int> dims;
  dims.push_back(spec.stencil_width() * n_comp);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(n_comp);
  spec.mlp = mlp_init(dims, rng);
  spec.validate();
  return spec;
}

ad::StencilPlan edge_plan(const ModelSpec& spec, int n_cells, int n_blocks) {
  require(n_cells >= spec.stencil_width(), "stencil wider than the domain");
  ad::StencilPlan plan;
  plan.in = {spec.n_comp, n_cells, n_blocks};
  plan.left = spec.stencil_left + 1;
  plan.right = spec.stencil_right;
  plan.at_edges = true;
  plan.bc = spec.bc;
  return plan;
}

ad::StencilPlan cell_plan(const ModelSpec& spec, int n_cells, int n_blocks) {
  require(n_cells >= spec.stencil_width(), "stencil wider than the domain");
  ad::StencilPlan plan;
  plan.in = {spec.n_comp, n_cells, n_blocks};
  plan.left = spec.stencil_left;
  plan.right = spec.stencil_right + 1;
  plan.at_edges = false;
  plan.bc = spec.bc;
  return plan;
}

namespace {

using ad::gather_stencils;

Matrix batch_rhs(const Matrix& values, const ModelSpec& spec, const ad::FieldLayout& layout) {
  if (spec.form == ModelForm::Cfn) {
    const auto plan = edge_plan(spec, layout.n_cells, layout.n_blocks);
    const Matrix flux = mlp_forward_batch(spec.mlp, gather_stencils(values, plan));
    const int n = layout.n_cells;
    Matrix rhs(layout.n_comp, layout.cols());
    for (int b = 0; b < layout.n_blocks; ++b) {
      const auto fb = flux.middleCols(b * (n + 1), n + 1);
      rhs.middleCols(b * n, n) = (fb.leftCols(n) - fb.rightCols(n)) / spec.dx;
    }
    return rhs;
  }
  const auto plan = cell_plan(spec, layout.n_cells, layout.n_blocks);
  return -mlp_forward_batch(spec.mlp, gather_stencils(values, plan));
}

}  // namespace

Matrix cfn_edge_fluxes(const StateField& field, const ModelSpec& spec) {
  require(spec.form == ModelForm::Cfn, "edge fluxes are defined for the CFN form");
  require(field.n_comp() == spec.n_comp, "field components must match model");
  const auto plan = edge_plan(spec, field.n_cells(), 1);
  return mlp_forward_batch(spec.mlp, gather_stencils(field.values, plan));
}

StateField cfn_rhs(const StateField& field, const ModelSpec& spec) {
  require(spec.form == ModelForm::Cfn, "cfn_rhs requires the CFN form");
  require(field.n_comp() == spec.n_comp, "field components must match model");
  ad::FieldLayout layout{spec.n_comp, field.n_cells(), 1};
  return StateField(field.grid, batch_rhs(field.values, spec, layout), field.time);
}

StateField ncfn_rhs(const StateField& field, const ModelSpec& spec) {
  require(spec.form != ModelForm::Cfn, "ncfn_rhs requires a non-conservative form");
  require(field.n_comp() == spec.n_comp, "field components must match model");
  ad::FieldLayout layout{spec.n_comp, field.n_cells(), 1};
  return StateField(field.grid, batch_rhs(field.values, spec, layout), field.time);
}

StateField model_rhs(const StateField& field, const ModelSpec& spec) {
  return spec.form == ModelForm::Cfn ? cfn_rhs(field, spec) : ncfn_rhs(field, spec);
}

std::vector<Matrix> rollout_batch(const ModelSpec& spec, const Matrix& u0,
                                  const ad::FieldLayout& layout, int steps, double dt) {
  require(steps >= 1, "rollout needs at least one step");
  require(dt > 0.0, "rollout dt must be positive");
  std::vector<Matrix> states;
  states.reserve(steps);
  Matrix u = u0;
  for (int s = 0; s < steps; ++s) {
    const Matrix r0 = batch_rhs(u, spec, layout);
    const Matrix u1 = u + dt * r0;
    const Matrix r1 = batch_rhs(u1, spec, layout);
    const Matrix u2 = 0.75 * u + 0.25 * u1 + 0.25 * dt * r1;
    const Matrix r2 = batch_rhs(u2, spec, layout);
    u = (1.0 / 3.0) * u + (2.0 / 3.0) * u2 + (2.0 / 3.0) * dt * r2;
    if (!u.allFinite())
      throw BlowUpError("model rollout produced non-finite state at step " + std::to_string(s + 1),
                        double(s + 1) * dt, s + 1);
    states.push_back(u);
  }
  return states;
}

std::vector<StateField> rollout(const ModelSpec& spec, const StateField& u0, int steps,
                                double dt) {
  spec.validate();
  require(u0.n_comp() == spec.n_comp, "initial state components must match model");
  ad::FieldLayout layout{spec.n_comp, u0.n_cells(), 1};
  const auto states = rollout_batch(spec, u0.values, layout, steps, dt);
  std::vector<StateField> fields;
  fields.reserve(states.size());
  for (int l = 0; l < int(states.size()); ++l)
    fields.emplace_back(u0.grid, states[l], u0.time + double(l + 1) * dt);
  return fields;
}

ad::Var model_rhs_tape(ad::Tape& tape, const ad::MlpVars& net, const ModelSpec& spec,
                       ad::Var state, const ad::FieldLayout& layout) {
  if (spec.form == ModelForm::Cfn) {
    const auto plan = edge_plan(spec, layout.n_cells, layout.n_blocks);
    ad::Var flux = mlp_apply(tape, net, tape.gather_stencil(state, plan));
    return tape.flux_divergence(flux, layout, spec.dx);
  }
  const auto plan = cell_plan(spec, layout.n_cells, layout.n_blocks);
  return tape.scale(mlp_apply(tape, net, tape.gather_stencil(state, plan)), -1.0);
}

std::vector<ad::Var> rollout_tape(ad::Tape& tape, const ad::MlpVars& net,
                                  const ModelSpec& spec, const Matrix& u0,
                                  const ad::FieldLayout& layout, int steps, double dt) {
  require(steps >= 1, "rollout needs at least one step");
  require(dt > 0.0, "rollout dt must be positive");
  std::vector<ad::Var> states;
  states.reserve(steps);
  ad::Var u = tape.constant(u0);
  for (int s = 0; s < steps; ++s) {
    ad::Var r0 = model_rhs_tape(tape, net, spec, u, layout);
    ad::Var u1 = tape.lincomb({{1.0, u}, {dt, r0}});
    ad::Var r1 = model_rhs_tape(tape, net, spec, u1, layout);
    ad::Var u2 = tape.lincomb({{0.75, u}, {0.25, u1}, {0.25 * dt, r1}});
    ad::Var r2 = model_rhs_tape(tape, net, spec, u2, layout);
    u = tape.lincomb({{1.0 / 3.0, u}, {2.0 / 3.0, u2}, {2.0 / 3.0 * dt, r2}});
    states.push_back(u);
  }
  return states;
}

void save_checkpoint(const ModelSpec& spec, const CheckpointMeta& meta,
                     const std::string& path) {
  spec.validate();
  json j;
  j["schema_version"] = 1;
  j["kind"] = "consflux_checkpoint";
  j["form"] = to_string(spec.form);
  j["stencil"] = {{"p", spec.stencil_left}, {"q", spec.stencil_right}};
  j["n_comp"] = spec.n_comp;
  j["bc"] = to_string(spec.bc);
  j["dx"] = spec.dx;
  j["lambda2"] = spec.lambda2;
  j["activation"] = "relu";
  j["layer_dims"] = spec.mlp.dims;
  json weights = json::array();
  json biases = json::array();
  for (int l = 0; l < spec.mlp.n_layers(); ++l) {
    json w = json::array();
    for (int r = 0; r < spec.mlp.weights[l].rows(); ++r)
      for (int c = 0; c < spec.mlp.weights[l].cols(); ++c) w.push_back(spec.mlp.weights[l](r, c));
    weights.push_back(std::move(w));
    json b = json::array();
    for (int r = 0; r < spec.mlp.biases[l].size(); ++r) b.push_back(spec.mlp.biases[l](r));
    biases.push_back(std::move(b));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["meta"] = {{"epoch", meta.epoch},
               {"seed", meta.seed},
               {"loss", meta.loss},
               {"grid", {{"a", meta.grid.a}, {"b", meta.grid.b}, {"n_cells", meta.grid.n_cells}}},
               {"dt", meta.dt},
               {"system", to_string(meta.system)}};

  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

ModelSpec load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid checkpoint " + path + ": " + e.what());
  }
  try {
    require(j.at("schema_version").get<int>() == 1, "unsupported checkpoint schema version");
    require(j.at("activation").get<std::string>() == "relu", "unsupported activation");
    ModelSpec spec;
    spec.form = model_form_from_string(j.at("form").get<std::string>());
    spec.stencil_left = j.at("stencil").at("p").get<int>();
    spec.stencil_right = j.at("stencil").at("q").get<int>();
    spec.n_comp = j.at("n_comp").get<int>();
    spec.bc = boundary_from_string(j.at("bc").get<std::string>());
    spec.dx = j.at("dx").get<double>();
    spec.lambda2 = j.value("lambda2", 0.0);
    spec.mlp.dims = j.at("layer_dims").get<std::vector<int>>();
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    require(weights.size() + 1 == spec.mlp.dims.size(), "checkpoint weight count mismatch");
    for (std::size_t l = 0; l + 1 < spec.mlp.dims.size(); ++l) {
      const int rows = spec.mlp.dims[l + 1];
      const int cols = spec.mlp.dims[l];
      require(int(weights.at(l).size()) == rows * cols, "checkpoint weight size mismatch");
      Matrix w(rows, cols);
      int idx = 0;
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) w(r, c) = weights.at(l).at(idx++).get<double>();
      spec.mlp.weights.push_back(std::move(w));
      require(int(biases.at(l).size()) == rows, "checkpoint bias size mismatch");
      Vector b(rows);
      for (int r = 0; r < rows; ++r) b(r) = biases.at(l).at(r).get<double>();
      spec.mlp.biases.push_back(std::move(b));
    }
    spec.validate();
    if (meta) {
      const auto& m = j.at("meta");
      meta->epoch = m.at("epoch").get<long>();
      meta->seed = m.at("seed").get<std::uint64_t>();
      meta->loss = m.at("loss").get<double>();
      meta->grid = Grid1D(m.at("grid").at("a").get<double>(), m.at("grid").at("b").get<double>(),
                          m.at("grid").at("n_cells").get<int>());
      meta->dt = m.at("dt").get<double>();
      meta->system = system_from_string(m.at("system").get<std::string>());
    }
    return spec;
  } catch (const json::exception& e) {
    throw IoError("invalid checkpoint " + path + ": " + e.what());
  }
}

}  // namespace consflux
