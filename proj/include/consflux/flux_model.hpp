#pragma once

#include "consflux/autodiff.hpp"
#include "consflux/mlp.hpp"
#include "consflux/types.hpp"

namespace consflux {

enum class ModelForm { Cfn, Ncfn, NcfnReg };
std::string to_string(ModelForm form);
ModelForm model_form_from_string(const std::string& name);

// A learned evolution model: a neural edge flux in conservative form (CFN)
// or a direct RHS network (nCFN, nCFN-reg). The network maps the p+q+1
// stencil cell averages of all components (component-major) to n_comp
// outputs; CFN evaluates it at every cell edge, nCFN at every cell.
struct ModelSpec {
  ModelForm form = ModelForm::Cfn;
  int stencil_left = 2;   // p
  int stencil_right = 3;  // q
  int n_comp = 1;
  BoundaryKind bc = BoundaryKind::Periodic;
  double dx = 0.0;
  MlpParams mlp;
  double lambda2 = 0.0;  // nCFN-reg regularization weight

  int stencil_width() const { return stencil_left + stencil_right + 1; }
  bool conservative() const { return form == ModelForm::Cfn; }
  void validate() const;

  // Default benchmark architectures: CFN (p,q) = (2,3), nCFN (3,3), with the
  // given hidden widths.
  static ModelSpec make(ModelForm form, int n_comp, BoundaryKind bc, double dx,
                        const std::vector<int>& hidden, Rng& rng, double lambda2 = 0.0);
};

// Stencil plans shared by the plain and the taped evaluation paths. The CFN
// edge plan is symmetric about each edge (p+1 cells left of it, q right);
// the nCFN cell plan reads cells j-p..j+q around cell j.
ad::StencilPlan edge_plan(const ModelSpec& spec, int n_cells, int n_blocks);
ad::StencilPlan cell_plan(const ModelSpec& spec, int n_cells, int n_blocks);

// Neural edge fluxes of a CFN: [n_comp x (n_cells + 1)].
Matrix cfn_edge_fluxes(const StateField& field, const ModelSpec& spec);

StateField cfn_rhs(const StateField& field, const ModelSpec& spec);
StateField ncfn_rhs(const StateField& field, const ModelSpec& spec);
StateField model_rhs(const StateField& field, const ModelSpec& spec);

// Model rollout with TVD-RK3; returns the states after steps 1..steps.
std::vector<StateField> rollout(const ModelSpec& spec, const StateField& u0, int steps,
                                double dt);

// Batched rollout over block-stacked trajectories (plain evaluation path).
std::vector<Matrix> rollout_batch(const ModelSpec& spec, const Matrix& u0,
                                  const ad::FieldLayout& layout, int steps, double dt);

// Differentiable rollout recorded on a tape; element l is the state after
// l+1 steps.
std::vector<ad::Var> rollout_tape(ad::Tape& tape, const ad::MlpVars& net,
                                  const ModelSpec& spec, const Matrix& u0,
                                  const ad::FieldLayout& layout, int steps, double dt);
ad::Var model_rhs_tape(ad::Tape& tape, const ad::MlpVars& net, const ModelSpec& spec,
                       ad::Var state, const ad::FieldLayout& layout);

// Checkpoint: structured text with architecture, stencil metadata, all
// weights/biases (lossless round trip) and training metadata.
struct CheckpointMeta {
  long epoch = 0;
  std::uint64_t seed = 0;
  double loss = 0.0;
  Grid1D grid;
  double dt = 0.0;
  SystemId system = SystemId::Burgers;
};

void save_checkpoint(const ModelSpec& spec, const CheckpointMeta& meta,
                     const std::string& path);
ModelSpec load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace consflux
