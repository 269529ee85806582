#pragma once

#include <functional>
#include <initializer_list>

#include "consflux/mlp.hpp"
#include "consflux/types.hpp"

namespace consflux::ad {

using consflux::Matrix;

// Layout of a batched field node: a [n_comp x (n_blocks * n_cells)] matrix
// whose column blocks are independent trajectories on the same grid.
struct FieldLayout {
  int n_comp = 1;
  int n_cells = 0;
  int n_blocks = 1;
  int cols() const { return n_cells * n_blocks; }
};

// Stencil gather: one output column per window, all components of the window
// concatenated component-major. For edge windows there are n_cells+1 outputs
// per block (one per cell edge); for cell windows there are n_cells.
struct StencilPlan {
  FieldLayout in;
  int left = 0;   // cells taken left of the window anchor
  int right = 0;  // cells taken right (anchor cell included for cell windows)
  bool at_edges = true;
  BoundaryKind bc = BoundaryKind::Periodic;

  int window() const { return left + right; }
  int out_per_block() const { return in.n_cells + (at_edges ? 1 : 0); }
  int out_cols() const { return out_per_block() * in.n_blocks; }
  // Source cell (0-based, within one block) feeding window position i of
  // output column e in that block.
  int source_cell(int e, int i) const;
};

// Plain (non-recorded) stencil gather; the tape op uses the same routine so
// the recorded and direct evaluation paths agree bit-for-bit.
Matrix gather_stencils(const Matrix& values, const StencilPlan& plan);

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over matrix-valued nodes. Operations record a backward
// closure; backward() seeds a scalar root and sweeps in reverse order.
class Tape {
public:
  Var constant(Matrix value) { return emit(std::move(value), false, "constant", {}); }
  Var parameter(Matrix value) { return emit(std::move(value), true, "parameter", {}); }

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  const Matrix& gradient(Var v) const;
  bool has_gradient(Var v) const { return nodes_[v.id].grad.size() > 0; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // y = W x + b per column (b is a column vector); optionally with the
  // ReLU fused so hidden activations are stored once.
  Var affine(Var w, Var b, Var x, bool fused_relu = false);
  Var relu(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise, equal shapes
  Var scale(Var x, double c);
  Var square(Var x);
  Var sum(Var x);  // 1x1
  // sum_i c_i x_i over equal shapes.
  Var lincomb(std::initializer_list<std::pair<double, Var>> terms);
  // Scalar node sum((x - target)^2).
  Var sq_diff_sum(Var x, const Matrix& target);

  Var gather_stencil(Var field, const StencilPlan& plan);
  // From edge values [n_comp x n_blocks*(n_cells+1)] to -(F_{e+1} - F_e)/dx.
  Var flux_divergence(Var edge_values, const FieldLayout& out_layout, double dx);
  // Per-component, per-block totals scaled by `factor`: [n_comp x n_blocks].
  Var block_totals(Var field, const FieldLayout& layout, double factor);

  void backward(Var root);

private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    const char* op = "leaf";
    std::function<void(Tape&, const Node&)> pull;
  };

  Var emit(Matrix value, bool needs_grad, const char* op,
           std::function<void(Tape&, const Node&)> pull);
  Matrix& grad_of(int id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

// Network parameters bound onto a tape as leaves.
struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

MlpVars bind_mlp(Tape& tape, const MlpParams& params);
// ReLU chain matching mlp_forward_batch; columns are samples.
Var mlp_apply(Tape& tape, const MlpVars& net, Var x);
// Collect adjoints of bound parameters after backward().
GradientBundle collect_gradients(const Tape& tape, const MlpVars& net, const MlpParams& params);

// Evaluate a scalar program of the bound parameters and return its value with
// exact reverse-mode derivatives.
std::pair<double, GradientBundle> grad_scalar(
    const MlpParams& params, const std::function<Var(Tape&, const MlpVars&)>& program);

}  // namespace consflux::ad
