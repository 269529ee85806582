#include "consflux/autodiff.hpp"

#include <cmath>

namespace consflux::ad {

int StencilPlan::source_cell(int e, int i) const {
  int c = e - left + i;
  const int n = in.n_cells;
  if (bc == BoundaryKind::Periodic) {
    c %= n;
    if (c < 0) c += n;
  } else {
    c = std::max(0, std::min(n - 1, c));
  }
  return c;
}

Var Tape::emit(Matrix value, bool needs_grad, const char* op,
               std::function<void(Tape&, const Node&)> pull) {
  if (!value.allFinite())
    throw NumericError(std::string("non-finite values produced by op '") + op + "' (node " +
                       std::to_string(nodes_.size()) + ")");
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  node.op = op;
  node.pull = std::move(pull);
  nodes_.push_back(std::move(node));
  return Var{int(nodes_.size()) - 1};
}

const Matrix& Tape::gradient(Var v) const {
  const Node& n = nodes_[v.id];
  require(n.grad.size() > 0, "gradient not computed for this node");
  return n.grad;
}

namespace {

// First contribution assigns, later ones add; most nodes have one consumer.
template <typename Expr>
void accumulate(Matrix& grad, const Expr& delta) {
  if (grad.size() == 0)
    grad = delta;
  else
    grad += delta;
}

}  // namespace

Var Tape::affine(Var w, Var b, Var x, bool fused_relu) {
  const Matrix& wv = value(w);
  const Matrix& bv = value(b);
  const Matrix& xv = value(x);
  require(wv.cols() == xv.rows() && bv.rows() == wv.rows() && bv.cols() == 1,
          "affine shape mismatch");
  Matrix y = wv * xv;
  y.colwise() += bv.col(0);
  if (fused_relu) y = y.cwiseMax(0.0);
  const bool ng = needs_grad(w) || needs_grad(b) || needs_grad(x);
  return emit(std::move(y), ng, fused_relu ? "affine_relu" : "affine",
              [w, b, x, fused_relu](Tape& t, const Node& self) {
                // With the fused activation the stored value is post-relu;
                // the mask recovers the subgradient (0 at 0).
                Matrix g;
                const Matrix& gref =
                    fused_relu
                        ? (g = (self.value.array() > 0.0).cast<double>().matrix().cwiseProduct(
                               self.grad))
                        : self.grad;
                if (t.needs_grad(w)) accumulate(t.grad_of(w.id), gref * t.value(x).transpose());
                if (t.needs_grad(b)) accumulate(t.grad_of(b.id), gref.rowwise().sum());
                if (t.needs_grad(x))
                  accumulate(t.grad_of(x.id), t.value(w).transpose() * gref);
              });
}

Var Tape::relu(Var x) {
  Matrix y = value(x).cwiseMax(0.0);
  return emit(std::move(y), needs_grad(x), "relu", [x](Tape& t, const Node& self) {
    if (!t.needs_grad(x)) return;
    // Subgradient at 0 is 0: the mask keys off the (post-activation) output.
    accumulate(t.grad_of(x.id),
               (self.value.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
  });
}

Var Tape::add(Var a, Var b) { return lincomb({{1.0, a}, {1.0, b}}); }

Var Tape::sub(Var a, Var b) { return lincomb({{1.0, a}, {-1.0, b}}); }

Var Tape::mul(Var a, Var b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
          "mul shape mismatch");
  Matrix y = value(a).cwiseProduct(value(b));
  return emit(std::move(y), needs_grad(a) || needs_grad(b), "mul",
              [a, b](Tape& t, const Node& self) {
                if (t.needs_grad(a))
                  accumulate(t.grad_of(a.id), self.grad.cwiseProduct(t.value(b)));
                if (t.needs_grad(b))
                  accumulate(t.grad_of(b.id), self.grad.cwiseProduct(t.value(a)));
              });
}

Var Tape::scale(Var x, double c) { return lincomb({{c, x}}); }

Var Tape::square(Var x) { return mul(x, x); }

Var Tape::sum(Var x) {
  Matrix y(1, 1);
  y(0, 0) = value(x).sum();
  return emit(std::move(y), needs_grad(x), "sum", [x](Tape& t, const Node& self) {
    if (!t.needs_grad(x)) return;
    accumulate(t.grad_of(x.id),
               Matrix::Constant(t.value(x).rows(), t.value(x).cols(), self.grad(0, 0)));
  });
}

Var Tape::lincomb(std::initializer_list<std::pair<double, Var>> terms) {
  require(terms.size() > 0, "lincomb needs at least one term");
  std::vector<std::pair<double, Var>> ts(terms);
  Matrix y = ts[0].first * value(ts[0].second);
  bool ng = needs_grad(ts[0].second);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    require(value(ts[i].second).rows() == y.rows() && value(ts[i].second).cols() == y.cols(),
            "lincomb shape mismatch");
    y += ts[i].first * value(ts[i].second);
    ng = ng || needs_grad(ts[i].second);
  }
  return emit(std::move(y), ng, "lincomb", [ts](Tape& t, const Node& self) {
    for (const auto& [c, v] : ts)
      if (t.needs_grad(v)) accumulate(t.grad_of(v.id), c * self.grad);
  });
}

Var Tape::sq_diff_sum(Var x, const Matrix& target) {
  const Matrix& xv = value(x);
  require(xv.rows() == target.rows() && xv.cols() == target.cols(),
          "sq_diff_sum shape mismatch");
  Matrix y(1, 1);
  y(0, 0) = (xv - target).squaredNorm();
  return emit(std::move(y), needs_grad(x), "sq_diff_sum",
              [x, target](Tape& t, const Node& self) {
                if (!t.needs_grad(x)) return;
                accumulate(t.grad_of(x.id), 2.0 * self.grad(0, 0) * (t.value(x) - target));
              });
}

Matrix gather_stencils(const Matrix& values, const StencilPlan& plan) {
  require(values.rows() == plan.in.n_comp && int(values.cols()) == plan.in.cols(),
          "gather input layout mismatch");
  const int window = plan.window();
  Matrix x(plan.in.n_comp * window, plan.out_cols());
  for (int b = 0; b < plan.in.n_blocks; ++b)
    for (int e = 0; e < plan.out_per_block(); ++e) {
      const int col = b * plan.out_per_block() + e;
      for (int i = 0; i < window; ++i) {
        const int src = b * plan.in.n_cells + plan.source_cell(e, i);
        for (int c = 0; c < plan.in.n_comp; ++c) x(c * window + i, col) = values(c, src);
      }
    }
  return x;
}

Var Tape::gather_stencil(Var field, const StencilPlan& plan) {
  Matrix x = gather_stencils(value(field), plan);
  const int window = plan.window();
  return emit(std::move(x), needs_grad(field), "gather_stencil",
              [field, plan, window](Tape& t, const Node& self) {
                if (!t.needs_grad(field)) return;
                Matrix& g = t.grad_of(field.id);
                if (g.size() == 0)
                  g = Matrix::Zero(t.value(field).rows(), t.value(field).cols());
                for (int b = 0; b < plan.in.n_blocks; ++b)
                  for (int e = 0; e < plan.out_per_block(); ++e) {
                    const int col = b * plan.out_per_block() + e;
                    for (int i = 0; i < window; ++i) {
                      const int src = b * plan.in.n_cells + plan.source_cell(e, i);
                      for (int c = 0; c < plan.in.n_comp; ++c)
                        g(c, src) += self.grad(c * window + i, col);
                    }
                  }
              });
}

Var Tape::flux_divergence(Var edge_values, const FieldLayout& out, double dx) {
  const Matrix& f = value(edge_values);
  const int n = out.n_cells;
  require(f.rows() == out.n_comp && int(f.cols()) == (n + 1) * out.n_blocks,
          "flux divergence layout mismatch");
  Matrix r(out.n_comp, out.cols());
  for (int b = 0; b < out.n_blocks; ++b) {
    const auto fb = f.middleCols(b * (n + 1), n + 1);
    r.middleCols(b * n, n) = (fb.leftCols(n) - fb.rightCols(n)) / dx;
  }
  return emit(std::move(r), needs_grad(edge_values), "flux_divergence",
              [edge_values, out, dx, n](Tape& t, const Node& self) {
                if (!t.needs_grad(edge_values)) return;
                Matrix& g = t.grad_of(edge_values.id);
                if (g.size() == 0)
                  g = Matrix::Zero(t.value(edge_values).rows(), t.value(edge_values).cols());
                for (int b = 0; b < out.n_blocks; ++b) {
                  auto gb = g.middleCols(b * (n + 1), n + 1);
                  const auto rb = self.grad.middleCols(b * n, n);
                  gb.leftCols(n) += rb / dx;
                  gb.rightCols(n) -= rb / dx;
                }
              });
}

Var Tape::block_totals(Var field, const FieldLayout& layout, double factor) {
  const Matrix& u = value(field);
  require(u.rows() == layout.n_comp && int(u.cols()) == layout.cols(),
          "block totals layout mismatch");
  Matrix totals(layout.n_comp, layout.n_blocks);
  for (int b = 0; b < layout.n_blocks; ++b)
    totals.col(b) = factor * u.middleCols(b * layout.n_cells, layout.n_cells).rowwise().sum();
  return emit(std::move(totals), needs_grad(field), "block_totals",
              [field, layout, factor](Tape& t, const Node& self) {
                if (!t.needs_grad(field)) return;
                Matrix& g = t.grad_of(field.id);
                if (g.size() == 0)
                  g = Matrix::Zero(t.value(field).rows(), t.value(field).cols());
                for (int b = 0; b < layout.n_blocks; ++b)
                  g.middleCols(b * layout.n_cells, layout.n_cells).colwise() +=
                      factor * self.grad.col(b);
              });
}

void Tape::backward(Var root) {
  require(root.valid() && root.id < int(nodes_.size()), "invalid backward root");
  require(nodes_[root.id].value.size() == 1, "backward root must be scalar");
  if (!nodes_[root.id].needs_grad) return;  // constant loss: all gradients zero
  nodes_[root.id].grad = Matrix::Constant(1, 1, 1.0);
  for (int id = root.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.needs_grad || node.grad.size() == 0 || !node.pull) continue;
    node.pull(*this, node);
  }
}

MlpVars bind_mlp(Tape& tape, const MlpParams& params) {
  params.validate();
  MlpVars net;
  for (int l = 0; l < params.n_layers(); ++l) {
    net.weights.push_back(tape.parameter(params.weights[l]));
    net.biases.push_back(tape.parameter(params.biases[l]));
  }
  return net;
}

Var mlp_apply(Tape& tape, const MlpVars& net, Var x) {
  Var h = x;
  const int n_layers = int(net.weights.size());
  for (int l = 0; l < n_layers; ++l)
    h = tape.affine(net.weights[l], net.biases[l], h, l + 1 < n_layers);
  return h;
}

GradientBundle collect_gradients(const Tape& tape, const MlpVars& net,
                                 const MlpParams& params) {
  // Parameters the program never touched keep an exactly zero gradient.
  GradientBundle g = GradientBundle::zeros_like(params);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (tape.has_gradient(net.weights[l])) g.weights[l] = tape.gradient(net.weights[l]);
    if (tape.has_gradient(net.biases[l])) g.biases[l] = tape.gradient(net.biases[l]).col(0);
  }
  return g;
}

std::pair<double, GradientBundle> grad_scalar(
    const MlpParams& params, const std::function<Var(Tape&, const MlpVars&)>& program) {
  Tape tape;
  MlpVars net = bind_mlp(tape, params);
  Var root = program(tape, net);
  require(tape.value(root).size() == 1, "loss program must return a scalar");
  const double loss = tape.value(root)(0, 0);
  tape.backward(root);
  return {loss, collect_gradients(tape, net, params)};
}

}  // namespace consflux::ad
