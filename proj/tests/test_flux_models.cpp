#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "consflux/flux_model.hpp"
#include "consflux/solver.hpp"

using namespace consflux;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

ModelSpec random_cfn(int n_comp, BoundaryKind bc, double dx, std::uint64_t seed,
                     std::vector<int> hidden = {16, 16}) {
  Rng rng(seed);
  return ModelSpec::make(ModelForm::Cfn, n_comp, bc, dx, hidden, rng);
}

ModelSpec zero_cfn(int n_comp, BoundaryKind bc, double dx) {
  ModelSpec spec = random_cfn(n_comp, bc, dx, 1);
  for (auto& w : spec.mlp.weights) w.setZero();
  for (auto& b : spec.mlp.biases) b.setZero();
  return spec;
}

StateField random_field(const Grid1D& grid, int n_comp, std::uint64_t seed) {
  Rng rng(seed);
  Matrix vals(n_comp, grid.n_cells);
  for (int i = 0; i < vals.size(); ++i) vals.reshaped()(i) = rng.uniform(-1.0, 1.0);
  return StateField(grid, std::move(vals));
}

}  // namespace

TEST_CASE("model spec validation") {
  Rng rng(1);
  ModelSpec spec = ModelSpec::make(ModelForm::Cfn, 1, BoundaryKind::Periodic, 0.1, {8}, rng);
  CHECK(spec.stencil_left == 2);
  CHECK(spec.stencil_right == 3);
  CHECK(spec.mlp.d_in() == 6);
  CHECK(spec.mlp.d_out() == 1);

  ModelSpec ncfn = ModelSpec::make(ModelForm::Ncfn, 2, BoundaryKind::ZerothOrder, 0.1, {8}, rng);
  CHECK(ncfn.stencil_left == 3);
  CHECK(ncfn.mlp.d_in() == 14);
  CHECK(ncfn.mlp.d_out() == 2);

  spec.lambda2 = 0.01;  // only ncfn-reg carries a lambda2
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("cfn edge stencil reads the symmetric window around each edge") {
  // N = 8, periodic, (p, q) = (2, 3): the left boundary edge reads cells
  // {6,7,8,1,2,3} in 1-indexed labels.
  const int n = 8;
  ModelSpec spec = random_cfn(1, BoundaryKind::Periodic, 1.0, 2);
  const auto plan = edge_plan(spec, n, 1);
  REQUIRE(plan.window() == 6);
  REQUIRE(plan.out_per_block() == n + 1);
  Matrix vals(1, n);
  for (int j = 0; j < n; ++j) vals(0, j) = double(j + 1);  // cell labels
  const Matrix x = ad::gather_stencils(vals, plan);
  const std::vector<double> edge0 = {6, 7, 8, 1, 2, 3};
  for (int i = 0; i < 6; ++i) CHECK(x(i, 0) == edge0[i]);
  // interior edge 3 (between cells 3 and 4): {1,2,3,4,5,6}
  for (int i = 0; i < 6; ++i) CHECK(x(i, 3) == double(i + 1));
  // right boundary edge mirrors the left one under periodicity
  for (int i = 0; i < 6; ++i) CHECK(x(i, n) == edge0[i]);
}

TEST_CASE("ncfn cell stencil reads cells j-p..j+q") {
  const int n = 8;
  Rng rng(3);
  ModelSpec spec = ModelSpec::make(ModelForm::Ncfn, 1, BoundaryKind::ZerothOrder, 1.0, {8}, rng);
  const auto plan = cell_plan(spec, n, 1);
  REQUIRE(plan.window() == 7);
  REQUIRE(plan.out_per_block() == n);
  Matrix vals(1, n);
  for (int j = 0; j < n; ++j) vals(0, j) = double(j + 1);
  const Matrix x = ad::gather_stencils(vals, plan);
  // cell 1 (1-indexed) with zeroth-order padding: {1,1,1,1,2,3,4}
  const std::vector<double> cell0 = {1, 1, 1, 1, 2, 3, 4};
  for (int i = 0; i < 7; ++i) CHECK(x(i, 0) == cell0[i]);
  // cell 5: {2,3,4,5,6,7,8}
  for (int i = 0; i < 7; ++i) CHECK(x(i, 4) == double(i + 2));
}

TEST_CASE("cfn edge fluxes on a constant field are identical across edges") {
  const Grid1D grid(0.0, kTwoPi, 16);
  const ModelSpec spec = random_cfn(1, BoundaryKind::Periodic, grid.dx(), 4);
  const StateField f(grid, Matrix::Constant(1, 16, 0.7));
  const Matrix flux = cfn_edge_fluxes(f, spec);
  REQUIRE(flux.cols() == 17);
  for (int e = 1; e <= 16; ++e) CHECK(flux(0, e) == flux(0, 0));
  // constant-state preservation is exact
  CHECK(cfn_rhs(f, spec).values.cwiseAbs().maxCoeff() == 0.0);
  const ModelSpec spec_z = random_cfn(1, BoundaryKind::ZerothOrder, grid.dx(), 4);
  CHECK(cfn_rhs(f, spec_z).values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero network gives zero fluxes and zero rhs") {
  const Grid1D grid(0.0, kTwoPi, 16);
  const ModelSpec spec = zero_cfn(1, BoundaryKind::Periodic, grid.dx());
  const StateField f = random_field(grid, 1, 5);
  CHECK(cfn_edge_fluxes(f, spec).cwiseAbs().maxCoeff() == 0.0);
  CHECK(cfn_rhs(f, spec).values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cfn rhs telescopes: periodic total is conserved") {
  const Grid1D grid(0.0, kTwoPi, 64);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const ModelSpec spec = random_cfn(2, BoundaryKind::Periodic, grid.dx(), seed);
    const StateField f = random_field(grid, 2, seed + 10);
    const StateField r = cfn_rhs(f, spec);
    const Vector total = r.values.rowwise().sum() * grid.dx();
    CHECK(total.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("ncfn rhs has no telescoping guarantee") {
  const Grid1D grid(0.0, kTwoPi, 64);
  Rng rng(7);
  const ModelSpec spec =
      ModelSpec::make(ModelForm::Ncfn, 1, BoundaryKind::Periodic, grid.dx(), {16, 16}, rng);
  const StateField f = random_field(grid, 1, 11);
  const StateField r = ncfn_rhs(f, spec);
  CHECK(std::abs(r.values.sum() * grid.dx()) > 1e-6);

  // constant field: every cell sees the same stencil, same output
  const StateField c(grid, Matrix::Constant(1, 64, 0.3));
  const StateField rc = ncfn_rhs(c, spec);
  for (int j = 1; j < 64; ++j) CHECK(rc.values(0, j) == rc.values(0, 0));
}

TEST_CASE("cfn rhs is shift equivariant under periodic bc") {
  const Grid1D grid(0.0, kTwoPi, 32);
  const ModelSpec spec = random_cfn(1, BoundaryKind::Periodic, grid.dx(), 13);
  const StateField f = random_field(grid, 1, 14);
  const StateField r = cfn_rhs(f, spec);
  for (int shift : {1, 5, 17}) {
    Matrix shifted(1, 32);
    for (int j = 0; j < 32; ++j) shifted(0, (j + shift) % 32) = f.values(0, j);
    const StateField rs = cfn_rhs(StateField(grid, shifted), spec);
    for (int j = 0; j < 32; ++j) CHECK(rs.values(0, (j + shift) % 32) == r.values(0, j));
  }
}

TEST_CASE("rollout basics") {
  const Grid1D grid(0.0, kTwoPi, 32);
  const StateField u0 = random_field(grid, 1, 21);

  SUBCASE("zero network is the identity") {
    const ModelSpec spec = zero_cfn(1, BoundaryKind::Periodic, grid.dx());
    const auto states = rollout(spec, u0, 20, 0.01);
    REQUIRE(states.size() == 20);
    // stage recombination rounds in the last ulp; nothing else may move
    for (const auto& s : states)
      CHECK((s.values - u0.values).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(states.back().time == doctest::Approx(0.2));
  }

  SUBCASE("one step equals tvd_rk3_step of the model rhs") {
    const ModelSpec spec = random_cfn(1, BoundaryKind::Periodic, grid.dx(), 31);
    const auto states = rollout(spec, u0, 1, 0.01);
    const StateField direct = tvd_rk3_step(
        u0, [&](const StateField& f) { return model_rhs(f, spec); }, 0.01);
    CHECK(states[0].values == direct.values);
  }

  SUBCASE("stencil wider than the domain errors") {
    Matrix four(1, 4);
    four << 1, 2, 3, 4;
    const StateField tiny(Grid1D(0, 1, 4), four);
    const ModelSpec spec = random_cfn(1, BoundaryKind::Periodic, 0.25, 3);
    CHECK_THROWS_AS(cfn_rhs(tiny, spec), ValidationError);
  }
}

TEST_CASE("cfn conservation along a periodic rollout (module scale)") {
  const Grid1D grid(0.0, kTwoPi, 64);
  const ModelSpec spec = random_cfn(1, BoundaryKind::Periodic, grid.dx(), 17, {32, 32});
  Matrix vals(1, 64);
  for (int j = 0; j < 64; ++j) vals(0, j) = 0.1 + std::sin(grid.center(j));
  StateField u(grid, vals);
  const double total0 = total_conserved(u)(0);
  const auto states = rollout(spec, u, 100, 0.002);
  for (const auto& s : states)
    CHECK(std::abs(total_conserved(s)(0) - total0) <= 1e-11);
}

TEST_CASE("cfn zeroth-order boundary bookkeeping over one rk3 step") {
  // Total change equals -dt * (RK3-weighted flux difference at the domain
  // boundary edges); weights 1/6, 1/6, 2/3 for the three stage evaluations.
  const Grid1D grid(-5.0, 5.0, 32);
  const ModelSpec spec = random_cfn(1, BoundaryKind::ZerothOrder, grid.dx(), 23);
  const StateField u0 = random_field(grid, 1, 24);
  const double dt = 0.01;

  const auto rhs = [&](const StateField& f) { return cfn_rhs(f, spec); };
  const StateField u1(grid, u0.values + dt * rhs(u0).values);
  const StateField u2(grid, 0.75 * u0.values + 0.25 * u1.values + 0.25 * dt * rhs(u1).values);
  const StateField u3 = tvd_rk3_step(u0, rhs, dt);

  const Matrix f0 = cfn_edge_fluxes(u0, spec);
  const Matrix f1 = cfn_edge_fluxes(u1, spec);
  const Matrix f2 = cfn_edge_fluxes(u2, spec);
  const int last = grid.n_cells;
  const double boundary_term = (f0(0, last) - f0(0, 0)) / 6.0 + (f1(0, last) - f1(0, 0)) / 6.0 +
                               2.0 * (f2(0, last) - f2(0, 0)) / 3.0;
  const double change = total_conserved(u3)(0) - total_conserved(u0)(0);
  CHECK(change == doctest::Approx(-dt * boundary_term).epsilon(1e-10));
}

TEST_CASE("rollout gradients match finite differences") {
  const int n = 16;
  const Grid1D grid(0.0, kTwoPi, n);
  Rng rng(41);
  ModelSpec spec = ModelSpec::make(ModelForm::Cfn, 1, BoundaryKind::Periodic, grid.dx(),
                                   {8, 8}, rng);
  const StateField u0 = random_field(grid, 1, 42);
  Matrix target(1, n);
  Rng tr(43);
  for (int j = 0; j < n; ++j) target(0, j) = tr.uniform(-1.0, 1.0);
  const int steps = 2;
  const double dt = 0.05;
  const ad::FieldLayout layout{1, n, 1};

  const auto program = [&](ad::Tape& t, const ad::MlpVars& net) {
    const auto states = rollout_tape(t, net, spec, u0.values, layout, steps, dt);
    return t.sq_diff_sum(states.back(), target);
  };
  const auto [loss, grads] = ad::grad_scalar(spec.mlp, program);

  const auto plain = [&](const MlpParams& p) {
    ModelSpec s = spec;
    s.mlp = p;
    const auto states = rollout_batch(s, u0.values, layout, steps, dt);
    return (states.back() - target).squaredNorm();
  };
  CHECK(loss == doctest::Approx(plain(spec.mlp)).epsilon(1e-12));

  // spot-check a sample of parameters with central differences
  MlpParams p = spec.mlp;
  Rng pick(44);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const int l = int(pick.uniform_below(std::uint64_t(p.n_layers())));
    const int i = int(pick.uniform_below(std::uint64_t(p.weights[l].size())));
    const double h = 1e-6;
    const double saved = p.weights[l].reshaped()(i);
    p.weights[l].reshaped()(i) = saved + h;
    const double fp = plain(p);
    p.weights[l].reshaped()(i) = saved - h;
    const double fm = plain(p);
    p.weights[l].reshaped()(i) = saved;
    const double fd = (fp - fm) / (2.0 * h);
    const double adv = grads.weights[l].reshaped()(i);
    worst = std::max(worst,
                     std::abs(fd - adv) / std::max({std::abs(fd), std::abs(adv), 1e-4}));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto dir = std::filesystem::temp_directory_path() / "consflux_test_ckpt";
  std::filesystem::remove_all(dir);
  Rng rng(51);
  ModelSpec spec = ModelSpec::make(ModelForm::NcfnReg, 2, BoundaryKind::ZerothOrder,
                                   10.0 / 64.0, {16, 16}, rng, 0.05);
  CheckpointMeta meta;
  meta.epoch = 123;
  meta.seed = 9;
  meta.loss = 0.0625;
  meta.grid = Grid1D(-5.0, 5.0, 64);
  meta.dt = 0.005;
  meta.system = SystemId::ShallowWater;
  const std::string path = (dir / "checkpoint.json").string();
  save_checkpoint(spec, meta, path);

  CheckpointMeta back_meta;
  const ModelSpec back = load_checkpoint(path, &back_meta);
  CHECK(back.form == ModelForm::NcfnReg);
  CHECK(back.lambda2 == spec.lambda2);
  CHECK(back.stencil_left == 3);
  CHECK(back.bc == BoundaryKind::ZerothOrder);
  for (int l = 0; l < spec.mlp.n_layers(); ++l) {
    CHECK(back.mlp.weights[l] == spec.mlp.weights[l]);
    CHECK(back.mlp.biases[l] == spec.mlp.biases[l]);
  }
  CHECK(back_meta.epoch == 123);
  CHECK(back_meta.grid == meta.grid);
  CHECK(back_meta.dt == meta.dt);
  CHECK(back_meta.system == SystemId::ShallowWater);
}
