#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "consflux/dataset_io.hpp"
#include "consflux/diagnostics.hpp"
#include "consflux/pipeline.hpp"
#include "consflux/training.hpp"

using namespace consflux;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

RunConfig tiny_config(int n_traj = 4, int length = 3, int n_cells = 16) {
  RunConfig c;
  c.system = SystemId::Burgers;
  c.bc = BoundaryKind::Periodic;
  c.domain_a = 0.0;
  c.domain_b = kTwoPi;
  c.n_cells = n_cells;
  c.dt = 0.01;
  c.n_traj = n_traj;
  c.length = length;
  c.seed = 3;
  c.sampler = IcSamplerSpec::burgers_sine();
  return c;
}

ModelSpec small_model(ModelForm form, const Dataset& ds, std::uint64_t seed,
                      double lambda2 = 0.0) {
  Rng rng(seed);
  return ModelSpec::make(form, ds.n_comp(), ds.bc, ds.grid().dx(), {16, 16}, rng, lambda2);
}

Dataset self_generated(const ModelSpec& model, const Dataset& base) {
  // Replace every trajectory's later snapshots by the model's own rollout.
  Dataset ds = base;
  for (auto& traj : ds.trajectories) {
    const auto states = rollout(model, traj.snapshots[0], traj.n_transitions(), traj.dt);
    for (int l = 1; l < int(traj.snapshots.size()); ++l) traj.snapshots[l] = states[l - 1];
  }
  return ds;
}

}  // namespace

TEST_CASE("recurrent loss") {
  const Dataset ds = generate_dataset(tiny_config());

  SUBCASE("self-generated data gives (near-)zero loss") {
    const ModelSpec model = small_model(ModelForm::Cfn, ds, 7);
    const Dataset self = self_generated(model, ds);
    CHECK(recurrent_loss(model, self.trajectories) <= 1e-24);
  }

  SUBCASE("zero network on constant-in-time data gives zero") {
    ModelSpec model = small_model(ModelForm::Cfn, ds, 7);
    for (auto& w : model.mlp.weights) w.setZero();
    for (auto& b : model.mlp.biases) b.setZero();
    Dataset frozen = ds;
    for (auto& traj : frozen.trajectories)
      for (int l = 1; l < int(traj.snapshots.size()); ++l) {
        traj.snapshots[l].values = traj.snapshots[0].values;
      }
    CHECK(recurrent_loss(model, frozen.trajectories) <= 1e-28);
  }

  SUBCASE("one trajectory, L = 1, one cell off by +1 gives exactly 1") {
    const ModelSpec model = small_model(ModelForm::Cfn, ds, 7);
    Dataset single = ds;
    single.trajectories.resize(1);
    auto& traj = single.trajectories[0];
    const auto states = rollout(model, traj.snapshots[0], 1, traj.dt);
    traj.snapshots.resize(2);
    traj.snapshots[1] = states[0];
    traj.snapshots[1].values(0, 5) += 1.0;
    CHECK(recurrent_loss(model, single.trajectories) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("loss is permutation invariant over trajectories") {
    const ModelSpec model = small_model(ModelForm::Cfn, ds, 9);
    const double base = recurrent_loss(model, ds.trajectories);
    Dataset shuffled = ds;
    std::swap(shuffled.trajectories[0], shuffled.trajectories[3]);
    std::swap(shuffled.trajectories[1], shuffled.trajectories[2]);
    CHECK(recurrent_loss(model, shuffled.trajectories) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("boundary flux series") {
  SUBCASE("constant trajectory: trapezoid is exact") {
    const Grid1D grid(-5.0, 5.0, 16);
    Matrix vals(2, 16);
    vals.row(0).setConstant(2.0);
    vals.row(1).setConstant(0.5);
    Trajectory traj;
    traj.dt = 0.1;
    for (int l = 0; l <= 3; ++l) traj.snapshots.emplace_back(grid, vals, 0.1 * l);
    const auto series =
        boundary_flux_series(traj, SystemSpec::shallow_water(1.0), BoundaryKind::ZerothOrder);
    const Vector expect = physical_flux(vals.col(0), SystemSpec::shallow_water(1.0));
    for (int l = 0; l < 3; ++l) {
      CHECK(series.at_a(0, l) == doctest::Approx(expect(0)));
      CHECK(series.at_a(1, l) == doctest::Approx(expect(1)));
      CHECK(series.at_b(0, l) == doctest::Approx(expect(0)));
    }
  }

  SUBCASE("periodic gives zeros by convention") {
    const Grid1D grid(0.0, kTwoPi, 16);
    Trajectory traj;
    traj.dt = 0.1;
    Matrix vals = Matrix::Random(1, 16);
    for (int l = 0; l <= 2; ++l) traj.snapshots.emplace_back(grid, vals, 0.1 * l);
    const auto series =
        boundary_flux_series(traj, SystemSpec::burgers(), BoundaryKind::Periodic);
    CHECK(series.at_a.cwiseAbs().maxCoeff() == 0.0);
    CHECK(series.at_b.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("two-snapshot scalar toy evaluates the trapezoid") {
    const Grid1D grid(0.0, 1.0, 4);
    Matrix a = Matrix::Constant(1, 4, 1.0);
    Matrix b = Matrix::Constant(1, 4, 3.0);
    Trajectory traj;
    traj.dt = 1.0;
    traj.snapshots.emplace_back(grid, a, 0.0);
    traj.snapshots.emplace_back(grid, b, 1.0);
    const auto series =
        boundary_flux_series(traj, SystemSpec::burgers(), BoundaryKind::ZerothOrder);
    CHECK(series.at_a(0, 0) == doctest::Approx(2.5));  // (0.5 + 4.5) / 2
  }
}

TEST_CASE("conserved remainder") {
  const Grid1D grid(0.0, 2.0, 4);

  SUBCASE("identical prediction with zero fluxes gives zeros") {
    Matrix vals = Matrix::Constant(1, 4, 1.0);
    const StateField u0(grid, vals, 0.0);
    std::vector<StateField> pred = {StateField(grid, vals, 0.1), StateField(grid, vals, 0.2)};
    BoundaryFluxSeries series;
    series.at_a = Matrix::Zero(1, 2);
    series.at_b = Matrix::Zero(1, 2);
    const Matrix c = conserved_remainder(pred, u0, series, 0.1);
    CHECK(c.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("hand-computed periodic drift") {
    Matrix v0(1, 4), v1(1, 4);
    v0 << 1, 2, 3, 4;
    v1 << 1, 2, 3, 5;
    const StateField u0(grid, v0, 0.0);
    std::vector<StateField> pred = {StateField(grid, v1, 0.1)};
    BoundaryFluxSeries series;
    series.at_a = Matrix::Zero(1, 1);
    series.at_b = Matrix::Zero(1, 1);
    const Matrix c = conserved_remainder(pred, u0, series, 0.1);
    CHECK(c(0, 0) == doctest::Approx(0.5));  // dx = 0.5
  }

  SUBCASE("reference swe trajectory balances its boundary fluxes") {
    RunConfig cfg;
    cfg.system = SystemId::ShallowWater;
    cfg.bc = BoundaryKind::ZerothOrder;
    cfg.domain_a = -5.0;
    cfg.domain_b = 5.0;
    cfg.n_cells = 128;
    cfg.dt = 0.005;
    cfg.n_traj = 1;
    cfg.length = 20;
    cfg.seed = 4;
    cfg.sampler = IcSamplerSpec::dam_break();
    const Dataset ds = generate_dataset(cfg);
    const auto& traj = ds.trajectories[0];
    const auto series =
        boundary_flux_series(traj, SystemSpec::shallow_water(1.0), BoundaryKind::ZerothOrder);
    std::vector<StateField> pred(traj.snapshots.begin() + 1, traj.snapshots.end());
    const Matrix c = conserved_remainder(pred, traj.snapshots[0], series, traj.dt);
    CHECK(c.cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("regularizer") {
  const Dataset ds = generate_dataset(tiny_config());
  std::vector<BoundaryFluxSeries> series;
  for (const auto& t : ds.trajectories)
    series.push_back(boundary_flux_series(t, SystemSpec::burgers(), ds.bc));

  SUBCASE("cfn under periodic bc is conservative for any parameters") {
    const ModelSpec model = small_model(ModelForm::Cfn, ds, 21);
    CHECK(regularizer(model, ds.trajectories, series) <= 1e-20);
  }

  SUBCASE("ncfn with a random network violates conservation") {
    const ModelSpec model = small_model(ModelForm::NcfnReg, ds, 22, 0.01);
    CHECK(regularizer(model, ds.trajectories, series) > 1e-10);
  }

  SUBCASE("regularized loss arithmetic") {
    const ModelSpec model = small_model(ModelForm::NcfnReg, ds, 23, 1e-2);
    const double l = recurrent_loss(model, ds.trajectories);
    const double r = regularizer(model, ds.trajectories, series);
    const double combined = regularized_loss(model, ds.trajectories, 1e-2, series);
    CHECK(combined == doctest::Approx(l + 1e-2 * r).epsilon(1e-12));
    CHECK(regularized_loss(model, ds.trajectories, 0.0, series) ==
          doctest::Approx(l).epsilon(1e-15));
  }
}

TEST_CASE("gradient of the regularized loss matches finite differences (N=16, L=2)") {
  const Dataset ds = generate_dataset(tiny_config(2, 2, 16));
  Rng rng(31);
  ModelSpec model =
      ModelSpec::make(ModelForm::NcfnReg, 1, ds.bc, ds.grid().dx(), {8, 8}, rng, 0.05);
  std::vector<BoundaryFluxSeries> series;
  for (const auto& t : ds.trajectories)
    series.push_back(boundary_flux_series(t, SystemSpec::burgers(), ds.bc));

  // taped loss + gradient
  const int b_count = ds.n_traj();
  const auto program = [&](ad::Tape& t, const ad::MlpVars& net) {
    ad::FieldLayout layout{1, 16, b_count};
    Matrix u0(1, 16 * b_count);
    for (int b = 0; b < b_count; ++b)
      u0.middleCols(16 * b, 16) = ds.trajectories[b].snapshots[0].values;
    const auto states = rollout_tape(t, net, model, u0, layout, 2, ds.dt());
    ad::Var loss;
    for (int l = 0; l < 2; ++l) {
      Matrix target(1, 16 * b_count);
      for (int b = 0; b < b_count; ++b)
        target.middleCols(16 * b, 16) = ds.trajectories[b].snapshots[l + 1].values;
      const ad::Var term = t.sq_diff_sum(states[l], target);
      loss = l == 0 ? term : t.add(loss, term);
    }
    loss = t.scale(loss, 1.0 / (b_count * 2.0));
    ad::Var reg;
    for (int l = 0; l < 2; ++l) {
      Matrix target(1, b_count);
      for (int b = 0; b < b_count; ++b) {
        target(0, b) = ds.trajectories[b].snapshots[0].values.sum() * model.dx;
        for (int k = 0; k <= l; ++k)
          target(0, b) += (series[b].at_a(0, k) - series[b].at_b(0, k)) * ds.dt();
      }
      const ad::Var totals = t.block_totals(states[l], layout, model.dx);
      const ad::Var term = t.sq_diff_sum(totals, target);
      reg = l == 0 ? term : t.add(reg, term);
    }
    return t.add(loss, t.scale(reg, model.lambda2));
  };
  const auto [loss, grads] = ad::grad_scalar(model.mlp, program);

  const auto plain = [&](const MlpParams& p) {
    ModelSpec m = model;
    m.mlp = p;
    return regularized_loss(m, ds.trajectories, model.lambda2, series);
  };
  CHECK(loss == doctest::Approx(plain(model.mlp)).epsilon(1e-12));

  Rng pick(32);
  double worst = 0.0;
  MlpParams p = model.mlp;
  for (int trial = 0; trial < 40; ++trial) {
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
    worst =
        std::max(worst, std::abs(fd - adv) / std::max({std::abs(fd), std::abs(adv), 1e-4}));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("train basics") {
  const auto dir = std::filesystem::temp_directory_path() / "consflux_test_train";
  std::filesystem::remove_all(dir);
  const Dataset ds = generate_dataset(tiny_config(3, 3, 16));

  SUBCASE("zero epochs returns the initialized model and empty history") {
    TrainConfig cfg;
    cfg.form = ModelForm::Cfn;
    cfg.epochs = 0;
    cfg.seed = 5;
    cfg.hidden = {8, 8};
    cfg.out_dir = (dir / "zero").string();
    const TrainResult r = train(cfg, ds);
    CHECK(r.history.empty());
    Rng rng = Rng::stream(5, rng_tag::init, 0);
    const ModelSpec fresh =
        ModelSpec::make(ModelForm::Cfn, 1, ds.bc, ds.grid().dx(), {8, 8}, rng);
    for (int l = 0; l < fresh.mlp.n_layers(); ++l)
      CHECK(r.model.mlp.weights[l] == fresh.mlp.weights[l]);
    CHECK(std::filesystem::exists(dir / "zero" / "checkpoint.json"));
  }

  SUBCASE("loss decreases on a small run and history is well-formed") {
    TrainConfig cfg;
    cfg.form = ModelForm::Cfn;
    cfg.epochs = 150;
    cfg.lr = 1e-3;
    cfg.seed = 6;
    cfg.hidden = {16, 16};
    const TrainResult r = train(cfg, ds);
    REQUIRE(int(r.history.size()) == 150);
    CHECK(r.history.front().epoch == 1);
    CHECK(r.history.back().epoch == 150);
    CHECK(r.history.back().loss < 0.5 * r.initial_loss);
  }

  SUBCASE("training is deterministic") {
    TrainConfig cfg;
    cfg.form = ModelForm::Cfn;
    cfg.epochs = 25;
    cfg.lr = 1e-3;
    cfg.seed = 7;
    cfg.hidden = {8, 8};
    const TrainResult a = train(cfg, ds);
    const TrainResult b = train(cfg, ds);
    for (int l = 0; l < a.model.mlp.n_layers(); ++l)
      CHECK(a.model.mlp.weights[l] == b.model.mlp.weights[l]);
    for (std::size_t e = 0; e < a.history.size(); ++e)
      CHECK(a.history[e].loss == b.history[e].loss);
  }

  SUBCASE("ncfn-reg trains with the regularizer active") {
    TrainConfig cfg;
    cfg.form = ModelForm::NcfnReg;
    cfg.lambda2 = 1e-2;
    cfg.epochs = 30;
    cfg.lr = 1e-3;
    cfg.seed = 8;
    cfg.hidden = {8, 8};
    const TrainResult r = train(cfg, ds);
    CHECK(r.history.back().reg_term >= 0.0);
    CHECK(r.history.back().lambda2 == 1e-2);
  }

  SUBCASE("lambda2 on a plain ncfn is rejected") {
    TrainConfig cfg;
    cfg.form = ModelForm::Ncfn;
    cfg.lambda2 = 1e-2;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }

  SUBCASE("persistent blow-up aborts with diagnostics") {
    TrainConfig cfg;
    cfg.form = ModelForm::Cfn;
    cfg.epochs = 50;
    cfg.lr = 1e6;  // first update launches the parameters into instability
    cfg.seed = 9;
    cfg.hidden = {8, 8};
    cfg.max_consecutive_failures = 3;
    CHECK_THROWS_WITH_AS(train(cfg, ds), doctest::Contains("aborted"), NumericError);
  }
}

TEST_CASE("select_lambda2") {
  const Dataset ds = generate_dataset(tiny_config(5, 3, 16));
  TrainConfig cfg;
  cfg.form = ModelForm::NcfnReg;
  cfg.seed = 11;
  cfg.hidden = {8, 8};
  cfg.probe_epochs = 5;
  cfg.lr = 1e-3;

  SUBCASE("singleton grid returns its element") {
    cfg.lambda2_grid = {0.125};
    CHECK(select_lambda2(cfg, ds) == 0.125);
  }
  SUBCASE("identical residuals break toward the smaller lambda2") {
    cfg.probe_epochs = 0;  // probes keep the same init, residuals tie exactly
    cfg.lambda2_grid = {1e-2, 1e-4, 1.0};
    CHECK(select_lambda2(cfg, ds) == 1e-4);
  }
  SUBCASE("default grid holds the benchmark candidates") {
    const TrainConfig defaults;
    REQUIRE(defaults.lambda2_grid.size() == 5);
    CHECK(defaults.lambda2_grid[0] == 1.0);
    CHECK(defaults.lambda2_grid[1] == 5e-2);
    CHECK(defaults.lambda2_grid[2] == 1e-2);
    CHECK(defaults.lambda2_grid[3] == 1e-4);
    CHECK(defaults.lambda2_grid[4] == 1e-6);
  }
}
