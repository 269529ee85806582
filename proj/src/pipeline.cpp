#include "consflux/pipeline.hpp"

#include "consflux/presets.hpp"

#include <json.hpp>
#include <mutex>
#include <thread>

namespace consflux {

using nlohmann::json;

SystemSpec RunConfig::system_spec() const {
  switch (system) {
    case SystemId::Burgers: return SystemSpec::burgers();
    case SystemId::ShallowWater: return SystemSpec::shallow_water(gravity);
    case SystemId::Euler: return SystemSpec::euler(gamma);
  }
  throw ValidationError("unknown system id");
}

void RunConfig::validate() const {
  require(n_traj >= 1, "n_traj must be >= 1");
  require(length >= 1, "trajectory length must be >= 1");
  require(dt > 0.0, "dt must be positive");
  if (extended_length) require(length <= *extended_length, "L must not exceed M");
  require(noise_level >= 0.0, "noise level must be >= 0");
  require(system == sampler.system(), "sampler family must match the system");
  sampler.validate();
  grid();  // validates domain
}

namespace {

json sampler_to_json(const IcSamplerSpec& s) {
  json j;
  j["family"] = to_string(s.family);
  switch (s.family) {
    case IcFamily::BurgersSine:
      j["eps_s"] = s.eps_s;
      break;
    case IcFamily::DamBreak:
      j["h_left_mean"] = s.h_left_mean;
      j["eps_h_left"] = s.eps_h_left;
      j["h_right_mean"] = s.h_right_mean;
      j["eps_h_right"] = s.eps_h_right;
      j["eps_dam"] = s.eps_dam;
      break;
    case IcFamily::ShuOsher:
      j["rho_left_hat"] = s.rho_left_hat;
      j["wave_amp_hat"] = s.wave_amp_hat;
      j["p_left_hat"] = s.p_left_hat;
      j["p_right_hat"] = s.p_right_hat;
      j["u_left_hat"] = s.u_left_hat;
      j["x0_hat"] = s.x0_hat;
      j["eps_rel"] = s.eps_rel;
      j["x1"] = s.x1;
      j["gamma"] = s.gamma;
      break;
  }
  return j;
}

IcSamplerSpec sampler_from_json(const json& j) {
  IcSamplerSpec s;
  s.family = ic_family_from_string(j.at("family").get<std::string>());
  auto get = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  get("eps_s", s.eps_s);
  get("h_left_mean", s.h_left_mean);
  get("eps_h_left", s.eps_h_left);
  get("h_right_mean", s.h_right_mean);
  get("eps_h_right", s.eps_h_right);
  get("eps_dam", s.eps_dam);
  get("rho_left_hat", s.rho_left_hat);
  get("wave_amp_hat", s.wave_amp_hat);
  get("p_left_hat", s.p_left_hat);
  get("p_right_hat", s.p_right_hat);
  get("u_left_hat", s.u_left_hat);
  get("x0_hat", s.x0_hat);
  get("eps_rel", s.eps_rel);
  get("x1", s.x1);
  get("gamma", s.gamma);
  return s;
}

}  // namespace

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["system"] = to_string(c.system);
  j["bc"] = to_string(c.bc);
  j["domain"] = {c.domain_a, c.domain_b};
  j["n_cells"] = c.n_cells;
  j["dt"] = c.dt;
  j["n_traj"] = c.n_traj;
  j["length"] = c.length;
  if (c.extended_length) j["extended_length"] = *c.extended_length;
  j["noise_level"] = c.noise_level;
  j["seed"] = c.seed;
  j["sampler"] = sampler_to_json(c.sampler);
  if (c.system == SystemId::ShallowWater) j["gravity"] = c.gravity;
  if (c.system == SystemId::Euler) j["gamma"] = c.gamma;
  if (!c.fixed_ic.empty()) j["fixed_ic"] = c.fixed_ic;
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid config JSON: ") + e.what());
  }
  try {
    RunConfig c;
    if (j.contains("schema_version")) c.schema_version = j.at("schema_version").get<int>();
    require(c.schema_version == 1, "unsupported config schema version");
    c.system = system_from_string(j.at("system").get<std::string>());
    c.bc = boundary_from_string(j.at("bc").get<std::string>());
    c.domain_a = j.at("domain").at(0).get<double>();
    c.domain_b = j.at("domain").at(1).get<double>();
    c.n_cells = j.at("n_cells").get<int>();
    c.dt = j.at("dt").get<double>();
    c.n_traj = j.at("n_traj").get<int>();
    c.length = j.at("length").get<int>();
    if (j.contains("extended_length") && !j.at("extended_length").is_null())
      c.extended_length = j.at("extended_length").get<int>();
    if (j.contains("noise_level")) c.noise_level = j.at("noise_level").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.sampler = sampler_from_json(j.at("sampler"));
    if (j.contains("gravity")) c.gravity = j.at("gravity").get<double>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("fixed_ic")) c.fixed_ic = j.at("fixed_ic").get<std::string>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid config: ") + e.what());
  }
}

std::string config_hash(const RunConfig& config) {
  const std::string text = run_config_to_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset generate_dataset(const RunConfig& config, int threads) {
  config.validate();
  const Grid1D grid = config.grid();
  const SystemSpec sys = config.system_spec();
  const int horizon = config.extended_length.value_or(config.length);
  const double t_end = double(horizon) * config.dt;
  const CflPolicy policy = CflPolicy::fixed_dt(config.dt);

  Dataset ds;
  ds.system = config.system;
  ds.bc = config.bc;
  ds.seed = config.seed;
  ds.config_hash = config_hash(config);
  ds.gravity = config.gravity;
  ds.gamma = config.gamma;
  ds.trajectories.resize(config.n_traj);

  // Trajectory k depends only on the (seed, k) stream, so parallel generation
  // is bit-identical to sequential.
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&](int begin, int end) {
    for (int k = begin; k < end; ++k) {
      try {
        SampledIc ic;
        if (config.fixed_ic.empty()) {
          Rng rng = Rng::stream(config.seed, rng_tag::ic, std::uint64_t(k));
          ic = sample_ic(config.sampler, grid, rng);
        } else {
          ic.field = figure_ic(config.fixed_ic, grid);
        }
        Trajectory traj = solve_reference(ic.field, sys, config.bc, t_end, policy, config.dt);
        traj.ic_params = std::move(ic.params);
        ds.trajectories[k] = std::move(traj);
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure)
          failure = std::make_exception_ptr(
              Error(e.kind(), "trajectory " + std::to_string(k) + ": " + e.what()));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure)
          failure = std::make_exception_ptr(
              NumericError("trajectory " + std::to_string(k) + ": " + e.what()));
      }
    }
  };

  threads = std::max(1, std::min(threads, config.n_traj));
  if (threads == 1) {
    worker(0, config.n_traj);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (config.n_traj + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(config.n_traj, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  if (config.extended_length && *config.extended_length > config.length)
    ds = subsample_windows(ds, config.length, config.seed);
  if (config.noise_level > 0.0) ds = add_noise(ds, NoiseSpec{config.noise_level}, config.seed);
  ds.validate();
  return ds;
}

}  // namespace consflux
