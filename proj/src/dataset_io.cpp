#include "consflux/dataset_io.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace consflux {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path payload_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

void check_little_endian() {
  if constexpr (std::endian::native != std::endian::little)
    throw IoError("dataset files are little-endian; this host is not");
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::string& path) {
  check_little_endian();
  dataset.validate();

  const int n_traj = dataset.n_traj();
  const int n_snap = dataset.n_snapshots();
  const int n_comp = dataset.n_comp();
  const int n_cells = dataset.grid().n_cells;

  std::vector<double> payload;
  payload.reserve(std::size_t(n_traj) * n_snap * n_comp * n_cells);
  for (const auto& traj : dataset.trajectories)
    for (const auto& snap : traj.snapshots)
      for (int c = 0; c < n_comp; ++c)
        for (int j = 0; j < n_cells; ++j) payload.push_back(snap.values(c, j));

  const std::size_t n_bytes = payload.size() * sizeof(double);
  const std::uint64_t checksum = fnv1a64(payload.data(), n_bytes);

  json manifest;
  manifest["schema_version"] = 1;
  manifest["system"] = to_string(dataset.system);
  manifest["bc"] = to_string(dataset.bc);
  manifest["grid"] = {{"a", dataset.grid().a}, {"b", dataset.grid().b}, {"n_cells", n_cells}};
  manifest["dims"] = {n_traj, n_snap, n_comp, n_cells};
  manifest["dt"] = dataset.dt();
  manifest["seed"] = dataset.seed;
  manifest["noise_level"] = dataset.noise_level;
  manifest["gravity"] = dataset.gravity;
  manifest["gamma"] = dataset.gamma;
  manifest["config_hash"] = dataset.config_hash;
  manifest["endianness"] = "little";
  manifest["payload"] = payload_path(path).filename().string();
  manifest["checksum"] = "fnv1a64:" + hex64(checksum);
  json trajs = json::array();
  for (const auto& traj : dataset.trajectories) {
    json t;
    t["t0"] = traj.snapshots.front().time;
    t["ic_params"] = traj.ic_params;
    trajs.push_back(std::move(t));
  }
  manifest["trajectories"] = std::move(trajs);

  fs::path manifest_path(path);
  if (manifest_path.has_parent_path()) fs::create_directories(manifest_path.parent_path());

  std::ofstream bin(payload_path(path), std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot open payload for writing: " + payload_path(path).string());
  bin.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(n_bytes));
  if (!bin) throw IoError("failed writing payload: " + payload_path(path).string());
  bin.close();

  std::ofstream mf(manifest_path, std::ios::trunc);
  if (!mf) throw IoError("cannot open manifest for writing: " + path);
  mf << manifest.dump(2) << "\n";
  if (!mf) throw IoError("failed writing manifest: " + path);
}

Dataset read_dataset(const std::string& path) {
  check_little_endian();
  std::ifstream mf(path);
  if (!mf) throw IoError("cannot open dataset manifest: " + path);
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw IoError("invalid dataset manifest " + path + ": " + e.what());
  }

  try {
    require(manifest.at("schema_version").get<int>() == 1, "unsupported dataset schema version");
    if (manifest.at("endianness").get<std::string>() != "little")
      throw IoError("dataset payload is not little-endian");

    const auto dims = manifest.at("dims");
    const int n_traj = dims.at(0).get<int>();
    const int n_snap = dims.at(1).get<int>();
    const int n_comp = dims.at(2).get<int>();
    const int n_cells = dims.at(3).get<int>();

    Dataset ds;
    ds.system = system_from_string(manifest.at("system").get<std::string>());
    ds.bc = boundary_from_string(manifest.at("bc").get<std::string>());
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.noise_level = manifest.at("noise_level").get<double>();
    ds.gravity = manifest.value("gravity", 1.0);
    ds.gamma = manifest.value("gamma", 1.4);
    ds.config_hash = manifest.value("config_hash", std::string());
    const Grid1D grid(manifest.at("grid").at("a").get<double>(),
                      manifest.at("grid").at("b").get<double>(), n_cells);
    const double dt = manifest.at("dt").get<double>();

    const fs::path bin_path = fs::path(path).parent_path() /
                              manifest.at("payload").get<std::string>();
    std::ifstream bin(bin_path, std::ios::binary | std::ios::ate);
    if (!bin) throw IoError("cannot open dataset payload: " + bin_path.string());
    const std::size_t file_bytes = std::size_t(bin.tellg());
    const std::size_t expect_bytes =
        std::size_t(n_traj) * n_snap * n_comp * n_cells * sizeof(double);
    if (file_bytes != expect_bytes)
      throw IoError("dataset payload size does not match manifest dims: got " +
                    std::to_string(file_bytes) + " bytes, expected " +
                    std::to_string(expect_bytes));
    std::vector<double> payload(expect_bytes / sizeof(double));
    bin.seekg(0);
    bin.read(reinterpret_cast<char*>(payload.data()), std::streamsize(expect_bytes));
    if (!bin) throw IoError("failed reading payload: " + bin_path.string());

    const std::string checksum = "fnv1a64:" + hex64(fnv1a64(payload.data(), expect_bytes));
    if (checksum != manifest.at("checksum").get<std::string>())
      throw IoError("dataset payload checksum mismatch: " + bin_path.string());

    const auto& trajs = manifest.at("trajectories");
    require(int(trajs.size()) == n_traj, "manifest trajectory list does not match dims");
    std::size_t pos = 0;
    ds.trajectories.resize(n_traj);
    for (int k = 0; k < n_traj; ++k) {
      Trajectory& traj = ds.trajectories[k];
      traj.dt = dt;
      const double t0 = trajs.at(k).at("t0").get<double>();
      for (const auto& [key, val] : trajs.at(k).at("ic_params").items())
        traj.ic_params[key] = val.get<double>();
      traj.snapshots.reserve(n_snap);
      for (int l = 0; l < n_snap; ++l) {
        Matrix values(n_comp, n_cells);
        for (int c = 0; c < n_comp; ++c)
          for (int j = 0; j < n_cells; ++j) values(c, j) = payload[pos++];
        traj.snapshots.emplace_back(grid, std::move(values), t0 + double(l) * dt);
      }
    }
    ds.validate();
    return ds;
  } catch (const json::exception& e) {
    throw IoError("invalid dataset manifest " + path + ": " + e.what());
  }
}

}  // namespace consflux
