#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "consflux.h"

namespace {

namespace fs = std::filesystem;

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "consflux_test_capi";
  return dir;
}

std::string tiny_generate_config(const char* extra = "") {
  return std::string("{\"preset\":\"burgers-caseI\",\"n_cells\":32,\"n_traj\":2,"
                     "\"length\":3,\"extended_length\":null,\"seed\":12") +
         extra + "}";
}

}  // namespace

TEST_CASE("c api end to end on a tiny run") {
  const auto dir = work_dir();
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data_dir = (dir / "data").string();
  REQUIRE(cf_set_threads(1) == CF_OK);

  // generate
  REQUIRE_MESSAGE(cf_generate(tiny_generate_config().c_str(), data_dir.c_str()) == CF_OK,
                  cf_last_error());
  CHECK(fs::exists(dir / "data" / "dataset.json"));
  CHECK(fs::exists(dir / "data" / "dataset.bin"));
  CHECK(fs::exists(dir / "data" / "config.json"));

  // dataset handle
  cf_dataset* ds = nullptr;
  REQUIRE(cf_dataset_open((dir / "data" / "dataset.json").string().c_str(), &ds) == CF_OK);
  cf_dataset_info info{};
  REQUIRE(cf_dataset_get_info(ds, &info) == CF_OK);
  CHECK(info.n_traj == 2);
  CHECK(info.n_snapshots == 4);
  CHECK(info.n_comp == 1);
  CHECK(info.n_cells == 32);
  CHECK(std::strcmp(info.system, "burgers") == 0);
  CHECK(std::strcmp(info.bc, "periodic") == 0);
  std::vector<double> values(32);
  REQUIRE(cf_dataset_get_values(ds, 0, 0, values.data(), values.size()) == CF_OK);
  CHECK(std::abs(values[0]) < 2.0);
  CHECK(cf_dataset_get_values(ds, 5, 0, values.data(), values.size()) ==
        CF_ERROR_VALIDATION);
  cf_dataset_close(ds);

  // train (0 epochs: initialized checkpoint only)
  const std::string train_cfg =
      std::string("{\"model\":\"cfn\",\"data\":\"") + (dir / "data" / "dataset.json").string() +
      "\",\"seed\":7,\"epochs\":0,\"hidden\":[8,8]}";
  const std::string model_dir = (dir / "model").string();
  REQUIRE_MESSAGE(cf_train(train_cfg.c_str(), model_dir.c_str()) == CF_OK, cf_last_error());
  CHECK(fs::exists(dir / "model" / "checkpoint.json"));
  CHECK(fs::exists(dir / "model" / "history.csv"));

  // model handle
  cf_model* model = nullptr;
  REQUIRE(cf_model_open((dir / "model" / "checkpoint.json").string().c_str(), &model) == CF_OK);
  cf_model_info minfo{};
  REQUIRE(cf_model_get_info(model, &minfo) == CF_OK);
  CHECK(minfo.n_comp == 1);
  CHECK(minfo.n_cells == 32);
  CHECK(std::strcmp(minfo.form, "cfn") == 0);
  CHECK(minfo.dt == 0.005);
  std::vector<double> u0(32, 0.5);
  std::vector<double> out(2 * 32);
  REQUIRE(cf_model_rollout(model, u0.data(), 1, 32, 2, 0.005, out.data()) == CF_OK);
  for (double v : out) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));  // constant state
  CHECK(cf_model_rollout(model, u0.data(), 2, 32, 1, 0.005, out.data()) ==
        CF_ERROR_VALIDATION);
  cf_model_close(model);

  // predict from a stored snapshot, t_end = 0 echoes the initial state
  const std::string pred_cfg = std::string("{\"checkpoint\":\"") +
                               (dir / "model" / "checkpoint.json").string() +
                               "\",\"ic\":{\"dataset\":\"" +
                               (dir / "data" / "dataset.json").string() +
                               "\",\"trajectory\":0},\"t_end\":0.0}";
  const std::string pred_dir = (dir / "pred").string();
  REQUIRE_MESSAGE(cf_predict(pred_cfg.c_str(), pred_dir.c_str()) == CF_OK, cf_last_error());
  cf_dataset* pred = nullptr;
  REQUIRE(cf_dataset_open((dir / "pred" / "prediction.json").string().c_str(), &pred) == CF_OK);
  cf_dataset_info pinfo{};
  cf_dataset_get_info(pred, &pinfo);
  CHECK(pinfo.n_traj == 1);
  CHECK(pinfo.n_snapshots == 1);
  cf_dataset_close(pred);

  // predict a short rollout and evaluate against the reference data
  const std::string pred2_cfg = std::string("{\"checkpoint\":\"") +
                                (dir / "model" / "checkpoint.json").string() +
                                "\",\"ic\":{\"dataset\":\"" +
                                (dir / "data" / "dataset.json").string() +
                                "\",\"trajectory\":0},\"t_end\":0.015}";
  const std::string pred2_dir = (dir / "pred2").string();
  REQUIRE_MESSAGE(cf_predict(pred2_cfg.c_str(), pred2_dir.c_str()) == CF_OK, cf_last_error());
  const std::string eval_cfg = std::string("{\"prediction\":\"") +
                               (dir / "pred2" / "prediction.json").string() +
                               "\",\"reference\":\"" +
                               (dir / "data" / "dataset.json").string() + "\"}";
  const std::string eval_dir = (dir / "eval").string();
  REQUIRE_MESSAGE(cf_evaluate(eval_cfg.c_str(), eval_dir.c_str()) == CF_OK, cf_last_error());
  CHECK(fs::exists(dir / "eval" / "metrics.json"));
  CHECK(fs::exists(dir / "eval" / "summary.csv"));
}

TEST_CASE("c api input validation and error codes") {
  CHECK(cf_generate(nullptr, "/tmp/x") == CF_ERROR_VALIDATION);
  CHECK(cf_generate("not json", "/tmp/consflux_capi_bad") == CF_ERROR_VALIDATION);
  CHECK(std::string(cf_last_error()).find("JSON") != std::string::npos);
  CHECK(cf_generate("{\"preset\":\"nope\"}", "/tmp/consflux_capi_bad") == CF_ERROR_VALIDATION);

  // io errors surface as CF_ERROR_IO
  CHECK(cf_train("{\"model\":\"cfn\",\"data\":\"/nonexistent/ds.json\"}",
                 "/tmp/consflux_capi_bad") == CF_ERROR_IO);
  cf_dataset* ds = nullptr;
  CHECK(cf_dataset_open("/nonexistent/ds.json", &ds) == CF_ERROR_IO);
  CHECK(ds == nullptr);

  // lambda2 is only valid for ncfn-reg
  CHECK(cf_train("{\"model\":\"ncfn\",\"data\":\"x.json\",\"lambda2\":0.01}", "/tmp/x") ==
        CF_ERROR_VALIDATION);
  CHECK(cf_set_threads(0) == CF_ERROR_VALIDATION);

  char buf[64];
  size_t need = 0;
  CHECK(cf_list_presets(buf, sizeof buf, &need) == CF_OK);
  CHECK(need > sizeof buf);  // nine presets do not fit in 64 bytes
  CHECK(cf_preset_config("burgers-caseI", nullptr, 0, &need) == CF_OK);
  CHECK(need > 0);
  CHECK(cf_preset_config("nope", buf, sizeof buf, &need) == CF_ERROR_VALIDATION);
}

TEST_CASE("c api generate is bit-deterministic across calls") {
  const auto dir = work_dir() / "det";
  fs::remove_all(dir);
  const std::string a = (dir / "a").string(), b = (dir / "b").string();
  REQUIRE(cf_generate(tiny_generate_config().c_str(), a.c_str()) == CF_OK);
  REQUIRE(cf_generate(tiny_generate_config().c_str(), b.c_str()) == CF_OK);
  auto bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(bytes(dir / "a" / "dataset.bin") == bytes(dir / "b" / "dataset.bin"));
  CHECK(bytes(dir / "a" / "dataset.json") == bytes(dir / "b" / "dataset.json"));
  CHECK(bytes(dir / "a" / "config.json") == bytes(dir / "b" / "config.json"));
}
