#include "podtann/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

// End-to-end checks against the installed CLI binary.

namespace fs = std::filesystem;
using podtann::io::json;
using podtann::io::read_text_file;
using podtann::io::write_text_file;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("podtann_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PODTANN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

json minimal_ruc_config() {
  json cfg;
  cfg["seed"] = 3;
  cfg["n_paths"] = 1;
  cfg["n_increments"] = 10;
  cfg["ensemble"] = {
      {"mode", "two_phase"},
      {"n_points", 2},
      {"inclusion_fraction", 0.5},
      {"matrix",
       {{"model", "drucker_prager"}, {"E", 5500.0}, {"nu", 0.3}, {"c", 10.0}, {"phi", 32.0},
        {"H", 4000.0}}},
      {"inclusion",
       {{"model", "drucker_prager"}, {"E", 6500.0}, {"nu", 0.3}, {"c", 12.0}, {"phi", 30.0},
        {"H", 3500.0}}}};
  return cfg;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-ruc: minimal config emits the expected sample count") {
  TempDir tmp;
  write_text_file(tmp.file("cfg.json"), minimal_ruc_config().dump());
  REQUIRE(run_cli("gen-ruc --config " + tmp.file("cfg.json") + " --out " + tmp.path.string()) ==
          0);
  const auto manifest = json::parse(read_text_file(tmp.file("manifest.json")));
  CHECK(manifest["summary"]["n_samples"] == 10);
  CHECK(manifest["summary"]["dim_xi"] == 26);
  CHECK(fs::exists(tmp.file("records.json")));
  CHECK(fs::exists(tmp.file("records.bin")));
}

TEST_CASE("gen-ruc: identical config and seed give identical data hashes") {
  TempDir a, b;
  write_text_file(a.file("cfg.json"), minimal_ruc_config().dump());
  write_text_file(b.file("cfg.json"), minimal_ruc_config().dump());
  REQUIRE(run_cli("gen-ruc --config " + a.file("cfg.json") + " --out " + a.path.string()) == 0);
  REQUIRE(run_cli("gen-ruc --config " + b.file("cfg.json") + " --out " + b.path.string()) == 0);
  const auto ma = json::parse(read_text_file(a.file("manifest.json")));
  const auto mb = json::parse(read_text_file(b.file("manifest.json")));
  CHECK(ma["outputs"]["records.bin"] == mb["outputs"]["records.bin"]);
  CHECK(ma["outputs"]["records.json"] == mb["outputs"]["records.json"]);
}

TEST_CASE("rerunning from the emitted manifest is bit-identical") {
  TempDir a, b;
  write_text_file(a.file("cfg.json"), minimal_ruc_config().dump());
  REQUIRE(run_cli("gen-ruc --config " + a.file("cfg.json") + " --out " + a.path.string()) == 0);
  REQUIRE(run_cli("gen-ruc --config " + a.file("manifest.json") + " --out " + b.path.string()) ==
          0);
  const auto ma = json::parse(read_text_file(a.file("manifest.json")));
  const auto mb = json::parse(read_text_file(b.file("manifest.json")));
  CHECK(ma["outputs"] == mb["outputs"]);
}

TEST_CASE("seed override changes the data") {
  TempDir a, b;
  write_text_file(a.file("cfg.json"), minimal_ruc_config().dump());
  write_text_file(b.file("cfg.json"), minimal_ruc_config().dump());
  REQUIRE(run_cli("gen-ruc --config " + a.file("cfg.json") + " --out " + a.path.string()) == 0);
  REQUIRE(run_cli("gen-ruc --config " + b.file("cfg.json") + " --seed 99 --out " +
                  b.path.string()) == 0);
  const auto ma = json::parse(read_text_file(a.file("manifest.json")));
  const auto mb = json::parse(read_text_file(b.file("manifest.json")));
  CHECK(ma["outputs"]["records.bin"] != mb["outputs"]["records.bin"]);
}

TEST_CASE("invalid config exits with code 2") {
  TempDir tmp;
  write_text_file(tmp.file("cfg.json"), "{\"seed\": 1}");
  CHECK(run_cli("gen-ruc --config " + tmp.file("cfg.json") + " --out " + tmp.path.string()) ==
        2);
  write_text_file(tmp.file("broken.json"), "{not json");
  CHECK(run_cli("gen-ruc --config " + tmp.file("broken.json") + " --out " + tmp.path.string()) ==
        2);
}

TEST_CASE("pod + train + infer pipeline with fingerprint chain") {
  TempDir tmp;
  auto gen = minimal_ruc_config();
  gen["n_paths"] = 3;
  gen["n_increments"] = 40;
  gen["ensemble"]["n_points"] = 4;
  gen["std_dev"] = 8e-4;
  write_text_file(tmp.file("gen.json"), gen.dump());
  const std::string d = tmp.path.string();
  REQUIRE(run_cli("gen-ruc --config " + tmp.file("gen.json") + " --out " + d) == 0);

  json pod_cfg;
  pod_cfg["records"] = tmp.file("records.json");
  pod_cfg["r_list"] = {2, 5, 10};
  write_text_file(tmp.file("pod.json"), pod_cfg.dump());
  REQUIRE(run_cli("pod --config " + tmp.file("pod.json") + " --out " + d) == 0);
  CHECK(fs::exists(tmp.file("basis_r5.json")));
  CHECK(fs::exists(tmp.file("spectrum.csv")));

  // err_psi means are non-increasing in r
  {
    std::ifstream err(tmp.file("err_psi.csv"));
    std::string line;
    std::getline(err, line);
    CHECK(line == "r,mean_err,std_err,mean_abs_err");
    double prev = 1e300;
    while (std::getline(err, line)) {
      const auto last_comma = line.rfind(',');
      const double mean_abs = std::stod(line.substr(last_comma + 1));
      CHECK(mean_abs <= prev + 1e-15);
      prev = mean_abs;
    }
  }

  // cr column matches the closed-form ratio
  {
    std::ifstream cr(tmp.file("cr.csv"));
    std::string line;
    std::getline(cr, line);
    CHECK(line == "r,dim_xi,cr_percent");
    std::getline(cr, line); // r=2, dim 52
    const double val = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(val == doctest::Approx((1.0 - 2.0 / 52.0) * 100.0).epsilon(1e-12));
  }

  json train_cfg;
  train_cfg["records"] = tmp.file("records.json");
  train_cfg["basis"] = tmp.file("basis_r5.json");
  train_cfg["config"] = {{"epochs", 30},      {"batch", 40},   {"hidden", 8},
                         {"learning_rate", 1e-3}, {"seed", 1}, {"val_fraction", 0.34}};
  write_text_file(tmp.file("train.json"), train_cfg.dump());
  REQUIRE(run_cli("train --config " + tmp.file("train.json") + " --out " + d) == 0);
  CHECK(fs::exists(tmp.file("model.json")));
  CHECK(fs::exists(tmp.file("dataset.json")));
  {
    std::ifstream curves(tmp.file("curves.csv"));
    std::string header;
    std::getline(curves, header);
    CHECK(header == "epoch,train_total,train_psi,train_sigma,train_d,train_relu,"
                    "val_total,val_psi,val_sigma,val_d,val_relu");
  }

  json infer_cfg;
  infer_cfg["model"] = tmp.file("model.json");
  infer_cfg["dataset"] = tmp.file("dataset.json");
  write_text_file(tmp.file("infer.json"), infer_cfg.dump());
  REQUIRE(run_cli("infer --config " + tmp.file("infer.json") + " --out " + d) == 0);
  {
    std::ifstream pred(tmp.file("predictions.csv"));
    std::string header;
    std::getline(pred, header);
    CHECK(header ==
          "increment,E11,E22,E33,E23,E13,E12,"
          "Sigma11_pred,Sigma22_pred,Sigma33_pred,Sigma23_pred,Sigma13_pred,Sigma12_pred,"
          "Sigma11_ref,Sigma22_ref,Sigma33_ref,Sigma23_ref,Sigma13_ref,Sigma12_ref,"
          "Psi_pred,Psi_ref,D_pred,D_ref");
  }

  // a model trained against basis_r5 must refuse a dataset built on r2
  json train2 = train_cfg;
  train2["basis"] = tmp.file("basis_r2.json");
  fs::create_directories(tmp.path / "alt");
  write_text_file(tmp.file("train2.json"), train2.dump());
  REQUIRE(run_cli("train --config " + tmp.file("train2.json") + " --out " +
                  (tmp.path / "alt").string()) == 0);
  json mismatch;
  mismatch["model"] = tmp.file("model.json"); // r5 model
  mismatch["dataset"] = (tmp.path / "alt" / "dataset.json").string();
  write_text_file(tmp.file("mismatch.json"), mismatch.dump());
  CHECK(run_cli("infer --config " + tmp.file("mismatch.json") + " --out " + d) == 5);
}

TEST_CASE("reconstruct: full-rank r gives zero MAE and monotone errors") {
  TempDir tmp;
  auto gen = minimal_ruc_config();
  gen["n_paths"] = 2;
  gen["n_increments"] = 30;
  gen["ensemble"]["n_points"] = 3;
  write_text_file(tmp.file("gen.json"), gen.dump());
  const std::string d = tmp.path.string();
  REQUIRE(run_cli("gen-ruc --config " + tmp.file("gen.json") + " --out " + d) == 0);

  json rc;
  rc["records"] = tmp.file("records.json");
  rc["r_list"] = {2, 5, 39};
  write_text_file(tmp.file("rc.json"), rc.dump());
  REQUIRE(run_cli("reconstruct --config " + tmp.file("rc.json") + " --out " + d) == 0);
  const auto manifest = json::parse(read_text_file(tmp.file("manifest.json")));
  const double mae2 = manifest["summary"]["overall_mae"]["2"].get<double>();
  const double mae5 = manifest["summary"]["overall_mae"]["5"].get<double>();
  const double mae_full = manifest["summary"]["overall_mae"]["39"].get<double>();
  CHECK(mae5 <= mae2);
  CHECK(mae_full <= 1e-12);
}

TEST_CASE("gen-field: smoke grid with exact scaling and reproducible bytes") {
  TempDir a, b;
  json cfg;
  cfg["grid"] = {{"lx", 1.0}, {"ly", 1.0}, {"lz", 1.0}, {"nx", 4}, {"ny", 4}, {"nz", 4}};
  cfg["kappa"] = 5.0;
  cfg["seed"] = 11;
  cfg["scale"] = {{"mean", 18000.0}, {"std", 5000.0}};
  write_text_file(a.file("cfg.json"), cfg.dump());
  write_text_file(b.file("cfg.json"), cfg.dump());
  REQUIRE(run_cli("gen-field --config " + a.file("cfg.json") + " --out " + a.path.string()) ==
          0);
  REQUIRE(run_cli("gen-field --config " + b.file("cfg.json") + " --out " + b.path.string()) ==
          0);

  const auto f = podtann::io::read_field(a.file("field.json"));
  CHECK(f.values.size() == 64);
  CHECK(f.mean() == doctest::Approx(18000.0).epsilon(1e-12));
  CHECK(f.std_dev() == doctest::Approx(5000.0).epsilon(1e-12));
  CHECK(fs::exists(a.file("autocorr.csv")));
  CHECK(fs::exists(a.file("histogram.csv")));

  const auto ma = json::parse(read_text_file(a.file("manifest.json")));
  const auto mb = json::parse(read_text_file(b.file("manifest.json")));
  CHECK(ma["outputs"]["field.bin"] == mb["outputs"]["field.bin"]);
}

TEST_CASE("macro-gen and ingest round trip") {
  TempDir tmp;
  json cfg;
  cfg["seed"] = 13;
  cfg["system"] = {{"n_el", 12}, {"k_mean", 100.0}, {"fy_mean", 1.0}};
  cfg["n_paths"] = 2;
  cfg["n_increments"] = 25;
  cfg["amplitude_fraction"] = 0.6;
  write_text_file(tmp.file("cfg.json"), cfg.dump());
  const std::string d = tmp.path.string();
  REQUIRE(run_cli("macro-gen --config " + tmp.file("cfg.json") + " --out " + d) == 0);

  json ing;
  ing["records"] = tmp.file("records.json");
  write_text_file(tmp.file("ing.json"), ing.dump());
  fs::create_directories(tmp.path / "ing");
  REQUIRE(run_cli("ingest --config " + tmp.file("ing.json") + " --out " +
                  (tmp.path / "ing").string()) == 0);
  // canonical re-emission carries identical payload bytes
  CHECK(podtann::io::file_sha256(tmp.file("records.bin")) ==
        podtann::io::file_sha256((tmp.path / "ing" / "records_canonical.bin").string()));
}

} // TEST_SUITE
