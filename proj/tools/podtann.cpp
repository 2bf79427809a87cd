// podtann: batch front door for the reduced-order modeling pipeline.
//
// podtann <gen-ruc|gen-field|pod|train|train-macro|infer|reconstruct|
//          macro-gen|ingest> --config <file> [--out <dir>] [--seed N]
//          [--format csv|binary]
//
// Every command is a pure function of (config, input files): the resolved
// configuration, input fingerprints and output hashes are echoed to
// <out>/manifest.json, and a manifest is itself a valid --config for a
// bit-identical rerun. Exit codes: 0 ok, 2 config, 3 simulation,
// 4 training, 5 artifact mismatch.

#include "podtann/ensemble.hpp"
#include "podtann/io.hpp"
#include "podtann/macroelement.hpp"
#include "podtann/pod.hpp"
#include "podtann/random_field.hpp"
#include "podtann/tann.hpp"
#include "podtann/version.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace podtann;
using io::json;

namespace {

int thread_cap() {
  if (const char* env = std::getenv("PODTANN_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1)
      return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n) on up to thread_cap() workers; results land
// in index order, so the output does not depend on the thread count.
template <typename F>
void parallel_for(int n, F fn) {
  const int workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
        fn(i);
    });
  for (auto& t : pool)
    t.join();
}

struct OutputTracker {
  fs::path dir;
  json outputs = json::object();

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void note(const std::string& name) { outputs[name] = io::file_sha256(path(name)); }
  void note_pair(const std::string& base) {
    note(base + ".json");
    note(base + ".bin");
  }
};

void write_manifest(OutputTracker& out, const std::string& command, const json& config,
                    const json& inputs, const json& summary) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["toolkit_version"] = kVersion;
  m["inputs"] = inputs;
  m["outputs"] = out.outputs;
  m["summary"] = summary;
  io::write_text_file(out.path("manifest.json"), m.dump(2) + "\n");
}

json load_config(const std::string& path, const std::string& command) {
  json j;
  try {
    j = json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  // a manifest of the same command is a valid config
  if (j.contains("command") && j.contains("config")) {
    if (j["command"].get<std::string>() != command)
      throw ConfigError("manifest was produced by a different command");
    return j["config"];
  }
  return j;
}

template <typename T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key))
    throw ConfigError("config misses required key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot open for writing: " + path);
  return out;
}

// ---- material / ensemble configuration ----

json material_to_json(const plasticity::MaterialParams& p) {
  json j;
  j["model"] = p.model == plasticity::YieldModel::VonMises ? "von_mises" : "drucker_prager";
  j["E"] = p.e_mod;
  j["nu"] = p.nu;
  j["c"] = p.c;
  j["phi"] = p.phi;
  j["psi_dil"] = p.psi_dil;
  j["H"] = p.hardening;
  j["Su"] = p.su;
  return j;
}

plasticity::MaterialParams material_from_json(const json& j) {
  plasticity::MaterialParams p;
  const std::string model = require<std::string>(j, "model");
  if (model == "von_mises")
    p.model = plasticity::YieldModel::VonMises;
  else if (model == "drucker_prager")
    p.model = plasticity::YieldModel::DruckerPrager;
  else
    throw ConfigError("unknown material model '" + model + "'");
  p.e_mod = require<Scalar>(j, "E");
  p.nu = require<Scalar>(j, "nu");
  p.c = j.value("c", 0.0);
  p.phi = j.value("phi", 0.0);
  p.psi_dil = j.value("psi_dil", p.phi);
  p.hardening = j.value("H", 0.0);
  p.su = j.value("Su", 0.0);
  p.validate();
  return p;
}

field::GridSpec grid_from_json(const json& j) {
  field::GridSpec g;
  g.lx = require<Scalar>(j, "lx");
  g.ly = require<Scalar>(j, "ly");
  g.lz = require<Scalar>(j, "lz");
  g.nx = require<int>(j, "nx");
  g.ny = require<int>(j, "ny");
  g.nz = require<int>(j, "nz");
  g.validate();
  return g;
}

ensemble::Ensemble ensemble_from_json(const json& cfg, std::uint64_t seed) {
  const std::string mode = require<std::string>(cfg, "mode");
  if (mode == "two_phase") {
    return ensemble::Ensemble::two_phase(material_from_json(require<json>(cfg, "matrix")),
                                         material_from_json(require<json>(cfg, "inclusion")),
                                         require<int>(cfg, "n_points"),
                                         require<Scalar>(cfg, "inclusion_fraction"));
  }
  if (mode == "table") {
    std::vector<plasticity::MaterialParams> points;
    for (const auto& m : require<json>(cfg, "points"))
      points.push_back(material_from_json(m));
    if (cfg.contains("weights")) {
      ensemble::Ensemble e;
      const auto w = require<std::vector<Scalar>>(cfg, "weights");
      e.weights = Eigen::Map<const VecX>(w.data(), static_cast<Eigen::Index>(w.size()));
      e.points = std::move(points);
      e.validate();
      return e;
    }
    return ensemble::Ensemble::uniform(std::move(points));
  }
  if (mode == "random_field") {
    const auto grid = grid_from_json(require<json>(cfg, "grid"));
    const Scalar kappa = require<Scalar>(cfg, "kappa");
    const auto base = material_from_json(require<json>(cfg, "base"));
    std::map<std::string, field::FieldSample> fields;
    std::uint64_t field_seed = cfg.value("field_seed", seed);
    for (const auto& [name, spec] : require<json>(cfg, "fields").items()) {
      auto f = field::generate_correlated_field(grid, kappa, field_seed++);
      fields.emplace(name, field::scale_field(f, require<Scalar>(spec, "mean"),
                                              require<Scalar>(spec, "std")));
    }
    auto assigned = field::assign_properties(base, fields);
    return ensemble::Ensemble::uniform(std::move(assigned.params));
  }
  throw ConfigError("unknown ensemble mode '" + mode + "'");
}

json ensemble_table_json(const ensemble::Ensemble& ens) {
  json points = json::array();
  for (const auto& p : ens.points)
    points.push_back(material_to_json(p));
  json j;
  j["mode"] = "table";
  j["points"] = points;
  j["weights"] =
      std::vector<Scalar>(ens.weights.data(), ens.weights.data() + ens.weights.size());
  return j;
}

tann::TrainConfig train_config_from_json(const json& j) {
  tann::TrainConfig cfg;
  const std::string variant = j.value("variant", "reduced");
  if (variant == "full")
    cfg.variant = tann::LossVariant::Full;
  else if (variant == "reduced")
    cfg.variant = tann::LossVariant::Reduced;
  else
    throw ConfigError("unknown loss variant '" + variant + "'");
  cfg.w_pot = j.value("w_psi", 1.0);
  cfg.w_conj = j.value("w_sigma", 1.0);
  cfg.w_diss = j.value("w_d", 1.0);
  cfg.w_reg = j.value("w_relu", 1.0);
  cfg.learning_rate = j.value("learning_rate", 5e-5);
  cfg.batch = j.value("batch", 1000);
  cfg.epochs = j.value("epochs", 1000);
  cfg.seed = j.value("seed", std::uint64_t(0));
  cfg.early_stop = j.value("early_stop", 0.0);
  cfg.val_fraction = j.value("val_fraction", 0.1);
  cfg.hidden = j.value("hidden", 100);
  cfg.tail_average = j.value("tail_average", 0);
  cfg.validate();
  return cfg;
}

json train_config_to_json(const tann::TrainConfig& cfg) {
  json j;
  j["variant"] = cfg.variant == tann::LossVariant::Full ? "full" : "reduced";
  j["w_psi"] = cfg.w_pot;
  j["w_sigma"] = cfg.w_conj;
  j["w_d"] = cfg.w_diss;
  j["w_relu"] = cfg.w_reg;
  j["learning_rate"] = cfg.learning_rate;
  j["batch"] = cfg.batch;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["early_stop"] = cfg.early_stop;
  j["val_fraction"] = cfg.val_fraction;
  j["hidden"] = cfg.hidden;
  j["tail_average"] = cfg.tail_average;
  return j;
}

void write_curves_csv(const std::string& path, const std::vector<tann::EpochStats>& curves) {
  auto out = open_csv(path);
  out << "epoch,train_total,train_psi,train_sigma,train_d,train_relu,"
         "val_total,val_psi,val_sigma,val_d,val_relu\n";
  for (const auto& e : curves) {
    out << e.epoch;
    for (Scalar v : {e.train.total, e.train.pot, e.train.conj, e.train.diss, e.train.reg,
                     e.val.total, e.val.pot, e.val.conj, e.val.diss, e.val.reg})
      out << "," << io::format_double(v);
    out << "\n";
  }
}

// System Helmholtz energy evaluator for macro (Iwan) IC vectors.
std::function<Scalar(const VecX&)> iwan_energy_evaluator(const VecX& k, const VecX& h) {
  return [k, h](const VecX& xi) {
    const int n = static_cast<int>(k.size());
    if (xi.size() != 3 * n)
      throw LayoutMismatch("iwan energy evaluator: IC length mismatch");
    Scalar psi = 0.0;
    for (int i = 0; i < n; ++i) {
      const Scalar stretch = xi(3 * i);
      const Scalar kappa = xi(3 * i + 2);
      psi += 0.5 * k(i) * stretch * stretch + 0.5 * h(i) * kappa * kappa;
    }
    return psi;
  };
}

// ---- commands ----

int cmd_gen_ruc(const json& cfg, OutputTracker& out) {
  const std::uint64_t seed = require<std::uint64_t>(cfg, "seed");
  const auto ens = ensemble_from_json(require<json>(cfg, "ensemble"), seed);
  const int n_paths = require<int>(cfg, "n_paths");
  const int n_inc = require<int>(cfg, "n_increments");
  const Scalar std_dev = cfg.value("std_dev", 5e-4);
  const Scalar init_vol = cfg.value("init_vol_strain", -5e-4);
  const Scalar j2_cap = cfg.value("j2_cap", 0.015);
  const int n_rot = cfg.value("n_rotations", 0);

  // draw all paths and rotations up front so worker scheduling cannot
  // affect the stream of random numbers
  Rng rng(seed);
  std::vector<ensemble::StrainPath> paths;
  for (int p = 0; p < n_paths; ++p)
    paths.push_back(ensemble::generate_strain_path(rng, n_inc, std_dev, init_vol, j2_cap));
  Rng rot_rng(cfg.value("rotation_seed", seed + 1));
  std::vector<Mat3> rotations;
  for (int p = 0; p < n_paths * n_rot; ++p)
    rotations.push_back(random_rotation(rot_rng));

  std::vector<ensemble::PathRecord> base(n_paths);
  std::string sim_error;
  std::mutex err_mutex;
  parallel_for(n_paths, [&](int p) {
    try {
      base[p] = ensemble::simulate_path(ens, paths[p]);
      base[p].group = p;
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (sim_error.empty())
        sim_error = e.what();
    }
  });
  if (!sim_error.empty())
    throw SimulationError(sim_error);

  std::vector<ensemble::PathRecord> records;
  for (int p = 0; p < n_paths; ++p) {
    records.push_back(base[p]);
    for (int k = 0; k < n_rot; ++k)
      records.push_back(ensemble::augment_rotation(base[p], rotations[p * n_rot + k]));
  }

  json meta;
  meta["config"] = cfg;
  meta["ensemble_table"] = ensemble_table_json(ens);
  io::write_ruc_records(out.path("records"), records, meta);
  out.note_pair("records");

  const int n_samples = static_cast<int>(records.size()) * n_inc;
  const int dim_xi = 13 * ens.n_points();
  std::cout << "gen-ruc: " << n_paths << " paths x " << n_inc << " increments, " << n_rot
            << " rotations each -> " << n_samples << " samples\n";
  std::cout << "IC dimension " << dim_xi << "; CR at r=25 would be "
            << io::format_double(pod::compression_ratio(std::min(25, dim_xi), dim_xi))
            << "%\n";

  json summary;
  summary["n_records"] = records.size();
  summary["n_samples"] = n_samples;
  summary["dim_xi"] = dim_xi;
  write_manifest(out, "gen-ruc", cfg, json::object(), summary);
  return 0;
}

int cmd_macro_gen(const json& cfg, OutputTracker& out) {
  const std::uint64_t seed = require<std::uint64_t>(cfg, "seed");
  const auto sys_cfg = require<json>(cfg, "system");
  macro::IwanSystem sys = macro::IwanSystem::random(
      require<int>(sys_cfg, "n_el"), sys_cfg.value("seed", seed),
      sys_cfg.value("k_mean", 100.0), sys_cfg.value("k_spread", 0.5),
      sys_cfg.value("fy_mean", 1.0), sys_cfg.value("fy_spread", 0.5),
      sys_cfg.value("h_over_k", 0.0));

  const int n_paths = require<int>(cfg, "n_paths");
  const int n_inc = require<int>(cfg, "n_increments");
  const Scalar amplitude = cfg.contains("max_amplitude")
                               ? require<Scalar>(cfg, "max_amplitude")
                               : macro::safe_amplitude(sys, cfg.value("amplitude_fraction", 0.8));

  Rng rng(seed);
  std::vector<VecX> forces;
  for (int p = 0; p < n_paths; ++p)
    forces.push_back(macro::random_force_path(rng, n_inc, amplitude));

  std::vector<macro::MacroRecord> records(n_paths);
  std::string sim_error;
  std::mutex err_mutex;
  parallel_for(n_paths, [&](int p) {
    try {
      macro::IwanSystem fresh = sys;
      records[p] = macro::simulate_iwan(fresh, forces[p]);
      records[p].group = p;
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (sim_error.empty())
        sim_error = e.what();
    }
  });
  if (!sim_error.empty())
    throw SimulationError(sim_error);

  json meta;
  meta["config"] = cfg;
  meta["iwan"] = {
      {"stiffness",
       std::vector<Scalar>(sys.stiffness.data(), sys.stiffness.data() + sys.n_el())},
      {"slip_force",
       std::vector<Scalar>(sys.slip_force.data(), sys.slip_force.data() + sys.n_el())},
      {"hardening",
       std::vector<Scalar>(sys.hardening.data(), sys.hardening.data() + sys.n_el())}};
  io::write_macro_records(out.path("records"), records, meta);
  out.note_pair("records");

  std::cout << "macro-gen: " << n_paths << " force paths x " << n_inc << " increments on "
            << sys.n_el() << " elements (amplitude " << io::format_double(amplitude)
            << " kN)\n";

  json summary;
  summary["n_records"] = records.size();
  summary["n_samples"] = n_paths * n_inc;
  summary["dim_xi"] = 3 * sys.n_el();
  write_manifest(out, "macro-gen", cfg, json::object(), summary);
  return 0;
}

int cmd_gen_field(const json& cfg, OutputTracker& out) {
  const auto grid = grid_from_json(require<json>(cfg, "grid"));
  const Scalar kappa = require<Scalar>(cfg, "kappa");
  const std::uint64_t seed = require<std::uint64_t>(cfg, "seed");

  auto f = field::generate_correlated_field(grid, kappa, seed);
  if (cfg.contains("scale"))
    f = field::scale_field(f, require<Scalar>(cfg.at("scale"), "mean"),
                           require<Scalar>(cfg.at("scale"), "std"));
  io::write_field(out.path("field"), f);
  out.note_pair("field");

  {
    const int n_bins = cfg.value("histogram_bins", 32);
    const Scalar lo = f.values.minCoeff(), hi = f.values.maxCoeff();
    const Scalar width = (hi - lo) / std::max(n_bins, 1);
    std::vector<int> counts(n_bins, 0);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
      const int b = width > 0 ? static_cast<int>((f.values(i) - lo) / width) : 0;
      counts[std::clamp(b, 0, n_bins - 1)] += 1;
    }
    auto csv = open_csv(out.path("histogram.csv"));
    csv << "bin_center,count\n";
    for (int b = 0; b < n_bins; ++b)
      csv << io::format_double(lo + (b + 0.5) * width) << "," << counts[b] << "\n";
    out.note("histogram.csv");
  }

  {
    const Scalar r_max =
        cfg.value("autocorr_rmax", 0.25 * std::min({grid.lx, grid.ly, grid.lz}));
    const VecX emp = field::empirical_autocovariance(f);
    const VecX th = field::theoretical_autocovariance(grid, kappa);
    const auto p_emp = field::radial_profile((emp / emp(0)).eval(), grid, r_max);
    const auto p_th = field::radial_profile(th, grid, r_max);
    auto csv = open_csv(out.path("autocorr.csv"));
    csv << "lag,empirical,theoretical\n";
    for (std::size_t i = 0; i < p_emp.lag.size(); ++i)
      csv << io::format_double(p_emp.lag[i]) << "," << io::format_double(p_emp.value[i]) << ","
          << io::format_double(p_th.value[i]) << "\n";
    out.note("autocorr.csv");
  }

  std::cout << "gen-field: " << grid.nx << "x" << grid.ny << "x" << grid.nz << " grid, kappa "
            << io::format_double(kappa) << ", mean " << io::format_double(f.mean()) << ", std "
            << io::format_double(f.std_dev()) << "\n";

  json summary;
  summary["cells"] = grid.cells();
  summary["mean"] = f.mean();
  summary["std"] = f.std_dev();
  write_manifest(out, "gen-field", cfg, json::object(), summary);
  return 0;
}

// shared: load records (either kind) plus the matching energy evaluator
struct LoadedRecords {
  bool is_macro = false;
  std::vector<ensemble::PathRecord> ruc;
  std::vector<macro::MacroRecord> mac;
  pod::SnapshotMatrix snapshots;
  std::function<Scalar(const VecX&)> energy;
  json meta;
};

LoadedRecords load_records(const std::string& path) {
  LoadedRecords lr;
  const auto container = io::read_container(path);
  lr.is_macro = container.header.value("driving", "") == "force";
  if (lr.is_macro) {
    lr.mac = io::read_macro_records(path, &lr.meta);
    lr.snapshots = macro::gather_macro_snapshots(lr.mac);
    if (lr.meta.contains("iwan")) {
      const auto k = lr.meta["iwan"]["stiffness"].get<std::vector<Scalar>>();
      const auto h = lr.meta["iwan"]["hardening"].get<std::vector<Scalar>>();
      lr.energy = iwan_energy_evaluator(
          Eigen::Map<const VecX>(k.data(), static_cast<Eigen::Index>(k.size())),
          Eigen::Map<const VecX>(h.data(), static_cast<Eigen::Index>(h.size())));
    }
  } else {
    lr.ruc = io::read_ruc_records(path, &lr.meta);
    lr.snapshots = ensemble::gather_snapshots(lr.ruc);
    if (lr.meta.contains("ensemble_table")) {
      const auto ens = ensemble_from_json(lr.meta["ensemble_table"], 0);
      lr.energy = ensemble::micro_energy_evaluator(ens);
    }
  }
  return lr;
}

int cmd_pod(const json& cfg, OutputTracker& out) {
  const std::string records_path = require<std::string>(cfg, "records");
  auto lr = load_records(records_path);
  const auto r_list = require<std::vector<int>>(cfg, "r_list");
  if (r_list.empty())
    throw ConfigError("r_list must not be empty");
  const int r_max = *std::max_element(r_list.begin(), r_list.end());

  const auto basis_full = pod::compute_pod_basis(lr.snapshots, r_max);

  {
    auto csv = open_csv(out.path("spectrum.csv"));
    csv << "index,singular_value,normalized,cumulative_energy\n";
    const VecX& s = basis_full.singular_values;
    const Scalar total = s.squaredNorm();
    Scalar acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      acc += s(i) * s(i);
      csv << i + 1 << "," << io::format_double(s(i)) << ","
          << io::format_double(s(0) > 0 ? s(i) / s(0) : 0.0) << ","
          << io::format_double(total > 0 ? acc / total : 0.0) << "\n";
    }
    out.note("spectrum.csv");
  }

  json basis_files = json::object();
  for (int r : r_list) {
    pod::PodBasis basis = basis_full;
    basis.u_r = basis_full.u_r.leftCols(r);
    basis.r = r;
    const std::string name = "basis_r" + std::to_string(r);
    json meta;
    meta["records"] = records_path;
    io::write_basis(out.path(name), basis, meta);
    out.note_pair(name);
    basis_files[std::to_string(r)] = name + ".json";
  }

  {
    auto csv = open_csv(out.path("cr.csv"));
    csv << "r,dim_xi,cr_percent\n";
    for (int r : r_list)
      csv << r << "," << lr.snapshots.n_dof() << ","
          << io::format_double(pod::compression_ratio(r, lr.snapshots.n_dof())) << "\n";
    out.note("cr.csv");
  }

  if (cfg.value("energy_error", true)) {
    if (!lr.energy)
      throw ConfigError("records carry no material table; cannot evaluate energies");
    const std::string norm_name = cfg.value("normalization", "max");
    const auto norm = norm_name == "mean" ? pod::EnergyNorm::Mean : pod::EnergyNorm::Max;
    const auto rows = pod::energy_reconstruction_error(lr.snapshots, r_list, lr.energy, norm);
    auto csv = open_csv(out.path("err_psi.csv"));
    csv << "r,mean_err,std_err,mean_abs_err\n";
    for (const auto& row : rows)
      csv << row.r << "," << io::format_double(row.mean_err) << ","
          << io::format_double(row.std_err) << "," << io::format_double(row.mean_abs_err)
          << "\n";
    out.note("err_psi.csv");
    for (const auto& row : rows)
      std::cout << "pod: r=" << row.r << " CR="
                << io::format_double(pod::compression_ratio(row.r, lr.snapshots.n_dof()))
                << "% mean|err_psi|=" << io::format_double(row.mean_abs_err) << "\n";
  }

  json inputs;
  inputs[records_path] = io::file_sha256(records_path);
  json summary;
  summary["n_dof"] = lr.snapshots.n_dof();
  summary["n_snap"] = lr.snapshots.n_snap();
  summary["basis_files"] = basis_files;
  summary["basis_fingerprint_rmax"] = basis_full.fingerprint();
  write_manifest(out, "pod", cfg, inputs, summary);
  return 0;
}

int cmd_train_impl(const json& cfg, OutputTracker& out, bool macro_mode) {
  const std::string records_path = require<std::string>(cfg, "records");
  const std::string basis_path = require<std::string>(cfg, "basis");
  auto lr = load_records(records_path);
  if (macro_mode != lr.is_macro)
    throw ConfigError(macro_mode ? "train-macro expects force-driven records"
                                 : "train expects strain-driven records");
  const auto basis = io::read_basis(basis_path);
  if (basis.layout_fingerprint != lr.snapshots.layout.fingerprint())
    throw ArtifactMismatch("basis layout fingerprint does not match the records");

  Dataset ds = macro_mode ? macro::build_macro_dataset(lr.mac, basis)
                          : ensemble::build_dataset(lr.ruc, basis);
  json ds_meta;
  ds_meta["records"] = records_path;
  ds_meta["basis"] = basis_path;
  ds_meta["layout"] = io::layout_to_json(lr.snapshots.layout);
  ds_meta["records_meta"] = lr.meta; // seeds, config echo, material table
  io::write_dataset(out.path("dataset"), ds, ds_meta);
  out.note_pair("dataset");

  const auto tcfg = train_config_from_json(cfg.value("config", json::object()));
  const auto result = macro_mode ? macro::train_macro(ds, tcfg) : tann::train(ds, tcfg);

  json model_meta;
  model_meta["training_config"] = train_config_to_json(tcfg);
  model_meta["early_stopped"] = result.early_stopped;
  model_meta["val_groups"] = result.val_groups;
  if (!result.curves.empty()) {
    model_meta["final_train_loss"] = result.curves.back().train.total;
    model_meta["final_val_loss"] = result.curves.back().val.total;
  }
  io::write_model(out.path("model"), result.model, model_meta);
  out.note_pair("model");
  write_curves_csv(out.path("curves.csv"), result.curves);
  out.note("curves.csv");

  if (cfg.value("evolution", false)) {
    const auto evo = tann::train_evolution(ds, tcfg);
    json evo_meta;
    evo_meta["final_train_mse"] = evo.train_curve.empty() ? 0.0 : evo.train_curve.back();
    io::write_evolution(out.path("evolution"), evo.model, evo_meta);
    out.note_pair("evolution");
  }

  if (!result.curves.empty())
    std::cout << (macro_mode ? "train-macro" : "train") << ": " << result.curves.size()
              << " epochs, final train loss "
              << io::format_double(result.curves.back().train.total) << ", val loss "
              << io::format_double(result.curves.back().val.total)
              << (result.early_stopped ? " (early stop)" : "") << "\n";

  json inputs;
  inputs[records_path] = io::file_sha256(records_path);
  inputs[basis_path] = io::file_sha256(basis_path);
  json summary;
  summary["n_samples"] = ds.n_samples();
  summary["r"] = ds.r();
  summary["early_stopped"] = result.early_stopped;
  write_manifest(out, macro_mode ? "train-macro" : "train", cfg, inputs, summary);
  return 0;
}

MatX read_path_csv(const std::string& path, int n_cv) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open path file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("empty path file: " + path);
  std::vector<std::vector<Scalar>> rows;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::vector<Scalar> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != n_cv)
      throw ShapeError("path file row has wrong column count");
    rows.push_back(std::move(row));
  }
  MatX m(n_cv, static_cast<int>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (int k = 0; k < n_cv; ++k)
      m(k, t) = rows[t][k];
  return m;
}

int cmd_infer(const json& cfg, OutputTracker& out, const std::string& format) {
  const std::string model_path = require<std::string>(cfg, "model");
  const std::string mode = cfg.value("mode", "teacher_forced");
  json inputs;
  inputs[model_path] = io::file_sha256(model_path);

  const auto model = io::read_model(model_path);
  const bool is_macro = model.n_cv == 1;
  const char* cv_names[6] = {"E11", "E22", "E33", "E23", "E13", "E12"};
  const char* sig_names[6] = {"Sigma11", "Sigma22", "Sigma33", "Sigma23", "Sigma13", "Sigma12"};

  if (mode == "teacher_forced") {
    const std::string ds_path = require<std::string>(cfg, "dataset");
    const Dataset ds = io::read_dataset(ds_path);
    inputs[ds_path] = io::file_sha256(ds_path);
    if (!model.basis_fingerprint.empty() && !ds.basis_fingerprint.empty() &&
        model.basis_fingerprint != ds.basis_fingerprint)
      throw ArtifactMismatch("model and dataset were built from different bases");

    std::vector<int> idx;
    if (cfg.contains("group")) {
      const int g = require<int>(cfg, "group");
      for (int i = 0; i < ds.n_samples(); ++i)
        if (ds.group[i] == g)
          idx.push_back(i);
      if (idx.empty())
        throw ConfigError("no samples with the requested group");
    } else {
      idx.resize(ds.n_samples());
      for (int i = 0; i < ds.n_samples(); ++i)
        idx[i] = i;
    }
    const auto pred = tann::infer_teacher_forced(model, ds, idx);

    MatX conj_ref(ds.n_cv(), idx.size());
    VecX pot_ref(idx.size()), diss_ref(idx.size());
    MatX cv_used(ds.n_cv(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      conj_ref.col(j) = ds.conj.col(idx[j]);
      pot_ref(j) = ds.pot(idx[j]);
      diss_ref(j) = ds.diss(idx[j]);
      cv_used.col(j) = ds.cv.col(idx[j]);
    }

    if (format == "csv") {
      auto csv = open_csv(out.path("predictions.csv"));
      csv << "increment";
      for (int k = 0; k < model.n_cv; ++k)
        csv << "," << (is_macro ? "F" : cv_names[k]);
      for (int k = 0; k < model.n_cv; ++k)
        csv << "," << (is_macro ? "U_pred" : std::string(sig_names[k]) + "_pred");
      for (int k = 0; k < model.n_cv; ++k)
        csv << "," << (is_macro ? "U_ref" : std::string(sig_names[k]) + "_ref");
      csv << (is_macro ? ",Phi_pred,Phi_ref,D_pred,D_ref" : ",Psi_pred,Psi_ref,D_pred,D_ref")
          << "\n";
      for (std::size_t j = 0; j < idx.size(); ++j) {
        csv << j;
        for (int k = 0; k < model.n_cv; ++k)
          csv << "," << io::format_double(cv_used(k, j));
        for (int k = 0; k < model.n_cv; ++k)
          csv << "," << io::format_double(pred.conj(k, j));
        for (int k = 0; k < model.n_cv; ++k)
          csv << "," << io::format_double(conj_ref(k, j));
        csv << "," << io::format_double(pred.pot(j)) << "," << io::format_double(pot_ref(j))
            << "," << io::format_double(pred.diss(j)) << "," << io::format_double(diss_ref(j))
            << "\n";
      }
      out.note("predictions.csv");
    } else {
      io::Container c;
      c.kind = "podtann.predictions";
      c.blocks["CV"] = {cv_used.transpose(), is_macro ? "kN" : "-"};
      c.blocks["CONJ_PRED"] = {pred.conj.transpose(), is_macro ? "m" : "kPa"};
      c.blocks["CONJ_REF"] = {conj_ref.transpose(), is_macro ? "m" : "kPa"};
      c.blocks["POT_PRED"] = {pred.pot, is_macro ? "kN m" : "kPa"};
      c.blocks["POT_REF"] = {pot_ref, is_macro ? "kN m" : "kPa"};
      c.blocks["D_PRED"] = {pred.diss, is_macro ? "kN m" : "kPa"};
      c.blocks["D_REF"] = {diss_ref, is_macro ? "kN m" : "kPa"};
      io::write_container(out.path("predictions"), c);
      out.note_pair("predictions");
    }

    Scalar mae = 0.0;
    int neg = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      mae += (pred.conj.col(j) - conj_ref.col(j))
                 .cwiseQuotient(model.scalers.h_conj)
                 .cwiseAbs()
                 .sum();
      if (pred.diss(j) / model.scalers.s_diss < -1e-3)
        ++neg;
    }
    mae /= static_cast<Scalar>(idx.size() * model.n_cv);
    const Scalar neg_frac = static_cast<Scalar>(neg) / static_cast<Scalar>(idx.size());
    std::cout << "infer: " << idx.size() << " increments, scaled MAE "
              << io::format_double(mae) << ", negative-dissipation fraction "
              << io::format_double(neg_frac) << "\n";
    json summary;
    summary["n_increments"] = idx.size();
    summary["scaled_mae"] = mae;
    summary["negative_dissipation_fraction"] = neg_frac;
    write_manifest(out, "infer", cfg, inputs, summary);
    return 0;
  }

  if (mode == "autonomous") {
    const std::string evo_path = require<std::string>(cfg, "evolution");
    const auto evo = io::read_evolution(evo_path);
    inputs[evo_path] = io::file_sha256(evo_path);
    const std::string path_file = require<std::string>(cfg, "path");
    const MatX increments = read_path_csv(path_file, model.n_cv);
    inputs[path_file] = io::file_sha256(path_file);
    const auto pred = tann::infer_autonomous(model, &evo, increments, VecX::Zero(model.r));

    auto csv = open_csv(out.path("predictions.csv"));
    csv << "increment";
    for (int k = 0; k < model.n_cv; ++k)
      csv << "," << (is_macro ? "U_pred" : std::string(sig_names[k]) + "_pred");
    csv << (is_macro ? ",Phi_pred,D_pred" : ",Psi_pred,D_pred") << "\n";
    for (int t = 0; t < pred.pot.size(); ++t) {
      csv << t;
      for (int k = 0; k < model.n_cv; ++k)
        csv << "," << io::format_double(pred.conj(k, t));
      csv << "," << io::format_double(pred.pot(t)) << "," << io::format_double(pred.diss(t))
          << "\n";
    }
    out.note("predictions.csv");
    std::cout << "infer (autonomous): " << pred.pot.size() << " increments\n";
    json summary;
    summary["n_increments"] = pred.pot.size();
    write_manifest(out, "infer", cfg, inputs, summary);
    return 0;
  }
  throw ConfigError("unknown infer mode '" + mode + "'");
}

int cmd_reconstruct(const json& cfg, OutputTracker& out) {
  const std::string records_path = require<std::string>(cfg, "records");
  auto lr = load_records(records_path);
  const auto r_list = require<std::vector<int>>(cfg, "r_list");
  if (r_list.empty())
    throw ConfigError("r_list must not be empty");
  const int r_max = *std::max_element(r_list.begin(), r_list.end());

  pod::PodBasis basis_full;
  json inputs;
  inputs[records_path] = io::file_sha256(records_path);
  if (cfg.contains("basis")) {
    const std::string basis_path = require<std::string>(cfg, "basis");
    basis_full = io::read_basis(basis_path);
    inputs[basis_path] = io::file_sha256(basis_path);
    if (basis_full.layout_fingerprint != lr.snapshots.layout.fingerprint())
      throw ArtifactMismatch("basis layout fingerprint does not match the records");
    if (basis_full.r < r_max)
      throw ConfigError("supplied basis has fewer modes than max(r_list)");
  } else {
    basis_full = pod::compute_pod_basis(lr.snapshots, r_max);
  }

  const auto& layout = lr.snapshots.layout;
  auto csv = open_csv(out.path("reconstruction.csv"));
  csv << "r,block,mae\n";
  std::map<int, Scalar> overall;
  for (int r : r_list) {
    const auto u = basis_full.u_r.leftCols(r);
    std::vector<Scalar> block_err(layout.blocks.size(), 0.0);
    std::vector<std::int64_t> block_n(layout.blocks.size(), 0);
    Scalar total_err = 0.0;
    for (int j = 0; j < lr.snapshots.n_snap(); ++j) {
      const VecX xi = lr.snapshots.data.col(j);
      const VecX err = (xi - u * (u.transpose() * xi)).cwiseAbs();
      total_err += err.mean();
      int row = 0;
      for (int p = 0; p < layout.n_points; ++p)
        for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
          const int comps = layout.blocks[b].components;
          block_err[b] += err.segment(row, comps).sum();
          block_n[b] += comps;
          row += comps;
        }
    }
    for (std::size_t b = 0; b < layout.blocks.size(); ++b)
      csv << r << "," << layout.blocks[b].name << ","
          << io::format_double(block_err[b] / static_cast<Scalar>(block_n[b])) << "\n";
    overall[r] = total_err / static_cast<Scalar>(lr.snapshots.n_snap());
    std::cout << "reconstruct: r=" << r << " overall MAE " << io::format_double(overall[r])
              << "\n";
  }
  out.note("reconstruction.csv");

  json summary;
  for (const auto& [r, mae] : overall)
    summary["overall_mae"][std::to_string(r)] = mae;
  write_manifest(out, "reconstruct", cfg, inputs, summary);
  return 0;
}

int cmd_ingest(const json& cfg, OutputTracker& out) {
  const std::string records_path = require<std::string>(cfg, "records");
  const auto ingest = io::ingest_snapshots(records_path);
  json inputs;
  inputs[records_path] = io::file_sha256(records_path);

  // re-emit a canonical copy of the validated records
  if (ingest.is_macro) {
    json meta;
    const auto records = io::read_macro_records(records_path, &meta);
    io::write_macro_records(out.path("records_canonical"), records, meta);
  } else {
    json meta;
    const auto records = io::read_ruc_records(records_path, &meta);
    io::write_ruc_records(out.path("records_canonical"), records, meta);
  }
  out.note_pair("records_canonical");

  std::cout << "ingest: " << (ingest.is_macro ? "force" : "strain") << "-driven records, "
            << ingest.snapshots.n_snap() << " snapshots, " << ingest.snapshots.n_dof()
            << " IC dofs\n";
  json summary;
  summary["driving"] = ingest.is_macro ? "force" : "strain";
  summary["n_snap"] = ingest.snapshots.n_snap();
  summary["n_dof"] = ingest.snapshots.n_dof();
  write_manifest(out, "ingest", cfg, inputs, summary);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"POD-based reduced-order modeling toolkit with thermodynamics-constrained "
               "energy networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", format = "csv";
  long long seed_override = -1;

  const std::vector<std::string> names = {"gen-ruc", "gen-field",   "pod",
                                          "train",   "train-macro", "infer",
                                          "reconstruct", "macro-gen", "ingest"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (default: current)");
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--format", format, "report format: csv or binary")
        ->check(CLI::IsMember({"csv", "binary"}));
  }

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    json cfg = load_config(config_path, command);
    if (seed_override >= 0)
      cfg["seed"] = static_cast<std::uint64_t>(seed_override);

    OutputTracker out;
    out.dir = out_dir;
    fs::create_directories(out.dir);

    if (command == "gen-ruc")
      return cmd_gen_ruc(cfg, out);
    if (command == "gen-field")
      return cmd_gen_field(cfg, out);
    if (command == "pod")
      return cmd_pod(cfg, out);
    if (command == "train")
      return cmd_train_impl(cfg, out, false);
    if (command == "train-macro")
      return cmd_train_impl(cfg, out, true);
    if (command == "infer")
      return cmd_infer(cfg, out, format);
    if (command == "reconstruct")
      return cmd_reconstruct(cfg, out);
    if (command == "macro-gen")
      return cmd_macro_gen(cfg, out);
    if (command == "ingest")
      return cmd_ingest(cfg, out);
    throw ConfigError("unknown command " + command);
  } catch (const ArtifactMismatch& e) {
    std::cerr << "artifact mismatch: " << e.what() << "\n";
    return 5;
  } catch (const TrainingError& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return 4;
  } catch (const SimulationError& e) {
    std::cerr << "simulation failure: " << e.what() << "\n";
    return 3;
  } catch (const LayoutMismatch& e) {
    std::cerr << "artifact mismatch: " << e.what() << "\n";
    return 5;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
