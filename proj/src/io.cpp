#include "podtann/io.hpp"

#include "podtann/sha256.hpp"
#include "podtann/version.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace podtann::io {

namespace {

std::string bin_path_for(const std::string& json_path) {
  const auto dot = json_path.rfind(".json");
  if (dot == std::string::npos)
    throw ConfigError("expected a .json manifest path: " + json_path);
  return json_path.substr(0, dot) + ".bin";
}

std::vector<Scalar> to_row_major(const MatX& m) {
  std::vector<Scalar> out;
  out.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out.push_back(m(i, j));
  return out;
}

MatX from_row_major(const std::vector<Scalar>& v, Eigen::Index rows, Eigen::Index cols) {
  MatX m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
  return m;
}

} // namespace

std::string matrix_sha256(const MatX& m) {
  const std::vector<Scalar> rm = to_row_major(m);
  return Sha256::hex(rm.data(), rm.size() * sizeof(Scalar));
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("file_sha256: cannot open " + path);
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex_digest();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot open for writing: " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot open: " + path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

std::string format_double(Scalar v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_container(const std::string& base_path, const Container& c) {
  json manifest;
  manifest["format"] = c.kind;
  manifest["format_version"] = kFormatVersion;
  manifest["toolkit_version"] = kVersion;
  manifest["header"] = c.header;
  manifest["data_file"] = base_path.substr(base_path.rfind('/') + 1) + ".bin";

  std::ofstream bin(base_path + ".bin", std::ios::binary);
  if (!bin)
    throw ConfigError("cannot open for writing: " + base_path + ".bin");

  json blocks = json::object();
  std::int64_t offset = 0;
  std::string combined;
  for (const auto& [name, block] : c.blocks) {
    const std::vector<Scalar> rm = to_row_major(block.data);
    bin.write(reinterpret_cast<const char*>(rm.data()),
              static_cast<std::streamsize>(rm.size() * sizeof(Scalar)));
    json b;
    b["rows"] = block.data.rows();
    b["cols"] = block.data.cols();
    b["offset"] = offset;
    b["byte_len"] = static_cast<std::int64_t>(rm.size() * sizeof(Scalar));
    b["dtype"] = "f64le";
    b["order"] = "row_major";
    b["unit"] = block.unit;
    b["sha256"] = Sha256::hex(rm.data(), rm.size() * sizeof(Scalar));
    combined += b["sha256"].get<std::string>();
    offset += static_cast<std::int64_t>(rm.size() * sizeof(Scalar));
    blocks[name] = b;
  }
  manifest["blocks"] = blocks;
  manifest["fingerprint"] = Sha256::hex(combined);
  write_text_file(base_path + ".json", manifest.dump(2) + "\n");
}

Container read_container(const std::string& json_path) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(json_path));
  } catch (const json::exception& e) {
    throw SchemaError("invalid manifest " + json_path + ": " + e.what());
  }
  if (!manifest.contains("format") || !manifest.contains("blocks"))
    throw SchemaError("manifest missing format/blocks: " + json_path);

  Container c;
  c.kind = manifest["format"].get<std::string>();
  c.header = manifest.value("header", json::object());

  const std::string dir =
      json_path.find('/') == std::string::npos ? "" : json_path.substr(0, json_path.rfind('/') + 1);
  const std::string bin_file =
      manifest.contains("data_file") ? dir + manifest["data_file"].get<std::string>()
                                     : bin_path_for(json_path);
  std::ifstream bin(bin_file, std::ios::binary);
  if (!bin)
    throw SchemaError("missing data file: " + bin_file);
  bin.seekg(0, std::ios::end);
  const std::int64_t file_len = bin.tellg();

  for (const auto& [name, b] : manifest["blocks"].items()) {
    for (const char* key : {"rows", "cols", "offset", "byte_len"})
      if (!b.contains(key))
        throw SchemaError("block '" + name + "' missing field '" + key + "'");
    if (!b.contains("unit"))
      throw UnitError("block '" + name + "' carries no unit tag");
    const auto rows = b["rows"].get<std::int64_t>();
    const auto cols = b["cols"].get<std::int64_t>();
    const auto offset = b["offset"].get<std::int64_t>();
    const auto byte_len = b["byte_len"].get<std::int64_t>();
    if (rows < 0 || cols < 0 || byte_len != rows * cols * static_cast<std::int64_t>(sizeof(Scalar)))
      throw ShapeError("block '" + name + "' has inconsistent shape fields");
    if (offset < 0 || offset + byte_len > file_len)
      throw ShapeError("block '" + name + "' extends past the data file end");
    std::vector<Scalar> rm(static_cast<std::size_t>(rows * cols));
    bin.seekg(offset);
    bin.read(reinterpret_cast<char*>(rm.data()), byte_len);
    if (bin.gcount() != byte_len)
      throw ShapeError("block '" + name + "': short read");
    Block block;
    block.data = from_row_major(rm, rows, cols);
    block.unit = b.value("unit", "");
    c.blocks.emplace(name, std::move(block));
  }
  return c;
}

json scalers_to_json(const Scalers& s) {
  json j;
  j["h_in"] = std::vector<Scalar>(s.h_in.data(), s.h_in.data() + s.h_in.size());
  j["h_conj"] = std::vector<Scalar>(s.h_conj.data(), s.h_conj.data() + s.h_conj.size());
  j["s_pot"] = s.s_pot;
  j["s_diss"] = s.s_diss;
  return j;
}

Scalers scalers_from_json(const json& j) {
  Scalers s;
  const auto hin = j.at("h_in").get<std::vector<Scalar>>();
  const auto hconj = j.at("h_conj").get<std::vector<Scalar>>();
  s.h_in = Eigen::Map<const VecX>(hin.data(), static_cast<Eigen::Index>(hin.size()));
  s.h_conj = Eigen::Map<const VecX>(hconj.data(), static_cast<Eigen::Index>(hconj.size()));
  s.s_pot = j.at("s_pot").get<Scalar>();
  s.s_diss = j.at("s_diss").get<Scalar>();
  return s;
}

json layout_to_json(const pod::LayoutDescriptor& layout) {
  json j;
  j["n_points"] = layout.n_points;
  j["blocks"] = json::array();
  for (const auto& b : layout.blocks)
    j["blocks"].push_back({{"name", b.name}, {"components", b.components}, {"unit", b.unit}});
  j["fingerprint"] = layout.fingerprint();
  return j;
}

pod::LayoutDescriptor layout_from_json(const json& j) {
  pod::LayoutDescriptor layout;
  layout.n_points = j.at("n_points").get<int>();
  for (const auto& b : j.at("blocks"))
    layout.blocks.push_back(
        {b.at("name").get<std::string>(), b.at("components").get<int>(), b.value("unit", "")});
  return layout;
}

// ---- records ----

namespace {

json records_index(const std::vector<int>& groups, const std::vector<int>& lengths) {
  json arr = json::array();
  for (std::size_t i = 0; i < groups.size(); ++i)
    arr.push_back({{"group", groups[i]}, {"n_inc", lengths[i]}});
  return arr;
}

} // namespace

void write_ruc_records(const std::string& base_path,
                       const std::vector<ensemble::PathRecord>& records, const json& meta) {
  if (records.empty())
    throw ConfigError("write_ruc_records: no records");
  int total = 0;
  std::vector<int> groups, lengths;
  for (const auto& rec : records) {
    total += rec.n_inc();
    groups.push_back(rec.group);
    lengths.push_back(rec.n_inc());
  }
  const auto& layout = records.front().layout;

  Container c;
  c.kind = "podtann.records";
  c.header["layout"] = layout_to_json(layout);
  c.header["records"] = records_index(groups, lengths);
  c.header["driving"] = "strain";
  c.header["meta"] = meta;

  MatX e(total, 6), sig(total, 6), psi(total, 1), d(total, 1), xi(total, layout.n_dof());
  int row = 0;
  for (const auto& rec : records)
    for (int t = 0; t < rec.n_inc(); ++t, ++row) {
      e.row(row) = rec.strain[t].transpose();
      sig.row(row) = rec.stress[t].transpose();
      psi(row, 0) = rec.psi(t);
      d(row, 0) = rec.d_inc(t);
      xi.row(row) = rec.xi.col(t).transpose();
    }
  c.blocks["E"] = {e, "-"};
  c.blocks["SIGMA"] = {sig, "kPa"};
  c.blocks["PSI"] = {psi, "kPa"};
  c.blocks["D"] = {d, "kPa"};
  c.blocks["XI"] = {xi, "mixed"};
  write_container(base_path, c);
}

std::vector<ensemble::PathRecord> read_ruc_records(const std::string& json_path, json* meta) {
  const Container c = read_container(json_path);
  if (c.kind != "podtann.records")
    throw SchemaError("not a records file: " + json_path);
  if (c.header.value("driving", "") != "strain")
    throw SchemaError("expected strain-driven records: " + json_path);
  for (const char* name : {"E", "SIGMA", "PSI", "D", "XI"})
    if (!c.blocks.count(name))
      throw SchemaError(std::string("records file missing block '") + name + "'");

  const auto layout = layout_from_json(c.header.at("layout"));
  const MatX& e = c.blocks.at("E").data;
  const MatX& sig = c.blocks.at("SIGMA").data;
  const MatX& psi = c.blocks.at("PSI").data;
  const MatX& d = c.blocks.at("D").data;
  const MatX& xi = c.blocks.at("XI").data;
  const int total = static_cast<int>(e.rows());
  if (sig.rows() != total || psi.rows() != total || d.rows() != total || xi.rows() != total)
    throw ShapeError("records blocks disagree on sample count");
  if (e.cols() != 6 || sig.cols() != 6 || xi.cols() != layout.n_dof())
    throw ShapeError("records blocks disagree on component counts");

  std::vector<ensemble::PathRecord> records;
  int row = 0;
  for (const auto& entry : c.header.at("records")) {
    ensemble::PathRecord rec;
    rec.layout = layout;
    rec.group = entry.at("group").get<int>();
    const int n = entry.at("n_inc").get<int>();
    if (row + n > total)
      throw ShapeError("records index exceeds stored sample count");
    rec.strain.resize(n);
    rec.stress.resize(n);
    rec.psi.resize(n);
    rec.d_inc.resize(n);
    rec.xi.resize(layout.n_dof(), n);
    for (int t = 0; t < n; ++t, ++row) {
      rec.strain[t] = e.row(row).transpose();
      rec.stress[t] = sig.row(row).transpose();
      rec.psi(t) = psi(row, 0);
      rec.d_inc(t) = d(row, 0);
      rec.xi.col(t) = xi.row(row).transpose();
    }
    records.push_back(std::move(rec));
  }
  if (row != total)
    throw ShapeError("records index does not cover all stored samples");
  if (meta)
    *meta = c.header.value("meta", json::object());
  return records;
}

void write_macro_records(const std::string& base_path,
                         const std::vector<macro::MacroRecord>& records, const json& meta) {
  if (records.empty())
    throw ConfigError("write_macro_records: no records");
  int total = 0;
  std::vector<int> groups, lengths;
  for (const auto& rec : records) {
    total += rec.n_inc();
    groups.push_back(rec.group);
    lengths.push_back(rec.n_inc());
  }
  const auto& layout = records.front().layout;

  Container c;
  c.kind = "podtann.records";
  c.header["layout"] = layout_to_json(layout);
  c.header["records"] = records_index(groups, lengths);
  c.header["driving"] = "force";
  c.header["meta"] = meta;

  MatX f(total, 1), u(total, 1), phi(total, 1), psi(total, 1), d(total, 1),
      xi(total, layout.n_dof());
  int row = 0;
  for (const auto& rec : records)
    for (int t = 0; t < rec.n_inc(); ++t, ++row) {
      const auto& s = rec.samples[t];
      f(row, 0) = s.f_h;
      u(row, 0) = s.u_h;
      phi(row, 0) = s.phi;
      psi(row, 0) = s.psi;
      d(row, 0) = s.d_inc;
      xi.row(row) = rec.xi.col(t).transpose();
    }
  c.blocks["F"] = {f, "kN"};
  c.blocks["U"] = {u, "m"};
  c.blocks["PHI"] = {phi, "kN m"};
  c.blocks["PSI"] = {psi, "kN m"};
  c.blocks["D"] = {d, "kN m"};
  c.blocks["XI"] = {xi, "mixed"};
  write_container(base_path, c);
}

std::vector<macro::MacroRecord> read_macro_records(const std::string& json_path, json* meta) {
  const Container c = read_container(json_path);
  if (c.kind != "podtann.records")
    throw SchemaError("not a records file: " + json_path);
  if (c.header.value("driving", "") != "force")
    throw SchemaError("expected force-driven records: " + json_path);
  for (const char* name : {"F", "U", "PHI", "PSI", "D", "XI"})
    if (!c.blocks.count(name))
      throw SchemaError(std::string("records file missing block '") + name + "'");

  const auto layout = layout_from_json(c.header.at("layout"));
  const MatX& f = c.blocks.at("F").data;
  const MatX& u = c.blocks.at("U").data;
  const MatX& phi = c.blocks.at("PHI").data;
  const MatX& psi = c.blocks.at("PSI").data;
  const MatX& d = c.blocks.at("D").data;
  const MatX& xi = c.blocks.at("XI").data;
  const int total = static_cast<int>(f.rows());
  if (u.rows() != total || phi.rows() != total || psi.rows() != total || d.rows() != total ||
      xi.rows() != total)
    throw ShapeError("records blocks disagree on sample count");
  if (xi.cols() != layout.n_dof())
    throw ShapeError("XI block does not match the layout");

  std::vector<macro::MacroRecord> records;
  int row = 0;
  for (const auto& entry : c.header.at("records")) {
    macro::MacroRecord rec;
    rec.layout = layout;
    rec.group = entry.at("group").get<int>();
    const int n = entry.at("n_inc").get<int>();
    if (row + n > total)
      throw ShapeError("records index exceeds stored sample count");
    rec.samples.resize(n);
    rec.xi.resize(layout.n_dof(), n);
    for (int t = 0; t < n; ++t, ++row) {
      rec.samples[t].f_h = f(row, 0);
      rec.samples[t].u_h = u(row, 0);
      rec.samples[t].phi = phi(row, 0);
      rec.samples[t].psi = psi(row, 0);
      rec.samples[t].d_inc = d(row, 0);
      rec.xi.col(t) = xi.row(row).transpose();
    }
    records.push_back(std::move(rec));
  }
  if (row != total)
    throw ShapeError("records index does not cover all stored samples");
  if (meta)
    *meta = c.header.value("meta", json::object());
  return records;
}

IngestResult ingest_snapshots(const std::string& manifest_path) {
  const Container c = read_container(manifest_path);
  if (c.kind != "podtann.records")
    throw SchemaError("ingest_snapshots: not a records file: " + manifest_path);
  const std::string driving = c.header.value("driving", "");
  IngestResult out;
  out.is_macro = driving == "force";
  if (driving != "force" && driving != "strain")
    throw SchemaError("ingest_snapshots: unknown driving mode '" + driving + "'");

  if (out.is_macro) {
    const auto records = read_macro_records(manifest_path);
    out.snapshots = macro::gather_macro_snapshots(records);
    int total = out.snapshots.n_snap();
    out.cv.resize(1, total);
    out.conj.resize(1, total);
    out.pot.resize(total);
    out.diss.resize(total);
    int col = 0, rid = 0;
    for (const auto& rec : records) {
      for (int t = 0; t < rec.n_inc(); ++t, ++col) {
        out.cv(0, col) = rec.samples[t].f_h;
        out.conj(0, col) = rec.samples[t].u_h;
        out.pot(col) = rec.samples[t].phi;
        out.diss(col) = rec.samples[t].d_inc;
        out.group.push_back(rec.group >= 0 ? rec.group : rid);
        out.record.push_back(rid);
      }
      ++rid;
    }
  } else {
    const auto records = read_ruc_records(manifest_path);
    out.snapshots = ensemble::gather_snapshots(records);
    int total = out.snapshots.n_snap();
    out.cv.resize(6, total);
    out.conj.resize(6, total);
    out.pot.resize(total);
    out.diss.resize(total);
    int col = 0, rid = 0;
    for (const auto& rec : records) {
      for (int t = 0; t < rec.n_inc(); ++t, ++col) {
        out.cv.col(col) = rec.strain[t];
        out.conj.col(col) = rec.stress[t];
        out.pot(col) = rec.psi(t);
        out.diss(col) = rec.d_inc(t);
        out.group.push_back(rec.group >= 0 ? rec.group : rid);
        out.record.push_back(rid);
      }
      ++rid;
    }
  }
  return out;
}

// ---- dataset ----

void write_dataset(const std::string& base_path, const Dataset& ds, const json& meta) {
  ds.validate();
  Container c;
  c.kind = "podtann.dataset";
  c.header["n_cv"] = ds.n_cv();
  c.header["r"] = ds.r();
  c.header["scalers"] = scalers_to_json(ds.scalers);
  c.header["basis_fingerprint"] = ds.basis_fingerprint;
  c.header["group"] = ds.group;
  c.header["record"] = ds.record;
  c.header["meta"] = meta;

  const bool is_macro = ds.n_cv() == 1;
  c.blocks[is_macro ? "F" : "E"] = {ds.cv.transpose(), is_macro ? "kN" : "-"};
  c.blocks["Z"] = {ds.z.transpose(), "-"};
  c.blocks["ZDOT"] = {ds.zdot.transpose(), "1/t"};
  c.blocks[is_macro ? "U" : "SIGMA"] = {ds.conj.transpose(), is_macro ? "m" : "kPa"};
  c.blocks[is_macro ? "PHI" : "PSI"] = {ds.pot, is_macro ? "kN m" : "kPa"};
  c.blocks["D"] = {ds.diss, is_macro ? "kN m" : "kPa"};
  write_container(base_path, c);
}

Dataset read_dataset(const std::string& json_path, json* meta) {
  const Container c = read_container(json_path);
  if (c.kind != "podtann.dataset")
    throw SchemaError("not a dataset file: " + json_path);
  const int n_cv = c.header.at("n_cv").get<int>();
  const bool is_macro = n_cv == 1;
  for (const char* name :
       {is_macro ? "F" : "E", "Z", "ZDOT", is_macro ? "U" : "SIGMA", is_macro ? "PHI" : "PSI",
        "D"})
    if (!c.blocks.count(name))
      throw SchemaError(std::string("dataset missing block '") + name + "'");

  Dataset ds;
  ds.cv = c.blocks.at(is_macro ? "F" : "E").data.transpose();
  ds.z = c.blocks.at("Z").data.transpose();
  ds.zdot = c.blocks.at("ZDOT").data.transpose();
  ds.conj = c.blocks.at(is_macro ? "U" : "SIGMA").data.transpose();
  ds.pot = c.blocks.at(is_macro ? "PHI" : "PSI").data.col(0);
  ds.diss = c.blocks.at("D").data.col(0);
  ds.group = c.header.at("group").get<std::vector<int>>();
  ds.record = c.header.at("record").get<std::vector<int>>();
  ds.scalers = scalers_from_json(c.header.at("scalers"));
  ds.basis_fingerprint = c.header.value("basis_fingerprint", "");
  ds.validate();
  if (meta)
    *meta = c.header.value("meta", json::object());
  return ds;
}

// ---- basis ----

void write_basis(const std::string& base_path, const pod::PodBasis& basis, const json& meta) {
  Container c;
  c.kind = "podtann.basis";
  c.header["n_dof"] = basis.n_dof();
  c.header["r"] = basis.r;
  c.header["layout_fingerprint"] = basis.layout_fingerprint;
  c.header["sign_convention"] = "largest_magnitude_entry_positive";
  c.header["basis_fingerprint"] = basis.fingerprint();
  c.header["meta"] = meta;
  c.blocks["U"] = {basis.u_r, "-"};
  c.blocks["SGM"] = {basis.singular_values, "-"};
  if (basis.scaled())
    c.blocks["ROW_SCALE"] = {basis.row_scale, "-"};
  write_container(base_path, c);
}

pod::PodBasis read_basis(const std::string& json_path, json* meta) {
  const Container c = read_container(json_path);
  if (c.kind != "podtann.basis")
    throw SchemaError("not a basis file: " + json_path);
  pod::PodBasis basis;
  basis.u_r = c.blocks.at("U").data;
  basis.singular_values = c.blocks.at("SGM").data.col(0);
  basis.r = static_cast<int>(basis.u_r.cols());
  basis.layout_fingerprint = c.header.value("layout_fingerprint", "");
  if (c.blocks.count("ROW_SCALE"))
    basis.row_scale = c.blocks.at("ROW_SCALE").data.col(0);
  if (meta)
    *meta = c.header.value("meta", json::object());
  return basis;
}

// ---- models ----

void write_model(const std::string& base_path, const tann::EnergyModel& m, const json& meta) {
  m.validate();
  Container c;
  c.kind = "podtann.model";
  c.header["n_cv"] = m.n_cv;
  c.header["r"] = m.r;
  c.header["hidden"] = m.net.hidden();
  c.header["activation"] = "quadratic";
  c.header["conj_sign"] = m.conj_sign;
  c.header["scalers"] = scalers_to_json(m.scalers);
  c.header["basis_fingerprint"] = m.basis_fingerprint;
  c.header["meta"] = meta;
  c.blocks["W1"] = {m.net.w1, "-"};
  c.blocks["B1"] = {m.net.b1, "-"};
  c.blocks["W2"] = {m.net.w2, "-"};
  write_container(base_path, c);
}

tann::EnergyModel read_model(const std::string& json_path,
                             const std::string& expected_basis_fingerprint, json* meta) {
  const Container c = read_container(json_path);
  if (c.kind != "podtann.model")
    throw SchemaError("not a model file: " + json_path);
  tann::EnergyModel m;
  m.net.w1 = c.blocks.at("W1").data;
  m.net.b1 = c.blocks.at("B1").data.col(0);
  m.net.w2 = c.blocks.at("W2").data.col(0);
  m.n_cv = c.header.at("n_cv").get<int>();
  m.r = c.header.at("r").get<int>();
  m.conj_sign = c.header.at("conj_sign").get<Scalar>();
  m.scalers = scalers_from_json(c.header.at("scalers"));
  m.basis_fingerprint = c.header.value("basis_fingerprint", "");
  m.validate();
  if (!expected_basis_fingerprint.empty() && m.basis_fingerprint != expected_basis_fingerprint)
    throw ArtifactMismatch("model was trained against a different basis (fingerprint mismatch)");
  if (meta)
    *meta = c.header.value("meta", json::object());
  return m;
}

void write_evolution(const std::string& base_path, const tann::EvolutionModel& m,
                     const json& meta) {
  Container c;
  c.kind = "podtann.evolution";
  c.header["n_cv"] = m.n_cv;
  c.header["r"] = m.r;
  c.header["hidden"] = static_cast<int>(m.b1.size());
  c.header["meta"] = meta;
  c.blocks["W1"] = {m.w1, "-"};
  c.blocks["B1"] = {m.b1, "-"};
  c.blocks["W2"] = {m.w2, "-"};
  c.blocks["IN_SCALE"] = {m.in_scale, "-"};
  c.blocks["OUT_SCALE"] = {m.out_scale, "-"};
  write_container(base_path, c);
}

tann::EvolutionModel read_evolution(const std::string& json_path, json* meta) {
  const Container c = read_container(json_path);
  if (c.kind != "podtann.evolution")
    throw SchemaError("not an evolution-model file: " + json_path);
  tann::EvolutionModel m;
  m.w1 = c.blocks.at("W1").data;
  m.b1 = c.blocks.at("B1").data.col(0);
  m.w2 = c.blocks.at("W2").data;
  m.in_scale = c.blocks.at("IN_SCALE").data.col(0);
  m.out_scale = c.blocks.at("OUT_SCALE").data.col(0);
  m.n_cv = c.header.at("n_cv").get<int>();
  m.r = c.header.at("r").get<int>();
  if (meta)
    *meta = c.header.value("meta", json::object());
  return m;
}

// ---- fields ----

void write_field(const std::string& base_path, const field::FieldSample& f) {
  Container c;
  c.kind = "podtann.field";
  c.header["grid"] = {{"lx", f.grid.lx}, {"ly", f.grid.ly}, {"lz", f.grid.lz},
                      {"nx", f.grid.nx}, {"ny", f.grid.ny}, {"nz", f.grid.nz}};
  c.header["kappa"] = f.kappa;
  c.header["seed"] = f.seed;
  c.header["stats"] = {{"mean", f.mean()}, {"std", f.std_dev()}};
  c.blocks["VALUES"] = {f.values, "-"};
  write_container(base_path, c);
}

field::FieldSample read_field(const std::string& json_path) {
  const Container c = read_container(json_path);
  if (c.kind != "podtann.field")
    throw SchemaError("not a field file: " + json_path);
  field::FieldSample f;
  const auto& g = c.header.at("grid");
  f.grid.lx = g.at("lx").get<Scalar>();
  f.grid.ly = g.at("ly").get<Scalar>();
  f.grid.lz = g.at("lz").get<Scalar>();
  f.grid.nx = g.at("nx").get<int>();
  f.grid.ny = g.at("ny").get<int>();
  f.grid.nz = g.at("nz").get<int>();
  f.kappa = c.header.at("kappa").get<Scalar>();
  f.seed = c.header.at("seed").get<std::uint64_t>();
  f.values = c.blocks.at("VALUES").data.col(0);
  if (f.values.size() != f.grid.cells())
    throw ShapeError("field VALUES block does not match the grid");
  return f;
}

} // namespace podtann::io
