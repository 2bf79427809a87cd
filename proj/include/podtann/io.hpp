#pragma once

#include "podtann/dataset.hpp"
#include "podtann/ensemble.hpp"
#include "podtann/macroelement.hpp"
#include "podtann/pod.hpp"
#include "podtann/random_field.hpp"
#include "podtann/tann.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace podtann::io {

using json = nlohmann::json;

// All artifacts share one on-disk container: a JSON manifest next to a
// binary file holding named blocks of 64-bit little-endian floats in
// row-major order. The manifest records offsets and shapes, so block order
// in the file never matters to a reader.
struct Block {
  MatX data;
  std::string unit;
};

struct Container {
  std::string kind; // "podtann.<artifact>"
  json header;
  std::map<std::string, Block> blocks;
};

void write_container(const std::string& base_path, const Container& c);
Container read_container(const std::string& json_path);

std::string matrix_sha256(const MatX& m); // over row-major LE bytes
std::string file_sha256(const std::string& path);

// ---- records: raw simulation output (ICs + macroscopic tables) ----

void write_ruc_records(const std::string& base_path,
                       const std::vector<ensemble::PathRecord>& records, const json& meta);
std::vector<ensemble::PathRecord> read_ruc_records(const std::string& json_path,
                                                   json* meta = nullptr);

void write_macro_records(const std::string& base_path,
                         const std::vector<macro::MacroRecord>& records, const json& meta);
std::vector<macro::MacroRecord> read_macro_records(const std::string& json_path,
                                                   json* meta = nullptr);

// Validated snapshot ingestion for externally produced exports following
// the records format. Works for both strain-driven (E/SIGMA) and
// force-driven (F/U) record files.
struct IngestResult {
  pod::SnapshotMatrix snapshots;
  MatX cv;          // E (6 x n) or F (1 x n)
  MatX conj;        // SIGMA (6 x n) or U (1 x n)
  VecX pot;         // PSI or PHI
  VecX diss;        // D
  std::vector<int> group;
  std::vector<int> record;
  bool is_macro = false;
};
IngestResult ingest_snapshots(const std::string& manifest_path);

// ---- projected training dataset ----

void write_dataset(const std::string& base_path, const Dataset& ds, const json& meta);
Dataset read_dataset(const std::string& json_path, json* meta = nullptr);

// ---- POD basis ----

void write_basis(const std::string& base_path, const pod::PodBasis& basis, const json& meta);
pod::PodBasis read_basis(const std::string& json_path, json* meta = nullptr);

// ---- trained models ----

void write_model(const std::string& base_path, const tann::EnergyModel& m, const json& meta);
// Throws ArtifactMismatch when expected_basis_fingerprint is non-empty and
// does not match the stored one.
tann::EnergyModel read_model(const std::string& json_path,
                             const std::string& expected_basis_fingerprint = "",
                             json* meta = nullptr);

void write_evolution(const std::string& base_path, const tann::EvolutionModel& m,
                     const json& meta);
tann::EvolutionModel read_evolution(const std::string& json_path, json* meta = nullptr);

// ---- random fields ----

void write_field(const std::string& base_path, const field::FieldSample& f);
field::FieldSample read_field(const std::string& json_path);

// ---- helpers ----

json scalers_to_json(const Scalers& s);
Scalers scalers_from_json(const json& j);
json layout_to_json(const pod::LayoutDescriptor& layout);
pod::LayoutDescriptor layout_from_json(const json& j);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// %.17g formatting, round-trip exact
std::string format_double(Scalar v);

} // namespace podtann::io
