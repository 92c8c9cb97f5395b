#pragma once

// Breather files, gap reports and run manifests.
//
// A breather is stored as <stem>.json (header: config, grid, solver options,
// diagnostics, certificate summary, payload reference) and <stem>.csv (payload: one
// row per degree of freedom, columns index,cell,edge,local,x,a_1..a_J, %.17g).
// Every artifact <file> written by the CLI has a manifest <file>.manifest.json; JSON
// artifacts also name it in their "manifest" field.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "necklace/gapcheck.hpp"
#include "necklace/solver.hpp"

namespace necklace {

using Json = nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "necklace-breather/1";

Json to_json(const FrequencyConfig& c);
FrequencyConfig frequency_config_from_json(const Json& j);
Json to_json(const NecklaceGrid& g);
NecklaceGrid grid_from_json(const Json& j);
Json to_json(const SolverOptions& o);
SolverOptions solver_options_from_json(const Json& j);
Json to_json(const Diagnostics& d);
Diagnostics diagnostics_from_json(const Json& j);
/// gap report: delta_star, delta, delta0, kappa_min, worst_pair, certified, ...
Json to_json(const GapCertificate& cert, int kappa_min);

/// Scalar diagnostics compared by verify (name, value).
std::vector<std::pair<std::string, double>> scalar_diagnostics(const Diagnostics& d);

struct BreatherFile {
  BreatherState state;
  SolverOptions options;
  Json certificate;  // may be null
  Json header;       // the parsed JSON header as stored
};

/// Writes <json_path> and its payload next to it (same stem, .csv).
void write_breather(const std::filesystem::path& json_path, const BreatherState& state, const SolverOptions& options,
                    const Json& certificate = nullptr, const std::string& manifest_name = "");
/// Throws SchemaError on malformed headers, missing keys, payload hash or layout mismatches.
BreatherFile read_breather(const std::filesystem::path& json_path);

/// git-style object hash: SHA-1 of "blob <size>\0" + content, lowercase hex.
std::string git_blob_sha1(const std::string& content);
std::string file_sha1(const std::filesystem::path& p);
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json config = Json::object();       // effective options after config file and flags
  Json tolerances = Json::object();
  Json certificates = Json::object();
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha1
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha1
  std::string tool_version;
  double wall_clock_seconds = 0.0;
  int exit_code = 0;
  int threads = 1;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

/// Manifest path for an artifact: <artifact>.manifest.json
std::filesystem::path manifest_path(const std::filesystem::path& artifact);
void write_manifest(const std::filesystem::path& path, const RunManifest& m);

}  // namespace necklace
