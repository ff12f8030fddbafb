#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "conelab/cone_op.hpp"
#include "conelab/fredholm.hpp"
#include "conelab/geometry.hpp"
#include "conelab/grid.hpp"
#include "conelab/link.hpp"

namespace conelab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.3.0";

Json to_json(const LinkSpectrum& s);
LinkSpectrum spectrum_from_json(const Json& j);

Json to_json(const ConeOperatorSpec& s);
ConeOperatorSpec spec_from_json(const Json& j);

Json to_json(const SuspensionModeModel& m);
SuspensionModeModel model_from_json(const Json& j);

Json to_json(const DeformFamily& f);
DeformFamily family_from_json(const Json& j);

Json to_json(const WarpedMetricFamily& f);
WarpedMetricFamily cone_family_from_json(const Json& j);

Json to_json(const IndexReport& r);
Json to_json(const ValidationReport& r);
Json grid_metadata(const RadialGrid& g);
// metadata plus nodes and weights
Json to_json(const RadialGrid& g);
Json to_json(const ModeSection& u);
// columns mode_index, s, r, re, im
std::string section_csv(const ModeSection& u);

Json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
// writes and returns the SHA-256 hex digest of the bytes written
std::string write_text_file(const std::string& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);

// round-trip exact decimal form of a double
std::string format_real(double x);

// CSV with '#'-prefixed metadata lines
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void meta(const std::string& key, const std::string& value) { meta_.emplace_back(key, value); }
  void row(std::vector<std::string> cells);
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<std::string>> rows_;
};

struct RunManifest {
  std::string command;
  Json inputs = Json::object();
  Json grid = Json::object();
  std::string version = kVersion;
  std::map<std::string, std::string> outputs;  // file name -> sha256

  Json to_json() const;
};

// canonical form: object keys sorted recursively
Json canonicalize(const Json& j);

}  // namespace conelab
