#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "madseq/grid.hpp"
#include "madseq/kernels.hpp"
#include "madseq/predictive.hpp"
#include "madseq/scenario.hpp"
#include "madseq/weights.hpp"

namespace madseq {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::json;

enum class ColumnRole { Response, Covariate };

struct ColumnSpec {
  std::string name;
  CoordKind kind = CoordKind::Count;
  std::int64_t ymax = 100;  ///< count columns only
  ColumnRole role = ColumnRole::Response;
};

struct DatasetSchema {
  std::vector<ColumnSpec> columns;

  /// Throws ConfigError unless names are unique, maxima valid and a response column exists.
  void validate() const;
  SupportGrid grid() const;
  std::vector<std::size_t> responses() const;
};

DatasetSchema schema_from_json(const Json& j);
Json schema_to_json(const DatasetSchema& s);
DatasetSchema scenario_schema(const ScenarioSpec& spec);

/// Header row required; columns may appear in any order but must match the schema exactly.
/// Points are returned in schema column order. Errors name the 1-based data row and column.
Dataset parse_dataset(std::istream& in, const DatasetSchema& schema);
Dataset parse_dataset_file(const std::string& path, const DatasetSchema& schema);
void write_dataset_csv(std::ostream& out, const DatasetSchema& schema, const Dataset& data);

Json grid_to_json(const SupportGrid& g);
SupportGrid grid_from_json(const Json& j);
Json kernel_to_json(const CoordKernel& k);
CoordKernel kernel_from_json(const Json& j);
Json schedule_to_json(const WeightSchedule& s);
/// `default_n_star` fills an adaptive schedule without an explicit n_star.
WeightSchedule schedule_from_json(const Json& j, double default_n_star = 500.0);
Json method_to_json(const Method& m);
Method method_from_json(const Json& j);

/// Fitted predictive state as stored in fit.json.
struct FitRecord {
  Method method;
  PredictiveState state;
  double mean_log_likelihood = 0.0;
  std::vector<double> log_likelihoods;  ///< one per permutation
  std::size_t permutations = 1;
  std::uint64_t seed = 1;
  std::optional<DatasetSchema> schema;
};

Json fit_to_json(const FitRecord& r);
FitRecord fit_from_json(const Json& j);

Json read_json_file(const std::string& path);
/// Writes text atomically enough for our purposes: to path, truncating.
void write_text_file(const std::string& path, const std::string& text);

/// FNV-1a 64-bit digest of the canonical (sorted-key, compact) JSON dump, as 16 hex digits.
std::string config_digest(const Json& config);

struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  Json config;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
};

Json manifest_to_json(const RunManifest& m);
std::string utc_timestamp();
/// Writes `<output>.manifest.json` next to the output file.
void write_manifest(const std::string& output_path, const RunManifest& m);

}  // namespace madseq
