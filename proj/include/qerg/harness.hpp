/// @file include/qerg/harness.hpp
/// @brief Experiment configuration (JSON, schema-checked), dispatch to the
///        numerical modules, result records and atomic result files.

#pragma once

#include "qerg/bundle.hpp"
#include "qerg/geometry.hpp"
#include "qerg/transport.hpp"

#include <json.hpp>

#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qerg::harness {

using json = nlohmann::json;

/// Process exit codes, one per error family.
enum ExitCode : int {
  kExitOk = 0,
  kExitThresholdFailed = 1,
  kExitArgument = 2,
  kExitConfiguration = 3,
  kExitSchema = 4,
  kExitDomain = 5,
  kExitGeometry = 6,
  kExitCapability = 7,
  kExitDegree = 8,
  kExitTruncation = 9,
  kExitModel = 10,
  kExitIo = 11,
  kExitInternal = 70,
};

int exit_code(const std::exception& e);

struct Metric {
  double value = 0.0;
  std::optional<double> standard_error;
};

/// Declared threshold on a metric: value ∈ [min, max].
struct Check {
  std::string metric;
  std::optional<double> min;
  std::optional<double> max;
  double value = 0.0;
  bool pass = false;
};

struct Table {
  std::string name;
  std::string csv;
};

struct ResultRecord {
  std::string experiment;
  json config;
  std::map<std::string, Metric> metrics;
  std::vector<Check> checks;
  std::vector<Table> tables;
  double wall_clock_seconds = 0.0;

  bool passed() const;
  json to_json() const;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string out;
  json model = json::object();
  json params = json::object();
  /// metric name → {"min": x, "max": y}
  json thresholds = json::object();
  /// Nested configurations of a suite.
  std::vector<ExperimentConfig> runs;

  /// Echo with defaults filled in.
  json to_json() const;
};

const std::vector<std::string>& experiment_names();

/// Validates and fills defaults. Unknown keys and wrong JSON types raise
/// SchemaError; values outside their admissible range raise
/// ConfigurationError.
ExperimentConfig parse_config(const json& j);
/// Reads a file (ConfigurationError when unreadable or not JSON).
json read_json_file(const std::string& path);

// ─── Object builders ─────────────────────────────────────────────────────────

/// Scalar, [re, im] or nested rows of scalars / [re, im] pairs.
CMat matrix_from_json(const json& j, int rank);

/// {"name": "flat-torus" | "round-sphere" | "genus2" | "kaehler-torus", …}.
geometry::ManifoldModel manifold_from_json(const json& j);

/// {"preset": "free" | "matrix" | "scalar" | "custom", "n", "r", "K",
/// "shift", "A": [[{"mode", "coeff"}…] per direction], "V": [{"mode", "coeff"}…]}.
/// Listed coefficients are used as given; hermiticity is validated.
torus::TorusBundleModel bundle_from_json(const json& j);

/// {"label", "terms": [{"coeff", "fourier", "monomial", "xi"}…]}:
/// b = Σ coeff · e^{i m·x} · Π x_j^{e_j} · Π ξ̂_j^{p_j}, with ξ̂ the unit
/// covector in the orthonormal coframe and scalar coefficients multiplying
/// Id_rank. The x-degree is declared when no monomial powers are present.
transport::SymbolField symbol_from_json(const json& j, const geometry::ManifoldModel& model, int rank);

// ─── Running ─────────────────────────────────────────────────────────────────

/// Runs one experiment (not a suite) and evaluates its thresholds.
ResultRecord run_experiment(const ExperimentConfig& config);

/// Runs the named acceptance group of a suite (params.name) as one record
/// with a check per criterion.
ResultRecord run_battery(const ExperimentConfig& config);

/// Runs the experiment, or every run of a suite in order.
std::vector<ResultRecord> run(const ExperimentConfig& config);

/// Writes to `path.tmp.<pid>` and renames over `path`.
void write_atomic(const std::string& path, const std::string& content);

/// One JSON record, or an array for several; CSV tables go next to it as
/// `<path>.<table>.csv`.
void write_results(const std::string& path, const std::vector<ResultRecord>& records);

/// Residuals of the fiber-state identities over random (ξ, a) samples:
/// convex decompositions, unitality and the smallest normalised value on
/// a†a. kind is "spinor" or "forms".
std::map<std::string, double> state_identities(const std::string& kind, int n, int p, int samples,
                                               std::uint64_t seed);

}  // namespace qerg::harness
