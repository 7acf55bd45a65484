#pragma once

// Config parsing, task dispatch and result files for the command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempest/epidemic_sim.hpp"
#include "tempest/threshold.hpp"

namespace tempest {

/// The schema the configs are validated against (embedded at build time).
const nlohmann::json& config_schema();

/// Checks `doc` against the subset of JSON Schema used by config_schema():
/// type, enum, minimum, maximum, exclusiveMinimum, properties, required,
/// additionalProperties (boolean), items, minItems. Returns one message per
/// violation, with a JSON pointer to the offending value.
std::vector<std::string> schema_errors(const nlohmann::json& doc, const nlohmann::json& schema);

struct ExperimentConfig {
  nlohmann::json doc;
  std::string task;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: TEMPEST_THREADS or the OpenMP default
  std::filesystem::path output = ".";
};

/// Validates, then extracts the common fields. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// First line "# " + header JSON, then the column line and the rows.
void write_csv(const std::filesystem::path& path, const nlohmann::json& header, const CsvTable& table);
/// Reads back the header JSON of a file written by write_csv.
nlohmann::json read_csv_header(const std::filesystem::path& path);

std::string format_number(double v);

// Plot data -----------------------------------------------------------------

/// beta, gamma_D (empty when not certified); a marker row at the threshold.
struct Figure4Data {
  std::vector<double> beta;
  std::vector<std::optional<double>> gamma_d;
  std::optional<double> threshold;
};
CsvTable figure4_table(const Figure4Data& data);

/// beta, z_star; marker rows for the certified and the static thresholds.
struct Figure5Data {
  EmpiricalThresholdReport report;
  std::optional<double> certified;
  std::optional<double> static_threshold;
};
CsvTable figure5_table(const Figure5Data& data);

CsvTable empirical_table(const EmpiricalThresholdReport& report);
CsvTable trace_table(const std::vector<SimulationTrace>& traces);

struct Figure3Panel {
  int n;
  double eta_support;
};
Figure3Panel figure3_panel(char panel);
/// xi_H on a points x points grid of delta/beta = rho eta(sgn A) and
/// Delta3 = omega eta(sgn A) / 4, rho and omega in (0, 1].
CsvTable figure3_table(const Figure3Panel& panel, int points);

// Running -------------------------------------------------------------------

struct RunOutcome {
  std::vector<std::filesystem::path> files;
  nlohmann::json summary;
};

/// Runs the configured task and writes its files under config.output. Every
/// file carries the config hash and the seed.
RunOutcome run(const ExperimentConfig& config);

/// 1 config error, 2 numerical failure, 3 resource cap; anything else 2.
int exit_code_for(const std::exception& ex);

/// Thread count for parallel regions: explicit > TEMPEST_THREADS > default.
int resolve_threads(int requested);

}  // namespace tempest
