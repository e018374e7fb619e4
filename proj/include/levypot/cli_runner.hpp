#pragma once

#include "levypot/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace levypot::cli {

using Json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

/// Schema violation; `where` names the offending field or source line.
struct SchemaError : ConfigError {
  SchemaError(const std::string& where, const std::string& what) : ConfigError(where + ": " + what), field(where) {}
  std::string field;
};

/// Command-line overrides applied to every scenario.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> n;
  std::optional<double> dt;
};

/// Reads a JSON or TOML (by extension) scenario file and returns it as JSON.
Json load_config(const std::filesystem::path& path);

/// Parses scenario text; `toml` selects the TOML reader.
Json parse_config_text(const std::string& text, bool toml, const std::string& origin = "<string>");

std::vector<std::string> builtin_names();
/// Built-in scenario by name; throws SchemaError for unknown names.
Json builtin_scenario(const std::string& name);

/// Checks the scenario against the schema, applies overrides and fills defaults.
Json canonicalize(const Json& scenario, const Overrides& overrides = {});

/// Stable 64-bit hash of the canonical configuration.
std::uint64_t params_hash(const Json& canonical);

struct ScenarioResult {
  std::string id;
  std::string task;  // comma-separated task kinds
  int status = 0;    // 0 pass, 1 tolerance failure, 2 schema or configuration error
  double wall_time = 0.0;
  std::int64_t n_effective = 0;
  std::string message;
  Json report;
};

/// Runs one scenario and writes <out_dir>/<id>/report.json and tables/*.csv.
ScenarioResult run_scenario_config(const Json& scenario, const std::filesystem::path& out_dir,
                                   const Overrides& overrides = {});

/// `source` is a file path or the name of a built-in scenario.
ScenarioResult run_scenario(const std::string& source, const std::filesystem::path& out_dir,
                            const Overrides& overrides = {});

struct SuiteResult {
  int status = 0;
  std::vector<ScenarioResult> scenarios;
};

/// Manifest: {"scenarios": [paths relative to the manifest]} in JSON or TOML.
/// Runs with at most `jobs` scenarios in flight and writes <out_dir>/summary.csv.
SuiteResult run_suite(const std::filesystem::path& manifest, int jobs, const std::filesystem::path& out_dir,
                      const Overrides& overrides = {});

/// Entry point of the command-line tool.
int main_cli(int argc, char** argv);

}  // namespace levypot::cli
