#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapelab {

inline constexpr const char* kToolVersion = "0.1.0";

/// Schema violations, one message per offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct CheckSpec {
  std::string id;
  std::string type;
  nlohmann::json params = nlohmann::json::object();  ///< defaults filled in
};

struct ExperimentConfig {
  std::string id;
  std::uint64_t seed = 0;
  nlohmann::json model;  ///< space description, see make_space
  std::string shape;     ///< default shape for checks that take one
  nlohmann::json tolerances = nlohmann::json::object();
  std::string output_dir;
  std::vector<CheckSpec> checks;
};

/// Itemized schema errors; empty when the document is valid.
std::vector<std::string> validate_config(const nlohmann::json& doc);

/// Validates, then fills every omitted default. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

/// JSON Schema (draft 2020-12) of the config document.
nlohmann::json config_schema();

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

/// SHA-256 of the canonical serialization of the filled config.
std::string config_hash(const ExperimentConfig& config);

struct ArtifactRecord {
  std::string path;  ///< relative to the output directory
  std::string sha256;
};

struct CheckResult {
  std::string id;
  std::string type;
  bool pass = false;
  std::string error;  ///< non-empty when the check threw
  double seconds = 0.0;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<ArtifactRecord> artifacts;
};

struct ResultManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string timestamp;
  std::vector<CheckResult> checks;  ///< sorted by id
  std::vector<ArtifactRecord> artifacts;  ///< every emitted file, sorted by path
  bool pass = true;
};

nlohmann::json to_json(const ResultManifest& manifest);

/// Runs every check, writes artifacts and manifest.json under out_dir (the
/// config's output_dir when empty). A check that throws is recorded as failed
/// with its message; the remaining checks still run. Artifact bytes depend
/// only on the config, never on the worker count.
ResultManifest run(const ExperimentConfig& config, const std::filesystem::path& out_dir = {});

/// Runs one check without touching the filesystem; artifacts are returned
/// as (relative path, bytes).
struct CheckOutput {
  bool pass = false;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> files;
};
CheckOutput run_check(const ExperimentConfig& config, const CheckSpec& check);

/// Seed of one check: its "seed" parameter when set, else derived from the
/// config seed and the check id.
std::uint64_t check_seed(const ExperimentConfig& config, const CheckSpec& check);

/// Built-in shapes, models, net metrics and check types with their defaults.
nlohmann::json list_builtins();

/// 0 all pass, 1 any check failed.
int exit_code(const ResultManifest& manifest);

}  // namespace shapelab
