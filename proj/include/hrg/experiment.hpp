#pragma once

// Experiment orchestration: JSON configs, seeded ensemble runs and the
// CSV/JSON artifacts written for each run.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hrg/disorder.hpp"
#include "hrg/hierarchy.hpp"

namespace hrg {

using json = nlohmann::json;

inline constexpr const char* kVersion = HRG_VERSION;

/// Experiment kinds accepted by run_experiment (sweep wraps one of the others).
const std::vector<std::string>& experiment_kinds();

/// Command-line overrides; each one wins over the matching config entry.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  std::optional<std::size_t> dense_cap;
};

struct ExperimentResult {
  std::string kind;
  std::filesystem::path out_dir;
  std::vector<std::pair<std::string, double>> summary;  // insertion ordered
  std::vector<std::string> warnings;
};

/// Parsed model block: hopping, single-site density, volume scale and mode.
struct ModelSpec {
  HoppingSequence hopping = HoppingSequence::geometric(1.0, 1.0);
  DensityModel density = DensityModel::gaussian(0.0, 1.0);
  int n = 6;
  LaplacianMode mode = TailCorrected{};
};

json load_config(const std::filesystem::path& path);

/// Parses the object at JSON pointer `at` (errors name the offending pointer).
ModelSpec parse_model(const json& j, const std::string& at = "/model");
DensityModel parse_density(const json& j, const std::string& at);
HoppingSequence parse_hopping(const json& j, const std::string& at);

/// Hex SHA-256 of the compact config dump followed by the decimal seed.
std::string config_digest(const json& config, std::uint64_t master_seed);

/// Validates `config`, runs experiment `kind` and writes its artifacts plus
/// manifest.json into the output directory. When `kind` is empty the config's
/// "experiment" entry decides; a conflicting entry is a ConfigError.
ExperimentResult run_experiment(json config, const std::string& kind, const RunOptions& opt = {});

}  // namespace hrg
