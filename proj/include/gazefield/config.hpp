#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazefield/data.hpp"
#include "gazefield/model.hpp"
#include "gazefield/train.hpp"

// Run configuration: per-command JSON defaults, a JSON config file on top,
// then command-line flags on top of that.
namespace gazefield::config {

using nlohmann::json;

/// Names the output root used when --out is absent.
inline constexpr const char* kOutRootEnv = "GAZEFIELD_OUT_ROOT";

/// Command-line layer of the configuration.
struct Overrides {
    std::optional<std::filesystem::path> file;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    /// "dotted.key=value"; the value is parsed as JSON, falling back to a plain string.
    std::vector<std::string> sets;
};

/// Defaults for "gen-data", "train", "eval", "field" or "gradcheck".
json defaults_for(const std::string& command);

/// defaults < file < --seed/--out < --set. Keys unknown to the defaults are
/// rejected with ConfigError, as are malformed files and assignments.
json resolve(const std::string& command, const Overrides& overrides);

/// Applies one "dotted.key=value" assignment in place.
void apply_set(json& config, const std::string& assignment);

/// $GAZEFIELD_OUT_ROOT, or "runs" when unset.
std::filesystem::path default_out_root();

json to_json(const data::SyntheticSceneSpec& spec);
json to_json(const model::ModelConfig& config);
json to_json(const train::TrainConfig& config);

/// The spec's seed is taken from `seed`, not from the JSON.
data::SyntheticSceneSpec scene_spec_from(const json& j, std::uint64_t seed);
model::ModelConfig model_config_from(const json& j);
/// The config's seed is taken from `seed`, not from the JSON.
train::TrainConfig train_config_from(const json& j, std::uint64_t seed);

}  // namespace gazefield::config
