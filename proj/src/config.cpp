#include "gazefield/config.hpp"

#include <cstdlib>
#include <fstream>

#include "gazefield/direction_field.hpp"
#include "gazefield/error.hpp"

namespace gazefield::config {

namespace fs = std::filesystem;

namespace {

template <typename T>
T read(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

/// Every key of `given` must exist in `reference`; objects are checked
/// recursively unless the reference value is null (free-form).
void check_keys(const json& reference, const json& given, const std::string& where) {
    if (!given.is_object() || !reference.is_object()) return;
    for (const auto& [key, value] : given.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!reference.contains(key)) throw ConfigError("unknown config key '" + path + "'");
        const auto& ref = reference.at(key);
        if (ref.is_object()) {
            if (!value.is_object()) throw ConfigError("config key '" + path + "' must be an object");
            check_keys(ref, value, path);
        }
    }
}

json model_defaults() { return to_json(model::ModelConfig{}); }

}  // namespace

json to_json(const data::SyntheticSceneSpec& s) {
    return {{"resolution", s.resolution},
            {"noise_amplitude", s.noise_amplitude},
            {"object_count", s.object_count},
            {"blob_radius_min", s.blob_radius_min},
            {"blob_radius_max", s.blob_radius_max},
            {"head_box_size", s.head_box_size},
            {"head_radius", s.head_radius},
            {"wedge_radius", s.wedge_radius},
            {"wedge_half_angle_deg", s.wedge_half_angle_deg},
            {"angular_tolerance_deg", s.angular_tolerance_deg},
            {"distractor_margin_deg", s.distractor_margin_deg},
            {"min_gaze_distance", s.min_gaze_distance},
            {"max_retries", s.max_retries}};
}

json to_json(const model::ModelConfig& m) {
    return {{"scene_resolution", m.scene_resolution},
            {"heatmap_resolution", m.heatmap_resolution},
            {"gammas", m.gammas},
            {"direction",
             {{"crop_resolution", m.direction.crop_resolution},
              {"conv_channels", m.direction.conv_channels},
              {"embedding", m.direction.embedding},
              {"position_width", m.direction.position_width},
              {"fusion_width", m.direction.fusion_width}}},
            {"heatmap",
             {{"encoder_channels", m.heatmap.encoder_channels},
              {"decoder_channels", m.heatmap.decoder_channels},
              {"output_bias", m.heatmap.output_bias}}}};
}

json to_json(const train::TrainConfig& t) {
    return {{"batch_size", t.batch_size},
            {"lr", t.lr},
            {"weight_decay", t.weight_decay},
            {"lambda", t.lambda},
            {"sigma", t.sigma},
            {"stage1_epochs", t.stage1_epochs},
            {"stage2_epochs", t.stage2_epochs},
            {"finetune_epochs", t.finetune_epochs},
            {"mid_layer_supervision", t.mid_layer_supervision},
            {"model", to_json(t.model)}};
}

data::SyntheticSceneSpec scene_spec_from(const json& j, std::uint64_t seed) {
    check_keys(to_json(data::SyntheticSceneSpec{}), j, "scene");
    data::SyntheticSceneSpec s;
    const json full = [&] {
        json d = to_json(s);
        d.merge_patch(j);
        return d;
    }();
    s.resolution = read<std::size_t>(full, "resolution");
    s.noise_amplitude = read<double>(full, "noise_amplitude");
    s.object_count = read<std::size_t>(full, "object_count");
    s.blob_radius_min = read<double>(full, "blob_radius_min");
    s.blob_radius_max = read<double>(full, "blob_radius_max");
    s.head_box_size = read<double>(full, "head_box_size");
    s.head_radius = read<double>(full, "head_radius");
    s.wedge_radius = read<double>(full, "wedge_radius");
    s.wedge_half_angle_deg = read<double>(full, "wedge_half_angle_deg");
    s.angular_tolerance_deg = read<double>(full, "angular_tolerance_deg");
    s.distractor_margin_deg = read<double>(full, "distractor_margin_deg");
    s.min_gaze_distance = read<double>(full, "min_gaze_distance");
    s.max_retries = read<std::size_t>(full, "max_retries");
    s.seed = seed;
    data::validate(s);
    return s;
}

model::ModelConfig model_config_from(const json& j) {
    check_keys(model_defaults(), j, "model");
    json full = model_defaults();
    full.merge_patch(j);
    model::ModelConfig m;
    m.scene_resolution = read<std::size_t>(full, "scene_resolution");
    m.heatmap_resolution = read<std::size_t>(full, "heatmap_resolution");
    m.gammas = read<std::vector<double>>(full, "gammas");
    const auto& d = full.at("direction");
    m.direction.crop_resolution = read<std::size_t>(d, "crop_resolution");
    m.direction.conv_channels = read<std::vector<std::size_t>>(d, "conv_channels");
    m.direction.embedding = read<std::size_t>(d, "embedding");
    m.direction.position_width = read<std::size_t>(d, "position_width");
    m.direction.fusion_width = read<std::size_t>(d, "fusion_width");
    const auto& h = full.at("heatmap");
    m.heatmap.encoder_channels = read<std::vector<std::size_t>>(h, "encoder_channels");
    m.heatmap.decoder_channels = read<std::vector<std::size_t>>(h, "decoder_channels");
    m.heatmap.output_bias = read<double>(h, "output_bias");
    m.validate();
    return m;
}

train::TrainConfig train_config_from(const json& j, std::uint64_t seed) {
    const json reference = to_json(train::TrainConfig{});
    check_keys(reference, j, "train");
    json full = reference;
    full.merge_patch(j);
    train::TrainConfig t;
    t.batch_size = read<std::size_t>(full, "batch_size");
    t.lr = read<double>(full, "lr");
    t.weight_decay = read<double>(full, "weight_decay");
    t.lambda = read<double>(full, "lambda");
    t.sigma = read<double>(full, "sigma");
    t.stage1_epochs = read<std::size_t>(full, "stage1_epochs");
    t.stage2_epochs = read<std::size_t>(full, "stage2_epochs");
    t.finetune_epochs = read<std::size_t>(full, "finetune_epochs");
    t.mid_layer_supervision = read<bool>(full, "mid_layer_supervision");
    t.model = model_config_from(full.at("model"));
    t.seed = seed;
    t.validate();
    return t;
}

json defaults_for(const std::string& command) {
    const std::string out = (default_out_root() / command).string();
    if (command == "gen-data") {
        return {{"command", command},
                {"seed", 0},
                {"out", out},
                {"train_count", 2000},
                {"test_count", 500},
                {"scene", to_json(data::SyntheticSceneSpec{})}};
    }
    if (command == "train") {
        return {{"command", command},
                {"seed", 0},
                {"out", out},
                {"data", (default_out_root() / "gen-data").string()},
                {"train", to_json(train::TrainConfig{})}};
    }
    if (command == "eval") {
        return {{"command", command},
                {"seed", 0},
                {"out", out},
                {"data", (default_out_root() / "gen-data").string()},
                {"checkpoint", (default_out_root() / "train" / "model.json").string()},
                {"split", "test"},
                {"oracle", false},
                {"oracle_resolution", 16}};
    }
    if (command == "field") {
        return {{"command", command},
                {"seed", 0},
                {"out", out},
                {"head", {0.5, 0.5}},
                {"dir", {1.0, 0.0}},
                {"size", 64},
                {"gammas", field::kDefaultGammas}};
    }
    if (command == "gradcheck") {
        return {{"command", command},
                {"seed", 0},
                {"out", out},
                {"step", 1e-5},
                {"max_coords", 32},
                {"fault", nullptr}};
    }
    throw ConfigError("unknown command '" + command + "'");
}

void apply_set(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    std::string pointer;
    std::size_t start = 0;
    while (start <= key.size()) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("--set: empty key segment in '" + key + "'");
        pointer += "/" + part;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    try {
        config[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
        throw ConfigError("--set " + key + ": " + e.what());
    }
}

json resolve(const std::string& command, const Overrides& overrides) {
    const json defaults = defaults_for(command);
    json config = defaults;
    if (overrides.file) {
        std::ifstream in(*overrides.file);
        if (!in) throw ConfigError("config file not found: " + overrides.file->string());
        json file;
        try {
            file = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config file " + overrides.file->string() + " is not valid JSON: " + e.what());
        }
        if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
        check_keys(defaults, file, "");
        config.merge_patch(file);
    }
    if (overrides.seed) config["seed"] = *overrides.seed;
    if (overrides.out) config["out"] = overrides.out->string();
    for (const auto& s : overrides.sets) apply_set(config, s);
    check_keys(defaults, config, "");
    config["command"] = command;
    if (!config["seed"].is_number_unsigned() && !config["seed"].is_number_integer()) {
        throw ConfigError("seed must be a non-negative integer");
    }
    if (config["seed"].is_number_integer() && config["seed"].get<std::int64_t>() < 0) {
        throw ConfigError("seed must be a non-negative integer");
    }
    return config;
}

fs::path default_out_root() {
    const char* env = std::getenv(kOutRootEnv);
    return env && *env ? fs::path(env) : fs::path("runs");
}

}  // namespace gazefield::config
