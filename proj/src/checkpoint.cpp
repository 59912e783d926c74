#include "gazefield/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "gazefield/error.hpp"

namespace gazefield {

namespace fs = std::filesystem;

nlohmann::json checkpoint_to_json(const ParameterList& params, const nlohmann::json& meta) {
    nlohmann::json doc;
    doc["format"] = "gazefield.checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["meta"] = meta;
    auto& list = doc["params"] = nlohmann::json::array();
    for (const auto& p : params) {
        list.push_back({{"name", p.name},
                        {"shape", p.tensor.shape()},
                        {"values", std::vector<double>(p.tensor.values().begin(), p.tensor.values().end())}});
    }
    return doc;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << contents;
        if (!out.flush()) throw DataError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

void save_checkpoint(const fs::path& path, const ParameterList& params, const nlohmann::json& meta) {
    write_file_atomic(path, checkpoint_to_json(params, meta).dump() + "\n");
}

ParameterList load_checkpoint(const fs::path& path, nlohmann::json* meta) {
    std::ifstream in(path);
    if (!in) throw DataError("checkpoint not found: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer()) {
        throw DataError("checkpoint " + path.string() + " has no version field");
    }
    if (doc["version"].get<int>() != kCheckpointVersion) {
        throw DataError("checkpoint " + path.string() + " has unsupported version " + doc["version"].dump());
    }
    ParameterList params;
    try {
        for (const auto& entry : doc.at("params")) {
            auto shape = entry.at("shape").get<Shape>();
            auto values = entry.at("values").get<std::vector<double>>();
            params.push_back({entry.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values))});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
    } catch (const ShapeError& e) {
        throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    if (meta) *meta = doc.value("meta", nlohmann::json::object());
    return params;
}

void load_into(const ParameterList& source, ParameterList& target) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& p : source) by_name[p.name] = &p.tensor;
    for (auto& p : target) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw DataError("checkpoint is missing parameter '" + p.name + "'");
        if (it->second->shape() != p.tensor.shape()) {
            throw DataError("checkpoint parameter '" + p.name + "' has shape " + shape_str(it->second->shape()) +
                            ", model expects " + shape_str(p.tensor.shape()));
        }
        auto src = it->second->values();
        std::copy(src.begin(), src.end(), p.tensor.values().begin());
    }
    if (by_name.size() != target.size()) throw DataError("checkpoint carries parameters the model does not have");
}

}  // namespace gazefield
