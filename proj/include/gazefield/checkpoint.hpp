#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazefield/tensor.hpp"

namespace gazefield {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

using ParameterList = std::vector<NamedTensor>;

inline constexpr int kCheckpointVersion = 1;

/// JSON document: {"format", "version", "meta", "params": [{"name", "shape", "values"}]}.
/// Values are printed with round-trip precision, so save/load is exact.
nlohmann::json checkpoint_to_json(const ParameterList& params, const nlohmann::json& meta = nlohmann::json::object());

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const ParameterList& params,
                     const nlohmann::json& meta = nlohmann::json::object());

/// Reads all parameters. Throws DataError on a missing file, bad version or malformed entry.
ParameterList load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

/// Copies checkpoint values into existing parameters, matching by name and shape.
void load_into(const ParameterList& source, ParameterList& target);

/// Atomic text write shared by checkpoints and reports.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace gazefield
