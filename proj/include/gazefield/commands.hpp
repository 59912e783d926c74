#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazefield/data.hpp"
#include "gazefield/metrics.hpp"

// The CLI subcommands, callable in-process. Each takes a fully resolved
// configuration (see config::resolve), echoes it to <out>/config.json before
// doing any work and writes progress lines to `log`.
namespace gazefield::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitData = 3,
    kExitNumeric = 4,
};

/// Maps ConfigError, DataError and NumericError to their exit codes; anything else is kExitFailure.
int exit_code_for(const std::exception& e);

/// Writes <out>/annotations.jsonl and <out>/images/*.ppm for both splits.
void gen_data(const nlohmann::json& config, std::ostream& log);
/// Writes train_log.csv, checkpoints/stage<N>.json and model.json.
void train(const nlohmann::json& config, std::ostream& log);
/// Writes per_sample.csv, metrics.json and curve.csv.
void eval(const nlohmann::json& config, std::ostream& log);
/// Writes one field_gamma<γ>.csv per scale.
void field(const nlohmann::json& config, std::ostream& log);
/// Writes gradcheck.json; returns false when any check fails.
bool gradcheck(const nlohmann::json& config, std::ostream& log);

/// Samples of one split of a dataset directory; records with an undefined
/// direction are skipped and counted in `skipped`.
std::vector<data::GazeSample> load_split(const std::filesystem::path& dir, const std::string& split,
                                         const data::SampleOptions& options, std::size_t* skipped = nullptr);

/// Aggregate means, missing-angle counts and the curve.
nlohmann::json report_json(const metrics::MetricReport& report);
/// One row per sample: index,id,pred_x,pred_y,auc,dist,mdist,ang,mang (missing angles are empty).
std::string per_sample_csv(const metrics::MetricReport& report, const std::vector<data::GazeSample>& samples);

}  // namespace gazefield::cli
