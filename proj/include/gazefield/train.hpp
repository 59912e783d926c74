#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gazefield/data.hpp"
#include "gazefield/heatmap.hpp"
#include "gazefield/metrics.hpp"
#include "gazefield/model.hpp"

namespace gazefield::train {

struct TrainConfig {
    std::size_t batch_size = 32;
    double lr = 1e-4;
    double weight_decay = 0.0005;
    double lambda = 0.5;
    double sigma = heatmap::kDefaultSigma;
    std::size_t stage1_epochs = 5;
    std::size_t stage2_epochs = 4;
    std::size_t finetune_epochs = 2;
    std::uint64_t seed = 0;
    /// When false the direction loss is dropped: stages 1 and 2 are skipped
    /// and the whole network trains on the heatmap loss alone for
    /// stage2_epochs + finetune_epochs.
    bool mid_layer_supervision = true;
    model::ModelConfig model;

    /// Throws ConfigError.
    void validate() const;
};

struct LogRow {
    int stage = 0;
    std::size_t epoch = 0;
    std::optional<double> loss_d;
    std::optional<double> loss_h;
    double loss = 0.0;
    double seconds = 0.0;
};

/// CSV with header stage,epoch,loss_d,loss_h,loss,seconds; absent losses are empty cells.
std::string log_csv(const std::vector<LogRow>& rows);

struct TrainHooks {
    std::function<void(const LogRow&)> on_epoch;
    std::function<void(int stage, const model::GazeModel&)> on_stage_end;
};

struct TrainResult {
    model::GazeModel model;
    std::vector<LogRow> log;
};

/// Stage 1 fits the direction pathway on the direction loss; stage 2
/// freezes it and fits the heatmap pathway on the heatmap loss; stage 3
/// fine-tunes everything on ld + lambda·lh. Each stage starts a fresh Adam
/// state. A non-finite loss raises NumericError naming stage and epoch.
TrainResult train_staged(const std::vector<data::GazeSample>& samples, const TrainConfig& config,
                         const TrainHooks& hooks = {});

/// Batched inference; one heatmap per sample.
std::vector<heatmap::Heatmap> predict(const model::GazeModel& model, const std::vector<data::GazeSample>& samples,
                                      std::size_t batch_size = 64);

metrics::GroundTruthSet ground_truth(const data::GazeSample& sample);

/// Metrics of arbitrary heatmaps against the samples' annotations.
metrics::MetricReport evaluate_heatmaps(const std::vector<heatmap::Heatmap>& maps,
                                        const std::vector<data::GazeSample>& samples);
metrics::MetricReport evaluate(const model::GazeModel& model, const std::vector<data::GazeSample>& samples);

}  // namespace gazefield::train
