#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gazefield/geometry.hpp"
#include "gazefield/heatmap.hpp"

namespace gazefield::metrics {

/// All annotations for one person plus their head position.
struct GroundTruthSet {
    std::vector<NormalizedPoint> annotations;
    NormalizedPoint head;

    NormalizedPoint mean() const;
};

/// Distance to the mean annotation.
double dist(NormalizedPoint pred, const GroundTruthSet& gts);
/// Smallest distance to any annotation.
double mdist(NormalizedPoint pred, const GroundTruthSet& gts);
/// Angle in degrees between pred − head and mean − head; nullopt when either vector is zero.
std::optional<double> ang(NormalizedPoint pred, const GroundTruthSet& gts);
/// Smallest angle over annotations; annotations at the head are skipped.
std::optional<double> mang(NormalizedPoint pred, const GroundTruthSet& gts);

/// ROC area with heatmap values as scores, annotation-containing cells as
/// positives and every other cell as a negative. Computed from the
/// Mann–Whitney rank sum; tied scores count 1/2.
double auc(std::span<const double> values, std::size_t width, std::size_t height, const GroundTruthSet& gts);
double auc(const heatmap::Heatmap& h, const GroundTruthSet& gts);

struct CurvePoint {
    double threshold = 0.0;
    double fraction = 0.0;
};

/// Fraction of errors <= each threshold. Thresholds must be ascending.
std::vector<CurvePoint> accumulative_curve(std::span<const double> errors, std::span<const double> thresholds);
/// 0.00, 0.01, ..., 0.50
std::vector<double> default_thresholds();

struct SampleMetrics {
    NormalizedPoint pred;
    double auc = 0.0;
    double dist = 0.0;
    double mdist = 0.0;
    std::optional<double> ang;
    std::optional<double> mang;
};

SampleMetrics evaluate_sample(std::span<const double> heatmap, std::size_t width, std::size_t height,
                              const GroundTruthSet& gts);

struct MetricReport {
    std::vector<SampleMetrics> samples;
    double auc = 0.0;
    double dist = 0.0;
    double mdist = 0.0;
    double ang = 0.0;
    double mang = 0.0;
    /// Samples left out of the angular means because the prediction sat on the head.
    std::size_t ang_missing = 0;
    std::size_t mang_missing = 0;
    std::vector<CurvePoint> curve;
};

/// Means in sample order; degenerate angles are excluded and counted.
MetricReport aggregate(std::vector<SampleMetrics> samples, std::span<const double> thresholds);

}  // namespace gazefield::metrics
