#include "gazefield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gazefield/error.hpp"

namespace gazefield::metrics {

namespace {

void require_annotations(const GroundTruthSet& gts) {
    if (gts.annotations.empty()) throw DataError("ground truth set has no annotations");
}

std::optional<double> angle_from_head(NormalizedPoint head, NormalizedPoint a, NormalizedPoint b) {
    const Direction u{a.x - head.x, a.y - head.y};
    const Direction v{b.x - head.x, b.y - head.y};
    if (u.is_zero() || v.is_zero()) return std::nullopt;
    return angle_degrees(u, v);
}

}  // namespace

NormalizedPoint GroundTruthSet::mean() const {
    require_annotations(*this);
    double x = 0.0, y = 0.0;
    for (const auto& p : annotations) {
        x += p.x;
        y += p.y;
    }
    const double n = static_cast<double>(annotations.size());
    return {x / n, y / n};
}

double dist(NormalizedPoint pred, const GroundTruthSet& gts) { return distance(pred, gts.mean()); }

double mdist(NormalizedPoint pred, const GroundTruthSet& gts) {
    require_annotations(gts);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : gts.annotations) best = std::min(best, distance(pred, p));
    return best;
}

std::optional<double> ang(NormalizedPoint pred, const GroundTruthSet& gts) {
    return angle_from_head(gts.head, pred, gts.mean());
}

std::optional<double> mang(NormalizedPoint pred, const GroundTruthSet& gts) {
    require_annotations(gts);
    std::optional<double> best;
    for (const auto& p : gts.annotations) {
        if (auto a = angle_from_head(gts.head, pred, p)) best = best ? std::min(*best, *a) : *a;
    }
    return best;
}

double auc(std::span<const double> values, std::size_t width, std::size_t height, const GroundTruthSet& gts) {
    if (values.empty() || values.size() != width * height) throw ShapeError("auc: heatmap size mismatch");
    require_annotations(gts);
    std::vector<char> positive(values.size(), 0);
    for (const auto& p : gts.annotations) {
        const auto c = heatmap::cell_of(p, width, height);
        positive[c.row * width + c.col] = 1;
    }
    const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), 1));
    const std::size_t n_neg = values.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("auc: needs both positive and negative cells");

    // Average 1-based ranks over tie groups, then U = R_pos − P(P+1)/2.
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (positive[order[k]]) rank_sum += avg_rank;
        }
        i = j + 1;
    }
    const double p = static_cast<double>(n_pos);
    const double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(n_neg));
}

double auc(const heatmap::Heatmap& h, const GroundTruthSet& gts) { return auc(h.values, h.width, h.height, gts); }

std::vector<CurvePoint> accumulative_curve(std::span<const double> errors, std::span<const double> thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        throw ConfigError("accumulative_curve: thresholds must be ascending");
    }
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<CurvePoint> curve;
    curve.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto within = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
        curve.push_back({t, sorted.empty() ? 0.0 : within / static_cast<double>(sorted.size())});
    }
    return curve;
}

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 50; ++i) t.push_back(i / 100.0);
    return t;
}

SampleMetrics evaluate_sample(std::span<const double> heatmap_values, std::size_t width, std::size_t height,
                              const GroundTruthSet& gts) {
    SampleMetrics m;
    m.pred = heatmap::decode_argmax(heatmap_values, width, height);
    m.auc = auc(heatmap_values, width, height, gts);
    m.dist = dist(m.pred, gts);
    m.mdist = mdist(m.pred, gts);
    m.ang = ang(m.pred, gts);
    m.mang = mang(m.pred, gts);
    return m;
}

MetricReport aggregate(std::vector<SampleMetrics> samples, std::span<const double> thresholds) {
    MetricReport r;
    r.samples = std::move(samples);
    std::vector<double> dists;
    double sum_ang = 0.0, sum_mang = 0.0;
    for (const auto& s : r.samples) {
        r.auc += s.auc;
        r.dist += s.dist;
        r.mdist += s.mdist;
        dists.push_back(s.dist);
        if (s.ang) {
            sum_ang += *s.ang;
        } else {
            ++r.ang_missing;
        }
        if (s.mang) {
            sum_mang += *s.mang;
        } else {
            ++r.mang_missing;
        }
    }
    const double n = static_cast<double>(r.samples.size());
    if (n > 0) {
        r.auc /= n;
        r.dist /= n;
        r.mdist /= n;
    }
    const std::size_t n_ang = r.samples.size() - r.ang_missing;
    const std::size_t n_mang = r.samples.size() - r.mang_missing;
    r.ang = n_ang ? sum_ang / static_cast<double>(n_ang) : 0.0;
    r.mang = n_mang ? sum_mang / static_cast<double>(n_mang) : 0.0;
    r.curve = accumulative_curve(dists, thresholds);
    return r;
}

}  // namespace gazefield::metrics
