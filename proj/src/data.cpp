#include "gazefield/data.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gazefield/error.hpp"

namespace gazefield::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kBoxSlack = 1e-9;

json point_json(NormalizedPoint p) { return json::array({p.x, p.y}); }

NormalizedPoint point_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw DataError("expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json record_json(const GazeAnnotationRecord& r) {
    json gaze = json::array();
    for (const auto& g : r.gaze) gaze.push_back(point_json(g));
    return {{"image", r.image},
            {"width", r.width},
            {"height", r.height},
            {"head_box", json::array({r.head_box.x, r.head_box.y, r.head_box.w, r.head_box.h})},
            {"head_center", point_json(r.head_center)},
            {"gaze", gaze},
            {"split", r.split}};
}

GazeAnnotationRecord record_from(const json& j) {
    GazeAnnotationRecord r;
    r.image = j.at("image").get<std::string>();
    r.width = j.at("width").get<std::size_t>();
    r.height = j.at("height").get<std::size_t>();
    const auto& box = j.at("head_box");
    if (!box.is_array() || box.size() != 4) throw DataError("head_box must be [x, y, w, h]");
    r.head_box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
    r.head_center = point_from(j.at("head_center"));
    for (const auto& g : j.at("gaze")) r.gaze.push_back(point_from(g));
    r.split = j.at("split").get<std::string>();
    return r;
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

double wrap_angle(double a) {
    a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a - std::numbers::pi;
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

// Largest t with head + t·u inside [lo, hi]².
double max_travel(NormalizedPoint head, double ux, double uy, double lo, double hi) {
    double t = std::numeric_limits<double>::infinity();
    if (ux > 0) t = std::min(t, (hi - head.x) / ux);
    if (ux < 0) t = std::min(t, (lo - head.x) / ux);
    if (uy > 0) t = std::min(t, (hi - head.y) / uy);
    if (uy < 0) t = std::min(t, (lo - head.y) / uy);
    return t;
}

struct Blob {
    NormalizedPoint center;
    double radius = 0.0;
    double color[3] = {0.0, 0.0, 0.0};
};

std::mt19937_64 scene_rng(std::uint64_t seed, const std::string& split, std::size_t index) {
    // FNV-1a keeps the split tag's contribution stable across platforms.
    std::uint32_t tag = 2166136261u;
    for (unsigned char c : split) tag = (tag ^ c) * 16777619u;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag,
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(std::uint64_t{index} >> 32)};
    return std::mt19937_64(seq);
}

Image render(const SyntheticSceneSpec& spec, std::mt19937_64& rng, NormalizedPoint head, double theta,
             const std::vector<Blob>& blobs) {
    const std::size_t R = spec.resolution;
    Image img(3, R, R);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& v : img.data) v = spec.noise_amplitude * unit(rng);
    const double px = 1.0 / static_cast<double>(R);
    for (const auto& b : blobs) {
        const double s = b.radius / 2.0;
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t c = 0; c < R; ++c) {
                const double x = (static_cast<double>(c) + 0.5) * px, y = (static_cast<double>(r) + 0.5) * px;
                const double d2 = (x - b.center.x) * (x - b.center.x) + (y - b.center.y) * (y - b.center.y);
                if (d2 > 9.0 * b.radius * b.radius) continue;
                const double alpha = std::exp(-d2 / (2.0 * s * s));
                for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, r, c) += (b.color[ch] - img.at(ch, r, c)) * alpha;
            }
        }
    }
    const double half = deg2rad(spec.wedge_half_angle_deg);
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < R; ++c) {
            const double x = (static_cast<double>(c) + 0.5) * px - head.x;
            const double y = (static_cast<double>(r) + 0.5) * px - head.y;
            const double d = std::hypot(x, y);
            double red = -1.0;
            if (d <= spec.head_radius) red = 0.5;
            if (d <= spec.wedge_radius && d > 0.0 && std::abs(wrap_angle(std::atan2(y, x) - theta)) <= half) red = 1.0;
            if (red < 0.0) continue;
            img.at(0, r, c) = red;
            img.at(1, r, c) = 0.0;
            img.at(2, r, c) = 0.0;
        }
    }
    quantize_8bit(img);
    return img;
}

}  // namespace

std::string validate(const GazeAnnotationRecord& r) {
    if (r.image.empty()) return "empty image identifier";
    if (r.width == 0 || r.height == 0) return "image extents must be positive";
    const Box& b = r.head_box;
    if (!(b.w > 0.0) || !(b.h > 0.0)) return "degenerate head box";
    if (b.x < -kBoxSlack || b.y < -kBoxSlack || b.x + b.w > 1.0 + kBoxSlack || b.y + b.h > 1.0 + kBoxSlack) {
        return "head box outside the image";
    }
    if (!r.head_center.inside_unit_square()) return "head center outside [0,1]^2";
    if (r.gaze.empty()) return "no gaze points";
    for (const auto& g : r.gaze) {
        if (!g.inside_unit_square()) {
            return "gaze point (" + std::to_string(g.x) + ", " + std::to_string(g.y) + ") outside [0,1]^2";
        }
    }
    if (r.split.empty()) return "empty split tag";
    return {};
}

void save_annotations(const fs::path& path, const std::vector<GazeAnnotationRecord>& records) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << json{{"schema", kAnnotationSchema}, {"version", kAnnotationVersion}}.dump() << "\n";
    for (const auto& r : records) out << record_json(r).dump() << "\n";
    if (!out.flush()) throw DataError("write failed for " + path.string());
}

std::vector<GazeAnnotationRecord> load_annotations(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("annotation file not found: " + path.string());
    std::vector<GazeAnnotationRecord> records;
    std::vector<std::string> problems;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            problems.push_back("line " + std::to_string(line_no) + ": not valid JSON");
            continue;
        }
        if (!have_header) {
            if (!j.is_object() || j.value("schema", "") != kAnnotationSchema) {
                throw DataError(path.string() + ": line " + std::to_string(line_no) + ": missing schema header");
            }
            if (j.value("version", -1) != kAnnotationVersion) {
                throw DataError(path.string() + ": unsupported schema version " + j.value("version", json()).dump());
            }
            have_header = true;
            continue;
        }
        try {
            auto rec = record_from(j);
            if (auto why = validate(rec); !why.empty()) {
                problems.push_back("line " + std::to_string(line_no) + ": " + why);
                continue;
            }
            records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            problems.push_back("line " + std::to_string(line_no) + ": malformed record (" + e.what() + ")");
        }
    }
    if (!problems.empty()) {
        std::string msg = path.string() + ": " + std::to_string(problems.size()) + " invalid row(s)";
        for (const auto& p : problems) msg += "\n  " + p;
        throw DataError(msg);
    }
    return records;
}

std::optional<GazeSample> make_sample(const GazeAnnotationRecord& record, const Image& image,
                                      const SampleOptions& options) {
    if (!(record.head_box.w > 0.0) || !(record.head_box.h > 0.0)) {
        throw DataError(record.image + ": degenerate head box");
    }
    if (record.gaze.empty()) throw DataError(record.image + ": no gaze points");
    GazeSample s;
    s.id = record.image;
    s.head = {record.head_box.x + record.head_box.w / 2.0, record.head_box.y + record.head_box.h / 2.0};
    s.gaze = record.gaze;
    double mx = 0.0, my = 0.0;
    for (const auto& g : record.gaze) {
        mx += g.x;
        my += g.y;
    }
    const double n = static_cast<double>(record.gaze.size());
    const Direction d{mx / n - s.head.x, my / n - s.head.y};
    if (d.is_zero()) return std::nullopt;
    s.direction = d.normalized();
    s.scene = resize_bilinear(image, options.scene_resolution, options.scene_resolution);
    s.head_crop = crop_resize(image, record.head_box, options.crop_resolution, options.crop_resolution);
    return s;
}

void validate(const SyntheticSceneSpec& spec) {
    if (spec.resolution < 8) throw ConfigError("synthetic resolution must be >= 8");
    if (spec.object_count < 1) throw ConfigError("synthetic object_count must be >= 1");
    if (!(spec.blob_radius_min > 0.0) || spec.blob_radius_max < spec.blob_radius_min) {
        throw ConfigError("synthetic blob radius range is invalid");
    }
    if (!(spec.head_box_size > 0.0) || spec.head_box_size >= 1.0) throw ConfigError("head_box_size must be in (0,1)");
    if (spec.angular_tolerance_deg < 0.0 || spec.distractor_margin_deg <= spec.angular_tolerance_deg) {
        throw ConfigError("distractor_margin_deg must exceed angular_tolerance_deg >= 0");
    }
    if (spec.noise_amplitude < 0.0 || spec.noise_amplitude > 1.0) throw ConfigError("noise_amplitude must be in [0,1]");
    if (!(spec.min_gaze_distance > 0.0)) throw ConfigError("min_gaze_distance must be positive");
}

SyntheticScene generate_scene(const SyntheticSceneSpec& spec, std::size_t index, const std::string& split) {
    validate(spec);
    auto rng = scene_rng(spec.seed, split, index);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const double head_margin = spec.head_box_size / 2.0 + 1e-6;
    const double blob_margin = spec.blob_radius_max;
    // Keeps distractors out of the head crop.
    const double head_clearance = spec.head_box_size / 2.0 * std::numbers::sqrt2 + spec.blob_radius_max;
    const double tol = deg2rad(spec.angular_tolerance_deg);
    const double margin = deg2rad(spec.distractor_margin_deg);

    for (std::size_t attempt = 0; attempt < spec.max_retries; ++attempt) {
        const NormalizedPoint head{uniform(head_margin, 1.0 - head_margin), uniform(head_margin, 1.0 - head_margin)};
        const double theta = uniform(0.0, 2.0 * std::numbers::pi);
        const double bearing = theta + (tol > 0.0 ? uniform(-tol, tol) : 0.0);
        const double ux = std::cos(bearing), uy = std::sin(bearing);
        const double reach = max_travel(head, ux, uy, blob_margin, 1.0 - blob_margin);
        if (reach < spec.min_gaze_distance) continue;
        const double r = uniform(spec.min_gaze_distance, reach);

        std::vector<Blob> blobs;
        auto random_color = [&](Blob& b) {
            b.color[0] = uniform(0.2, 0.5);
            b.color[1] = uniform(0.7, 1.0);
            b.color[2] = uniform(0.7, 1.0);
        };
        Blob target;
        target.center = {head.x + r * ux, head.y + r * uy};
        target.radius = uniform(spec.blob_radius_min, spec.blob_radius_max);
        random_color(target);
        blobs.push_back(target);

        bool placed_all = true;
        for (std::size_t k = 1; k < spec.object_count && placed_all; ++k) {
            placed_all = false;
            for (int tries = 0; tries < 200; ++tries) {
                Blob b;
                b.center = {uniform(blob_margin, 1.0 - blob_margin), uniform(blob_margin, 1.0 - blob_margin)};
                b.radius = uniform(spec.blob_radius_min, spec.blob_radius_max);
                if (distance(b.center, head) < head_clearance) continue;
                const double off = wrap_angle(std::atan2(b.center.y - head.y, b.center.x - head.x) - theta);
                if (std::abs(off) < margin) continue;
                const bool clear = std::all_of(blobs.begin(), blobs.end(), [&](const Blob& o) {
                    return distance(o.center, b.center) >= o.radius + b.radius + 0.02;
                });
                if (!clear) continue;
                random_color(b);
                blobs.push_back(b);
                placed_all = true;
                break;
            }
        }
        if (!placed_all) continue;

        SyntheticScene scene;
        scene.wedge_direction = {std::cos(theta), std::sin(theta)};
        for (const auto& b : blobs) scene.blobs.push_back(b.center);
        scene.image = render(spec, rng, head, theta, blobs);
        auto& rec = scene.record;
        char name[64];
        std::snprintf(name, sizeof name, "images/%s_%06zu.ppm", split.c_str(), index);
        rec.image = name;
        rec.width = spec.resolution;
        rec.height = spec.resolution;
        rec.head_box = {head.x - spec.head_box_size / 2.0, head.y - spec.head_box_size / 2.0, spec.head_box_size,
                        spec.head_box_size};
        rec.head_center = {rec.head_box.x + rec.head_box.w / 2.0, rec.head_box.y + rec.head_box.h / 2.0};
        rec.gaze = {target.center};
        rec.split = split;
        return scene;
    }
    throw DataError("synthetic scene " + std::to_string(index) + ": no valid layout after " +
                    std::to_string(spec.max_retries) + " attempts");
}

std::vector<GazeSample> generate_synthetic(const SyntheticSceneSpec& spec, std::size_t n,
                                           const SampleOptions& options, const std::string& split) {
    validate(spec);
    std::vector<std::optional<GazeSample>> slots(n);
    // Exceptions may not cross the parallel region; the first one is rethrown after it.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            const auto scene = generate_scene(spec, static_cast<std::size_t>(i), split);
            slots[static_cast<std::size_t>(i)] = make_sample(scene.record, scene.image, options);
        } catch (...) {
#pragma omp critical(gazefield_generate_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<GazeSample> out;
    out.reserve(n);
    for (auto& s : slots) {
        if (s) out.push_back(std::move(*s));
    }
    return out;
}

}  // namespace gazefield::data
