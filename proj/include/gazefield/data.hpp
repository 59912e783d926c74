#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gazefield/geometry.hpp"
#include "gazefield/image.hpp"

namespace gazefield::data {

inline constexpr int kAnnotationVersion = 1;
inline constexpr const char* kAnnotationSchema = "gazefield.annotations";

/// One annotated person, GazeFollow-style. All coordinates normalized.
struct GazeAnnotationRecord {
    std::string image;
    std::size_t width = 0;
    std::size_t height = 0;
    Box head_box;
    NormalizedPoint head_center;
    std::vector<NormalizedPoint> gaze;
    std::string split = "train";
};

/// JSON-lines file: a {"schema","version"} header line, then one record per
/// line with fields image, width, height, head_box [x,y,w,h], head_center
/// [x,y], gaze [[x,y],...], split.
void save_annotations(const std::filesystem::path& path, const std::vector<GazeAnnotationRecord>& records);
/// An empty file yields no records. Invalid rows raise DataError listing
/// every offending line number.
std::vector<GazeAnnotationRecord> load_annotations(const std::filesystem::path& path);
/// Empty string when valid, otherwise the reason.
std::string validate(const GazeAnnotationRecord& record);

struct SampleOptions {
    std::size_t scene_resolution = 64;
    std::size_t crop_resolution = 16;
};

/// Network-ready sample.
struct GazeSample {
    std::string id;
    Image scene;
    Image head_crop;
    NormalizedPoint head;
    std::vector<NormalizedPoint> gaze;
    /// Unit vector from the head to the mean annotation.
    Direction direction;
};

/// Resizes the scene, crops and resizes the head box, and derives the
/// ground-truth direction. Returns nullopt (the sample is skipped) when the
/// gaze coincides with the head and the direction is undefined. Throws
/// DataError on a degenerate head box.
std::optional<GazeSample> make_sample(const GazeAnnotationRecord& record, const Image& image,
                                      const SampleOptions& options);

/// Procedural stand-in for a gaze dataset: K coloured blobs on noise plus a
/// red head disk with a wedge pointing along the true gaze direction. The
/// gaze target is the blob whose bearing from the head is closest to the
/// wedge axis; every other blob is at least `distractor_margin_deg` off-axis.
struct SyntheticSceneSpec {
    std::size_t resolution = 64;
    double noise_amplitude = 0.1;
    std::size_t object_count = 4;
    double blob_radius_min = 0.035;
    double blob_radius_max = 0.06;
    double head_box_size = 0.25;
    double head_radius = 0.045;
    double wedge_radius = 0.1;
    double wedge_half_angle_deg = 30.0;
    /// Largest bearing offset between the wedge axis and the target blob.
    double angular_tolerance_deg = 6.0;
    double distractor_margin_deg = 45.0;
    double min_gaze_distance = 0.25;
    std::uint64_t seed = 0;
    std::size_t max_retries = 1000;
};

void validate(const SyntheticSceneSpec& spec);

struct SyntheticScene {
    Image image;
    GazeAnnotationRecord record;
    /// Wedge axis (unit).
    Direction wedge_direction;
    std::vector<NormalizedPoint> blobs;
};

/// Scene `index` of the `split` stream defined by spec.seed. Each (split,
/// index) pair draws from its own RNG stream, so scenes can be generated in
/// any order or in parallel and the train and test streams never overlap.
SyntheticScene generate_scene(const SyntheticSceneSpec& spec, std::size_t index, const std::string& split = "train");

/// Scenes 0 .. n − 1 of `split`, converted to samples.
std::vector<GazeSample> generate_synthetic(const SyntheticSceneSpec& spec, std::size_t n,
                                           const SampleOptions& options = {}, const std::string& split = "train");

}  // namespace gazefield::data
