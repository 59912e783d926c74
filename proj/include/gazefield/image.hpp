#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace gazefield {

/// Planar (channel-major) image with values in [0,1].
struct Image {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Image() = default;
    Image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), height(h), width(w), data(c * h * w, fill) {}

    double& at(std::size_t c, std::size_t r, std::size_t col) { return data[(c * height + r) * width + col]; }
    double at(std::size_t c, std::size_t r, std::size_t col) const { return data[(c * height + r) * width + col]; }
    bool empty() const { return data.empty(); }
};

/// Axis-aligned box in normalized image coordinates.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

/// Bilinear resampling of `box` to out_w×out_h, sampling at output pixel
/// centres with edge clamping. resize() is crop_resize over the full frame.
Image crop_resize(const Image& img, const Box& box, std::size_t out_w, std::size_t out_h);
Image resize_bilinear(const Image& img, std::size_t out_w, std::size_t out_h);

/// Rounds every value to the nearest multiple of 1/255.
void quantize_8bit(Image& img);

/// Binary PGM (1 channel) or PPM (3 channels), maxval 255.
void write_pnm(const std::filesystem::path& path, const Image& img);
Image read_pnm(const std::filesystem::path& path);

/// Text grid: a "# channels=C height=H width=W" line, then C·H rows of W values.
void write_csv_image(const std::filesystem::path& path, const Image& img);
Image read_csv_image(const std::filesystem::path& path);

/// Dispatches on extension: .csv, else PNM.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

}  // namespace gazefield
