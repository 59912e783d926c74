#include "gazefield/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gazefield/error.hpp"

namespace gazefield {

namespace fs = std::filesystem;

Image crop_resize(const Image& img, const Box& box, std::size_t out_w, std::size_t out_h) {
    if (img.empty()) throw DataError("crop_resize: empty image");
    if (!(box.w > 0.0) || !(box.h > 0.0)) throw DataError("crop_resize: degenerate box");
    if (out_w == 0 || out_h == 0) throw ShapeError("crop_resize: empty output");
    Image out(img.channels, out_h, out_w);
    const double W = static_cast<double>(img.width), H = static_cast<double>(img.height);
    auto clamp_idx = [](double v, std::size_t n) {
        return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
    };
    for (std::size_t r = 0; r < out_h; ++r) {
        const double ny = box.y + (static_cast<double>(r) + 0.5) / static_cast<double>(out_h) * box.h;
        const double sy = std::clamp(ny * H - 0.5, 0.0, H - 1.0);
        const std::size_t y0 = clamp_idx(std::floor(sy), img.height);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t c = 0; c < out_w; ++c) {
            const double nx = box.x + (static_cast<double>(c) + 0.5) / static_cast<double>(out_w) * box.w;
            const double sx = std::clamp(nx * W - 0.5, 0.0, W - 1.0);
            const std::size_t x0 = clamp_idx(std::floor(sx), img.width);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - static_cast<double>(x0);
            for (std::size_t ch = 0; ch < img.channels; ++ch) {
                const double top = img.at(ch, y0, x0) * (1.0 - fx) + img.at(ch, y0, x1) * fx;
                const double bottom = img.at(ch, y1, x0) * (1.0 - fx) + img.at(ch, y1, x1) * fx;
                out.at(ch, r, c) = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    return out;
}

Image resize_bilinear(const Image& img, std::size_t out_w, std::size_t out_h) {
    if (out_w == img.width && out_h == img.height) return img;
    return crop_resize(img, {0.0, 0.0, 1.0, 1.0}, out_w, out_h);
}

void quantize_8bit(Image& img) {
    for (double& v : img.data) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

void write_pnm(const fs::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw DataError("PNM output needs 1 or 3 channels");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << (img.channels == 1 ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n255\n";
    std::string bytes;
    bytes.reserve(img.data.size());
    for (std::size_t r = 0; r < img.height; ++r) {
        for (std::size_t c = 0; c < img.width; ++c) {
            for (std::size_t ch = 0; ch < img.channels; ++ch) {
                bytes.push_back(static_cast<char>(
                    static_cast<unsigned char>(std::lround(std::clamp(img.at(ch, r, c), 0.0, 1.0) * 255.0))));
            }
        }
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

Image read_pnm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("image not found: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") throw DataError(path.string() + ": not a binary PGM/PPM file");
    auto next_int = [&]() {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string skip;
            std::getline(in, skip);
            in >> std::ws;
        }
        long v = -1;
        in >> v;
        if (!in || v <= 0) throw DataError(path.string() + ": malformed PNM header");
        return static_cast<std::size_t>(v);
    };
    const std::size_t w = next_int(), h = next_int(), maxval = next_int();
    if (maxval != 255) throw DataError(path.string() + ": only 8-bit PNM is supported");
    in.get();
    const std::size_t channels = magic == "P5" ? 1 : 3;
    std::string bytes(w * h * channels, '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw DataError(path.string() + ": truncated pixels");
    Image img(channels, h, w);
    std::size_t k = 0;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            for (std::size_t ch = 0; ch < channels; ++ch) {
                img.at(ch, r, c) = static_cast<unsigned char>(bytes[k++]) / 255.0;
            }
        }
    }
    return img;
}

void write_csv_image(const fs::path& path, const Image& img) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "# channels=" << img.channels << " height=" << img.height << " width=" << img.width << "\n";
    char buf[32];
    for (std::size_t ch = 0; ch < img.channels; ++ch) {
        for (std::size_t r = 0; r < img.height; ++r) {
            for (std::size_t c = 0; c < img.width; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", img.at(ch, r, c));
                out << (c ? "," : "") << buf;
            }
            out << "\n";
        }
    }
}

Image read_csv_image(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("image not found: " + path.string());
    std::string header;
    std::getline(in, header);
    std::size_t c = 0, h = 0, w = 0;
    if (std::sscanf(header.c_str(), "# channels=%zu height=%zu width=%zu", &c, &h, &w) != 3 || !c || !h || !w) {
        throw DataError(path.string() + ": missing '# channels=C height=H width=W' header");
    }
    Image img(c, h, w);
    std::string line;
    for (std::size_t row = 0; row < c * h; ++row) {
        if (!std::getline(in, line)) throw DataError(path.string() + ": expected " + std::to_string(c * h) + " rows");
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= w) throw DataError(path.string() + ": too many columns in row " + std::to_string(row + 2));
            try {
                img.data[row * w + col++] = std::stod(cell);
            } catch (const std::exception&) {
                throw DataError(path.string() + ": bad number '" + cell + "' in row " + std::to_string(row + 2));
            }
        }
        if (col != w) throw DataError(path.string() + ": too few columns in row " + std::to_string(row + 2));
    }
    return img;
}

Image read_image(const fs::path& path) {
    return path.extension() == ".csv" ? read_csv_image(path) : read_pnm(path);
}

void write_image(const fs::path& path, const Image& img) {
    if (path.extension() == ".csv") {
        write_csv_image(path, img);
    } else {
        write_pnm(path, img);
    }
}

}  // namespace gazefield
