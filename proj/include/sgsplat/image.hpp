#pragma once

#include "sgsplat/common.hpp"

#include <string>
#include <vector>

namespace sgsplat {

// Row-major H x W x C image of doubles. Rendered images are linear RGB; PNG I/O
// applies the sRGB transfer function at the 8-bit boundary.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c = 3) : width(w), height(h), channels(c) {
        data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                        static_cast<std::size_t>(c),
                    0.0);
    }

    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(channels) +
                    static_cast<std::size_t>(c)];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(channels) +
                    static_cast<std::size_t>(c)];
    }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }

    Image clamped01() const;
};

double srgb_encode(double linear);
double srgb_decode(double encoded);

// 8-bit PNG, sRGB-encoded from linear values clamped to [0, 1].
void save_png(const Image& img, const std::string& path);
// Decodes back to linear RGB in [0, 1].
Image load_png(const std::string& path);

// Lossless float dump for test oracles: "FIMG" magic, u32 width/height/channels
// (little endian), then float32 data row-major.
void save_float_image(const Image& img, const std::string& path);
Image load_float_image(const std::string& path);

}  // namespace sgsplat
