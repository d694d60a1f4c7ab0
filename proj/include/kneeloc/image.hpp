#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kneeloc/errors.hpp"

namespace kneeloc {

enum class BitDepth : std::uint8_t { Eight = 8, Sixteen = 16 };

/// Row-major grayscale raster. Samples are held as uint16 regardless of
/// depth; an 8-bit image keeps every value <= 255. Images are immutable
/// value types once built and safe to share across threads.
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, BitDepth depth)
        : width_(width), height_(height), depth_(depth),
          pixels_(check_dims(width, height), 0) {}

    GrayImage(int width, int height, BitDepth depth, std::vector<std::uint16_t> pixels)
        : width_(width), height_(height), depth_(depth), pixels_(std::move(pixels)) {
        if (pixels_.size() != check_dims(width, height))
            throw ContractError("GrayImage: pixel count " + std::to_string(pixels_.size()) +
                                " does not match " + std::to_string(width) + "x" +
                                std::to_string(height));
        if (depth_ == BitDepth::Eight)
            for (std::uint16_t v : pixels_)
                if (v > 255)
                    throw ContractError("GrayImage: 8-bit image holds value > 255");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    BitDepth depth() const { return depth_; }
    bool empty() const { return pixels_.empty(); }

    /// Largest value representable at this depth.
    std::uint16_t max_value() const { return depth_ == BitDepth::Eight ? 255 : 65535; }

    std::uint16_t at(int x, int y) const { return pixels_[std::size_t(y) * width_ + x]; }
    std::uint16_t& at(int x, int y) { return pixels_[std::size_t(y) * width_ + x]; }

    /// Zero for out-of-bounds coordinates, the sample otherwise.
    std::uint16_t at_or_zero(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0;
        return at(x, y);
    }

    const std::vector<std::uint16_t>& pixels() const { return pixels_; }
    std::vector<std::uint16_t>& pixels() { return pixels_; }

    friend bool operator==(const GrayImage& a, const GrayImage& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.depth_ == b.depth_ &&
               a.pixels_ == b.pixels_;
    }

private:
    static std::size_t check_dims(int width, int height) {
        if (width < 1 || height < 1)
            throw ContractError("GrayImage: dimensions must be positive, got " +
                                std::to_string(width) + "x" + std::to_string(height));
        return std::size_t(width) * std::size_t(height);
    }

    int width_ = 0;
    int height_ = 0;
    BitDepth depth_ = BitDepth::Eight;
    std::vector<std::uint16_t> pixels_;
};

/// Axis-aligned pixel rectangle: [x, x+w) x [y, y+h). May extend beyond
/// image bounds for proposals near borders; clipping is always explicit.
struct BoxPx {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return (long long)w * h; }
    bool valid() const { return w > 0 && h > 0; }

    friend bool operator==(const BoxPx&, const BoxPx&) = default;
};

/// Intersection box, or w==h==0 when disjoint.
inline BoxPx intersect(const BoxPx& a, const BoxPx& b) {
    int x0 = std::max(a.x, b.x);
    int y0 = std::max(a.y, b.y);
    int x1 = std::min(a.x + a.w, b.x + b.w);
    int y1 = std::min(a.y + a.h, b.y + b.h);
    if (x1 <= x0 || y1 <= y0) return BoxPx{0, 0, 0, 0};
    return BoxPx{x0, y0, x1 - x0, y1 - y0};
}

/// Clip to [0,width) x [0,height). Empty boxes collapse to a 1x1 pixel at
/// the nearest corner so downstream code never sees a zero-area box.
inline BoxPx clip_to_image(const BoxPx& b, int width, int height) {
    BoxPx c = intersect(b, BoxPx{0, 0, width, height});
    if (!c.valid()) {
        int cx = std::clamp(b.x, 0, width - 1);
        int cy = std::clamp(b.y, 0, height - 1);
        return BoxPx{cx, cy, 1, 1};
    }
    return c;
}

/// Mirror a box across the vertical axis of an image of the given width.
inline BoxPx mirror_horizontal(const BoxPx& b, int width) {
    return BoxPx{width - (b.x + b.w), b.y, b.w, b.h};
}

} // namespace kneeloc
