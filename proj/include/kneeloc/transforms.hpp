#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "kneeloc/image.hpp"

namespace kneeloc {

namespace transform_detail {

/// Nearest-rank percentile over the full 16-bit histogram: the value of the
/// max(1, ceil(p*N))-th smallest sample. O(N), no interpolation.
inline std::uint16_t percentile_nearest_rank(const std::vector<long long>& hist,
                                             long long n, double p) {
    long long rank = std::max<long long>(1, (long long)std::ceil(p * double(n)));
    long long seen = 0;
    for (std::size_t v = 0; v < hist.size(); ++v) {
        seen += hist[v];
        if (seen >= rank) return std::uint16_t(v);
    }
    return std::uint16_t(hist.size() - 1);
}

/// Bilinear sample with source reads clamped to the image border.
inline double sample_clamped(const GrayImage& img, double sx, double sy) {
    sx = std::clamp(sx, 0.0, double(img.width() - 1));
    sy = std::clamp(sy, 0.0, double(img.height() - 1));
    int x0 = int(sx), y0 = int(sy);
    int x1 = std::min(x0 + 1, img.width() - 1);
    int y1 = std::min(y0 + 1, img.height() - 1);
    double fx = sx - x0, fy = sy - y0;
    double top = img.at(x0, y0) + fx * (double(img.at(x1, y0)) - img.at(x0, y0));
    double bot = img.at(x0, y1) + fx * (double(img.at(x1, y1)) - img.at(x0, y1));
    return top + fy * (bot - top);
}

/// Bilinear sample where out-of-bounds neighbours read as zero.
inline double sample_zero_pad(const GrayImage& img, double sx, double sy) {
    int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
    double fx = sx - x0, fy = sy - y0;
    double v00 = img.at_or_zero(x0, y0), v10 = img.at_or_zero(x0 + 1, y0);
    double v01 = img.at_or_zero(x0, y0 + 1), v11 = img.at_or_zero(x0 + 1, y0 + 1);
    double top = v00 + fx * (v10 - v00);
    double bot = v01 + fx * (v11 - v01);
    return top + fy * (bot - top);
}

inline std::uint16_t quantize(double v, std::uint16_t maxv) {
    long long q = std::llround(v);
    return std::uint16_t(std::clamp<long long>(q, 0, maxv));
}

} // namespace transform_detail

/// Clamp a 16-bit image between the lo/hi percentiles of its histogram and
/// rescale that range to [0,255]. 8-bit inputs pass through unchanged. A
/// constant image (both percentiles equal) maps to all zeros.
inline GrayImage normalize_to_8bit(const GrayImage& img, double lo_pct = 0.05,
                                   double hi_pct = 0.99) {
    if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 1.0))
        throw ContractError("normalize_to_8bit: need 0 <= lo_pct < hi_pct <= 1");
    if (img.depth() == BitDepth::Eight) return img;

    std::vector<long long> hist(65536, 0);
    for (std::uint16_t v : img.pixels()) ++hist[v];
    const long long n = (long long)img.pixels().size();
    const double lo = transform_detail::percentile_nearest_rank(hist, n, lo_pct);
    const double hi = transform_detail::percentile_nearest_rank(hist, n, hi_pct);

    GrayImage out(img.width(), img.height(), BitDepth::Eight);
    if (hi <= lo) return out; // constant image: everything maps to 0
    const double scale = 255.0 / (hi - lo);
    for (std::size_t i = 0; i < img.pixels().size(); ++i) {
        double v = std::clamp(double(img.pixels()[i]), lo, hi);
        out.pixels()[i] = transform_detail::quantize((v - lo) * scale, 255);
    }
    return out;
}

/// Mirror across the vertical axis: pixel (x,y) -> (width-1-x, y).
inline GrayImage flip_horizontal(const GrayImage& img) {
    GrayImage out(img.width(), img.height(), img.depth());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(img.width() - 1 - x, y) = img.at(x, y);
    return out;
}

/// Rotate about the pixel-centre of the image, bilinear, same output size.
/// Samples falling outside the source read as zero (radiograph background).
inline GrayImage rotate_about_center(const GrayImage& img, double angle_deg) {
    if (std::abs(angle_deg) > 45.0)
        throw ContractError("rotate_about_center: |angle| must be <= 45 degrees");
    const double rad = angle_deg * 3.14159265358979323846 / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cx = (img.width() - 1) / 2.0, cy = (img.height() - 1) / 2.0;

    GrayImage out(img.width(), img.height(), img.depth());
    const std::uint16_t maxv = img.max_value();
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            // Inverse-rotate the destination coordinate into the source.
            double dx = x - cx, dy = y - cy;
            double sx = cx + c * dx + s * dy;
            double sy = cy - s * dx + c * dy;
            if (sx < -1.0 || sy < -1.0 || sx > img.width() || sy > img.height()) {
                out.at(x, y) = 0;
                continue;
            }
            out.at(x, y) =
                transform_detail::quantize(transform_detail::sample_zero_pad(img, sx, sy), maxv);
        }
    }
    return out;
}

/// Bilinear resize with half-pixel-centre alignment:
/// src = (dst + 0.5) * in/out - 0.5, border reads clamped. Resizing to the
/// same size is the identity; constant images stay constant.
inline GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1)
        throw ContractError("resize_bilinear: output dimensions must be >= 1");
    GrayImage out(out_w, out_h, img.depth());
    const double rx = double(img.width()) / out_w;
    const double ry = double(img.height()) / out_h;
    const std::uint16_t maxv = img.max_value();
    for (int y = 0; y < out_h; ++y) {
        double sy = (y + 0.5) * ry - 0.5;
        for (int x = 0; x < out_w; ++x) {
            double sx = (x + 0.5) * rx - 0.5;
            out.at(x, y) =
                transform_detail::quantize(transform_detail::sample_clamped(img, sx, sy), maxv);
        }
    }
    return out;
}

/// Copy the box region; parts of the box outside the image are zero-filled.
inline GrayImage crop(const GrayImage& img, const BoxPx& box) {
    if (!box.valid()) throw ContractError("crop: box must have positive extent");
    GrayImage out(box.w, box.h, img.depth());
    for (int y = 0; y < box.h; ++y)
        for (int x = 0; x < box.w; ++x)
            out.at(x, y) = img.at_or_zero(box.x + x, box.y + y);
    return out;
}

/// Equivalent to resize_bilinear(crop(img, box), out_w, out_h) without
/// materializing the intermediate crop. Sample coordinates are clamped to
/// the box (the resize border rule) and reads outside the image are zero
/// (the crop padding rule). This is the hot path of proposal scoring, so
/// the column coordinates are precomputed and fully interior samples skip
/// the bounds checks; the arithmetic is bit-identical either way.
inline GrayImage resize_region(const GrayImage& img, const BoxPx& box, int out_w, int out_h) {
    if (!box.valid()) throw ContractError("resize_region: box must have positive extent");
    if (out_w < 1 || out_h < 1)
        throw ContractError("resize_region: output dimensions must be >= 1");
    GrayImage out(out_w, out_h, img.depth());
    const double rx = double(box.w) / out_w;
    const double ry = double(box.h) / out_h;
    const std::uint16_t maxv = img.max_value();
    const int w = img.width(), h = img.height();

    std::vector<int> col(static_cast<std::size_t>(out_w));
    std::vector<double> col_frac(static_cast<std::size_t>(out_w));
    std::vector<char> col_in(static_cast<std::size_t>(out_w));
    for (int x = 0; x < out_w; ++x) {
        const double sx = std::clamp((x + 0.5) * rx - 0.5, 0.0, double(box.w - 1)) + box.x;
        const double fl = std::floor(sx);
        col[std::size_t(x)] = int(fl);
        col_frac[std::size_t(x)] = sx - fl;
        col_in[std::size_t(x)] = col[std::size_t(x)] >= 0 && col[std::size_t(x)] + 1 < w;
    }

    const std::uint16_t* pixels = img.pixels().data();
    for (int y = 0; y < out_h; ++y) {
        const double sy = std::clamp((y + 0.5) * ry - 0.5, 0.0, double(box.h - 1)) + box.y;
        const double fl = std::floor(sy);
        const int y0 = int(fl);
        const double fy = sy - fl;
        const bool row_in = y0 >= 0 && y0 + 1 < h;
        const std::uint16_t* r0 = row_in ? pixels + std::size_t(y0) * std::size_t(w) : nullptr;
        const std::uint16_t* r1 = row_in ? r0 + w : nullptr;
        for (int x = 0; x < out_w; ++x) {
            const int x0 = col[std::size_t(x)];
            const double fx = col_frac[std::size_t(x)];
            double v00, v10, v01, v11;
            if (row_in && col_in[std::size_t(x)]) {
                v00 = r0[x0];
                v10 = r0[x0 + 1];
                v01 = r1[x0];
                v11 = r1[x0 + 1];
            } else {
                v00 = img.at_or_zero(x0, y0);
                v10 = img.at_or_zero(x0 + 1, y0);
                v01 = img.at_or_zero(x0, y0 + 1);
                v11 = img.at_or_zero(x0 + 1, y0 + 1);
            }
            const double top = v00 + fx * (v10 - v00);
            const double bot = v01 + fx * (v11 - v01);
            out.at(x, y) = transform_detail::quantize(top + fy * (bot - top), maxv);
        }
    }
    return out;
}

} // namespace kneeloc
