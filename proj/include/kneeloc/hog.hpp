#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kneeloc/image.hpp"

namespace kneeloc {

enum class BlockNorm { L2, L2Hys };

/// Descriptor layout parameters. The defaults give 7x7 block positions of
/// 2x2 cells with 9 unsigned orientation bins: 1764 values per 64x64 patch.
struct HogConfig {
    int patch = 64;         ///< square patch side in pixels
    int cell = 8;           ///< cell side in pixels
    int block = 2;          ///< cells per block side (2 -> 16x16 px blocks)
    int block_stride = 8;   ///< block step in pixels (8 -> 50% overlap)
    int bins = 9;
    bool signed_gradients = false; ///< false folds orientations into [0,180)
    BlockNorm norm = BlockNorm::L2;

    int cells_per_side() const { return patch / cell; }
    int blocks_per_side() const { return (patch - block * cell) / block_stride + 1; }
    int descriptor_length() const {
        int b = blocks_per_side();
        return b * b * block * block * bins;
    }

    void validate() const {
        if (patch < 3 || cell < 1 || block < 1 || block_stride < 1 || bins < 1)
            throw ContractError("HogConfig: all sizes must be positive");
        if (patch % cell != 0) throw ContractError("HogConfig: cell must divide patch");
        if ((patch - block * cell) < 0 || (patch - block * cell) % block_stride != 0)
            throw ContractError("HogConfig: block_stride must divide patch - block*cell");
        if (block_stride % cell != 0)
            throw ContractError("HogConfig: block_stride must be a multiple of cell");
    }

    friend bool operator==(const HogConfig&, const HogConfig&) = default;
};

using HogDescriptor = std::vector<double>;

/// Per-pixel gradient magnitude and orientation (degrees, [0,180) unsigned
/// or [0,360) signed), row-major.
struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<double> magnitude;
    std::vector<double> orientation;
};

namespace hog_detail {

inline double fold_degrees(double gy, double gx, bool signed_gradients) {
    double deg = std::atan2(gy, gx) * (180.0 / 3.14159265358979323846);
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg = 0.0;
    if (!signed_gradients && deg >= 180.0) deg -= 180.0;
    return deg;
}

/// Lookup tables over all 8-bit central-difference values (-255..255).
/// Entries are exactly the doubles the direct formulas produce.
struct GradientLut {
    std::vector<double> mag, ori_unsigned, ori_signed;
    GradientLut() : mag(511 * 511), ori_unsigned(511 * 511), ori_signed(511 * 511) {
        for (int dy = -255; dy <= 255; ++dy) {
            for (int dx = -255; dx <= 255; ++dx) {
                std::size_t i = std::size_t(dy + 255) * 511 + std::size_t(dx + 255);
                mag[i] = std::sqrt(double(dx * dx + dy * dy));
                ori_unsigned[i] = fold_degrees(dy, dx, false);
                ori_signed[i] = fold_degrees(dy, dx, true);
            }
        }
    }
};

inline const GradientLut& gradient_lut() {
    static const GradientLut lut;
    return lut;
}

} // namespace hog_detail

/// Centered [-1,0,1] differences with replicate-clamped edges; magnitude
/// sqrt(gx^2+gy^2), orientation folded per the signed flag. 8-bit only.
inline GradientField gradients(const GrayImage& patch, bool signed_gradients = false) {
    if (patch.depth() != BitDepth::Eight)
        throw ContractError("gradients: patch must be 8-bit");
    if (patch.width() < 3 || patch.height() < 3)
        throw ContractError("gradients: patch must be at least 3x3");
    const int w = patch.width(), h = patch.height();
    GradientField f;
    f.width = w;
    f.height = h;
    f.magnitude.resize(std::size_t(w) * h);
    f.orientation.resize(std::size_t(w) * h);
    const auto& lut = hog_detail::gradient_lut();
    const std::vector<double>& ori = signed_gradients ? lut.ori_signed : lut.ori_unsigned;
    for (int y = 0; y < h; ++y) {
        const int ym = y > 0 ? y - 1 : 0, yp = y < h - 1 ? y + 1 : h - 1;
        for (int x = 0; x < w; ++x) {
            const int xm = x > 0 ? x - 1 : 0, xp = x < w - 1 ? x + 1 : w - 1;
            const int gx = int(patch.at(xp, y)) - int(patch.at(xm, y));
            const int gy = int(patch.at(x, yp)) - int(patch.at(x, ym));
            const std::size_t k = std::size_t(gy + 255) * 511 + std::size_t(gx + 255);
            const std::size_t p = std::size_t(y) * w + x;
            f.magnitude[p] = lut.mag[k];
            f.orientation[p] = ori[k];
        }
    }
    return f;
}

/// Per-cell orientation histograms, row-major (cell row, cell col, bin).
/// Each pixel votes its full magnitude, split linearly between the two
/// nearest bin centres (centres at half-bin offsets, circular wrap). No
/// spatial interpolation across cells.
inline std::vector<double> cell_histograms(const GradientField& field, const HogConfig& cfg) {
    cfg.validate();
    if (field.width != cfg.patch || field.height != cfg.patch)
        throw ContractError("cell_histograms: field size does not match config patch size");
    const int cells = cfg.cells_per_side();
    const double period = cfg.signed_gradients ? 360.0 : 180.0;
    const double bin_width = period / cfg.bins;

    std::vector<double> hist(std::size_t(cells) * cells * cfg.bins, 0.0);
    for (int y = 0; y < cfg.patch; ++y) {
        const int cy = y / cfg.cell;
        for (int x = 0; x < cfg.patch; ++x) {
            const int cx = x / cfg.cell;
            const std::size_t p = std::size_t(y) * cfg.patch + x;
            const double m = field.magnitude[p];
            const double t = field.orientation[p] / bin_width - 0.5;
            int b0 = int(std::floor(t));
            const double f = t - b0;
            b0 = ((b0 % cfg.bins) + cfg.bins) % cfg.bins;
            const int b1 = (b0 + 1) % cfg.bins;
            double* cell = &hist[(std::size_t(cy) * cells + cx) * cfg.bins];
            cell[b0] += m * (1.0 - f);
            cell[b1] += m * f;
        }
    }
    return hist;
}

/// Full descriptor for one patch: blocks of block x block cells at
/// block_stride, each block's values L2-normalized (epsilon 1e-6 under the
/// square root) and concatenated (block row, block col, cell row, cell col,
/// bin). Length is descriptor_length(): 1764 with defaults.
inline HogDescriptor describe(const GrayImage& patch, const HogConfig& cfg) {
    cfg.validate();
    if (patch.width() != cfg.patch || patch.height() != cfg.patch)
        throw ContractError("describe: patch must be exactly " + std::to_string(cfg.patch) +
                            "x" + std::to_string(cfg.patch));
    const GradientField field = gradients(patch, cfg.signed_gradients);
    const std::vector<double> hist = cell_histograms(field, cfg);

    const int cells = cfg.cells_per_side();
    const int bps = cfg.blocks_per_side();
    const int stride_cells = cfg.block_stride / cfg.cell;
    const int block_len = cfg.block * cfg.block * cfg.bins;

    HogDescriptor out;
    out.reserve(std::size_t(bps) * bps * block_len);
    std::vector<double> block(static_cast<std::size_t>(block_len), 0.0);
    for (int by = 0; by < bps; ++by) {
        for (int bx = 0; bx < bps; ++bx) {
            int n = 0;
            for (int cy = 0; cy < cfg.block; ++cy)
                for (int cx = 0; cx < cfg.block; ++cx) {
                    const std::size_t cell_off =
                        (std::size_t(by * stride_cells + cy) * cells + bx * stride_cells + cx) *
                        cfg.bins;
                    for (int b = 0; b < cfg.bins; ++b) block[std::size_t(n++)] = hist[cell_off + b];
                }

            double ss = 0.0;
            for (double v : block) ss += v * v;
            double inv = 1.0 / std::sqrt(ss + 1e-6);
            if (cfg.norm == BlockNorm::L2Hys) {
                // L2 normalize, clip at 0.2, renormalize.
                double ss2 = 0.0;
                for (double& v : block) {
                    v = std::min(v * inv, 0.2);
                    ss2 += v * v;
                }
                inv = 1.0 / std::sqrt(ss2 + 1e-6);
            }
            for (double v : block) out.push_back(v * inv);
        }
    }
    return out;
}

} // namespace kneeloc
