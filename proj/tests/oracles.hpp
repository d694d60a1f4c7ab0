#pragma once

// Independent reference implementations used only by tests. Everything here
// is written as the plainest possible loop over the defining formula, on
// purpose: these are the oracles the fast library code is checked against.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "kneeloc/hog.hpp"
#include "kneeloc/image.hpp"
#include "kneeloc/linsvm.hpp"

namespace oracles {

/// IoU by counting raster cells inside each box over their joint bounding
/// region. Exact integer arithmetic.
inline double pixel_count_iou(const kneeloc::BoxPx& a, const kneeloc::BoxPx& b) {
    const int x0 = std::min(a.x, b.x), x1 = std::max(a.x + a.w, b.x + b.w);
    const int y0 = std::min(a.y, b.y), y1 = std::max(a.y + a.h, b.y + b.h);
    long long inter = 0, uni = 0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const bool in_a = x >= a.x && x < a.x + a.w && y >= a.y && y < a.y + a.h;
            const bool in_b = x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    }
    return double(inter) / double(uni);
}

/// Row sums over the central third of columns, double loop.
inline std::vector<double> naive_marginal_profile(const kneeloc::GrayImage& img, int alpha) {
    std::vector<double> out;
    for (int i = alpha; i < img.height() - alpha; ++i) {
        double s = 0.0;
        for (int j = img.width() / 3; j < 2 * img.width() / 3; ++j) s += img.at(j, i);
        out.push_back(s);
    }
    return out;
}

/// Forward difference, then explicit same-mode boxcar convolution with zero
/// padding, then absolute value.
inline std::vector<double> naive_peak_response(const std::vector<double>& profile, int window) {
    std::vector<double> diff;
    for (std::size_t i = 0; i + 1 < profile.size(); ++i)
        diff.push_back(profile[i + 1] - profile[i]);
    std::vector<double> out(diff.size(), 0.0);
    const int half = window / 2;
    for (int i = 0; i < int(diff.size()); ++i) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) {
            const int j = i + k;
            if (j >= 0 && j < int(diff.size())) acc += diff[std::size_t(j)];
        }
        out[std::size_t(i)] = std::abs(acc / window);
    }
    return out;
}

/// Percentile by full sort, nearest rank: value of the ceil(p*N)-th
/// smallest sample (rank at least 1).
inline std::uint16_t sort_percentile(std::vector<std::uint16_t> values, double p) {
    std::sort(values.begin(), values.end());
    long long rank = std::max<long long>(1, (long long)std::ceil(p * double(values.size())));
    return values[std::size_t(rank - 1)];
}

/// HoG descriptor computed the slow way: per block, per pixel, from the raw
/// patch, without any shared cell-histogram cache or lookup table.
inline std::vector<double> naive_hog(const kneeloc::GrayImage& patch,
                                     const kneeloc::HogConfig& cfg) {
    const int n = cfg.patch;
    auto px = [&patch, n](int x, int y) {
        return double(patch.at(std::clamp(x, 0, n - 1), std::clamp(y, 0, n - 1)));
    };
    const double period = cfg.signed_gradients ? 360.0 : 180.0;
    const double bin_width = period / cfg.bins;
    const int bps = cfg.blocks_per_side();
    const int block_px = cfg.block * cfg.cell;

    std::vector<double> desc;
    for (int by = 0; by < bps; ++by) {
        for (int bx = 0; bx < bps; ++bx) {
            std::vector<double> block(std::size_t(cfg.block * cfg.block * cfg.bins), 0.0);
            const int ox = bx * cfg.block_stride, oy = by * cfg.block_stride;
            for (int y = oy; y < oy + block_px; ++y) {
                for (int x = ox; x < ox + block_px; ++x) {
                    const double gx = px(x + 1, y) - px(x - 1, y);
                    const double gy = px(x, y + 1) - px(x, y - 1);
                    const double mag = std::sqrt(gx * gx + gy * gy);
                    double deg = std::atan2(gy, gx) * (180.0 / 3.14159265358979323846);
                    if (deg < 0.0) deg += 360.0;
                    if (deg >= 360.0) deg = 0.0;
                    if (!cfg.signed_gradients && deg >= 180.0) deg -= 180.0;

                    const int cell_row = (y - oy) / cfg.cell;
                    const int cell_col = (x - ox) / cfg.cell;
                    const double t = deg / bin_width - 0.5;
                    int b0 = int(std::floor(t));
                    const double f = t - b0;
                    b0 = ((b0 % cfg.bins) + cfg.bins) % cfg.bins;
                    const int b1 = (b0 + 1) % cfg.bins;
                    double* hist = &block[std::size_t(cell_row * cfg.block + cell_col) *
                                          std::size_t(cfg.bins)];
                    hist[b0] += mag * (1.0 - f);
                    hist[b1] += mag * f;
                }
            }
            double ss = 0.0;
            for (double v : block) ss += v * v;
            const double inv = 1.0 / std::sqrt(ss + 1e-6);
            for (double v : block) desc.push_back(v * inv);
        }
    }
    return desc;
}

/// Maximal dual objective of the L1-hinge SVM (bias-augmented features) by
/// projected gradient ascent with a conservative step, run until the
/// fixed-point (KKT) residual is negligible. Returns
/// sum(alpha) - 0.5 * alpha'Q alpha.
inline double projected_gradient_dual(const kneeloc::TrainSet& data, double c_reg,
                                      long max_iterations = 4000000) {
    const std::size_t n = data.rows;
    std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 1.0; // bias augmentation
            for (std::size_t k = 0; k < data.dim; ++k)
                dot += double(data.row(i)[k]) * double(data.row(j)[k]);
            q[i][j] = double(data.labels[i]) * double(data.labels[j]) * dot;
        }
        trace += q[i][i];
    }
    const double step = 1.0 / trace;

    std::vector<double> alpha(n, 0.0), grad(n, 0.0);
    for (long it = 0; it < max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double qa = 0.0;
            for (std::size_t j = 0; j < n; ++j) qa += q[i][j] * alpha[j];
            grad[i] = 1.0 - qa;
        }
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double next = std::clamp(alpha[i] + step * grad[i], 0.0, c_reg);
            residual = std::max(residual, std::abs(next - alpha[i]));
            alpha[i] = next;
        }
        if (residual < 1e-12 * std::max(1.0, c_reg)) break;
    }

    double lin = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * q[i][j] * alpha[j];
    return lin - 0.5 * quad;
}

} // namespace oracles
