#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "kneeloc/detector.hpp"
#include "kneeloc/image.hpp"
#include "kneeloc/rng.hpp"

namespace kneeloc {

/// Synthetic bilateral knee radiograph with analytically known ground
/// truth. Each half carries a soft-tissue band and two bone columns meeting
/// at a dark joint gap: a wide femur flaring into condyles from above, with
/// the brighter patella blob overlapping it just above the joint line, and
/// a narrower tibia with a fibula beside it below. The column widths differ
/// across the gap on purpose, so the vertical marginal profile shows the
/// intensity rise and the sharp asymmetric drop the proposer keys on. The
/// right half mirrors the left before noise, and the annotation squares
/// (side height/3.5) mirror across the midline.
inline std::pair<GrayImage, Annotation> synth_phantom(std::uint64_t seed, int width, int height,
                                                      double joint_y_frac = 0.5,
                                                      double joint_x_frac = 0.5,
                                                      int gap_px = 0, double noise_sd = 0.0) {
    if (width < 8 || width % 2 != 0)
        throw ContractError("synth_phantom: width must be even and >= 8");
    if (height < 8) throw ContractError("synth_phantom: height must be >= 8");
    if (!(joint_y_frac >= 0.2 && joint_y_frac <= 0.8))
        throw ContractError("synth_phantom: joint_y_frac must be in [0.2, 0.8]");
    if (!(joint_x_frac > 0.0 && joint_x_frac < 1.0))
        throw ContractError("synth_phantom: joint_x_frac must be in (0, 1)");
    if (noise_sd < 0.0) throw ContractError("synth_phantom: noise_sd must be >= 0");
    if (gap_px <= 0) gap_px = std::max(4, int(std::llround(0.015 * height)));

    const int half = width / 2;
    const int xj = int(std::llround(joint_x_frac * half));
    const int yj = int(std::llround(joint_y_frac * height));

    constexpr int kBackground = 25, kTissue = 55, kFemur = 150, kTibia = 140, kFibula = 130,
                  kPatella = 195;

    GrayImage img(width, height, BitDepth::Eight);

    // Draw the left leg; the right half is its exact mirror.
    const int tissue_hw = std::max(2, int(std::llround(0.22 * half)));
    const int femur_hw = std::max(2, int(std::llround(0.10 * half)));
    const int tibia_hw = std::max(2, int(std::llround(0.075 * half)));
    const int fib_hw = std::max(1, int(std::llround(0.03 * half)));
    const int fib_cx = xj + int(std::llround(0.16 * half));
    const int flare_span = std::max(1, int(std::llround(0.10 * height)));
    const int gap_top = yj - gap_px / 2;
    const int gap_bot = gap_top + gap_px;

    const int pat_ry = std::max(2, int(std::llround(0.05 * height)));
    const int pat_rx = std::max(2, int(std::llround(0.06 * half)));
    const int pat_cy = gap_top - pat_ry - 1; // the blob abuts the joint line

    auto paint = [&img](int x, int y, int v) {
        if (x >= 0 && x < img.width() && y >= 0 && y < img.height())
            img.at(x, y) = std::uint16_t(std::max<int>(img.at(x, y), v));
    };

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < half; ++x) img.at(x, y) = kBackground;
        const bool in_gap = y >= gap_top && y < gap_bot;
        if (in_gap) continue;

        for (int x = std::max(0, xj - tissue_hw); x <= std::min(half - 1, xj + tissue_hw); ++x)
            paint(x, y, kTissue);

        // Bones widen linearly toward the joint line; the femoral condyles
        // flare much more than the tibial plateau.
        const double toward = std::max(0.0, 1.0 - double(std::abs(y - yj)) / flare_span);
        if (y < gap_top) {
            const int bw = int(std::llround(femur_hw * (1.0 + 0.6 * toward)));
            for (int x = std::max(0, xj - bw); x <= std::min(half - 1, xj + bw); ++x)
                paint(x, y, kFemur);
        } else {
            const int bw = int(std::llround(tibia_hw * (1.0 + 0.3 * toward)));
            for (int x = std::max(0, xj - bw); x <= std::min(half - 1, xj + bw); ++x)
                paint(x, y, kTibia);
            for (int x = std::max(0, fib_cx - fib_hw); x <= std::min(half - 1, fib_cx + fib_hw);
                 ++x)
                paint(x, y, kFibula);
        }
    }
    for (int y = pat_cy - pat_ry; y <= pat_cy + pat_ry; ++y) {
        if (y < 0 || y >= height || (y >= gap_top && y < gap_bot)) continue;
        const double dy = double(y - pat_cy) / pat_ry;
        const int span = int(std::floor(pat_rx * std::sqrt(std::max(0.0, 1.0 - dy * dy))));
        for (int x = xj - span; x <= xj + span; ++x) paint(x, y, kPatella);
    }

    // Mirror into the right half, then add independent pixel noise.
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < half; ++x) img.at(width - 1 - x, y) = img.at(x, y);

    if (noise_sd > 0.0) {
        Rng rng(seed);
        for (std::uint16_t& px : img.pixels()) {
            const long long v = std::llround(double(px) + noise_sd * rng.gaussian());
            px = std::uint16_t(std::clamp<long long>(v, 0, 255));
        }
    }

    const int side = int(std::llround(height / 3.5));
    BoxPx left_box{xj - side / 2, yj - side / 2, side, side};
    left_box = clip_to_image(left_box, half, height);
    Annotation ann;
    ann.left_box = left_box;
    ann.right_box = mirror_horizontal(left_box, width);
    return {std::move(img), std::move(ann)};
}

} // namespace kneeloc
