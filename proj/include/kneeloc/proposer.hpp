#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "kneeloc/image.hpp"

namespace kneeloc {

/// How the top-percent response indices are ordered before taking every
/// k-th: by response value (default) or by row position.
enum class RankBy { Value, Position };

/// All knobs of the proposal generator. Defaults are the tuned values for
/// conventional radiographs.
struct ProposerConfig {
    double alpha_frac = 0.1;     ///< top/bottom margin as a fraction of image height
    int smooth_window = 11;      ///< moving-average width, odd
    int peak_stride = 10;        ///< keep every k-th of the ranked candidates
    double top_percent = 10.0;   ///< share of response rows entering the ranking
    int x_step = 95;             ///< horizontal displacement step in pixels
    double x_range_frac = 0.25;  ///< displacement range +-frac*width around the centre
    std::vector<double> scales = {3.0, 3.2, 3.4, 3.6, 3.8, 4.0, 5.0};
    RankBy rank_by = RankBy::Value;

    void validate() const {
        if (!(alpha_frac >= 0.0 && alpha_frac < 0.5))
            throw ContractError("ProposerConfig: alpha_frac must be in [0, 0.5)");
        if (smooth_window < 1 || smooth_window % 2 == 0)
            throw ContractError("ProposerConfig: smooth_window must be odd and >= 1");
        if (peak_stride < 1) throw ContractError("ProposerConfig: peak_stride must be >= 1");
        if (!(top_percent > 0.0 && top_percent <= 100.0))
            throw ContractError("ProposerConfig: top_percent must be in (0, 100]");
        if (x_step < 1) throw ContractError("ProposerConfig: x_step must be >= 1");
        if (!(x_range_frac > 0.0 && x_range_frac <= 0.5))
            throw ContractError("ProposerConfig: x_range_frac must be in (0, 0.5]");
        if (scales.empty()) throw ContractError("ProposerConfig: scales must be non-empty");
        for (double z : scales)
            if (!(z > 1.0)) throw ContractError("ProposerConfig: every scale must be > 1");
    }

    friend bool operator==(const ProposerConfig&, const ProposerConfig&) = default;
};

/// A candidate joint region: a square of the given side centred at
/// (center_x, center_y), produced at scale = height/side.
struct Proposal {
    BoxPx box;
    int center_x = 0;
    int center_y = 0;
    int side = 0;
    double scale = 0.0;
};

inline int margin_px(double alpha_frac, int height) {
    return int(std::llround(alpha_frac * height));
}

/// Vertical marginal intensity profile: for each row in [alpha, H-alpha),
/// the sum of intensities over the central third of columns. The profile
/// peaks change sharply around the joint space and patella.
inline std::vector<double> marginal_profile(const GrayImage& img, double alpha_frac) {
    const int h = img.height(), c = img.width();
    const int alpha = margin_px(alpha_frac, h);
    const int len = h - 2 * alpha;
    if (len < 3)
        throw ContractError("degenerate profile: image of height " + std::to_string(h) +
                            " too short for margin " + std::to_string(alpha));
    const int j0 = c / 3, j1 = (2 * c) / 3; // central third [j0, j1)
    std::vector<double> profile(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        double sum = 0.0;
        for (int j = j0; j < j1; ++j) sum += img.at(j, i + alpha);
        profile[std::size_t(i)] = sum;
    }
    return profile;
}

/// Absolute smoothed forward difference of the profile: |d * w| where
/// d[i] = profile[i+1]-profile[i] and w is a boxcar of width smooth_window,
/// convolved in "same" mode with zero padding. Output length is the
/// difference length (profile length - 1).
inline std::vector<double> peak_response(const std::vector<double>& profile, int smooth_window) {
    if (smooth_window < 1 || smooth_window % 2 == 0)
        throw ContractError("peak_response: smooth_window must be odd and >= 1");
    if ((int)profile.size() < smooth_window + 2)
        throw ContractError("degenerate profile: length " + std::to_string(profile.size()) +
                            " shorter than smooth_window + 2");
    const int m = int(profile.size()) - 1;
    std::vector<double> diff(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        diff[std::size_t(i)] = profile[std::size_t(i) + 1] - profile[std::size_t(i)];

    const int half = smooth_window / 2;
    const double inv = 1.0 / smooth_window;
    std::vector<double> out(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        int lo = std::max(0, i - half), hi = std::min(m - 1, i + half);
        for (int j = lo; j <= hi; ++j) acc += diff[std::size_t(j)];
        out[std::size_t(i)] = std::abs(acc * inv);
    }
    return out;
}

/// Pick Y-coordinates from the response: rank rows, keep the top
/// round(top_percent%) of them, take every peak_stride-th of that list and
/// shift by the margin. Value ranking returns rows in descending-response
/// order; position ranking sorts the kept rows by index first.
inline std::vector<int> select_y_candidates(const std::vector<double>& response,
                                            double top_percent, int peak_stride, int alpha,
                                            RankBy rank_by = RankBy::Value) {
    if (response.empty()) throw ContractError("select_y_candidates: empty response");
    const int n = int(response.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (response[std::size_t(a)] != response[std::size_t(b)])
            return response[std::size_t(a)] > response[std::size_t(b)];
        return a < b;
    });

    const long long r = std::llround(0.01 * top_percent * n);
    if (r == 0) return {order[0] + alpha}; // degenerate: fall back to the argmax

    std::vector<int> top(order.begin(), order.begin() + std::size_t(r));
    if (rank_by == RankBy::Position) std::sort(top.begin(), top.end());

    std::vector<int> picked;
    for (std::size_t i = 0; i < top.size(); i += std::size_t(peak_stride))
        picked.push_back(top[i] + alpha);
    return picked;
}

/// X-coordinates: floor(width/2) + j for j = d1, d1+step, ..., <= d2 with
/// d1 = -round(range_frac*width), d2 = +round(range_frac*width). Values are
/// clipped into [0, width-1]; the count never changes under clipping.
inline std::vector<int> x_grid(int width, int x_step, double x_range_frac) {
    if (width < 4) throw ContractError("x_grid: width must be >= 4");
    const int d = int(std::llround(x_range_frac * width));
    std::vector<int> xs;
    for (int j = -d; j <= d; j += x_step)
        xs.push_back(std::clamp(width / 2 + j, 0, width - 1));
    return xs;
}

/// Data-driven scale set: per annotation Z = image height / max(box side),
/// emitted as mean(Z) + m*sd(Z) for m in [-spread_steps, spread_steps],
/// filtered to values > 1. Collapses to {mean} when all Z are identical.
inline std::vector<double> estimate_scales(const std::vector<std::pair<BoxPx, int>>& annotations,
                                           int spread_steps) {
    if (annotations.size() < 2)
        throw ContractError("estimate_scales: need at least 2 annotations");
    std::vector<double> z;
    z.reserve(annotations.size());
    for (const auto& [box, height] : annotations) {
        if (!box.valid() || height < 1)
            throw ContractError("estimate_scales: invalid annotation");
        z.push_back(double(height) / std::max(box.w, box.h));
    }
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / double(z.size());
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / double(z.size() - 1)); // sample standard deviation

    if (sd == 0.0) return {mean};
    std::vector<double> grid;
    for (int m = -spread_steps; m <= spread_steps; ++m) {
        double v = mean + m * sd;
        if (v > 1.0) grid.push_back(v);
    }
    return grid;
}

/// Cartesian product of Y-candidates, X-grid and scales for one leg image.
/// Ordering is deterministic: Y rank major, then X ascending, then scale
/// ascending. Boxes may overhang the image; they are scored on zero-padded
/// crops and clipped only when reported.
inline std::vector<Proposal> generate(const GrayImage& img, const ProposerConfig& cfg) {
    cfg.validate();
    const int h = img.height(), c = img.width();
    const int alpha = margin_px(cfg.alpha_frac, h);

    std::vector<double> profile = marginal_profile(img, cfg.alpha_frac);
    std::vector<double> response = peak_response(profile, cfg.smooth_window);
    std::vector<int> ys =
        select_y_candidates(response, cfg.top_percent, cfg.peak_stride, alpha, cfg.rank_by);
    std::vector<int> xs = x_grid(c, cfg.x_step, cfg.x_range_frac);
    std::vector<double> zs = cfg.scales;
    std::sort(zs.begin(), zs.end());

    std::vector<Proposal> out;
    out.reserve(ys.size() * xs.size() * zs.size());
    for (int y : ys) {
        for (int x : xs) {
            for (double z : zs) {
                const int side = int(std::llround(h / z));
                out.push_back(Proposal{BoxPx{x - side / 2, y - side / 2, side, side},
                                       x, y, side, z});
            }
        }
    }
    return out;
}

/// Closed-form proposal count for an image of the given size; equals the
/// length of generate() on any valid image of that size.
inline long long predict_count(int height, int width, const ProposerConfig& cfg) {
    cfg.validate();
    const int alpha = margin_px(cfg.alpha_frac, height);
    const long long response_len = (long long)height - 2 * alpha - 1;
    const long long r = std::llround(0.01 * cfg.top_percent * double(response_len));
    const long long ny = r == 0 ? 1 : (r + cfg.peak_stride - 1) / cfg.peak_stride;
    const long long d = std::llround(cfg.x_range_frac * width);
    const long long nx = (2 * d) / cfg.x_step + 1;
    return (long long)cfg.scales.size() * ny * nx;
}

} // namespace kneeloc
