#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kneeloc/errors.hpp"
#include "kneeloc/rng.hpp"

namespace kneeloc {

/// Trained linear scorer: raw decision value is weights . x + bias.
struct SvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    double c_reg = 0.01;

    int dim() const { return int(weights.size()); }

    friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

/// Dense row-major feature matrix with +-1 labels. Features are stored as
/// float; descriptor values are in [0,1] so nothing of consequence is lost
/// and large training sets stay affordable.
struct TrainSet {
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::vector<float> features; // rows * dim
    std::vector<std::int8_t> labels;

    explicit TrainSet(std::size_t dim_ = 0) : dim(dim_) {}

    void add_row(std::span<const double> feat, int label) {
        if (feat.size() != dim) throw ContractError("TrainSet: feature dimension mismatch");
        if (label != 1 && label != -1) throw ContractError("TrainSet: label must be +1 or -1");
        for (double v : feat) features.push_back(float(v));
        labels.push_back(std::int8_t(label));
        ++rows;
    }

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(features).subspan(i * dim, dim);
    }
};

enum class HingeLoss { L1, L2 };

struct TrainOptions {
    double c_reg = 0.01;
    double tol = 1e-3;
    int max_epochs = 1000;
    std::uint64_t seed = 1;
    HingeLoss loss = HingeLoss::L1;

    friend bool operator==(const TrainOptions&, const TrainOptions&) = default;
};

struct TrainResult {
    SvmModel model;
    std::vector<double> alpha;  ///< dual variables at termination
    double dual_objective = 0;  ///< sum(alpha) - 0.5*|w|^2 (maximization form)
    double primal_objective = 0;
    int epochs = 0;
    bool converged = false;
};

namespace svm_detail {

inline double dot_aug(std::span<const double> w, std::span<const float> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
    return s + w[x.size()]; // implicit constant-1 bias coordinate
}

} // namespace svm_detail

/// Dual coordinate descent for the L2-regularized hinge-loss linear SVM
/// (the classic LIBLINEAR dual solver). The bias is handled by augmenting
/// every sample with a constant 1 coordinate, so it is regularized like any
/// weight. One dual variable is updated at a time in a seeded random
/// permutation per epoch; training stops when the largest projected
/// gradient violation over an epoch drops below tol.
inline TrainResult train(const TrainSet& data, const TrainOptions& opt = {}) {
    if (data.rows < 2) throw ContractError("train: need at least 2 samples");
    if (data.dim < 1) throw ContractError("train: need at least 1 feature");
    if (!(opt.c_reg > 0)) throw ContractError("train: c_reg must be positive");
    if (!(opt.tol > 0)) throw ContractError("train: tol must be positive");
    bool has_pos = false, has_neg = false;
    for (std::int8_t y : data.labels) (y > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw ContractError("train: both classes must be present");
    for (float v : data.features)
        if (!std::isfinite(v)) throw ContractError("train: non-finite feature value");

    const std::size_t n = data.rows;
    const double diag = opt.loss == HingeLoss::L2 ? 1.0 / (2.0 * opt.c_reg) : 0.0;
    const double upper =
        opt.loss == HingeLoss::L2 ? std::numeric_limits<double>::infinity() : opt.c_reg;

    // Per-sample squared norms of the augmented features.
    std::vector<double> qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0;
        for (float v : data.row(i)) s += double(v) * v;
        qii[i] = s + diag;
    }

    std::vector<double> w(data.dim + 1, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = std::uint32_t(i);

    Rng rng(opt.seed);
    int epoch = 0;
    bool converged = false;
    for (; epoch < opt.max_epochs && !converged; ++epoch) {
        shuffle(order, rng);
        double max_violation = 0.0;
        for (std::uint32_t i : order) {
            const auto x = data.row(i);
            const double y = data.labels[i];
            const double g = y * svm_detail::dot_aug(w, x) - 1.0 + diag * alpha[i];

            double pg = g;
            if (alpha[i] <= 0.0)
                pg = std::min(g, 0.0);
            else if (alpha[i] >= upper)
                pg = std::max(g, 0.0);
            max_violation = std::max(max_violation, std::abs(pg));
            if (std::abs(pg) < 1e-12) continue;

            const double a_old = alpha[i];
            const double a_new = std::clamp(a_old - g / qii[i], 0.0, upper);
            const double delta = (a_new - a_old) * y;
            if (delta != 0.0) {
                for (std::size_t j = 0; j < x.size(); ++j) w[j] += delta * x[j];
                w[data.dim] += delta;
                alpha[i] = a_new;
            }
        }
        if (max_violation < opt.tol) converged = true;
    }

    double wnorm2 = 0.0;
    for (double v : w) wnorm2 += v * v;
    double asum = 0.0, asq = 0.0;
    for (double a : alpha) {
        asum += a;
        asq += a * a;
    }
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = std::max(0.0, 1.0 - data.labels[i] * svm_detail::dot_aug(w, data.row(i)));
        hinge += opt.loss == HingeLoss::L2 ? m * m : m;
    }

    TrainResult r;
    r.model.weights.assign(w.begin(), w.end() - 1);
    r.model.bias = w[data.dim];
    r.model.c_reg = opt.c_reg;
    r.alpha = std::move(alpha);
    r.dual_objective = asum - 0.5 * wnorm2 - diag * 0.5 * asq;
    r.primal_objective = 0.5 * wnorm2 + opt.c_reg * hinge;
    r.epochs = epoch;
    r.converged = converged;
    return r;
}

/// Raw margin w . x + bias.
inline double score(const SvmModel& model, std::span<const double> feat) {
    if (int(feat.size()) != model.dim())
        throw ContractError("score: feature dimension " + std::to_string(feat.size()) +
                            " does not match model dimension " + std::to_string(model.dim()));
    double s = model.bias;
    for (std::size_t j = 0; j < feat.size(); ++j) s += model.weights[j] * feat[j];
    return s;
}

namespace svm_detail {

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v); // shortest round-trip form
    return std::string(buf, end);
}

inline double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw DecodeError(std::string("svm model: bad ") + what + " value '" + std::string(s) +
                          "'");
    return v;
}

} // namespace svm_detail

/// ASCII model file: a header line "KNEELOC-SVM v1 dim=<d> c=<c>" followed
/// by the bias and then d weights, one shortest-round-trip decimal per
/// line. load(save(m)) == m bit-exactly.
inline std::string save(const SvmModel& model) {
    std::string out = "KNEELOC-SVM v1 dim=" + std::to_string(model.dim()) +
                      " c=" + svm_detail::format_double(model.c_reg) + "\n";
    out += svm_detail::format_double(model.bias);
    out += '\n';
    for (double v : model.weights) {
        out += svm_detail::format_double(v);
        out += '\n';
    }
    return out;
}

inline SvmModel load(std::string_view bytes) {
    auto next_line = [&bytes]() -> std::string_view {
        if (bytes.empty()) throw DecodeError("svm model: truncated file");
        std::size_t nl = bytes.find('\n');
        std::string_view line = bytes.substr(0, nl);
        bytes = nl == std::string_view::npos ? std::string_view{} : bytes.substr(nl + 1);
        return line;
    };

    std::string_view header = next_line();
    constexpr std::string_view magic = "KNEELOC-SVM ";
    if (header.substr(0, magic.size()) != magic)
        throw DecodeError("svm model: bad magic header");
    header.remove_prefix(magic.size());
    constexpr std::string_view version = "v1 ";
    if (header.substr(0, version.size()) != version)
        throw DecodeError("svm model: unsupported version '" +
                          std::string(header.substr(0, header.find(' '))) + "'");
    header.remove_prefix(version.size());
    constexpr std::string_view dim_key = "dim=";
    if (header.substr(0, dim_key.size()) != dim_key)
        throw DecodeError("svm model: missing dim field");
    header.remove_prefix(dim_key.size());
    std::size_t sp = header.find(' ');
    if (sp == std::string_view::npos) throw DecodeError("svm model: missing c field");
    long dim = 0;
    {
        std::string_view d = header.substr(0, sp);
        auto [p, ec] = std::from_chars(d.data(), d.data() + d.size(), dim);
        if (ec != std::errc{} || p != d.data() + d.size() || dim < 1)
            throw DecodeError("svm model: bad dim value");
    }
    header.remove_prefix(sp + 1);
    constexpr std::string_view c_key = "c=";
    if (header.substr(0, c_key.size()) != c_key)
        throw DecodeError("svm model: missing c field");
    header.remove_prefix(c_key.size());

    SvmModel m;
    m.c_reg = svm_detail::parse_double(header, "c_reg");
    m.bias = svm_detail::parse_double(next_line(), "bias");
    m.weights.resize(std::size_t(dim));
    for (long i = 0; i < dim; ++i) {
        if (bytes.empty())
            throw DecodeError("svm model: expected " + std::to_string(dim) + " weights, got " +
                              std::to_string(i));
        m.weights[std::size_t(i)] = svm_detail::parse_double(next_line(), "weight");
    }
    if (!bytes.empty() && bytes != "\n")
        throw DecodeError("svm model: trailing data after " + std::to_string(dim) + " weights");
    return m;
}

} // namespace kneeloc
