#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "kneeloc/detector.hpp"
#include "kneeloc/hog.hpp"
#include "kneeloc/linsvm.hpp"
#include "kneeloc/proposer.hpp"

namespace kneeloc {

struct TrainsetOptions {
    double pos_iou = 0.8;
    bool augment = true;

    friend bool operator==(const TrainsetOptions&, const TrainsetOptions&) = default;
};

/// Everything a pipeline run needs; serializes to a single JSON document.
/// threads == 0 means use all hardware threads.
struct RunConfig {
    ProposerConfig proposer;
    HogConfig hog;
    TrainOptions svm;
    TrainsetOptions trainset;
    int threads = 0;

    void validate() const {
        proposer.validate();
        hog.validate();
        if (threads < 0) throw ContractError("RunConfig: threads must be >= 0");
        if (!(trainset.pos_iou > 0.0 && trainset.pos_iou <= 1.0))
            throw ContractError("RunConfig: trainset.pos_iou must be in (0, 1]");
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace config_detail {

using nlohmann::ordered_json;

template <typename T>
void maybe_get(const ordered_json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

} // namespace config_detail

inline void to_json(nlohmann::ordered_json& j, const ProposerConfig& c) {
    j = nlohmann::ordered_json{{"alpha_frac", c.alpha_frac},
                               {"smooth_window", c.smooth_window},
                               {"peak_stride", c.peak_stride},
                               {"top_percent", c.top_percent},
                               {"x_step", c.x_step},
                               {"x_range_frac", c.x_range_frac},
                               {"scales", c.scales},
                               {"rank_by", c.rank_by == RankBy::Value ? "value" : "position"}};
}

inline void from_json(const nlohmann::ordered_json& j, ProposerConfig& c) {
    using config_detail::maybe_get;
    maybe_get(j, "alpha_frac", c.alpha_frac);
    maybe_get(j, "smooth_window", c.smooth_window);
    maybe_get(j, "peak_stride", c.peak_stride);
    maybe_get(j, "top_percent", c.top_percent);
    maybe_get(j, "x_step", c.x_step);
    maybe_get(j, "x_range_frac", c.x_range_frac);
    maybe_get(j, "scales", c.scales);
    if (auto it = j.find("rank_by"); it != j.end()) {
        const std::string v = it->get<std::string>();
        if (v == "value")
            c.rank_by = RankBy::Value;
        else if (v == "position")
            c.rank_by = RankBy::Position;
        else
            throw ContractError("ProposerConfig: rank_by must be 'value' or 'position'");
    }
}

inline void to_json(nlohmann::ordered_json& j, const HogConfig& c) {
    j = nlohmann::ordered_json{{"patch", c.patch},
                               {"cell", c.cell},
                               {"block", c.block},
                               {"block_stride", c.block_stride},
                               {"bins", c.bins},
                               {"signed", c.signed_gradients},
                               {"norm", c.norm == BlockNorm::L2 ? "l2" : "l2hys"}};
}

inline void from_json(const nlohmann::ordered_json& j, HogConfig& c) {
    using config_detail::maybe_get;
    maybe_get(j, "patch", c.patch);
    maybe_get(j, "cell", c.cell);
    maybe_get(j, "block", c.block);
    maybe_get(j, "block_stride", c.block_stride);
    maybe_get(j, "bins", c.bins);
    maybe_get(j, "signed", c.signed_gradients);
    if (auto it = j.find("norm"); it != j.end()) {
        const std::string v = it->get<std::string>();
        if (v == "l2")
            c.norm = BlockNorm::L2;
        else if (v == "l2hys")
            c.norm = BlockNorm::L2Hys;
        else
            throw ContractError("HogConfig: norm must be 'l2' or 'l2hys'");
    }
}

inline void to_json(nlohmann::ordered_json& j, const TrainOptions& c) {
    j = nlohmann::ordered_json{{"c_reg", c.c_reg},
                               {"tol", c.tol},
                               {"max_epochs", c.max_epochs},
                               {"seed", c.seed},
                               {"loss", c.loss == HingeLoss::L1 ? "l1" : "l2"}};
}

inline void from_json(const nlohmann::ordered_json& j, TrainOptions& c) {
    using config_detail::maybe_get;
    maybe_get(j, "c_reg", c.c_reg);
    maybe_get(j, "tol", c.tol);
    maybe_get(j, "max_epochs", c.max_epochs);
    maybe_get(j, "seed", c.seed);
    if (auto it = j.find("loss"); it != j.end()) {
        const std::string v = it->get<std::string>();
        if (v == "l1")
            c.loss = HingeLoss::L1;
        else if (v == "l2")
            c.loss = HingeLoss::L2;
        else
            throw ContractError("TrainOptions: loss must be 'l1' or 'l2'");
    }
}

inline void to_json(nlohmann::ordered_json& j, const TrainsetOptions& c) {
    j = nlohmann::ordered_json{{"pos_iou", c.pos_iou}, {"augment", c.augment}};
}

inline void from_json(const nlohmann::ordered_json& j, TrainsetOptions& c) {
    using config_detail::maybe_get;
    maybe_get(j, "pos_iou", c.pos_iou);
    maybe_get(j, "augment", c.augment);
}

inline void to_json(nlohmann::ordered_json& j, const RunConfig& c) {
    j = nlohmann::ordered_json{{"proposer", c.proposer},
                               {"hog", c.hog},
                               {"svm", c.svm},
                               {"trainset", c.trainset},
                               {"threads", c.threads}};
}

inline void from_json(const nlohmann::ordered_json& j, RunConfig& c) {
    using config_detail::maybe_get;
    maybe_get(j, "proposer", c.proposer);
    maybe_get(j, "hog", c.hog);
    maybe_get(j, "svm", c.svm);
    maybe_get(j, "trainset", c.trainset);
    maybe_get(j, "threads", c.threads);
}

/// Pretty-printed JSON for --dump-config and config files.
inline std::string dump_config(const RunConfig& cfg) {
    nlohmann::ordered_json j = cfg;
    return j.dump(2) + "\n";
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    try {
        cfg = j.get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

} // namespace kneeloc
