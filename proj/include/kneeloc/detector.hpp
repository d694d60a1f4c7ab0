#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kneeloc/hog.hpp"
#include "kneeloc/image.hpp"
#include "kneeloc/linsvm.hpp"
#include "kneeloc/proposer.hpp"
#include "kneeloc/transforms.hpp"

namespace kneeloc {

/// Ground-truth joint boxes for one bilateral image, full-image pixel
/// coordinates. "left"/"right" refer to the image halves.
struct Annotation {
    std::string image_id;
    BoxPx left_box;
    BoxPx right_box;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ScoredBox {
    BoxPx box;
    double score = 0.0;
};

/// Localization result for one bilateral image.
struct Detection {
    std::string image_id;
    ScoredBox left;
    ScoredBox right;
    double elapsed_ms = 0.0;
};

struct EvalReport {
    struct LegIou {
        std::string image_id;
        std::string side; // "left" or "right"
        double iou = 0.0;
    };
    std::vector<LegIou> per_leg;
    double mean_iou = 0.0;
    std::vector<std::pair<double, double>> recall_at; // threshold -> fraction, ascending
    double mean_ms = 0.0;
};

struct AnnotatedImage {
    GrayImage image;
    Annotation ann;
};

struct NamedImage {
    std::string id;
    GrayImage image;
};

/// Intersection over union (Jaccard index) of two pixel boxes, exact
/// integer area arithmetic. Zero when disjoint.
inline double iou(const BoxPx& a, const BoxPx& b) {
    if (!a.valid() || !b.valid()) throw ContractError("iou: boxes must have positive extent");
    const BoxPx i = intersect(a, b);
    const long long inter = i.area();
    const long long uni = a.area() + b.area() - inter;
    return double(inter) / double(uni);
}

/// Split a bilateral image at floor(width/2). The right half is mirrored so
/// both outputs present the same leg chirality to the scorer; the canonical
/// orientation is the one seen in unmirrored left halves.
inline std::pair<GrayImage, GrayImage> split_legs(const GrayImage& img) {
    if (img.width() < 4) throw ContractError("split_legs: image width must be >= 4");
    const int xm = img.width() / 2;
    GrayImage left = crop(img, BoxPx{0, 0, xm, img.height()});
    GrayImage right = crop(img, BoxPx{xm, 0, img.width() - xm, img.height()});
    return {std::move(left), flip_horizontal(right)};
}

/// Map an annotation's box for one side into that side's canonical leg
/// coordinates (right boxes are shifted into the half and mirrored).
inline BoxPx leg_local_box(const Annotation& ann, bool right_side, int image_width) {
    const int xm = image_width / 2;
    if (!right_side) return ann.left_box;
    BoxPx b = ann.right_box;
    b.x -= xm;
    return mirror_horizontal(b, image_width - xm);
}

/// Inverse of leg_local_box for detections on the mirrored right half.
inline BoxPx right_box_to_full(const BoxPx& b, int image_width) {
    const int xm = image_width / 2;
    BoxPx full = mirror_horizontal(b, image_width - xm);
    full.x += xm;
    return full;
}

/// Score every proposal with HoG + SVM and return the best box (clipped to
/// the leg bounds) with its raw margin. Ties go to the lowest proposal
/// index, which keeps batch results reproducible.
inline ScoredBox detect_leg(const GrayImage& leg, const SvmModel& model,
                            const ProposerConfig& pcfg, const HogConfig& hcfg) {
    if (model.dim() != hcfg.descriptor_length())
        throw ContractError("detect_leg: model dimension does not match HoG descriptor length");
    const std::vector<Proposal> proposals = generate(leg, pcfg);

    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        GrayImage patch = resize_region(leg, proposals[i].box, hcfg.patch, hcfg.patch);
        const double s = score(model, describe(patch, hcfg));
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return ScoredBox{clip_to_image(proposals[best].box, leg.width(), leg.height()), best_score};
}

/// Full pipeline for one bilateral image: split, canonicalize chirality,
/// localize each leg, and map the right result back into full-image
/// coordinates. Elapsed wall time covers the whole call (decode excluded).
inline Detection detect(const GrayImage& img, const SvmModel& model, const ProposerConfig& pcfg,
                        const HogConfig& hcfg, std::string image_id = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto [left, right] = split_legs(img);
    ScoredBox lres = detect_leg(left, model, pcfg, hcfg);
    ScoredBox rres = detect_leg(right, model, pcfg, hcfg);
    rres.box = right_box_to_full(rres.box, img.width());
    const auto t1 = std::chrono::steady_clock::now();

    Detection d;
    d.image_id = std::move(image_id);
    d.left = lres;
    d.right = rres;
    d.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return d;
}

/// Batch detection over a worker pool. Results are indexed by input order
/// and byte-identical to a sequential run apart from the timing fields;
/// per-image work shares only the read-only model and configs.
inline std::vector<Detection> detect_batch(const std::vector<NamedImage>& images,
                                           const SvmModel& model, const ProposerConfig& pcfg,
                                           const HogConfig& hcfg, int threads = 0) {
    if (threads < 0) throw ContractError("detect_batch: threads must be >= 0");
    std::size_t workers = threads == 0
                              ? std::max(1u, std::thread::hardware_concurrency())
                              : std::size_t(threads);
    workers = std::min(workers, images.size());

    std::vector<Detection> results(images.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < images.size(); ++i)
            results[i] = detect(images[i].image, model, pcfg, hcfg, images[i].id);
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= images.size()) return;
            try {
                results[i] = detect(images[i].image, model, pcfg, hcfg, images[i].id);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

/// Rotation augmentation applied to positive patches. The stated angles
/// exclude zero because the unrotated patch is already in the set.
struct AugmentSpec {
    bool enabled = true;
    std::vector<double> angles = {-2.0, -1.2, -0.4, 0.4, 1.2};
    double context_margin = 0.1; ///< extra context per side before rotating
};

struct TrainsetBuild {
    TrainSet set;
    std::size_t positives = 0; ///< unaugmented positive proposals
    std::size_t negatives = 0;
    std::size_t augmented = 0; ///< rotated copies added on top of positives
};

/// Build a labeled HoG feature set from annotated bilateral images: every
/// proposal on every canonicalized leg becomes one sample, positive when
/// its IoU with the annotation reaches pos_iou. Positives additionally
/// contribute one rotated copy per augmentation angle, rotated on a crop
/// with a small context margin and re-cropped to the proposal square.
inline TrainsetBuild build_trainset(const std::vector<AnnotatedImage>& corpus,
                                    const ProposerConfig& pcfg, const HogConfig& hcfg,
                                    double pos_iou = 0.8, const AugmentSpec& aug = {}) {
    if (!(pos_iou > 0.0 && pos_iou <= 1.0))
        throw ContractError("build_trainset: pos_iou must be in (0, 1]");
    TrainsetBuild out{TrainSet(std::size_t(hcfg.descriptor_length())), 0, 0, 0};

    for (const AnnotatedImage& item : corpus) {
        if (item.image.depth() != BitDepth::Eight)
            throw ContractError("build_trainset: images must be normalized to 8-bit first");
        auto [left, right] = split_legs(item.image);
        for (int side = 0; side < 2; ++side) {
            const GrayImage& leg = side == 0 ? left : right;
            const BoxPx truth = leg_local_box(item.ann, side == 1, item.image.width());
            if (!truth.valid())
                throw ContractError("build_trainset: empty annotation box for image '" +
                                    item.ann.image_id + "'");

            for (const Proposal& p : generate(leg, pcfg)) {
                const bool positive = iou(p.box, truth) >= pos_iou;
                GrayImage patch = resize_region(leg, p.box, hcfg.patch, hcfg.patch);
                out.set.add_row(describe(patch, hcfg), positive ? 1 : -1);
                (positive ? out.positives : out.negatives)++;

                if (positive && aug.enabled) {
                    const int m = int(std::llround(aug.context_margin * p.side));
                    GrayImage context = crop(
                        leg, BoxPx{p.box.x - m, p.box.y - m, p.side + 2 * m, p.side + 2 * m});
                    for (double angle : aug.angles) {
                        GrayImage rotated = rotate_about_center(context, angle);
                        GrayImage inner = crop(rotated, BoxPx{m, m, p.side, p.side});
                        out.set.add_row(
                            describe(resize_bilinear(inner, hcfg.patch, hcfg.patch), hcfg), 1);
                        ++out.augmented;
                    }
                }
            }
        }
    }
    return out;
}

/// Per-leg IoU, mean IoU, recall at each threshold and mean per-image time.
/// Every detection must have an annotation with the same image id.
inline EvalReport evaluate(const std::vector<Detection>& detections,
                           const std::vector<Annotation>& annotations,
                           std::vector<double> thresholds) {
    std::map<std::string, const Annotation*> by_id;
    for (const Annotation& a : annotations) by_id[a.image_id] = &a;

    std::string missing;
    for (const Detection& d : detections)
        if (!by_id.count(d.image_id)) missing += (missing.empty() ? "" : ", ") + d.image_id;
    if (!missing.empty())
        throw ContractError("evaluate: detections without annotations: " + missing);

    EvalReport rep;
    double iou_sum = 0.0, ms_sum = 0.0;
    for (const Detection& d : detections) {
        const Annotation& a = *by_id.at(d.image_id);
        const double li = iou(d.left.box, a.left_box);
        const double ri = iou(d.right.box, a.right_box);
        rep.per_leg.push_back({d.image_id, "left", li});
        rep.per_leg.push_back({d.image_id, "right", ri});
        iou_sum += li + ri;
        ms_sum += d.elapsed_ms;
    }
    const std::size_t legs = rep.per_leg.size();
    rep.mean_iou = legs ? iou_sum / double(legs) : 0.0;
    rep.mean_ms = detections.empty() ? 0.0 : ms_sum / double(detections.size());

    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    for (double t : thresholds) {
        std::size_t hit = 0;
        for (const auto& leg : rep.per_leg)
            if (leg.iou >= t) ++hit;
        rep.recall_at.emplace_back(t, legs ? double(hit) / double(legs) : 0.0);
    }
    return rep;
}

struct SweepRow {
    int p = 0;
    double threshold = 0.0;
    double recall = 0.0;
};

/// Proposal-quality sweep: for every displacement step p and IoU threshold,
/// the fraction of legs whose best proposal reaches the threshold. The
/// best-proposal IoU measures the generator alone, before any scoring.
inline std::vector<SweepRow> proposal_recall_sweep(const std::vector<AnnotatedImage>& corpus,
                                                   const ProposerConfig& base,
                                                   const std::vector<int>& p_values,
                                                   const std::vector<double>& thresholds) {
    std::vector<SweepRow> rows;
    for (int p : p_values) {
        ProposerConfig cfg = base;
        cfg.x_step = p;
        std::vector<double> best_ious;
        for (const AnnotatedImage& item : corpus) {
            auto [left, right] = split_legs(item.image);
            for (int side = 0; side < 2; ++side) {
                const GrayImage& leg = side == 0 ? left : right;
                const BoxPx truth = leg_local_box(item.ann, side == 1, item.image.width());
                double best = 0.0;
                for (const Proposal& prop : generate(leg, cfg))
                    best = std::max(best, iou(prop.box, truth));
                best_ious.push_back(best);
            }
        }
        for (double t : thresholds) {
            std::size_t hit = 0;
            for (double b : best_ious)
                if (b >= t) ++hit;
            rows.push_back(
                {p, t, best_ious.empty() ? 0.0 : double(hit) / double(best_ious.size())});
        }
    }
    return rows;
}

} // namespace kneeloc
