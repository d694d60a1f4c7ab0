#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kneeloc/detector.hpp"
#include "kneeloc/image_io.hpp"
#include "kneeloc/transforms.hpp"

namespace kneeloc {

namespace format_detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json box_to_json(const BoxPx& b) {
    return ordered_json::array({b.x, b.y, b.w, b.h});
}

inline BoxPx box_from_json(const ordered_json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4)
        throw DecodeError(what + " must be a [x,y,w,h] array");
    BoxPx b{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
    if (!b.valid()) throw DecodeError(what + " must have positive width and height");
    return b;
}

template <typename Fn>
void for_each_jsonl_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DecodeError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            fn(j);
        } catch (const nlohmann::json::exception& e) {
            throw DecodeError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DecodeError& e) {
            throw DecodeError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

} // namespace format_detail

/// One JSON object per line: {"image": "<id>", "left": [x,y,w,h], "right": [x,y,w,h]}.
inline std::string annotations_to_jsonl(const std::vector<Annotation>& annotations) {
    std::string out;
    for (const Annotation& a : annotations) {
        format_detail::ordered_json j;
        j["image"] = a.image_id;
        j["left"] = format_detail::box_to_json(a.left_box);
        j["right"] = format_detail::box_to_json(a.right_box);
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline std::vector<Annotation> read_annotations_jsonl(const std::filesystem::path& path) {
    std::vector<Annotation> out;
    format_detail::for_each_jsonl_line(path, [&out](const format_detail::ordered_json& j) {
        Annotation a;
        a.image_id = j.at("image").get<std::string>();
        a.left_box = format_detail::box_from_json(j.at("left"), "left");
        a.right_box = format_detail::box_from_json(j.at("right"), "right");
        out.push_back(std::move(a));
    });
    return out;
}

/// Annotation shape plus left_score, right_score and ms.
inline std::string detections_to_jsonl(const std::vector<Detection>& detections) {
    std::string out;
    for (const Detection& d : detections) {
        format_detail::ordered_json j;
        j["image"] = d.image_id;
        j["left"] = format_detail::box_to_json(d.left.box);
        j["right"] = format_detail::box_to_json(d.right.box);
        j["left_score"] = d.left.score;
        j["right_score"] = d.right.score;
        j["ms"] = d.elapsed_ms;
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path) {
    std::vector<Detection> out;
    format_detail::for_each_jsonl_line(path, [&out](const format_detail::ordered_json& j) {
        Detection d;
        d.image_id = j.at("image").get<std::string>();
        d.left.box = format_detail::box_from_json(j.at("left"), "left");
        d.right.box = format_detail::box_from_json(j.at("right"), "right");
        d.left.score = j.at("left_score").get<double>();
        d.right.score = j.at("right_score").get<double>();
        d.elapsed_ms = j.at("ms").get<double>();
        out.push_back(std::move(d));
    });
    return out;
}

/// RFC-4180 field quoting: fields with commas, quotes or newlines are
/// wrapped in double quotes with embedded quotes doubled.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string format_fixed(double v, int digits) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

/// Summary CSV: one header row naming the thresholds, one data row.
inline std::string eval_report_to_csv(const EvalReport& rep) {
    std::string header = "mean_iou,mean_ms";
    std::string row = format_fixed(rep.mean_iou, 4) + "," + format_fixed(rep.mean_ms, 3);
    for (const auto& [t, recall] : rep.recall_at) {
        header += ",recall@" + format_fixed(t, 2);
        row += "," + format_fixed(recall, 4);
    }
    return header + "\r\n" + row + "\r\n";
}

/// Long-format sweep CSV: one row per (p, threshold) pair.
inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "p,iou_threshold,recall\r\n";
    for (const SweepRow& r : rows)
        out += std::to_string(r.p) + "," + format_fixed(r.threshold, 2) + "," +
               format_fixed(r.recall, 4) + "\r\n";
    return out;
}

/// Load every annotated image from a directory, keyed by the annotation's
/// image id. 16-bit sources are normalized to 8-bit on load. Annotations
/// whose image is missing or unreadable fail as a group, listing the ids.
inline std::vector<AnnotatedImage> load_corpus(const std::filesystem::path& images_dir,
                                               const std::vector<Annotation>& annotations,
                                               bool normalize = true) {
    std::vector<AnnotatedImage> corpus;
    std::string missing;
    for (const Annotation& a : annotations) {
        const std::filesystem::path p = images_dir / a.image_id;
        if (!std::filesystem::exists(p)) {
            missing += (missing.empty() ? "" : ", ") + a.image_id;
            continue;
        }
        GrayImage img = load_image(p);
        if (normalize && img.depth() == BitDepth::Sixteen) img = normalize_to_8bit(img);
        corpus.push_back(AnnotatedImage{std::move(img), a});
    }
    if (!missing.empty())
        throw IoError("annotations reference missing images: " + missing);
    return corpus;
}

} // namespace kneeloc
