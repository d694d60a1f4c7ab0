// kneeloc command line: synthetic data generation, training, detection,
// evaluation, proposal sweeps and throughput benchmarks.
//
// Exit codes: 0 success, 1 contract/usage error, 2 partial data failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kneeloc/kneeloc.hpp"

namespace fs = std::filesystem;
using namespace kneeloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        for (char& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".png" || ext == ".pgm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return files;
}

GrayImage load_normalized(const fs::path& path) {
    GrayImage img = load_image(path);
    if (img.depth() == BitDepth::Sixteen) img = normalize_to_8bit(img);
    return img;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out << text;
    if (!out) throw IoError("write failed on " + path.string());
}

int resolve_threads(const std::optional<int>& flag, int config_threads) {
    if (flag) return *flag;
    if (const char* env = std::getenv("KNEELOC_THREADS")) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
            throw ContractError(std::string("KNEELOC_THREADS is not an integer: ") + env);
        }
    }
    return config_threads;
}

struct SizeSpec {
    int w = 2400;
    int h = 2000;
};

SizeSpec parse_size(const std::string& s) {
    const std::size_t x = s.find('x');
    if (x == std::string::npos) throw ContractError("--size must look like WxH, e.g. 2400x2000");
    try {
        SizeSpec spec{std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
        if (spec.w < 8 || spec.h < 8) throw ContractError("--size dimensions too small");
        return spec;
    } catch (const ContractError&) {
        throw;
    } catch (const std::exception&) {
        throw ContractError("--size must look like WxH, e.g. 2400x2000");
    }
}

int cmd_synth(const std::string& out_dir, int count, std::uint64_t seed,
              const std::string& size_str, double noise_sd) {
    const SizeSpec size = parse_size(size_str);
    fs::create_directories(out_dir);

    std::vector<Annotation> annotations;
    Rng master(seed);
    for (int i = 0; i < count; ++i) {
        Rng r = master.fork(std::uint64_t(i));
        const double jy = r.uniform(0.38, 0.62);
        const double jx = r.uniform(0.47, 0.53);
        auto [img, ann] = synth_phantom(r.next(), size.w, size.h, jy, jx, 0, noise_sd);

        char name[32];
        std::snprintf(name, sizeof name, "phantom_%03d.png", i);
        ann.image_id = name;
        save_png(fs::path(out_dir) / name, img);
        annotations.push_back(ann);
        std::cout << name << "  joint_y=" << format_fixed(jy, 3)
                  << " joint_x=" << format_fixed(jx, 3) << "\n";
    }
    write_text(fs::path(out_dir) / "annotations.jsonl", annotations_to_jsonl(annotations));
    std::cout << count << " phantom images + annotations.jsonl written to " << out_dir << "\n";
    return kExitOk;
}

int cmd_train(const std::string& images_dir, const std::string& annotations_file,
              const std::string& config_file, const std::string& model_out) {
    const RunConfig cfg = load_config(config_file);
    const std::vector<Annotation> annotations = read_annotations_jsonl(annotations_file);
    const std::vector<AnnotatedImage> corpus = load_corpus(images_dir, annotations);

    AugmentSpec aug;
    aug.enabled = cfg.trainset.augment;
    TrainsetBuild build =
        build_trainset(corpus, cfg.proposer, cfg.hog, cfg.trainset.pos_iou, aug);
    if (build.positives == 0) {
        std::cerr << "error: zero positive proposals at pos_iou=" << cfg.trainset.pos_iou
                  << "; the proposal grid never overlaps the annotations closely enough "
                     "(lower trainset.pos_iou or densify the proposer)\n";
        return kExitUsage;
    }

    std::cout << "trainset: " << build.set.rows << " samples (" << build.positives
              << " positives, " << build.negatives << " negatives, " << build.augmented
              << " augmented";
    if (build.positives > 0 && build.augmented > 0)
        std::cout << "; " << (build.positives + build.augmented) / build.positives
                  << "x factor on positives";
    std::cout << ")\n";

    const TrainResult result = train(build.set, cfg.svm);
    std::cout << "svm: dual objective " << result.dual_objective << ", " << result.epochs
              << " epochs, " << (result.converged ? "converged" : "epoch limit reached") << "\n";

    write_text(model_out, save(result.model));
    std::cout << "model written to " << model_out << "\n";
    return kExitOk;
}

int cmd_detect(const std::string& images_dir, const std::string& model_file,
               const std::string& config_file, const std::string& out_file,
               const std::optional<int>& threads_flag) {
    const RunConfig cfg = load_config(config_file);
    std::ifstream min(model_file);
    if (!min) throw IoError("cannot open model " + model_file);
    const SvmModel model =
        load(std::string((std::istreambuf_iterator<char>(min)), std::istreambuf_iterator<char>()));
    const int threads = resolve_threads(threads_flag, cfg.threads);

    bool partial = false;
    std::vector<NamedImage> images;
    for (const fs::path& p : list_images(images_dir)) {
        try {
            images.push_back(NamedImage{p.filename().string(), load_normalized(p)});
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << p.filename().string() << ": " << e.what()
                      << "\n";
            partial = true;
        }
    }

    const std::vector<Detection> detections =
        detect_batch(images, model, cfg.proposer, cfg.hog, threads);
    write_text(out_file, detections_to_jsonl(detections));

    double ms = 0.0;
    for (const Detection& d : detections) ms += d.elapsed_ms;
    std::cout << detections.size() << " detections written to " << out_file;
    if (!detections.empty())
        std::cout << " (mean " << format_fixed(ms / double(detections.size()), 2)
                  << " ms/image)";
    std::cout << "\n";
    return partial ? kExitPartial : kExitOk;
}

int cmd_evaluate(const std::string& detections_file, const std::string& annotations_file,
                 const std::vector<double>& thresholds, const std::string& out_csv) {
    const std::vector<Detection> detections = read_detections_jsonl(detections_file);
    const std::vector<Annotation> annotations = read_annotations_jsonl(annotations_file);
    const EvalReport rep = evaluate(detections, annotations, thresholds);

    std::cout << "legs evaluated: " << rep.per_leg.size() << "\n";
    std::cout << "mean IoU: " << format_fixed(rep.mean_iou, 4) << "\n";
    std::cout << "mean time: " << format_fixed(rep.mean_ms, 2) << " ms/image\n";
    for (const auto& [t, recall] : rep.recall_at)
        std::cout << "recall@" << format_fixed(t, 2) << ": " << format_fixed(recall, 4) << "\n";
    write_text(out_csv, eval_report_to_csv(rep));
    std::cout << "csv written to " << out_csv << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& images_dir, const std::string& annotations_file,
              const std::string& config_file, const std::vector<int>& p_list,
              const std::vector<double>& thresholds, const std::string& out_csv) {
    RunConfig cfg;
    if (!config_file.empty()) cfg = load_config(config_file);
    const std::vector<Annotation> annotations = read_annotations_jsonl(annotations_file);
    const std::vector<AnnotatedImage> corpus = load_corpus(images_dir, annotations);

    const std::vector<SweepRow> rows =
        proposal_recall_sweep(corpus, cfg.proposer, p_list, thresholds);
    for (const SweepRow& r : rows)
        std::cout << "p=" << r.p << "  t=" << format_fixed(r.threshold, 2)
                  << "  recall=" << format_fixed(r.recall, 4) << "\n";
    write_text(out_csv, sweep_to_csv(rows));
    std::cout << "csv written to " << out_csv << "\n";
    return kExitOk;
}

int cmd_bench(const std::string& images_dir, const std::string& model_file,
              const std::string& config_file, int repeat, const std::optional<int>& threads_flag) {
    const RunConfig cfg = load_config(config_file);
    std::ifstream min(model_file);
    if (!min) throw IoError("cannot open model " + model_file);
    const SvmModel model =
        load(std::string((std::istreambuf_iterator<char>(min)), std::istreambuf_iterator<char>()));
    const int threads = resolve_threads(threads_flag, cfg.threads);

    std::vector<NamedImage> images;
    for (const fs::path& p : list_images(images_dir))
        images.push_back(NamedImage{p.filename().string(), load_normalized(p)});
    if (images.empty()) throw ContractError("bench: no images found in " + images_dir);

    std::cout << "bench: " << images.size() << " images, " << repeat
              << " runs, threads=" << threads << " (image decode excluded from timing)\n";
    double total_ms = 0.0;
    for (int run = 0; run < repeat; ++run) {
        const auto t0 = std::chrono::steady_clock::now();
        detect_batch(images, model, cfg.proposer, cfg.hog, threads);
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        total_ms += ms;
        std::cout << "run " << (run + 1) << ": " << format_fixed(ms, 1) << " ms ("
                  << format_fixed(ms / double(images.size()), 2) << " ms/image)\n";
    }
    const double mean_ms = total_ms / repeat;
    const double per_image = mean_ms / double(images.size());
    std::cout << "mean: " << format_fixed(mean_ms, 1) << " ms, "
              << format_fixed(per_image, 2) << " ms/image\n";
    std::cout << "throughput: about " << (long long)(86'400'000.0 / per_image)
              << " images/day at this thread count (scales with --threads)\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kneeloc: knee joint area localization in plain radiographs"};
    app.require_subcommand(0, 1);

    std::string dump_path, root_config;
    app.add_option("--dump-config", dump_path,
                   "Write the effective run config as JSON to this path and exit");
    app.add_option("--config", root_config, "Config to load before --dump-config");

    auto* synth = app.add_subcommand("synth", "Generate phantom radiographs with annotations");
    std::string synth_out;
    int synth_count = 10;
    std::uint64_t synth_seed = 1;
    std::string synth_size = "2400x2000";
    double synth_noise = 8.0;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--count", synth_count, "Number of images")->required();
    synth->add_option("--seed", synth_seed, "Base seed")->required();
    synth->add_option("--size", synth_size, "Image size as WxH (default 2400x2000)");
    synth->add_option("--noise", synth_noise, "Gaussian noise sd (default 8)");

    auto* train_cmd = app.add_subcommand("train", "Train the proposal scorer");
    std::string train_images, train_ann, train_cfg, train_model;
    train_cmd->add_option("--images", train_images, "Image directory")->required();
    train_cmd->add_option("--annotations", train_ann, "Annotations JSONL")->required();
    train_cmd->add_option("--config", train_cfg, "Run config JSON")->required();
    train_cmd->add_option("--model", train_model, "Model output path")->required();

    auto* detect_cmd = app.add_subcommand("detect", "Localize joints in a directory of images");
    std::string det_images, det_model, det_cfg, det_out;
    int det_threads = 0;
    detect_cmd->add_option("--images", det_images, "Image directory")->required();
    detect_cmd->add_option("--model", det_model, "Model file")->required();
    detect_cmd->add_option("--config", det_cfg, "Run config JSON")->required();
    detect_cmd->add_option("--out", det_out, "Detections JSONL output")->required();
    auto* det_threads_opt =
        detect_cmd->add_option("--threads", det_threads, "Worker threads (0 = all cores)");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score detections against annotations");
    std::string eval_det, eval_ann, eval_out = "eval.csv";
    std::vector<double> eval_thresholds = {0.5, 0.7, 0.8};
    eval_cmd->add_option("--detections", eval_det, "Detections JSONL")->required();
    eval_cmd->add_option("--annotations", eval_ann, "Annotations JSONL")->required();
    eval_cmd->add_option("--thresholds", eval_thresholds, "IoU thresholds")->delimiter(',');
    eval_cmd->add_option("--out", eval_out, "Summary CSV output (default eval.csv)");

    auto* sweep_cmd = app.add_subcommand("sweep", "Best-proposal recall over displacement steps");
    std::string sweep_images, sweep_ann, sweep_cfg, sweep_out = "sweep.csv";
    std::vector<int> sweep_p = {5, 25, 95, 250, 1000};
    std::vector<double> sweep_thresholds = {0.5, 0.7, 0.8};
    sweep_cmd->add_option("--images", sweep_images, "Image directory")->required();
    sweep_cmd->add_option("--annotations", sweep_ann, "Annotations JSONL")->required();
    sweep_cmd->add_option("--config", sweep_cfg, "Run config JSON (optional)");
    sweep_cmd->add_option("--p-list", sweep_p, "Displacement steps to sweep")->delimiter(',');
    sweep_cmd->add_option("--thresholds", sweep_thresholds, "IoU thresholds")->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "Sweep CSV output (default sweep.csv)");

    auto* bench_cmd = app.add_subcommand("bench", "Detection throughput benchmark");
    std::string bench_images, bench_model, bench_cfg;
    int bench_repeat = 3, bench_threads = 0;
    bench_cmd->add_option("--images", bench_images, "Image directory")->required();
    bench_cmd->add_option("--model", bench_model, "Model file")->required();
    bench_cmd->add_option("--config", bench_cfg, "Run config JSON")->required();
    bench_cmd->add_option("--repeat", bench_repeat, "Timed runs (default 3)");
    auto* bench_threads_opt =
        bench_cmd->add_option("--threads", bench_threads, "Worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (!dump_path.empty()) {
            RunConfig cfg;
            if (!root_config.empty()) cfg = load_config(root_config);
            write_text(dump_path, dump_config(cfg));
            std::cout << "config written to " << dump_path << "\n";
            return kExitOk;
        }
        if (synth->parsed())
            return cmd_synth(synth_out, synth_count, synth_seed, synth_size, synth_noise);
        if (train_cmd->parsed()) return cmd_train(train_images, train_ann, train_cfg, train_model);
        if (detect_cmd->parsed()) {
            std::optional<int> t;
            if (det_threads_opt->count() > 0) t = det_threads;
            return cmd_detect(det_images, det_model, det_cfg, det_out, t);
        }
        if (eval_cmd->parsed()) return cmd_evaluate(eval_det, eval_ann, eval_thresholds, eval_out);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_images, sweep_ann, sweep_cfg, sweep_p, sweep_thresholds,
                             sweep_out);
        if (bench_cmd->parsed()) {
            std::optional<int> t;
            if (bench_threads_opt->count() > 0) t = bench_threads;
            return cmd_bench(bench_images, bench_model, bench_cfg, bench_repeat, t);
        }
        std::cerr << app.help();
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
