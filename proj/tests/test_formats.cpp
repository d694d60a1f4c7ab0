#include <catch2/catch_amalgamated.hpp>

#include "kneeloc/formats.hpp"
#include "kneeloc/phantom.hpp"
#include "kneeloc/run_config.hpp"
#include "test_util.hpp"

using namespace kneeloc;

TEST_CASE("annotations jsonl: round trip and field shape") {
    std::vector<Annotation> anns;
    for (int i = 0; i < 3; ++i) {
        Annotation a;
        a.image_id = "img_" + std::to_string(i) + ".png";
        a.left_box = BoxPx{i, 2 * i, 10 + i, 12};
        a.right_box = BoxPx{50 + i, 2 * i, 10, 12 + i};
        anns.push_back(a);
    }
    const std::string text = annotations_to_jsonl(anns);
    CHECK(text.find("\"image\":\"img_0.png\"") != std::string::npos);
    CHECK(text.find("\"left\":[0,0,10,12]") != std::string::npos);

    testutil::TempDir dir("ann");
    testutil::write_text(dir.path / "a.jsonl", text);
    std::vector<Annotation> back = read_annotations_jsonl(dir.path / "a.jsonl");
    REQUIRE(back.size() == anns.size());
    for (std::size_t i = 0; i < anns.size(); ++i) CHECK(back[i] == anns[i]);
}

TEST_CASE("annotations jsonl: malformed lines carry the line number") {
    testutil::TempDir dir("annbad");
    testutil::write_text(dir.path / "bad.jsonl",
                         "{\"image\":\"a.png\",\"left\":[0,0,5,5],\"right\":[9,0,5,5]}\n"
                         "{\"image\":\"b.png\",\"left\":[0,0,0,5],\"right\":[9,0,5,5]}\n");
    CHECK_THROWS_WITH(read_annotations_jsonl(dir.path / "bad.jsonl"),
                      Catch::Matchers::ContainsSubstring(":2:"));

    testutil::write_text(dir.path / "junk.jsonl", "not json at all\n");
    CHECK_THROWS_WITH(read_annotations_jsonl(dir.path / "junk.jsonl"),
                      Catch::Matchers::ContainsSubstring(":1:"));

    testutil::write_text(dir.path / "short.jsonl",
                         "{\"image\":\"a.png\",\"left\":[0,0,5],\"right\":[9,0,5,5]}\n");
    CHECK_THROWS_WITH(read_annotations_jsonl(dir.path / "short.jsonl"),
                      Catch::Matchers::ContainsSubstring("[x,y,w,h]"));
}

TEST_CASE("detections jsonl: round trip preserves scores and timing") {
    std::vector<Detection> dets;
    Detection d;
    d.image_id = "p.png";
    d.left = {BoxPx{1, 2, 3, 4}, -0.125};
    d.right = {BoxPx{9, 2, 3, 4}, 1.75};
    d.elapsed_ms = 12.5;
    dets.push_back(d);

    testutil::TempDir dir("det");
    testutil::write_text(dir.path / "d.jsonl", detections_to_jsonl(dets));
    std::vector<Detection> back = read_detections_jsonl(dir.path / "d.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].image_id == "p.png");
    CHECK(back[0].left.box == d.left.box);
    CHECK(back[0].left.score == -0.125);
    CHECK(back[0].right.score == 1.75);
    CHECK(back[0].elapsed_ms == 12.5);
}

TEST_CASE("csv: rfc-4180 quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("with,comma") == "\"with,comma\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("csv: eval report header echoes thresholds") {
    EvalReport rep;
    rep.mean_iou = 0.8375;
    rep.mean_ms = 12.345;
    rep.recall_at = {{0.5, 1.0}, {0.7, 0.875}, {0.8, 0.5}};
    const std::string csv = eval_report_to_csv(rep);
    CHECK(csv.find("mean_iou,mean_ms,recall@0.50,recall@0.70,recall@0.80") == 0);
    CHECK(csv.find("0.8375") != std::string::npos);
    CHECK(csv.find("0.8750") != std::string::npos);
}

TEST_CASE("csv: sweep rows in long format") {
    std::vector<SweepRow> rows = {{95, 0.5, 1.0}, {95, 0.7, 0.75}, {95, 0.8, 0.5}};
    const std::string csv = sweep_to_csv(rows);
    CHECK(csv.find("p,iou_threshold,recall\r\n") == 0);
    CHECK(csv.find("95,0.70,0.7500") != std::string::npos);
    // Header plus one row per (p, threshold) pair.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("load_corpus: missing images are listed by id") {
    testutil::TempDir dir("corpus");
    auto [img, ann] = synth_phantom(3, 120, 100, 0.5, 0.5, 4, 2.0);
    save_png(dir.path / "ok.png", img);

    Annotation ok = ann;
    ok.image_id = "ok.png";
    Annotation gone1 = ann;
    gone1.image_id = "gone1.png";
    Annotation gone2 = ann;
    gone2.image_id = "gone2.png";

    CHECK_THROWS_WITH(load_corpus(dir.path, {ok, gone1, gone2}),
                      Catch::Matchers::ContainsSubstring("gone1.png, gone2.png"));

    std::vector<AnnotatedImage> corpus = load_corpus(dir.path, {ok});
    REQUIRE(corpus.size() == 1);
    CHECK(corpus[0].image == img);
}

TEST_CASE("load_corpus: 16-bit sources are normalized on load") {
    testutil::TempDir dir("corpus16");
    GrayImage wide(16, 16, BitDepth::Sixteen);
    for (std::size_t i = 0; i < wide.pixels().size(); ++i)
        wide.pixels()[i] = std::uint16_t(i * 250);
    save_png(dir.path / "w.png", wide);

    Annotation a;
    a.image_id = "w.png";
    a.left_box = BoxPx{0, 0, 4, 4};
    a.right_box = BoxPx{8, 0, 4, 4};
    std::vector<AnnotatedImage> corpus = load_corpus(dir.path, {a});
    REQUIRE(corpus.size() == 1);
    CHECK(corpus[0].image.depth() == BitDepth::Eight);
}

TEST_CASE("run config: dump and reparse to an equal value") {
    RunConfig cfg;
    CHECK(parse_config(dump_config(cfg)) == cfg);

    cfg.proposer.x_step = 40;
    cfg.proposer.rank_by = RankBy::Position;
    cfg.hog.norm = BlockNorm::L2Hys;
    cfg.svm.c_reg = 0.5;
    cfg.svm.loss = HingeLoss::L2;
    cfg.trainset.pos_iou = 0.75;
    cfg.trainset.augment = false;
    cfg.threads = 3;
    CHECK(parse_config(dump_config(cfg)) == cfg);
}

TEST_CASE("run config: partial documents take defaults, bad ones fail") {
    RunConfig partial = parse_config("{\"proposer\": {\"x_step\": 33}}");
    CHECK(partial.proposer.x_step == 33);
    CHECK(partial.proposer.smooth_window == 11);
    CHECK(partial.svm.c_reg == 0.01);
    CHECK(partial.trainset.pos_iou == 0.8);

    CHECK_THROWS_AS(parse_config("{"), DecodeError);
    CHECK_THROWS_AS(parse_config("{\"threads\": -2}"), ContractError);
    CHECK_THROWS_AS(parse_config("{\"proposer\": {\"smooth_window\": 4}}"), ContractError);
    CHECK_THROWS_AS(parse_config("{\"proposer\": {\"rank_by\": \"sideways\"}}"), ContractError);
}

TEST_CASE("run config: defaults match the tuned pipeline values") {
    RunConfig cfg;
    CHECK(cfg.proposer.alpha_frac == 0.1);
    CHECK(cfg.proposer.smooth_window == 11);
    CHECK(cfg.proposer.peak_stride == 10);
    CHECK(cfg.proposer.top_percent == 10.0);
    CHECK(cfg.proposer.x_step == 95);
    CHECK(cfg.proposer.x_range_frac == 0.25);
    CHECK(cfg.proposer.scales == std::vector<double>{3.0, 3.2, 3.4, 3.6, 3.8, 4.0, 5.0});
    CHECK(cfg.hog.patch == 64);
    CHECK(cfg.hog.descriptor_length() == 1764);
    CHECK(cfg.svm.c_reg == 0.01);
    CHECK(cfg.trainset.pos_iou == 0.8);
    CHECK(cfg.threads == 0);
}
