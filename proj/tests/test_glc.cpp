#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "labelsmith/error_sim.hpp"
#include "labelsmith/glc.hpp"
#include "labelsmith/sim_oracle.hpp"

using namespace labelsmith;

namespace {

DetectionSet single_image(const std::vector<Detection>& dets, const std::string& id = "a") {
    DetectionSet set;
    set.ensure_image(id);
    for (const Detection& d : dets) set.add(id, d);
    return set;
}

// Order-insensitive per-image comparison with a coordinate tolerance.
bool equivalent_sets(const AnnotationSet& a, const AnnotationSet& b, double tol = 1e-6) {
    if (a.images.size() != b.images.size()) return false;
    for (std::size_t i = 0; i < a.images.size(); ++i) {
        std::vector<LabeledBox> la = a.images[i].labels, lb = b.images[i].labels;
        if (la.size() != lb.size()) return false;
        auto key = [](const LabeledBox& l, const LabeledBox& r) {
            if (l.class_id != r.class_id) return l.class_id < r.class_id;
            if (l.box.x != r.box.x) return l.box.x < r.box.x;
            if (l.box.y != r.box.y) return l.box.y < r.box.y;
            if (l.box.w != r.box.w) return l.box.w < r.box.w;
            return l.box.h < r.box.h;
        };
        std::sort(la.begin(), la.end(), key);
        std::sort(lb.begin(), lb.end(), key);
        for (std::size_t j = 0; j < la.size(); ++j) {
            if (la[j].class_id != lb[j].class_id) return false;
            if (std::abs(la[j].box.x - lb[j].box.x) > tol) return false;
            if (std::abs(la[j].box.y - lb[j].box.y) > tol) return false;
            if (std::abs(la[j].box.w - lb[j].box.w) > tol) return false;
            if (std::abs(la[j].box.h - lb[j].box.h) > tol) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("consistency averages best-match IoU over variants") {
    const GlcConfig cfg;

    SUBCASE("matched at 1.0 in every variant") {
        const DetectionSet original = single_image({{BBox(0, 0, 10, 10), 0, 0.9}});
        const std::vector<DetectionSet> augmented(3, original);
        const ConsistencyMap map = consistency(original, augmented, cfg);
        REQUIRE(map.at("a").size() == 1);
        CHECK(map.at("a")[0].mu == doctest::Approx(1.0));
    }
    SUBCASE("matched in one of two variants at 0.8 gives 0.4") {
        const DetectionSet original = single_image({{BBox(0, 0, 10, 10), 0, 0.9}});
        const DetectionSet v1 = single_image({{BBox(0, 0, 8, 10), 0, 0.9}});
        DetectionSet v2;
        v2.ensure_image("a");
        const ConsistencyMap map = consistency(original, {v1, v2}, cfg);
        CHECK(map.at("a")[0].mu == doctest::Approx(0.4));
        CHECK(map.at("a")[0].variant_ious[0] == doctest::Approx(0.8));
        CHECK(map.at("a")[0].variant_ious[1] == 0.0);
    }
    SUBCASE("hflip variants are mapped back before matching") {
        const DetectionSet original = single_image({{BBox(10, 20, 30, 40), 0, 0.9}});
        DetectionSet flipped = single_image({{BBox(60, 20, 30, 40), 0, 0.9}});
        flipped.variant_tag = "hflip";
        flipped.transform = BoxTransform::hflip(100);
        const ConsistencyMap map = consistency(original, {flipped}, cfg);
        CHECK(map.at("a")[0].mu == doctest::Approx(1.0));
    }
    SUBCASE("zero variants is an error") {
        const DetectionSet original = single_image({{BBox(0, 0, 10, 10), 0, 0.9}});
        CHECK_THROWS_AS(consistency(original, {}, cfg), std::invalid_argument);
    }
}

TEST_CASE("false GT detection uses a pure intersection test") {
    const GlcConfig cfg;
    const std::vector<LabeledBox> labels{{BBox(0, 0, 10, 10), 0},
                                         {BBox(50, 50, 10, 10), 0}};

    SUBCASE("a low-score overlapping prediction protects the box") {
        const auto flagged =
            detect_false_gt(labels, {{BBox(5, 5, 10, 10), 0, 0.12}}, cfg);
        CHECK(flagged == std::vector<int>{1});  // only the empty-region box
    }
    SUBCASE("sub-floor predictions do not count") {
        const auto flagged =
            detect_false_gt(labels, {{BBox(5, 5, 10, 10), 0, 0.05}}, cfg);
        CHECK(flagged == std::vector<int>{0, 1});
    }
    SUBCASE("any overlap counts, not just matches") {
        const auto flagged = detect_false_gt(
            labels, {{BBox(9, 9, 10, 10), 0, 0.5}, {BBox(51, 51, 10, 10), 0, 0.5}}, cfg);
        CHECK(flagged.empty());
    }
}

TEST_CASE("missing GT promotion needs score, consistency and empty ground") {
    const GlcConfig cfg;
    const std::vector<LabeledBox> labels{{BBox(0, 0, 10, 10), 0}};
    const std::vector<Detection> preds{{BBox(0, 0, 10, 10), 0, 0.9},
                                       {BBox(40, 40, 12, 12), 1, 0.8}};

    std::vector<ConsistencyRecord> records(2);
    records[0] = {0, {1.0}, 1.0};
    records[1] = {1, {0.95}, 0.95};

    SUBCASE("a consistent prediction over empty ground is promoted") {
        const auto additions = detect_missing_gt(labels, records, preds, cfg);
        REQUIRE(additions.size() == 1);
        CHECK(additions[0].label.box == BBox(40, 40, 12, 12));
        CHECK(additions[0].label.class_id == 1);
        CHECK(additions[0].mu == doctest::Approx(0.95));
    }
    SUBCASE("overlapping an existing GT at 0.6 blocks promotion") {
        const std::vector<LabeledBox> near{{BBox(40, 40, 12, 14), 1}};
        // iou([40,40,12,12],[40,40,12,14]) = 12/14 > 0.5
        const auto additions = detect_missing_gt(near, records, preds, cfg);
        for (const auto& a : additions) CHECK(a.label.box != BBox(40, 40, 12, 12));
    }
    SUBCASE("inconsistent or low-score predictions stay out") {
        records[1].mu = 0.7;
        CHECK(detect_missing_gt(labels, records, preds, cfg).empty());
        records[1].mu = 0.95;
        std::vector<Detection> weak = preds;
        weak[1].score = 0.3;
        CHECK(detect_missing_gt(labels, records, weak, cfg).empty());
    }
}

TEST_CASE("noisy GT correction replaces boxes and fixes classes") {
    const GlcConfig cfg;
    std::vector<ConsistencyRecord> records(1);
    records[0] = {0, {0.95}, 0.95};

    SUBCASE("a matched pair below gamma_o with high consistency is replaced") {
        // iou = 7/13 ~ 0.538 between [0,0,10,10] and [3,0,10,10]
        const std::vector<LabeledBox> labels{{BBox(3, 0, 10, 10), 0}};
        const std::vector<Detection> preds{{BBox(0, 0, 10, 10), 0, 0.9}};
        const auto [replacements, fixes] = correct_noisy_gt(labels, records, preds, cfg);
        REQUIRE(replacements.size() == 1);
        CHECK(replacements[0].new_box == BBox(0, 0, 10, 10));
        CHECK(replacements[0].old_class == replacements[0].new_class);
        CHECK(fixes.empty());
    }
    SUBCASE("pairs at or above gamma_o keep their box regardless of mu") {
        const std::vector<LabeledBox> labels{{BBox(0, 0, 10, 10), 0}};
        const std::vector<Detection> preds{{BBox(0, 0, 10, 10), 0, 0.9}};
        const auto [replacements, fixes] = correct_noisy_gt(labels, records, preds, cfg);
        CHECK(replacements.empty());
        CHECK(fixes.empty());
    }
    SUBCASE("class disagreement on a tight pair becomes a class fix") {
        const std::vector<LabeledBox> labels{{BBox(0, 0, 10, 10), 2}};
        const std::vector<Detection> preds{{BBox(0, 0, 10, 10), 0, 0.9}};
        const auto [replacements, fixes] = correct_noisy_gt(labels, records, preds, cfg);
        CHECK(replacements.empty());
        REQUIRE(fixes.size() == 1);
        CHECK(fixes[0].old_class == 2);
        CHECK(fixes[0].new_class == 0);
    }
    SUBCASE("a loose pair with a class mismatch lands in one category") {
        const std::vector<LabeledBox> labels{{BBox(3, 0, 10, 10), 2}};
        const std::vector<Detection> preds{{BBox(0, 0, 10, 10), 0, 0.9}};
        const auto [replacements, fixes] = correct_noisy_gt(labels, records, preds, cfg);
        REQUIRE(replacements.size() == 1);
        CHECK(replacements[0].old_class == 2);
        CHECK(replacements[0].new_class == 0);
        CHECK(fixes.empty());
    }
    SUBCASE("inconsistent predictions never correct anything") {
        records[0].mu = 0.5;
        const std::vector<LabeledBox> labels{{BBox(3, 0, 10, 10), 2}};
        const std::vector<Detection> preds{{BBox(0, 0, 10, 10), 0, 0.9}};
        const auto [replacements, fixes] = correct_noisy_gt(labels, records, preds, cfg);
        CHECK(replacements.empty());
        CHECK(fixes.empty());
    }
}

TEST_CASE("apply_corrections edits exactly what the report lists") {
    AnnotationSet set;
    set.classes = {"c0", "c1"};
    ImageRecord img;
    img.image_id = "a";
    img.width = 100;
    img.height = 100;
    img.labels.push_back({BBox(0, 0, 10, 10), 0});
    img.labels.push_back({BBox(50, 50, 10, 10), 1});
    set.images.push_back(img);

    SUBCASE("an empty report is the identity") {
        CHECK(apply_corrections(set, CorrectionReport{}) == set);
    }
    SUBCASE("removing index 0 of a two-box image keeps the other box intact") {
        CorrectionReport report;
        CorrectionReport::ImageReport entry;
        entry.image_id = "a";
        entry.removed_false_gt.push_back({0, 0, BBox(0, 0, 10, 10), "test"});
        report.images.push_back(entry);

        const AnnotationSet out = apply_corrections(set, report);
        REQUIRE(out.images[0].labels.size() == 1);
        CHECK(out.images[0].labels[0] == set.images[0].labels[1]);
        CHECK(set.images[0].labels.size() == 2);  // input untouched
    }
}

TEST_CASE("perfect-oracle round trip recovers an injected corruption") {
    SceneSpec sspec;
    sspec.n_images = 80;
    sspec.image_w = 400;
    sspec.image_h = 400;
    sspec.num_classes = 4;
    sspec.boxes_per_image = {2, 5};
    sspec.box_size = {24.0, 56.0};
    sspec.seed = 3;
    const AnnotationSet clean = gen_scenes(sspec).annotations;

    const GeneratedDetections oracle = gen_detections(
        clean, DetectorSpec::perfect_oracle(0.9, {"original", "hflip", "blur"}));
    const std::vector<DetectionSet> augmented(oracle.variants.begin() + 1,
                                              oracle.variants.end());

    ErrorSpec espec = level_preset(1);
    espec.class_flip_frac = 0.2;
    espec.seed = 7;
    const auto [corrupted, ledger] = inject(clean, espec);
    REQUIRE_FALSE(equivalent_sets(corrupted, clean));

    const GlcConfig cfg;
    const ConsistencyMap records = consistency(oracle.variants[0], augmented, cfg);
    const CorrectionReport report = detect_errors(corrupted, oracle.variants[0], records, cfg);
    const AnnotationSet repaired = apply_corrections(corrupted, report);

    CHECK(equivalent_sets(repaired, clean));

    SUBCASE("correction is idempotent against the same prediction bundle") {
        const CorrectionReport again =
            detect_errors(repaired, oracle.variants[0], records, cfg);
        const AnnotationSet twice = apply_corrections(repaired, again);
        CHECK(equivalent_sets(twice, repaired));
    }
    SUBCASE("the report round-trips through its file form") {
        const auto path = (std::filesystem::temp_directory_path() /
                           "labelsmith_correction_test.json")
                              .string();
        save_correction_report(report, Json::object(), path);
        const CorrectionReport back = load_correction_report(path);
        const AnnotationSet repaired_again = apply_corrections(corrupted, back);
        CHECK(equivalent_sets(repaired_again, clean));
        std::filesystem::remove(path);
    }
}

TEST_CASE("raising gamma_c never adds promotions or replacements") {
    SceneSpec sspec;
    sspec.n_images = 60;
    sspec.image_w = 400;
    sspec.image_h = 400;
    sspec.boxes_per_image = {3, 6};
    sspec.box_size = {24.0, 56.0};
    sspec.seed = 5;
    const AnnotationSet clean = gen_scenes(sspec).annotations;

    DetectorSpec dspec = DetectorSpec::calibrated(0.8, 11);
    dspec.variants = {"original", "hflip", "noise"};
    dspec.aug_jitter_sigma = 0.06;  // spreads mu around the threshold
    const GeneratedDetections dets = gen_detections(clean, dspec);
    const std::vector<DetectionSet> augmented(dets.variants.begin() + 1,
                                              dets.variants.end());

    ErrorSpec espec = level_preset(1);
    espec.seed = 13;
    const auto [corrupted, ledger] = inject(clean, espec);

    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (double gamma_c : {0.5, 0.7, 0.85, 0.95}) {
        GlcConfig cfg;
        cfg.gamma_c = gamma_c;
        const ConsistencyMap records = consistency(dets.variants[0], augmented, cfg);
        const CorrectionReport report =
            detect_errors(corrupted, dets.variants[0], records, cfg);
        const std::size_t touched = report.total_added() + report.total_replaced() +
                                    report.total_class_corrected();
        CHECK(touched <= previous);
        previous = touched;
    }
}

TEST_CASE("images outside the prediction bundle are never touched") {
    AnnotationSet set;
    set.classes = {"c0"};
    for (int i = 0; i < 2; ++i) {
        ImageRecord img;
        img.image_id = i == 0 ? "covered" : "uncovered";
        img.width = 100;
        img.height = 100;
        img.labels.push_back({BBox(70, 70, 10, 10), 0});  // no prediction overlaps
        set.images.push_back(img);
    }

    DetectionSet original = single_image({{BBox(0, 0, 10, 10), 0, 0.9}}, "covered");
    const GlcConfig cfg;
    const ConsistencyMap records = consistency(original, {original}, cfg);
    const CorrectionReport report = detect_errors(set, original, records, cfg);

    // the covered image loses its false box and gains the promoted
    // detection; the uncovered one is untouched
    const AnnotationSet out = apply_corrections(set, report);
    REQUIRE(out.images[0].labels.size() == 1);
    CHECK(out.images[0].labels[0].box == BBox(0, 0, 10, 10));
    CHECK(out.images[1].labels.size() == 1);
    CHECK(out.images[1].labels[0].box == BBox(70, 70, 10, 10));
}
