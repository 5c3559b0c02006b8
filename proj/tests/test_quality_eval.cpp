#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "labelsmith/quality_eval.hpp"
#include "labelsmith/sim_oracle.hpp"
#include "oracle_helpers.hpp"

using namespace labelsmith;

namespace {

AnnotationSet grid_gt(const std::string& image_id, int boxes) {
    AnnotationSet gt;
    gt.classes = {"a", "b"};
    ImageRecord img;
    img.image_id = image_id;
    img.width = 1000;
    img.height = 1000;
    for (int i = 0; i < boxes; ++i) {
        img.labels.push_back({BBox(40.0 * i, 0, 20, 20), i % 2});
    }
    gt.images.push_back(std::move(img));
    return gt;
}

DetectionSet echo_predictions(const AnnotationSet& gt, double score = 0.9) {
    DetectionSet preds;
    for (const ImageRecord& img : gt.images) {
        preds.ensure_image(img.image_id);
        for (const LabeledBox& l : img.labels) {
            preds.add(img.image_id, Detection{l.box, l.class_id, score});
        }
    }
    return preds;
}

}  // namespace

TEST_CASE("a perfect detector scores MDR=UDR=0, mACC=mIoU=1") {
    const AnnotationSet gt = grid_gt("a", 5);
    const QualityReport report = quality(echo_predictions(gt), gt);
    CHECK(report.mdr == 0.0);
    CHECK(report.udr == 0.0);
    CHECK(report.macc == 1.0);
    CHECK(report.miou == doctest::Approx(1.0));
}

TEST_CASE("three of four ground truth boxes matched gives MDR 0.25") {
    const AnnotationSet gt = grid_gt("a", 4);
    DetectionSet preds;
    for (int i = 0; i < 3; ++i) {
        preds.add("a", Detection{gt.images[0].labels[i].box, 0, 0.9});
    }
    const QualityReport report = quality(preds, gt);
    CHECK(report.mdr == doctest::Approx(0.25));
    CHECK(report.udr == 0.0);
}

TEST_CASE("zero ground truth boxes leaves MDR absent") {
    AnnotationSet gt;
    gt.classes = {"a"};
    ImageRecord img;
    img.image_id = "empty";
    img.width = 100;
    img.height = 100;
    gt.images.push_back(img);

    DetectionSet preds;
    preds.add("empty", Detection{BBox(1, 1, 5, 5), 0, 0.5});
    const QualityReport report = quality(preds, gt);
    CHECK_FALSE(report.mdr.has_value());
    CHECK(report.udr == 1.0);
}

TEST_CASE("metrics agree with the brute-force matcher on random instances") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> count(0, 6);
    std::uniform_int_distribution<int> cls(0, 2);
    for (int iter = 0; iter < 200; ++iter) {
        AnnotationSet gt;
        gt.classes = {"c0", "c1", "c2"};
        ImageRecord img;
        img.image_id = "x";
        img.width = 200;
        img.height = 200;
        const int n_gt = count(rng);
        for (int i = 0; i < n_gt; ++i) {
            img.labels.push_back({oracle::random_box(rng, 60.0, 25.0), cls(rng)});
        }
        gt.images.push_back(img);

        DetectionSet preds;
        preds.ensure_image("x");
        const int n_pred = count(rng);
        std::vector<BBox> pred_boxes;
        std::vector<int> pred_classes;
        for (int j = 0; j < n_pred; ++j) {
            pred_boxes.push_back(oracle::random_box(rng, 60.0, 25.0));
            pred_classes.push_back(cls(rng));
            preds.add("x", Detection{pred_boxes.back(), pred_classes.back(), 0.5});
        }

        const QualityReport got = quality(preds, gt);

        std::vector<BBox> gt_boxes;
        for (const auto& l : gt.images[0].labels) gt_boxes.push_back(l.box);
        const Matching want = oracle::brute_force_match(gt_boxes, pred_boxes, 0.5);

        CHECK(got.total_matched == static_cast<long long>(want.pairs.size()));
        int agree = 0;
        double iou_total = 0.0;
        for (const auto& p : want.pairs) {
            iou_total += p.iou;
            if (gt.images[0].labels[p.a_index].class_id == pred_classes[p.b_index]) ++agree;
        }
        if (!want.pairs.empty()) {
            CHECK(*got.macc == doctest::Approx(static_cast<double>(agree) /
                                               want.pairs.size()));
            CHECK(*got.miou == doctest::Approx(iou_total / want.pairs.size()));
        }
    }
}

TEST_CASE("relabeling classes permutes mACC inputs but not MDR/UDR/mIoU") {
    const AnnotationSet gt = grid_gt("a", 6);
    DetectionSet preds = echo_predictions(gt);
    const QualityReport before = quality(preds, gt);

    AnnotationSet permuted = gt;
    for (auto& l : permuted.images[0].labels) l.class_id = 1 - l.class_id;
    const QualityReport after = quality(preds, permuted);
    CHECK(*before.mdr == *after.mdr);
    CHECK(*before.udr == *after.udr);
    CHECK(*before.miou == doctest::Approx(*after.miou));
    CHECK(*after.macc == 0.0);  // every pair now disagrees
}

TEST_CASE("mdr labels use a strict cut after threshold filtering") {
    // image with 5 GT boxes; detections carry high scores on 2 of them
    const AnnotationSet gt = grid_gt("a", 5);
    DetectionSet preds;
    for (int i = 0; i < 5; ++i) {
        preds.add("a", Detection{gt.images[0].labels[i].box, 0, i < 2 ? 0.95 : 0.3});
    }
    // at delta 0.9 only 2 match: MDR = 0.6 -> label 1
    auto labels = mdr_labels(preds, gt, 0.9);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].second == 1);

    SUBCASE("an MDR of exactly 0.5 stays negative") {
        const AnnotationSet gt4 = grid_gt("b", 4);
        DetectionSet p4;
        for (int i = 0; i < 4; ++i) {
            p4.add("b", Detection{gt4.images[0].labels[i].box, 0, i < 2 ? 0.95 : 0.3});
        }
        auto l4 = mdr_labels(p4, gt4, 0.9);
        REQUIRE(l4.size() == 1);
        CHECK(l4[0].second == 0);
    }
    SUBCASE("everything matched gives label 0") {
        auto all = mdr_labels(echo_predictions(gt, 0.95), gt, 0.9);
        REQUIRE(all.size() == 1);
        CHECK(all[0].second == 0);
    }
}

TEST_CASE("roc_auc on hand-checked instances") {
    SUBCASE("perfect separation") {
        const RocResult roc = roc_auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0});
        CHECK(roc.auc == doctest::Approx(1.0));
        CHECK(roc.tpr.front() == 0.0);
        CHECK(roc.tpr.back() == 1.0);
        CHECK(roc.fpr.back() == 1.0);
    }
    SUBCASE("six points against the counted pair fraction") {
        const RocResult roc =
            roc_auc({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {1, 1, 0, 1, 0, 0});
        CHECK(roc.auc == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
    }
    SUBCASE("degenerate labels are rejected") {
        CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
        CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {0, 0}), std::invalid_argument);
    }
    SUBCASE("roc points are monotone") {
        const RocResult roc = roc_auc({0.3, 0.3, 0.1, 0.9, 0.4}, {1, 0, 1, 0, 0});
        for (std::size_t i = 1; i < roc.tpr.size(); ++i) {
            CHECK(roc.tpr[i] >= roc.tpr[i - 1]);
            CHECK(roc.fpr[i] >= roc.fpr[i - 1]);
        }
    }
}

TEST_CASE("trapezoid AUC equals the Mann-Whitney statistic with ties") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::uniform_int_distribution<int> quantize(1, 10);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int iter = 0; iter < 200; ++iter) {
        const int n = std::uniform_int_distribution<int>(2, 50)(rng);
        std::vector<double> scores;
        std::vector<int> labels;
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            // quantized scores force ties
            scores.push_back(quantize(rng) / 10.0);
            labels.push_back(coin(rng));
            pos += labels.back();
        }
        if (pos == 0 || pos == n) continue;
        const RocResult roc = roc_auc(scores, labels);
        CHECK(roc.auc ==
              doctest::Approx(oracle::mann_whitney_auc_low(scores, labels)).epsilon(1e-9));
    }
}

TEST_CASE("compare_metrics: the beta=0 row equals the S row exactly") {
    SceneSpec sspec;
    sspec.n_images = 120;
    sspec.image_w = 320;
    sspec.image_h = 320;
    sspec.boxes_per_image = {4, 8};
    sspec.box_size = {16.0, 48.0};
    sspec.seed = 5;
    const GeneratedScenes scenes = gen_scenes(sspec);
    const GeneratedDetections dets =
        gen_detections(scenes.annotations, DetectorSpec::heterogeneous(7));

    CompareConfig cfg;
    cfg.betas = {0.0, 0.1};
    const MetricComparison cmp = compare_metrics(dets.variants[0], scenes.annotations, cfg);
    const RocResult* s_row = cmp.find("S_i");
    const RocResult* d0_row = cmp.find("D_i(beta=0)");
    REQUIRE(s_row != nullptr);
    REQUIRE(d0_row != nullptr);
    CHECK(s_row->auc == d0_row->auc);
    CHECK(cmp.positives + cmp.negatives == 120);
}
