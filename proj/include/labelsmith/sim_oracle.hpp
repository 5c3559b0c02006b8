#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "labelsmith/dataset_io.hpp"

namespace labelsmith {

/// Synthetic scene generator: non-overlapping class-colored rectangles on a
/// black background, with exact labels and a configurable class imbalance.
struct SceneSpec {
    int n_images = 100;
    int image_w = 512;
    int image_h = 512;
    int num_classes = 3;
    /// Explicit sampling weights per class; when empty, weight k is
    /// (k+1)^-power_law (power_law = 0 gives a uniform distribution).
    std::vector<double> class_weights;
    double power_law = 0.0;
    std::array<int, 2> boxes_per_image{2, 6};
    std::array<double, 2> box_size{24.0, 96.0};
    /// Boxes are placed at least this far from the image border, leaving
    /// room for perturbations without boundary clamping.
    double margin = 32.0;
    std::uint64_t seed = 0;
};

struct GeneratedScenes {
    AnnotationSet annotations;
    std::vector<cv::Mat> images;  // aligned with annotations.images
};

GeneratedScenes gen_scenes(const SceneSpec& spec);

/// Deterministic color for drawing boxes of a class.
cv::Vec3b class_color(int class_id);

/// Noisy-detector model over a ground-truth set. Every detection the model
/// emits is bookkept, so tests can compare measured metrics against exact
/// truth. Per image, a "badness" level u is drawn; it raises the hard-miss
/// probability (by miss_quality_coupling * u) and the fraction of surviving
/// detections scored from the low "shaky" score mode (with probability u).
struct DetectorSpec {
    double miss_prob = 0.0;              // base hard-miss probability per box
    double miss_quality_coupling = 0.0;  // extra misses on bad images
    std::array<double, 2> badness_low{0.05, 0.35};
    std::array<double, 2> badness_high{0.55, 0.90};
    double badness_high_frac = 0.0;  // fraction of images drawing from badness_high

    double fp_per_image = 0.0;  // Poisson mean of false positives per image
    std::array<double, 2> fp_size{10.0, 60.0};
    double jitter_sigma = 0.0;      // relative box jitter on true detections
    double aug_jitter_sigma = 0.0;  // extra jitter on augmented variants

    double conf_score_mean = 0.95;
    double conf_score_sigma = 0.03;
    std::array<double, 2> shaky_mean{0.25, 0.60};  // per-image shaky score center
    double shaky_score_sigma = 0.12;
    double false_score_mean = 0.30;
    double false_score_sigma = 0.12;

    /// Detection sets to emit; "original" is always first. "hflip" carries
    /// the flip transform, any other tag is a photometric variant.
    std::vector<std::string> variants{"original"};
    std::uint64_t seed = 0;

    /// Predictions equal to clean GT (constant score) under every variant.
    static DetectorSpec perfect_oracle(double score = 0.9,
                                       std::vector<std::string> variants = {"original"});
    /// Strong per-image quality spread: some images have most boxes missed
    /// or scored low, others are near-perfect.
    static DetectorSpec heterogeneous(std::uint64_t seed = 0);
    /// Mild uniform noise with the matched-score model centered as given.
    static DetectorSpec calibrated(double score_center = 0.36, std::uint64_t seed = 0);
};

/// Exact per-image bookkeeping of what the detector model did.
struct ImageTruth {
    std::string image_id;
    int gt_count = 0;
    int missed = 0;       // hard misses: no detection emitted for the box
    int fp_count = 0;     // false positives in the original variant
    int true_dets = 0;    // emitted detections backed by a GT box
    double iou_sum = 0.0; // summed IoU of emitted detections vs their GT box
    int class_correct = 0;

    double true_mdr() const {
        return gt_count > 0 ? static_cast<double>(missed) / gt_count : 0.0;
    }
};

struct GeneratedDetections {
    std::vector<DetectionSet> variants;  // variants[0] is "original"
    std::vector<ImageTruth> truth;       // in annotation image order
};

GeneratedDetections gen_detections(const AnnotationSet& gt, const DetectorSpec& spec);

}  // namespace labelsmith
