#pragma once

#include <string>
#include <vector>

#include "labelsmith/class_stats.hpp"
#include "labelsmith/dataset_io.hpp"

namespace labelsmith {

struct PlsConfig {
    double delta_s = 0.4;      // working score threshold
    double alpha = 0.1;        // low reference threshold
    double beta = 0.1;         // class-rarity weight in the combined metric
    double removal_frac = 0.0; // fraction of images to remove

    void validate() const;
};

/// Keep detections with score >= delta_s; per-image ordering is preserved.
/// Idempotent, and composing two filters equals filtering at the larger
/// threshold.
DetectionSet filter_by_score(const DetectionSet& dets, double delta_s);

/// Score-retention metric: n_i(delta_s) / n_i(alpha). An image with no
/// detections at the reference threshold scores 0 (maximally suspect).
double score_metric(int n_at_delta, int n_at_alpha);

/// Class-rarity regularizer: mean over the distinct predicted classes of
/// 1 - f_k / total, with frequencies taken over the alpha-filtered set.
double class_metric(const std::vector<int>& distinct_classes, const ClassStats& stats);

/// Convex combination (1 - beta) * S + beta * C.
double d_metric(double s_metric, double c_metric, double beta);

struct ImageSelection {
    std::string image_id;
    int n_at_delta = 0;
    int n_at_alpha = 0;
    double s_metric = 0.0;
    double c_metric = 0.0;
    double d_metric = 0.0;
    double mean_score = 0.0;  // mean score at alpha; evaluation baseline
    bool kept = true;
};

struct SelectionReport {
    PlsConfig config;
    std::vector<ImageSelection> images;  // in detection-set image order
    int kept_count = 0;
    int removed_count = 0;
    /// Per-class detection counts over the kept / removed images (counted on
    /// the unfiltered input detections).
    std::vector<std::int64_t> class_counts_kept;
    std::vector<std::int64_t> class_counts_removed;
};

/// Rank images by the combined metric ascending (ties by image_id) and drop
/// the lowest removal_frac. Kept count is ceil((1 - removal_frac) * l).
SelectionReport select(const DetectionSet& dets, const PlsConfig& cfg);

/// Recommended score threshold: the mean score over detections matched to
/// ground truth. Throws when nothing matches.
double recommend_threshold(const DetectionSet& dets, const AnnotationSet& gt,
                           double match_iou = 0.5);

void save_selection_report(const SelectionReport& report, const std::string& path);

/// The detections of the kept images, as a new set.
DetectionSet kept_detections(const DetectionSet& dets, const SelectionReport& report);

}  // namespace labelsmith
