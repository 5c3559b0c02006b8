#pragma once

#include <optional>
#include <string>
#include <vector>

#include "labelsmith/dataset_io.hpp"
#include "labelsmith/pls.hpp"

namespace labelsmith {

/// Pseudo-label quality against reference ground truth. Matching is
/// class-agnostic; class agreement is scored separately (a box found with
/// the wrong class is a classification error, not a miss). Aggregates are
/// micro-averages over boxes. Undefined ratios (no GT, no predictions, no
/// matches) are reported as absent.
struct QualityReport {
    struct PerImage {
        std::string image_id;
        int gt_count = 0;
        int pred_count = 0;
        int matched = 0;
        int class_agree = 0;
        double iou_sum = 0.0;
        std::optional<double> mdr;
    };

    double match_iou = 0.5;
    std::optional<double> mdr;
    std::optional<double> udr;
    std::optional<double> macc;
    std::optional<double> miou;
    long long total_gt = 0;
    long long total_preds = 0;
    long long total_matched = 0;
    std::vector<PerImage> per_image;  // in ground-truth image order
};

QualityReport quality(const DetectionSet& preds, const AnnotationSet& gt,
                      double match_iou = 0.5);

/// Per-image binary labels: 1 iff the image's missing-detection rate, after
/// filtering predictions at delta_s, strictly exceeds mdr_cut. Images
/// without ground-truth boxes carry no label and are skipped.
std::vector<std::pair<std::string, int>> mdr_labels(const DetectionSet& preds,
                                                    const AnnotationSet& gt, double delta_s,
                                                    double mdr_cut = 0.5,
                                                    double match_iou = 0.5);

/// ROC where LOW scores predict the positive label. AUC is the trapezoid
/// area, which equals the Mann-Whitney pairwise statistic.
struct RocResult {
    std::vector<double> thresholds;
    std::vector<double> tpr;
    std::vector<double> fpr;
    double auc = 0.0;
};

RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// ROC comparison of the selection metrics against the same MDR labels.
struct CompareConfig {
    double delta_label = 0.9;  // threshold behind the MDR labels
    double mdr_cut = 0.5;
    double delta_s = 0.9;  // threshold for the S metric
    double alpha = 0.1;
    std::vector<double> betas{0.1, 0.25};
    double match_iou = 0.5;
};

struct MetricComparison {
    std::vector<std::pair<std::string, RocResult>> rows;
    int positives = 0;
    int negatives = 0;

    const RocResult* find(const std::string& name) const;
};

MetricComparison compare_metrics(const DetectionSet& preds, const AnnotationSet& gt,
                                 const CompareConfig& cfg);

void save_quality_report(const QualityReport& report, const Json& config,
                         const std::string& path);
void save_metric_comparison(const MetricComparison& cmp, const Json& config,
                            const std::string& path);

}  // namespace labelsmith
