#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "labelsmith/dataset_io.hpp"

namespace labelsmith {

struct GlcConfig {
    /// Score floor for the false-GT intersection test: a GT box flagged only
    /// if no prediction at or above this score touches it at all.
    double delta_floor = 0.1;
    /// Score floor for correction candidates (missing promotion, noisy box
    /// replacement, class correction).
    double delta_s = 0.4;
    /// Consistency threshold on the mean IoU across augmented variants.
    double gamma_c = 0.9;
    /// Upper IoU bound below which a matched GT box is considered noisy.
    double gamma_o = 0.9;
    double match_iou = 0.5;

    void validate() const;
};

/// Consistency of one original-frame detection across augmented variants:
/// its best-match IoU per variant (0 when unmatched) and their mean.
struct ConsistencyRecord {
    int det_index = 0;
    std::vector<double> variant_ious;
    double mu = 0.0;
};

using ConsistencyMap = std::unordered_map<std::string, std::vector<ConsistencyRecord>>;

/// Map every augmented set back to the original frame through the inverse
/// of its transform and match it against the original detections. An image
/// or detection missing from a variant contributes IoU 0 for that variant.
ConsistencyMap consistency(const DetectionSet& original,
                           const std::vector<DetectionSet>& augmented,
                           const GlcConfig& cfg);

struct CorrectionReport {
    struct Removal {
        int gt_index;
        int class_id;
        BBox box;
        std::string reason;
    };
    struct Addition {
        LabeledBox label;
        int source_det_index;
        double score;
        double mu;
    };
    struct BoxReplacement {
        int gt_index;
        BBox old_box;
        BBox new_box;
        double pair_iou;
        double mu;
        // old_class != new_class when the pair also disagreed on the class
        int old_class;
        int new_class;
    };
    struct ClassCorrection {
        int gt_index;
        int old_class;
        int new_class;
        double mu;
    };
    struct ImageReport {
        std::string image_id;
        std::vector<Removal> removed_false_gt;
        std::vector<Addition> added_missing_gt;
        std::vector<BoxReplacement> replaced_noisy_boxes;
        std::vector<ClassCorrection> corrected_classes;

        bool empty() const {
            return removed_false_gt.empty() && added_missing_gt.empty() &&
                   replaced_noisy_boxes.empty() && corrected_classes.empty();
        }
    };

    std::vector<ImageReport> images;  // sorted by image_id; only touched images

    std::size_t total_removed() const;
    std::size_t total_added() const;
    std::size_t total_replaced() const;
    std::size_t total_class_corrected() const;
};

/// Per-image checks. Indices refer to the given label list; `labels` must
/// already exclude ignorable regions when the caller has any.
std::vector<int> detect_false_gt(const std::vector<LabeledBox>& labels,
                                 const std::vector<Detection>& preds, const GlcConfig& cfg);

std::vector<CorrectionReport::Addition> detect_missing_gt(
    const std::vector<LabeledBox>& labels, const std::vector<ConsistencyRecord>& records,
    const std::vector<Detection>& preds, const GlcConfig& cfg);

std::pair<std::vector<CorrectionReport::BoxReplacement>,
          std::vector<CorrectionReport::ClassCorrection>>
correct_noisy_gt(const std::vector<LabeledBox>& labels,
                 const std::vector<ConsistencyRecord>& records,
                 const std::vector<Detection>& preds, const GlcConfig& cfg);

/// Run the three checks on every image the prediction bundle covers, in
/// order: false removal, then noisy replacement, then missing promotion
/// against the corrected labels. Images absent from `original` are never
/// touched.
CorrectionReport detect_errors(const AnnotationSet& set, const DetectionSet& original,
                               const ConsistencyMap& records, const GlcConfig& cfg);

/// Apply a report to a set; removals, replacements and additions land
/// atomically per image and the input set is left untouched.
AnnotationSet apply_corrections(const AnnotationSet& set, const CorrectionReport& report);

void save_correction_report(const CorrectionReport& report, const Json& config,
                            const std::string& path);
CorrectionReport load_correction_report(const std::string& path);

}  // namespace labelsmith
