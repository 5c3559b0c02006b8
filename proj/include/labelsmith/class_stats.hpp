#pragma once

#include <cstdint>
#include <vector>

#include "labelsmith/dataset_io.hpp"

namespace labelsmith {

/// Per-class box counts over a dataset. Index = class id.
struct ClassStats {
    std::vector<std::int64_t> freq;
    std::int64_t total = 0;

    std::int64_t frequency(int class_id) const {
        return class_id >= 0 && class_id < static_cast<int>(freq.size()) ? freq[class_id] : 0;
    }
};

/// Box counts per class over all images. Ignorable regions are excluded.
ClassStats class_frequencies(const AnnotationSet& set);

/// Detection counts per class. `num_classes` may be 0 to size the table from
/// the largest class id seen.
ClassStats class_frequencies(const DetectionSet& set, int num_classes = 0);

/// Per-image rarity score: the mean over the distinct classes present of
/// 1 / ln(max(f_k, log_floor)). Rarer classes give higher scores. Images
/// with no (countable) boxes score 0. The floor keeps the term finite and
/// maximal when a class has fewer than two boxes.
double image_score(const ImageRecord& img, const ClassStats& stats,
                   std::int64_t log_floor = 2);

/// Linear rescale of raw scores onto [1, gamma_f]: min -> 1, max -> gamma_f.
/// An all-equal input maps to all ones. Preserves the ranking.
std::vector<double> scale_scores(const std::vector<double>& raw, double gamma_f);

/// Scaled per-image weights for an external trainer's re-weighting baseline.
WeightTable image_weights(const AnnotationSet& set, double gamma_f);

}  // namespace labelsmith
