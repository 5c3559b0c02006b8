#include "labelsmith/class_stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace labelsmith {

ClassStats class_frequencies(const AnnotationSet& set) {
    ClassStats stats;
    stats.freq.assign(set.classes.size(), 0);
    for (const ImageRecord& img : set.images) {
        for (const LabeledBox& label : img.labels) {
            if (label.ignore) continue;
            if (label.class_id >= static_cast<int>(stats.freq.size())) {
                stats.freq.resize(label.class_id + 1, 0);
            }
            ++stats.freq[label.class_id];
            ++stats.total;
        }
    }
    return stats;
}

ClassStats class_frequencies(const DetectionSet& set, int num_classes) {
    ClassStats stats;
    stats.freq.assign(std::max(num_classes, 0), 0);
    for (const std::string& image_id : set.image_order) {
        for (const Detection& det : set.by_image.at(image_id)) {
            if (det.class_id >= static_cast<int>(stats.freq.size())) {
                stats.freq.resize(det.class_id + 1, 0);
            }
            ++stats.freq[det.class_id];
            ++stats.total;
        }
    }
    return stats;
}

double image_score(const ImageRecord& img, const ClassStats& stats,
                   std::int64_t log_floor) {
    std::set<int> present;
    for (const LabeledBox& label : img.labels) {
        if (!label.ignore) present.insert(label.class_id);
    }
    if (present.empty()) return 0.0;

    double sum = 0.0;
    for (int class_id : present) {
        const auto f = std::max(stats.frequency(class_id), log_floor);
        sum += 1.0 / std::log(static_cast<double>(f));
    }
    return sum / static_cast<double>(present.size());
}

std::vector<double> scale_scores(const std::vector<double>& raw, double gamma_f) {
    if (!(gamma_f > 1.0)) {
        throw std::invalid_argument("scale_scores: gamma_f must exceed 1");
    }
    if (raw.empty()) {
        throw std::invalid_argument("scale_scores: need at least one score");
    }
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, hi = *hi_it;

    std::vector<double> scaled;
    scaled.reserve(raw.size());
    if (hi == lo) {
        scaled.assign(raw.size(), 1.0);
        return scaled;
    }
    for (double v : raw) {
        scaled.push_back(1.0 + (v - lo) / (hi - lo) * (gamma_f - 1.0));
    }
    return scaled;
}

WeightTable image_weights(const AnnotationSet& set, double gamma_f) {
    const ClassStats stats = class_frequencies(set);
    std::vector<double> raw;
    raw.reserve(set.images.size());
    for (const ImageRecord& img : set.images) raw.push_back(image_score(img, stats));

    WeightTable table;
    table.gamma_f = gamma_f;
    if (set.images.empty()) return table;
    const std::vector<double> scaled = scale_scores(raw, gamma_f);
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        table.weights.emplace_back(set.images[i].image_id, scaled[i]);
    }
    return table;
}

}  // namespace labelsmith
