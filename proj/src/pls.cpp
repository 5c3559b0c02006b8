#include "labelsmith/pls.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace labelsmith {

namespace {

constexpr const char* kSelectionSchema = "labelsmith/selection_report@1";

}  // namespace

void PlsConfig::validate() const {
    if (alpha < 0.0 || alpha > delta_s) {
        throw std::invalid_argument("PlsConfig: alpha must satisfy 0 <= alpha <= delta_s");
    }
    if (delta_s > 1.0) throw std::invalid_argument("PlsConfig: delta_s must be <= 1");
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("PlsConfig: beta must be in [0, 1]");
    if (removal_frac < 0.0 || removal_frac > 1.0) {
        throw std::invalid_argument("PlsConfig: removal_frac must be in [0, 1]");
    }
}

DetectionSet filter_by_score(const DetectionSet& dets, double delta_s) {
    DetectionSet out;
    out.variant_tag = dets.variant_tag;
    out.transform = dets.transform;
    for (const std::string& image_id : dets.image_order) {
        out.ensure_image(image_id);
        for (const Detection& d : dets.by_image.at(image_id)) {
            if (d.score >= delta_s) out.add(image_id, d);
        }
    }
    return out;
}

double score_metric(int n_at_delta, int n_at_alpha) {
    if (n_at_alpha <= 0) return 0.0;
    return static_cast<double>(n_at_delta) / static_cast<double>(n_at_alpha);
}

double class_metric(const std::vector<int>& distinct_classes, const ClassStats& stats) {
    if (distinct_classes.empty() || stats.total <= 0) return 0.0;
    double sum = 0.0;
    for (int class_id : distinct_classes) {
        sum += 1.0 - static_cast<double>(stats.frequency(class_id)) /
                         static_cast<double>(stats.total);
    }
    return sum / static_cast<double>(distinct_classes.size());
}

double d_metric(double s_metric, double c_metric, double beta) {
    return (1.0 - beta) * s_metric + beta * c_metric;
}

SelectionReport select(const DetectionSet& dets, const PlsConfig& cfg) {
    cfg.validate();

    const DetectionSet at_alpha = filter_by_score(dets, cfg.alpha);
    const ClassStats stats = class_frequencies(at_alpha);

    SelectionReport report;
    report.config = cfg;
    for (const std::string& image_id : dets.image_order) {
        const std::vector<Detection>& alpha_dets = at_alpha.by_image.at(image_id);

        ImageSelection row;
        row.image_id = image_id;
        row.n_at_alpha = static_cast<int>(alpha_dets.size());
        std::set<int> classes;
        double score_sum = 0.0;
        for (const Detection& d : alpha_dets) {
            if (d.score >= cfg.delta_s) ++row.n_at_delta;
            classes.insert(d.class_id);
            score_sum += d.score;
        }
        row.s_metric = score_metric(row.n_at_delta, row.n_at_alpha);
        row.c_metric = class_metric({classes.begin(), classes.end()}, stats);
        row.d_metric = labelsmith::d_metric(row.s_metric, row.c_metric, cfg.beta);
        row.mean_score = alpha_dets.empty() ? 0.0 : score_sum / alpha_dets.size();
        report.images.push_back(std::move(row));
    }

    const auto l = static_cast<long long>(report.images.size());
    const auto removed =
        static_cast<long long>(std::floor(cfg.removal_frac * static_cast<double>(l) + 1e-9));

    std::vector<int> order(report.images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (report.images[a].d_metric != report.images[b].d_metric) {
            return report.images[a].d_metric < report.images[b].d_metric;
        }
        return report.images[a].image_id < report.images[b].image_id;
    });
    for (long long r = 0; r < removed; ++r) report.images[order[r]].kept = false;

    report.removed_count = static_cast<int>(removed);
    report.kept_count = static_cast<int>(l - removed);
    for (const ImageSelection& row : report.images) {
        auto& counts = row.kept ? report.class_counts_kept : report.class_counts_removed;
        for (const Detection& d : dets.by_image.at(row.image_id)) {
            if (d.class_id >= static_cast<int>(counts.size())) counts.resize(d.class_id + 1, 0);
            ++counts[d.class_id];
        }
    }
    const std::size_t n_classes =
        std::max(report.class_counts_kept.size(), report.class_counts_removed.size());
    report.class_counts_kept.resize(n_classes, 0);
    report.class_counts_removed.resize(n_classes, 0);
    return report;
}

double recommend_threshold(const DetectionSet& dets, const AnnotationSet& gt,
                           double match_iou) {
    double score_sum = 0.0;
    long long matched = 0;
    for (const ImageRecord& img : gt.images) {
        const std::vector<Detection>* preds = dets.find(img.image_id);
        if (preds == nullptr) continue;
        std::vector<LabeledBox> countable;
        for (const LabeledBox& l : img.labels) {
            if (!l.ignore) countable.push_back(l);
        }
        const Matching m = match(countable, *preds, match_iou);
        for (const Matching::Pair& p : m.pairs) {
            score_sum += (*preds)[p.b_index].score;
            ++matched;
        }
    }
    if (matched == 0) {
        throw std::runtime_error("recommend_threshold: no matched detections");
    }
    return score_sum / static_cast<double>(matched);
}

void save_selection_report(const SelectionReport& report, const std::string& path) {
    Json config{{"delta_s", report.config.delta_s},
                {"alpha", report.config.alpha},
                {"beta", report.config.beta},
                {"removal_frac", report.config.removal_frac}};
    Json doc = report_envelope(kSelectionSchema, config);

    Json images = Json::array();
    for (const ImageSelection& row : report.images) {
        images.push_back(Json{{"image_id", row.image_id},
                              {"n_at_delta", row.n_at_delta},
                              {"n_at_alpha", row.n_at_alpha},
                              {"s_metric", row.s_metric},
                              {"c_metric", row.c_metric},
                              {"d_metric", row.d_metric},
                              {"mean_score", row.mean_score},
                              {"kept", row.kept}});
    }
    doc["images"] = std::move(images);
    doc["summary"] = Json{{"kept", report.kept_count},
                          {"removed", report.removed_count},
                          {"class_counts_kept", report.class_counts_kept},
                          {"class_counts_removed", report.class_counts_removed}};
    save_report(doc, path);
}

DetectionSet kept_detections(const DetectionSet& dets, const SelectionReport& report) {
    DetectionSet out;
    out.variant_tag = dets.variant_tag;
    out.transform = dets.transform;
    for (const ImageSelection& row : report.images) {
        if (!row.kept) continue;
        out.ensure_image(row.image_id);
        for (const Detection& d : dets.by_image.at(row.image_id)) out.add(row.image_id, d);
    }
    return out;
}

}  // namespace labelsmith
