#include "labelsmith/quality_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "labelsmith/parallel.hpp"

namespace labelsmith {

namespace {

constexpr const char* kQualitySchema = "labelsmith/quality_report@1";
constexpr const char* kRocSchema = "labelsmith/roc_report@1";

std::vector<LabeledBox> countable_labels(const ImageRecord& img) {
    std::vector<LabeledBox> out;
    for (const LabeledBox& l : img.labels) {
        if (!l.ignore) out.push_back(l);
    }
    return out;
}

Json optional_to_json(const std::optional<double>& v) {
    return v.has_value() ? Json(*v) : Json(nullptr);
}

}  // namespace

QualityReport quality(const DetectionSet& preds, const AnnotationSet& gt, double match_iou) {
    QualityReport report;
    report.match_iou = match_iou;

    long long agree = 0;
    double iou_sum = 0.0;
    std::unordered_map<std::string, bool> gt_ids;
    for (const ImageRecord& img : gt.images) gt_ids[img.image_id] = true;

    std::vector<QualityReport::PerImage> rows(gt.images.size());
    parallel_for(gt.images.size(), [&](std::size_t i) {
        const ImageRecord& img = gt.images[i];
        const std::vector<LabeledBox> labels = countable_labels(img);
        static const std::vector<Detection> kNone;
        const std::vector<Detection>* found = preds.find(img.image_id);
        const std::vector<Detection>& dets = found ? *found : kNone;

        const Matching m = match(labels, dets, match_iou);

        QualityReport::PerImage row;
        row.image_id = img.image_id;
        row.gt_count = static_cast<int>(labels.size());
        row.pred_count = static_cast<int>(dets.size());
        row.matched = static_cast<int>(m.pairs.size());
        for (const Matching::Pair& p : m.pairs) {
            row.iou_sum += p.iou;
            if (labels[p.a_index].class_id == dets[p.b_index].class_id) ++row.class_agree;
        }
        if (row.gt_count > 0) {
            row.mdr = static_cast<double>(row.gt_count - row.matched) / row.gt_count;
        }
        rows[i] = std::move(row);
    });

    for (QualityReport::PerImage& row : rows) {
        report.total_gt += row.gt_count;
        report.total_preds += row.pred_count;
        report.total_matched += row.matched;
        agree += row.class_agree;
        iou_sum += row.iou_sum;
        report.per_image.push_back(std::move(row));
    }

    // Predictions for images the reference set does not know stay unmatched.
    for (const std::string& image_id : preds.image_order) {
        if (gt_ids.count(image_id)) continue;
        QualityReport::PerImage row;
        row.image_id = image_id;
        row.pred_count = static_cast<int>(preds.by_image.at(image_id).size());
        report.total_preds += row.pred_count;
        report.per_image.push_back(std::move(row));
    }

    if (report.total_gt > 0) {
        report.mdr = static_cast<double>(report.total_gt - report.total_matched) /
                     static_cast<double>(report.total_gt);
    }
    if (report.total_preds > 0) {
        report.udr = static_cast<double>(report.total_preds - report.total_matched) /
                     static_cast<double>(report.total_preds);
    }
    if (report.total_matched > 0) {
        report.macc = static_cast<double>(agree) / static_cast<double>(report.total_matched);
        report.miou = iou_sum / static_cast<double>(report.total_matched);
    }
    return report;
}

std::vector<std::pair<std::string, int>> mdr_labels(const DetectionSet& preds,
                                                    const AnnotationSet& gt, double delta_s,
                                                    double mdr_cut, double match_iou) {
    const DetectionSet filtered = filter_by_score(preds, delta_s);
    const QualityReport report = quality(filtered, gt, match_iou);

    std::vector<std::pair<std::string, int>> labels;
    for (const QualityReport::PerImage& row : report.per_image) {
        if (!row.mdr.has_value()) continue;
        labels.emplace_back(row.image_id, *row.mdr > mdr_cut ? 1 : 0);
    }
    return labels;
}

RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("roc_auc: scores and labels differ in length");
    }
    long long positives = 0, negatives = 0;
    for (int l : labels) {
        if (l == 1)
            ++positives;
        else if (l == 0)
            ++negatives;
        else
            throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    }
    if (positives == 0 || negatives == 0) {
        throw std::invalid_argument("roc_auc: degenerate labels (need both classes)");
    }

    // Low score predicts positive: sweep "score <= t" over ascending unique
    // thresholds, accumulating counts.
    std::vector<int> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scores[a] < scores[b]; });

    RocResult roc;
    roc.thresholds.push_back(std::numeric_limits<double>::quiet_NaN());  // nothing flagged
    roc.tpr.push_back(0.0);
    roc.fpr.push_back(0.0);

    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double value = scores[order[i]];
        while (i < order.size() && scores[order[i]] == value) {
            if (labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        roc.thresholds.push_back(value);
        roc.tpr.push_back(static_cast<double>(tp) / positives);
        roc.fpr.push_back(static_cast<double>(fp) / negatives);
    }

    for (std::size_t p = 1; p < roc.tpr.size(); ++p) {
        roc.auc += (roc.fpr[p] - roc.fpr[p - 1]) * (roc.tpr[p] + roc.tpr[p - 1]) / 2.0;
    }
    return roc;
}

const RocResult* MetricComparison::find(const std::string& name) const {
    for (const auto& [n, roc] : rows) {
        if (n == name) return &roc;
    }
    return nullptr;
}

MetricComparison compare_metrics(const DetectionSet& preds, const AnnotationSet& gt,
                                 const CompareConfig& cfg) {
    const auto labeled =
        mdr_labels(preds, gt, cfg.delta_label, cfg.mdr_cut, cfg.match_iou);

    PlsConfig pls_cfg;
    pls_cfg.delta_s = cfg.delta_s;
    pls_cfg.alpha = cfg.alpha;
    const SelectionReport metrics = select(preds, pls_cfg);
    std::unordered_map<std::string, const ImageSelection*> by_id;
    for (const ImageSelection& row : metrics.images) by_id[row.image_id] = &row;

    std::vector<int> labels;
    std::vector<double> s_values, mu_values, n_values, c_values;
    for (const auto& [image_id, label] : labeled) {
        labels.push_back(label);
        const auto it = by_id.find(image_id);
        if (it != by_id.end()) {
            s_values.push_back(it->second->s_metric);
            c_values.push_back(it->second->c_metric);
            mu_values.push_back(it->second->mean_score);
            n_values.push_back(static_cast<double>(it->second->n_at_alpha));
        } else {
            // image absent from the prediction set: nothing was detected
            s_values.push_back(0.0);
            c_values.push_back(0.0);
            mu_values.push_back(0.0);
            n_values.push_back(0.0);
        }
    }

    MetricComparison cmp;
    for (int l : labels) (l == 1 ? cmp.positives : cmp.negatives)++;

    cmp.rows.emplace_back("S_i", roc_auc(s_values, labels));
    for (double beta : cfg.betas) {
        std::vector<double> d_values(s_values.size());
        for (std::size_t i = 0; i < s_values.size(); ++i) {
            d_values[i] = d_metric(s_values[i], c_values[i], beta);
        }
        char name[48];
        std::snprintf(name, sizeof(name), "D_i(beta=%g)", beta);
        cmp.rows.emplace_back(name, roc_auc(d_values, labels));
    }
    cmp.rows.emplace_back("mu_s", roc_auc(mu_values, labels));
    cmp.rows.emplace_back("n_i", roc_auc(n_values, labels));
    return cmp;
}

void save_quality_report(const QualityReport& report, const Json& config,
                         const std::string& path) {
    Json doc = report_envelope(kQualitySchema, config);
    doc["match_iou"] = report.match_iou;
    doc["mdr"] = optional_to_json(report.mdr);
    doc["udr"] = optional_to_json(report.udr);
    doc["macc"] = optional_to_json(report.macc);
    doc["miou"] = optional_to_json(report.miou);
    doc["totals"] = Json{{"gt", report.total_gt},
                         {"predictions", report.total_preds},
                         {"matched", report.total_matched}};
    Json images = Json::array();
    for (const QualityReport::PerImage& row : report.per_image) {
        images.push_back(Json{{"image_id", row.image_id},
                              {"gt_count", row.gt_count},
                              {"pred_count", row.pred_count},
                              {"matched", row.matched},
                              {"class_agree", row.class_agree},
                              {"mdr", optional_to_json(row.mdr)}});
    }
    doc["per_image"] = std::move(images);
    save_report(doc, path);
}

void save_metric_comparison(const MetricComparison& cmp, const Json& config,
                            const std::string& path) {
    Json doc = report_envelope(kRocSchema, config);
    doc["labels"] = Json{{"positive", cmp.positives}, {"negative", cmp.negatives}};
    Json rows = Json::array();
    for (const auto& [name, roc] : cmp.rows) {
        Json thresholds = Json::array();
        for (double t : roc.thresholds) {
            thresholds.push_back(std::isnan(t) ? Json(nullptr) : Json(t));
        }
        rows.push_back(Json{{"metric", name},
                            {"auc", roc.auc},
                            {"thresholds", std::move(thresholds)},
                            {"tpr", roc.tpr},
                            {"fpr", roc.fpr}});
    }
    doc["metrics"] = std::move(rows);
    save_report(doc, path);
}

}  // namespace labelsmith
