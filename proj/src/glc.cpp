#include "labelsmith/glc.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "labelsmith/parallel.hpp"

namespace labelsmith {

namespace {

constexpr const char* kCorrectionSchema = "labelsmith/correction_report@1";

void check_threshold(double v, const char* name) {
    if (!(v > 0.0) || v > 1.0) {
        throw std::invalid_argument(std::string("GlcConfig: ") + name +
                                    " must be in (0, 1]");
    }
}

Json bbox_to_json(const BBox& b) { return Json::array({b.x, b.y, b.w, b.h}); }

BBox bbox_from_json(const Json& v) {
    return BBox(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>(),
                v.at(3).get<double>());
}

}  // namespace

void GlcConfig::validate() const {
    if (delta_floor < 0.0 || delta_floor > delta_s) {
        throw std::invalid_argument("GlcConfig: need 0 <= delta_floor <= delta_s");
    }
    if (delta_s > 1.0) throw std::invalid_argument("GlcConfig: delta_s must be <= 1");
    check_threshold(gamma_c, "gamma_c");
    check_threshold(gamma_o, "gamma_o");
    check_threshold(match_iou, "match_iou");
}

ConsistencyMap consistency(const DetectionSet& original,
                           const std::vector<DetectionSet>& augmented,
                           const GlcConfig& cfg) {
    cfg.validate();
    if (augmented.empty()) {
        throw std::invalid_argument("consistency: no augmented variants given");
    }

    std::vector<std::vector<ConsistencyRecord>> per_image(original.image_order.size());
    parallel_for(original.image_order.size(), [&](std::size_t image_index) {
        const std::string& image_id = original.image_order[image_index];
        const std::vector<Detection>& dets = original.by_image.at(image_id);
        std::vector<ConsistencyRecord> records(dets.size());
        for (std::size_t i = 0; i < dets.size(); ++i) {
            records[i].det_index = static_cast<int>(i);
            records[i].variant_ious.assign(augmented.size(), 0.0);
        }

        std::vector<BBox> original_boxes;
        original_boxes.reserve(dets.size());
        for (const Detection& d : dets) original_boxes.push_back(d.box);

        for (std::size_t v = 0; v < augmented.size(); ++v) {
            const std::vector<Detection>* variant_dets = augmented[v].find(image_id);
            if (variant_dets == nullptr || variant_dets->empty()) continue;

            const BoxTransform back = augmented[v].transform.inverse();
            std::vector<BBox> mapped;
            mapped.reserve(variant_dets->size());
            for (const Detection& d : *variant_dets) mapped.push_back(back.apply(d.box));

            const Matching m = match_boxes(original_boxes, mapped, cfg.match_iou);
            for (const Matching::Pair& p : m.pairs) {
                records[p.a_index].variant_ious[v] = p.iou;
            }
        }

        for (ConsistencyRecord& r : records) {
            double sum = 0.0;
            for (double v : r.variant_ious) sum += v;
            r.mu = sum / static_cast<double>(augmented.size());
        }
        per_image[image_index] = std::move(records);
    });

    ConsistencyMap map;
    for (std::size_t i = 0; i < original.image_order.size(); ++i) {
        map.emplace(original.image_order[i], std::move(per_image[i]));
    }
    return map;
}

std::vector<int> detect_false_gt(const std::vector<LabeledBox>& labels,
                                 const std::vector<Detection>& preds, const GlcConfig& cfg) {
    std::vector<int> flagged;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
        bool intersects = false;
        for (const Detection& p : preds) {
            if (p.score < cfg.delta_floor) continue;
            if (iou(labels[i].box, p.box) > 0.0) {
                intersects = true;
                break;
            }
        }
        if (!intersects) flagged.push_back(i);
    }
    return flagged;
}

std::vector<CorrectionReport::Addition> detect_missing_gt(
    const std::vector<LabeledBox>& labels, const std::vector<ConsistencyRecord>& records,
    const std::vector<Detection>& preds, const GlcConfig& cfg) {
    std::vector<CorrectionReport::Addition> additions;
    std::vector<BBox> current;
    current.reserve(labels.size());
    for (const LabeledBox& l : labels) current.push_back(l.box);

    for (int p = 0; p < static_cast<int>(preds.size()); ++p) {
        if (preds[p].score < cfg.delta_s) continue;
        const double mu = p < static_cast<int>(records.size()) ? records[p].mu : 0.0;
        if (!(mu > cfg.gamma_c)) continue;
        double best = 0.0;
        for (const BBox& b : current) best = std::max(best, iou(preds[p].box, b));
        if (best >= cfg.match_iou) continue;

        additions.push_back({LabeledBox{preds[p].box, preds[p].class_id}, p,
                             preds[p].score, mu});
        current.push_back(preds[p].box);  // promotions also block duplicates
    }
    return additions;
}

std::pair<std::vector<CorrectionReport::BoxReplacement>,
          std::vector<CorrectionReport::ClassCorrection>>
correct_noisy_gt(const std::vector<LabeledBox>& labels,
                 const std::vector<ConsistencyRecord>& records,
                 const std::vector<Detection>& preds, const GlcConfig& cfg) {
    std::vector<Detection> candidates;
    std::vector<int> candidate_to_pred;
    for (int p = 0; p < static_cast<int>(preds.size()); ++p) {
        if (preds[p].score >= cfg.delta_s) {
            candidates.push_back(preds[p]);
            candidate_to_pred.push_back(p);
        }
    }

    Matching m = match(labels, candidates, cfg.match_iou);
    std::sort(m.pairs.begin(), m.pairs.end(),
              [](const Matching::Pair& a, const Matching::Pair& b) {
                  return a.a_index < b.a_index;
              });

    std::vector<CorrectionReport::BoxReplacement> replacements;
    std::vector<CorrectionReport::ClassCorrection> class_fixes;
    for (const Matching::Pair& pair : m.pairs) {
        const int pred_index = candidate_to_pred[pair.b_index];
        const double mu =
            pred_index < static_cast<int>(records.size()) ? records[pred_index].mu : 0.0;
        if (!(mu > cfg.gamma_c)) continue;

        const LabeledBox& gt = labels[pair.a_index];
        const Detection& pred = preds[pred_index];
        const bool class_differs = gt.class_id != pred.class_id;
        if (pair.iou < cfg.gamma_o) {
            replacements.push_back({pair.a_index, gt.box, pred.box, pair.iou, mu,
                                    gt.class_id,
                                    class_differs ? pred.class_id : gt.class_id});
        } else if (class_differs) {
            class_fixes.push_back({pair.a_index, gt.class_id, pred.class_id, mu});
        }
    }
    return {std::move(replacements), std::move(class_fixes)};
}

CorrectionReport detect_errors(const AnnotationSet& set, const DetectionSet& original,
                               const ConsistencyMap& records, const GlcConfig& cfg) {
    cfg.validate();
    static const std::vector<ConsistencyRecord> kNoRecords;

    CorrectionReport report;
    for (const ImageRecord& img : set.images) {
        const std::vector<Detection>* preds = original.find(img.image_id);
        if (preds == nullptr) continue;  // not covered by the detector run

        const auto rec_it = records.find(img.image_id);
        const std::vector<ConsistencyRecord>& recs =
            rec_it == records.end() ? kNoRecords : rec_it->second;

        // Work on the countable labels, remembering original positions.
        std::vector<LabeledBox> live;
        std::vector<int> live_to_orig;
        for (int i = 0; i < static_cast<int>(img.labels.size()); ++i) {
            if (!img.labels[i].ignore) {
                live.push_back(img.labels[i]);
                live_to_orig.push_back(i);
            }
        }

        CorrectionReport::ImageReport entry;
        entry.image_id = img.image_id;

        const std::vector<int> flagged = detect_false_gt(live, *preds, cfg);
        std::set<int> flagged_set(flagged.begin(), flagged.end());
        for (int idx : flagged) {
            entry.removed_false_gt.push_back({live_to_orig[idx], live[idx].class_id,
                                              live[idx].box,
                                              "no intersecting prediction"});
        }

        std::vector<LabeledBox> surviving;
        std::vector<int> surviving_to_orig;
        for (int i = 0; i < static_cast<int>(live.size()); ++i) {
            if (!flagged_set.count(i)) {
                surviving.push_back(live[i]);
                surviving_to_orig.push_back(live_to_orig[i]);
            }
        }

        auto [replacements, class_fixes] = correct_noisy_gt(surviving, recs, *preds, cfg);
        for (CorrectionReport::BoxReplacement& r : replacements) {
            surviving[r.gt_index].box = r.new_box;
            surviving[r.gt_index].class_id = r.new_class;
            r.gt_index = surviving_to_orig[r.gt_index];
            entry.replaced_noisy_boxes.push_back(r);
        }
        for (CorrectionReport::ClassCorrection& c : class_fixes) {
            surviving[c.gt_index].class_id = c.new_class;
            c.gt_index = surviving_to_orig[c.gt_index];
            entry.corrected_classes.push_back(c);
        }

        entry.added_missing_gt = detect_missing_gt(surviving, recs, *preds, cfg);

        if (!entry.empty()) report.images.push_back(std::move(entry));
    }

    std::sort(report.images.begin(), report.images.end(),
              [](const CorrectionReport::ImageReport& a,
                 const CorrectionReport::ImageReport& b) { return a.image_id < b.image_id; });
    return report;
}

AnnotationSet apply_corrections(const AnnotationSet& set, const CorrectionReport& report) {
    std::unordered_map<std::string, const CorrectionReport::ImageReport*> by_id;
    for (const CorrectionReport::ImageReport& entry : report.images) {
        by_id[entry.image_id] = &entry;
    }

    AnnotationSet corrected;
    corrected.classes = set.classes;
    for (const ImageRecord& img : set.images) {
        const auto it = by_id.find(img.image_id);
        if (it == by_id.end()) {
            corrected.images.push_back(img);
            continue;
        }
        const CorrectionReport::ImageReport& entry = *it->second;

        std::set<int> removed;
        for (const auto& r : entry.removed_false_gt) removed.insert(r.gt_index);
        std::unordered_map<int, const CorrectionReport::BoxReplacement*> replaced;
        for (const auto& r : entry.replaced_noisy_boxes) replaced[r.gt_index] = &r;
        std::unordered_map<int, int> reclassed;
        for (const auto& c : entry.corrected_classes) reclassed[c.gt_index] = c.new_class;

        ImageRecord out;
        out.image_id = img.image_id;
        out.file_name = img.file_name;
        out.width = img.width;
        out.height = img.height;
        for (int i = 0; i < static_cast<int>(img.labels.size()); ++i) {
            if (removed.count(i)) continue;
            LabeledBox label = img.labels[i];
            const auto rit = replaced.find(i);
            if (rit != replaced.end()) {
                label.box = rit->second->new_box;
                label.class_id = rit->second->new_class;
            }
            const auto cit = reclassed.find(i);
            if (cit != reclassed.end()) label.class_id = cit->second;
            out.labels.push_back(std::move(label));
        }
        for (const auto& a : entry.added_missing_gt) out.labels.push_back(a.label);
        corrected.images.push_back(std::move(out));
    }
    return corrected;
}

std::size_t CorrectionReport::total_removed() const {
    std::size_t n = 0;
    for (const auto& img : images) n += img.removed_false_gt.size();
    return n;
}
std::size_t CorrectionReport::total_added() const {
    std::size_t n = 0;
    for (const auto& img : images) n += img.added_missing_gt.size();
    return n;
}
std::size_t CorrectionReport::total_replaced() const {
    std::size_t n = 0;
    for (const auto& img : images) n += img.replaced_noisy_boxes.size();
    return n;
}
std::size_t CorrectionReport::total_class_corrected() const {
    std::size_t n = 0;
    for (const auto& img : images) n += img.corrected_classes.size();
    return n;
}

void save_correction_report(const CorrectionReport& report, const Json& config,
                            const std::string& path) {
    Json doc = report_envelope(kCorrectionSchema, config);
    Json images = Json::array();
    for (const CorrectionReport::ImageReport& entry : report.images) {
        Json jimg;
        jimg["image_id"] = entry.image_id;

        Json removed = Json::array();
        for (const auto& r : entry.removed_false_gt) {
            removed.push_back(Json{{"gt_index", r.gt_index},
                                   {"class_id", r.class_id},
                                   {"bbox", bbox_to_json(r.box)},
                                   {"reason", r.reason}});
        }
        jimg["removed_false_gt"] = std::move(removed);

        Json added = Json::array();
        for (const auto& a : entry.added_missing_gt) {
            added.push_back(Json{{"class_id", a.label.class_id},
                                 {"bbox", bbox_to_json(a.label.box)},
                                 {"source_det_index", a.source_det_index},
                                 {"score", a.score},
                                 {"mu_iou", a.mu}});
        }
        jimg["added_missing_gt"] = std::move(added);

        Json replaced = Json::array();
        for (const auto& r : entry.replaced_noisy_boxes) {
            replaced.push_back(Json{{"gt_index", r.gt_index},
                                    {"old_bbox", bbox_to_json(r.old_box)},
                                    {"new_bbox", bbox_to_json(r.new_box)},
                                    {"pair_iou", r.pair_iou},
                                    {"mu_iou", r.mu},
                                    {"old_class", r.old_class},
                                    {"new_class", r.new_class}});
        }
        jimg["replaced_noisy_boxes"] = std::move(replaced);

        Json corrected = Json::array();
        for (const auto& c : entry.corrected_classes) {
            corrected.push_back(Json{{"gt_index", c.gt_index},
                                     {"old_class", c.old_class},
                                     {"new_class", c.new_class},
                                     {"mu_iou", c.mu}});
        }
        jimg["corrected_classes"] = std::move(corrected);
        images.push_back(std::move(jimg));
    }
    doc["images"] = std::move(images);
    doc["summary"] = Json{{"removed_false_gt", report.total_removed()},
                          {"added_missing_gt", report.total_added()},
                          {"replaced_noisy_boxes", report.total_replaced()},
                          {"corrected_classes", report.total_class_corrected()}};
    save_report(doc, path);
}

CorrectionReport load_correction_report(const std::string& path) {
    const Json doc = load_json(path);
    CorrectionReport report;
    for (const Json& jimg : doc.value("images", Json::array())) {
        CorrectionReport::ImageReport entry;
        entry.image_id = jimg.at("image_id").get<std::string>();
        for (const Json& r : jimg.value("removed_false_gt", Json::array())) {
            entry.removed_false_gt.push_back({r.at("gt_index").get<int>(),
                                              r.at("class_id").get<int>(),
                                              bbox_from_json(r.at("bbox")),
                                              r.value("reason", std::string())});
        }
        for (const Json& a : jimg.value("added_missing_gt", Json::array())) {
            entry.added_missing_gt.push_back(
                {LabeledBox{bbox_from_json(a.at("bbox")), a.at("class_id").get<int>()},
                 a.value("source_det_index", -1), a.value("score", 0.0),
                 a.value("mu_iou", 0.0)});
        }
        for (const Json& r : jimg.value("replaced_noisy_boxes", Json::array())) {
            entry.replaced_noisy_boxes.push_back(
                {r.at("gt_index").get<int>(), bbox_from_json(r.at("old_bbox")),
                 bbox_from_json(r.at("new_bbox")), r.value("pair_iou", 0.0),
                 r.value("mu_iou", 0.0), r.at("old_class").get<int>(),
                 r.at("new_class").get<int>()});
        }
        for (const Json& c : jimg.value("corrected_classes", Json::array())) {
            entry.corrected_classes.push_back(
                {c.at("gt_index").get<int>(), c.at("old_class").get<int>(),
                 c.at("new_class").get<int>(), c.value("mu_iou", 0.0)});
        }
        report.images.push_back(std::move(entry));
    }
    return report;
}

}  // namespace labelsmith
