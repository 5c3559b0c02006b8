#include "labelsmith/rcf.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace labelsmith {

namespace {

constexpr const char* kPlanSchema = "labelsmith/batch_plan@1";

// Endless shuffled walk over a fixed id set; reshuffles on wrap-around.
class RareStream {
  public:
    RareStream(std::vector<std::string> ids, std::mt19937_64& rng) : ids_(std::move(ids)) {
        std::shuffle(ids_.begin(), ids_.end(), rng);
    }

    const std::string& next(std::mt19937_64& rng) {
        if (cursor_ == ids_.size()) {
            std::shuffle(ids_.begin(), ids_.end(), rng);
            cursor_ = 0;
        }
        return ids_[cursor_++];
    }

  private:
    std::vector<std::string> ids_;
    std::size_t cursor_ = 0;
};

BatchEntry::Origin stream_origin(int stream) {
    return stream == 0 ? BatchEntry::Origin::rare_copy_1 : BatchEntry::Origin::rare_copy_2;
}

}  // namespace

const char* to_string(BatchEntry::Origin origin) {
    switch (origin) {
        case BatchEntry::Origin::common: return "common";
        case BatchEntry::Origin::rare_copy_1: return "rare_copy_1";
        case BatchEntry::Origin::rare_copy_2: return "rare_copy_2";
    }
    return "common";
}

std::pair<std::vector<std::string>, std::vector<std::string>> stratify(
    const AnnotationSet& set, const ClassStats& stats, int batch_size, double gamma_f,
    const std::set<std::string>& force_common) {
    const int m = static_cast<int>(set.images.size());
    if (batch_size < 1) throw std::invalid_argument("stratify: batch_size must be >= 1");
    if (m < batch_size) {
        throw std::invalid_argument("stratify: need at least one full batch of images");
    }

    std::vector<double> raw;
    raw.reserve(m);
    for (const ImageRecord& img : set.images) raw.push_back(image_score(img, stats));
    const std::vector<double> scaled = scale_scores(raw, gamma_f);

    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scaled[a] != scaled[b]) return scaled[a] > scaled[b];
        return set.images[a].image_id < set.images[b].image_id;
    });

    const int k = (m + batch_size - 1) / batch_size;  // ceil(m / B)

    std::vector<std::string> rare;
    std::vector<bool> is_rare(m, false);
    for (int i : order) {
        if (static_cast<int>(rare.size()) == k) break;
        if (force_common.count(set.images[i].image_id)) continue;
        rare.push_back(set.images[i].image_id);
        is_rare[i] = true;
    }
    if (static_cast<int>(rare.size()) < k) {
        throw std::invalid_argument(
            "stratify: force_common leaves fewer than ceil(m/B) rare candidates");
    }

    std::vector<std::string> common;
    for (int i = 0; i < m; ++i) {
        if (!is_rare[i]) common.push_back(set.images[i].image_id);
    }
    return {std::move(rare), std::move(common)};
}

EpochPlan plan_epoch(const std::vector<std::string>& rare_ids,
                     const std::vector<std::string>& common_ids, int batch_size,
                     std::mt19937_64& rng, bool pair_rare, bool augment_rare) {
    if (rare_ids.empty()) throw std::invalid_argument("plan_epoch: rare set is empty");
    const int rare_slots = pair_rare ? 2 : 1;
    if (pair_rare && batch_size % 2 != 0) {
        throw std::invalid_argument("plan_epoch: rare pairs need an even batch size");
    }
    if (batch_size < rare_slots) {
        throw std::invalid_argument("plan_epoch: batch size below the rare slot count");
    }
    const int commons_per_batch = batch_size - rare_slots;
    if (static_cast<int>(common_ids.size()) < commons_per_batch) {
        throw std::invalid_argument("plan_epoch: not enough common images for one full batch");
    }
    if (commons_per_batch == 0 && !common_ids.empty()) {
        throw std::invalid_argument(
            "plan_epoch: batch has no common slots but common images exist");
    }

    RareStream stream1(rare_ids, rng);
    RareStream stream2(rare_ids, rng);
    std::vector<std::string> commons = common_ids;
    std::shuffle(commons.begin(), commons.end(), rng);

    const std::size_t n_batches =
        commons_per_batch == 0
            ? 1
            : (commons.size() + commons_per_batch - 1) / commons_per_batch;

    EpochPlan epoch;
    std::size_t next_common = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        Batch batch;
        batch.push_back({stream1.next(rng), stream_origin(0), augment_rare});
        if (pair_rare) batch.push_back({stream2.next(rng), stream_origin(1), augment_rare});
        for (int c = 0; c < commons_per_batch && next_common < commons.size(); ++c) {
            batch.push_back({commons[next_common++], BatchEntry::Origin::common, false});
        }
        epoch.push_back(std::move(batch));
    }
    return epoch;
}

BatchPlan plan_epoch(const std::vector<std::string>& rare_ids,
                     const std::vector<std::string>& common_ids, int batch_size,
                     std::uint64_t seed, bool pair_rare, bool augment_rare) {
    std::mt19937_64 rng(seed);
    BatchPlan plan;
    plan.batch_size = batch_size;
    plan.rare_set = rare_ids;
    plan.seed = seed;
    plan.epochs.push_back(
        plan_epoch(rare_ids, common_ids, batch_size, rng, pair_rare, augment_rare));
    return plan;
}

BatchPlan make_plan(const AnnotationSet& set, int batch_size, double gamma_f, int epochs,
                    std::uint64_t seed, bool pair_rare, bool augment_rare,
                    const std::set<std::string>& force_common) {
    if (epochs < 1) throw std::invalid_argument("make_plan: epochs must be >= 1");
    const ClassStats stats = class_frequencies(set);
    auto [rare, common] = stratify(set, stats, batch_size, gamma_f, force_common);

    std::mt19937_64 rng(seed);
    BatchPlan plan;
    plan.batch_size = batch_size;
    plan.rare_set = rare;
    plan.seed = seed;
    for (int e = 0; e < epochs; ++e) {
        plan.epochs.push_back(
            plan_epoch(rare, common, batch_size, rng, pair_rare, augment_rare));
    }
    return plan;
}

void save_plan(const BatchPlan& plan, const Json& config, const std::string& path) {
    Json doc = report_envelope(kPlanSchema, config);
    doc["batch_size"] = plan.batch_size;
    doc["seed"] = plan.seed;
    doc["rare_set"] = plan.rare_set;
    Json epochs = Json::array();
    for (const EpochPlan& epoch : plan.epochs) {
        Json jepoch = Json::array();
        for (const Batch& batch : epoch) {
            Json jbatch = Json::array();
            for (const BatchEntry& entry : batch) {
                jbatch.push_back(Json{{"image_id", entry.image_id},
                                      {"origin", to_string(entry.origin)},
                                      {"augment", entry.augment}});
            }
            jepoch.push_back(std::move(jbatch));
        }
        epochs.push_back(std::move(jepoch));
    }
    doc["epochs"] = std::move(epochs);
    save_report(doc, path);
}

BatchPlan load_plan(const std::string& path) {
    const Json doc = load_json(path);
    BatchPlan plan;
    plan.batch_size = doc.at("batch_size").get<int>();
    plan.seed = doc.at("seed").get<std::uint64_t>();
    plan.rare_set = doc.at("rare_set").get<std::vector<std::string>>();
    for (const Json& jepoch : doc.at("epochs")) {
        EpochPlan epoch;
        for (const Json& jbatch : jepoch) {
            Batch batch;
            for (const Json& jentry : jbatch) {
                BatchEntry entry;
                entry.image_id = jentry.at("image_id").get<std::string>();
                const std::string origin = jentry.at("origin").get<std::string>();
                entry.origin = origin == "rare_copy_1" ? BatchEntry::Origin::rare_copy_1
                               : origin == "rare_copy_2"
                                   ? BatchEntry::Origin::rare_copy_2
                                   : BatchEntry::Origin::common;
                entry.augment = jentry.at("augment").get<bool>();
                batch.push_back(std::move(entry));
            }
            epoch.push_back(std::move(batch));
        }
        plan.epochs.push_back(std::move(epoch));
    }
    return plan;
}

}  // namespace labelsmith
