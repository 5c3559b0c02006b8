#include "labelsmith/error_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "labelsmith/version.hpp"

namespace labelsmith {

namespace {

constexpr const char* kLedgerSchema = "labelsmith/error_ledger@1";

void check_fraction(double v, const char* name) {
    if (v < 0.0 || v > 1.0) {
        throw std::invalid_argument(std::string("ErrorSpec: ") + name + " must be in [0, 1]");
    }
}

void check_range(const std::array<double, 2>& r, const char* name) {
    if (!(r[0] > 0.0) || r[1] < r[0]) {
        throw std::invalid_argument(std::string("ErrorSpec: ") + name +
                                    " must be positive with min <= max");
    }
}

bool overlaps_any(const BBox& box, const std::vector<LabeledBox>& labels) {
    return std::any_of(labels.begin(), labels.end(),
                       [&](const LabeledBox& l) { return iou(box, l.box) > 0.0; });
}

int sign_of(std::mt19937_64& rng) {
    return std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? -1 : 1;
}

}  // namespace

void ErrorSpec::validate() const {
    check_fraction(drop_frac, "drop_frac");
    check_fraction(noise_image_frac, "noise_image_frac");
    check_fraction(class_flip_frac, "class_flip_frac");
    if (false_per_image < 0) {
        throw std::invalid_argument("ErrorSpec: false_per_image must be >= 0");
    }
    check_range(false_w_range, "false_w_range");
    check_range(false_h_range, "false_h_range");
    if (epsilon_b < 0.0 || epsilon_b >= 1.0) {
        throw std::invalid_argument("ErrorSpec: epsilon_b must be in [0, 1)");
    }
}

ErrorSpec level_preset(int level) {
    ErrorSpec spec;
    spec.false_w_range = {10.0, 100.0};
    spec.false_h_range = {10.0, 100.0};
    spec.noise_image_frac = 0.20;
    switch (level) {
        case 1:
            spec.drop_frac = 0.20;
            spec.false_per_image = 1;
            spec.epsilon_b = 0.1;
            break;
        case 2:
            spec.drop_frac = 0.50;
            spec.false_per_image = 5;
            spec.epsilon_b = 0.2;
            break;
        default:
            throw std::invalid_argument("level_preset: level must be 1 or 2");
    }
    return spec;
}

BBox perturb_box(const BBox& box, double epsilon, const std::array<int, 4>& signs,
                 int img_w, int img_h) {
    const double dw = signs[0] * epsilon * box.w;
    const double dh = signs[1] * epsilon * box.h;
    double x = box.x + signs[2] * dw / 2.0;
    double y = box.y + signs[3] * dh / 2.0;
    double w = box.w + dw;
    double h = box.h + dh;
    if (img_w > 0 && img_h > 0) {
        x = std::clamp(x, 0.0, static_cast<double>(img_w) - 1.0);
        y = std::clamp(y, 0.0, static_cast<double>(img_h) - 1.0);
        w = std::min(w, img_w - x);
        h = std::min(h, img_h - y);
    }
    return BBox(x, y, std::max(1.0, w), std::max(1.0, h));
}

std::pair<AnnotationSet, InjectionLedger> inject(const AnnotationSet& set,
                                                 const ErrorSpec& spec) {
    spec.validate();
    if (spec.class_flip_frac > 0.0 && set.classes.size() < 2) {
        throw std::invalid_argument("inject: class flips need at least two classes");
    }

    std::mt19937_64 rng(spec.seed);
    InjectionLedger ledger;

    // (a) drop a uniform global sample of boxes
    std::vector<std::pair<int, int>> all_boxes;  // (image index, label index)
    for (int i = 0; i < static_cast<int>(set.images.size()); ++i) {
        for (int j = 0; j < static_cast<int>(set.images[i].labels.size()); ++j) {
            if (!set.images[i].labels[j].ignore) all_boxes.emplace_back(i, j);
        }
    }
    const auto n_drop =
        static_cast<std::size_t>(std::floor(spec.drop_frac * all_boxes.size() + 1e-9));
    std::vector<std::pair<int, int>> drop_sample = all_boxes;
    std::shuffle(drop_sample.begin(), drop_sample.end(), rng);
    drop_sample.resize(n_drop);
    std::sort(drop_sample.begin(), drop_sample.end());

    std::vector<std::vector<bool>> dropped(set.images.size());
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        dropped[i].assign(set.images[i].labels.size(), false);
    }
    for (const auto& [i, j] : drop_sample) {
        dropped[i][j] = true;
        ledger.dropped.push_back({set.images[i].image_id, j, set.images[i].labels[j]});
    }

    // Survivors, remembering their index in the clean label list.
    struct Survivor {
        int orig_index;
        LabeledBox label;
    };
    std::vector<std::vector<Survivor>> survivors(set.images.size());
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        for (int j = 0; j < static_cast<int>(set.images[i].labels.size()); ++j) {
            if (!dropped[i][j]) survivors[i].push_back({j, set.images[i].labels[j]});
        }
    }

    // (b) false boxes, rejected against the *clean* labels so an oracle
    // detector that reproduces the clean set never overlaps them
    std::vector<std::vector<LabeledBox>> added(set.images.size());
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        const ImageRecord& img = set.images[i];
        int skipped = 0;
        for (int f = 0; f < spec.false_per_image; ++f) {
            const double w = std::uniform_real_distribution<double>(
                spec.false_w_range[0], spec.false_w_range[1])(rng);
            const double h = std::uniform_real_distribution<double>(
                spec.false_h_range[0], spec.false_h_range[1])(rng);
            if (img.width <= 0 || img.height <= 0 || w >= img.width || h >= img.height) {
                ++skipped;
                continue;
            }
            bool placed = false;
            for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
                const double x =
                    std::uniform_real_distribution<double>(0.0, img.width - w)(rng);
                const double y =
                    std::uniform_real_distribution<double>(0.0, img.height - h)(rng);
                const BBox box(x, y, w, h);
                if (overlaps_any(box, img.labels)) continue;
                const int class_id = std::uniform_int_distribution<int>(
                    0, static_cast<int>(set.classes.size()) - 1)(rng);
                added[i].push_back({box, class_id});
                ledger.added_false.push_back({img.image_id, added[i].back()});
                placed = true;
            }
            if (!placed) ++skipped;
        }
        if (skipped > 0) ledger.skipped_false.push_back({img.image_id, skipped});
    }

    // (c) box noise on a uniform sample of images
    std::vector<int> image_ids(set.images.size());
    for (std::size_t i = 0; i < image_ids.size(); ++i) image_ids[i] = static_cast<int>(i);
    const auto n_noise = static_cast<std::size_t>(
        std::floor(spec.noise_image_frac * set.images.size() + 1e-9));
    std::shuffle(image_ids.begin(), image_ids.end(), rng);
    image_ids.resize(n_noise);
    std::sort(image_ids.begin(), image_ids.end());
    for (int i : image_ids) {
        const ImageRecord& img = set.images[i];
        for (Survivor& s : survivors[i]) {
            if (s.label.ignore) continue;
            const std::array<int, 4> signs{sign_of(rng), sign_of(rng), sign_of(rng),
                                           sign_of(rng)};
            const BBox perturbed =
                perturb_box(s.label.box, spec.epsilon_b, signs, img.width, img.height);
            ledger.perturbed.push_back({img.image_id, s.orig_index, s.label.box, perturbed});
            s.label.box = perturbed;
        }
    }

    // (d) class flips on a uniform sample of surviving boxes
    if (spec.class_flip_frac > 0.0) {
        std::vector<std::pair<int, int>> eligible;  // (image index, survivor slot)
        for (std::size_t i = 0; i < survivors.size(); ++i) {
            for (int s = 0; s < static_cast<int>(survivors[i].size()); ++s) {
                if (!survivors[i][s].label.ignore) {
                    eligible.emplace_back(static_cast<int>(i), s);
                }
            }
        }
        const auto n_flip = static_cast<std::size_t>(
            std::floor(spec.class_flip_frac * eligible.size() + 1e-9));
        std::shuffle(eligible.begin(), eligible.end(), rng);
        eligible.resize(n_flip);
        std::sort(eligible.begin(), eligible.end());
        const int k = static_cast<int>(set.classes.size());
        for (const auto& [i, s] : eligible) {
            Survivor& sv = survivors[i][s];
            const int old_class = sv.label.class_id;
            const int draw = std::uniform_int_distribution<int>(0, k - 2)(rng);
            const int new_class = draw >= old_class ? draw + 1 : draw;
            ledger.class_flipped.push_back(
                {set.images[i].image_id, sv.orig_index, old_class, new_class});
            sv.label.class_id = new_class;
        }
    }

    AnnotationSet corrupted;
    corrupted.classes = set.classes;
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        ImageRecord img;
        img.image_id = set.images[i].image_id;
        img.file_name = set.images[i].file_name;
        img.width = set.images[i].width;
        img.height = set.images[i].height;
        for (const Survivor& s : survivors[i]) img.labels.push_back(s.label);
        for (const LabeledBox& f : added[i]) img.labels.push_back(f);
        corrupted.images.push_back(std::move(img));
    }
    return {std::move(corrupted), std::move(ledger)};
}

AnnotationSet restore(const AnnotationSet& corrupted, const InjectionLedger& ledger) {
    struct PerImage {
        std::map<int, LabeledBox> dropped;  // original index -> label
        std::map<int, BBox> perturbed;      // original index -> clean box
        std::map<int, int> flipped;         // original index -> clean class
        int appended = 0;
    };
    std::unordered_map<std::string, PerImage> by_image;
    for (const auto& d : ledger.dropped) by_image[d.image_id].dropped.emplace(d.index, d.label);
    for (const auto& p : ledger.perturbed) {
        by_image[p.image_id].perturbed.emplace(p.index, p.original);
    }
    for (const auto& f : ledger.class_flipped) {
        by_image[f.image_id].flipped.emplace(f.index, f.old_class);
    }
    for (const auto& a : ledger.added_false) ++by_image[a.image_id].appended;

    AnnotationSet clean;
    clean.classes = corrupted.classes;
    for (const ImageRecord& img : corrupted.images) {
        ImageRecord restored;
        restored.image_id = img.image_id;
        restored.file_name = img.file_name;
        restored.width = img.width;
        restored.height = img.height;

        const auto it = by_image.find(img.image_id);
        if (it == by_image.end()) {
            restored.labels = img.labels;
            clean.images.push_back(std::move(restored));
            continue;
        }
        const PerImage& edits = it->second;
        if (edits.appended > static_cast<int>(img.labels.size())) {
            throw std::runtime_error("restore: ledger lists more false boxes than " +
                                     img.image_id + " holds");
        }
        const int survivors = static_cast<int>(img.labels.size()) - edits.appended;
        const int original_count = survivors + static_cast<int>(edits.dropped.size());

        int next_survivor = 0;
        for (int orig = 0; orig < original_count; ++orig) {
            const auto dit = edits.dropped.find(orig);
            if (dit != edits.dropped.end()) {
                restored.labels.push_back(dit->second);
                continue;
            }
            if (next_survivor >= survivors) {
                throw std::runtime_error("restore: ledger inconsistent for " + img.image_id);
            }
            LabeledBox label = img.labels[next_survivor++];
            const auto pit = edits.perturbed.find(orig);
            if (pit != edits.perturbed.end()) label.box = pit->second;
            const auto fit = edits.flipped.find(orig);
            if (fit != edits.flipped.end()) label.class_id = fit->second;
            restored.labels.push_back(std::move(label));
        }
        clean.images.push_back(std::move(restored));
    }
    return clean;
}

void save_ledger(const InjectionLedger& ledger, const ErrorSpec& spec,
                 const std::string& path) {
    Json spec_json{{"drop_frac", spec.drop_frac},
                   {"false_per_image", spec.false_per_image},
                   {"false_w_range", spec.false_w_range},
                   {"false_h_range", spec.false_h_range},
                   {"noise_image_frac", spec.noise_image_frac},
                   {"epsilon_b", spec.epsilon_b},
                   {"class_flip_frac", spec.class_flip_frac},
                   {"seed", spec.seed}};
    Json doc = report_envelope(kLedgerSchema, spec_json);

    Json dropped = Json::array();
    for (const auto& d : ledger.dropped) {
        dropped.push_back(Json{{"image_id", d.image_id},
                               {"index", d.index},
                               {"class_id", d.label.class_id},
                               {"bbox", {d.label.box.x, d.label.box.y, d.label.box.w,
                                         d.label.box.h}},
                               {"ignore", d.label.ignore}});
    }
    doc["dropped"] = std::move(dropped);

    Json added = Json::array();
    for (const auto& a : ledger.added_false) {
        added.push_back(Json{{"image_id", a.image_id},
                             {"class_id", a.label.class_id},
                             {"bbox", {a.label.box.x, a.label.box.y, a.label.box.w,
                                       a.label.box.h}}});
    }
    doc["added_false"] = std::move(added);

    Json perturbed = Json::array();
    for (const auto& p : ledger.perturbed) {
        perturbed.push_back(Json{
            {"image_id", p.image_id},
            {"index", p.index},
            {"original", {p.original.x, p.original.y, p.original.w, p.original.h}},
            {"perturbed", {p.perturbed.x, p.perturbed.y, p.perturbed.w, p.perturbed.h}}});
    }
    doc["perturbed"] = std::move(perturbed);

    Json flipped = Json::array();
    for (const auto& f : ledger.class_flipped) {
        flipped.push_back(Json{{"image_id", f.image_id},
                               {"index", f.index},
                               {"old_class", f.old_class},
                               {"new_class", f.new_class}});
    }
    doc["class_flipped"] = std::move(flipped);

    Json skipped = Json::array();
    for (const auto& s : ledger.skipped_false) {
        skipped.push_back(Json{{"image_id", s.image_id}, {"count", s.count}});
    }
    doc["skipped_false"] = std::move(skipped);
    save_report(doc, path);
}

namespace {

std::array<double, 2> range_from_json(const Json& v) {
    return {v.at(0).get<double>(), v.at(1).get<double>()};
}

BBox bbox_from_json(const Json& v) {
    return BBox(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>(),
                v.at(3).get<double>());
}

}  // namespace

ErrorSpec load_error_spec(const std::string& path) {
    Json doc = load_json(path);
    if (doc.contains("config")) doc = doc["config"];  // accept a saved ledger too
    ErrorSpec spec;
    spec.drop_frac = doc.value("drop_frac", 0.0);
    spec.false_per_image = doc.value("false_per_image", 0);
    if (doc.contains("false_w_range")) spec.false_w_range = range_from_json(doc["false_w_range"]);
    if (doc.contains("false_h_range")) spec.false_h_range = range_from_json(doc["false_h_range"]);
    spec.noise_image_frac = doc.value("noise_image_frac", 0.0);
    spec.epsilon_b = doc.value("epsilon_b", 0.0);
    spec.class_flip_frac = doc.value("class_flip_frac", 0.0);
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
}

InjectionLedger load_ledger(const std::string& path) {
    const Json doc = load_json(path);
    InjectionLedger ledger;
    for (const Json& d : doc.value("dropped", Json::array())) {
        ledger.dropped.push_back({d.at("image_id").get<std::string>(), d.at("index").get<int>(),
                                  LabeledBox{bbox_from_json(d.at("bbox")),
                                             d.at("class_id").get<int>(),
                                             d.value("ignore", false)}});
    }
    for (const Json& a : doc.value("added_false", Json::array())) {
        ledger.added_false.push_back(
            {a.at("image_id").get<std::string>(),
             LabeledBox{bbox_from_json(a.at("bbox")), a.at("class_id").get<int>()}});
    }
    for (const Json& p : doc.value("perturbed", Json::array())) {
        ledger.perturbed.push_back({p.at("image_id").get<std::string>(),
                                    p.at("index").get<int>(),
                                    bbox_from_json(p.at("original")),
                                    bbox_from_json(p.at("perturbed"))});
    }
    for (const Json& f : doc.value("class_flipped", Json::array())) {
        ledger.class_flipped.push_back({f.at("image_id").get<std::string>(),
                                        f.at("index").get<int>(), f.at("old_class").get<int>(),
                                        f.at("new_class").get<int>()});
    }
    for (const Json& s : doc.value("skipped_false", Json::array())) {
        ledger.skipped_false.push_back(
            {s.at("image_id").get<std::string>(), s.at("count").get<int>()});
    }
    return ledger;
}

}  // namespace labelsmith
