// labelsmith: data-centric tooling for semi-supervised object detection.
// Subcommands cover class statistics, rare-class collages, rare-aware batch
// plans, ground-truth label correction, synthetic error injection,
// pseudo-label selection, quality metrics and a scene/detector simulator.

#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "labelsmith/class_stats.hpp"
#include "labelsmith/core.hpp"
#include "labelsmith/dataset_io.hpp"
#include "labelsmith/error_sim.hpp"
#include "labelsmith/glc.hpp"
#include "labelsmith/pls.hpp"
#include "labelsmith/quality_eval.hpp"
#include "labelsmith/rcc.hpp"
#include "labelsmith/rcf.hpp"
#include "labelsmith/sim_oracle.hpp"
#include "labelsmith/version.hpp"

namespace fs = std::filesystem;
using namespace labelsmith;

namespace {

bool g_verbose = false;

void info(const std::string& message) {
    if (g_verbose) std::cerr << "[labelsmith] " << message << "\n";
}

AnnotationSet load_annotations_cli(const std::string& path, const std::string& format) {
    return load_annotations(path, annotation_format_from_string(format));
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : csv) {
        if (c == ',') {
            if (!current.empty()) parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) parts.push_back(current);
    return parts;
}

// Rare classes may be given as names or numeric ids.
std::vector<int> resolve_classes(const AnnotationSet& set, const std::string& csv) {
    std::vector<int> ids;
    for (const std::string& token : split_list(csv)) {
        const int by_name = set.class_id(token);
        if (by_name >= 0) {
            ids.push_back(by_name);
            continue;
        }
        try {
            std::size_t used = 0;
            const int id = std::stoi(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            if (id < 0 || id >= static_cast<int>(set.classes.size())) {
                throw std::runtime_error("class id out of range: " + token);
            }
            ids.push_back(id);
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("unknown class: " + token);
        }
    }
    return ids;
}

std::pair<int, int> parse_canvas(const std::string& spec) {
    const auto x = spec.find('x');
    if (x == std::string::npos) throw std::runtime_error("canvas must be WxH: " + spec);
    return {std::stoi(spec.substr(0, x)), std::stoi(spec.substr(x + 1))};
}

std::vector<double> parse_betas(const std::string& csv) {
    std::vector<double> betas;
    for (const std::string& token : split_list(csv)) betas.push_back(std::stod(token));
    if (betas.empty()) throw std::runtime_error("--betas needs at least one value");
    return betas;
}

SceneSpec parse_scene_spec(const std::string& path) {
    const Json doc = load_json(path);
    SceneSpec spec;
    spec.n_images = doc.value("n_images", spec.n_images);
    spec.image_w = doc.value("image_w", spec.image_w);
    spec.image_h = doc.value("image_h", spec.image_h);
    spec.num_classes = doc.value("num_classes", spec.num_classes);
    if (doc.contains("class_weights")) {
        spec.class_weights = doc["class_weights"].get<std::vector<double>>();
    }
    spec.power_law = doc.value("power_law", spec.power_law);
    if (doc.contains("boxes_per_image")) {
        spec.boxes_per_image = {doc["boxes_per_image"].at(0).get<int>(),
                                doc["boxes_per_image"].at(1).get<int>()};
    }
    if (doc.contains("box_size")) {
        spec.box_size = {doc["box_size"].at(0).get<double>(),
                         doc["box_size"].at(1).get<double>()};
    }
    spec.margin = doc.value("margin", spec.margin);
    spec.seed = doc.value("seed", spec.seed);
    return spec;
}

DetectorSpec parse_detector_spec(const std::string& path) {
    const Json doc = load_json(path);
    DetectorSpec spec;
    const std::string preset = doc.value("preset", std::string());
    if (preset == "perfect") {
        spec = DetectorSpec::perfect_oracle(doc.value("score", 0.9));
    } else if (preset == "heterogeneous") {
        spec = DetectorSpec::heterogeneous();
    } else if (preset == "calibrated") {
        spec = DetectorSpec::calibrated(doc.value("score_center", 0.36));
    } else if (!preset.empty()) {
        throw std::runtime_error("unknown detector preset: " + preset);
    }
    spec.miss_prob = doc.value("miss_prob", spec.miss_prob);
    spec.miss_quality_coupling = doc.value("miss_quality_coupling", spec.miss_quality_coupling);
    spec.badness_high_frac = doc.value("badness_high_frac", spec.badness_high_frac);
    spec.fp_per_image = doc.value("fp_per_image", spec.fp_per_image);
    spec.jitter_sigma = doc.value("jitter_sigma", spec.jitter_sigma);
    spec.aug_jitter_sigma = doc.value("aug_jitter_sigma", spec.aug_jitter_sigma);
    spec.conf_score_mean = doc.value("conf_score_mean", spec.conf_score_mean);
    spec.conf_score_sigma = doc.value("conf_score_sigma", spec.conf_score_sigma);
    spec.false_score_mean = doc.value("false_score_mean", spec.false_score_mean);
    spec.false_score_sigma = doc.value("false_score_sigma", spec.false_score_sigma);
    if (doc.contains("variants")) {
        spec.variants = doc["variants"].get<std::vector<std::string>>();
    }
    spec.seed = doc.value("seed", spec.seed);
    return spec;
}

int run_stats(const std::string& annotations, const std::string& format, double gamma_f,
              const std::string& out, const std::string& weights_out) {
    const AnnotationSet set = load_annotations_cli(annotations, format);
    const ClassStats stats = class_frequencies(set);

    Json config{{"annotations", annotations},
                {"format", format},
                {"gamma_f", gamma_f}};
    Json doc = report_envelope("labelsmith/class_stats@1", config);

    Json classes = Json::array();
    for (std::size_t k = 0; k < set.classes.size(); ++k) {
        classes.push_back(Json{{"class_id", k},
                               {"name", set.classes[k]},
                               {"frequency", stats.frequency(static_cast<int>(k))}});
    }
    doc["classes"] = std::move(classes);
    doc["total_boxes"] = stats.total;

    Json images = Json::array();
    if (!set.images.empty()) {
        std::vector<double> raw;
        raw.reserve(set.images.size());
        for (const ImageRecord& img : set.images) raw.push_back(image_score(img, stats));
        const std::vector<double> scaled = scale_scores(raw, gamma_f);
        for (std::size_t i = 0; i < set.images.size(); ++i) {
            images.push_back(Json{{"image_id", set.images[i].image_id},
                                  {"raw_f", raw[i]},
                                  {"scaled_f", scaled[i]}});
        }
    }
    doc["images"] = std::move(images);
    save_report(doc, out);
    info("stats written to " + out);

    if (!weights_out.empty()) {
        save_weights(image_weights(set, gamma_f), weights_out);
        info("weights written to " + weights_out);
    }
    return 0;
}

int run_rcc(const std::string& annotations, const std::string& format,
            const std::string& images_dir, const std::string& rare_csv, double gamma_min,
            double gamma_max, const std::string& layout, bool scale_variation,
            const std::string& canvas, std::uint64_t seed, const std::string& out_dir,
            const std::string& merged_out) {
    const AnnotationSet set = load_annotations_cli(annotations, format);

    RccConfig cfg;
    cfg.rare_classes = resolve_classes(set, rare_csv);
    cfg.gamma_min = gamma_min;
    cfg.gamma_max = gamma_max;
    cfg.layout = layout == "grid4x4" ? RccConfig::Layout::grid4x4
                                     : RccConfig::Layout::horizontal;
    if (layout != "grid4x4" && layout != "horizontal") {
        throw std::runtime_error("unknown layout: " + layout);
    }
    cfg.scale_variation = scale_variation;
    std::tie(cfg.canvas_w, cfg.canvas_h) = parse_canvas(canvas);
    cfg.seed = seed;

    const DirectoryImageSource source{fs::path(images_dir)};
    const auto collages = build_collages(set, source, cfg);
    if (collages.empty()) {
        std::cerr << "warning: no rare-class boxes found; nothing to collage\n";
    }

    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < collages.size(); ++i) {
        const std::string path = (fs::path(out_dir) / collage_file_name(i)).string();
        if (!cv::imwrite(path, collages[i].image)) {
            throw std::runtime_error("cannot write collage: " + path);
        }
    }

    AnnotationSet collage_set;
    collage_set.classes = set.classes;
    const AnnotationSet collage_records = append_collages(collage_set, collages);
    save_annotations(collage_records, (fs::path(out_dir) / "collages.json").string());

    Json config{{"annotations", annotations}, {"images", images_dir},
                {"rare_classes", cfg.rare_classes}, {"gamma_min", gamma_min},
                {"gamma_max", gamma_max}, {"layout", layout},
                {"scale_variation", scale_variation}, {"canvas", canvas},
                {"seed", seed}};
    save_provenance(collages, config, (fs::path(out_dir) / "provenance.json").string());

    if (!merged_out.empty()) {
        save_annotations(append_collages(set, collages), merged_out);
        info("merged annotations written to " + merged_out);
    }
    info("wrote " + std::to_string(collages.size()) + " collages to " + out_dir);
    return 0;
}

int run_rcf(const std::string& annotations, const std::string& format, int batch_size,
            double gamma_f, int epochs, std::uint64_t seed, bool no_pair, bool no_augment,
            const std::string& force_common_prefix, const std::string& out) {
    const AnnotationSet set = load_annotations_cli(annotations, format);

    std::set<std::string> force_common;
    if (!force_common_prefix.empty()) {
        for (const ImageRecord& img : set.images) {
            if (img.image_id.rfind(force_common_prefix, 0) == 0) {
                force_common.insert(img.image_id);
            }
        }
    }

    const BatchPlan plan =
        make_plan(set, batch_size, gamma_f, epochs, seed, !no_pair, !no_augment, force_common);
    Json config{{"annotations", annotations}, {"batch_size", batch_size},
                {"gamma_f", gamma_f}, {"epochs", epochs}, {"seed", seed},
                {"pair_rare", !no_pair}, {"augment_rare", !no_augment},
                {"force_common_prefix", force_common_prefix}};
    save_plan(plan, config, out);
    info("plan with " + std::to_string(plan.epochs.size()) + " epochs written to " + out);
    return 0;
}

int run_glc(const std::string& annotations, const std::string& format,
            const std::string& preds_path, const std::string& preds_aug_csv,
            const GlcConfig& cfg, const std::string& out, const std::string& report_out) {
    const AnnotationSet set = load_annotations_cli(annotations, format);
    const DetectionSet original = load_detections(preds_path);

    std::vector<DetectionSet> augmented;
    for (const std::string& path : split_list(preds_aug_csv)) {
        augmented.push_back(load_detections(path));
    }

    const ConsistencyMap records = consistency(original, augmented, cfg);
    const CorrectionReport report = detect_errors(set, original, records, cfg);
    const AnnotationSet corrected = apply_corrections(set, report);

    save_annotations(corrected, out);
    if (!report_out.empty()) {
        Json config{{"annotations", annotations}, {"preds", preds_path},
                    {"preds_aug", preds_aug_csv}, {"delta_floor", cfg.delta_floor},
                    {"delta_s", cfg.delta_s}, {"gamma_c", cfg.gamma_c},
                    {"gamma_o", cfg.gamma_o}, {"match_iou", cfg.match_iou}};
        save_correction_report(report, config, report_out);
    }
    info("removed " + std::to_string(report.total_removed()) + ", added " +
         std::to_string(report.total_added()) + ", replaced " +
         std::to_string(report.total_replaced()) + ", reclassed " +
         std::to_string(report.total_class_corrected()));
    return 0;
}

int run_inject(const std::string& annotations, const std::string& format, int level,
               const std::string& custom, double class_flip_frac, std::uint64_t seed,
               const std::string& out, const std::string& ledger_out) {
    const AnnotationSet set = load_annotations_cli(annotations, format);

    ErrorSpec spec;
    if (!custom.empty()) {
        spec = load_error_spec(custom);
    } else if (level == 1 || level == 2) {
        spec = level_preset(level);
    } else {
        throw std::runtime_error("pass --level 1|2 or --custom spec.json");
    }
    if (class_flip_frac >= 0.0) spec.class_flip_frac = class_flip_frac;
    spec.seed = seed;

    const auto [corrupted, ledger] = inject(set, spec);
    save_annotations(corrupted, out);
    if (!ledger_out.empty()) save_ledger(ledger, spec, ledger_out);
    info("dropped " + std::to_string(ledger.dropped.size()) + ", added " +
         std::to_string(ledger.added_false.size()) + " false, perturbed " +
         std::to_string(ledger.perturbed.size()) + ", flipped " +
         std::to_string(ledger.class_flipped.size()));
    return 0;
}

int run_pls(const std::string& preds_path, const PlsConfig& cfg, const std::string& out,
            const std::string& kept_out) {
    const DetectionSet dets = load_detections(preds_path);
    const SelectionReport report = select(dets, cfg);
    save_selection_report(report, out);
    if (!kept_out.empty()) {
        save_detections(kept_detections(dets, report), kept_out);
    }
    info("kept " + std::to_string(report.kept_count) + " of " +
         std::to_string(report.images.size()) + " images");
    return 0;
}

int run_eval(const std::string& preds_path, const std::string& annotations,
             const std::string& format, double delta_s, double match_iou,
             const std::string& out) {
    const AnnotationSet gt = load_annotations_cli(annotations, format);
    DetectionSet dets = load_detections(preds_path);
    if (delta_s > 0.0) dets = filter_by_score(dets, delta_s);

    const QualityReport report = quality(dets, gt, match_iou);
    Json config{{"preds", preds_path}, {"annotations", annotations},
                {"delta_s", delta_s}, {"match_iou", match_iou}};
    save_quality_report(report, config, out);
    info("quality report written to " + out);
    return 0;
}

int run_eval_roc(const std::string& preds_path, const std::string& annotations,
                 const std::string& format, const std::string& betas_csv,
                 const CompareConfig& base, const std::string& out) {
    const AnnotationSet gt = load_annotations_cli(annotations, format);
    const DetectionSet dets = load_detections(preds_path);

    CompareConfig cfg = base;
    cfg.betas = parse_betas(betas_csv);
    const MetricComparison cmp = compare_metrics(dets, gt, cfg);

    Json config{{"preds", preds_path}, {"annotations", annotations},
                {"betas", cfg.betas}, {"delta_label", cfg.delta_label},
                {"mdr_cut", cfg.mdr_cut}, {"delta_s", cfg.delta_s},
                {"alpha", cfg.alpha}, {"match_iou", cfg.match_iou}};
    save_metric_comparison(cmp, config, out);
    for (const auto& [name, roc] : cmp.rows) {
        std::cout << name << " auc " << roc.auc << "\n";
    }
    return 0;
}

int run_recommend(const std::string& preds_path, const std::string& annotations,
                  const std::string& format, double match_iou, const std::string& out) {
    const AnnotationSet gt = load_annotations_cli(annotations, format);
    const DetectionSet dets = load_detections(preds_path);
    const double delta = recommend_threshold(dets, gt, match_iou);
    std::cout << "recommended delta_s: " << delta << "\n";
    if (!out.empty()) {
        Json config{{"preds", preds_path}, {"annotations", annotations},
                    {"match_iou", match_iou}};
        Json doc = report_envelope("labelsmith/threshold@1", config);
        doc["recommended_delta_s"] = delta;
        save_report(doc, out);
    }
    return 0;
}

int run_simulate(const std::string& scenes_path, const std::string& detector_path,
                 std::int64_t seed, const std::string& out_dir, bool no_images) {
    SceneSpec scene_spec = parse_scene_spec(scenes_path);
    DetectorSpec detector_spec = parse_detector_spec(detector_path);
    if (seed >= 0) {
        scene_spec.seed = static_cast<std::uint64_t>(seed);
        detector_spec.seed = static_cast<std::uint64_t>(seed) + 1;
    }

    const GeneratedScenes scenes = gen_scenes(scene_spec);
    const GeneratedDetections dets = gen_detections(scenes.annotations, detector_spec);

    fs::create_directories(out_dir);
    save_annotations(scenes.annotations, (fs::path(out_dir) / "annotations.json").string());

    if (!no_images) {
        const fs::path image_dir = fs::path(out_dir) / "images";
        fs::create_directories(image_dir);
        for (std::size_t i = 0; i < scenes.images.size(); ++i) {
            const std::string path =
                (image_dir / scenes.annotations.images[i].file_name).string();
            if (!cv::imwrite(path, scenes.images[i])) {
                throw std::runtime_error("cannot write image: " + path);
            }
        }
    }

    for (const DetectionSet& variant : dets.variants) {
        const std::string path =
            (fs::path(out_dir) / ("preds_" + variant.variant_tag + ".json")).string();
        save_detections(variant, path);
    }

    Json config{{"scenes", scenes_path}, {"detector", detector_path}, {"seed", seed}};
    Json doc = report_envelope("labelsmith/sim_truth@1", config);
    Json truth = Json::array();
    for (const ImageTruth& t : dets.truth) {
        truth.push_back(Json{{"image_id", t.image_id},
                             {"gt_count", t.gt_count},
                             {"missed", t.missed},
                             {"true_mdr", t.true_mdr()},
                             {"false_positives", t.fp_count},
                             {"true_detections", t.true_dets},
                             {"iou_sum", t.iou_sum},
                             {"class_correct", t.class_correct}});
    }
    doc["images"] = std::move(truth);
    save_report(doc, (fs::path(out_dir) / "truth.json").string());
    info("simulated " + std::to_string(scenes.images.size()) + " images into " + out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"labelsmith: data-centric SSOD dataset tooling"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "read options from an INI file (flags take precedence)");
    app.add_flag("--verbose", g_verbose, "log progress to stderr");
    app.require_subcommand(1);

    // stats
    std::string annotations, format = "auto", out, weights_out;
    double gamma_f = 20.0;
    auto* stats = app.add_subcommand("stats", "class frequencies and image rarity scores");
    stats->add_option("--annotations", annotations)->required();
    stats->add_option("--format", format, "auto|native|coco|kitti");
    stats->add_option("--gamma-f", gamma_f, "scaling range upper bound");
    stats->add_option("--out", out)->required();
    stats->add_option("--export-weights", weights_out, "per-image weight file");

    // rcc
    std::string images_dir, rare_csv, layout = "horizontal", canvas = "1024x512";
    std::string out_dir, merged_out;
    double gamma_min = 0.25, gamma_max = 0.75;
    bool scale_variation = false;
    std::uint64_t seed = 0;
    auto* rcc = app.add_subcommand("rcc", "build rare-class collages");
    rcc->add_option("--annotations", annotations)->required();
    rcc->add_option("--format", format, "auto|native|coco|kitti");
    rcc->add_option("--images", images_dir, "directory of source images")->required();
    rcc->add_option("--rare-classes", rare_csv, "comma-separated names or ids")->required();
    rcc->add_option("--gamma-min", gamma_min);
    rcc->add_option("--gamma-max", gamma_max);
    rcc->add_option("--layout", layout, "horizontal|grid4x4");
    rcc->add_flag("--scale-variation", scale_variation);
    rcc->add_option("--canvas", canvas, "WxH");
    rcc->add_option("--seed", seed);
    rcc->add_option("--out-dir", out_dir)->required();
    rcc->add_option("--merged-out", merged_out, "write original+collages annotations");

    // rcf
    int batch_size = 8, epochs = 1;
    bool no_pair = false, no_augment = false;
    std::string force_common_prefix;
    auto* rcf = app.add_subcommand("rcf", "emit a rare-aware batch plan");
    rcf->add_option("--annotations", annotations)->required();
    rcf->add_option("--format", format, "auto|native|coco|kitti");
    rcf->add_option("--batch-size", batch_size);
    rcf->add_option("--gamma-f", gamma_f);
    rcf->add_option("--epochs", epochs);
    rcf->add_option("--seed", seed);
    rcf->add_flag("--no-pair-rare", no_pair, "one rare entry per batch instead of a pair");
    rcf->add_flag("--no-augment-rare", no_augment);
    rcf->add_option("--force-common-prefix", force_common_prefix,
                    "image ids with this prefix stay common (collages)");
    rcf->add_option("--out", out)->required();

    // glc
    std::string preds_path, preds_aug_csv, report_out;
    GlcConfig glc_cfg;
    auto* glc = app.add_subcommand("glc", "correct ground-truth labels from consistency");
    glc->add_option("--annotations", annotations)->required();
    glc->add_option("--format", format, "auto|native|coco|kitti");
    glc->add_option("--preds", preds_path, "original-image detections")->required();
    glc->add_option("--preds-aug", preds_aug_csv, "comma-separated variant detection files")
        ->required();
    glc->add_option("--delta-floor", glc_cfg.delta_floor);
    glc->add_option("--delta-s", glc_cfg.delta_s);
    glc->add_option("--gamma-c", glc_cfg.gamma_c);
    glc->add_option("--gamma-o", glc_cfg.gamma_o);
    glc->add_option("--match-iou", glc_cfg.match_iou);
    glc->add_option("--out", out)->required();
    glc->add_option("--report", report_out);

    // inject-errors
    int level = 0;
    std::string custom_spec, ledger_out;
    double class_flip_frac = -1.0;
    auto* inject_cmd = app.add_subcommand("inject-errors", "corrupt ground truth labels");
    inject_cmd->add_option("--annotations", annotations)->required();
    inject_cmd->add_option("--format", format, "auto|native|coco|kitti");
    inject_cmd->add_option("--level", level, "preset 1 or 2");
    inject_cmd->add_option("--custom", custom_spec, "error spec file");
    inject_cmd->add_option("--class-flip-frac", class_flip_frac,
                           "override the class flip fraction");
    inject_cmd->add_option("--seed", seed);
    inject_cmd->add_option("--out", out)->required();
    inject_cmd->add_option("--ledger", ledger_out, "injection ledger file");

    // pls
    PlsConfig pls_cfg;
    std::string kept_out;
    auto* pls = app.add_subcommand("pls", "select pseudo-labeled images");
    pls->add_option("--preds", preds_path)->required();
    pls->add_option("--delta-s", pls_cfg.delta_s);
    pls->add_option("--alpha", pls_cfg.alpha);
    pls->add_option("--beta", pls_cfg.beta);
    pls->add_option("--remove", pls_cfg.removal_frac, "fraction of images to remove");
    pls->add_option("--out", out)->required();
    pls->add_option("--kept-out", kept_out, "detections of the kept images");

    // eval
    double eval_delta = 0.0, match_iou = 0.5;
    auto* eval = app.add_subcommand("eval", "pseudo-label quality metrics");
    eval->add_option("--preds", preds_path)->required();
    eval->add_option("--annotations", annotations)->required();
    eval->add_option("--format", format, "auto|native|coco|kitti");
    eval->add_option("--delta-s", eval_delta, "filter predictions first (0 = keep all)");
    eval->add_option("--match-iou", match_iou);
    eval->add_option("--out", out)->required();

    // eval-roc
    CompareConfig roc_cfg;
    std::string betas_csv = "0.1,0.25";
    auto* eval_roc = app.add_subcommand("eval-roc", "ROC/AUC of the selection metrics");
    eval_roc->add_option("--preds", preds_path)->required();
    eval_roc->add_option("--annotations", annotations)->required();
    eval_roc->add_option("--format", format, "auto|native|coco|kitti");
    eval_roc->add_option("--betas", betas_csv);
    eval_roc->add_option("--delta-label", roc_cfg.delta_label);
    eval_roc->add_option("--mdr-cut", roc_cfg.mdr_cut);
    eval_roc->add_option("--delta-s", roc_cfg.delta_s);
    eval_roc->add_option("--alpha", roc_cfg.alpha);
    eval_roc->add_option("--match-iou", roc_cfg.match_iou);
    eval_roc->add_option("--out", out)->required();

    // recommend-threshold
    auto* recommend = app.add_subcommand("recommend-threshold",
                                         "mean matched score on a validation set");
    recommend->add_option("--preds", preds_path)->required();
    recommend->add_option("--annotations", annotations)->required();
    recommend->add_option("--format", format, "auto|native|coco|kitti");
    recommend->add_option("--match-iou", match_iou);
    recommend->add_option("--out", out);

    // simulate
    std::string scenes_path, detector_path;
    std::int64_t sim_seed = -1;
    bool no_images = false;
    auto* simulate = app.add_subcommand("simulate", "generate synthetic scenes + detections");
    simulate->add_option("--scenes", scenes_path, "scene spec file")->required();
    simulate->add_option("--detector", detector_path, "detector spec file")->required();
    simulate->add_option("--seed", sim_seed, "override both spec seeds");
    simulate->add_option("--out-dir", out_dir)->required();
    simulate->add_flag("--no-images", no_images, "skip writing raster images");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage error
    }

    try {
        if (stats->parsed()) return run_stats(annotations, format, gamma_f, out, weights_out);
        if (rcc->parsed()) {
            return run_rcc(annotations, format, images_dir, rare_csv, gamma_min, gamma_max,
                           layout, scale_variation, canvas, seed, out_dir, merged_out);
        }
        if (rcf->parsed()) {
            return run_rcf(annotations, format, batch_size, gamma_f, epochs, seed, no_pair,
                           no_augment, force_common_prefix, out);
        }
        if (glc->parsed()) {
            return run_glc(annotations, format, preds_path, preds_aug_csv, glc_cfg, out,
                           report_out);
        }
        if (inject_cmd->parsed()) {
            return run_inject(annotations, format, level, custom_spec, class_flip_frac, seed,
                              out, ledger_out);
        }
        if (pls->parsed()) return run_pls(preds_path, pls_cfg, out, kept_out);
        if (eval->parsed()) {
            return run_eval(preds_path, annotations, format, eval_delta, match_iou, out);
        }
        if (eval_roc->parsed()) {
            return run_eval_roc(preds_path, annotations, format, betas_csv, roc_cfg, out);
        }
        if (recommend->parsed()) {
            return run_recommend(preds_path, annotations, format, match_iou, out);
        }
        if (simulate->parsed()) {
            return run_simulate(scenes_path, detector_path, sim_seed, out_dir, no_images);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;  // data error
    }
    return 0;
}
