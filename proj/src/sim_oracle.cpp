#include "labelsmith/sim_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

namespace labelsmith {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double uniform_in(std::mt19937_64& rng, const std::array<double, 2>& range) {
    if (range[0] == range[1]) return range[0];
    return std::uniform_real_distribution<double>(range[0], range[1])(rng);
}

// Normal draw clipped to [0, 1]; sigma <= 0 degenerates to the mean.
double clipped_normal(std::mt19937_64& rng, double mean, double sigma) {
    if (sigma <= 0.0) return clamp01(mean);
    return clamp01(std::normal_distribution<double>(mean, sigma)(rng));
}

// Standard normal truncated at +-3, so jitter magnitudes are hard-bounded.
double bounded_normal(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double z = normal(rng);
    while (std::abs(z) > 3.0) z = normal(rng);
    return z;
}

bool overlaps_any(const BBox& box, const std::vector<LabeledBox>& labels) {
    return std::any_of(labels.begin(), labels.end(),
                       [&](const LabeledBox& l) { return iou(box, l.box) > 0.0; });
}

BBox clamp_to_image(double x, double y, double w, double h, int img_w, int img_h) {
    x = std::clamp(x, 0.0, static_cast<double>(img_w) - 1.0);
    y = std::clamp(y, 0.0, static_cast<double>(img_h) - 1.0);
    w = std::max(1.0, std::min(w, img_w - x));
    h = std::max(1.0, std::min(h, img_h - y));
    return BBox(x, y, w, h);
}

std::string image_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sim_%06d", index);
    return buf;
}

}  // namespace

cv::Vec3b class_color(int class_id) {
    const int v = class_id + 1;
    return cv::Vec3b(static_cast<uchar>((v * 67 + 60) % 256),
                     static_cast<uchar>((v * 101 + 80) % 256),
                     static_cast<uchar>((v * 151 + 100) % 256));
}

GeneratedScenes gen_scenes(const SceneSpec& spec) {
    if (spec.num_classes < 1) throw std::invalid_argument("gen_scenes: need >= 1 class");
    if (!spec.class_weights.empty() &&
        static_cast<int>(spec.class_weights.size()) != spec.num_classes) {
        throw std::invalid_argument("gen_scenes: class_weights size != num_classes");
    }
    if (spec.box_size[1] + 2.0 * spec.margin >= std::min(spec.image_w, spec.image_h)) {
        throw std::invalid_argument("gen_scenes: boxes plus margin do not fit the image");
    }

    std::vector<double> weights = spec.class_weights;
    if (weights.empty()) {
        for (int k = 0; k < spec.num_classes; ++k) {
            weights.push_back(std::pow(static_cast<double>(k + 1), -spec.power_law));
        }
    }

    std::mt19937_64 rng(spec.seed);
    std::discrete_distribution<int> pick_class(weights.begin(), weights.end());
    std::uniform_int_distribution<int> box_count(spec.boxes_per_image[0],
                                                 spec.boxes_per_image[1]);

    GeneratedScenes out;
    for (int k = 0; k < spec.num_classes; ++k) {
        out.annotations.classes.push_back("class_" + std::to_string(k));
    }

    for (int i = 0; i < spec.n_images; ++i) {
        ImageRecord img;
        img.image_id = image_name(i);
        img.file_name = img.image_id + ".png";
        img.width = spec.image_w;
        img.height = spec.image_h;

        cv::Mat raster = cv::Mat::zeros(spec.image_h, spec.image_w, CV_8UC3);

        const int boxes = box_count(rng);
        for (int b = 0; b < boxes; ++b) {
            const int class_id = pick_class(rng);
            // Integer-valued geometry so labels align exactly with pixels.
            const double w = std::round(uniform_in(rng, spec.box_size));
            const double h = std::round(uniform_in(rng, spec.box_size));
            const double x_max = spec.image_w - spec.margin - w;
            const double y_max = spec.image_h - spec.margin - h;
            if (x_max < spec.margin || y_max < spec.margin) continue;

            bool placed = false;
            for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
                const double x = std::round(
                    std::uniform_real_distribution<double>(spec.margin, x_max)(rng));
                const double y = std::round(
                    std::uniform_real_distribution<double>(spec.margin, y_max)(rng));
                const BBox box(x, y, w, h);
                if (overlaps_any(box, img.labels)) continue;
                img.labels.push_back({box, class_id});
                cv::rectangle(raster,
                              cv::Rect(static_cast<int>(x), static_cast<int>(y),
                                       static_cast<int>(w), static_cast<int>(h)),
                              cv::Scalar(class_color(class_id)), cv::FILLED);
                placed = true;
            }
        }
        out.annotations.images.push_back(std::move(img));
        out.images.push_back(std::move(raster));
    }
    return out;
}

DetectorSpec DetectorSpec::perfect_oracle(double score, std::vector<std::string> variants) {
    DetectorSpec spec;
    spec.conf_score_mean = score;
    spec.conf_score_sigma = 0.0;
    spec.badness_low = {0.0, 0.0};
    spec.variants = std::move(variants);
    return spec;
}

DetectorSpec DetectorSpec::heterogeneous(std::uint64_t seed) {
    DetectorSpec spec;
    spec.miss_prob = 0.02;
    spec.miss_quality_coupling = 0.5;
    spec.badness_low = {0.05, 0.40};
    spec.badness_high = {0.55, 0.95};
    spec.badness_high_frac = 0.35;
    spec.fp_per_image = 1.0;
    spec.jitter_sigma = 0.02;
    spec.seed = seed;
    return spec;
}

DetectorSpec DetectorSpec::calibrated(double score_center, std::uint64_t seed) {
    DetectorSpec spec;
    spec.miss_prob = 0.10;
    spec.badness_low = {0.0, 0.0};
    spec.fp_per_image = 0.8;
    spec.jitter_sigma = 0.03;
    spec.conf_score_mean = score_center;
    spec.conf_score_sigma = 0.10;
    spec.false_score_mean = 0.20;
    spec.false_score_sigma = 0.10;
    spec.seed = seed;
    return spec;
}

GeneratedDetections gen_detections(const AnnotationSet& gt, const DetectorSpec& spec) {
    if (spec.variants.empty() || spec.variants[0] != "original") {
        throw std::invalid_argument("gen_detections: variants must start with \"original\"");
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    GeneratedDetections out;
    out.variants.resize(spec.variants.size());
    for (std::size_t v = 0; v < spec.variants.size(); ++v) {
        out.variants[v].variant_tag = spec.variants[v];
        if (spec.variants[v] == "hflip") {
            const int width = gt.images.empty() ? 0 : gt.images[0].width;
            out.variants[v].transform = BoxTransform::hflip(width);
        }
    }

    // Original pass; remembers the emitted true detections per image so the
    // variant passes can re-emit them consistently.
    std::vector<std::vector<Detection>> true_dets_per_image(gt.images.size());
    for (std::size_t i = 0; i < gt.images.size(); ++i) {
        const ImageRecord& img = gt.images[i];
        DetectionSet& original = out.variants[0];
        original.ensure_image(img.image_id);

        ImageTruth truth;
        truth.image_id = img.image_id;

        const double badness = unit(rng) < spec.badness_high_frac
                                   ? uniform_in(rng, spec.badness_high)
                                   : uniform_in(rng, spec.badness_low);
        const double shaky_mean = uniform_in(rng, spec.shaky_mean);
        const double miss_p = clamp01(spec.miss_prob + spec.miss_quality_coupling * badness);

        for (const LabeledBox& label : img.labels) {
            if (label.ignore) continue;
            ++truth.gt_count;
            if (unit(rng) < miss_p) {
                ++truth.missed;
                continue;
            }
            BBox box = label.box;
            if (spec.jitter_sigma > 0.0) {
                const double dx = bounded_normal(rng) * spec.jitter_sigma * box.w;
                const double dy = bounded_normal(rng) * spec.jitter_sigma * box.h;
                const double sw = 1.0 + bounded_normal(rng) * spec.jitter_sigma;
                const double sh = 1.0 + bounded_normal(rng) * spec.jitter_sigma;
                box = clamp_to_image(box.x + dx, box.y + dy, box.w * sw, box.h * sh,
                                     img.width, img.height);
            }
            const bool shaky = unit(rng) < badness;
            const double score = shaky
                                     ? clipped_normal(rng, shaky_mean, spec.shaky_score_sigma)
                                     : clipped_normal(rng, spec.conf_score_mean,
                                                      spec.conf_score_sigma);
            const Detection det{box, label.class_id, score};
            original.add(img.image_id, det);
            true_dets_per_image[i].push_back(det);
            ++truth.true_dets;
            truth.iou_sum += iou(box, label.box);
            ++truth.class_correct;
        }

        if (spec.fp_per_image > 0.0) {
            const int fp_count = std::poisson_distribution<int>(spec.fp_per_image)(rng);
            for (int f = 0; f < fp_count; ++f) {
                const double w = uniform_in(rng, spec.fp_size);
                const double h = uniform_in(rng, spec.fp_size);
                if (w >= img.width || h >= img.height) continue;
                for (int attempt = 0; attempt < 100; ++attempt) {
                    const double x =
                        std::uniform_real_distribution<double>(0.0, img.width - w)(rng);
                    const double y =
                        std::uniform_real_distribution<double>(0.0, img.height - h)(rng);
                    const BBox box(x, y, w, h);
                    if (overlaps_any(box, img.labels)) continue;
                    const int class_id =
                        std::uniform_int_distribution<int>(
                            0, std::max<int>(1, gt.classes.size()) - 1)(rng);
                    original.add(img.image_id,
                                 Detection{box, class_id,
                                           clipped_normal(rng, spec.false_score_mean,
                                                          spec.false_score_sigma)});
                    ++truth.fp_count;
                    break;
                }
            }
        }
        out.truth.push_back(std::move(truth));
    }

    // Variant passes: true detections re-emitted with optional extra jitter,
    // false positives re-sampled independently (they are not consistent).
    for (std::size_t v = 1; v < spec.variants.size(); ++v) {
        DetectionSet& variant = out.variants[v];
        for (std::size_t i = 0; i < gt.images.size(); ++i) {
            const ImageRecord& img = gt.images[i];
            variant.ensure_image(img.image_id);
            for (const Detection& det : true_dets_per_image[i]) {
                BBox box = det.box;
                if (spec.aug_jitter_sigma > 0.0) {
                    const double dx = bounded_normal(rng) * spec.aug_jitter_sigma * box.w;
                    const double dy = bounded_normal(rng) * spec.aug_jitter_sigma * box.h;
                    const double sw = 1.0 + bounded_normal(rng) * spec.aug_jitter_sigma;
                    const double sh = 1.0 + bounded_normal(rng) * spec.aug_jitter_sigma;
                    box = clamp_to_image(box.x + dx, box.y + dy, box.w * sw, box.h * sh,
                                         img.width, img.height);
                }
                variant.add(img.image_id,
                            Detection{variant.transform.apply(box), det.class_id, det.score});
            }
            if (spec.fp_per_image > 0.0) {
                const int fp_count = std::poisson_distribution<int>(spec.fp_per_image)(rng);
                for (int f = 0; f < fp_count; ++f) {
                    const double w = uniform_in(rng, spec.fp_size);
                    const double h = uniform_in(rng, spec.fp_size);
                    if (w >= img.width || h >= img.height) continue;
                    for (int attempt = 0; attempt < 100; ++attempt) {
                        const double x =
                            std::uniform_real_distribution<double>(0.0, img.width - w)(rng);
                        const double y =
                            std::uniform_real_distribution<double>(0.0, img.height - h)(rng);
                        const BBox box(x, y, w, h);
                        if (overlaps_any(box, img.labels)) continue;
                        const int class_id =
                            std::uniform_int_distribution<int>(
                                0, std::max<int>(1, gt.classes.size()) - 1)(rng);
                        variant.add(img.image_id,
                                    Detection{variant.transform.apply(box), class_id,
                                              clipped_normal(rng, spec.false_score_mean,
                                                             spec.false_score_sigma)});
                        break;
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace labelsmith
