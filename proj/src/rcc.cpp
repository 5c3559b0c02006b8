#include "labelsmith/rcc.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace labelsmith {

namespace {

constexpr const char* kProvenanceSchema = "labelsmith/rcc_provenance@1";

struct CropTask {
    int image_index;
    int label_index;
    double p_r;
};

cv::Rect crop_rect(const BBox& expanded, const cv::Mat& image) {
    const int x0 = std::clamp(static_cast<int>(std::floor(expanded.x)), 0, image.cols - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(expanded.y)), 0, image.rows - 1);
    const int x1 = std::clamp(static_cast<int>(std::ceil(expanded.x2())), x0 + 1, image.cols);
    const int y1 = std::clamp(static_cast<int>(std::ceil(expanded.y2())), y0 + 1, image.rows);
    return cv::Rect(x0, y0, x1 - x0, y1 - y0);
}

bool fully_inside(const BBox& box, const cv::Rect& rect) {
    return box.x >= rect.x && box.y >= rect.y && box.x2() <= rect.x + rect.width &&
           box.y2() <= rect.y + rect.height;
}

// Collage under construction.
struct CanvasState {
    cv::Mat image;
    std::vector<LabeledBox> labels;
    std::vector<CollageProvenance> provenance;
    int cursor_x = 0;
    int cell = 0;

    explicit CanvasState(const RccConfig& cfg)
        : image(cv::Mat::zeros(cfg.canvas_h, cfg.canvas_w, CV_8UC3)) {}

    bool used() const { return cursor_x > 0 || cell > 0; }
};

}  // namespace

void RccConfig::validate() const {
    if (rare_classes.empty()) {
        throw std::invalid_argument("RccConfig: rare_classes must not be empty");
    }
    if (gamma_min < 0.0 || gamma_max < gamma_min) {
        throw std::invalid_argument("RccConfig: need 0 <= gamma_min <= gamma_max");
    }
    if (canvas_w <= 0 || canvas_h <= 0) {
        throw std::invalid_argument("RccConfig: canvas dimensions must be positive");
    }
}

BBox expand_box(const BBox& box, double p_r, double img_w, double img_h) {
    if (p_r < 0.0) throw std::invalid_argument("expand_box: p_r must be >= 0");
    const double x0 = std::max(0.0, box.x - p_r * box.w);
    const double y0 = std::max(0.0, box.y - p_r * box.h);
    const double x1 = std::min(img_w, box.x + (1.0 + p_r) * box.w);
    const double y1 = std::min(img_h, box.y + (1.0 + p_r) * box.h);
    return BBox(x0, y0, x1 - x0, y1 - y0);
}

cv::Mat DirectoryImageSource::load(const ImageRecord& record) const {
    const std::filesystem::path path = root_ / record.file_name;
    cv::Mat image = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (image.empty()) {
        throw std::runtime_error("cannot decode image: " + path.string());
    }
    return image;
}

MemoryImageSource::MemoryImageSource(const AnnotationSet& set,
                                     const std::vector<cv::Mat>& images) {
    if (set.images.size() != images.size()) {
        throw std::invalid_argument("MemoryImageSource: annotation/raster count mismatch");
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
        by_id_.emplace(set.images[i].image_id, images[i]);
    }
}

cv::Mat MemoryImageSource::load(const ImageRecord& record) const {
    const auto it = by_id_.find(record.image_id);
    if (it == by_id_.end()) {
        throw std::runtime_error("no raster for image: " + record.image_id);
    }
    return it->second;
}

std::vector<CollageOutput> build_collages(const AnnotationSet& set,
                                          const ImageSource& images, const RccConfig& cfg) {
    cfg.validate();
    const std::set<int> rare(cfg.rare_classes.begin(), cfg.rare_classes.end());

    std::vector<CropTask> tasks;
    for (int i = 0; i < static_cast<int>(set.images.size()); ++i) {
        for (int j = 0; j < static_cast<int>(set.images[i].labels.size()); ++j) {
            const LabeledBox& label = set.images[i].labels[j];
            if (!label.ignore && rare.count(label.class_id)) tasks.push_back({i, j, 0.0});
        }
    }
    if (tasks.empty()) return {};

    std::mt19937_64 rng(cfg.seed);
    for (CropTask& task : tasks) {
        task.p_r = cfg.gamma_min == cfg.gamma_max
                       ? cfg.gamma_min
                       : std::uniform_real_distribution<double>(cfg.gamma_min,
                                                                cfg.gamma_max)(rng);
    }
    std::shuffle(tasks.begin(), tasks.end(), rng);

    std::unordered_map<std::string, cv::Mat> raster_cache;
    auto raster_of = [&](const ImageRecord& record) -> const cv::Mat& {
        auto it = raster_cache.find(record.image_id);
        if (it == raster_cache.end()) {
            it = raster_cache.emplace(record.image_id, images.load(record)).first;
        }
        return it->second;
    };

    const int cell_w = cfg.canvas_w / 4;
    const int cell_h = cfg.canvas_h / 4;

    std::vector<CollageOutput> collages;
    CanvasState canvas(cfg);
    auto finalize = [&]() {
        if (!canvas.used()) return;
        collages.push_back({canvas.image, std::move(canvas.labels),
                            std::move(canvas.provenance)});
        canvas = CanvasState(cfg);
    };

    for (const CropTask& task : tasks) {
        const ImageRecord& record = set.images[task.image_index];
        const cv::Mat& raster = raster_of(record);
        const BBox& box = record.labels[task.label_index].box;
        const BBox expanded = expand_box(box, task.p_r, raster.cols, raster.rows);
        const cv::Rect crop = crop_rect(expanded, raster);

        const double sv = cfg.scale_variation
                              ? std::uniform_real_distribution<double>(0.5, 1.0)(rng)
                              : 1.0;

        int target_w = 0, target_h = 0;
        cv::Point paste;
        if (cfg.layout == RccConfig::Layout::horizontal) {
            target_h = std::max(1, static_cast<int>(std::lround(sv * cfg.canvas_h)));
            target_w = std::max(
                1, static_cast<int>(std::lround(crop.width *
                                                (static_cast<double>(target_h) / crop.height))));
            if (target_w > cfg.canvas_w) {
                // a singleton wider than the canvas is refit to its width
                target_w = cfg.canvas_w;
                target_h = std::max(
                    1, static_cast<int>(std::lround(
                           crop.height * (static_cast<double>(cfg.canvas_w) / crop.width))));
            }
            if (canvas.cursor_x + target_w > cfg.canvas_w) finalize();
            paste = cv::Point(canvas.cursor_x, 0);
            canvas.cursor_x += target_w;
        } else {
            if (canvas.cell == 16) finalize();
            const double fit =
                sv * std::min(static_cast<double>(cell_w) / crop.width,
                              static_cast<double>(cell_h) / crop.height);
            target_w = std::clamp(static_cast<int>(std::lround(crop.width * fit)), 1, cell_w);
            target_h = std::clamp(static_cast<int>(std::lround(crop.height * fit)), 1, cell_h);
            paste = cv::Point((canvas.cell % 4) * cell_w, (canvas.cell / 4) * cell_h);
            ++canvas.cell;
        }

        cv::Mat resized;
        cv::resize(raster(crop), resized, cv::Size(target_w, target_h), 0, 0,
                   cv::INTER_LINEAR);
        const cv::Rect placement(paste.x, paste.y, target_w, target_h);
        resized.copyTo(canvas.image(placement));

        const double sx = static_cast<double>(target_w) / crop.width;
        const double sy = static_cast<double>(target_h) / crop.height;
        for (int j = 0; j < static_cast<int>(record.labels.size()); ++j) {
            const LabeledBox& source = record.labels[j];
            if (source.ignore || !fully_inside(source.box, crop)) continue;

            double lx = paste.x + (source.box.x - crop.x) * sx;
            double ly = paste.y + (source.box.y - crop.y) * sy;
            double lw = source.box.w * sx;
            double lh = source.box.h * sy;
            lx = std::clamp(lx, 0.0, static_cast<double>(cfg.canvas_w) - 1.0);
            ly = std::clamp(ly, 0.0, static_cast<double>(cfg.canvas_h) - 1.0);
            lw = std::min(lw, cfg.canvas_w - lx);
            lh = std::min(lh, cfg.canvas_h - ly);

            canvas.labels.push_back({BBox(lx, ly, lw, lh), source.class_id});
            canvas.provenance.push_back(
                {record.image_id, j, task.p_r, crop, placement});
        }
    }
    finalize();
    return collages;
}

std::string collage_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "collage_%06zu.png", index + 1);
    return buf;
}

AnnotationSet append_collages(const AnnotationSet& set,
                              const std::vector<CollageOutput>& collages) {
    AnnotationSet out = set;
    for (std::size_t i = 0; i < collages.size(); ++i) {
        ImageRecord img;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "rcc_collage_%06zu", i + 1);
        img.image_id = buf;
        img.file_name = collage_file_name(i);
        img.width = collages[i].image.cols;
        img.height = collages[i].image.rows;
        img.labels = collages[i].labels;
        if (out.find_image(img.image_id) != nullptr) {
            throw std::invalid_argument("append_collages: image id collision: " +
                                        img.image_id);
        }
        out.images.push_back(std::move(img));
    }
    return out;
}

void save_provenance(const std::vector<CollageOutput>& collages, const Json& config,
                     const std::string& path) {
    Json doc = report_envelope(kProvenanceSchema, config);
    Json jcollages = Json::array();
    for (std::size_t i = 0; i < collages.size(); ++i) {
        Json labels = Json::array();
        for (std::size_t l = 0; l < collages[i].labels.size(); ++l) {
            const CollageProvenance& p = collages[i].provenance[l];
            const BBox& box = collages[i].labels[l].box;
            labels.push_back(
                Json{{"label_index", l},
                     {"class_id", collages[i].labels[l].class_id},
                     {"bbox", {box.x, box.y, box.w, box.h}},
                     {"source_image_id", p.source_image_id},
                     {"source_box_index", p.source_box_index},
                     {"p_r", p.p_r},
                     {"crop", {p.crop.x, p.crop.y, p.crop.width, p.crop.height}},
                     {"placement",
                      {p.placement.x, p.placement.y, p.placement.width,
                       p.placement.height}}});
        }
        jcollages.push_back(Json{{"file_name", collage_file_name(i)}, {"labels", labels}});
    }
    doc["collages"] = std::move(jcollages);
    save_report(doc, path);
}

}  // namespace labelsmith
