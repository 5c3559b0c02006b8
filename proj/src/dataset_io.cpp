#include "labelsmith/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "labelsmith/version.hpp"

namespace fs = std::filesystem;

namespace labelsmith {

namespace {

constexpr const char* kAnnotationSchema = "labelsmith/annotations@1";
constexpr const char* kDetectionSchema = "labelsmith/detections@1";
constexpr const char* kWeightSchema = "labelsmith/weights@1";
constexpr const char* kKittiIgnoreClass = "DontCare";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

std::string json_image_id(const Json& v, const std::string& file, long long record) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ParseError(file, record, "image_id", "expected a string or integer");
}

BBox parse_bbox(const Json& v, const std::string& file, long long record) {
    if (!v.is_array() || v.size() != 4 || !std::all_of(v.begin(), v.end(), [](const Json& e) {
            return e.is_number();
        })) {
        throw ParseError(file, record, "bbox", "expected an array of 4 numbers [x, y, w, h]");
    }
    try {
        return BBox(v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
                    v[3].get<double>());
    } catch (const std::invalid_argument& e) {
        throw ParseError(file, record, "bbox", e.what());
    }
}

void check_label_bounds(const ImageRecord& img, const LabeledBox& label,
                        const std::string& file, long long record) {
    if (img.width <= 0 || img.height <= 0) return;
    constexpr double slack = 1e-6;
    const BBox& b = label.box;
    if (b.x < -slack || b.y < -slack || b.x2() > img.width + slack ||
        b.y2() > img.height + slack) {
        throw ParseError(file, record, "bbox",
                         "box outside image bounds (" + std::to_string(img.width) + "x" +
                             std::to_string(img.height) + ")");
    }
}

Json bbox_to_json(const BBox& b) { return Json::array({b.x, b.y, b.w, b.h}); }

AnnotationSet load_native_annotations(const Json& doc, const std::string& path) {
    AnnotationSet set;
    if (!doc.contains("classes") || !doc["classes"].is_array()) {
        throw ParseError(path, -1, "classes", "missing class table");
    }
    for (const Json& c : doc["classes"]) set.classes.push_back(c.get<std::string>());

    long long record = 0;
    for (const Json& jimg : doc.value("images", Json::array())) {
        ImageRecord img;
        img.image_id = json_image_id(jimg.at("image_id"), path, record);
        img.file_name = jimg.value("file_name", std::string());
        img.width = jimg.value("width", 0);
        img.height = jimg.value("height", 0);
        for (const Json& jl : jimg.value("labels", Json::array())) {
            LabeledBox label{parse_bbox(jl.at("bbox"), path, record),
                             jl.at("class_id").get<int>(), jl.value("ignore", false)};
            if (label.class_id < 0 || label.class_id >= static_cast<int>(set.classes.size())) {
                throw ParseError(path, record, "class_id",
                                 "id " + std::to_string(label.class_id) +
                                     " not in the class table");
            }
            check_label_bounds(img, label, path, record);
            img.labels.push_back(std::move(label));
        }
        set.images.push_back(std::move(img));
        ++record;
    }
    return set;
}

AnnotationSet load_coco_annotations(const Json& doc, const std::string& path) {
    AnnotationSet set;

    // Categories sorted by their COCO id, then remapped to dense 0..K-1.
    std::vector<std::pair<long long, std::string>> cats;
    for (const Json& c : doc.value("categories", Json::array())) {
        cats.emplace_back(c.at("id").get<long long>(), c.at("name").get<std::string>());
    }
    std::sort(cats.begin(), cats.end());
    std::unordered_map<long long, int> cat_remap;
    for (const auto& [coco_id, name] : cats) {
        cat_remap[coco_id] = static_cast<int>(set.classes.size());
        set.classes.push_back(name);
    }

    std::unordered_map<std::string, std::size_t> image_index;
    long long record = 0;
    for (const Json& jimg : doc.value("images", Json::array())) {
        ImageRecord img;
        img.image_id = json_image_id(jimg.at("id"), path, record);
        img.file_name = jimg.value("file_name", std::string());
        img.width = jimg.value("width", 0);
        img.height = jimg.value("height", 0);
        if (image_index.count(img.image_id)) {
            throw ParseError(path, record, "id", "duplicate image id " + img.image_id);
        }
        image_index[img.image_id] = set.images.size();
        set.images.push_back(std::move(img));
        ++record;
    }

    record = 0;
    for (const Json& jann : doc.value("annotations", Json::array())) {
        const std::string image_id = json_image_id(jann.at("image_id"), path, record);
        auto it = image_index.find(image_id);
        if (it == image_index.end()) {
            throw ParseError(path, record, "image_id", "unknown image " + image_id);
        }
        const long long cat = jann.at("category_id").get<long long>();
        auto cit = cat_remap.find(cat);
        if (cit == cat_remap.end()) {
            throw ParseError(path, record, "category_id",
                             "unknown category " + std::to_string(cat));
        }
        ImageRecord& img = set.images[it->second];
        LabeledBox label{parse_bbox(jann.at("bbox"), path, record), cit->second,
                         jann.value("iscrowd", 0) != 0};
        check_label_bounds(img, label, path, record);
        img.labels.push_back(std::move(label));
        ++record;
    }
    return set;
}

// KITTI label line: type truncated occluded alpha x1 y1 x2 y2 ...
LabeledBox parse_kitti_line(const std::string& line, AnnotationSet& set,
                            std::unordered_map<std::string, int>& class_ids,
                            const std::string& file, long long line_no) {
    std::istringstream in(line);
    std::string type;
    double truncated, occluded, alpha, x1, y1, x2, y2;
    if (!(in >> type >> truncated >> occluded >> alpha >> x1 >> y1 >> x2 >> y2)) {
        throw ParseError(file, line_no, "bbox", "expected at least 8 whitespace-separated fields");
    }
    if (x2 <= x1) throw ParseError(file, line_no, "x2", "x2 must exceed x1");
    if (y2 <= y1) throw ParseError(file, line_no, "y2", "y2 must exceed y1");

    auto it = class_ids.find(type);
    if (it == class_ids.end()) {
        it = class_ids.emplace(type, static_cast<int>(set.classes.size())).first;
        set.classes.push_back(type);
    }
    return LabeledBox{BBox(x1, y1, x2 - x1, y2 - y1), it->second, type == kKittiIgnoreClass};
}

AnnotationSet load_kitti_annotations(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("kitti_txt expects a directory of label files: " + dir);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    AnnotationSet set;
    std::unordered_map<std::string, int> class_ids;
    for (const fs::path& file : files) {
        ImageRecord img;
        img.image_id = file.stem().string();
        img.file_name = file.stem().string() + ".png";

        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot open file: " + file.string());
        std::string line;
        long long line_no = 0;
        double max_x = 0.0, max_y = 0.0;
        while (std::getline(in, line)) {
            ++line_no;
            if (blank(line)) continue;
            LabeledBox label = parse_kitti_line(line, set, class_ids, file.string(), line_no);
            max_x = std::max(max_x, label.box.x2());
            max_y = std::max(max_y, label.box.y2());
            img.labels.push_back(std::move(label));
        }
        // KITTI label files carry no image size; use the tightest bound that
        // keeps every box in-frame.
        img.width = static_cast<int>(std::ceil(max_x));
        img.height = static_cast<int>(std::ceil(max_y));
        set.images.push_back(std::move(img));
    }
    return set;
}

void write_text_atomically(const std::string& text, const std::string& path) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + path);
        out << text;
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("write failed: " + path);
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot move report into place: " + path);
    }
}

}  // namespace

int AnnotationSet::class_id(const std::string& name) const {
    const auto it = std::find(classes.begin(), classes.end(), name);
    return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

const ImageRecord* AnnotationSet::find_image(const std::string& image_id) const {
    for (const ImageRecord& img : images) {
        if (img.image_id == image_id) return &img;
    }
    return nullptr;
}

void DetectionSet::ensure_image(const std::string& image_id) {
    auto [it, inserted] = by_image.try_emplace(image_id);
    if (inserted) image_order.push_back(image_id);
}

void DetectionSet::add(const std::string& image_id, Detection det) {
    ensure_image(image_id);
    by_image[image_id].push_back(std::move(det));
}

const std::vector<Detection>* DetectionSet::find(const std::string& image_id) const {
    const auto it = by_image.find(image_id);
    return it == by_image.end() ? nullptr : &it->second;
}

std::size_t DetectionSet::total_detections() const {
    std::size_t n = 0;
    for (const auto& [id, dets] : by_image) n += dets.size();
    return n;
}

ParseError::ParseError(const std::string& file, long long record, const std::string& field,
                       const std::string& what)
    : std::runtime_error(file + (record >= 0 ? ":record " + std::to_string(record) : "") +
                         ": field '" + field + "': " + what) {}

AnnotationFormat annotation_format_from_string(const std::string& name) {
    if (name == "auto") return AnnotationFormat::auto_detect;
    if (name == "native" || name == "native_json") return AnnotationFormat::native_json;
    if (name == "coco" || name == "coco_json") return AnnotationFormat::coco_json;
    if (name == "kitti" || name == "kitti_txt") return AnnotationFormat::kitti_txt;
    throw std::invalid_argument("unknown annotation format: " + name);
}

AnnotationSet load_annotations(const std::string& path, AnnotationFormat format) {
    if (format == AnnotationFormat::auto_detect) {
        format = fs::is_directory(path) ? AnnotationFormat::kitti_txt
                                        : AnnotationFormat::native_json;
    }
    if (format == AnnotationFormat::kitti_txt) return load_kitti_annotations(path);

    const std::string text = read_file(path);
    if (blank(text)) return AnnotationSet{};  // empty file: zero images, not an error

    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path, -1, "json", e.what());
    }
    if (doc.value("schema", std::string()) == kAnnotationSchema) {
        return load_native_annotations(doc, path);
    }
    if (doc.contains("annotations") && doc.contains("images")) {
        return load_coco_annotations(doc, path);
    }
    if (format == AnnotationFormat::coco_json) {
        throw ParseError(path, -1, "json", "not a COCO annotation file");
    }
    throw ParseError(path, -1, "schema", "unrecognized annotation file layout");
}

DetectionSet load_detections(const std::string& path) {
    const std::string text = read_file(path);
    if (blank(text)) return DetectionSet{};

    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path, -1, "json", e.what());
    }

    DetectionSet set;
    set.variant_tag = doc.value("variant", std::string("original"));
    if (set.variant_tag == "hflip") {
        if (!doc.contains("width") || !doc["width"].is_number()) {
            throw ParseError(path, -1, "width", "hflip variant requires the image width");
        }
        set.transform = BoxTransform::hflip(doc["width"].get<double>());
    }

    long long record = 0;
    for (const Json& jimg : doc.value("images", Json::array())) {
        set.ensure_image(json_image_id(jimg, path, record));
    }
    for (const Json& jdet : doc.value("detections", Json::array())) {
        const std::string image_id = json_image_id(jdet.at("image_id"), path, record);
        const double score = jdet.at("score").get<double>();
        if (score < 0.0 || score > 1.0) {
            throw ParseError(path, record, "score", "score out of range [0, 1]");
        }
        set.add(image_id, Detection{parse_bbox(jdet.at("bbox"), path, record),
                                    jdet.at("class_id").get<int>(), score});
        ++record;
    }
    return set;
}

void save_annotations(const AnnotationSet& set, const std::string& path) {
    Json doc;
    doc["schema"] = kAnnotationSchema;
    doc["classes"] = set.classes;
    Json images = Json::array();
    for (const ImageRecord& img : set.images) {
        Json jimg;
        jimg["image_id"] = img.image_id;
        jimg["file_name"] = img.file_name;
        jimg["width"] = img.width;
        jimg["height"] = img.height;
        Json labels = Json::array();
        for (const LabeledBox& label : img.labels) {
            Json jl;
            jl["class_id"] = label.class_id;
            jl["bbox"] = bbox_to_json(label.box);
            if (label.ignore) jl["ignore"] = true;
            labels.push_back(std::move(jl));
        }
        jimg["labels"] = std::move(labels);
        images.push_back(std::move(jimg));
    }
    doc["images"] = std::move(images);
    save_report(doc, path);
}

void save_detections(const DetectionSet& set, const std::string& path) {
    Json doc;
    doc["schema"] = kDetectionSchema;
    doc["variant"] = set.variant_tag;
    if (set.transform.kind == BoxTransform::Kind::hflip) {
        doc["width"] = set.transform.image_width;
    }
    doc["images"] = set.image_order;
    Json dets = Json::array();
    for (const std::string& image_id : set.image_order) {
        for (const Detection& d : set.by_image.at(image_id)) {
            Json jd;
            jd["image_id"] = image_id;
            jd["class_id"] = d.class_id;
            jd["bbox"] = bbox_to_json(d.box);
            jd["score"] = d.score;
            dets.push_back(std::move(jd));
        }
    }
    doc["detections"] = std::move(dets);
    save_report(doc, path);
}

void save_weights(const WeightTable& table, const std::string& path) {
    Json doc;
    doc["schema"] = kWeightSchema;
    doc["gamma_f"] = table.gamma_f;
    Json weights = Json::array();
    for (const auto& [image_id, weight] : table.weights) {
        weights.push_back(Json{{"image_id", image_id}, {"weight", weight}});
    }
    doc["weights"] = std::move(weights);
    save_report(doc, path);
}

WeightTable load_weights(const std::string& path) {
    const Json doc = load_json(path);
    WeightTable table;
    table.gamma_f = doc.value("gamma_f", 0.0);
    long long record = 0;
    for (const Json& jw : doc.value("weights", Json::array())) {
        table.weights.emplace_back(json_image_id(jw.at("image_id"), path, record),
                                   jw.at("weight").get<double>());
        ++record;
    }
    return table;
}

void save_report(const Json& report, const std::string& path) {
    write_text_atomically(report.dump(2) + "\n", path);
}

Json load_json(const std::string& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path, -1, "json", e.what());
    }
}

Json report_envelope(const std::string& schema, const Json& config) {
    Json doc;
    doc["schema"] = schema;
    doc["toolkit_version"] = kVersion;
    doc["config"] = config;
    return doc;
}

}  // namespace labelsmith
