#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "labelsmith/core.hpp"

namespace labelsmith {

/// Labeled dataset: an ordered class table plus image records.
/// Class ids are dense 0..K-1 into `classes`.
struct AnnotationSet {
    std::vector<std::string> classes;
    std::vector<ImageRecord> images;

    int class_id(const std::string& name) const;  // -1 when absent
    const ImageRecord* find_image(const std::string& image_id) const;

    bool operator==(const AnnotationSet& other) const = default;
};

/// Model predictions grouped per image, in file order. `variant_tag` names
/// the inference-time augmentation the detections were produced under and
/// `transform` its geometric effect on boxes.
struct DetectionSet {
    std::string variant_tag = "original";
    BoxTransform transform = BoxTransform::identity();
    std::vector<std::string> image_order;
    std::unordered_map<std::string, std::vector<Detection>> by_image;

    /// Registers an image with no detections yet. Detector coverage of an
    /// image is meaningful even when nothing was found on it.
    void ensure_image(const std::string& image_id);
    void add(const std::string& image_id, Detection det);
    const std::vector<Detection>* find(const std::string& image_id) const;
    std::size_t total_detections() const;
};

/// Raised for malformed input files; carries file, record index and field.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& file, long long record, const std::string& field,
               const std::string& what);
};

enum class AnnotationFormat { auto_detect, native_json, coco_json, kitti_txt };

AnnotationFormat annotation_format_from_string(const std::string& name);

/// Load annotations. `path` is a JSON file for the JSON formats or a
/// directory of per-image .txt files for kitti_txt.
AnnotationSet load_annotations(const std::string& path,
                               AnnotationFormat format = AnnotationFormat::auto_detect);

DetectionSet load_detections(const std::string& path);

/// Writers emit the canonical JSON schemas; load(save(x)) == x.
void save_annotations(const AnnotationSet& set, const std::string& path);
void save_detections(const DetectionSet& set, const std::string& path);

/// Per-image weight export for the re-weighting baseline.
struct WeightTable {
    double gamma_f = 0.0;
    std::vector<std::pair<std::string, double>> weights;  // (image_id, weight)

    bool operator==(const WeightTable& other) const = default;
};

void save_weights(const WeightTable& table, const std::string& path);
WeightTable load_weights(const std::string& path);

/// JSON type used for all files the toolkit writes: insertion-ordered so
/// output layout is stable and readable.
using Json = nlohmann::ordered_json;

/// Atomically write a JSON report (temp file + rename; no partial files).
/// Every report passes through here so all outputs share one write path.
void save_report(const Json& report, const std::string& path);
Json load_json(const std::string& path);

/// Envelope shared by all report files: schema tag, toolkit version and the
/// effective configuration that produced the report.
Json report_envelope(const std::string& schema, const Json& config);

}  // namespace labelsmith
