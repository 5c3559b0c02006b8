#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <opencv2/core.hpp>

#include "labelsmith/dataset_io.hpp"

namespace labelsmith {

struct RccConfig {
    enum class Layout { horizontal, grid4x4 };

    std::vector<int> rare_classes;
    double gamma_min = 0.25;  // context expansion sampled from U(gamma_min, gamma_max)
    double gamma_max = 0.75;
    Layout layout = Layout::horizontal;
    bool scale_variation = false;
    int canvas_w = 1024;
    int canvas_h = 512;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Grow a box by p_r times its own size on every side, clamped to the image.
/// The result always contains the input box.
BBox expand_box(const BBox& box, double p_r, double img_w, double img_h);

/// Pixel access for collage sources.
class ImageSource {
  public:
    virtual ~ImageSource() = default;
    virtual cv::Mat load(const ImageRecord& record) const = 0;
};

class DirectoryImageSource : public ImageSource {
  public:
    explicit DirectoryImageSource(std::filesystem::path root) : root_(std::move(root)) {}
    cv::Mat load(const ImageRecord& record) const override;

  private:
    std::filesystem::path root_;
};

class MemoryImageSource : public ImageSource {
  public:
    MemoryImageSource(const AnnotationSet& set, const std::vector<cv::Mat>& images);
    cv::Mat load(const ImageRecord& record) const override;

  private:
    std::unordered_map<std::string, cv::Mat> by_id_;
};

/// Where each emitted collage label came from.
struct CollageProvenance {
    std::string source_image_id;
    int source_box_index;  // label index in the source image
    double p_r;            // expansion factor of the crop it rode in
    cv::Rect crop;         // source pixels that were cropped
    cv::Rect placement;    // where the resized crop landed on the canvas
};

struct CollageOutput {
    cv::Mat image;  // canvas_h x canvas_w, BGR
    std::vector<LabeledBox> labels;
    std::vector<CollageProvenance> provenance;  // aligned with labels
};

/// Crop every rare-class object with a randomized context expansion and
/// compose collages. Horizontal layout scales each crop to the canvas
/// height and pastes left to right, starting a new collage on overflow; the
/// 4x4 grid fits crops into 16 cells. Crops carry every source label that
/// lies fully inside the expanded crop; objects cut by the crop edge are
/// dropped from the labels. Returns an empty list when the set holds no
/// rare-class boxes.
std::vector<CollageOutput> build_collages(const AnnotationSet& set,
                                          const ImageSource& images, const RccConfig& cfg);

/// Append collages to a set as new image records named
/// rcc_collage_000001... with matching file names.
AnnotationSet append_collages(const AnnotationSet& set,
                              const std::vector<CollageOutput>& collages);

/// File name used for collage index i (0-based).
std::string collage_file_name(std::size_t index);

void save_provenance(const std::vector<CollageOutput>& collages, const Json& config,
                     const std::string& path);

}  // namespace labelsmith
