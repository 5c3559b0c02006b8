#pragma once

#include <string>
#include <vector>

namespace labelsmith {

/// Axis-aligned box in float pixels, stored as top-left corner plus size.
/// Degenerate sizes (w <= 0 or h <= 0) are rejected at construction.
struct BBox {
    double x;
    double y;
    double w;
    double h;

    BBox(double x, double y, double w, double h);

    double x2() const { return x + w; }
    double y2() const { return y + h; }
    double area() const { return w * h; }

    bool operator==(const BBox& other) const = default;
};

/// Intersection over union. Total on valid boxes; 0 when disjoint.
double iou(const BBox& a, const BBox& b);

struct LabeledBox {
    BBox box;
    int class_id = 0;
    /// Regions like KITTI "DontCare": kept in the set but excluded from
    /// frequency counts and matching.
    bool ignore = false;

    bool operator==(const LabeledBox& other) const = default;
};

struct Detection {
    BBox box;
    int class_id = 0;
    double score = 0.0;  // in [0, 1]

    bool operator==(const Detection& other) const = default;
};

struct ImageRecord {
    std::string image_id;
    std::string file_name;
    int width = 0;
    int height = 0;
    std::vector<LabeledBox> labels;

    bool operator==(const ImageRecord& other) const = default;
};

/// Geometric part of an inference-time augmentation. Photometric
/// augmentations (blur, noise) map to identity.
struct BoxTransform {
    enum class Kind { identity, hflip };

    Kind kind = Kind::identity;
    double image_width = 0.0;  // required for hflip

    static BoxTransform identity() { return {}; }
    static BoxTransform hflip(double image_width);

    /// hflip and identity are both involutions.
    BoxTransform inverse() const { return *this; }

    BBox apply(const BBox& b) const;

    bool operator==(const BoxTransform& other) const = default;
};

const char* to_string(BoxTransform::Kind kind);

/// One-to-one greedy matching between two box lists.
struct Matching {
    struct Pair {
        int a_index;
        int b_index;
        double iou;

        bool operator==(const Pair& other) const = default;
    };

    std::vector<Pair> pairs;
    std::vector<int> unmatched_a;
    std::vector<int> unmatched_b;
};

/// Greedy matching: candidate pairs with iou >= iou_thresh are consumed in
/// order of descending iou, ties broken by (lower a_index, lower b_index);
/// each index is used at most once. Deterministic for identical inputs.
Matching match_boxes(const std::vector<BBox>& a, const std::vector<BBox>& b,
                     double iou_thresh);

/// GT-vs-prediction matching on box geometry alone (classes are compared by
/// the callers that care). a side = gt, b side = preds.
Matching match(const std::vector<LabeledBox>& gt,
               const std::vector<Detection>& preds, double iou_thresh);

}  // namespace labelsmith
