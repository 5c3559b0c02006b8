#include "labelsmith/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace labelsmith {

BBox::BBox(double x, double y, double w, double h) : x(x), y(y), w(w), h(h) {
    if (!(w > 0.0) || !(h > 0.0)) {
        throw std::invalid_argument("BBox: width and height must be positive, got w=" +
                                    std::to_string(w) + " h=" + std::to_string(h));
    }
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
        throw std::invalid_argument("BBox: coordinates must be finite");
    }
}

double iou(const BBox& a, const BBox& b) {
    const double ix = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
    const double iy = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

BoxTransform BoxTransform::hflip(double image_width) {
    if (!(image_width > 0.0)) {
        throw std::invalid_argument("BoxTransform::hflip: image_width must be positive");
    }
    BoxTransform t;
    t.kind = Kind::hflip;
    t.image_width = image_width;
    return t;
}

BBox BoxTransform::apply(const BBox& b) const {
    switch (kind) {
        case Kind::identity:
            return b;
        case Kind::hflip:
            if (!(image_width > 0.0)) {
                throw std::invalid_argument("BoxTransform: hflip without a valid image_width");
            }
            return BBox(image_width - b.x - b.w, b.y, b.w, b.h);
    }
    throw std::logic_error("BoxTransform: unknown kind");
}

const char* to_string(BoxTransform::Kind kind) {
    return kind == BoxTransform::Kind::hflip ? "hflip" : "identity";
}

Matching match_boxes(const std::vector<BBox>& a, const std::vector<BBox>& b,
                     double iou_thresh) {
    if (!(iou_thresh > 0.0) || iou_thresh > 1.0) {
        throw std::invalid_argument("match_boxes: iou_thresh must be in (0, 1]");
    }

    struct Candidate {
        double iou;
        int a_index;
        int b_index;
    };
    std::vector<Candidate> candidates;
    for (int i = 0; i < static_cast<int>(a.size()); ++i) {
        for (int j = 0; j < static_cast<int>(b.size()); ++j) {
            const double v = iou(a[i], b[j]);
            if (v >= iou_thresh) candidates.push_back({v, i, j});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& l, const Candidate& r) {
        if (l.iou != r.iou) return l.iou > r.iou;
        if (l.a_index != r.a_index) return l.a_index < r.a_index;
        return l.b_index < r.b_index;
    });

    Matching result;
    std::vector<bool> a_used(a.size(), false), b_used(b.size(), false);
    for (const Candidate& c : candidates) {
        if (a_used[c.a_index] || b_used[c.b_index]) continue;
        a_used[c.a_index] = true;
        b_used[c.b_index] = true;
        result.pairs.push_back({c.a_index, c.b_index, c.iou});
    }
    for (int i = 0; i < static_cast<int>(a.size()); ++i) {
        if (!a_used[i]) result.unmatched_a.push_back(i);
    }
    for (int j = 0; j < static_cast<int>(b.size()); ++j) {
        if (!b_used[j]) result.unmatched_b.push_back(j);
    }
    return result;
}

Matching match(const std::vector<LabeledBox>& gt, const std::vector<Detection>& preds,
               double iou_thresh) {
    std::vector<BBox> a, b;
    a.reserve(gt.size());
    b.reserve(preds.size());
    for (const auto& g : gt) a.push_back(g.box);
    for (const auto& p : preds) b.push_back(p.box);
    return match_boxes(a, b, iou_thresh);
}

}  // namespace labelsmith
