#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "labelsmith/dataset_io.hpp"

namespace labelsmith {

/// Synthetic ground-truth error configuration. Fractions are in [0, 1];
/// sizes in pixels. drop_frac removes boxes uniformly across the whole set,
/// false boxes are added per image, box noise perturbs every box of a
/// sampled fraction of images, class flips relabel a uniform fraction of
/// the surviving boxes.
struct ErrorSpec {
    double drop_frac = 0.0;
    int false_per_image = 0;
    std::array<double, 2> false_w_range{10.0, 100.0};
    std::array<double, 2> false_h_range{10.0, 100.0};
    double noise_image_frac = 0.0;
    double epsilon_b = 0.0;  // relative box perturbation ±epsilon_b * dim
    double class_flip_frac = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The published two error intensities: level 1 drops 20% of boxes, adds one
/// false box per image and perturbs 20% of images by ±10%; level 2 drops
/// 50%, adds five false boxes and perturbs by ±20%.
ErrorSpec level_preset(int level);

/// Everything inject() did, with enough detail to rebuild the clean set
/// exactly. Indices refer to positions in the clean image's label list.
struct InjectionLedger {
    struct Dropped {
        std::string image_id;
        int index;
        LabeledBox label;
    };
    struct AddedFalse {
        std::string image_id;
        LabeledBox label;  // appended at the end of the image's label list
    };
    struct Perturbed {
        std::string image_id;
        int index;
        BBox original;
        BBox perturbed;
    };
    struct ClassFlipped {
        std::string image_id;
        int index;
        int old_class;
        int new_class;
    };
    struct SkippedFalse {
        std::string image_id;
        int count;  // placements abandoned after the rejection cap
    };

    std::vector<Dropped> dropped;
    std::vector<AddedFalse> added_false;
    std::vector<Perturbed> perturbed;
    std::vector<ClassFlipped> class_flipped;
    std::vector<SkippedFalse> skipped_false;
};

std::pair<AnnotationSet, InjectionLedger> inject(const AnnotationSet& set,
                                                 const ErrorSpec& spec);

/// Exact inverse of inject(): restore(inject(x).first, ledger) == x.
AnnotationSet restore(const AnnotationSet& corrupted, const InjectionLedger& ledger);

/// Deterministic single-box perturbation used by the noise step: the width
/// and height change by sign * epsilon * dim and the top-left corner shifts
/// by half the size delta, each with an independent sign; the result is
/// clamped to the image and to a 1px minimum size.
BBox perturb_box(const BBox& box, double epsilon, const std::array<int, 4>& signs,
                 int img_w, int img_h);

void save_ledger(const InjectionLedger& ledger, const ErrorSpec& spec,
                 const std::string& path);
ErrorSpec load_error_spec(const std::string& path);
InjectionLedger load_ledger(const std::string& path);

}  // namespace labelsmith
