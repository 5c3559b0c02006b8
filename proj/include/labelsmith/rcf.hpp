#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "labelsmith/class_stats.hpp"
#include "labelsmith/dataset_io.hpp"

namespace labelsmith {

struct BatchEntry {
    enum class Origin { common, rare_copy_1, rare_copy_2 };

    std::string image_id;
    Origin origin = Origin::common;
    /// Whether the consuming trainer should augment this entry. The plan
    /// only carries the flag; applying augmentations is the trainer's job.
    bool augment = false;

    bool operator==(const BatchEntry& other) const = default;
};

using Batch = std::vector<BatchEntry>;
using EpochPlan = std::vector<Batch>;

/// Batch plan guaranteeing rare-class presence in every batch. Epochs walk
/// every common image exactly once; rare images are drawn from two
/// independently shuffled streams that wrap with a reshuffle.
struct BatchPlan {
    int batch_size = 0;
    std::vector<EpochPlan> epochs;
    std::vector<std::string> rare_set;
    std::uint64_t seed = 0;
};

/// Rank images by their scaled rarity score (descending, ties by image_id)
/// and split off the top k = ceil(m / B) as rare. Ids in `force_common` are
/// kept in the common stratum regardless of score (used for collage images
/// when RCC and RCF run together).
std::pair<std::vector<std::string>, std::vector<std::string>> stratify(
    const AnnotationSet& set, const ClassStats& stats, int batch_size, double gamma_f,
    const std::set<std::string>& force_common = {});

/// One epoch of batches: each batch takes one entry from each rare stream
/// (a pair; one when pair_rare is off) plus common images in shuffled order.
/// The trailing batch may hold fewer commons when the split is uneven.
EpochPlan plan_epoch(const std::vector<std::string>& rare_ids,
                     const std::vector<std::string>& common_ids, int batch_size,
                     std::mt19937_64& rng, bool pair_rare = true, bool augment_rare = true);

/// Seed-owning overload building a single-epoch plan.
BatchPlan plan_epoch(const std::vector<std::string>& rare_ids,
                     const std::vector<std::string>& common_ids, int batch_size,
                     std::uint64_t seed, bool pair_rare = true, bool augment_rare = true);

/// Stratify + plan a full multi-epoch schedule from one master seed.
BatchPlan make_plan(const AnnotationSet& set, int batch_size, double gamma_f, int epochs,
                    std::uint64_t seed, bool pair_rare = true, bool augment_rare = true,
                    const std::set<std::string>& force_common = {});

void save_plan(const BatchPlan& plan, const Json& config, const std::string& path);
BatchPlan load_plan(const std::string& path);

const char* to_string(BatchEntry::Origin origin);

}  // namespace labelsmith
