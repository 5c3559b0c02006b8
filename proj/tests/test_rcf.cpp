#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "labelsmith/rcf.hpp"

using namespace labelsmith;

namespace {

AnnotationSet uniform_set(int n_images, int n_classes = 1) {
    AnnotationSet set;
    for (int k = 0; k < n_classes; ++k) set.classes.push_back("c" + std::to_string(k));
    for (int i = 0; i < n_images; ++i) {
        ImageRecord img;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "img_%04d", i);
        img.image_id = buf;
        img.width = 100;
        img.height = 100;
        img.labels.push_back({BBox(0, 0, 10, 10), i % n_classes});
        set.images.push_back(std::move(img));
    }
    return set;
}

int rare_entries(const Batch& batch) {
    int n = 0;
    for (const BatchEntry& e : batch) {
        if (e.origin != BatchEntry::Origin::common) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("stratify picks the ceil(m/B) top-scored images") {
    SUBCASE("m=100, B=8 gives k=13") {
        const AnnotationSet set = uniform_set(100);
        const auto [rare, common] = stratify(set, class_frequencies(set), 8, 20.0);
        CHECK(rare.size() == 13);
        CHECK(common.size() == 87);
    }
    SUBCASE("m=B gives k=1") {
        const AnnotationSet set = uniform_set(8);
        const auto [rare, common] = stratify(set, class_frequencies(set), 8, 20.0);
        CHECK(rare.size() == 1);
    }
    SUBCASE("identical scores fall back to image_id order") {
        const AnnotationSet set = uniform_set(10);
        const auto [rare, common] = stratify(set, class_frequencies(set), 5, 20.0);
        CHECK(rare == std::vector<std::string>{"img_0000", "img_0001"});
    }
    SUBCASE("rare-class images rank first") {
        AnnotationSet set = uniform_set(20, 1);
        set.classes.push_back("exotic");
        set.images[7].labels[0].class_id = 1;  // the single exotic box
        const auto [rare, common] = stratify(set, class_frequencies(set), 10, 20.0);
        CHECK(rare[0] == "img_0007");
    }
    SUBCASE("force_common keeps ids out of the rare stratum") {
        AnnotationSet set = uniform_set(20, 1);
        set.classes.push_back("exotic");
        set.images[7].labels[0].class_id = 1;
        const auto [rare, common] =
            stratify(set, class_frequencies(set), 10, 20.0, {"img_0007"});
        for (const std::string& id : rare) CHECK(id != "img_0007");
    }
    SUBCASE("fewer images than one batch is an error") {
        const AnnotationSet set = uniform_set(4);
        CHECK_THROWS_AS(stratify(set, class_frequencies(set), 8, 20.0),
                        std::invalid_argument);
    }
}

TEST_CASE("epoch batches pair rares and walk commons exactly once") {
    const std::vector<std::string> rare{"r1", "r2"};
    const std::vector<std::string> common{"c1", "c2", "c3", "c4", "c5", "c6"};

    std::mt19937_64 rng(3);
    const EpochPlan epoch = plan_epoch(rare, common, 4, rng);

    std::map<std::string, int> common_seen;
    for (const Batch& batch : epoch) {
        CHECK(rare_entries(batch) == 2);
        CHECK(batch[0].origin == BatchEntry::Origin::rare_copy_1);
        CHECK(batch[1].origin == BatchEntry::Origin::rare_copy_2);
        for (const BatchEntry& e : batch) {
            if (e.origin == BatchEntry::Origin::common) {
                ++common_seen[e.image_id];
                CHECK_FALSE(e.augment);
            } else {
                CHECK(e.augment);
            }
        }
        CHECK(batch.size() <= 4);
    }
    CHECK(common_seen.size() == common.size());
    for (const auto& [id, n] : common_seen) CHECK(n == 1);
}

TEST_CASE("pair_rare=false gives exactly one rare entry per batch") {
    const std::vector<std::string> rare{"r1", "r2", "r3"};
    const std::vector<std::string> common{"c1", "c2", "c3", "c4", "c5", "c6"};
    std::mt19937_64 rng(5);
    const EpochPlan epoch = plan_epoch(rare, common, 4, rng, /*pair_rare=*/false);
    for (const Batch& batch : epoch) CHECK(rare_entries(batch) == 1);
}

TEST_CASE("identical seeds reproduce the plan bit for bit") {
    const AnnotationSet set = uniform_set(50, 3);
    const BatchPlan a = make_plan(set, 8, 20.0, 3, 42);
    const BatchPlan b = make_plan(set, 8, 20.0, 3, 42);
    REQUIRE(a.epochs.size() == b.epochs.size());
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
        CHECK(a.epochs[e] == b.epochs[e]);
    }
    CHECK(a.rare_set == b.rare_set);

    const BatchPlan c = make_plan(set, 8, 20.0, 3, 43);
    CHECK(a.epochs != c.epochs);
}

TEST_CASE("plan invariants hold across random configurations") {
    std::mt19937_64 meta(11);
    for (int iter = 0; iter < 30; ++iter) {
        const int batch = 2 * std::uniform_int_distribution<int>(2, 8)(meta);
        const int m = std::uniform_int_distribution<int>(batch, 300)(meta);
        const int epochs = std::uniform_int_distribution<int>(1, 3)(meta);
        const AnnotationSet set = uniform_set(m, 4);
        const BatchPlan plan = make_plan(set, batch, 20.0, epochs, iter);

        const std::size_t n_rare = plan.rare_set.size();
        CHECK(n_rare == static_cast<std::size_t>((m + batch - 1) / batch));

        for (const EpochPlan& epoch : plan.epochs) {
            std::map<std::string, int> commons;
            std::map<std::string, int> stream1, stream2;
            for (const Batch& b : epoch) {
                CHECK(rare_entries(b) == 2);
                for (const BatchEntry& e : b) {
                    if (e.origin == BatchEntry::Origin::common) ++commons[e.image_id];
                    if (e.origin == BatchEntry::Origin::rare_copy_1) ++stream1[e.image_id];
                    if (e.origin == BatchEntry::Origin::rare_copy_2) ++stream2[e.image_id];
                }
            }
            CHECK(commons.size() == static_cast<std::size_t>(m) - n_rare);
            for (const auto& [id, n] : commons) CHECK(n == 1);

            const std::size_t n_batches = epoch.size();
            const int per_stream_cap =
                static_cast<int>((n_batches + n_rare - 1) / n_rare) + 1;
            for (const auto& [id, n] : stream1) CHECK(n <= per_stream_cap);
            for (const auto& [id, n] : stream2) CHECK(n <= per_stream_cap);
        }
    }
}

TEST_CASE("plans survive a save/load round-trip") {
    const AnnotationSet set = uniform_set(30, 2);
    const BatchPlan plan = make_plan(set, 6, 10.0, 2, 7);
    const auto path =
        (std::filesystem::temp_directory_path() / "labelsmith_plan_test.json").string();
    save_plan(plan, Json{{"batch_size", 6}}, path);
    const BatchPlan back = load_plan(path);
    CHECK(back.batch_size == plan.batch_size);
    CHECK(back.seed == plan.seed);
    CHECK(back.rare_set == plan.rare_set);
    CHECK(back.epochs == plan.epochs);
    std::filesystem::remove(path);
}

TEST_CASE("plan_epoch rejects unusable configurations") {
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(plan_epoch({}, {"c1"}, 4, rng), std::invalid_argument);
    CHECK_THROWS_AS(plan_epoch({"r1"}, {"c1"}, 5, rng), std::invalid_argument);  // odd B
    CHECK_THROWS_AS(plan_epoch({"r1"}, {"c1"}, 2, rng), std::invalid_argument);  // no slots
    CHECK_THROWS_AS(plan_epoch({"r1"}, {"c1", "c2", "c3"}, 6, rng),
                    std::invalid_argument);  // too few commons for one batch
}
