#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "labelsmith/class_stats.hpp"

using namespace labelsmith;

namespace {

ImageRecord image_with_classes(const std::string& id, const std::vector<int>& class_ids) {
    ImageRecord img;
    img.image_id = id;
    img.width = 1000;
    img.height = 1000;
    double x = 0;
    for (int c : class_ids) {
        img.labels.push_back({BBox(x, 0, 5, 5), c});
        x += 10;
    }
    return img;
}

ClassStats stats_from(const std::vector<std::int64_t>& freq) {
    ClassStats s;
    s.freq = freq;
    for (auto f : freq) s.total += f;
    return s;
}

}  // namespace

TEST_CASE("class frequencies count boxes per class") {
    AnnotationSet set;
    set.classes = {"A", "B"};
    set.images.push_back(image_with_classes("i0", {0, 0}));
    set.images.push_back(image_with_classes("i1", {1}));

    const ClassStats stats = class_frequencies(set);
    CHECK(stats.freq == std::vector<std::int64_t>{2, 1});
    CHECK(stats.total == 3);

    SUBCASE("empty set is all zero") {
        const ClassStats empty = class_frequencies(AnnotationSet{});
        CHECK(empty.total == 0);
    }
    SUBCASE("ignorable regions are excluded") {
        set.images[0].labels[0].ignore = true;
        const ClassStats without = class_frequencies(set);
        CHECK(without.freq == std::vector<std::int64_t>{1, 1});
        CHECK(without.total == 2);
    }
}

TEST_CASE("image_score matches hand-derived values") {
    const ClassStats stats = stats_from({10, 100});

    const ImageRecord both = image_with_classes("i", {0, 1});
    CHECK(image_score(both, stats) == doctest::Approx(0.325721).epsilon(1e-6));

    const ImageRecord only_a = image_with_classes("i", {0});
    CHECK(image_score(only_a, stats) == doctest::Approx(0.434294).epsilon(1e-6));

    SUBCASE("duplicate boxes do not change the score: distinct classes only") {
        const ImageRecord dup = image_with_classes("i", {0, 0, 0, 1});
        CHECK(image_score(dup, stats) == doctest::Approx(0.325721).epsilon(1e-6));
    }
    SUBCASE("frequencies below the floor give the maximal term") {
        const ClassStats floored = stats_from({2});
        const ImageRecord img = image_with_classes("i", {0});
        CHECK(image_score(img, floored) == doctest::Approx(1.442695).epsilon(1e-6));
        const ClassStats one = stats_from({1});
        CHECK(image_score(img, one) == image_score(img, floored));
    }
    SUBCASE("zero-box images score 0") {
        CHECK(image_score(image_with_classes("i", {}), stats) == 0.0);
    }
}

TEST_CASE("scale_scores maps the range onto [1, gamma_f]") {
    const std::vector<double> scaled = scale_scores({0.2, 0.3, 0.4}, 20.0);
    REQUIRE(scaled.size() == 3);
    CHECK(scaled[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(scaled[1] == doctest::Approx(10.5).epsilon(1e-12));
    CHECK(scaled[2] == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(scale_scores({0.7}, 20.0) == std::vector<double>{1.0});
    CHECK(scale_scores({5, 5, 5}, 8.0) == std::vector<double>{1.0, 1.0, 1.0});
    CHECK_THROWS_AS(scale_scores({1.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(scale_scores({}, 20.0), std::invalid_argument);
}

TEST_CASE("rarity ordering: strictly rarer class sets score higher") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::int64_t> low(2, 50), high(51, 100000);
    for (int iter = 0; iter < 200; ++iter) {
        // classes 0,1 are strictly rarer than classes 2,3
        const ClassStats stats = stats_from({low(rng), low(rng), high(rng), high(rng)});
        const ImageRecord rare = image_with_classes("u", {0, 1});
        const ImageRecord common = image_with_classes("v", {2, 3});
        CHECK(image_score(rare, stats) > image_score(common, stats));
    }
}

TEST_CASE("removing boxes of a present class never decreases the score") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::int64_t> freq(2, 1000);
    for (int iter = 0; iter < 200; ++iter) {
        ClassStats stats = stats_from({freq(rng), freq(rng), freq(rng)});
        const ImageRecord img = image_with_classes("i", {0, 2});
        const double before = image_score(img, stats);
        stats.freq[0] = std::max<std::int64_t>(1, stats.freq[0] / 2);
        const double after = image_score(img, stats);
        CHECK(after >= before);
    }
}

TEST_CASE("scaling preserves the ranking") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> score(0.0, 2.0);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<double> raw;
        for (int i = 0; i < 20; ++i) raw.push_back(score(rng));
        const std::vector<double> scaled = scale_scores(raw, 20.0);
        for (size_t i = 0; i < raw.size(); ++i) {
            for (size_t j = 0; j < raw.size(); ++j) {
                if (std::abs(raw[i] - raw[j]) > 1e-12) {
                    CHECK(((raw[i] < raw[j]) == (scaled[i] < scaled[j])));
                }
            }
        }
    }
}

TEST_CASE("weight export hits the scaling endpoints and round-trips") {
    AnnotationSet set;
    set.classes = {"rare", "common"};
    set.images.push_back(image_with_classes("a", {1, 1, 1, 1, 1, 1, 1, 1, 1}));
    set.images.push_back(image_with_classes("b", {0, 0}));

    const WeightTable table = image_weights(set, 20.0);
    REQUIRE(table.weights.size() == 2);
    CHECK(table.weights[0].second == doctest::Approx(1.0));
    CHECK(table.weights[1].second == doctest::Approx(20.0));

    SUBCASE("uniform sets weight everything 1") {
        AnnotationSet uniform;
        uniform.classes = {"c"};
        uniform.images.push_back(image_with_classes("a", {0}));
        uniform.images.push_back(image_with_classes("b", {0}));
        for (const auto& [id, w] : image_weights(uniform, 20.0).weights) {
            CHECK(w == 1.0);
        }
    }
    SUBCASE("round-trip through the weight file") {
        const auto path =
            (std::filesystem::temp_directory_path() / "labelsmith_weights_test.json").string();
        save_weights(table, path);
        CHECK(load_weights(path) == table);
        std::filesystem::remove(path);
    }
}
