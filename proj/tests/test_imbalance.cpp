#include "helpers.hpp"
#include "miml/errors.hpp"
#include "miml/imbalance.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <set>

using namespace miml;
using testing_util::make_bag;

namespace {

MimlDataset fixture() {
    MimlDataset ds;
    ds.n_feat = 1;
    ds.n_labels = 2;
    ds.label_names = default_label_names(2);
    ds.bags = {make_bag("p", {{1.0}, {1.5}}), make_bag("n1", {{-1.0}, {-2.0}, {-3.0}}),
               make_bag("n2", {{-4.0}, {-5.0}})};
    ds.labels = {{1, 1}, {0, 1}, {0, 1}};
    return ds;
}

}  // namespace

TEST_CASE("bag-level positive probability") {
    CHECK(imbalance_probability(0.5, 2) == 0.75);
    CHECK(imbalance_probability(0.5, 1) == 0.5);
    CHECK(imbalance_probability(0.3, 4) == doctest::Approx(0.7599).epsilon(1e-12));
    CHECK(std::abs(imbalance_probability(0.3, 4) - oracle::monte_carlo_bag_positive(0.3, 4, 1000000, 1)) <= 1e-3);
    CHECK(imbalance_probability(0.0, 5) == 0.0);
    CHECK(imbalance_probability(1.0, 3) == 1.0);
}

TEST_CASE("negative pool") {
    const auto ds = fixture();
    CHECK(extract_negative_pool(ds, 0).size() == 5);
    const auto pool = extract_negative_pool(ds, 0);
    for (const auto& x : pool) CHECK(x[0] < 0.0);
    try {
        (void)extract_negative_pool(ds, 1);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("no negatives") != std::string::npos);
    }
}

TEST_CASE("negative pool never holds instances of positive bags") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        spec.n_bag = 50;
        const auto ds = generate_synthetic(spec);
        for (std::size_t l = 0; l < ds.n_labels; ++l) {
            std::set<std::vector<double>> positive;
            std::size_t expected = 0;
            for (std::size_t i = 0; i < ds.n_bag(); ++i) {
                if (ds.labels[i][l]) positive.insert(ds.bags[i].instances.begin(), ds.bags[i].instances.end());
                else expected += ds.bags[i].size();
            }
            const auto pool = extract_negative_pool(ds, l);
            CHECK(pool.size() == expected);
            for (const auto& x : pool) CHECK_FALSE(positive.contains(x));
        }
    }
}

TEST_CASE("oversampling") {
    const auto pool = extract_negative_pool(fixture(), 0);
    OversampleConfig cfg;
    cfg.max_bag_size = 4;
    cfg.seed = 3;

    CHECK(oversample_negatives(pool, cfg).empty());

    cfg.n_extra_bags = 100;
    const auto bags = oversample_negatives(pool, cfg, "l0-");
    CHECK(bags.size() == 100);
    std::set<std::string> ids;
    for (const auto& b : bags) {
        CHECK(b.size() >= 2);
        CHECK(b.size() <= 4);
        CHECK(is_synthetic_bag_id(b.bag_id));
        CHECK(b.bag_id.rfind("synthetic-neg-l0-", 0) == 0);
        ids.insert(b.bag_id);
        for (const auto& x : b.instances) {
            const bool member = std::any_of(pool.begin(), pool.end(), [&](const Instance& p) {
                return std::bit_cast<std::uint64_t>(p[0]) == std::bit_cast<std::uint64_t>(x[0]);
            });
            CHECK(member);
        }
    }
    CHECK(ids.size() == 100);

    const auto again = oversample_negatives(pool, cfg, "l0-");
    for (std::size_t i = 0; i < bags.size(); ++i) CHECK(again[i].instances == bags[i].instances);

    CHECK_THROWS_AS(oversample_negatives({}, cfg), DataError);
    cfg.max_bag_size = 1;
    CHECK_THROWS_AS(oversample_negatives(pool, cfg), ConfigError);
}

TEST_CASE("augmenting a training fold") {
    const auto ds = fixture();
    OversampleConfig cfg;
    cfg.max_bag_size = default_max_bag_size(ds);
    CHECK(cfg.max_bag_size == 3);

    const auto same = augment_training_fold(ds, 0, cfg);
    CHECK(same.n_bag() == ds.n_bag());
    CHECK(same.labels == ds.labels);

    cfg.n_extra_bags = 7;
    const auto more = augment_training_fold(ds, 0, cfg);
    CHECK(more.n_bag() == ds.n_bag() + 7);
    std::size_t positives_before = 0, positives_after = 0;
    for (const auto& y : ds.labels) positives_before += y[0];
    for (const auto& y : more.labels) positives_after += y[0];
    CHECK(positives_before == positives_after);
    for (std::size_t i = ds.n_bag(); i < more.n_bag(); ++i) CHECK(is_synthetic_bag_id(more.bags[i].bag_id));
    CHECK_NOTHROW(more.validate());
}

TEST_CASE("synthetic id recognition") {
    CHECK(is_synthetic_bag_id("synthetic-neg-3"));
    CHECK_FALSE(is_synthetic_bag_id("b001"));
    CHECK_FALSE(is_synthetic_bag_id("xsynthetic-neg-"));
}
