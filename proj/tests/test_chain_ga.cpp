#include "miml/chain_ga.hpp"
#include "miml/errors.hpp"
#include "miml/medoid_embed.hpp"
#include "miml/mlmetrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <random>
#include <set>

using namespace miml;

namespace {

struct Embedded {
    EmbeddedDataset train;
    EmbeddedDataset validation;
};

Embedded small_problem(std::uint64_t seed, bool dependency = true, std::size_t n_bag = 120) {
    SynthSpec spec;
    spec.n_bag = n_bag;
    spec.n_labels = 3;
    spec.n_feat = 4;
    spec.chain_dependency = dependency;
    spec.label_rate = 0.6;
    spec.seed = seed;
    const auto raw = generate_synthetic(spec);
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < raw.n_bag(); ++i) (i % 4 == 3 ? va : tr).push_back(i);
    const auto scaler = fit_scaler(raw.subset(tr));
    const auto scaled = scaler.transform(raw);
    const auto train_bags = scaled.subset(tr);
    auto medoids = std::make_shared<MedoidSet>(kmedoids(std::span<const Bag>(train_bags.bags), 6, seed));
    const auto all = embed_dataset(scaled, medoids);
    return {all.subset(tr), all.subset(va)};
}

SvmConfig svm_config() {
    SvmConfig c;
    c.C = 1.0;
    return c;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("binarization") {
    const BinarizationCriterion T{};
    CHECK(binarize(std::vector<double>{0.9, 0.2, 0.6}, T) == LabelVector{1, 0, 1});
    CHECK(binarize(std::vector<double>{0.1, 0.2, 0.3}, T) == LabelVector{0, 0, 1});
    CHECK(binarize(std::vector<double>{0.3, 0.3, 0.1}, T) == LabelVector{1, 0, 0});
    const BinarizationCriterion C{BinarizationCriterion::Kind::C, 0.1};
    CHECK(binarize(std::vector<double>{0.45, 0.2, 0.6}, C) == LabelVector{1, 0, 1});
    CHECK_THROWS_AS((void)binarize(std::vector<double>{0.5}, BinarizationCriterion{BinarizationCriterion::Kind::C, 0.7}),
                    ConfigError);

    const BinarizationCriterion C0{BinarizationCriterion::Kind::C, 0.0};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> s(4);
        for (auto& v : s) v = u(rng);
        if (t % 7 == 0) s[1] = 0.5;
        CHECK(binarize(s, C0) == binarize(s, T));
    }
}

TEST_CASE("chain validity") {
    CHECK(Chain{{0, 2}}.is_valid(3));
    CHECK_FALSE(Chain{{0, 0}}.is_valid(3));
    CHECK_FALSE(Chain{{3}}.is_valid(3));
    CHECK(Chain{}.is_valid(0));
    CHECK_THROWS_AS((Chain{{1, 1}}.validate(2)), ConfigError);
    CHECK(full_chain(3) == Chain{{0, 1, 2}});
    CHECK(Chain{{2, 0}}.to_string() == "[2,0]");
}

TEST_CASE("chain model structure") {
    const auto p = small_problem(1);
    const std::size_t k = p.train.z.cols();

    SUBCASE("empty chain is binary relevance") {
        const auto m = train_chain(p.train, Chain{}, svm_config());
        CHECK(m.chained_svms.empty());
        CHECK(m.independent_labels == std::vector<std::size_t>{0, 1, 2});
        for (const auto& svm : m.independent_svms) CHECK(svm.n_features == k);
    }
    SUBCASE("single-element chain has no predecessors") {
        const auto m = train_chain(p.train, Chain{{2}}, svm_config());
        REQUIRE(m.chained_svms.size() == 1);
        CHECK(m.chained_svms[0].n_features == k);
        CHECK(m.independent_labels == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("second position sees the first position's probabilities") {
        const auto m = train_chain(p.train, Chain{{0, 1}}, svm_config());
        REQUIRE(m.chained_svms.size() == 2);
        CHECK(m.chained_svms[0].n_features == k);
        CHECK(m.chained_svms[1].n_features == k + 1);

        // rebuild position 1 by hand from position 0's predictions
        Matrix x;
        std::vector<int> y0, y1;
        for (std::size_t i = 0; i < p.train.n_bag(); ++i) {
            y0.push_back(p.train.labels[i][0] ? 1 : -1);
            y1.push_back(p.train.labels[i][1] ? 1 : -1);
        }
        const auto first = calibrate(svm_train(p.train.z, y0, svm_config()), p.train.z, y0);
        for (std::size_t i = 0; i < p.train.n_bag(); ++i) {
            auto row = std::vector<double>(p.train.z.row(i).begin(), p.train.z.row(i).end());
            row.push_back(predict_proba(first, p.train.z.row(i)));
            x.push_row(row);
        }
        const auto second = calibrate(svm_train(x, y1, svm_config()), x, y1);
        CHECK(second.support_vectors == m.chained_svms[1].support_vectors);
        CHECK(second.dual_coefs == m.chained_svms[1].dual_coefs);
        CHECK(second.bias == m.chained_svms[1].bias);
    }
    SUBCASE("every label has exactly one model") {
        for (const auto& c : {Chain{}, Chain{{1}}, Chain{{2, 0}}, Chain{{1, 2, 0}}}) {
            const auto m = train_chain(p.train, c, svm_config());
            std::multiset<std::size_t> seen(m.chain.order.begin(), m.chain.order.end());
            seen.insert(m.independent_labels.begin(), m.independent_labels.end());
            CHECK(seen == std::multiset<std::size_t>{0, 1, 2});
            for (std::size_t j = 0; j < m.chained_svms.size(); ++j) CHECK(m.chained_svms[j].n_features == k + j);
        }
    }
}

TEST_CASE("scores") {
    const auto p = small_problem(2);

    SUBCASE("empty chain equals independent per-label models bitwise") {
        const auto m = train_chain(p.train, Chain{}, svm_config());
        const auto s = predict_scores(m, p.validation.z);
        for (std::size_t l = 0; l < 3; ++l) {
            std::vector<int> y;
            for (const auto& lv : p.train.labels) y.push_back(lv[l] ? 1 : -1);
            const auto svm = calibrate(svm_train(p.train.z, y, svm_config()), p.train.z, y);
            for (std::size_t i = 0; i < p.validation.n_bag(); ++i) {
                CHECK(std::bit_cast<std::uint64_t>(s(i, l)) ==
                      std::bit_cast<std::uint64_t>(predict_proba(svm, p.validation.z.row(i))));
            }
        }
    }
    SUBCASE("scores stay within the clip bounds") {
        const auto s = predict_scores(train_chain(p.train, full_chain(3), svm_config()), p.validation.z);
        for (double v : s.data()) {
            CHECK(v >= 0.01);
            CHECK(v <= 0.99);
        }
    }
    SUBCASE("perturbing the first model changes the second label's scores") {
        auto m = train_chain(p.train, Chain{{0, 1}}, svm_config());
        const auto before = predict_scores(m, p.validation.z);
        m.chained_svms[0].bias += 3.0;
        const auto after = predict_scores(m, p.validation.z);
        bool changed = false;
        for (std::size_t i = 0; i < before.rows(); ++i) changed = changed || before(i, 1) != after(i, 1);
        CHECK(changed);
        for (std::size_t i = 0; i < before.rows(); ++i) CHECK(before(i, 2) == after(i, 2));
    }
    SUBCASE("memoized trainer agrees with direct training") {
        ChainTrainer trainer(p.train, svm_config(), {}, p.validation.z);
        for (const auto& c : {Chain{{1, 0, 2}}, Chain{{1, 2}}, Chain{{2}}, Chain{}}) {
            const auto direct = predict_scores(train_chain(p.train, c, svm_config()), p.validation.z);
            CHECK(bitwise_equal(trainer.eval_scores(c), direct));
            CHECK(bitwise_equal(predict_scores(trainer.train(c), p.validation.z), direct));
        }
        // prefixes [1], [1,0], [1,0,2], [1,2], [2], [0]
        CHECK(trainer.models_trained() == 6);
    }
    SUBCASE("width mismatch") {
        const auto m = train_chain(p.train, Chain{}, svm_config());
        CHECK_THROWS_AS(predict_scores(m, Matrix(2, p.train.z.cols() + 1)), DataError);
    }
}

TEST_CASE("fitness") {
    const auto p = small_problem(3);
    const BinarizationCriterion T{};
    SUBCASE("empty chain fitness is the binary-relevance Jaccard accuracy") {
        LabelMatrix pred(p.validation.n_bag(), LabelVector(3, 0));
        Matrix scores(p.validation.n_bag(), 3);
        for (std::size_t l = 0; l < 3; ++l) {
            std::vector<int> y;
            for (const auto& lv : p.train.labels) y.push_back(lv[l] ? 1 : -1);
            const auto svm = calibrate(svm_train(p.train.z, y, svm_config()), p.train.z, y);
            for (std::size_t i = 0; i < p.validation.n_bag(); ++i) scores(i, l) = predict_proba(svm, p.validation.z.row(i));
        }
        CHECK(fitness(Chain{}, p.train, p.validation, T, svm_config()) ==
              accuracy_jaccard(p.validation.labels, binarize(scores, T)));
    }
    SUBCASE("perfect predictions score 1") {
        // validating on the training rows of a trivially separable problem
        EmbeddedDataset tiny;
        tiny.z = Matrix(4, 1);
        tiny.z(0, 0) = 0.0;
        tiny.z(1, 0) = 0.1;
        tiny.z(2, 0) = 0.9;
        tiny.z(3, 0) = 1.0;
        tiny.labels = {{1, 0}, {1, 0}, {0, 1}, {0, 1}};
        SvmConfig c;
        c.C = 100;
        c.kernel = {KernelKind::polynomial, 1, 1.0, 1.0};
        CHECK(fitness(Chain{}, tiny, tiny, T, c) == 1.0);
    }
    SUBCASE("empty validation set") {
        EmbeddedDataset empty;
        CHECK_THROWS_AS(fitness(Chain{}, p.train, empty, T, svm_config()), DataError);
    }
}

TEST_CASE("crossover") {
    std::mt19937_64 rng(9);
    const Chain c{{2, 0, 1}};
    for (int t = 0; t < 50; ++t) CHECK(crossover(c, c, rng) == c);
    for (int t = 0; t < 200; ++t) {
        const auto child = crossover(Chain{{0, 1}}, Chain{}, rng);
        CHECK(child.size() <= 2);
        CHECK(std::equal(child.order.begin(), child.order.end(), std::vector<std::size_t>{0, 1}.begin()));
    }
    CHECK(crossover(Chain{{0, 1}}, Chain{{1, 0}}, 5ULL) == crossover(Chain{{0, 1}}, Chain{{1, 0}}, 5ULL));
}

TEST_CASE("mutation") {
    GaConfig single;
    single.max_mutation_length_change = 1;
    std::mt19937_64 rng(4);
    for (int t = 0; t < 300; ++t) {
        // a full chain can only lose a label or reorder
        const auto shrunk = mutate(full_chain(4), 4, single, rng);
        CHECK(shrunk.is_valid(4));
        CHECK((shrunk.size() == 3 || (shrunk.size() == 4 && shrunk != full_chain(4))));
        // an empty chain can only gain a label
        CHECK(mutate(Chain{}, 4, single, rng).size() == 1);
    }
    GaConfig cfg;
    for (int t = 0; t < 1000; ++t) {
        const auto m = mutate(Chain{{1, 3}}, 4, cfg, rng);
        CHECK(m.is_valid(4));
        CHECK(m.size() <= 4);
    }
}

TEST_CASE("validity closure and bounded length change over many random operations") {
    GaConfig cfg;
    std::mt19937_64 rng(77);
    const std::size_t n_labels = 6;
    std::vector<Chain> pool = initial_population(n_labels, 10, rng);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::size_t max_delta = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto& a = pool[pick(rng)];
        const auto& b = pool[pick(rng)];
        Chain child;
        if (t % 2 == 0) {
            child = crossover(a, b, rng);
            CHECK(child.size() >= std::min(a.size(), b.size()));
            CHECK(child.size() <= std::max(a.size(), b.size()));
        } else {
            child = mutate(a, n_labels, cfg, rng);
            const auto delta = child.size() > a.size() ? child.size() - a.size() : a.size() - child.size();
            max_delta = std::max(max_delta, delta);
        }
        REQUIRE(child.is_valid(n_labels));
        pool[pick(rng)] = child;
    }
    CHECK(max_delta <= cfg.max_mutation_length_change);
}

TEST_CASE("initial population") {
    std::mt19937_64 rng(1);
    const auto pop = initial_population(4, 10, rng);
    CHECK(pop.size() == 10);
    CHECK(pop[0] == Chain{});
    CHECK(pop[1] == full_chain(4));
    for (const auto& c : pop) CHECK(c.is_valid(4));
}

TEST_CASE("genetic search") {
    const auto p = small_problem(5);
    const BinarizationCriterion T{};
    GaConfig cfg;
    cfg.seed = 3;

    SUBCASE("best fitness never decreases and the result is reproducible") {
        const auto r = ga_search(p.train, p.validation, cfg, T, svm_config());
        for (std::size_t g = 1; g < r.history.size(); ++g) CHECK(r.history[g] >= r.history[g - 1]);
        CHECK(r.history.back() == r.best_fitness);
        CHECK(r.best.is_valid(3));
        CHECK(r.best_fitness == fitness(r.best, p.train, p.validation, T, svm_config()));
        CHECK(r.best_fitness >= fitness(Chain{}, p.train, p.validation, T, svm_config()));
        const auto again = ga_search(p.train, p.validation, cfg, T, svm_config());
        CHECK(again.best == r.best);
        CHECK(again.history == r.history);
    }
    SUBCASE("a population of empty chains with one generation returns the empty chain") {
        GaConfig one = cfg;
        one.generations = 1;
        one.mutation_rate = 0.0;
        const auto r = ga_search(p.train, p.validation, one, T, svm_config(), {}, std::vector<Chain>(10));
        CHECK(r.best == Chain{});
    }
    SUBCASE("configuration checks") {
        GaConfig bad = cfg;
        bad.population_size = 2;
        CHECK_THROWS_AS(ga_search(p.train, p.validation, bad, T, svm_config()), ConfigError);
        bad = cfg;
        bad.tournament_size = 11;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
}
