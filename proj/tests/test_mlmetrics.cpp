#include "miml/mlmetrics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace miml;

namespace {

LabelMatrix to_labels(const std::vector<std::vector<int>>& v) {
    LabelMatrix out;
    for (const auto& r : v) out.emplace_back(r.begin(), r.end());
    return out;
}

Matrix to_scores(const std::vector<std::vector<double>>& v) {
    Matrix m;
    for (const auto& r : v) m.push_row(r);
    return m;
}

void check_against_oracle(const oracle::Fixture& f) {
    const auto Y = to_labels(f.truth);
    const auto P = to_labels(f.predicted);
    const auto S = to_scores(f.scores);
    CHECK(hamming_loss(Y, P) == oracle::hamming(f));
    CHECK(accuracy_jaccard(Y, P) == oracle::jaccard(f));
    CHECK(exact_match(Y, P) == oracle::exact(f));
    CHECK(one_error(Y, S) == oracle::one_error(f));
    CHECK(coverage(Y, S) == oracle::coverage(f));
    CHECK(rank_loss(Y, S) == oracle::rank_loss(f));
    CHECK(average_precision(Y, S) == oracle::average_precision(f));
}

}  // namespace

TEST_CASE("set-based examples") {
    const auto Y = to_labels({{1, 0, 0}, {0, 1, 1}});
    CHECK(hamming_loss(Y, Y) == 0.0);
    CHECK(hamming_loss(Y, to_labels({{0, 1, 1}, {1, 0, 0}})) == 1.0);
    CHECK(hamming_loss(Y, to_labels({{1, 1, 0}, {0, 1, 0}})) == doctest::Approx(2.0 / 6.0));

    CHECK(accuracy_jaccard(Y, Y) == 1.0);
    CHECK(accuracy_jaccard(to_labels({{1, 1, 0}}), to_labels({{0, 0, 1}})) == 0.0);
    CHECK(accuracy_jaccard(to_labels({{1, 1, 0}}), to_labels({{0, 1, 1}})) == doctest::Approx(1.0 / 3.0));
    CHECK(accuracy_jaccard(to_labels({{0, 0}}), to_labels({{0, 0}})) == 1.0);

    CHECK(exact_match(Y, Y) == 1.0);
    CHECK(exact_match(Y, to_labels({{1, 0, 0}, {0, 1, 0}})) == 0.5);
}

TEST_CASE("ranking examples") {
    const auto s5 = to_scores({{0.9, 0.8, 0.7, 0.6, 0.5}});
    CHECK(one_error(to_labels({{1, 0, 0, 0, 0}}), s5) == 0.0);
    CHECK(one_error(to_labels({{0, 1, 1, 1, 1}}), s5) == 1.0);
    CHECK(coverage(to_labels({{1, 0, 0, 0, 0}}), s5) == 0.0);
    CHECK(coverage(to_labels({{0, 0, 0, 0, 1}}), s5) == 4.0);
    CHECK(rank_loss(to_labels({{1, 1, 0, 0, 0}}), s5) == 0.0);
    CHECK(rank_loss(to_labels({{0, 0, 0, 1, 1}}), s5) == 1.0);
    CHECK(rank_loss(to_labels({{1, 0}}), to_scores({{0.4, 0.4}})) == 0.5);
    CHECK(average_precision(to_labels({{1, 1, 0, 0, 0}}), s5) == 1.0);
    CHECK(average_precision(to_labels({{0, 0, 1, 0, 0}}), s5) == doctest::Approx(1.0 / 3.0));

    // ties go to the lower label index
    CHECK(one_error(to_labels({{1, 0}}), to_scores({{0.5, 0.5}})) == 0.0);
    CHECK(one_error(to_labels({{0, 1}}), to_scores({{0.5, 0.5}})) == 1.0);

    // 4-example one-error count by hand: tops are 0, 2, 1, 0
    const auto Y = to_labels({{1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 1, 1}});
    const auto S = to_scores({{0.9, 0.1, 0.2}, {0.3, 0.2, 0.8}, {0.1, 0.7, 0.3}, {0.6, 0.5, 0.4}});
    CHECK(one_error(Y, S) == 0.5);
}

TEST_CASE("undefined examples are skipped") {
    const auto S = to_scores({{0.9, 0.1}, {0.2, 0.8}});
    const auto Y = to_labels({{0, 0}, {1, 1}});
    CHECK(one_error(Y, S) == 0.0);  // only the second example counts
    CHECK(coverage(Y, S) == 1.0);
    CHECK(rank_loss(Y, S) == 0.0);  // nothing left
    CHECK(average_precision(Y, S) == 1.0);
    CHECK(one_error(to_labels({{0, 0}}), to_scores({{0.1, 0.2}})) == 0.0);
}

TEST_CASE("exhaustive agreement with brute-force references") {
    // every truth/prediction pattern for 1-2 examples over 2-3 labels, with
    // scores drawn from a small grid so that ties are frequent
    const std::vector<double> grid{0.1, 0.5, 0.5, 0.9};
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::size_t> g(0, grid.size() - 1);
    std::size_t fixtures = 0;
    for (std::size_t L = 1; L <= 3; ++L) {
        const std::size_t patterns = std::size_t{1} << L;
        for (std::size_t t = 0; t < patterns; ++t) {
            for (std::size_t p = 0; p < patterns; ++p) {
                for (int rep = 0; rep < 3; ++rep) {
                    oracle::Fixture f;
                    std::vector<int> yt(L), yp(L);
                    std::vector<double> s(L);
                    for (std::size_t l = 0; l < L; ++l) {
                        yt[l] = static_cast<int>(t >> l & 1u);
                        yp[l] = static_cast<int>(p >> l & 1u);
                        s[l] = grid[g(rng)];
                    }
                    f.truth = {yt};
                    f.predicted = {yp};
                    f.scores = {s};
                    check_against_oracle(f);
                    ++fixtures;
                }
            }
        }
    }
    // random fixtures up to 6 examples and 4 labels
    std::uniform_int_distribution<int> bit(0, 1);
    std::uniform_int_distribution<std::size_t> n_ex(1, 6), n_lab(1, 4);
    for (int t = 0; t < 3000; ++t) {
        oracle::Fixture f;
        const auto N = n_ex(rng);
        const auto L = n_lab(rng);
        for (std::size_t i = 0; i < N; ++i) {
            std::vector<int> yt(L), yp(L);
            std::vector<double> s(L);
            for (std::size_t l = 0; l < L; ++l) {
                yt[l] = bit(rng);
                yp[l] = bit(rng);
                s[l] = grid[g(rng)];
            }
            f.truth.push_back(yt);
            f.predicted.push_back(yp);
            f.scores.push_back(s);
        }
        check_against_oracle(f);
        ++fixtures;
    }
    CHECK(fixtures > 3000);
}

TEST_CASE("monotone transforms, label permutations and ranges") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int t = 0; t < 300; ++t) {
        const std::size_t N = 5, L = 4;
        LabelMatrix Y(N, LabelVector(L));
        Matrix S(N, L);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t l = 0; l < L; ++l) {
                Y[i][l] = static_cast<std::uint8_t>(bit(rng));
                S(i, l) = u(rng);
            }
        Matrix T(N, L), Pm(N, L);
        LabelMatrix Yp(N, LabelVector(L));
        const std::size_t perm[] = {2, 0, 3, 1};
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t l = 0; l < L; ++l) {
                T(i, l) = std::exp(3.0 * S(i, l)) - 7.0;
                Pm(i, perm[l]) = S(i, l);
                Yp[i][perm[l]] = Y[i][l];
            }
        CHECK(one_error(Y, S) == one_error(Y, T));
        CHECK(coverage(Y, S) == coverage(Y, T));
        CHECK(rank_loss(Y, S) == rank_loss(Y, T));
        CHECK(average_precision(Y, S) == average_precision(Y, T));
        // continuous scores: no ties, so permutation cannot change tie-breaks
        CHECK(one_error(Y, S) == one_error(Yp, Pm));
        CHECK(coverage(Y, S) == coverage(Yp, Pm));
        CHECK(rank_loss(Y, S) == doctest::Approx(rank_loss(Yp, Pm)));
        CHECK(average_precision(Y, S) == doctest::Approx(average_precision(Yp, Pm)));

        const auto pred = Y;  // any binary matrix
        const auto m = evaluate(Y, pred, S);
        for (double v : {m.hamming_loss, m.accuracy, m.exact_match, m.rank_loss, m.one_error, m.average_precision}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(m.coverage >= 0.0);
        CHECK(m.coverage <= static_cast<double>(L));
    }
}

TEST_CASE("aggregation uses the population standard deviation") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto s = summarize(v);
    CHECK(s.mean == 2.5);
    CHECK(s.std == doctest::Approx(std::sqrt(1.25)));

    std::vector<FoldMetrics> folds(2);
    folds[0].hamming_loss = 0.2;
    folds[1].hamming_loss = 0.4;
    CHECK_FALSE(aggregate(folds).avg_chain_length.has_value());
    folds[0].chain_length = 1.0;
    folds[1].chain_length = 3.0;
    const auto r = aggregate(folds);
    CHECK(r.hamming_loss.mean == doctest::Approx(0.3));
    CHECK(r.hamming_loss.std == doctest::Approx(0.1));
    REQUIRE(r.avg_chain_length.has_value());
    CHECK(r.avg_chain_length->mean == 2.0);
    CHECK(r.avg_chain_length->std == 1.0);
    CHECK(r.per_fold.size() == 2);
}
