#include "miml/mlmetrics.hpp"

#include "miml/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace miml {

namespace {

void check_shapes(const LabelMatrix& a, const LabelMatrix& b) {
    if (a.size() != b.size()) throw DataError("metrics: example count mismatch");
    if (a.empty()) throw DataError("metrics: no examples");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size() || a[i].size() != a.front().size()) {
            throw DataError("metrics: label count mismatch");
        }
    }
}

void check_shapes(const LabelMatrix& truth, const Matrix& scores) {
    if (truth.size() != scores.rows()) throw DataError("metrics: example count mismatch");
    if (truth.empty()) throw DataError("metrics: no examples");
    for (const auto& row : truth) {
        if (row.size() != scores.cols()) throw DataError("metrics: label count mismatch");
    }
}

/// Labels ordered by descending score, lower index first on ties.
std::vector<std::size_t> ranking(std::span<const double> s) {
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    return order;
}

std::size_t count_relevant(const LabelVector& y) {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

}  // namespace

double hamming_loss(const LabelMatrix& truth, const LabelMatrix& predicted) {
    check_shapes(truth, predicted);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (std::size_t l = 0; l < truth[i].size(); ++l) wrong += truth[i][l] != predicted[i][l];
    }
    return static_cast<double>(wrong) / static_cast<double>(truth.size() * truth.front().size());
}

double accuracy_jaccard(const LabelMatrix& truth, const LabelMatrix& predicted) {
    check_shapes(truth, predicted);
    double total = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        std::size_t inter = 0;
        std::size_t uni = 0;
        for (std::size_t l = 0; l < truth[i].size(); ++l) {
            inter += truth[i][l] && predicted[i][l];
            uni += truth[i][l] || predicted[i][l];
        }
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / static_cast<double>(truth.size());
}

double exact_match(const LabelMatrix& truth, const LabelMatrix& predicted) {
    check_shapes(truth, predicted);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double one_error(const LabelMatrix& truth, const Matrix& scores) {
    check_shapes(truth, scores);
    std::size_t used = 0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (count_relevant(truth[i]) == 0) continue;
        ++used;
        errors += truth[i][ranking(scores.row(i)).front()] == 0;
    }
    return used == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(used);
}

double coverage(const LabelMatrix& truth, const Matrix& scores) {
    check_shapes(truth, scores);
    std::size_t used = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (count_relevant(truth[i]) == 0) continue;
        ++used;
        const auto order = ranking(scores.row(i));
        std::size_t deepest = 0;
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            if (truth[i][order[pos]]) deepest = pos;
        }
        total += static_cast<double>(deepest);
    }
    return used == 0 ? 0.0 : total / static_cast<double>(used);
}

double rank_loss(const LabelMatrix& truth, const Matrix& scores) {
    check_shapes(truth, scores);
    std::size_t used = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const std::size_t rel = count_relevant(truth[i]);
        const std::size_t irr = truth[i].size() - rel;
        if (rel == 0 || irr == 0) continue;
        ++used;
        double bad = 0.0;
        for (std::size_t a = 0; a < truth[i].size(); ++a) {
            if (!truth[i][a]) continue;
            for (std::size_t b = 0; b < truth[i].size(); ++b) {
                if (truth[i][b]) continue;
                if (scores(i, a) < scores(i, b)) bad += 1.0;
                else if (scores(i, a) == scores(i, b)) bad += 0.5;
            }
        }
        total += bad / static_cast<double>(rel * irr);
    }
    return used == 0 ? 0.0 : total / static_cast<double>(used);
}

double average_precision(const LabelMatrix& truth, const Matrix& scores) {
    check_shapes(truth, scores);
    std::size_t used = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const std::size_t rel = count_relevant(truth[i]);
        if (rel == 0 || rel == truth[i].size()) continue;
        ++used;
        const auto order = ranking(scores.row(i));
        double sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            if (!truth[i][order[pos]]) continue;
            ++seen;
            sum += static_cast<double>(seen) / static_cast<double>(pos + 1);
        }
        total += sum / static_cast<double>(rel);
    }
    return used == 0 ? 1.0 : total / static_cast<double>(used);
}

FoldMetrics evaluate(const LabelMatrix& truth, const LabelMatrix& predicted, const Matrix& scores) {
    FoldMetrics m;
    m.hamming_loss = hamming_loss(truth, predicted);
    m.accuracy = accuracy_jaccard(truth, predicted);
    m.exact_match = exact_match(truth, predicted);
    m.rank_loss = rank_loss(truth, scores);
    m.one_error = one_error(truth, scores);
    m.coverage = coverage(truth, scores);
    m.average_precision = average_precision(truth, scores);
    return m;
}

MetricSummary summarize(std::span<const double> values) {
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / n)};
}

EvalReport aggregate(std::span<const FoldMetrics> folds) {
    EvalReport r;
    r.per_fold.assign(folds.begin(), folds.end());
    auto column = [&](auto member) {
        std::vector<double> v;
        for (const auto& f : folds) v.push_back(f.*member);
        return summarize(v);
    };
    r.hamming_loss = column(&FoldMetrics::hamming_loss);
    r.accuracy = column(&FoldMetrics::accuracy);
    r.exact_match = column(&FoldMetrics::exact_match);
    r.rank_loss = column(&FoldMetrics::rank_loss);
    r.one_error = column(&FoldMetrics::one_error);
    r.coverage = column(&FoldMetrics::coverage);
    r.average_precision = column(&FoldMetrics::average_precision);
    std::vector<double> lengths;
    for (const auto& f : folds) {
        if (f.chain_length) lengths.push_back(*f.chain_length);
    }
    if (!lengths.empty()) r.avg_chain_length = summarize(lengths);
    return r;
}

}  // namespace miml
