#pragma once

#include "miml/bagdata.hpp"
#include "miml/matrix.hpp"

#include <optional>
#include <span>
#include <vector>

namespace miml {

/// Rows are examples, columns labels.
using LabelMatrix = std::vector<LabelVector>;

// Set-based metrics over binarized predictions.
double hamming_loss(const LabelMatrix& truth, const LabelMatrix& predicted);
/// Mean Jaccard index |Y & P| / |Y | P|; an example with both sets empty scores 1.
double accuracy_jaccard(const LabelMatrix& truth, const LabelMatrix& predicted);
double exact_match(const LabelMatrix& truth, const LabelMatrix& predicted);

// Ranking metrics over scores. Labels are ranked by descending score with ties
// going to the lower label index. Examples for which a metric is undefined are
// skipped (no relevant label for one_error and coverage; no relevant or no
// irrelevant label for rank_loss and average_precision). If every example is
// skipped the losses report 0 and average_precision reports 1.
double one_error(const LabelMatrix& truth, const Matrix& scores);
/// Mean of (1-based rank of the lowest-ranked relevant label) - 1.
double coverage(const LabelMatrix& truth, const Matrix& scores);
/// Fraction of misordered (relevant, irrelevant) pairs; tied scores count 1/2.
double rank_loss(const LabelMatrix& truth, const Matrix& scores);
double average_precision(const LabelMatrix& truth, const Matrix& scores);

struct FoldMetrics {
    double hamming_loss = 0.0;
    double accuracy = 0.0;
    double exact_match = 0.0;
    double rank_loss = 0.0;
    double one_error = 0.0;
    double coverage = 0.0;
    double average_precision = 0.0;
    std::optional<double> chain_length;  // absent for the binary-relevance baseline
};

FoldMetrics evaluate(const LabelMatrix& truth, const LabelMatrix& predicted, const Matrix& scores);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation over folds
};

MetricSummary summarize(std::span<const double> values);

struct EvalReport {
    MetricSummary hamming_loss;
    MetricSummary accuracy;
    MetricSummary exact_match;
    MetricSummary rank_loss;
    MetricSummary one_error;
    MetricSummary coverage;
    MetricSummary average_precision;
    std::optional<MetricSummary> avg_chain_length;
    std::vector<FoldMetrics> per_fold;
};

EvalReport aggregate(std::span<const FoldMetrics> folds);

}  // namespace miml
