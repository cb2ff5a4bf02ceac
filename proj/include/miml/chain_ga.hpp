#pragma once

#include "miml/kernel_svm.hpp"
#include "miml/matrix.hpp"
#include "miml/medoid_embed.hpp"
#include "miml/mlmetrics.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace miml {

/// Ordered, duplicate-free subset of label indices. Labels absent from the
/// chain are predicted independently.
struct Chain {
    std::vector<std::size_t> order;

    [[nodiscard]] std::size_t size() const noexcept { return order.size(); }
    [[nodiscard]] bool contains(std::size_t label) const;
    [[nodiscard]] bool is_valid(std::size_t n_labels) const;
    void validate(std::size_t n_labels) const;
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const Chain&, const Chain&) = default;
    friend auto operator<=>(const Chain&, const Chain&) = default;
};

Chain full_chain(std::size_t n_labels);

/// Per-label extra training rows that are negative for that label only
/// (embedded synthetic bags). Either empty or one matrix per label.
using ExtraNegatives = std::vector<Matrix>;

struct ChainModel {
    Chain chain;
    std::size_t n_labels = 0;
    std::size_t width = 0;  // embedding width k
    /// chained_svms[j] predicts chain.order[j] from k + j inputs.
    std::vector<SvmModel> chained_svms;
    /// One model per off-chain label, in ascending label order.
    std::vector<std::size_t> independent_labels;
    std::vector<SvmModel> independent_svms;
};

/// Trains the chain sequentially: position j sees the embedding plus the
/// calibrated probabilities predicted by positions 0..j-1 on the same rows.
ChainModel train_chain(const EmbeddedDataset& train, const Chain& chain, const SvmConfig& svm,
                       const ExtraNegatives& extra = {});

/// Per-label probabilities in [0.01, 0.99]; chained labels are evaluated in chain order.
Matrix predict_scores(const ChainModel& model, const Matrix& z_rows);

struct BinarizationCriterion {
    enum class Kind { T, C };
    Kind kind = Kind::T;
    double c_threshold = 0.0;

    [[nodiscard]] double threshold() const { return kind == Kind::T ? 0.5 : 0.5 - c_threshold; }
    void validate() const;
};

BinarizationCriterion::Kind parse_criterion_kind(std::string_view name);

/// Labels with score above the (possibly relaxed) threshold; the arg-max label
/// (lowest index on ties) when none qualifies.
LabelVector binarize(std::span<const double> scores, const BinarizationCriterion& criterion);
LabelMatrix binarize(const Matrix& scores, const BinarizationCriterion& criterion);

/// Memoizes SVMs trained on one embedded training set, keyed by chain prefix.
/// A prefix ending in label l fully determines the model for l at that
/// position, so chains sharing prefixes (and every off-chain label, which is
/// the length-1 prefix {l}) reuse work. Probabilities on an optional
/// evaluation matrix are memoized alongside. Safe for concurrent use.
class ChainTrainer {
public:
    ChainTrainer(EmbeddedDataset train, SvmConfig svm, ExtraNegatives extra = {},
                 std::optional<Matrix> eval_rows = std::nullopt);

    [[nodiscard]] ChainModel train(const Chain& chain);
    /// Same values as predict_scores(train(chain), eval_rows), from the memo.
    [[nodiscard]] Matrix eval_scores(const Chain& chain);

    [[nodiscard]] const EmbeddedDataset& data() const noexcept { return train_; }
    [[nodiscard]] std::size_t models_trained() const;

private:
    struct Node {
        SvmModel model;
        std::vector<double> train_probs;
        std::vector<double> eval_probs;
    };
    std::shared_ptr<const Node> node(std::span<const std::size_t> prefix);

    EmbeddedDataset train_;
    SvmConfig svm_;
    ExtraNegatives extra_;
    std::optional<Matrix> eval_;
    mutable std::mutex mutex_;
    std::map<std::vector<std::size_t>, std::shared_ptr<const Node>> memo_;
};

/// Example-based (Jaccard) accuracy on the validation set of a chain trained on `train`.
double fitness(const Chain& chain, const EmbeddedDataset& train, const EmbeddedDataset& validation,
               const BinarizationCriterion& criterion, const SvmConfig& svm, const ExtraNegatives& extra = {});

struct GaConfig {
    std::size_t population_size = 10;
    std::size_t tournament_size = 3;
    std::size_t max_mutation_length_change = 2;
    std::size_t generations = 20;
    std::size_t stagnation_limit = 5;  // stop after this many generations without improvement
    double crossover_rate = 0.9;
    double mutation_rate = 0.3;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Single cut point on `a`, then `b`'s labels not yet present in `b`'s order,
/// truncated to a uniform length between the parents' lengths.
Chain crossover(const Chain& a, const Chain& b, std::mt19937_64& rng);
Chain crossover(const Chain& a, const Chain& b, std::uint64_t seed);

/// Between 1 and max_mutation_length_change random edits, each an insertion of
/// an absent label, a deletion, or a swap of two positions.
Chain mutate(const Chain& c, std::size_t n_labels, const GaConfig& config, std::mt19937_64& rng);
Chain mutate(const Chain& c, std::size_t n_labels, const GaConfig& config, std::uint64_t seed);

/// Empty chain, full sequential chain, then random chains.
std::vector<Chain> initial_population(std::size_t n_labels, std::size_t size, std::mt19937_64& rng);

struct GaResult {
    Chain best;
    double best_fitness = 0.0;
    /// Best fitness of the initial population followed by one entry per generation.
    std::vector<double> history;
    std::size_t evaluations = 0;
};

/// Tournament-selection GA over chains with elitism. `seed_population`, when
/// non-empty, replaces the generated initial population.
GaResult ga_search(const EmbeddedDataset& train, const EmbeddedDataset& validation, const GaConfig& config,
                   const BinarizationCriterion& criterion, const SvmConfig& svm, const ExtraNegatives& extra = {},
                   std::vector<Chain> seed_population = {});

}  // namespace miml
