#pragma once

#include "miml/bagdata.hpp"
#include "miml/chain_ga.hpp"
#include "miml/config.hpp"
#include "miml/medoid_embed.hpp"
#include "miml/mlmetrics.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace miml {

/// Number of leakage-guard violations observed in this process.
std::size_t leakage_guard_trips();

/// Throws RuntimeFailure (and counts the trip) when `ok` is false.
void leakage_guard(bool ok, std::string_view what);

/// Stratified hold-out: bags are ordered by label set (shuffled within a set)
/// and every 1/fraction-th one is held out. Both parts are non-empty.
struct HoldoutSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};
HoldoutSplit stratified_holdout(const std::vector<LabelVector>& labels, double fraction, std::uint64_t seed);

/// Per-label embedded synthetic negatives for a (scaled) training set. Labels
/// without any negative bag get an empty matrix. Empty when n_bags is 0.
ExtraNegatives build_extra_negatives(const MimlDataset& train, const MedoidSet& medoids,
                                     const RunConfig& config);

/// Everything fit on one training set: scaler, medoids, chain and criterion.
struct FittedPipeline {
    MinMaxScaler scaler;
    std::shared_ptr<const MedoidSet> medoids;
    ChainModel chain_model;
    BinarizationCriterion criterion;
    std::vector<double> ga_history;  // empty for the baseline

    [[nodiscard]] Matrix scores(const MimlDataset& data) const;
};

/// Fits the whole pipeline on `train` (raw, unscaled bags).
FittedPipeline fit_pipeline(const MimlDataset& train, const RunConfig& config);

struct CvReport {
    EvalReport eval;
    std::vector<Chain> fold_chains;
    Method method = Method::chain_ga;
    std::vector<std::pair<std::string, std::string>> config_echo;
};

/// Cross-validated train/evaluate over a prebuilt fold split.
CvReport run_cv(const RunConfig& config, const MimlDataset& data, const FoldSplit& split);
CvReport run_cv(const RunConfig& config, const MimlDataset& data);
/// Loads the dataset named by the config.
CvReport run_cv(const RunConfig& config);

inline const std::vector<std::string> kSweepAxes = {"svm.C", "cluster.k", "criterion.c_threshold",
                                                   "oversample.n_bags"};

/// One run per value over a single shared fold split. Sweeping
/// criterion.c_threshold switches the criterion to C.
std::vector<CvReport> sweep(const RunConfig& config, const MimlDataset& data, std::string_view axis,
                            const std::vector<std::string>& values);
std::vector<CvReport> sweep(const RunConfig& config, std::string_view axis, const std::vector<std::string>& values);

MimlDataset load_configured_dataset(const RunConfig& config);

// Reports

std::string report_json(const CvReport& report);
std::string sweep_json(std::string_view axis, const std::vector<std::string>& values,
                       const std::vector<CvReport>& reports);
/// Plain-text table: Method | CL | HL | ACC | EM | Rank Loss | One Error | Coverage | AP.
std::string report_table(const std::vector<CvReport>& reports, std::string_view axis = {},
                         const std::vector<std::string>& values = {});

}  // namespace miml
