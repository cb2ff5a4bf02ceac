#pragma once

#include "miml/bagdata.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace miml {

/// Bag-level negative oversampling. Sampling instances with replacement from
/// the negative pool assumes instances in a bag are drawn independently.
struct OversampleConfig {
    std::size_t n_extra_bags = 0;
    std::size_t max_bag_size = 2;  // synthetic bag sizes are uniform in [2, max_bag_size]
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr std::string_view kSyntheticPrefix = "synthetic-neg-";

bool is_synthetic_bag_id(std::string_view bag_id);

/// Probability that a bag of n_i independent instances contains at least one
/// positive instance: 1 - (1 - p_ins)^n_i.
double imbalance_probability(double p_ins, std::size_t n_i);

/// Every instance of every bag that is negative for `label_index`.
std::vector<Instance> extract_negative_pool(const MimlDataset& dataset, std::size_t label_index);

/// n_extra_bags bags of instances sampled uniformly with replacement from the pool.
/// Ids are `synthetic-neg-<label_tag><i>`.
std::vector<Bag> oversample_negatives(const std::vector<Instance>& pool, const OversampleConfig& config,
                                      std::string_view label_tag = "");

/// Largest bag in the dataset, but at least 2.
std::size_t default_max_bag_size(const MimlDataset& dataset);

/// Training fold plus synthetic bags negative for `label_index`. The synthetic
/// bags carry all-zero label vectors; only their `label_index` entry is
/// meaningful, since augmentation is per label.
MimlDataset augment_training_fold(const MimlDataset& train, std::size_t label_index,
                                  const OversampleConfig& config);

}  // namespace miml
