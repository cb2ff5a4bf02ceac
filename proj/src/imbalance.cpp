#include "miml/imbalance.hpp"

#include "miml/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace miml {

void OversampleConfig::validate() const {
    if (max_bag_size < 2) throw ConfigError("oversample.max_bag_size must be at least 2");
}

bool is_synthetic_bag_id(std::string_view bag_id) { return bag_id.starts_with(kSyntheticPrefix); }

double imbalance_probability(double p_ins, std::size_t n_i) {
    if (!(p_ins >= 0.0 && p_ins <= 1.0)) throw ConfigError("p_ins must lie in [0, 1]");
    if (n_i < 1) throw ConfigError("bag size must be at least 1");
    return 1.0 - std::pow(1.0 - p_ins, static_cast<double>(n_i));
}

std::vector<Instance> extract_negative_pool(const MimlDataset& dataset, std::size_t label_index) {
    if (label_index >= dataset.n_labels) throw ConfigError("label index out of range");
    std::vector<Instance> pool;
    for (std::size_t i = 0; i < dataset.n_bag(); ++i) {
        if (dataset.labels[i][label_index] != 0) continue;
        const auto& inst = dataset.bags[i].instances;
        pool.insert(pool.end(), inst.begin(), inst.end());
    }
    if (pool.empty()) {
        throw DataError("no negatives: every bag is positive for label " + std::to_string(label_index));
    }
    return pool;
}

std::vector<Bag> oversample_negatives(const std::vector<Instance>& pool, const OversampleConfig& config,
                                      std::string_view label_tag) {
    config.validate();
    if (pool.empty()) throw DataError("oversample_negatives: empty pool");
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::uniform_int_distribution<std::size_t> size(2, config.max_bag_size);
    std::vector<Bag> bags;
    bags.reserve(config.n_extra_bags);
    for (std::size_t b = 0; b < config.n_extra_bags; ++b) {
        Bag bag;
        bag.bag_id = std::string(kSyntheticPrefix) + std::string(label_tag) + std::to_string(b);
        const std::size_t n = size(rng);
        for (std::size_t j = 0; j < n; ++j) bag.instances.push_back(pool[pick(rng)]);
        bags.push_back(std::move(bag));
    }
    return bags;
}

std::size_t default_max_bag_size(const MimlDataset& dataset) {
    std::size_t largest = 2;
    for (const auto& bag : dataset.bags) largest = std::max(largest, bag.size());
    return largest;
}

MimlDataset augment_training_fold(const MimlDataset& train, std::size_t label_index,
                                  const OversampleConfig& config) {
    if (config.n_extra_bags == 0) return train;
    const auto pool = extract_negative_pool(train, label_index);
    MimlDataset out = train;
    for (auto& bag : oversample_negatives(pool, config, "l" + std::to_string(label_index) + "-")) {
        out.bags.push_back(std::move(bag));
        out.labels.emplace_back(train.n_labels, 0);
    }
    return out;
}

}  // namespace miml
