#pragma once

#include "miml/bagdata.hpp"

#include <random>
#include <string>
#include <vector>

namespace testing_util {

inline miml::Bag make_bag(std::string id, std::vector<miml::Instance> points) {
    miml::Bag b;
    b.bag_id = std::move(id);
    b.instances = std::move(points);
    return b;
}

inline miml::Bag random_bag(std::mt19937_64& rng, std::size_t max_size, std::size_t n_feat,
                            const std::string& id = "r") {
    std::uniform_int_distribution<std::size_t> size(1, max_size);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    miml::Bag b;
    b.bag_id = id;
    const auto n = size(rng);
    for (std::size_t i = 0; i < n; ++i) {
        miml::Instance x(n_feat);
        for (auto& v : x) v = coord(rng);
        b.instances.push_back(std::move(x));
    }
    return b;
}

}  // namespace testing_util
