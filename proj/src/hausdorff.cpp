#include "miml/hausdorff.hpp"

#include "miml/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace miml {

namespace {

double euclidean(const Instance& u, const Instance& v) {
    double sum = 0.0;
    for (std::size_t f = 0; f < u.size(); ++f) {
        const double d = u[f] - v[f];
        sum += d * d;
    }
    return std::sqrt(sum);
}

void check_compatible(const Bag& a, const Bag& b) {
    if (a.instances.empty() || b.instances.empty()) {
        throw DataError("hausdorff: bags must be non-empty");
    }
    if (a.n_feat() != b.n_feat()) {
        throw DataError("hausdorff: feature length mismatch between '" + a.bag_id + "' and '" +
                        b.bag_id + "'");
    }
}

double nearest(const Instance& x, const Bag& other) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : other.instances) best = std::min(best, euclidean(x, y));
    return best;
}

double directed_max(const Bag& a, const Bag& b) {
    double worst = 0.0;
    for (const auto& x : a.instances) worst = std::max(worst, nearest(x, b));
    return worst;
}

double directed_mean(const Bag& a, const Bag& b) {
    double sum = 0.0;
    for (const auto& x : a.instances) sum += nearest(x, b);
    return sum / static_cast<double>(a.size());
}

}  // namespace

HausdorffVariant parse_hausdorff_variant(std::string_view name) {
    if (name == "max") return HausdorffVariant::max;
    if (name == "average") return HausdorffVariant::average;
    throw ConfigError("distance.variant must be max or average, got '" + std::string(name) + "'");
}

std::string_view variant_name(HausdorffVariant variant) {
    return variant == HausdorffVariant::max ? "max" : "average";
}

double directed_hausdorff(const Bag& a, const Bag& b) {
    check_compatible(a, b);
    return directed_max(a, b);
}

double hausdorff(const Bag& a, const Bag& b, HausdorffVariant variant) {
    check_compatible(a, b);
    if (variant == HausdorffVariant::max) return std::max(directed_max(a, b), directed_max(b, a));
    return 0.5 * (directed_mean(a, b) + directed_mean(b, a));
}

BagDistanceMatrix distance_matrix(std::span<const Bag> bags, HausdorffVariant variant) {
    const std::size_t n = bags.size();
    for (const auto& bag : bags) {
        if (bag.instances.empty()) throw DataError("distance_matrix: empty bag '" + bag.bag_id + "'");
        if (bag.n_feat() != bags.front().n_feat()) {
            throw DataError("distance_matrix: mixed feature lengths");
        }
    }
    BagDistanceMatrix out{Matrix(n, n, 0.0), {}};
    out.bag_ids.reserve(n);
    for (const auto& bag : bags) out.bag_ids.push_back(bag.bag_id);

    // Row i owns the upper-triangle entries (i, j > i); mirrored afterwards.
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) out.values(i, j) = hausdorff(bags[i], bags[j], variant);
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) out.values(j, i) = out.values(i, j);
    }
    return out;
}

}  // namespace miml
