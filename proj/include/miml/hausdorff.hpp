#pragma once

#include "miml/bagdata.hpp"
#include "miml/matrix.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace miml {

/// `max` is the classic Hausdorff distance; `average` replaces each directed
/// max-min by the mean of per-point minimum distances and averages the two directions.
enum class HausdorffVariant { max, average };

HausdorffVariant parse_hausdorff_variant(std::string_view name);
std::string_view variant_name(HausdorffVariant variant);

/// max over a in A of min over b in B of ||a - b||.
double directed_hausdorff(const Bag& a, const Bag& b);

double hausdorff(const Bag& a, const Bag& b, HausdorffVariant variant = HausdorffVariant::max);

/// Symmetric matrix of pairwise bag distances with an exactly zero diagonal.
struct BagDistanceMatrix {
    Matrix values;
    std::vector<std::string> bag_ids;

    [[nodiscard]] std::size_t size() const noexcept { return values.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

BagDistanceMatrix distance_matrix(std::span<const Bag> bags,
                                  HausdorffVariant variant = HausdorffVariant::max);

}  // namespace miml
