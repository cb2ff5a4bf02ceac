#pragma once

#include "miml/bagdata.hpp"
#include "miml/hausdorff.hpp"
#include "miml/matrix.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace miml {

/// Cluster representatives: copies of k distinct training bags.
struct MedoidSet {
    std::vector<Bag> medoids;
    HausdorffVariant variant = HausdorffVariant::max;

    [[nodiscard]] std::size_t k() const noexcept { return medoids.size(); }
};

inline constexpr std::size_t kKMedoidsRestarts = 5;

struct KMedoidsResult {
    std::vector<std::size_t> medoids;     // bag indices, in seeding order
    std::vector<std::size_t> assignment;  // per bag, position in `medoids`
    /// Objective after seeding, then after every sweep and every exchange.
    std::vector<double> objective_history;
    std::size_t iterations = 0;
    bool converged = false;

    [[nodiscard]] double objective() const { return objective_history.back(); }
};

/// Sum over bags of the distance to the nearest of the given medoids.
double clustering_objective(const BagDistanceMatrix& dist, std::span<const std::size_t> medoids);

/// Voronoi-iteration k-medoids over a precomputed distance matrix.
///
/// Seeding is farthest-first from a seeded random start. Each sweep assigns
/// every bag to its nearest medoid (a medoid always owns itself, other ties go
/// to the medoid with the lowest bag index), then moves each medoid to the
/// member with the smallest summed distance to its cluster. The current medoid
/// is kept when it ties for the minimum. Sweeps stop when assignments repeat or
/// after `max_iter` sweeps. Then, up to `max_iter` times, the single
/// medoid/non-medoid exchange that lowers the objective most is applied, until
/// none does.
///
/// Further runs start from kKMedoidsRestarts - 1 seeded random medoid sets;
/// the run with the lowest final objective is returned (the earliest on ties).
KMedoidsResult kmedoids(const BagDistanceMatrix& dist, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter = 100);

MedoidSet kmedoids(std::span<const Bag> bags, std::size_t k, std::uint64_t seed,
                   std::size_t max_iter = 100, HausdorffVariant variant = HausdorffVariant::max);

/// Row i, column j is the bag distance between bags[i] and medoid j.
Matrix embed(std::span<const Bag> bags, const MedoidSet& medoids);

/// Fixed-width representation of a labelled dataset.
struct EmbeddedDataset {
    Matrix z;
    std::vector<LabelVector> labels;
    std::vector<std::string> bag_ids;
    std::shared_ptr<const MedoidSet> medoid_ref;

    [[nodiscard]] std::size_t n_bag() const noexcept { return z.rows(); }
    [[nodiscard]] std::size_t n_labels() const noexcept {
        return labels.empty() ? 0 : labels.front().size();
    }
    [[nodiscard]] EmbeddedDataset subset(std::span<const std::size_t> rows) const;
};

EmbeddedDataset embed_dataset(const MimlDataset& ds, std::shared_ptr<const MedoidSet> medoids);

}  // namespace miml
