#include "miml/medoid_embed.hpp"

#include "miml/errors.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace miml {

namespace {

std::vector<std::size_t> farthest_first(const BagDistanceMatrix& dist, std::size_t k, std::uint64_t seed) {
    const std::size_t n = dist.size();
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen{std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)};
    std::vector<bool> is_medoid(n, false);
    is_medoid[chosen.front()] = true;
    std::vector<double> gap(n);
    for (std::size_t i = 0; i < n; ++i) gap[i] = dist(i, chosen.front());

    while (chosen.size() < k) {
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_medoid[i]) continue;
            if (pick == n || gap[i] > gap[pick]) pick = i;
        }
        chosen.push_back(pick);
        is_medoid[pick] = true;
        for (std::size_t i = 0; i < n; ++i) gap[i] = std::min(gap[i], dist(i, pick));
    }
    return chosen;
}

std::vector<std::size_t> assign(const BagDistanceMatrix& dist, const std::vector<std::size_t>& medoids) {
    const std::size_t n = dist.size();
    std::vector<std::size_t> owner(n, medoids.size());
    for (std::size_t m = 0; m < medoids.size(); ++m) owner[medoids[m]] = m;
    parallel_for(n, [&](std::size_t i) {
        if (owner[i] != medoids.size()) return;
        std::size_t best = 0;
        for (std::size_t m = 1; m < medoids.size(); ++m) {
            const double d = dist(i, medoids[m]);
            const double b = dist(i, medoids[best]);
            if (d < b || (d == b && medoids[m] < medoids[best])) best = m;
        }
        owner[i] = best;
    });
    return owner;
}

double objective_of(const BagDistanceMatrix& dist, const std::vector<std::size_t>& medoids,
                    const std::vector<std::size_t>& owner) {
    double total = 0.0;
    for (std::size_t i = 0; i < owner.size(); ++i) total += dist(i, medoids[owner[i]]);
    return total;
}

struct Swap {
    double delta = 0.0;
    std::size_t slot = 0;
    std::size_t incoming = 0;
};

// Best single medoid/non-medoid exchange, costed from nearest and second
// nearest medoid distances (one O(n) scan per candidate).
Swap best_swap(const BagDistanceMatrix& dist, const std::vector<std::size_t>& medoids,
               const std::vector<std::size_t>& owner) {
    const std::size_t n = dist.size();
    const std::size_t k = medoids.size();
    std::vector<double> near(n), second(n, std::numeric_limits<double>::infinity());
    std::vector<bool> is_medoid(n, false);
    for (auto m : medoids) is_medoid[m] = true;
    for (std::size_t i = 0; i < n; ++i) {
        near[i] = dist(i, medoids[owner[i]]);
        for (std::size_t m = 0; m < k; ++m) {
            if (m != owner[i]) second[i] = std::min(second[i], dist(i, medoids[m]));
        }
    }
    std::vector<Swap> per_candidate(n);
    parallel_for(n, [&](std::size_t h) {
        Swap best{std::numeric_limits<double>::infinity(), 0, h};
        if (is_medoid[h]) {
            per_candidate[h] = best;
            return;
        }
        std::vector<double> delta(k, 0.0);
        double shared = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dh = dist(i, h);
            const double gain = std::min(0.0, dh - near[i]);
            shared += gain;
            delta[owner[i]] += std::min(second[i], dh) - near[i] - gain;
        }
        for (std::size_t m = 0; m < k; ++m) {
            if (shared + delta[m] < best.delta) best = {shared + delta[m], m, h};
        }
        per_candidate[h] = best;
    });
    Swap best{std::numeric_limits<double>::infinity(), 0, n};
    for (const auto& c : per_candidate) {
        if (c.delta < best.delta) best = c;
    }
    return best;
}

}  // namespace

double clustering_objective(const BagDistanceMatrix& dist, std::span<const std::size_t> medoids) {
    double total = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (auto m : medoids) best = std::min(best, dist(i, m));
        total += best;
    }
    return total;
}

namespace {

std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(idx[i], idx[std::uniform_int_distribution<std::size_t>(i, n - 1)(rng)]);
    }
    idx.resize(k);
    return idx;
}

KMedoidsResult single_run(const BagDistanceMatrix& dist, std::vector<std::size_t> start, std::size_t max_iter) {
    const std::size_t n = dist.size();
    const std::size_t k = start.size();
    KMedoidsResult result;
    result.medoids = std::move(start);
    result.assignment = assign(dist, result.medoids);
    result.objective_history.push_back(objective_of(dist, result.medoids, result.assignment));

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t sweep = 0; sweep < max_iter; ++sweep) {
        for (auto& c : members) c.clear();
        for (std::size_t i = 0; i < n; ++i) members[result.assignment[i]].push_back(i);

        parallel_for(k, [&](std::size_t m) {
            const auto& cluster = members[m];
            auto cost = [&](std::size_t candidate) {
                double s = 0.0;
                for (auto j : cluster) s += dist(candidate, j);
                return s;
            };
            std::size_t best = result.medoids[m];
            double best_cost = cost(best);
            for (auto candidate : cluster) {  // members are in ascending index order
                const double c = cost(candidate);
                if (c < best_cost) {
                    best = candidate;
                    best_cost = c;
                }
            }
            result.medoids[m] = best;
        });

        auto next = assign(dist, result.medoids);
        result.objective_history.push_back(objective_of(dist, result.medoids, next));
        result.iterations = sweep + 1;
        const bool unchanged = next == result.assignment;
        result.assignment = std::move(next);
        if (unchanged) break;
    }

    // exchange refinement
    for (std::size_t pass = 0; pass < max_iter; ++pass) {
        const auto swap = best_swap(dist, result.medoids, result.assignment);
        if (!(swap.delta < 0.0)) {
            result.converged = true;
            break;
        }
        auto trial = result.medoids;
        trial[swap.slot] = swap.incoming;
        auto owner = assign(dist, trial);
        const double value = objective_of(dist, trial, owner);
        if (!(value < result.objective_history.back())) {
            result.converged = true;
            break;
        }
        result.medoids = std::move(trial);
        result.assignment = std::move(owner);
        result.objective_history.push_back(value);
    }
    return result;
}

}  // namespace

KMedoidsResult kmedoids(const BagDistanceMatrix& dist, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter) {
    const std::size_t n = dist.size();
    if (k < 1 || k > n) {
        throw ConfigError("cluster.k must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k));
    }
    if (max_iter < 1) throw ConfigError("cluster.max_iter must be at least 1");

    KMedoidsResult best = single_run(dist, farthest_first(dist, k, seed), max_iter);
    std::mt19937_64 starts(seed);
    for (std::size_t r = 1; r < kKMedoidsRestarts && k < n; ++r) {
        auto next = single_run(dist, random_subset(n, k, starts()), max_iter);
        if (next.objective() < best.objective()) best = std::move(next);
    }
    return best;
}

MedoidSet kmedoids(std::span<const Bag> bags, std::size_t k, std::uint64_t seed, std::size_t max_iter,
                   HausdorffVariant variant) {
    const auto dist = distance_matrix(bags, variant);
    const auto result = kmedoids(dist, k, seed, max_iter);
    MedoidSet set;
    set.variant = variant;
    for (auto idx : result.medoids) set.medoids.push_back(bags[idx]);
    return set;
}

Matrix embed(std::span<const Bag> bags, const MedoidSet& medoids) {
    if (medoids.k() == 0) throw RuntimeFailure("embed: empty medoid set");
    Matrix z(bags.size(), medoids.k());
    parallel_for(bags.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < medoids.k(); ++j) {
            z(i, j) = hausdorff(bags[i], medoids.medoids[j], medoids.variant);
        }
    });
    return z;
}

EmbeddedDataset EmbeddedDataset::subset(std::span<const std::size_t> rows) const {
    EmbeddedDataset out;
    out.medoid_ref = medoid_ref;
    for (auto r : rows) {
        out.z.push_row(z.row(r));
        out.labels.push_back(labels.at(r));
        out.bag_ids.push_back(bag_ids.at(r));
    }
    if (rows.empty()) out.z = Matrix(0, z.cols());
    return out;
}

EmbeddedDataset embed_dataset(const MimlDataset& ds, std::shared_ptr<const MedoidSet> medoids) {
    EmbeddedDataset out;
    out.z = embed(ds.bags, *medoids);
    out.labels = ds.labels;
    for (const auto& bag : ds.bags) out.bag_ids.push_back(bag.bag_id);
    out.medoid_ref = std::move(medoids);
    return out;
}

}  // namespace miml
