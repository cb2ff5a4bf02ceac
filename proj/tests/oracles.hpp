#pragma once
// Brute-force reference implementations used to check the library. Each one
// follows the textbook definition directly and shares no code with src/.

#include "miml/bagdata.hpp"
#include "miml/kernel_svm.hpp"
#include "miml/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline double directed_hausdorff(const Points& a, const Points& b) {
    double worst = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) best = std::min(best, euclid(p, q));
        worst = std::max(worst, best);
    }
    return worst;
}

inline double hausdorff(const Points& a, const Points& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

// ---------------------------------------------------------------------------
// Ranking metrics from pairwise counting. rank(l) is 1 + the number of labels
// that beat l, where a beats l if it scores higher or ties with a lower index.

inline std::size_t rank_of(const std::vector<double>& s, std::size_t l) {
    std::size_t r = 1;
    for (std::size_t m = 0; m < s.size(); ++m) {
        if (m == l) continue;
        if (s[m] > s[l] || (s[m] == s[l] && m < l)) ++r;
    }
    return r;
}

struct Fixture {
    std::vector<std::vector<int>> truth;
    std::vector<std::vector<int>> predicted;
    std::vector<std::vector<double>> scores;
};

inline double hamming(const Fixture& f) {
    double wrong = 0.0;
    double cells = 0.0;
    for (std::size_t i = 0; i < f.truth.size(); ++i) {
        for (std::size_t l = 0; l < f.truth[i].size(); ++l) {
            wrong += f.truth[i][l] != f.predicted[i][l];
            cells += 1.0;
        }
    }
    return wrong / cells;
}

inline double jaccard(const Fixture& f) {
    double total = 0.0;
    for (std::size_t i = 0; i < f.truth.size(); ++i) {
        int inter = 0;
        int uni = 0;
        for (std::size_t l = 0; l < f.truth[i].size(); ++l) {
            inter += f.truth[i][l] && f.predicted[i][l];
            uni += f.truth[i][l] || f.predicted[i][l];
        }
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
    }
    return total / static_cast<double>(f.truth.size());
}

inline double exact(const Fixture& f) {
    double hits = 0.0;
    for (std::size_t i = 0; i < f.truth.size(); ++i) hits += f.truth[i] == f.predicted[i];
    return hits / static_cast<double>(f.truth.size());
}

inline int n_relevant(const std::vector<int>& y) {
    int n = 0;
    for (int v : y) n += v;
    return n;
}

inline double one_error(const Fixture& f) {
    double sum = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < f.truth.size(); ++i) {
        if (n_relevant(f.truth[i]) == 0) continue;
        ++used;
        for (std::size_t l = 0; l < f.truth[i].size(); ++l) {
            if (rank_of(f.scores[i], l) == 1) sum += f.truth[i][l] ? 0.0 : 1.0;
        }
    }
    return used == 0 ? 0.0 : sum / used;
}

inline double coverage(const Fixture& f) {
    double sum = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < f.truth.size(); ++i) {
        if (n_relevant(f.truth[i]) == 0) continue;
        ++used;
        std::size_t worst = 0;
        for (std::size_t l = 0; l < f.truth[i].size(); ++l) {
            if (f.truth[i][l]) worst = std::max(worst, rank_of(f.scores[i], l));
        }
        sum += static_cast<double>(worst) - 1.0;
    }
    return used == 0 ? 0.0 : sum / used;
}

inline double rank_loss(const Fixture& f) {
    double sum = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < f.truth.size(); ++i) {
        const int rel = n_relevant(f.truth[i]);
        const int irr = static_cast<int>(f.truth[i].size()) - rel;
        if (rel == 0 || irr == 0) continue;
        ++used;
        double bad = 0.0;
        for (std::size_t a = 0; a < f.truth[i].size(); ++a) {
            for (std::size_t b = 0; b < f.truth[i].size(); ++b) {
                if (!f.truth[i][a] || f.truth[i][b]) continue;
                if (f.scores[i][a] < f.scores[i][b]) bad += 1.0;
                else if (f.scores[i][a] == f.scores[i][b]) bad += 0.5;
            }
        }
        sum += bad / (rel * irr);
    }
    return used == 0 ? 0.0 : sum / used;
}

inline double average_precision(const Fixture& f) {
    double sum = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < f.truth.size(); ++i) {
        const int rel = n_relevant(f.truth[i]);
        const int irr = static_cast<int>(f.truth[i].size()) - rel;
        if (rel == 0 || irr == 0) continue;
        ++used;
        double ap = 0.0;
        for (std::size_t l = 0; l < f.truth[i].size(); ++l) {
            if (!f.truth[i][l]) continue;
            const auto r = rank_of(f.scores[i], l);
            int above = 0;
            for (std::size_t m = 0; m < f.truth[i].size(); ++m) {
                if (f.truth[i][m] && rank_of(f.scores[i], m) <= r) ++above;
            }
            ap += static_cast<double>(above) / static_cast<double>(r);
        }
        sum += ap / rel;
    }
    return used == 0 ? 1.0 : sum / used;
}

// ---------------------------------------------------------------------------
// Dual soft-margin QP by accelerated projected gradient. The feasible set
// {0 <= a <= C, y'a = 0} is projected onto by bisection on the multiplier of
// the equality constraint.

inline std::vector<double> project(const std::vector<double>& v, const std::vector<int>& y, double C) {
    auto residual = [&](double lambda) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) s += y[i] * std::clamp(v[i] - lambda * y[i], 0.0, C);
        return s;
    };
    double lo = -1.0;
    double hi = 1.0;
    while (residual(lo) < 0.0) lo *= 2.0;
    while (residual(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i] - lambda * y[i], 0.0, C);
    return out;
}

struct QpResult {
    std::vector<double> alpha;
    double objective = 0.0;  // max of sum(a) - a'Qa/2
};

inline double dual_value(const std::vector<std::vector<double>>& Q, const std::vector<double>& a) {
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        lin += a[i];
        for (std::size_t j = 0; j < a.size(); ++j) quad += a[i] * Q[i][j] * a[j];
    }
    return lin - 0.5 * quad;
}

inline QpResult solve_qp(const miml::Matrix& x, const std::vector<int>& y, double C, const miml::KernelSpec& kernel,
                         int iterations = 20000) {
    const std::size_t n = y.size();
    std::vector<std::vector<double>> Q(n, std::vector<double>(n));
    double lipschitz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double k = 0.0;
            if (kernel.kind == miml::KernelKind::polynomial) {
                double dot = kernel.coef0;
                for (std::size_t f = 0; f < x.cols(); ++f) dot += x(i, f) * x(j, f);
                k = std::pow(dot, kernel.degree);
            } else {
                double d2 = 0.0;
                for (std::size_t f = 0; f < x.cols(); ++f) d2 += (x(i, f) - x(j, f)) * (x(i, f) - x(j, f));
                k = std::exp(-kernel.gamma * d2);
            }
            Q[i][j] = y[i] * y[j] * k;
            row += std::abs(Q[i][j]);
        }
        lipschitz = std::max(lipschitz, row);
    }
    const double step = 1.0 / std::max(lipschitz, 1e-12);

    std::vector<double> a(n, 0.0);
    std::vector<double> momentum = a;
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            double grad = -1.0;
            for (std::size_t j = 0; j < n; ++j) grad += Q[i][j] * momentum[j];
            v[i] = momentum[i] - step * grad;
        }
        auto next = project(v, y, C);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t i = 0; i < n; ++i) momentum[i] = next[i] + (t - 1.0) / t_next * (next[i] - a[i]);
        a = std::move(next);
        t = t_next;
    }
    return {a, dual_value(Q, a)};
}

// ---------------------------------------------------------------------------

inline double monte_carlo_bag_positive(double p, std::size_t n, std::size_t trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution draw(p);
    std::size_t positive = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) any = draw(rng) || any;
        positive += any;
    }
    return static_cast<double>(positive) / static_cast<double>(trials);
}

}  // namespace oracle
