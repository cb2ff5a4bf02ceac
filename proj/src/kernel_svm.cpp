#include "miml/kernel_svm.hpp"

#include "miml/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace miml {

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "polynomial" || name == "poly") return KernelKind::polynomial;
    if (name == "gaussian" || name == "rbf") return KernelKind::gaussian;
    throw ConfigError("svm.kernel must be polynomial or gaussian, got '" + std::string(name) + "'");
}

std::string_view kernel_name(KernelKind kind) {
    return kind == KernelKind::polynomial ? "polynomial" : "gaussian";
}

void KernelSpec::validate() const {
    if (kind == KernelKind::polynomial && degree < 1) throw ConfigError("svm.degree must be >= 1");
    if (kind == KernelKind::gaussian && !(gamma > 0.0)) throw ConfigError("svm.gamma must be > 0");
}

double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DataError("kernel_eval: length mismatch");
    if (spec.kind == KernelKind::polynomial) {
        double dot = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
        const double base = dot + spec.coef0;
        double out = 1.0;
        for (int d = 0; d < spec.degree; ++d) out *= base;
        return out;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        sq += d * d;
    }
    return std::exp(-spec.gamma * sq);
}

void SvmConfig::validate() const {
    if (!(C > 0.0)) throw ConfigError("svm.C must be > 0");
    if (!(tol > 0.0)) throw ConfigError("svm.tol must be > 0");
    kernel.validate();
}

namespace {

constexpr double kTau = 1e-12;

/// Rows of Q computed on first use.
class QRowCache {
public:
    QRowCache(const Matrix& x, std::span<const int> y, const KernelSpec& kernel)
        : x_(x), y_(y), kernel_(kernel), rows_(x.rows()), diag_(x.rows()) {
        for (std::size_t i = 0; i < x.rows(); ++i) diag_[i] = kernel_eval(kernel, x.row(i), x.row(i));
    }

    const std::vector<double>& row(std::size_t i) {
        auto& r = rows_[i];
        if (r.empty()) {
            r.resize(x_.rows());
            for (std::size_t j = 0; j < x_.rows(); ++j) {
                r[j] = static_cast<double>(y_[i] * y_[j]) * kernel_eval(kernel_, x_.row(i), x_.row(j));
            }
        }
        return r;
    }

    double diag(std::size_t i) const { return diag_[i]; }

private:
    const Matrix& x_;
    std::span<const int> y_;
    KernelSpec kernel_;
    std::vector<std::vector<double>> rows_;
    std::vector<double> diag_;
};

void check_training_input(const Matrix& x, std::span<const int> y) {
    if (x.rows() == 0) throw DataError("svm_train: no training rows");
    if (x.rows() != y.size()) throw DataError("svm_train: row/label count mismatch");
    for (int v : y) {
        if (v != 1 && v != -1) throw DataError("svm_train: labels must be -1 or +1");
    }
}

}  // namespace

DualSolution solve_dual(const Matrix& x, std::span<const int> y, const SvmConfig& config) {
    config.validate();
    check_training_input(x, y);
    const std::size_t n = x.rows();
    const double C = config.C;

    QRowCache q(x, y, config.kernel);
    DualSolution sol;
    sol.alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - sum(a)

    auto in_up = [&](std::size_t t) { return y[t] > 0 ? sol.alpha[t] < C : sol.alpha[t] > 0.0; };
    auto in_low = [&](std::size_t t) { return y[t] > 0 ? sol.alpha[t] > 0.0 : sol.alpha[t] < C; };

    double m_up = 0.0;
    double m_low = 0.0;
    while (true) {
        std::size_t i = n;
        std::size_t j = n;
        m_up = -std::numeric_limits<double>::infinity();
        m_low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > m_up) {
                m_up = v;
                i = t;
            }
            if (in_low(t) && v < m_low) {
                m_low = v;
                j = t;
            }
        }
        if (i == n || j == n || m_up - m_low <= config.tol) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= config.max_iter) break;
        ++sol.iterations;

        const auto& qi = q.row(i);
        const auto& qj = q.row(j);
        const double old_i = sol.alpha[i];
        const double old_j = sol.alpha[j];
        double& ai = sol.alpha[i];
        double& aj = sol.alpha[j];

        if (y[i] != y[j]) {
            double quad = q.diag(i) + q.diag(j) + 2.0 * qi[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > C) {
                    ai = C;
                    aj = C - diff;
                }
            } else if (aj > C) {
                aj = C;
                ai = C + diff;
            }
        } else {
            double quad = q.diag(i) + q.diag(j) - 2.0 * qi[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C) {
                if (ai > C) {
                    ai = C;
                    aj = sum - C;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > C) {
                if (aj > C) {
                    aj = C;
                    ai = sum - C;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }

        const double di = ai - old_i;
        const double dj = aj - old_j;
        for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * di + qj[t] * dj;
    }
    sol.violation = m_up - m_low;

    // b from free vectors when available, otherwise the midpoint of the feasible range.
    double free_sum = 0.0;
    std::size_t n_free = 0;
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        const bool at_upper = sol.alpha[t] >= C;
        const bool at_lower = sol.alpha[t] <= 0.0;
        if (at_upper) {
            if (y[t] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (at_lower) {
            if (y[t] == +1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            free_sum += yg;
        }
    }
    const double rho = n_free > 0 ? free_sum / static_cast<double>(n_free) : 0.5 * (ub + lb);
    sol.bias = -rho;

    double objective = 0.0;
    for (std::size_t t = 0; t < n; ++t) objective += sol.alpha[t] * (1.0 - grad[t]);
    sol.objective = 0.5 * objective;
    return sol;
}

SvmModel svm_train(const Matrix& x, std::span<const int> y, const SvmConfig& config) {
    config.validate();
    check_training_input(x, y);

    SvmModel model;
    model.kernel = config.kernel;
    model.C = config.C;
    model.n_features = x.cols();
    model.support_vectors = Matrix(0, x.cols());

    const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
    const bool has_neg = std::find(y.begin(), y.end(), -1) != y.end();
    if (!has_pos || !has_neg) {
        model.constant_probability = has_pos ? kProbabilityCeil : kProbabilityFloor;
        model.bias = has_pos ? 1.0 : -1.0;
        return model;
    }

    const auto sol = solve_dual(x, y, config);
    for (std::size_t t = 0; t < x.rows(); ++t) {
        if (sol.alpha[t] > 0.0) {
            model.support_vectors.push_row(x.row(t));
            model.dual_coefs.push_back(sol.alpha[t] * y[t]);
        }
    }
    model.bias = sol.bias;
    model.iterations = sol.iterations;
    model.converged = sol.converged;
    return model;
}

double svm_decision(const SvmModel& model, std::span<const double> x) {
    if (x.size() != model.n_features) {
        throw DataError("svm_decision: expected " + std::to_string(model.n_features) + " features, got " +
                        std::to_string(x.size()));
    }
    double f = model.bias;
    for (std::size_t s = 0; s < model.dual_coefs.size(); ++s) {
        f += model.dual_coefs[s] * kernel_eval(model.kernel, model.support_vectors.row(s), x);
    }
    return f;
}

PlattParams fit_platt(std::span<const double> decisions, std::span<const int> y) {
    const std::size_t n = decisions.size();
    double prior1 = 0.0;
    double prior0 = 0.0;
    for (int v : y) (v > 0 ? prior1 : prior0) += 1.0;

    constexpr int kMaxIter = 100;
    constexpr double kMinStep = 1e-10;
    constexpr double kSigma = 1e-12;
    constexpr double kEps = 1e-5;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);

    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] > 0 ? hi : lo;

    auto nll = [&](double A, double B) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = decisions[i] * A + B;
            f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return f;
    };

    double A = 0.0;
    double B = std::log((prior0 + 1.0) / (prior1 + 1.0));
    double fval = nll(A, B);
    for (int iter = 0; iter < kMaxIter; ++iter) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = decisions[i] * A + B;
            double p, q;
            if (z >= 0.0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d2 = p * q;
            h11 += decisions[i] * decisions[i] * d2;
            h22 += d2;
            h21 += decisions[i] * d2;
            const double d1 = t[i] - p;
            g1 += decisions[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;
        const double det = h11 * h22 - h21 * h21;
        const double dA = -(h22 * g1 - h21 * g2) / det;
        const double dB = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * dA + g2 * dB;

        double step = 1.0;
        bool improved = false;
        while (step >= kMinStep) {
            const double nA = A + step * dA;
            const double nB = B + step * dB;
            const double nf = nll(nA, nB);
            if (nf < fval + 1e-4 * step * gd) {
                A = nA;
                B = nB;
                fval = nf;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if (!improved) break;  // stalled line search keeps the best point found
    }
    if (!(A < 0.0) || !std::isfinite(A) || !std::isfinite(B)) return PlattParams{-1.0, 0.0, true};
    return PlattParams{A, B, false};
}

SvmModel calibrate(SvmModel model, const Matrix& x, std::span<const int> y) {
    if (x.rows() != y.size()) throw DataError("calibrate: row/label count mismatch");
    if (model.constant_probability) {
        model.calibration = PlattParams{-1.0, 0.0, false};
        return model;
    }
    std::vector<double> decisions(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) decisions[i] = svm_decision(model, x.row(i));
    model.calibration = fit_platt(decisions, y);
    return model;
}

double predict_proba(const SvmModel& model, std::span<const double> x) {
    if (!model.calibration) throw RuntimeFailure("predict_proba: model is not calibrated");
    if (model.constant_probability) {
        if (x.size() != model.n_features) throw DataError("predict_proba: width mismatch");
        return *model.constant_probability;
    }
    const double f = svm_decision(model, x);
    const double z = model.calibration->A * f + model.calibration->B;
    const double p = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    return std::clamp(p, kProbabilityFloor, kProbabilityCeil);
}

}  // namespace miml
