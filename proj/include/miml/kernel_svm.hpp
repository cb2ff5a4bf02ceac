#pragma once

#include "miml/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace miml {

enum class KernelKind { polynomial, gaussian };

KernelKind parse_kernel_kind(std::string_view name);
std::string_view kernel_name(KernelKind kind);

/// Polynomial K(u,v) = (u.v + coef0)^degree, gaussian K(u,v) = exp(-gamma ||u-v||^2).
struct KernelSpec {
    KernelKind kind = KernelKind::polynomial;
    int degree = 3;
    double coef0 = 0.0;
    double gamma = 1.0;

    void validate() const;
    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v);

struct SvmConfig {
    double C = 1e-3;
    KernelSpec kernel;
    double tol = 1e-3;
    std::size_t max_iter = 100000;

    void validate() const;
};

/// Raw dual solution of the soft-margin problem
///   max  sum(alpha) - 1/2 alpha' Q alpha,  Q_ij = y_i y_j K(x_i, x_j)
///   s.t. 0 <= alpha_i <= C,  sum(y_i alpha_i) = 0.
struct DualSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    double objective = 0.0;
    /// Maximal KKT violation m(alpha) - M(alpha) at exit.
    double violation = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// SMO with maximal-violating-pair working set selection and lazily cached
/// kernel rows. Stops once the violation drops to `tol` or after `max_iter`
/// pair updates. Labels must be -1/+1 and both classes present.
DualSolution solve_dual(const Matrix& x, std::span<const int> y, const SvmConfig& config);

/// Sigmoid P(y=1|f) = 1 / (1 + exp(A f + B)).
struct PlattParams {
    double A = -1.0;
    double B = 0.0;
    bool fallback = false;  // true when the fit failed and the plain logistic link is used
};

inline constexpr double kProbabilityFloor = 0.01;
inline constexpr double kProbabilityCeil = 0.99;

struct SvmModel {
    Matrix support_vectors;
    std::vector<double> dual_coefs;  // alpha_i * y_i per support vector
    double bias = 0.0;
    KernelSpec kernel;
    double C = 1.0;
    std::size_t n_features = 0;
    /// Set for single-class training data: predict_proba returns it everywhere.
    std::optional<double> constant_probability;
    std::optional<PlattParams> calibration;

    std::size_t iterations = 0;
    bool converged = true;
};

/// Trains on rows of `x` with labels in {-1,+1}. A single-class label vector
/// yields a constant model (no support vectors, probability 0.99 or 0.01).
SvmModel svm_train(const Matrix& x, std::span<const int> y, const SvmConfig& config);

/// f(x) = sum_i coef_i K(sv_i, x) + b.
double svm_decision(const SvmModel& model, std::span<const double> x);

/// Fits Platt's sigmoid to the model's decision values on (x, y) by Newton's
/// method with backtracking, using Platt's smoothed targets. A failed fit, or one
/// with A >= 0, falls back to A = -1, B = 0 and sets `fallback`.
SvmModel calibrate(SvmModel model, const Matrix& x, std::span<const int> y);

PlattParams fit_platt(std::span<const double> decisions, std::span<const int> y);

/// Calibrated probability clipped to [0.01, 0.99].
double predict_proba(const SvmModel& model, std::span<const double> x);

}  // namespace miml
