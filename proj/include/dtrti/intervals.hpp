#pragma once

#include "dtrti/regress.hpp"
#include "dtrti/statdist.hpp"

#include <span>
#include <string>

namespace dtrti::intervals {

/// Confidence complement alpha and, for tolerance intervals, content gamma.
struct IntervalSpec {
    double alpha = 0.05;
    double gamma = 0.9;

    void validate() const;
};

enum class IntervalKind { prediction, tolerance };

struct IntervalEstimate {
    double lower = 0.0;
    double upper = 0.0;
    IntervalKind kind = IntervalKind::tolerance;
    IntervalSpec spec;
    std::string method_tag;

    double width() const { return upper - lower; }
};

enum class VarianceMode { classical, sandwich };

/// Normal-theory prediction interval:
/// mean +- t(1-alpha/2; n-1) * sd * sqrt(1 + 1/n).
IntervalEstimate pi_normal(std::span<const double> sample, const IntervalSpec& spec);

/// Regression prediction interval at x0 (unweighted fits only):
/// yhat +- t(1-alpha/2; n-p) * residual_sd * sqrt(1 + x0'(X'X)^-1 x0).
IntervalEstimate pi_regression(const regress::RegressionFit& fit, const Eigen::VectorXd& x0,
                               const IntervalSpec& spec);

/// Normal-theory tolerance interval:
/// mean -+ sd * sqrt((n-1) * ncx2(gamma; 1, 1/n) / chisq(alpha; n-1)).
IntervalEstimate ti_normal(std::span<const double> sample, const IntervalSpec& spec);

/// Regression tolerance interval at x0 with Wallis effective n:
/// n* = residual_sd^2 / se(yhat)^2, noncentrality 1/n*,
/// yhat -+ residual_sd * sqrt((n-p) * ncx2(gamma; 1, 1/n*) / chisq(alpha; n-p)).
IntervalEstimate ti_regression(const regress::RegressionFit& fit, const Eigen::VectorXd& x0,
                               const IntervalSpec& spec, VarianceMode mode);

/// Largest symmetric depth r >= 1 with
/// 1 - F_Beta(gamma; n - 2r + 1, 2r) > 1 - alpha.
/// Throws InsufficientSampleError when no depth qualifies.
int wilks_ranks(int n, const IntervalSpec& spec);

/// Distribution-free tolerance interval (r-th smallest, r-th largest).
IntervalEstimate ti_wilks(std::span<const double> sample, const IntervalSpec& spec);

/// Weighted variant: depth from the rounded Kish effective size, bounds by
/// interpolated weighted quantiles at (r - 0.5)/n_eff and 1 - (r - 0.5)/n_eff.
IntervalEstimate ti_wilks_weighted(const statdist::WeightedSample& sample, const IntervalSpec& spec);

} // namespace dtrti::intervals
