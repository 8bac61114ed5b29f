#pragma once

#include "dtrti/rng.hpp"

#include <span>
#include <vector>

namespace dtrti::statdist {

// ---------------------------------------------------------------------------
// Distribution functions and quantiles
// ---------------------------------------------------------------------------

/// Standard normal CDF, accurate to ~1e-15.
double normal_cdf(double x);

/// Standard normal quantile (inverse of normal_cdf).
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double beta_cdf(double x, double a, double b);

/// Inverse of beta_cdf in x.
double beta_quantile(double p, double a, double b);

double t_cdf(double x, int df);
double t_quantile(double p, int df);

double chisq_cdf(double x, int df);
double chisq_quantile(double p, int df);

/// CDF of the noncentral chi-square (Poisson mixture of central chi-squares).
double noncentral_chisq_cdf(double x, int df, double ncp);
double noncentral_chisq_quantile(double p, int df, double ncp);

// ---------------------------------------------------------------------------
// Kernel density estimation
// ---------------------------------------------------------------------------

/// Gaussian-kernel density estimate. `weights` is empty for an unweighted
/// model, otherwise the same length as `points`, normalized to sum 1.
struct KdeModel {
    std::vector<double> points;
    std::vector<double> weights;
    double bandwidth = 0.0;
};

/// Fits a KDE with the rule-of-thumb bandwidth
/// h = 0.9 * min(SD, IQR/1.34) * n^(-1/5), with n replaced by the Kish
/// effective size when weights are given. Throws DegenerateSampleError when
/// the sample is smaller than 2 or has zero spread.
KdeModel kde_fit(std::span<const double> sample, std::span<const double> weights = {});

/// Density of the fitted mixture at x; strictly positive for finite x.
double kde_eval(const KdeModel& model, double x);

/// One draw: a (weighted-)random data point plus bandwidth * N(0,1).
double kde_sample(const KdeModel& model, Rng& rng);

/// CDF of the fitted mixture at x (mixture of normal CDFs).
double kde_cdf(const KdeModel& model, double x);

// ---------------------------------------------------------------------------
// Weighted samples and quantiles
// ---------------------------------------------------------------------------

struct WeightedSample {
    std::vector<double> values;
    std::vector<double> weights;

    /// Kish effective sample size (sum w)^2 / sum w^2.
    double effective_size() const;

    /// Throws on length mismatch or nonpositive/nonfinite weights.
    void validate() const;
};

/// Quantile by linear interpolation of the weighted empirical distribution:
/// sorted values at cumulative-weight midpoints p_i = (c_i - w_i/2) / W,
/// clamped to the extreme values outside [p_1, p_n]. Reduces to the standard
/// interpolated (Hazen) quantile at equal weights.
double weighted_quantile(const WeightedSample& sample, double p);

/// Hazen-interpolated quantile of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double p);

} // namespace dtrti::statdist
