#include "dtrti/intervals.hpp"

#include "dtrti/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace dtrti::intervals {

namespace {

struct MeanSd {
    double mean;
    double sd;
    std::size_t n;
};

MeanSd mean_sd(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 2) throw InsufficientSampleError("interval: need at least 2 observations");
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(n - 1)), n};
}

double ti_factor(double gamma, double alpha, double df, double ncp) {
    const double num = statdist::noncentral_chisq_quantile(gamma, 1, ncp);
    const double den = statdist::chisq_quantile(alpha, static_cast<int>(df));
    return std::sqrt(df * num / den);
}

} // namespace

void IntervalSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("IntervalSpec: alpha must lie in (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("IntervalSpec: gamma must lie in (0,1)");
}

IntervalEstimate pi_normal(std::span<const double> sample, const IntervalSpec& spec) {
    spec.validate();
    const MeanSd ms = mean_sd(sample);
    double half = 0.0;
    if (ms.sd > 0.0) {
        const double t = statdist::t_quantile(1.0 - 0.5 * spec.alpha, static_cast<int>(ms.n) - 1);
        half = t * ms.sd * std::sqrt(1.0 + 1.0 / static_cast<double>(ms.n));
    }
    return {ms.mean - half, ms.mean + half, IntervalKind::prediction, spec, "PI"};
}

IntervalEstimate pi_regression(const regress::RegressionFit& fit, const Eigen::VectorXd& x0,
                               const IntervalSpec& spec) {
    spec.validate();
    if (fit.weighted()) {
        throw ContractError("pi_regression: defined for unweighted fits only");
    }
    const double yhat = fit.fitted(x0);
    double half = 0.0;
    if (fit.residual_sd > 0.0) {
        const double lev = x0.dot(fit.xtx_inverse * x0);
        const double t =
            statdist::t_quantile(1.0 - 0.5 * spec.alpha, static_cast<int>(fit.n - fit.p));
        half = t * fit.residual_sd * std::sqrt(1.0 + std::max(lev, 0.0));
    }
    return {yhat - half, yhat + half, IntervalKind::prediction, spec, "PI"};
}

IntervalEstimate ti_normal(std::span<const double> sample, const IntervalSpec& spec) {
    spec.validate();
    const MeanSd ms = mean_sd(sample);
    double half = 0.0;
    if (ms.sd > 0.0) {
        const double n = static_cast<double>(ms.n);
        half = ms.sd * ti_factor(spec.gamma, spec.alpha, n - 1.0, 1.0 / n);
    }
    return {ms.mean - half, ms.mean + half, IntervalKind::tolerance, spec, "TI"};
}

IntervalEstimate ti_regression(const regress::RegressionFit& fit, const Eigen::VectorXd& x0,
                               const IntervalSpec& spec, VarianceMode mode) {
    spec.validate();
    if (mode == VarianceMode::sandwich && !fit.weighted()) {
        throw ContractError("ti_regression: sandwich mode requires a weighted fit");
    }
    const double yhat = fit.fitted(x0);
    double half = 0.0;
    if (fit.residual_sd > 0.0) {
        const double se = (mode == VarianceMode::classical) ? regress::prediction_se(fit, x0)
                                                            : regress::sandwich_prediction_se(fit, x0);
        // Wallis effective n enters only through the noncentrality 1/n*.
        const double ncp = (se * se) / (fit.residual_sd * fit.residual_sd);
        half = fit.residual_sd *
               ti_factor(spec.gamma, spec.alpha, static_cast<double>(fit.n - fit.p), ncp);
    }
    return {yhat - half, yhat + half, IntervalKind::tolerance, spec, "TI"};
}

int wilks_ranks(int n, const IntervalSpec& spec) {
    spec.validate();
    if (n < 2) throw InsufficientSampleError("wilks_ranks: need at least 2 observations");
    int best = 0;
    for (int r = 1; 2 * r <= n; ++r) {
        const double cover = 1.0 - statdist::beta_cdf(spec.gamma, n - 2 * r + 1, 2 * r);
        if (cover > 1.0 - spec.alpha) {
            best = r;
        } else {
            break; // coverage decreases with depth
        }
    }
    if (best == 0) {
        throw InsufficientSampleError("wilks_ranks: no depth meets content " +
                                      std::to_string(spec.gamma) + " at confidence " +
                                      std::to_string(1.0 - spec.alpha) + " with n = " +
                                      std::to_string(n));
    }
    return best;
}

IntervalEstimate ti_wilks(std::span<const double> sample, const IntervalSpec& spec) {
    const int n = static_cast<int>(sample.size());
    const int r = wilks_ranks(n, spec);
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    return {sorted[static_cast<std::size_t>(r - 1)], sorted[static_cast<std::size_t>(n - r)],
            IntervalKind::tolerance, spec, "NPTI"};
}

IntervalEstimate ti_wilks_weighted(const statdist::WeightedSample& sample, const IntervalSpec& spec) {
    sample.validate();
    const double n_eff = sample.effective_size();
    const int n_round = static_cast<int>(std::llround(n_eff));
    const int r = wilks_ranks(n_round, spec);
    const double depth = (static_cast<double>(r) - 0.5) / n_eff;
    const double lower = statdist::weighted_quantile(sample, depth);
    const double upper = statdist::weighted_quantile(sample, 1.0 - depth);
    return {lower, upper, IntervalKind::tolerance, spec, "NPTI"};
}

} // namespace dtrti::intervals
