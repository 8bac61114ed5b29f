#include "dtrti/simgen.hpp"

#include "dtrti/errors.hpp"
#include "dtrti/kernels.hpp"
#include "dtrti/statdist.hpp"

#include <algorithm>
#include <cmath>

namespace dtrti::simgen {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

double normal_density(double y, double mu, double sigma) {
    const double z = (y - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * 2.5066282746310005024);
}

} // namespace

const char* ydist_name(Ydist d) {
    switch (d) {
    case Ydist::normal: return "normal";
    case Ydist::uniform: return "uniform";
    case Ydist::t3: return "t3";
    }
    return "?";
}

std::optional<Ydist> parse_ydist(const std::string& name) {
    for (Ydist d : {Ydist::normal, Ydist::uniform, Ydist::t3}) {
        if (name == ydist_name(d)) return d;
    }
    return std::nullopt;
}

void GenerativeParams::validate() const {
    if (!(xi_phi >= 0.0 && xi_phi <= 1.0)) throw DomainError("xi_phi must lie in [0,1]");
    if (!(xi_psi >= 0.0 && xi_psi <= 1.0)) throw DomainError("xi_psi must lie in [0,1]");
    if (!(sigma2_eps > 0.0)) throw DomainError("sigma2_eps must be > 0");
    if (!(s2_variance > 0.0)) throw DomainError("s2_variance must be > 0");
}

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double mu_y(const GenerativeParams& p, int s1, double s2, int a1, int a2) {
    const double main_part = p.beta2[0] + p.beta2[1] * s1 + p.beta2[2] * a1 +
                             p.beta2[3] * s1 * a1 + p.beta2[4] * s2 + p.beta2[5] * s2 * s2;
    const double contrast = p.psi2[0] + p.psi2[1] * a1 + p.psi2[2] * s2;
    return main_part + a2 * p.xi_psi * contrast;
}

double draw_y(const GenerativeParams& p, double mu, Rng& rng) {
    const double sigma = std::sqrt(p.sigma2_eps);
    switch (p.ydist) {
    case Ydist::normal:
        return mu + sigma * rng.normal();
    case Ydist::uniform:
        // Half-width sigma*sqrt(3) keeps the variance at sigma2_eps.
        return mu + sigma * kSqrt3 * (2.0 * rng.uniform01() - 1.0);
    case Ydist::t3:
        // t with 3 df has variance 3; scale by sigma/sqrt(3).
        return mu + sigma / kSqrt3 * rng.student_t3();
    }
    return mu;
}

dtr::Trajectory draw_trajectory(const GenerativeParams& p, Rng& rng) {
    dtr::Trajectory t;
    t.s1 = rng.bernoulli(0.5) ? 1 : 0;
    t.a1 = rng.bernoulli(expit(p.xi_phi * (p.phi1[0] + p.phi1[1] * t.s1))) ? 1 : 0;
    const double s2_mean =
        p.delta1[0] + p.delta1[1] * t.s1 + p.delta1[2] * t.a1 + p.delta1[3] * t.s1 * t.a1;
    t.s2 = s2_mean + std::sqrt(p.s2_variance) * rng.normal();
    const double a2_lin = p.phi2[0] + p.phi2[1] * t.s1 + p.phi2[2] * t.a1 + p.phi2[3] * t.s2 +
                          p.phi2[4] * t.a1 * t.s2 + p.phi2[5] * t.s2 * t.s2;
    t.a2 = rng.bernoulli(expit(p.xi_phi * a2_lin)) ? 1 : 0;
    t.y = draw_y(p, mu_y(p, t.s1, t.s2, t.a1, t.a2), rng);
    return t;
}

int true_policy2(const GenerativeParams& p, int a1, double s2) {
    const double contrast = p.xi_psi * (p.psi2[0] + p.psi2[1] * a1 + p.psi2[2] * s2);
    return contrast > 0.0 ? 1 : 0;
}

std::vector<double> draw_outcomes_under_policy(const GenerativeParams& p, const dtr::Stage2Fit& fit,
                                               int s1, int a1, long n_mc, Rng& rng) {
    std::vector<double> out(static_cast<std::size_t>(n_mc));
    const double s2_mean =
        p.delta1[0] + p.delta1[1] * s1 + p.delta1[2] * a1 + p.delta1[3] * s1 * a1;
    const double s2_sd = std::sqrt(p.s2_variance);
    for (double& y : out) {
        const double s2 = s2_mean + s2_sd * rng.normal();
        const int a2 = dtr::policy2(fit, a1, s2);
        y = draw_y(p, mu_y(p, s1, s2, a1, a2), rng);
    }
    return out;
}

double oracle_content(const GenerativeParams& p, const dtr::Stage2Fit& fit, int s1, int a1,
                      const intervals::IntervalEstimate& interval, long n_mc, Rng& rng) {
    const std::vector<double> ys = draw_outcomes_under_policy(p, fit, s1, a1, n_mc, rng);
    const std::size_t hits =
        kernels::count_in_range(ys.data(), ys.size(), interval.lower, interval.upper);
    return static_cast<double>(hits) / static_cast<double>(n_mc);
}

double oracle_optimal_width(const GenerativeParams& p, const dtr::Stage2Fit& fit, int s1, int a1,
                            double gamma, long n_mc, Rng& rng) {
    std::vector<double> ys = draw_outcomes_under_policy(p, fit, s1, a1, n_mc, rng);
    std::sort(ys.begin(), ys.end());
    return statdist::sorted_quantile(ys, 1.0 - 0.5 * (1.0 - gamma)) -
           statdist::sorted_quantile(ys, 0.5 * (1.0 - gamma));
}

double policy_value_bias(const GenerativeParams& p, const dtr::Stage2Fit& fit,
                         std::span<const dtr::AnnotatedTrajectory> data) {
    if (data.empty()) throw DomainError("policy_value_bias: empty data");
    double sum = 0.0;
    for (const dtr::AnnotatedTrajectory& t : data) {
        const int a2hat = dtr::policy2(fit, t.base.a1, t.base.s2);
        const double fitted_contrast =
            fit.psi2[0] + fit.psi2[1] * t.base.a1 + fit.psi2[2] * t.base.s2;
        const double true_contrast =
            p.xi_psi * (p.psi2[0] + p.psi2[1] * t.base.a1 + p.psi2[2] * t.base.s2);
        sum += a2hat * fitted_contrast - a2hat * true_contrast;
    }
    return sum / static_cast<double>(data.size());
}

void MixtureParams::validate() const {
    if (!(sigma0 > 0.0 && sigma1 > 0.0)) throw DomainError("mixture sigmas must be > 0");
    if (!(p_match > 0.0 && p_match < 1.0)) throw DomainError("p_match must lie in (0,1)");
}

std::pair<int, double> draw_mixture(const MixtureParams& params, Rng& rng) {
    const int m = rng.bernoulli(params.p_match) ? 1 : 0;
    const double mu = m == 1 ? params.mu1 : params.mu0;
    const double sigma = m == 1 ? params.sigma1 : params.sigma0;
    return {m, mu + sigma * rng.normal()};
}

std::vector<double> mixture_analytic_weights(const MixtureParams& params,
                                             std::span<const double> y_values) {
    params.validate();
    std::vector<double> w;
    w.reserve(y_values.size());
    for (double y : y_values) {
        const double f0 = normal_density(y, params.mu0, params.sigma0);
        const double f1 = normal_density(y, params.mu1, params.sigma1);
        const double marginal = (1.0 - params.p_match) * f0 + params.p_match * f1;
        w.push_back(marginal / f1);
    }
    return w;
}

double mixture_cdf(const MixtureParams& params, double y) {
    return (1.0 - params.p_match) * statdist::normal_cdf((y - params.mu0) / params.sigma0) +
           params.p_match * statdist::normal_cdf((y - params.mu1) / params.sigma1);
}

double mixture_quantile(const MixtureParams& params, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("mixture_quantile: p must lie in (0,1)");
    double lo = std::min(params.mu0 - 10.0 * params.sigma0, params.mu1 - 10.0 * params.sigma1);
    double hi = std::max(params.mu0 + 10.0 * params.sigma0, params.mu1 + 10.0 * params.sigma1);
    while (mixture_cdf(params, lo) > p) lo -= 10.0;
    while (mixture_cdf(params, hi) < p) hi += 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mixture_cdf(params, mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-12 * std::max(1.0, std::fabs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace dtrti::simgen
