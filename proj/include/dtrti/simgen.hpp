#pragma once

#include "dtrti/dtr.hpp"
#include "dtrti/intervals.hpp"
#include "dtrti/rng.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dtrti::simgen {

enum class Ydist { normal, uniform, t3 };

const char* ydist_name(Ydist d);
std::optional<Ydist> parse_ydist(const std::string& name);

/// Two-stage generative family. Defaults are the base model; xi_phi scales
/// the covariate effect on exploration, xi_psi the second-stage treatment
/// effect, and ydist the error shape at fixed variance sigma2_eps.
struct GenerativeParams {
    std::array<double, 2> phi1{0.3, -0.5};
    std::array<double, 4> delta1{0.0, 0.5, -0.75, 0.25};
    std::array<double, 6> phi2{0.0, 0.5, 0.1, -1.0, -0.1, 0.0};
    std::array<double, 6> beta2{3.0, 0.0, 0.1, -0.5, -0.5, 0.0};
    std::array<double, 3> psi2{1.0, 0.25, 0.5};
    double xi_phi = 1.0;
    double xi_psi = 1.0;
    double sigma2_eps = 10.0;
    Ydist ydist = Ydist::normal;
    double s2_variance = 2.0; // test hook; the model's value is 2

    void validate() const;
};

double expit(double x);

/// Conditional mean of Y: main-effect part plus a2 * xi_psi * contrast.
double mu_y(const GenerativeParams& params, int s1, double s2, int a1, int a2);

/// One outcome draw from the ydist shape with mean mu and variance sigma2_eps.
double draw_y(const GenerativeParams& params, double mu, Rng& rng);

dtr::Trajectory draw_trajectory(const GenerativeParams& params, Rng& rng);

/// Optimal second-stage action under the true contrast (ties to 0).
int true_policy2(const GenerativeParams& params, int a1, double s2);

/// Outcomes under the estimated policy: draw S2 from the true model, act by
/// policy2(fit), draw Y from the true conditional.
std::vector<double> draw_outcomes_under_policy(const GenerativeParams& params,
                                               const dtr::Stage2Fit& fit, int s1, int a1,
                                               long n_mc, Rng& rng);

/// Monte Carlo probability that Y under the estimated policy lands inside the
/// interval, conditional on (s1, a1).
double oracle_content(const GenerativeParams& params, const dtr::Stage2Fit& fit, int s1, int a1,
                      const intervals::IntervalEstimate& interval, long n_mc, Rng& rng);

/// Width between the gamma/2 and 1-gamma/2 Monte Carlo quantiles of Y under
/// the estimated policy.
double oracle_optimal_width(const GenerativeParams& params, const dtr::Stage2Fit& fit, int s1,
                            int a1, double gamma, long n_mc, Rng& rng);

/// Mean over trajectories of a2hat*(fitted contrast) - a2hat*xi_psi*(true
/// contrast), where a2hat is the estimated optimal action.
double policy_value_bias(const GenerativeParams& params, const dtr::Stage2Fit& fit,
                         std::span<const dtr::AnnotatedTrajectory> data);

/// Two-component mixture: M ~ Bernoulli(p_match), Y | M=m ~ N(mu_m, sigma_m).
struct MixtureParams {
    double mu0 = 0.0;
    double sigma0 = 1.0;
    double mu1 = 0.0;
    double sigma1 = 1.0;
    double p_match = 0.5;

    void validate() const;
};

std::pair<int, double> draw_mixture(const MixtureParams& params, Rng& rng);

/// Exact importance weights f_Y(y) / f_{Y|M=1}(y).
std::vector<double> mixture_analytic_weights(const MixtureParams& params,
                                             std::span<const double> y_values);

double mixture_cdf(const MixtureParams& params, double y);
double mixture_quantile(const MixtureParams& params, double p);

} // namespace dtrti::simgen
