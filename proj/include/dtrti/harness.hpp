#pragma once

#include "dtrti/dtr.hpp"
#include "dtrti/intervals.hpp"
#include "dtrti/simgen.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dtrti::harness {

/// One point of the generative-model grid.
struct GridPoint {
    double xi_phi = 1.0;
    double xi_psi = 1.0;
    double sigma2_eps = 10.0;
    simgen::Ydist ydist = simgen::Ydist::normal;

    simgen::GenerativeParams params() const;
};

struct ExperimentConfig {
    std::vector<double> xi_phi_grid{1.0};
    std::vector<double> xi_psi_grid{1.0};
    std::vector<double> sigma2_eps_grid{10.0};
    std::vector<simgen::Ydist> ydist_grid{simgen::Ydist::normal};
    int n = 1000;
    int reps = 200;
    long oracle_n_mc = 100000;
    intervals::IntervalSpec spec{0.05, 0.9};
    std::vector<dtr::TiMethod> methods{dtr::TiMethod::UTI,   dtr::TiMethod::UNPTI,
                                       dtr::TiMethod::WTI,   dtr::TiMethod::WNPTI,
                                       dtr::TiMethod::RBQTI, dtr::TiMethod::RBQNPTI};
    std::uint64_t master_seed = 0;
    std::optional<double> weight_cap;

    void validate() const;
    std::vector<GridPoint> grid_points() const;
};

/// Parses/serializes the JSON config format; unknown keys are rejected by
/// name. `require_seed` demands master_seed in the file.
ExperimentConfig config_from_json_text(const std::string& text, bool require_seed = true);
std::string config_to_json_text(const ExperimentConfig& config);

struct CellResult {
    std::string method;
    int s1 = 0, a1 = 0;
    GridPoint point;
    double coverage = 0.0;
    double coverage_ci_lo = 0.0;
    double coverage_ci_hi = 1.0;
    double mean_rel_width = 0.0;
    int reps_effective = 0;
    int failures = 0;
};

/// Exact (Clopper-Pearson) binomial confidence interval at level 1 - alpha.
std::pair<double, double> clopper_pearson(int successes, int trials, double alpha = 0.05);

/// Per-replicate outcome for one (method, cell): whether the pipeline
/// produced an interval, its oracle content, and its width relative to the
/// optimal width.
struct ReplicateOutcome {
    bool ok = false;
    double content = 0.0;
    double rel_width = 0.0;
};

/// Coverage / mean relative width aggregation used by every experiment type.
CellResult aggregate_outcomes(const std::vector<ReplicateOutcome>& outcomes, double gamma);

/// Runs all replicates for one grid point; returns methods x 4 cells results
/// ordered by (method, s1, a1). Deterministic for a fixed master seed,
/// independent of the thread count.
std::vector<CellResult> run_cell(const ExperimentConfig& config, const GridPoint& point,
                                 std::size_t grid_index, int threads = 1);

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const GridPoint&)>;

/// Cartesian product of the grid; results in grid x method x cell order.
std::vector<CellResult> run_grid(const ExperimentConfig& config, int threads = 1,
                                 const ProgressFn& progress = {});

/// CSV with the exact schema
/// method,s1,a1,xi_phi,xi_psi,sigma2_eps,ydist,gamma,alpha,coverage,
/// coverage_ci_lo,coverage_ci_hi,mean_rel_width,reps_effective,failures
/// preceded by a '#' comment echoing the resolved config.
void write_grid_csv(std::ostream& os, const ExperimentConfig& config,
                    const std::vector<CellResult>& results);

// ---------------------------------------------------------------------------
// Two-component mixture experiment
// ---------------------------------------------------------------------------

struct MixtureExperimentConfig {
    std::vector<double> mu1_grid{0.0};
    std::vector<double> sigma1_grid{1.0};
    int n_matched = 500;
    int reps = 200;
    intervals::IntervalSpec spec{0.05, 0.9};
    std::uint64_t seed = 0;

    void validate() const;
};

struct MixtureResult {
    std::string method;
    double mu1 = 0.0;
    double sigma1 = 1.0;
    double coverage = 0.0;
    double coverage_ci_lo = 0.0;
    double coverage_ci_hi = 1.0;
    double mean_rel_width = 0.0;
    int reps = 0;
};

std::vector<MixtureResult> run_mixture(const MixtureExperimentConfig& config, int threads = 1);

/// Schema: method,mu1,sigma1,coverage,coverage_ci_lo,coverage_ci_hi,mean_rel_width,reps
void write_mixture_csv(std::ostream& os, const MixtureExperimentConfig& config,
                       const std::vector<MixtureResult>& results);

// ---------------------------------------------------------------------------
// Policy-value bias map
// ---------------------------------------------------------------------------

struct BiasConfig {
    std::vector<double> xi_phi_grid{1.0};
    std::vector<double> xi_psi_grid{0.0, 1.0};
    std::vector<double> sigma2_eps_grid{1.0};
    int n = 1000;
    int reps = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BiasResult {
    double xi_phi = 0.0;
    double xi_psi = 0.0;
    double sigma2_eps = 0.0;
    int n = 0;
    int reps = 0;
    double mean_bias = 0.0;
    double se_bias = 0.0;
};

std::vector<BiasResult> run_bias_map(const BiasConfig& config, int threads = 1);

/// Schema: xi_phi,xi_psi,sigma2_eps,n,reps,mean_bias,se_bias
void write_bias_csv(std::ostream& os, const BiasConfig& config,
                    const std::vector<BiasResult>& results);

} // namespace dtrti::harness
