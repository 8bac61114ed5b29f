#pragma once

#include "dtrti/intervals.hpp"
#include "dtrti/regress.hpp"
#include "dtrti/rng.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dtrti::dtr {

/// One patient record: binary s1, a1, a2; continuous s2; outcome y.
struct Trajectory {
    int s1 = 0;
    int a1 = 0;
    double s2 = 0.0;
    int a2 = 0;
    double y = 0.0;
};

/// Trajectory plus the derived quantities the pipelines work with.
struct AnnotatedTrajectory {
    Trajectory base;
    int m = 0;            // match indicator
    double y_tilde = 0.0; // pseudooutcome
    double y_check = 0.0; // residual-borrowed outcome; equals y when m == 1
    double w = 1.0;       // importance weight, meaningful only when m == 1
};

/// Second-stage fit of y on {1, s1, a1, s1*a1, s2, s2^2, a2, a2*a1, a2*s2}.
struct Stage2Fit {
    std::array<double, 6> beta2{}; // main-effect terms
    std::array<double, 3> psi2{};  // a2, a2*a1, a2*s2 terms
    regress::RegressionFit regression;
};

/// First-stage saturated fit on {1, s1, a1, s1*a1}.
struct Stage1Fit {
    std::array<double, 2> beta1{};
    std::array<double, 2> psi1{};
    regress::RegressionFit regression;
};

Stage2Fit fit_stage2(std::span<const Trajectory> data);

/// Estimated optimal second-stage action: 1 iff the fitted treatment contrast
/// psi20 + psi21*a1 + psi22*s2 is strictly positive (ties go to 0).
int policy2(const Stage2Fit& fit, int a1, double s2);

/// Fitted main-effect part plus the positive part of the contrast; equals the
/// max over a2 of the fitted second-stage mean.
double pseudooutcome(const Stage2Fit& fit, const Trajectory& t);

/// 1 iff the observed a2 equals the policy2 action.
int match_indicator(const Stage2Fit& fit, const Trajectory& t);

/// Fits stage 2 and fills m, y_tilde; y_check starts at y and w at 1.
std::vector<AnnotatedTrajectory> annotate(std::span<const Trajectory> data, const Stage2Fit& fit);

struct PipelineOptions {
    std::optional<double> weight_cap; // optional ceiling on raw density ratios
};

/// Density-ratio importance weights for the matched trajectories of one
/// (s1,a1) cell, normalized to mean 1 within the cell. Throws
/// InsufficientCellError when the cell lacks 2 matched / 2 total points or
/// has zero spread.
void importance_weights_cell(std::vector<AnnotatedTrajectory>& data, int s1, int a1,
                             const PipelineOptions& opts = {});

/// All four cells.
void importance_weights(std::vector<AnnotatedTrajectory>& data, const PipelineOptions& opts = {});

/// Residual borrowing for one (s1,a1) cell: kernel density estimate of the
/// matched residuals y - y_tilde, then y_check = y_tilde + draw for every
/// unmatched trajectory. Matched trajectories keep y_check = y.
void residual_borrow_cell(std::vector<AnnotatedTrajectory>& data, int s1, int a1, Rng& rng);

/// All four cells, in (s1,a1) = (0,0),(0,1),(1,0),(1,1) order.
void residual_borrow(std::vector<AnnotatedTrajectory>& data, Rng& rng);

enum class Stage1Outcome { y_on_matched, y_check_all, y_tilde_all };

/// Saturated first-stage regression of the chosen outcome. With
/// use_importance_weights, the selected rows' w become WLS weights.
Stage1Fit fit_stage1(std::span<const AnnotatedTrajectory> data, Stage1Outcome outcome,
                     bool use_importance_weights = false);

enum class TiMethod { UTI, UNPTI, WTI, WNPTI, RBQTI, RBQNPTI, NAIVE };

const char* method_name(TiMethod m);
std::optional<TiMethod> parse_method(const std::string& name);

enum class CellStatus { ok, insufficient_cell, singular_design };

const char* status_name(CellStatus s);

struct CellTi {
    CellStatus status = CellStatus::ok;
    std::optional<intervals::IntervalEstimate> interval;
    std::string message;
};

using CellKey = std::pair<int, int>; // (s1, a1)
using CellTiMap = std::map<CellKey, CellTi>;

/// Array of the four cells in deterministic order.
std::array<CellKey, 4> all_cells();

/// Full per-method pipeline: stage-2 fit, annotation, method-specific
/// subset/weight/borrow step, then one first-stage tolerance interval per
/// (s1,a1) cell. Failures are reported per cell in the returned statuses.
CellTiMap build_stage1_tis(std::span<const Trajectory> data, TiMethod method,
                           const intervals::IntervalSpec& spec, Rng& rng,
                           const PipelineOptions& opts = {});

} // namespace dtrti::dtr
