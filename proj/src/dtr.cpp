#include "dtrti/dtr.hpp"

#include "dtrti/errors.hpp"
#include "dtrti/statdist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dtrti::dtr {

namespace {

regress::DesignMatrix stage2_design(std::span<const Trajectory> data) {
    regress::DesignMatrix design;
    design.column_labels = {"1", "s1", "a1", "s1:a1", "s2", "s2^2", "a2", "a2:a1", "a2:s2"};
    design.rows.resize(static_cast<Eigen::Index>(data.size()), 9);
    for (Eigen::Index i = 0; i < design.rows.rows(); ++i) {
        const Trajectory& t = data[static_cast<std::size_t>(i)];
        design.rows(i, 0) = 1.0;
        design.rows(i, 1) = t.s1;
        design.rows(i, 2) = t.a1;
        design.rows(i, 3) = t.s1 * t.a1;
        design.rows(i, 4) = t.s2;
        design.rows(i, 5) = t.s2 * t.s2;
        design.rows(i, 6) = t.a2;
        design.rows(i, 7) = t.a2 * t.a1;
        design.rows(i, 8) = t.a2 * t.s2;
    }
    return design;
}

Eigen::VectorXd stage1_row(int s1, int a1) {
    Eigen::VectorXd x(4);
    x << 1.0, s1, a1, s1 * a1;
    return x;
}

void check_binary(int v, const char* name) {
    if (v != 0 && v != 1) {
        throw DomainError(std::string("trajectory: ") + name + " must be 0 or 1");
    }
}

void validate_trajectories(std::span<const Trajectory> data) {
    for (const Trajectory& t : data) {
        check_binary(t.s1, "s1");
        check_binary(t.a1, "a1");
        check_binary(t.a2, "a2");
        if (!std::isfinite(t.s2) || !std::isfinite(t.y)) {
            throw DomainError("trajectory: s2 and y must be finite");
        }
    }
}

} // namespace

std::array<CellKey, 4> all_cells() {
    return {CellKey{0, 0}, CellKey{0, 1}, CellKey{1, 0}, CellKey{1, 1}};
}

Stage2Fit fit_stage2(std::span<const Trajectory> data) {
    validate_trajectories(data);
    bool seen[2][2] = {{false, false}, {false, false}};
    for (const Trajectory& t : data) seen[t.a1][t.a2] = true;
    for (int a1 = 0; a1 < 2; ++a1) {
        for (int a2 = 0; a2 < 2; ++a2) {
            if (!seen[a1][a2]) {
                throw MissingPatternError("fit_stage2: no trajectory with (a1=" + std::to_string(a1) +
                                          ", a2=" + std::to_string(a2) + ")");
            }
        }
    }
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = data[static_cast<std::size_t>(i)].y;

    Stage2Fit fit;
    fit.regression = regress::fit_ols(stage2_design(data), y);
    for (int j = 0; j < 6; ++j) fit.beta2[static_cast<std::size_t>(j)] = fit.regression.coefficients(j);
    for (int j = 0; j < 3; ++j) fit.psi2[static_cast<std::size_t>(j)] = fit.regression.coefficients(6 + j);
    return fit;
}

int policy2(const Stage2Fit& fit, int a1, double s2) {
    const double contrast = fit.psi2[0] + fit.psi2[1] * a1 + fit.psi2[2] * s2;
    return contrast > 0.0 ? 1 : 0;
}

double pseudooutcome(const Stage2Fit& fit, const Trajectory& t) {
    const double main_part = fit.beta2[0] + fit.beta2[1] * t.s1 + fit.beta2[2] * t.a1 +
                             fit.beta2[3] * t.s1 * t.a1 + fit.beta2[4] * t.s2 +
                             fit.beta2[5] * t.s2 * t.s2;
    const double contrast = fit.psi2[0] + fit.psi2[1] * t.a1 + fit.psi2[2] * t.s2;
    return main_part + std::max(0.0, contrast);
}

int match_indicator(const Stage2Fit& fit, const Trajectory& t) {
    return t.a2 == policy2(fit, t.a1, t.s2) ? 1 : 0;
}

std::vector<AnnotatedTrajectory> annotate(std::span<const Trajectory> data, const Stage2Fit& fit) {
    std::vector<AnnotatedTrajectory> out;
    out.reserve(data.size());
    for (const Trajectory& t : data) {
        AnnotatedTrajectory a;
        a.base = t;
        a.m = match_indicator(fit, t);
        a.y_tilde = pseudooutcome(fit, t);
        a.y_check = t.y;
        a.w = 1.0;
        out.push_back(a);
    }
    return out;
}

void importance_weights_cell(std::vector<AnnotatedTrajectory>& data, int s1, int a1,
                             const PipelineOptions& opts) {
    std::vector<double> all_s2, matched_s2;
    std::vector<std::size_t> matched_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const AnnotatedTrajectory& t = data[i];
        if (t.base.s1 != s1 || t.base.a1 != a1) continue;
        all_s2.push_back(t.base.s2);
        if (t.m == 1) {
            matched_s2.push_back(t.base.s2);
            matched_idx.push_back(i);
        }
    }
    if (all_s2.size() < 2 || matched_s2.size() < 2) {
        throw InsufficientCellError(s1, a1, "importance weights need >= 2 matched and >= 2 total trajectories");
    }
    statdist::KdeModel marginal, selected;
    try {
        marginal = statdist::kde_fit(all_s2);
        selected = statdist::kde_fit(matched_s2);
    } catch (const DegenerateSampleError& e) {
        throw InsufficientCellError(s1, a1, std::string("degenerate s2 sample: ") + e.what());
    }

    std::vector<double> w(matched_idx.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < matched_idx.size(); ++k) {
        const double s2 = data[matched_idx[k]].base.s2;
        double ratio = statdist::kde_eval(marginal, s2) / statdist::kde_eval(selected, s2);
        if (opts.weight_cap && ratio > *opts.weight_cap) ratio = *opts.weight_cap;
        w[k] = ratio;
        sum += ratio;
    }
    const double mean = sum / static_cast<double>(w.size());
    for (std::size_t k = 0; k < matched_idx.size(); ++k) {
        data[matched_idx[k]].w = w[k] / mean;
    }
}

void importance_weights(std::vector<AnnotatedTrajectory>& data, const PipelineOptions& opts) {
    for (const auto& [s1, a1] : all_cells()) {
        importance_weights_cell(data, s1, a1, opts);
    }
}

void residual_borrow_cell(std::vector<AnnotatedTrajectory>& data, int s1, int a1, Rng& rng) {
    std::vector<double> residuals;
    for (const AnnotatedTrajectory& t : data) {
        if (t.base.s1 == s1 && t.base.a1 == a1 && t.m == 1) {
            residuals.push_back(t.base.y - t.y_tilde);
        }
    }
    if (residuals.size() < 2) {
        throw InsufficientCellError(s1, a1, "residual borrowing needs >= 2 matched trajectories");
    }
    statdist::KdeModel kde;
    try {
        kde = statdist::kde_fit(residuals);
    } catch (const DegenerateSampleError& e) {
        throw InsufficientCellError(s1, a1, std::string("degenerate residual sample: ") + e.what());
    }
    for (AnnotatedTrajectory& t : data) {
        if (t.base.s1 != s1 || t.base.a1 != a1) continue;
        if (t.m == 1) {
            t.y_check = t.base.y;
        } else {
            t.y_check = t.y_tilde + statdist::kde_sample(kde, rng);
        }
    }
}

void residual_borrow(std::vector<AnnotatedTrajectory>& data, Rng& rng) {
    for (const auto& [s1, a1] : all_cells()) {
        residual_borrow_cell(data, s1, a1, rng);
    }
}

Stage1Fit fit_stage1(std::span<const AnnotatedTrajectory> data, Stage1Outcome outcome,
                     bool use_importance_weights) {
    std::vector<const AnnotatedTrajectory*> rows;
    rows.reserve(data.size());
    for (const AnnotatedTrajectory& t : data) {
        if (outcome == Stage1Outcome::y_on_matched && t.m != 1) continue;
        rows.push_back(&t);
    }

    bool seen[2][2] = {{false, false}, {false, false}};
    for (const auto* t : rows) seen[t->base.s1][t->base.a1] = true;
    for (const auto& [s1, a1] : all_cells()) {
        if (!seen[s1][a1]) {
            throw MissingPatternError("fit_stage1: no selected trajectory with (s1=" +
                                      std::to_string(s1) + ", a1=" + std::to_string(a1) + ")");
        }
    }

    regress::DesignMatrix design;
    design.column_labels = {"1", "s1", "a1", "s1:a1"};
    design.rows.resize(static_cast<Eigen::Index>(rows.size()), 4);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    Eigen::VectorXd w(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const AnnotatedTrajectory& t = *rows[static_cast<std::size_t>(i)];
        design.rows.row(i) = stage1_row(t.base.s1, t.base.a1).transpose();
        switch (outcome) {
        case Stage1Outcome::y_on_matched: y(i) = t.base.y; break;
        case Stage1Outcome::y_check_all: y(i) = t.y_check; break;
        case Stage1Outcome::y_tilde_all: y(i) = t.y_tilde; break;
        }
        w(i) = t.w;
    }

    Stage1Fit fit;
    fit.regression = use_importance_weights ? regress::fit_wls(design, y, w)
                                            : regress::fit_ols(design, y);
    fit.beta1 = {fit.regression.coefficients(0), fit.regression.coefficients(1)};
    fit.psi1 = {fit.regression.coefficients(2), fit.regression.coefficients(3)};
    return fit;
}

const char* method_name(TiMethod m) {
    switch (m) {
    case TiMethod::UTI: return "UTI";
    case TiMethod::UNPTI: return "UNPTI";
    case TiMethod::WTI: return "WTI";
    case TiMethod::WNPTI: return "WNPTI";
    case TiMethod::RBQTI: return "RBQTI";
    case TiMethod::RBQNPTI: return "RBQNPTI";
    case TiMethod::NAIVE: return "NAIVE";
    }
    return "?";
}

std::optional<TiMethod> parse_method(const std::string& name) {
    for (TiMethod m : {TiMethod::UTI, TiMethod::UNPTI, TiMethod::WTI, TiMethod::WNPTI,
                       TiMethod::RBQTI, TiMethod::RBQNPTI, TiMethod::NAIVE}) {
        if (name == method_name(m)) return m;
    }
    return std::nullopt;
}

const char* status_name(CellStatus s) {
    switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::insufficient_cell: return "insufficient_cell";
    case CellStatus::singular_design: return "singular_design";
    }
    return "?";
}

namespace {

CellTiMap all_cells_failed(CellStatus status, const std::string& message) {
    CellTiMap out;
    for (const auto& cell : all_cells()) {
        out[cell] = CellTi{status, std::nullopt, message};
    }
    return out;
}

bool weights_are_unit(const std::vector<AnnotatedTrajectory>& data) {
    for (const AnnotatedTrajectory& t : data) {
        if (t.m == 1 && std::fabs(t.w - 1.0) > 1e-12) return false;
    }
    return true;
}

/// Intervals for all four cells from one pooled regression fit.
CellTiMap regression_tis(const regress::RegressionFit& fit, const intervals::IntervalSpec& spec,
                         intervals::VarianceMode mode, const char* tag) {
    CellTiMap out;
    for (const auto& [s1, a1] : all_cells()) {
        auto est = intervals::ti_regression(fit, stage1_row(s1, a1), spec, mode);
        est.method_tag = tag;
        out[{s1, a1}] = CellTi{CellStatus::ok, est, ""};
    }
    return out;
}

} // namespace

CellTiMap build_stage1_tis(std::span<const Trajectory> data, TiMethod method,
                           const intervals::IntervalSpec& spec, Rng& rng,
                           const PipelineOptions& opts) {
    spec.validate();

    Stage2Fit fit2;
    try {
        fit2 = fit_stage2(data);
    } catch (const MissingPatternError& e) {
        return all_cells_failed(CellStatus::insufficient_cell, e.what());
    } catch (const SingularDesignError& e) {
        return all_cells_failed(CellStatus::singular_design, e.what());
    }
    std::vector<AnnotatedTrajectory> ann = annotate(data, fit2);

    const char* tag = method_name(method);
    try {
        switch (method) {
        case TiMethod::UTI: {
            const Stage1Fit fit1 = fit_stage1(ann, Stage1Outcome::y_on_matched);
            return regression_tis(fit1.regression, spec, intervals::VarianceMode::classical, tag);
        }
        case TiMethod::WTI: {
            importance_weights(ann, opts);
            // No distribution shift to correct when every computed weight is
            // exactly 1; the unweighted pipeline applies unchanged.
            if (weights_are_unit(ann)) {
                const Stage1Fit fit1 = fit_stage1(ann, Stage1Outcome::y_on_matched);
                return regression_tis(fit1.regression, spec, intervals::VarianceMode::classical, tag);
            }
            const Stage1Fit fit1 = fit_stage1(ann, Stage1Outcome::y_on_matched, true);
            return regression_tis(fit1.regression, spec, intervals::VarianceMode::sandwich, tag);
        }
        case TiMethod::RBQTI: {
            residual_borrow(ann, rng);
            const Stage1Fit fit1 = fit_stage1(ann, Stage1Outcome::y_check_all);
            return regression_tis(fit1.regression, spec, intervals::VarianceMode::classical, tag);
        }
        case TiMethod::NAIVE: {
            const Stage1Fit fit1 = fit_stage1(ann, Stage1Outcome::y_tilde_all);
            return regression_tis(fit1.regression, spec, intervals::VarianceMode::classical, tag);
        }
        case TiMethod::UNPTI:
        case TiMethod::WNPTI:
        case TiMethod::RBQNPTI:
            break; // handled per cell below
        }
    } catch (const MissingPatternError& e) {
        return all_cells_failed(CellStatus::insufficient_cell, e.what());
    } catch (const InsufficientCellError& e) {
        return all_cells_failed(CellStatus::insufficient_cell, e.what());
    } catch (const InsufficientSampleError& e) {
        return all_cells_failed(CellStatus::insufficient_cell, e.what());
    } catch (const SingularDesignError& e) {
        return all_cells_failed(CellStatus::singular_design, e.what());
    }

    CellTiMap out;
    for (const auto& [s1, a1] : all_cells()) {
        try {
            std::optional<intervals::IntervalEstimate> est;
            switch (method) {
            case TiMethod::UNPTI: {
                std::vector<double> ys;
                for (const AnnotatedTrajectory& t : ann) {
                    if (t.base.s1 == s1 && t.base.a1 == a1 && t.m == 1) ys.push_back(t.base.y);
                }
                est = intervals::ti_wilks(ys, spec);
                break;
            }
            case TiMethod::WNPTI: {
                importance_weights_cell(ann, s1, a1, opts);
                statdist::WeightedSample ws;
                for (const AnnotatedTrajectory& t : ann) {
                    if (t.base.s1 == s1 && t.base.a1 == a1 && t.m == 1) {
                        ws.values.push_back(t.base.y);
                        ws.weights.push_back(t.w);
                    }
                }
                est = intervals::ti_wilks_weighted(ws, spec);
                break;
            }
            case TiMethod::RBQNPTI: {
                residual_borrow_cell(ann, s1, a1, rng);
                std::vector<double> ys;
                for (const AnnotatedTrajectory& t : ann) {
                    if (t.base.s1 == s1 && t.base.a1 == a1) ys.push_back(t.y_check);
                }
                est = intervals::ti_wilks(ys, spec);
                break;
            }
            default:
                break;
            }
            est->method_tag = tag;
            out[{s1, a1}] = CellTi{CellStatus::ok, est, ""};
        } catch (const InsufficientCellError& e) {
            out[{s1, a1}] = CellTi{CellStatus::insufficient_cell, std::nullopt, e.what()};
        } catch (const InsufficientSampleError& e) {
            out[{s1, a1}] = CellTi{CellStatus::insufficient_cell, std::nullopt, e.what()};
        }
    }
    return out;
}

} // namespace dtrti::dtr
