#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace dtrti::regress {

/// One row per observation, one column per working-model term.
struct DesignMatrix {
    Eigen::MatrixXd rows;
    std::vector<std::string> column_labels;

    Eigen::Index n() const { return rows.rows(); }
    Eigen::Index p() const { return rows.cols(); }
};

/// Immutable result of an (optionally weighted) least-squares fit.
struct RegressionFit {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;       // observed - fitted, on the original scale
    double residual_sd = 0.0;        // sqrt(sum w_i e_i^2 / (n - p))
    Eigen::MatrixXd xtx_inverse;     // (X' W X)^-1, W = I when unweighted
    std::optional<Eigen::VectorXd> weights;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::MatrixXd design;          // retained for the sandwich estimator

    bool weighted() const { return weights.has_value(); }
    double fitted(const Eigen::VectorXd& x0) const { return x0.dot(coefficients); }
};

/// Ordinary least squares via column-pivoted QR. Throws SingularDesignError
/// when the design's condition estimate exceeds 1e10, MissingPatternError-free
/// (pattern checks live in the callers that know the model).
RegressionFit fit_ols(const DesignMatrix& design, const Eigen::VectorXd& y);

/// Weighted least squares minimizing sum w_i (y_i - x_i' b)^2.
RegressionFit fit_wls(const DesignMatrix& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

/// Classical standard error of the mean prediction at x0:
/// residual_sd * sqrt(x0' (X'WX)^-1 x0).
double prediction_se(const RegressionFit& fit, const Eigen::VectorXd& x0);

/// Huber-White standard error with weights:
/// sqrt(x0' (X'WX)^-1 X'W diag(e^2) WX (X'WX)^-1 x0).
/// Requires a weighted fit.
double sandwich_prediction_se(const RegressionFit& fit, const Eigen::VectorXd& x0);

} // namespace dtrti::regress
