#include "dtrti/regress.hpp"

#include "dtrti/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dtrti::regress {

namespace {

constexpr double kConditionLimit = 1e10;

void check_inputs(const DesignMatrix& design, const Eigen::VectorXd& y) {
    if (design.n() != y.size()) {
        throw DomainError("regression: design and outcome lengths differ");
    }
    if (design.n() <= design.p()) {
        throw SingularDesignError("regression: need n > p (n=" + std::to_string(design.n()) +
                                  ", p=" + std::to_string(design.p()) + ")");
    }
    if (!design.rows.allFinite() || !y.allFinite()) {
        throw DomainError("regression: inputs must be finite");
    }
}

/// Core solver on a possibly row-scaled system. `sqrt_w` is empty for OLS.
RegressionFit solve(const DesignMatrix& design, const Eigen::VectorXd& y, const Eigen::VectorXd* w) {
    check_inputs(design, y);
    const Eigen::Index n = design.n();
    const Eigen::Index p = design.p();

    Eigen::MatrixXd xs = design.rows;
    Eigen::VectorXd ys = y;
    if (w != nullptr) {
        if (w->size() != n) throw DomainError("regression: weights length must be n");
        for (Eigen::Index i = 0; i < n; ++i) {
            const double wi = (*w)(i);
            if (!(wi > 0.0) || !std::isfinite(wi)) {
                throw DomainError("regression: weights must be finite and > 0");
            }
            const double s = std::sqrt(wi);
            xs.row(i) *= s;
            ys(i) *= s;
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    double diag_max = 0.0, diag_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < p; ++j) {
        const double d = std::fabs(r(j, j));
        diag_max = std::max(diag_max, d);
        diag_min = std::min(diag_min, d);
    }
    if (!(diag_min > 0.0) || diag_max / diag_min > kConditionLimit) {
        throw SingularDesignError("regression: design is rank deficient or ill conditioned");
    }

    RegressionFit fit;
    fit.coefficients = qr.solve(ys);
    fit.residuals = y - design.rows * fit.coefficients;
    fit.n = n;
    fit.p = p;
    fit.design = design.rows;
    if (w != nullptr) fit.weights = *w;

    double wss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double wi = (w != nullptr) ? (*w)(i) : 1.0;
        wss += wi * fit.residuals(i) * fit.residuals(i);
    }
    fit.residual_sd = std::sqrt(wss / static_cast<double>(n - p));

    // (X'WX)^-1 = P (R'R)^-1 P' from the pivoted factorization Xs P = Q R.
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd inner = r_inv * r_inv.transpose();
    const auto perm = qr.colsPermutation();
    Eigen::MatrixXd xtx_inv = perm * inner * perm.transpose();
    fit.xtx_inverse = 0.5 * (xtx_inv + xtx_inv.transpose());
    return fit;
}

} // namespace

RegressionFit fit_ols(const DesignMatrix& design, const Eigen::VectorXd& y) {
    return solve(design, y, nullptr);
}

RegressionFit fit_wls(const DesignMatrix& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    return solve(design, y, &w);
}

double prediction_se(const RegressionFit& fit, const Eigen::VectorXd& x0) {
    if (x0.size() != fit.p) throw DomainError("prediction_se: x0 length must be p");
    const double q = x0.dot(fit.xtx_inverse * x0);
    return fit.residual_sd * std::sqrt(std::max(q, 0.0));
}

double sandwich_prediction_se(const RegressionFit& fit, const Eigen::VectorXd& x0) {
    if (!fit.weighted()) {
        throw ContractError("sandwich_prediction_se: fit has no weights");
    }
    if (x0.size() != fit.p) throw DomainError("sandwich_prediction_se: x0 length must be p");
    const Eigen::VectorXd& w = *fit.weights;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(fit.p, fit.p);
    for (Eigen::Index i = 0; i < fit.n; ++i) {
        const double s = w(i) * fit.residuals(i);
        meat.noalias() += (s * s) * fit.design.row(i).transpose() * fit.design.row(i);
    }
    const Eigen::MatrixXd v = fit.xtx_inverse * meat * fit.xtx_inverse;
    const double q = x0.dot(v * x0);
    return std::sqrt(std::max(q, 0.0));
}

} // namespace dtrti::regress
