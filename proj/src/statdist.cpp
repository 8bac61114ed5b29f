#include "dtrti/statdist.hpp"

#include "dtrti/errors.hpp"
#include "dtrti/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace dtrti::statdist {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require(bool ok, const char* msg) {
    if (!ok) throw DomainError(msg);
}

/// Bisection inverse of a monotone CDF on [lo, hi]. The bracket must contain
/// the solution; tolerance is relative to the bracket magnitude.
double invert_monotone(const std::function<double(double)>& cdf, double p, double lo, double hi) {
    for (int iter = 0; iter < 400; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
        const double scale = std::max({1.0, std::fabs(lo), std::fabs(hi)});
        if (hi - lo <= 1e-13 * scale) break;
    }
    return 0.5 * (lo + hi);
}

/// Continued fraction for the incomplete beta (Lentz), NR-style.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 20000;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge (a=" + std::to_string(a) +
                       ", b=" + std::to_string(b) + ", x=" + std::to_string(x) + ")");
}

/// Series for the regularized lower incomplete gamma, valid for x < a + 1.
double gamma_p_series(double a, double x) {
    constexpr int kMaxIter = 100000;
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericError("incomplete gamma series did not converge");
}

/// Continued fraction for the regularized upper incomplete gamma, x >= a + 1.
double gamma_q_cf(double a, double x) {
    constexpr int kMaxIter = 100000;
    constexpr double kFpMin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-17) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericError("incomplete gamma continued fraction did not converge");
}

} // namespace

double normal_cdf(double x) {
    require(std::isfinite(x), "normal_cdf: x must be finite");
    return 0.5 * std::erfc(-x / kSqrt2);
}

double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0,1)");
    return invert_monotone([](double x) { return normal_cdf(x); }, p, -40.0, 40.0);
}

double gamma_p(double a, double x) {
    require(a > 0.0 && x >= 0.0 && std::isfinite(x), "gamma_p: need a > 0 and finite x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double beta_cdf(double x, double a, double b) {
    require(a > 0.0 && b > 0.0, "beta_cdf: shape parameters must be positive");
    require(x >= 0.0 && x <= 1.0, "beta_cdf: x must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_bt =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * betacf(a, b, x) / a;
    }
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double beta_quantile(double p, double a, double b) {
    require(p > 0.0 && p < 1.0, "beta_quantile: p must lie in (0,1)");
    return invert_monotone([&](double x) { return beta_cdf(x, a, b); }, p, 0.0, 1.0);
}

double t_cdf(double x, int df) {
    require(df >= 1, "t_cdf: df must be >= 1");
    require(std::isfinite(x), "t_cdf: x must be finite");
    if (x == 0.0) return 0.5;
    const double v = static_cast<double>(df);
    const double tail = 0.5 * beta_cdf(v / (v + x * x), 0.5 * v, 0.5);
    return x > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, int df) {
    require(df >= 1, "t_quantile: df must be >= 1");
    require(p > 0.0 && p < 1.0, "t_quantile: p must lie in (0,1)");
    if (p == 0.5) return 0.0;
    // Symmetric search bracket; expand for heavy tails / extreme p.
    double hi = 50.0;
    while (t_cdf(hi, df) < p && hi < 1e300) hi *= 8.0;
    double lo = -50.0;
    while (t_cdf(lo, df) > p && lo > -1e300) lo *= 8.0;
    return invert_monotone([&](double x) { return t_cdf(x, df); }, p, lo, hi);
}

double chisq_cdf(double x, int df) {
    require(df >= 1, "chisq_cdf: df must be >= 1");
    require(x >= 0.0 && std::isfinite(x), "chisq_cdf: x must be finite and >= 0");
    return gamma_p(0.5 * df, 0.5 * x);
}

double chisq_quantile(double p, int df) {
    require(df >= 1, "chisq_quantile: df must be >= 1");
    require(p > 0.0 && p < 1.0, "chisq_quantile: p must lie in (0,1)");
    double hi = df + 10.0 * std::sqrt(2.0 * df) + 10.0;
    while (chisq_cdf(hi, df) < p) hi *= 2.0;
    return invert_monotone([&](double x) { return chisq_cdf(x, df); }, p, 0.0, hi);
}

double noncentral_chisq_cdf(double x, int df, double ncp) {
    require(df >= 1, "noncentral_chisq_cdf: df must be >= 1");
    require(ncp >= 0.0 && std::isfinite(ncp), "noncentral_chisq_cdf: ncp must be finite and >= 0");
    require(x >= 0.0 && std::isfinite(x), "noncentral_chisq_cdf: x must be finite and >= 0");
    if (ncp == 0.0) return chisq_cdf(x, df);

    // Poisson(ncp/2) mixture of central chi-square CDFs. Terms are summed
    // until the remaining Poisson mass bounds the truncation error below
    // 1e-14; each omitted term is at most that mass times a CDF value <= 1.
    constexpr int kMaxTerms = 100000;
    const double lambda = 0.5 * ncp;
    double weight = std::exp(-lambda);
    double cum_weight = weight;
    double sum = weight * chisq_cdf(x, df);
    for (int j = 1; j <= kMaxTerms; ++j) {
        weight *= lambda / j;
        cum_weight += weight;
        sum += weight * chisq_cdf(x, df + 2 * j);
        if (1.0 - cum_weight < 1e-14) return sum;
    }
    throw NumericError("noncentral chi-square series exceeded " + std::to_string(kMaxTerms) + " terms");
}

double noncentral_chisq_quantile(double p, int df, double ncp) {
    require(df >= 1, "noncentral_chisq_quantile: df must be >= 1");
    require(p > 0.0 && p < 1.0, "noncentral_chisq_quantile: p must lie in (0,1)");
    require(ncp >= 0.0 && std::isfinite(ncp), "noncentral_chisq_quantile: ncp must be finite and >= 0");
    double hi = df + ncp + 10.0 * std::sqrt(2.0 * (df + 2.0 * ncp)) + 10.0;
    while (noncentral_chisq_cdf(hi, df, ncp) < p) hi *= 2.0;
    return invert_monotone([&](double x) { return noncentral_chisq_cdf(x, df, ncp); }, p, 0.0, hi);
}

// ---------------------------------------------------------------------------
// KDE
// ---------------------------------------------------------------------------

KdeModel kde_fit(std::span<const double> sample, std::span<const double> weights) {
    const std::size_t n = sample.size();
    if (n < 2) throw DegenerateSampleError("kde_fit: need at least 2 points");
    for (double v : sample) {
        if (!std::isfinite(v)) throw DomainError("kde_fit: sample values must be finite");
    }
    const bool weighted = !weights.empty();
    if (weighted && weights.size() != n) {
        throw DomainError("kde_fit: weights length must match sample length");
    }

    double n_for_bw = static_cast<double>(n);
    std::vector<double> normalized;
    if (weighted) {
        double sum_w = 0.0, sum_w2 = 0.0;
        for (double w : weights) {
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw DomainError("kde_fit: weights must be finite and > 0");
            }
            sum_w += w;
            sum_w2 += w * w;
        }
        n_for_bw = sum_w * sum_w / sum_w2;
        normalized.assign(weights.begin(), weights.end());
        for (double& w : normalized) w /= sum_w;
    }

    // Unweighted spread statistics; only the effective n reflects the weights.
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1));
    if (sd == 0.0) throw DegenerateSampleError("kde_fit: sample has zero spread");

    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    const double bandwidth = 0.9 * spread * std::pow(n_for_bw, -0.2);

    KdeModel model;
    model.points.assign(sample.begin(), sample.end());
    model.weights = std::move(normalized);
    model.bandwidth = bandwidth;
    return model;
}

double kde_eval(const KdeModel& model, double x) {
    const double inv_h = 1.0 / model.bandwidth;
    const double* w = model.weights.empty() ? nullptr : model.weights.data();
    double sum = kernels::gauss_kernel_sum(model.points.data(), w, model.points.size(), x, inv_h);
    if (w == nullptr) sum /= static_cast<double>(model.points.size());
    return sum * inv_h * kInvSqrt2Pi;
}

double kde_sample(const KdeModel& model, Rng& rng) {
    const std::size_t n = model.points.size();
    double center;
    if (model.weights.empty()) {
        const double u = rng.uniform01();
        std::size_t idx = static_cast<std::size_t>(u * static_cast<double>(n));
        if (idx >= n) idx = n - 1;
        center = model.points[idx];
    } else {
        const double u = rng.uniform01(); // weights sum to 1
        double cum = 0.0;
        std::size_t idx = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            cum += model.weights[i];
            if (u <= cum) {
                idx = i;
                break;
            }
        }
        center = model.points[idx];
    }
    return center + model.bandwidth * rng.normal();
}

double kde_cdf(const KdeModel& model, double x) {
    const std::size_t n = model.points.size();
    const double inv_h = 1.0 / model.bandwidth;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double term = normal_cdf((x - model.points[i]) * inv_h);
        sum += model.weights.empty() ? term : model.weights[i] * term;
    }
    if (model.weights.empty()) sum /= static_cast<double>(n);
    return sum;
}

// ---------------------------------------------------------------------------
// Weighted quantiles
// ---------------------------------------------------------------------------

double WeightedSample::effective_size() const {
    double sum_w = 0.0, sum_w2 = 0.0;
    for (double w : weights) {
        sum_w += w;
        sum_w2 += w * w;
    }
    return sum_w * sum_w / sum_w2;
}

void WeightedSample::validate() const {
    if (values.empty()) throw InsufficientSampleError("weighted sample is empty");
    if (values.size() != weights.size()) {
        throw DomainError("weighted sample: values and weights lengths differ");
    }
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw DomainError("weighted sample: weights must be finite and > 0");
        }
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw DomainError("weighted sample: values must be finite");
    }
}

double weighted_quantile(const WeightedSample& sample, double p) {
    sample.validate();
    require(p >= 0.0 && p <= 1.0, "weighted_quantile: p must lie in [0,1]");

    const std::size_t n = sample.values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sample.values[a] < sample.values[b]; });

    double total = 0.0;
    for (double w : sample.weights) total += w;

    // Midpoint positions p_i = (c_i - w_i/2) / W of the sorted values.
    std::vector<double> pos(n), val(n);
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = sample.weights[order[i]];
        cum += w;
        pos[i] = (cum - 0.5 * w) / total;
        val[i] = sample.values[order[i]];
    }

    if (p <= pos.front()) return val.front();
    if (p >= pos.back()) return val.back();
    const auto it = std::lower_bound(pos.begin(), pos.end(), p);
    const std::size_t j = static_cast<std::size_t>(it - pos.begin());
    const double p0 = pos[j - 1], p1 = pos[j];
    const double t = (p - p0) / (p1 - p0);
    return val[j - 1] + t * (val[j] - val[j - 1]);
}

double sorted_quantile(std::span<const double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) throw InsufficientSampleError("sorted_quantile: empty sample");
    if (n == 1) return sorted[0];
    const double h = p * static_cast<double>(n) - 0.5; // Hazen positions (i - 0.5)/n
    if (h <= 0.0) return sorted.front();
    if (h >= static_cast<double>(n - 1)) return sorted.back();
    const std::size_t j = static_cast<std::size_t>(h);
    const double t = h - static_cast<double>(j);
    return sorted[j] + t * (sorted[j + 1] - sorted[j]);
}

} // namespace dtrti::statdist
