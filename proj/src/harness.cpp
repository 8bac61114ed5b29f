#include "dtrti/harness.hpp"

#include "dtrti/csvio.hpp"
#include "dtrti/errors.hpp"
#include "dtrti/kernels.hpp"
#include "dtrti/rng.hpp"
#include "dtrti/statdist.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

namespace dtrti::harness {

namespace {

using nlohmann::json;

// Seed-path purpose tags; a full path is {purpose, point index, replicate, role}.
constexpr std::uint64_t kGridPurpose = 1;
constexpr std::uint64_t kMixturePurpose = 2;
constexpr std::uint64_t kBiasPurpose = 3;

void parallel_for(std::size_t total, int threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        threads = hc == 0 ? 1 : static_cast<int>(hc);
    }
    if (threads <= 1 || total <= 1) {
        for (std::size_t i = 0; i < total; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<std::size_t>(static_cast<std::size_t>(threads), total);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= total) return;
                body(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

std::vector<double> json_number_list(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty()) throw DomainError("config: '" + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw DomainError("config: '" + key + "' entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace

simgen::GenerativeParams GridPoint::params() const {
    simgen::GenerativeParams p;
    p.xi_phi = xi_phi;
    p.xi_psi = xi_psi;
    p.sigma2_eps = sigma2_eps;
    p.ydist = ydist;
    return p;
}

void ExperimentConfig::validate() const {
    spec.validate();
    if (reps < 1) throw DomainError("config: reps must be >= 1");
    if (n < 10) throw DomainError("config: n must be >= 10");
    if (oracle_n_mc < 10000) throw DomainError("config: oracle_n_mc must be >= 10000");
    if (xi_phi_grid.empty() || xi_psi_grid.empty() || sigma2_eps_grid.empty() || ydist_grid.empty()) {
        throw DomainError("config: grid lists must be non-empty");
    }
    for (double v : xi_phi_grid) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("config: xi_phi values must lie in [0,1]");
    }
    for (double v : xi_psi_grid) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("config: xi_psi values must lie in [0,1]");
    }
    for (double v : sigma2_eps_grid) {
        if (!(v > 0.0)) throw DomainError("config: sigma2_eps values must be > 0");
    }
    if (weight_cap && !(*weight_cap > 0.0)) throw DomainError("config: weight_cap must be > 0");
}

std::vector<GridPoint> ExperimentConfig::grid_points() const {
    std::vector<GridPoint> points;
    for (double xp : xi_phi_grid) {
        for (double xs : xi_psi_grid) {
            for (double s2 : sigma2_eps_grid) {
                for (simgen::Ydist yd : ydist_grid) {
                    points.push_back(GridPoint{xp, xs, s2, yd});
                }
            }
        }
    }
    return points;
}

ExperimentConfig config_from_json_text(const std::string& text, bool require_seed) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DomainError("config: top level must be an object");

    static const std::vector<std::string> known = {"master_seed", "n",       "reps",  "oracle_n_mc",
                                                   "alpha",       "gamma",   "methods", "grid",
                                                   "weight_cap"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw DomainError("config: unknown key '" + key + "'");
        }
    }

    ExperimentConfig c;
    if (j.contains("master_seed")) {
        if (!j["master_seed"].is_number_unsigned()) {
            throw DomainError("config: 'master_seed' must be a non-negative integer");
        }
        c.master_seed = j["master_seed"].get<std::uint64_t>();
    } else if (require_seed) {
        throw DomainError("config: missing required key 'master_seed'");
    }
    if (j.contains("n")) c.n = j["n"].get<int>();
    if (j.contains("reps")) c.reps = j["reps"].get<int>();
    if (j.contains("oracle_n_mc")) c.oracle_n_mc = j["oracle_n_mc"].get<long>();
    if (j.contains("alpha")) c.spec.alpha = j["alpha"].get<double>();
    if (j.contains("gamma")) c.spec.gamma = j["gamma"].get<double>();
    if (j.contains("weight_cap")) c.weight_cap = j["weight_cap"].get<double>();
    if (j.contains("methods")) {
        if (!j["methods"].is_array()) throw DomainError("config: 'methods' must be an array");
        c.methods.clear();
        for (const auto& m : j["methods"]) {
            const auto parsed = dtr::parse_method(m.get<std::string>());
            if (!parsed) throw DomainError("config: unknown method '" + m.get<std::string>() + "'");
            c.methods.push_back(*parsed);
        }
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (!g.is_object()) throw DomainError("config: 'grid' must be an object");
        static const std::vector<std::string> grid_known = {"xi_phi", "xi_psi", "sigma2_eps", "ydist"};
        for (const auto& [key, value] : g.items()) {
            if (std::find(grid_known.begin(), grid_known.end(), key) == grid_known.end()) {
                throw DomainError("config: unknown grid key '" + key + "'");
            }
        }
        if (g.contains("xi_phi")) c.xi_phi_grid = json_number_list(g["xi_phi"], "grid.xi_phi");
        if (g.contains("xi_psi")) c.xi_psi_grid = json_number_list(g["xi_psi"], "grid.xi_psi");
        if (g.contains("sigma2_eps")) c.sigma2_eps_grid = json_number_list(g["sigma2_eps"], "grid.sigma2_eps");
        if (g.contains("ydist")) {
            c.ydist_grid.clear();
            for (const auto& d : g["ydist"]) {
                const auto parsed = simgen::parse_ydist(d.get<std::string>());
                if (!parsed) throw DomainError("config: unknown ydist '" + d.get<std::string>() + "'");
                c.ydist_grid.push_back(*parsed);
            }
            if (c.ydist_grid.empty()) throw DomainError("config: 'grid.ydist' must be non-empty");
        }
    }
    c.validate();
    return c;
}

std::string config_to_json_text(const ExperimentConfig& config) {
    json j;
    j["master_seed"] = config.master_seed;
    j["n"] = config.n;
    j["reps"] = config.reps;
    j["oracle_n_mc"] = config.oracle_n_mc;
    j["alpha"] = config.spec.alpha;
    j["gamma"] = config.spec.gamma;
    json methods = json::array();
    for (dtr::TiMethod m : config.methods) methods.push_back(dtr::method_name(m));
    j["methods"] = methods;
    json ydists = json::array();
    for (simgen::Ydist d : config.ydist_grid) ydists.push_back(simgen::ydist_name(d));
    j["grid"] = {{"xi_phi", config.xi_phi_grid},
                 {"xi_psi", config.xi_psi_grid},
                 {"sigma2_eps", config.sigma2_eps_grid},
                 {"ydist", ydists}};
    if (config.weight_cap) j["weight_cap"] = *config.weight_cap;
    return j.dump();
}

std::pair<double, double> clopper_pearson(int successes, int trials, double alpha) {
    if (trials <= 0) return {0.0, 1.0};
    if (successes < 0 || successes > trials) throw DomainError("clopper_pearson: successes out of range");
    const double lo =
        successes == 0
            ? 0.0
            : statdist::beta_quantile(0.5 * alpha, successes, trials - successes + 1);
    const double hi =
        successes == trials
            ? 1.0
            : statdist::beta_quantile(1.0 - 0.5 * alpha, successes + 1, trials - successes);
    return {lo, hi};
}

CellResult aggregate_outcomes(const std::vector<ReplicateOutcome>& outcomes, double gamma) {
    CellResult r;
    int hits = 0;
    double width_sum = 0.0;
    for (const ReplicateOutcome& o : outcomes) {
        if (!o.ok) {
            ++r.failures;
            continue;
        }
        ++r.reps_effective;
        if (o.content >= gamma) ++hits;
        width_sum += o.rel_width;
    }
    if (r.reps_effective > 0) {
        r.coverage = static_cast<double>(hits) / r.reps_effective;
        r.mean_rel_width = width_sum / r.reps_effective;
    }
    const auto ci = clopper_pearson(hits, r.reps_effective);
    r.coverage_ci_lo = ci.first;
    r.coverage_ci_hi = ci.second;
    return r;
}

std::vector<CellResult> run_cell(const ExperimentConfig& config, const GridPoint& point,
                                 std::size_t grid_index, int threads) {
    config.validate();
    const simgen::GenerativeParams params = point.params();
    params.validate();
    const std::size_t n_methods = config.methods.size();
    const auto cells = dtr::all_cells();
    dtr::PipelineOptions opts;
    opts.weight_cap = config.weight_cap;

    // records[rep][method * 4 + cell]
    std::vector<std::vector<ReplicateOutcome>> records(
        static_cast<std::size_t>(config.reps),
        std::vector<ReplicateOutcome>(n_methods * cells.size()));

    parallel_for(static_cast<std::size_t>(config.reps), threads, [&](std::size_t rep) {
        Rng data_rng(derive_seed(config.master_seed, {kGridPurpose, grid_index, rep, 0}));
        std::vector<dtr::Trajectory> data(static_cast<std::size_t>(config.n));
        for (auto& t : data) t = simgen::draw_trajectory(params, data_rng);

        dtr::Stage2Fit fit2;
        try {
            fit2 = dtr::fit_stage2(data);
        } catch (const std::exception&) {
            return; // every (method, cell) outcome for this replicate stays !ok
        }

        std::vector<dtr::CellTiMap> tis(n_methods);
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            Rng method_rng(derive_seed(config.master_seed, {kGridPurpose, grid_index, rep, 1 + mi}));
            tis[mi] = dtr::build_stage1_tis(data, config.methods[mi], config.spec, method_rng, opts);
        }

        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const auto [s1, a1] = cells[ci];
            Rng oracle_rng(derive_seed(config.master_seed, {kGridPurpose, grid_index, rep, 100 + ci}));
            std::vector<double> ys = simgen::draw_outcomes_under_policy(
                params, fit2, s1, a1, config.oracle_n_mc, oracle_rng);
            std::sort(ys.begin(), ys.end());
            const double tail = 0.5 * (1.0 - config.spec.gamma);
            const double h_star = statdist::sorted_quantile(ys, 1.0 - tail) -
                                  statdist::sorted_quantile(ys, tail);
            for (std::size_t mi = 0; mi < n_methods; ++mi) {
                const dtr::CellTi& cell_ti = tis[mi].at({s1, a1});
                if (cell_ti.status != dtr::CellStatus::ok) continue;
                const auto& est = *cell_ti.interval;
                ReplicateOutcome& out = records[rep][mi * cells.size() + ci];
                out.ok = true;
                const std::size_t inside =
                    kernels::count_in_range(ys.data(), ys.size(), est.lower, est.upper);
                out.content = static_cast<double>(inside) / static_cast<double>(ys.size());
                out.rel_width = h_star > 0.0 ? est.width() / h_star : 0.0;
            }
        }
    });

    std::vector<CellResult> results;
    results.reserve(n_methods * cells.size());
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            std::vector<ReplicateOutcome> outcomes;
            outcomes.reserve(static_cast<std::size_t>(config.reps));
            for (int rep = 0; rep < config.reps; ++rep) {
                outcomes.push_back(records[static_cast<std::size_t>(rep)][mi * cells.size() + ci]);
            }
            CellResult r = aggregate_outcomes(outcomes, config.spec.gamma);
            r.method = dtr::method_name(config.methods[mi]);
            r.s1 = cells[ci].first;
            r.a1 = cells[ci].second;
            r.point = point;
            results.push_back(std::move(r));
        }
    }
    return results;
}

std::vector<CellResult> run_grid(const ExperimentConfig& config, int threads,
                                 const ProgressFn& progress) {
    config.validate();
    const std::vector<GridPoint> points = config.grid_points();
    std::vector<CellResult> all;
    for (std::size_t gi = 0; gi < points.size(); ++gi) {
        auto cell_results = run_cell(config, points[gi], gi, threads);
        all.insert(all.end(), cell_results.begin(), cell_results.end());
        if (progress) progress(gi + 1, points.size(), points[gi]);
    }
    return all;
}

void write_grid_csv(std::ostream& os, const ExperimentConfig& config,
                    const std::vector<CellResult>& results) {
    using csvio::format_num;
    os << "# config: " << config_to_json_text(config) << '\n';
    os << "method,s1,a1,xi_phi,xi_psi,sigma2_eps,ydist,gamma,alpha,coverage,coverage_ci_lo,"
          "coverage_ci_hi,mean_rel_width,reps_effective,failures\n";
    for (const CellResult& r : results) {
        os << r.method << ',' << r.s1 << ',' << r.a1 << ',' << format_num(r.point.xi_phi) << ','
           << format_num(r.point.xi_psi) << ',' << format_num(r.point.sigma2_eps) << ','
           << simgen::ydist_name(r.point.ydist) << ',' << format_num(config.spec.gamma) << ','
           << format_num(config.spec.alpha) << ',' << format_num(r.coverage) << ','
           << format_num(r.coverage_ci_lo) << ',' << format_num(r.coverage_ci_hi) << ','
           << format_num(r.mean_rel_width) << ',' << r.reps_effective << ',' << r.failures << '\n';
    }
}

// ---------------------------------------------------------------------------
// Mixture experiment
// ---------------------------------------------------------------------------

void MixtureExperimentConfig::validate() const {
    spec.validate();
    if (reps < 1) throw DomainError("mixture config: reps must be >= 1");
    if (n_matched < 2) throw DomainError("mixture config: n must be >= 2");
    if (mu1_grid.empty() || sigma1_grid.empty()) {
        throw DomainError("mixture config: grids must be non-empty");
    }
    for (double s : sigma1_grid) {
        if (!(s > 0.0)) throw DomainError("mixture config: sigma1 values must be > 0");
    }
}

namespace {

bool unit_weights(const std::vector<double>& w) {
    for (double v : w) {
        if (std::fabs(v - 1.0) > 1e-12) return false;
    }
    return true;
}

} // namespace

std::vector<MixtureResult> run_mixture(const MixtureExperimentConfig& config, int threads) {
    config.validate();
    static const char* kMethods[4] = {"UTI", "UNPTI", "WTI", "WNPTI"};
    std::vector<MixtureResult> all;

    std::size_t point_index = 0;
    for (double mu1 : config.mu1_grid) {
        for (double sigma1 : config.sigma1_grid) {
            simgen::MixtureParams mix;
            mix.mu1 = mu1;
            mix.sigma1 = sigma1;
            mix.validate();
            const double tail = 0.5 * (1.0 - config.spec.gamma);
            const double h_star =
                simgen::mixture_quantile(mix, 1.0 - tail) - simgen::mixture_quantile(mix, tail);

            // outcomes[method][rep]
            std::vector<std::vector<ReplicateOutcome>> outcomes(
                4, std::vector<ReplicateOutcome>(static_cast<std::size_t>(config.reps)));

            parallel_for(static_cast<std::size_t>(config.reps), threads, [&](std::size_t rep) {
                Rng rng(derive_seed(config.seed, {kMixturePurpose, point_index, rep}));
                std::vector<double> ys;
                ys.reserve(static_cast<std::size_t>(config.n_matched));
                while (ys.size() < static_cast<std::size_t>(config.n_matched)) {
                    const auto [m, y] = simgen::draw_mixture(mix, rng);
                    if (m == 1) ys.push_back(y);
                }
                const std::vector<double> w = simgen::mixture_analytic_weights(mix, ys);

                for (int mi = 0; mi < 4; ++mi) {
                    try {
                        intervals::IntervalEstimate est;
                        switch (mi) {
                        case 0:
                            est = intervals::ti_normal(ys, config.spec);
                            break;
                        case 1:
                            est = intervals::ti_wilks(ys, config.spec);
                            break;
                        case 2: {
                            if (unit_weights(w)) {
                                est = intervals::ti_normal(ys, config.spec);
                                break;
                            }
                            regress::DesignMatrix design;
                            design.column_labels = {"1"};
                            design.rows = Eigen::MatrixXd::Ones(
                                static_cast<Eigen::Index>(ys.size()), 1);
                            Eigen::VectorXd yv =
                                Eigen::Map<const Eigen::VectorXd>(ys.data(),
                                                                  static_cast<Eigen::Index>(ys.size()));
                            Eigen::VectorXd wv =
                                Eigen::Map<const Eigen::VectorXd>(w.data(),
                                                                  static_cast<Eigen::Index>(w.size()));
                            const auto fit = regress::fit_wls(design, yv, wv);
                            Eigen::VectorXd x0(1);
                            x0 << 1.0;
                            est = intervals::ti_regression(fit, x0, config.spec,
                                                           intervals::VarianceMode::sandwich);
                            break;
                        }
                        case 3: {
                            statdist::WeightedSample ws{ys, w};
                            est = intervals::ti_wilks_weighted(ws, config.spec);
                            break;
                        }
                        }
                        ReplicateOutcome& out = outcomes[static_cast<std::size_t>(mi)][rep];
                        out.ok = true;
                        out.content =
                            simgen::mixture_cdf(mix, est.upper) - simgen::mixture_cdf(mix, est.lower);
                        out.rel_width = h_star > 0.0 ? est.width() / h_star : 0.0;
                    } catch (const std::exception&) {
                        // leave !ok
                    }
                }
            });

            for (int mi = 0; mi < 4; ++mi) {
                const CellResult agg =
                    aggregate_outcomes(outcomes[static_cast<std::size_t>(mi)], config.spec.gamma);
                MixtureResult r;
                r.method = kMethods[mi];
                r.mu1 = mu1;
                r.sigma1 = sigma1;
                r.coverage = agg.coverage;
                r.coverage_ci_lo = agg.coverage_ci_lo;
                r.coverage_ci_hi = agg.coverage_ci_hi;
                r.mean_rel_width = agg.mean_rel_width;
                r.reps = agg.reps_effective;
                all.push_back(std::move(r));
            }
            ++point_index;
        }
    }
    return all;
}

void write_mixture_csv(std::ostream& os, const MixtureExperimentConfig& config,
                       const std::vector<MixtureResult>& results) {
    using csvio::format_num;
    os << "# mixture experiment: n_matched=" << config.n_matched << " reps=" << config.reps
       << " gamma=" << format_num(config.spec.gamma) << " alpha=" << format_num(config.spec.alpha)
       << " seed=" << config.seed << '\n';
    os << "method,mu1,sigma1,coverage,coverage_ci_lo,coverage_ci_hi,mean_rel_width,reps\n";
    for (const MixtureResult& r : results) {
        os << r.method << ',' << format_num(r.mu1) << ',' << format_num(r.sigma1) << ','
           << format_num(r.coverage) << ',' << format_num(r.coverage_ci_lo) << ','
           << format_num(r.coverage_ci_hi) << ',' << format_num(r.mean_rel_width) << ',' << r.reps
           << '\n';
    }
}

// ---------------------------------------------------------------------------
// Bias map
// ---------------------------------------------------------------------------

void BiasConfig::validate() const {
    if (reps < 1) throw DomainError("bias config: reps must be >= 1");
    if (n < 10) throw DomainError("bias config: n must be >= 10");
    if (xi_phi_grid.empty() || xi_psi_grid.empty() || sigma2_eps_grid.empty()) {
        throw DomainError("bias config: grids must be non-empty");
    }
}

std::vector<BiasResult> run_bias_map(const BiasConfig& config, int threads) {
    config.validate();
    std::vector<BiasResult> all;
    std::size_t point_index = 0;
    for (double xp : config.xi_phi_grid) {
        for (double xs : config.xi_psi_grid) {
            for (double s2 : config.sigma2_eps_grid) {
                simgen::GenerativeParams params;
                params.xi_phi = xp;
                params.xi_psi = xs;
                params.sigma2_eps = s2;
                params.validate();

                std::vector<double> biases(static_cast<std::size_t>(config.reps));
                std::vector<char> ok(static_cast<std::size_t>(config.reps), 0);
                parallel_for(static_cast<std::size_t>(config.reps), threads, [&](std::size_t rep) {
                    Rng rng(derive_seed(config.seed, {kBiasPurpose, point_index, rep}));
                    std::vector<dtr::Trajectory> data(static_cast<std::size_t>(config.n));
                    for (auto& t : data) t = simgen::draw_trajectory(params, rng);
                    try {
                        const dtr::Stage2Fit fit = dtr::fit_stage2(data);
                        const auto ann = dtr::annotate(data, fit);
                        biases[rep] = simgen::policy_value_bias(params, fit, ann);
                        ok[rep] = 1;
                    } catch (const std::exception&) {
                    }
                });

                BiasResult r;
                r.xi_phi = xp;
                r.xi_psi = xs;
                r.sigma2_eps = s2;
                r.n = config.n;
                double sum = 0.0;
                for (std::size_t i = 0; i < biases.size(); ++i) {
                    if (ok[i]) {
                        sum += biases[i];
                        ++r.reps;
                    }
                }
                if (r.reps > 0) {
                    r.mean_bias = sum / r.reps;
                    double ss = 0.0;
                    for (std::size_t i = 0; i < biases.size(); ++i) {
                        if (ok[i]) ss += (biases[i] - r.mean_bias) * (biases[i] - r.mean_bias);
                    }
                    r.se_bias = r.reps > 1 ? std::sqrt(ss / (r.reps - 1) / r.reps) : 0.0;
                }
                all.push_back(std::move(r));
                ++point_index;
            }
        }
    }
    return all;
}

void write_bias_csv(std::ostream& os, const BiasConfig& config,
                    const std::vector<BiasResult>& results) {
    using csvio::format_num;
    os << "# bias map: n=" << config.n << " reps=" << config.reps << " seed=" << config.seed << '\n';
    os << "xi_phi,xi_psi,sigma2_eps,n,reps,mean_bias,se_bias\n";
    for (const BiasResult& r : results) {
        os << format_num(r.xi_phi) << ',' << format_num(r.xi_psi) << ',' << format_num(r.sigma2_eps)
           << ',' << r.n << ',' << r.reps << ',' << format_num(r.mean_bias) << ','
           << format_num(r.se_bias) << '\n';
    }
}

} // namespace dtrti::harness
