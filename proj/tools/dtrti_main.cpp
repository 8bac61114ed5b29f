// dtrti command line: simulate trajectory data, build per-cell tolerance
// intervals from trajectory CSVs, and run the Monte Carlo experiment suites.

#include "dtrti/csvio.hpp"
#include "dtrti/dtr.hpp"
#include "dtrti/harness.hpp"
#include "dtrti/rng.hpp"
#include "dtrti/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using dtrti::Rng;
namespace dtr = dtrti::dtr;
namespace simgen = dtrti::simgen;
namespace harness = dtrti::harness;
namespace csvio = dtrti::csvio;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

/// Generative-parameter overrides accepted by `simulate`, either as flags or
/// as a JSON file with the same keys.
simgen::GenerativeParams params_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::runtime_error("params config: top level must be an object");
    static const std::vector<std::string> known = {"xi_phi", "xi_psi", "sigma2_eps", "ydist",
                                                   "phi1",   "delta1", "phi2",       "beta2",
                                                   "psi2"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::runtime_error("params config: unknown key '" + key + "'");
        }
    }
    simgen::GenerativeParams p;
    if (j.contains("xi_phi")) p.xi_phi = j["xi_phi"].get<double>();
    if (j.contains("xi_psi")) p.xi_psi = j["xi_psi"].get<double>();
    if (j.contains("sigma2_eps")) p.sigma2_eps = j["sigma2_eps"].get<double>();
    if (j.contains("ydist")) {
        const auto d = simgen::parse_ydist(j["ydist"].get<std::string>());
        if (!d) throw std::runtime_error("params config: unknown ydist");
        p.ydist = *d;
    }
    auto fill = [&](const char* key, auto& arr) {
        if (!j.contains(key)) return;
        const auto v = j[key].get<std::vector<double>>();
        if (v.size() != arr.size()) {
            throw std::runtime_error(std::string("params config: '") + key + "' must have " +
                                     std::to_string(arr.size()) + " entries");
        }
        std::copy(v.begin(), v.end(), arr.begin());
    };
    fill("phi1", p.phi1);
    fill("delta1", p.delta1);
    fill("phi2", p.phi2);
    fill("beta2", p.beta2);
    fill("psi2", p.psi2);
    return p;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, long n,
                 const std::string& out_path, const std::optional<double>& xi_phi,
                 const std::optional<double>& xi_psi, const std::optional<double>& sigma2_eps,
                 const std::string& ydist) {
    simgen::GenerativeParams params;
    if (!config_path.empty()) params = params_from_json(read_file(config_path));
    if (xi_phi) params.xi_phi = *xi_phi;
    if (xi_psi) params.xi_psi = *xi_psi;
    if (sigma2_eps) params.sigma2_eps = *sigma2_eps;
    if (!ydist.empty()) {
        const auto d = simgen::parse_ydist(ydist);
        if (!d) throw std::runtime_error("unknown ydist '" + ydist + "'");
        params.ydist = *d;
    }
    params.validate();

    Rng rng(seed);
    std::vector<dtr::Trajectory> data(static_cast<std::size_t>(n));
    for (auto& t : data) t = simgen::draw_trajectory(params, rng);
    csvio::write_trajectories_file(out_path, data);
    return 0;
}

int cmd_intervals(const std::string& in_path, const std::vector<std::string>& method_names,
                  double alpha, double gamma, std::uint64_t seed, const std::string& out_path,
                  const std::optional<double>& weight_cap) {
    const auto data = csvio::read_trajectories_file(in_path);
    std::vector<dtr::TiMethod> methods;
    for (const std::string& name : method_names) {
        const auto m = dtr::parse_method(name);
        if (!m) throw std::runtime_error("unknown method '" + name + "'");
        methods.push_back(*m);
    }
    dtrti::intervals::IntervalSpec spec{alpha, gamma};
    spec.validate();
    dtr::PipelineOptions opts;
    opts.weight_cap = weight_cap;

    std::ostringstream os;
    os << "method,s1,a1,lower,upper,status\n";
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        Rng rng(dtrti::derive_seed(seed, {4, mi}));
        const auto tis = dtr::build_stage1_tis(data, methods[mi], spec, rng, opts);
        for (const auto& [cell, result] : tis) {
            os << dtr::method_name(methods[mi]) << ',' << cell.first << ',' << cell.second << ',';
            if (result.status == dtr::CellStatus::ok) {
                os << csvio::format_num(result.interval->lower) << ','
                   << csvio::format_num(result.interval->upper);
            } else {
                os << ',';
            }
            os << ',' << dtr::status_name(result.status) << '\n';
        }
    }
    write_file(out_path, os.str());
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path,
                   const std::optional<std::uint64_t>& seed_override, int threads) {
    harness::ExperimentConfig config =
        harness::config_from_json_text(read_file(config_path), !seed_override.has_value());
    if (seed_override) config.master_seed = *seed_override;
    config.validate();

    const auto results = harness::run_grid(config, threads, [](std::size_t done, std::size_t total,
                                                               const harness::GridPoint& p) {
        std::cerr << "grid point " << done << "/" << total << " done (xi_phi=" << p.xi_phi
                  << ", xi_psi=" << p.xi_psi << ", sigma2_eps=" << p.sigma2_eps << ", ydist="
                  << simgen::ydist_name(p.ydist) << ")\n";
    });
    std::ostringstream os;
    harness::write_grid_csv(os, config, results);
    write_file(out_path, os.str());
    return 0;
}

int cmd_mixture(const std::vector<double>& mu1, const std::vector<double>& sigma1, int n, int reps,
                double alpha, double gamma, std::uint64_t seed, const std::string& out_path,
                int threads) {
    harness::MixtureExperimentConfig config;
    config.mu1_grid = mu1;
    config.sigma1_grid = sigma1;
    config.n_matched = n;
    config.reps = reps;
    config.spec = {alpha, gamma};
    config.seed = seed;
    config.validate();
    const auto results = harness::run_mixture(config, threads);
    std::ostringstream os;
    harness::write_mixture_csv(os, config, results);
    write_file(out_path, os.str());
    return 0;
}

int cmd_bias(const std::vector<double>& xi_phi, const std::vector<double>& xi_psi,
             const std::vector<double>& sigma2_eps, int n, int reps, std::uint64_t seed,
             const std::string& out_path, int threads) {
    harness::BiasConfig config;
    config.xi_phi_grid = xi_phi;
    config.xi_psi_grid = xi_psi;
    config.sigma2_eps_grid = sigma2_eps;
    config.n = n;
    config.reps = reps;
    config.seed = seed;
    config.validate();
    const auto results = harness::run_bias_map(config, threads);
    std::ostringstream os;
    harness::write_bias_csv(os, config, results);
    write_file(out_path, os.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tolerance and prediction intervals for outcomes under estimated two-stage "
                 "treatment policies"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Draw synthetic trajectories to a CSV file");
    std::string sim_config, sim_out, sim_ydist;
    std::uint64_t sim_seed = 0;
    long sim_n = 1000;
    std::optional<double> sim_xi_phi, sim_xi_psi, sim_sigma2;
    sim->add_option("--config", sim_config, "JSON file with generative-parameter overrides");
    sim->add_option("--n", sim_n, "Number of trajectories")->check(CLI::NonNegativeNumber);
    sim->add_option("--seed", sim_seed, "Random seed")->required();
    sim->add_option("--out", sim_out, "Output CSV path")->required();
    sim->add_option("--xi-phi", sim_xi_phi, "Exploration covariate-effect factor in [0,1]");
    sim->add_option("--xi-psi", sim_xi_psi, "Second-stage treatment-effect factor in [0,1]");
    sim->add_option("--sigma2-eps", sim_sigma2, "Outcome error variance");
    sim->add_option("--ydist", sim_ydist, "Error shape: normal | uniform | t3");

    // intervals
    auto* ivl = app.add_subcommand("intervals", "Per-cell tolerance intervals from a trajectory CSV");
    std::string ivl_in, ivl_out;
    std::vector<std::string> ivl_methods = {"UTI", "UNPTI", "WTI", "WNPTI", "RBQTI", "RBQNPTI"};
    double ivl_alpha = 0.05, ivl_gamma = 0.9;
    std::uint64_t ivl_seed = 0;
    std::optional<double> ivl_cap;
    ivl->add_option("--in", ivl_in, "Input trajectory CSV")->required();
    ivl->add_option("--methods", ivl_methods, "Methods to run")->delimiter(',');
    ivl->add_option("--alpha", ivl_alpha, "1 - confidence level");
    ivl->add_option("--gamma", ivl_gamma, "Tolerance-interval content");
    ivl->add_option("--seed", ivl_seed, "Random seed (residual borrowing draws)")->required();
    ivl->add_option("--out", ivl_out, "Output CSV path")->required();
    ivl->add_option("--weight-cap", ivl_cap, "Cap on raw importance-weight ratios");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Coverage/width grid experiment from a JSON config");
    std::string exp_config, exp_out;
    std::optional<std::uint64_t> exp_seed;
    int exp_threads = 1;
    exp->add_option("--config", exp_config, "JSON experiment config")->required();
    exp->add_option("--out", exp_out, "Output CSV path")->required();
    exp->add_option("--seed", exp_seed, "Master seed (overrides config)");
    exp->add_option("--threads", exp_threads, "Worker threads (0 = auto)");

    // mixture
    auto* mix = app.add_subcommand("mixture", "Two-component mixture weighting experiment");
    std::vector<double> mix_mu1 = {0.0, 0.5, 1.0, 1.5, 2.0};
    std::vector<double> mix_sigma1 = {0.5, 0.75, 1.0, 1.5, 2.0};
    int mix_n = 500, mix_reps = 200, mix_threads = 1;
    double mix_alpha = 0.05, mix_gamma = 0.9;
    std::uint64_t mix_seed = 0;
    std::string mix_out;
    mix->add_option("--mu1", mix_mu1, "Matched-component means")->delimiter(',');
    mix->add_option("--sigma1", mix_sigma1, "Matched-component SDs")->delimiter(',');
    mix->add_option("--n", mix_n, "Matched sample size per replicate");
    mix->add_option("--reps", mix_reps, "Monte Carlo replicates");
    mix->add_option("--alpha", mix_alpha, "1 - confidence level");
    mix->add_option("--gamma", mix_gamma, "Tolerance-interval content");
    mix->add_option("--seed", mix_seed, "Random seed")->required();
    mix->add_option("--out", mix_out, "Output CSV path")->required();
    mix->add_option("--threads", mix_threads, "Worker threads (0 = auto)");

    // bias
    auto* bias = app.add_subcommand("bias", "Policy-value bias map over the generative grid");
    std::vector<double> bias_xi_phi = {0.0, 0.5, 1.0};
    std::vector<double> bias_xi_psi = {0.0, 0.5, 1.0};
    std::vector<double> bias_sigma2 = {1.0};
    int bias_n = 1000, bias_reps = 100, bias_threads = 1;
    std::uint64_t bias_seed = 0;
    std::string bias_out;
    bias->add_option("--xi-phi", bias_xi_phi, "Exploration factors")->delimiter(',');
    bias->add_option("--xi-psi", bias_xi_psi, "Treatment-effect factors")->delimiter(',');
    bias->add_option("--sigma2-eps", bias_sigma2, "Error variances")->delimiter(',');
    bias->add_option("--n", bias_n, "Trajectories per dataset");
    bias->add_option("--reps", bias_reps, "Monte Carlo replicates");
    bias->add_option("--seed", bias_seed, "Random seed")->required();
    bias->add_option("--out", bias_out, "Output CSV path")->required();
    bias->add_option("--threads", bias_threads, "Worker threads (0 = auto)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_simulate(sim_config, sim_seed, sim_n, sim_out, sim_xi_phi, sim_xi_psi,
                                sim_sigma2, sim_ydist);
        }
        if (ivl->parsed()) {
            return cmd_intervals(ivl_in, ivl_methods, ivl_alpha, ivl_gamma, ivl_seed, ivl_out,
                                 ivl_cap);
        }
        if (exp->parsed()) {
            return cmd_experiment(exp_config, exp_out, exp_seed, exp_threads);
        }
        if (mix->parsed()) {
            return cmd_mixture(mix_mu1, mix_sigma1, mix_n, mix_reps, mix_alpha, mix_gamma, mix_seed,
                               mix_out, mix_threads);
        }
        if (bias->parsed()) {
            return cmd_bias(bias_xi_phi, bias_xi_psi, bias_sigma2, bias_n, bias_reps, bias_seed,
                            bias_out, bias_threads);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
