#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdcap/analysis.hpp"
#include "rdcap/errors.hpp"
#include "rdcap/harness.hpp"
#include "rdcap/rdp_analysis.hpp"
#include "rdcap/rdp_flood.hpp"
#include "rdcap/rng.hpp"
#include "rdcap/topology.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailed = 2;

rdcap::RateFunction load_qprime(const std::string& arg) {
    std::size_t used = 0;
    try {
        const double q = std::stod(arg, &used);
        if (used == arg.size()) {
            if (!(q >= 0.0 && q <= 1.0)) throw rdcap::InvalidConfig("constant qprime must lie in [0, 1]");
            return [q](double) { return q; };
        }
    } catch (const std::invalid_argument&) {
    }
    std::ifstream in(arg);
    if (!in) throw rdcap::InvalidConfig("qprime is neither a number nor a readable file: " + arg);
    std::vector<std::pair<double, double>> pts;
    std::string line;
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double x = 0, y = 0;
        if (ss >> x >> y) pts.emplace_back(x, y);
    }
    if (pts.empty()) throw rdcap::InvalidConfig("qprime table has no rows");
    std::sort(pts.begin(), pts.end());
    return [pts](double x) {
        if (x <= pts.front().first) return pts.front().second;
        if (x >= pts.back().first) return pts.back().second;
        const auto hi = std::lower_bound(pts.begin(), pts.end(), std::make_pair(x, -1e300));
        const auto lo = hi - 1;
        const double t = (x - lo->first) / (hi->first - lo->first);
        return lo->second + t * (hi->second - lo->second);
    };
}

int cmd_sweep(const std::string& spec_path, std::size_t workers, const std::string& out_dir) {
    rdcap::ExperimentSpec spec = rdcap::load_spec(spec_path);
    if (workers) spec.workers = workers;
    if (!out_dir.empty()) spec.output_dir = out_dir;
    spec.validate();
    const rdcap::RunRecord rec = rdcap::run_sweep(spec, [](const rdcap::PointResult& p) {
        if (p.ok)
            std::fprintf(stderr, "n=%zu rep=%zu T=%.4g xi=%.4g\n", p.n, p.replication,
                         p.metrics.throughput_per_node, p.metrics.xi_measured);
        else
            std::fprintf(stderr, "n=%zu rep=%zu failed: %s\n", p.n, p.replication, p.error.c_str());
    });
    rdcap::persist_run(rec, spec.output_dir);
    nlohmann::json summary{{"spec_hash", rec.spec_hash},
                           {"output_dir", spec.output_dir},
                           {"failed_points", rec.failed_points()}};
    if (rec.throughput_fit) summary["throughput_slope"] = rec.throughput_fit->slope;
    if (rec.verdict) summary["regime"] = std::string(rdcap::to_string(rec.verdict->regime));
    if (rec.theta) summary["theta_spread"] = rec.theta->spread;
    std::cout << summary.dump(2) << '\n';
    return kOk;
}

int cmd_flood(std::size_t n, double ca, std::uint64_t seed, std::size_t origins, std::size_t budget) {
    rdcap::NetworkConfig c;
    c.n = n;
    c.area_coeff = ca;
    c.seed = seed;
    c.validate();
    if (origins < 1 || origins > n) throw rdcap::InvalidConfig("origins must lie in [1, n]");
    const rdcap::NodePlacement placement = rdcap::place_nodes(c);
    rdcap::Rng rng(rdcap::stream_seed(seed, rdcap::Stream::floods));
    std::vector<std::uint32_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    for (std::size_t i = 0; i < origins; ++i) std::swap(ids[i], ids[i + rng.below(n - i)]);
    ids.resize(origins);
    const rdcap::ConcurrentFloods res = rdcap::run_concurrent_floods(ids, placement, c, budget);
    const auto& s = res.stats;
    std::cout << nlohmann::json{{"n", n},
                                {"area_coeff", ca},
                                {"seed", seed},
                                {"floods", s.floods},
                                {"mean_f", s.mean_f},
                                {"median_f", s.median_f},
                                {"nbar_r", s.nbar_r},
                                {"gamma_hat", s.gamma_hat},
                                {"chat", s.chat}}
                     .dump(2)
              << '\n';
    return kOk;
}

int cmd_solve(double n, double nu, double tau, const std::string& qprime) {
    const rdcap::LambdaSolution s = rdcap::solve_lambda_detailed(n, nu, tau, load_qprime(qprime));
    std::cout << nlohmann::json{{"lambda", s.lambda},
                                {"residual", s.residual},
                                {"iterations", s.iterations},
                                {"converged", s.converged}}
                     .dump(2)
              << '\n';
    return s.converged ? kOk : kFailed;
}

int cmd_classify(const std::string& scenario, double n_min, double n_max, std::size_t probes, double threshold,
                 const std::string& csv) {
    rdcap::ScenarioPreset preset;
    if (std::filesystem::is_regular_file(scenario))
        preset = rdcap::load_spec(scenario).resolved();
    else
        preset = rdcap::scenario_presets(scenario);
    const auto verdict =
        rdcap::classify_regime(preset.tau, preset.gmodel, rdcap::probe_sizes(n_min, n_max, probes), threshold);
    if (!csv.empty()) {
        std::ofstream out(csv);
        if (!out) throw std::runtime_error("cannot write " + csv);
        rdcap::write_reference_csv(out, verdict);
    }
    std::cout << rdcap::to_json(verdict).dump(2) << '\n';
    return kOk;
}

int cmd_fit(const std::string& path, const std::string& x, const std::string& y) {
    std::ifstream in(path);
    if (!in) throw rdcap::InvalidConfig("cannot open " + path);
    const auto pts = rdcap::read_csv_columns(in, x, y);
    std::cout << rdcap::to_json(rdcap::fit_exponent(pts)).dump(2) << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Route-discovery capacity simulator"};
    app.require_subcommand(1);

    std::string spec_path, out_dir;
    std::size_t workers = 0;
    auto* sweep = app.add_subcommand("sweep", "Run an experiment spec");
    sweep->add_option("--spec", spec_path, "key=value spec file")->required();
    sweep->add_option("--workers", workers, "worker threads");
    sweep->add_option("--out", out_dir, "output directory");

    std::size_t n = 1024, origins = 1, budget = 100000;
    double ca = 16.0;
    std::uint64_t seed = 1;
    auto* flood = app.add_subcommand("flood", "Standalone flood statistics");
    flood->add_option("--n", n)->required();
    flood->add_option("--ca", ca)->required();
    flood->add_option("--seed", seed)->required();
    flood->add_option("--origins", origins, "concurrent floods");
    flood->add_option("--budget", budget, "slot budget per flood");

    double sn = 0, nu = 0, tau = 0;
    std::string qprime;
    auto* solve = app.add_subcommand("solve-lambda", "Fixed point of the RDP arrival rate");
    solve->add_option("--n", sn)->required();
    solve->add_option("--nu", nu)->required();
    solve->add_option("--tau", tau)->required();
    solve->add_option("--qprime", qprime, "constant or file of (lambda, Q') rows")->required();

    std::string scenario, csv;
    double n_min = 100, n_max = 1e6, threshold = -0.1;
    std::size_t probes = 9;
    auto* classify = app.add_subcommand("classify", "Regime verdict for a scenario");
    classify->add_option("--scenario", scenario, "preset name or spec file")->required();
    classify->add_option("--n-min", n_min)->required();
    classify->add_option("--n-max", n_max)->required();
    classify->add_option("--probes", probes);
    classify->add_option("--threshold", threshold);
    classify->add_option("--csv", csv, "write reference curves");

    std::string fit_csv, fx = "n", fy = "throughput_per_node";
    auto* fit = app.add_subcommand("fit", "Log-log exponent fit of a CSV column");
    fit->add_option("--csv", fit_csv)->required();
    fit->add_option("--x", fx);
    fit->add_option("--y", fy);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    try {
        if (*sweep) return cmd_sweep(spec_path, workers, out_dir);
        if (*flood) return cmd_flood(n, ca, seed, origins, budget);
        if (*solve) return cmd_solve(sn, nu, tau, qprime);
        if (*classify) return cmd_classify(scenario, n_min, n_max, probes, threshold, csv);
        if (*fit) return cmd_fit(fit_csv, fx, fy);
    } catch (const rdcap::InvalidConfig& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const rdcap::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    }
    return kOk;
}
