#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdcap/analysis.hpp"
#include "rdcap/harness.hpp"
#include "rdcap/mac.hpp"
#include "rdcap/rdp_analysis.hpp"
#include "rdcap/routing.hpp"
#include "rdcap/topology.hpp"

using namespace rdcap;
namespace fs = std::filesystem;

namespace {

const std::vector<std::size_t> kSweepN{256, 1024, 4096, 16384};
const std::vector<std::size_t> kFloodN{256, 1024, 4096};
constexpr std::size_t kReps = 8;

struct Point {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double throughput = 0, xi = 0, tau = 0, lambda = 0, q = 0, nbar_r = 0, chat = 0, gamma_hat = 0;
};

struct Sweep {
    std::string name;
    std::string scenario;
    bool flooded = false;
    std::size_t failed = 0;
    std::vector<Point> points;

    std::vector<double> column(std::size_t n, double Point::*field) const {
        std::vector<double> out;
        for (const auto& p : points)
            if (p.n == n) out.push_back(p.*field);
        return out;
    }
};

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

ExperimentSpec sweep_spec(const std::string& scenario, bool flooded) {
    ExperimentSpec s;
    s.scenario = scenario;
    s.replications = kReps;
    s.base.seed = 20240601;
    if (flooded) {
        s.mode = SuccessMode::flooded;
        s.n_values = kFloodN;
        s.max_horizon_slots = 30000;
    } else {
        s.n_values = kSweepN;
    }
    return s;
}

nlohmann::json to_json(const Sweep& s) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : s.points)
        pts.push_back({p.n, p.seed, p.throughput, p.xi, p.tau, p.lambda, p.q, p.nbar_r, p.chat, p.gamma_hat});
    return {{"name", s.name}, {"scenario", s.scenario}, {"flooded", s.flooded}, {"failed", s.failed}, {"points", pts}};
}

Sweep from_json(const nlohmann::json& j) {
    Sweep s;
    s.name = j["name"];
    s.scenario = j["scenario"];
    s.flooded = j["flooded"];
    s.failed = j["failed"];
    for (const auto& e : j["points"]) {
        Point p;
        p.n = e[0];
        p.seed = e[1];
        p.throughput = e[2];
        p.xi = e[3];
        p.tau = e[4];
        p.lambda = e[5];
        p.q = e[6];
        p.nbar_r = e[7];
        p.chat = e[8];
        p.gamma_hat = e[9];
        s.points.push_back(p);
    }
    return s;
}

Sweep run_named(const std::string& scenario, bool flooded) {
    const ExperimentSpec spec = sweep_spec(scenario, flooded);
    const auto t0 = std::chrono::steady_clock::now();
    const RunRecord rec = run_sweep(spec);
    Sweep s;
    s.name = scenario + (flooded ? "_flooded" : "_analytic");
    s.scenario = scenario;
    s.flooded = flooded;
    s.failed = rec.failed_points();
    for (const auto& r : rec.points) {
        if (!r.ok) continue;
        const Metrics& m = r.metrics;
        s.points.push_back({r.n, r.seed, m.throughput_per_node, m.xi_measured, m.tau_measured, m.lambda_measured,
                            m.q_measured, m.nbar_r, m.floods.chat, m.floods.gamma_hat});
    }
    std::fprintf(stderr, "sweep %s: %zu points, %zu failed, %.1f s\n", s.name.c_str(), s.points.size(), s.failed,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return s;
}

fs::path g_cache;

Sweep sweep(const std::string& scenario, bool flooded) {
    const std::string name = scenario + (flooded ? "_flooded" : "_analytic");
    if (!g_cache.empty()) {
        const fs::path file = g_cache / (name + ".json");
        if (fs::exists(file)) {
            std::ifstream in(file);
            return from_json(nlohmann::json::parse(in));
        }
    }
    Sweep s = run_named(scenario, flooded);
    if (!g_cache.empty()) {
        fs::create_directories(g_cache);
        std::ofstream(g_cache / (name + ".json")) << to_json(s).dump() << '\n';
    }
    return s;
}

const std::vector<std::string> kScenarios{"example1", "example2", "example3"};

struct Result {
    bool pass = false;
    std::string detail;
};

double sqrt_nlogn(double n) { return std::sqrt(n * std::log(n)); }

Result c1() {
    std::string detail;
    bool ok = true;
    for (std::size_t n : {100u, 400u, 1600u}) {
        const std::size_t m = cells_per_side(n);
        const std::size_t trials = 100000;
        std::size_t empty = 0;
        std::vector<int> count(m * m);
        for (std::size_t t = 0; t < trials; ++t) {
            NetworkConfig c;
            c.n = n;
            c.seed = derive_seed(0xe1, {n, t});
            const NodePlacement p = place_nodes(c);
            std::fill(count.begin(), count.end(), 0);
            for (const auto& q : p.positions) ++count[axis_cell(q.y, m) * m + axis_cell(q.x, m)];
            if (std::find(count.begin(), count.end(), 0) != count.end()) ++empty;
        }
        const double freq = static_cast<double>(empty) / trials;
        const double bound = empty_cell_bound(n);
        ok = ok && freq <= bound;
        char buf[128];
        std::snprintf(buf, sizeof buf, "n=%zu P=%.2e bound=%.2e; ", n, freq, bound);
        detail += buf;
    }
    return {ok, detail};
}

Result c2() {
    std::vector<std::pair<double, double>> maxes, mins;
    for (std::size_t n : kSweepN) {
        std::vector<double> mx, mn;
        for (std::size_t r = 0; r < kReps; ++r) {
            NetworkConfig c;
            c.n = n;
            c.seed = point_seed(0xc2, n, r);
            const Grid g = build_grid(place_nodes(c), c);
            Rng rng(stream_seed(c.seed, Stream::destinations));
            const auto dest = assign_destinations(n, rng);
            std::vector<Route> routes;
            for (std::uint32_t i = 0; i < n; ++i) routes.push_back(build_route(i, dest[i], g));
            const CellLoads l = cell_loads(routes, g);
            mx.push_back(static_cast<double>(l.max_count()));
            mn.push_back(static_cast<double>(l.min_count()));
        }
        maxes.emplace_back(sqrt_nlogn(static_cast<double>(n)), median(mx));
        mins.emplace_back(sqrt_nlogn(static_cast<double>(n)), std::max(median(mn), 1e-9));
    }
    const double smax = fit_exponent(maxes).slope;
    const double smin = fit_exponent(mins).slope;
    const bool ok = smax >= 0.85 && smax <= 1.15 && smin >= 0.85 && smin <= 1.15;
    std::string detail;
    for (std::size_t i = 0; i < kSweepN.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "n=%zu max=%.0f min=%.0f; ", kSweepN[i], maxes[i].second, mins[i].second);
        detail += buf;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "slope(max N_i)=%.3f slope(min N_i)=%.3f, both required in [0.85, 1.15]", smax, smin);
    return {ok, detail + buf};
}

Result c3() {
    Rng rng(0xc3);
    std::size_t violations = 0, classes = 0;
    std::map<std::size_t, std::uint32_t> period;
    for (std::size_t t = 0; t < 1000; ++t) {
        const std::size_t n = kSweepN[t % kSweepN.size()];
        NetworkConfig c;
        c.n = n;
        c.seed = derive_seed(0xc3, {t});
        const NodePlacement p = place_nodes(c);
        const Grid g = build_grid(p, c);
        const Schedule s = lattice_schedule(g, c);
        if (!schedule_is_proper(s, g.interference)) ++violations;
        if (period.count(n) && period[n] != s.period) ++violations;
        period[n] = s.period;
        for (const auto& cls : s.classes()) {
            std::vector<Link> links;
            for (std::uint32_t cell : cls) {
                if (g.members[cell].empty()) continue;
                const std::uint32_t tx = g.members[cell][rng.below(g.members[cell].size())];
                std::vector<std::uint32_t> cand;
                const CellCoord xy = g.coord(cell);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const long x = static_cast<long>(xy.x) + dx, y = static_cast<long>(xy.y) + dy;
                        if (x < 0 || y < 0 || x >= static_cast<long>(g.m) || y >= static_cast<long>(g.m)) continue;
                        for (std::uint32_t v : g.members[g.index({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)})])
                            if (v != tx && distance(p.positions[v], p.positions[tx]) <= g.range) cand.push_back(v);
                    }
                if (cand.empty()) continue;
                links.push_back({tx, cand[rng.below(cand.size())]});
            }
            ++classes;
            for (auto o : data_slot_success(links, p, g.range, c.delta))
                if (o != LinkOutcome::success) ++violations;
        }
    }
    std::set<std::uint32_t> ks;
    for (const auto& [n, k] : period) ks.insert(k);
    const bool ok = violations == 0 && ks.size() == 1;
    char buf[200];
    std::snprintf(buf, sizeof buf, "1000 placements, %zu colour classes, %zu violations, K=%u across n (distinct K: %zu)",
                  classes, violations, *ks.begin(), ks.size());
    return {ok, buf};
}

Result c4() {
    double worst_const = 0.0;
    for (double n : {100.0, 1000.0, 16384.0})
        for (double nu : {0.01, 0.3, 1.0})
            for (double tau : {1.0, 10.0, 250.0})
                for (double q : {0.0, 0.2, 0.5, 1.0}) {
                    const double got = solve_lambda(n, nu, tau, [q](double) { return q; });
                    const double want = n * nu / (1.0 + q * tau * nu);
                    worst_const = std::max(worst_const, std::abs(got / want - 1.0));
                }
    const double n = 100, nu = 1, tau = 10;
    const RateFunction q = [](double x) { return 1.0 / (1.0 + x / 50.0); };
    const double lo = n * nu / (1.0 + tau * nu);
    double best = lo, best_r = 1e300;
    for (long i = 0;; ++i) {
        const double x = lo + 1e-6 * static_cast<double>(i);
        if (x > n * nu) break;
        const double r = std::abs(x - n * nu / (1.0 + q(x) * tau * nu));
        if (r < best_r) {
            best_r = r;
            best = x;
        }
    }
    const double got = solve_lambda(n, nu, tau, q);
    const double rel = std::abs(got / best - 1.0);
    const bool ok = worst_const <= 1e-9 && rel <= 1e-5;
    char buf[200];
    std::snprintf(buf, sizeof buf, "constant Q' worst rel err %.1e (<=1e-9); decreasing Q' lambda=%.8f grid=%.8f rel %.1e (<=1e-5)",
                  worst_const, got, best, rel);
    return {ok, buf};
}

Result c5() {
    bool ok = true;
    std::string detail;
    for (const auto& sc : kScenarios) {
        const Sweep s = sweep(sc, false);
        const ScenarioPreset p = scenario_presets(sc);
        std::vector<std::pair<double, double>> meas, ref;
        for (std::size_t n : kSweepN) {
            meas.emplace_back(n, median(s.column(n, &Point::xi)));
            ref.emplace_back(n, xi_reference(p.gmodel.at(static_cast<double>(n)), n));
        }
        const ThetaCheck t = check_theta(meas, ref, 4.0);
        ok = ok && t.consistent && s.failed == 0;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s spread=%.2f; ", sc.c_str(), t.spread);
        detail += buf;
    }
    return {ok, detail + "required < 4"};
}

Result end_to_end(const std::string& sc, double slope_lo, double slope_hi) {
    const Sweep s = sweep(sc, false);
    const ScenarioPreset p = scenario_presets(sc);
    std::vector<std::pair<double, double>> meas, ref;
    for (std::size_t n : kSweepN) {
        const double nd = static_cast<double>(n);
        meas.emplace_back(nd, median(s.column(n, &Point::throughput)));
        ref.emplace_back(nd, sc == "example3" ? interference_bound(1.0, nd)
                                              : p.tau.at(nd) * g_eval(p.gmodel.at(nd), 1.0 / nd));
    }
    const ScalingFit f = fit_exponent(meas);
    const ThetaCheck t = check_theta(meas, ref, 4.0);
    const bool ok = f.slope >= slope_lo && f.slope <= slope_hi && t.consistent && s.failed == 0;
    char buf[200];
    std::snprintf(buf, sizeof buf, "slope=%.3f in [%.2f, %.2f], r2=%.3f; theta spread=%.2f < 4", f.slope, slope_lo,
                  slope_hi, f.r_squared, t.spread);
    return {ok, buf};
}

Result c6() { return end_to_end("example1", -1.2, -0.8); }
Result c7() { return end_to_end("example3", -0.65, -0.45); }

Result c8() {
    const auto probes = probe_sizes(100, 1e6, 9);
    std::string got;
    bool ok = true;
    const Regime want[] = {Regime::rdp_limited, Regime::rdp_limited, Regime::interference_limited};
    for (std::size_t i = 0; i < 3; ++i) {
        const ScenarioPreset p = scenario_presets(kScenarios[i]);
        const RegimeVerdict v = classify_regime(p.tau, p.gmodel, probes);
        ok = ok && v.regime == want[i];
        got += kScenarios[i] + "=" + std::string(to_string(v.regime)) + " ";
    }
    return {ok, got};
}

Result c9() {
    std::vector<Sweep> all;
    for (const auto& sc : kScenarios) all.push_back(sweep(sc, false));
    for (const auto& sc : kScenarios) all.push_back(sweep(sc, true));
    double c = 0.0;
    for (const auto& p : all[2].points) c = std::max(c, p.throughput * sqrt_nlogn(static_cast<double>(p.n)));
    std::size_t v1 = 0, v2 = 0, total = 0;
    for (const auto& s : all)
        for (const auto& p : s.points) {
            ++total;
            if (p.xi > 0.0 && p.throughput > 1.1 * p.tau / p.xi) ++v1;
            if (p.throughput > c / sqrt_nlogn(static_cast<double>(p.n)) * (1.0 + 1e-12)) ++v2;
        }
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu points; dormancy violations %zu; interference violations %zu with c=%.4g fitted on example3",
                  total, v1, v2, c);
    return {v1 == 0 && v2 == 0 && total > 0, buf};
}

Result c10() {
    bool ok = true;
    std::string detail;
    for (const auto& sc : kScenarios) {
        const Sweep s = sweep(sc, true);
        std::vector<std::pair<double, double>> pts;
        for (std::size_t n : kFloodN) pts.emplace_back(n, median(s.column(n, &Point::chat)));
        const ScalingFit f = fit_exponent(pts);
        ok = ok && f.slope > -0.1 && s.failed == 0;
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s chat=[%.3f %.3f %.3f] slope=%.3f; ", sc.c_str(), pts[0].second,
                      pts[1].second, pts[2].second, f.slope);
        detail += buf;
    }
    return {ok, detail + "required > -0.1"};
}

Result c11() {
    std::size_t inside = 0, total = 0, above = 0, below = 0;
    for (const auto& sc : kScenarios) {
        const Sweep s = sweep(sc, true);
        const ScenarioPreset preset = scenario_presets(sc);
        const double theta = sweep_spec(sc, true).base.theta;
        for (const auto& p : s.points) {
            GModel g = preset.gmodel.at(static_cast<double>(p.n));
            g.gamma = p.gamma_hat;
            const double lam = p.lambda / theta;
            const double hi = q_upper_bound(g, p.nbar_r, lam, p.n);
            const double lo = q_lower_bound(g, p.nbar_r, lam, p.n);
            ++total;
            if (p.q > hi) ++above;
            else if (p.q < lo) ++below;
            else ++inside;
        }
    }
    const double frac = total ? static_cast<double>(inside) / total : 0.0;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu/%zu flooded points inside [lower, upper] (%.0f%%, need >= 90%%); %zu above, %zu below",
                  inside, total, 100 * frac, above, below);
    return {frac >= 0.9, buf};
}

const std::map<std::string, std::pair<std::string, std::function<Result()>>> kCriteria{
    {"c1", {"empty-cell probability bound", c1}},
    {"c2", {"cell-load concentration", c2}},
    {"c3", {"schedule soundness", c3}},
    {"c4", {"lambda fixed point", c4}},
    {"c5", {"dormancy scales as 1/G(1/n)", c5}},
    {"c6", {"example1 throughput", c6}},
    {"c7", {"example3 throughput", c7}},
    {"c8", {"regime classification", c8}},
    {"c9", {"throughput upper bounds", c9}},
    {"c10", {"flood reception constant", c10}},
    {"c11", {"success probability sandwich", c11}},
};

bool run_one(const std::string& id) {
    const auto& [title, fn] = kCriteria.at(id);
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
        r = fn();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", id.c_str(), title.c_str(), r.detail.c_str(), secs);
    std::fflush(stdout);
    return r.pass;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--cache") {
            g_cache = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            break;
        }
    if (args.empty()) args.push_back("all");
    const std::string what = args.front();

    if (what == "sweeps") {
        if (g_cache.empty()) {
            std::fprintf(stderr, "sweeps needs --cache DIR\n");
            return 2;
        }
        fs::remove_all(g_cache);
        for (const auto& sc : kScenarios) sweep(sc, false);
        for (const auto& sc : kScenarios) sweep(sc, true);
        return 0;
    }
    if (what == "all") {
        bool ok = true;
        for (int i = 1; i <= 11; ++i) ok = run_one("c" + std::to_string(i)) && ok;
        return ok ? 0 : 1;
    }
    if (!kCriteria.count(what)) {
        std::fprintf(stderr, "unknown criterion %s\n", what.c_str());
        return 2;
    }
    return run_one(what) ? 0 : 1;
}
