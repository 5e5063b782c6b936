#include "rdcap/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rdcap/errors.hpp"
#include "rdcap/topology.hpp"

namespace rdcap {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v, const std::string& key) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw InvalidConfig("bad number for " + key + ": '" + v + "'");
    return x;
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    const double x = to_double(v, key);
    if (!(x >= 0.0) || x != std::floor(x) || x > 1.8e19) throw InvalidConfig("bad count for " + key + ": '" + v + "'");
    if (v.find_first_of(".eE") == std::string::npos) {
        std::uint64_t u = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), u);
        if (ec == std::errc() && p == v.data() + v.size()) return u;
    }
    return static_cast<std::uint64_t>(x);
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string_view mode_name(SuccessMode m) { return m == SuccessMode::analytic ? "analytic" : "flooded"; }

Summary summarize(std::vector<double> v) {
    Summary s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    s.median = k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
    s.min = v.front();
    s.max = v.back();
    return s;
}

std::optional<ScalingFit> try_fit(const std::vector<SizeAggregate>& sizes, Summary SizeAggregate::*field) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : sizes)
        if (s.ok_points > 0 && (s.*field).median > 0.0) pts.emplace_back(static_cast<double>(s.n), (s.*field).median);
    if (pts.size() < 3) return std::nullopt;
    return fit_exponent(pts);
}

void run_pool(std::size_t workers, std::size_t count, const std::function<void(std::size_t)>& task) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < count; i = next++) task(i);
    };
    if (workers == 1) {
        loop();
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
}

nlohmann::json summary_json(const Summary& s) { return {{"median", s.median}, {"min", s.min}, {"max", s.max}}; }

} // namespace

ScenarioPreset scenario_presets(std::string_view name, std::optional<double> tau_coeff, double k_coeff) {
    if (name == "example1") return {TauModel::constant(tau_coeff.value_or(4.0)), GModelFamily{GModel::identity()}};
    if (name == "example2") {
        GModelFamily g;
        g.base = GModel::k_target(1.0);
        g.k_scales_with_sqrt_n = true;
        g.k_coeff = k_coeff;
        return {TauModel::inv_sqrt(tau_coeff.value_or(1024.0)), g};
    }
    if (name == "example3")
        return {TauModel::inv_sqrt(tau_coeff.value_or(1024.0)), GModelFamily{GModel::step_repair()}};
    throw InvalidConfig("unknown scenario '" + std::string(name) + "'");
}

ScenarioPreset ExperimentSpec::resolved() const {
    if (scenario == "custom") return {base.tau_model, gmodel};
    return scenario_presets(scenario, tau_coeff, k_coeff);
}

void ExperimentSpec::validate() const {
    if (n_values.size() < 2) throw InvalidConfig("n_values needs at least 2 sizes");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (n_values[i] < 2) throw InvalidConfig("every n must be >= 2");
        if (i > 0 && n_values[i] <= n_values[i - 1]) throw InvalidConfig("n_values must be strictly increasing");
    }
    if (replications < 1) throw InvalidConfig("replications must be >= 1");
    if (horizon_slots < 1000) throw InvalidConfig("horizon_slots must be >= 1000");
    if (max_horizon_slots < horizon_slots) throw InvalidConfig("max_horizon_slots must be >= horizon_slots");
    if (calibration_n_max < 2) throw InvalidConfig("calibration_n_max must be >= 2");
    if (calibration_rdp_slots < 8) throw InvalidConfig("calibration_rdp_slots must be >= 8");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw InvalidConfig("warmup_fraction must lie in [0, 1)");
    if (!(target_delivery > 0.0 && target_delivery <= 1.0)) throw InvalidConfig("target_delivery must lie in (0, 1]");
    if (!(theta_factor > 1.0)) throw InvalidConfig("theta_factor must be > 1");
    if (!(probe_min >= 2.0) || !(probe_max >= 100.0 * probe_min))
        throw InvalidConfig("probe range must span two decades above n = 2");
    const ScenarioPreset p = resolved();
    NetworkConfig c = base;
    c.tau_model = p.tau;
    for (std::size_t n : n_values) {
        c.n = n;
        c.validate();
    }
}

std::string ExperimentSpec::to_text() const {
    std::ostringstream os;
    auto kv = [&](std::string_view k, const std::string& v) { os << k << '=' << v << '\n'; };
    kv("w", fmt(base.w));
    kv("s_rreq", fmt(base.s_rreq));
    kv("delta", fmt(base.delta));
    kv("nu", fmt(base.nu));
    kv("theta", fmt(base.theta));
    kv("area_coeff", fmt(base.area_coeff));
    kv("path_loss_exponent", fmt(base.path_loss_exponent));
    kv("seed", std::to_string(base.seed));
    kv("tau_model", base.tau_model.to_string());
    std::string ns;
    for (std::size_t i = 0; i < n_values.size(); ++i) ns += (i ? "," : "") + std::to_string(n_values[i]);
    kv("n_values", ns);
    kv("replications", std::to_string(replications));
    kv("scenario", scenario);
    if (tau_coeff) kv("tau_coeff", fmt(*tau_coeff));
    kv("k_coeff", fmt(k_coeff));
    kv("gmodel", gmodel.to_string());
    kv("mode", std::string(mode_name(mode)));
    kv("horizon_slots", std::to_string(horizon_slots));
    kv("max_horizon_slots", std::to_string(max_horizon_slots));
    kv("calibration_n_max", std::to_string(calibration_n_max));
    kv("calibration_rdp_slots", std::to_string(calibration_rdp_slots));
    kv("calibration_isolated_floods", std::to_string(calibration_isolated_floods));
    kv("warmup_fraction", fmt(warmup_fraction));
    kv("target_delivery", fmt(target_delivery));
    kv("regime_threshold", fmt(regime_threshold));
    kv("theta_factor", fmt(theta_factor));
    kv("probe_min", fmt(probe_min));
    kv("probe_max", fmt(probe_max));
    return os.str();
}

std::string ExperimentSpec::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_text()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

ExperimentSpec parse_spec(std::string_view text) {
    ExperimentSpec s;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw InvalidConfig("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string val = trim(std::string_view(t).substr(eq + 1));
        if (key == "w") s.base.w = to_double(val, key);
        else if (key == "s_rreq") s.base.s_rreq = to_double(val, key);
        else if (key == "delta") s.base.delta = to_double(val, key);
        else if (key == "nu") s.base.nu = to_double(val, key);
        else if (key == "theta") s.base.theta = to_double(val, key);
        else if (key == "area_coeff") s.base.area_coeff = to_double(val, key);
        else if (key == "path_loss_exponent") s.base.path_loss_exponent = to_double(val, key);
        else if (key == "seed") s.base.seed = to_u64(val, key);
        else if (key == "tau_model") s.base.tau_model = TauModel::parse(val);
        else if (key == "n_values") {
            s.n_values.clear();
            std::istringstream ns(val);
            std::string item;
            while (std::getline(ns, item, ',')) s.n_values.push_back(to_u64(trim(item), key));
        } else if (key == "replications") s.replications = to_u64(val, key);
        else if (key == "scenario") s.scenario = val;
        else if (key == "tau_coeff") s.tau_coeff = to_double(val, key);
        else if (key == "k_coeff") s.k_coeff = to_double(val, key);
        else if (key == "gmodel") s.gmodel = GModelFamily::parse(val);
        else if (key == "mode") {
            if (val == "analytic") s.mode = SuccessMode::analytic;
            else if (val == "flooded") s.mode = SuccessMode::flooded;
            else throw InvalidConfig("mode must be analytic or flooded");
        } else if (key == "horizon_slots") s.horizon_slots = to_u64(val, key);
        else if (key == "max_horizon_slots") s.max_horizon_slots = to_u64(val, key);
        else if (key == "output_dir") s.output_dir = val;
        else if (key == "workers") s.workers = to_u64(val, key);
        else if (key == "calibration_n_max") s.calibration_n_max = to_u64(val, key);
        else if (key == "calibration_rdp_slots") s.calibration_rdp_slots = to_u64(val, key);
        else if (key == "calibration_isolated_floods") s.calibration_isolated_floods = to_u64(val, key);
        else if (key == "warmup_fraction") s.warmup_fraction = to_double(val, key);
        else if (key == "target_delivery") s.target_delivery = to_double(val, key);
        else if (key == "regime_threshold") s.regime_threshold = to_double(val, key);
        else if (key == "theta_factor") s.theta_factor = to_double(val, key);
        else if (key == "probe_min") s.probe_min = to_double(val, key);
        else if (key == "probe_max") s.probe_max = to_double(val, key);
        else throw InvalidConfig("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (s.scenario != "custom") scenario_presets(s.scenario);
    return s;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open spec file " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_spec(os.str());
}

std::uint64_t point_seed(std::uint64_t base_seed, std::size_t n, std::size_t replication) {
    return derive_seed(base_seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replication)});
}

std::uint64_t effective_horizon(const ExperimentSpec& spec, std::size_t n, const ReachCalibration& calibration) {
    const ScenarioPreset p = spec.resolved();
    const double nd = static_cast<double>(n);
    const double tau = p.tau.at(nd);
    const GModel g = p.gmodel.at(nd);
    double cycle = tau;
    if (!calibration.empty() && spec.base.nu > 0.0) {
        try {
            const RateFunction q = [&](double x) { return g_eval(g, calibration.mean_reach(x / nd, n)); };
            cycle += rdp_rates(q, nd, spec.base.nu, tau, spec.base.theta).xi;
        } catch (const std::exception&) {
            return spec.max_horizon_slots;
        }
    }
    const double pside = std::ceil((2.0 + spec.base.delta) * std::sqrt(5.0)) + 1.0;
    const double drain = static_cast<double>(cells_per_side(n)) * pside * pside / (1.0 - spec.base.theta);
    const double want = std::max({static_cast<double>(spec.horizon_slots), 10.0 * cycle, 10.0 * drain});
    return static_cast<std::uint64_t>(std::min(std::ceil(want), static_cast<double>(spec.max_horizon_slots)));
}

std::size_t RunRecord::failed_points() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.ok; }));
}

RunRecord run_sweep(const ExperimentSpec& spec, const ProgressFn& progress, const PointRunner& runner) {
    spec.validate();
    RunRecord rec;
    rec.spec_hash = spec.hash();
    rec.spec_text = spec.to_text();
    rec.started_at = utc_now();
    const ScenarioPreset preset = spec.resolved();
    const std::size_t workers =
        spec.workers ? spec.workers : std::max<std::size_t>(1, std::thread::hardware_concurrency());

    std::vector<std::size_t> cal_sizes;
    for (std::size_t n : spec.n_values) cal_sizes.push_back(std::min(n, spec.calibration_n_max));
    std::sort(cal_sizes.begin(), cal_sizes.end());
    cal_sizes.erase(std::unique(cal_sizes.begin(), cal_sizes.end()), cal_sizes.end());
    std::vector<ReachCalibration> cals(cal_sizes.size());
    std::vector<std::string> cal_errors(cal_sizes.size());
    const double l0 = spec.base.nu / spec.base.theta;
    const std::vector<double> loads{l0 / 4, l0 / 2, l0, 2 * l0, 4 * l0};
    run_pool(workers, cal_sizes.size(), [&](std::size_t i) {
        try {
            NetworkConfig c = spec.base;
            c.n = cal_sizes[i];
            c.tau_model = preset.tau;
            c.seed = derive_seed(spec.base.seed, {static_cast<std::uint64_t>(cal_sizes[i]), 0xca1ULL});
            cals[i] = calibrate_reach(c, loads, spec.calibration_rdp_slots, spec.calibration_isolated_floods);
        } catch (const std::exception& e) {
            cal_errors[i] = e.what();
        }
    });
    auto cal_index = [&](std::size_t n) {
        return static_cast<std::size_t>(
            std::lower_bound(cal_sizes.begin(), cal_sizes.end(), std::min(n, spec.calibration_n_max)) -
            cal_sizes.begin());
    };

    for (std::size_t n : spec.n_values)
        for (std::size_t r = 0; r < spec.replications; ++r) {
            PointResult p;
            p.n = n;
            p.replication = r;
            p.seed = point_seed(spec.base.seed, n, r);
            rec.points.push_back(std::move(p));
        }

    std::mutex mu;
    run_pool(workers, rec.points.size(), [&](std::size_t i) {
        PointResult& p = rec.points[i];
        try {
            const std::size_t ci = cal_index(p.n);
            if (!cal_errors[ci].empty()) throw std::runtime_error("calibration failed: " + cal_errors[ci]);
            SimulationConfig sc;
            sc.network = spec.base;
            sc.network.n = p.n;
            sc.network.seed = p.seed;
            sc.network.tau_model = preset.tau;
            sc.gmodel = preset.gmodel.at(static_cast<double>(p.n));
            sc.mode = spec.mode;
            sc.calibration = cals[ci];
            sc.warmup_fraction = spec.warmup_fraction;
            sc.target_delivery = spec.target_delivery;
            const std::uint64_t horizon = effective_horizon(spec, p.n, cals[ci]);
            p.metrics = runner ? runner(sc, horizon) : run_simulation(sc, horizon);
            p.ok = true;
        } catch (const std::exception& e) {
            p.ok = false;
            p.error = e.what();
        }
        if (progress) {
            std::lock_guard lock(mu);
            progress(p);
        }
    });

    for (std::size_t n : spec.n_values) {
        SizeAggregate a;
        a.n = n;
        std::vector<double> t, xi, tau, af, lam, q;
        for (const auto& p : rec.points) {
            if (p.n != n || !p.ok) continue;
            ++a.ok_points;
            t.push_back(p.metrics.throughput_per_node);
            xi.push_back(p.metrics.xi_measured);
            tau.push_back(p.metrics.tau_measured);
            af.push_back(p.metrics.active_fraction);
            lam.push_back(p.metrics.lambda_measured);
            q.push_back(p.metrics.q_measured);
        }
        a.throughput = summarize(t);
        a.xi = summarize(xi);
        a.tau = summarize(tau);
        a.active_fraction = summarize(af);
        a.lambda = summarize(lam);
        a.q = summarize(q);
        rec.sizes.push_back(a);
    }
    rec.finished_at = utc_now();
    if (rec.failed_points() == rec.points.size()) {
        std::string first = rec.points.empty() ? std::string("no points") : rec.points.front().error;
        throw std::runtime_error("all sweep points failed; first error: " + first);
    }

    rec.throughput_fit = try_fit(rec.sizes, &SizeAggregate::throughput);
    rec.xi_fit = try_fit(rec.sizes, &SizeAggregate::xi);
    rec.lambda_fit = try_fit(rec.sizes, &SizeAggregate::lambda);
    rec.verdict = classify_regime(preset.tau, preset.gmodel, probe_sizes(spec.probe_min, spec.probe_max, 9),
                                  spec.regime_threshold);

    std::vector<std::pair<double, double>> measured, reference;
    for (const auto& a : rec.sizes) {
        if (a.ok_points == 0) continue;
        const double n = static_cast<double>(a.n);
        const double lhs = spec.base.w * preset.tau.at(n) * g_eval(preset.gmodel.at(n), 1.0 / n);
        const double rhs = interference_bound(spec.base.w, n);
        double ref = std::min(lhs, rhs);
        if (rec.verdict->regime == Regime::rdp_limited) ref = lhs;
        else if (rec.verdict->regime == Regime::interference_limited) ref = rhs;
        measured.emplace_back(n, a.throughput.median);
        reference.emplace_back(n, ref);
    }
    rec.theta = check_theta(measured, reference, spec.theta_factor);
    return rec;
}

void write_points_csv(std::ostream& out, const RunRecord& record) {
    out << "n,seed,throughput_per_node,xi_measured,tau_measured,active_fraction,lambda_measured,q_measured\n";
    out << std::setprecision(12);
    for (const auto& p : record.points) {
        if (!p.ok) continue;
        const Metrics& m = p.metrics;
        out << p.n << ',' << p.seed << ',' << m.throughput_per_node << ',' << m.xi_measured << ',' << m.tau_measured
            << ',' << m.active_fraction << ',' << m.lambda_measured << ',' << m.q_measured << '\n';
    }
}

nlohmann::json to_json(const RunRecord& r, bool with_timestamps) {
    nlohmann::json j;
    j["spec_hash"] = r.spec_hash;
    j["spec"] = r.spec_text;
    j["generator"] = r.generator;
    if (with_timestamps) {
        j["started_at"] = r.started_at;
        j["finished_at"] = r.finished_at;
    }
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points) {
        nlohmann::json e{{"n", p.n}, {"replication", p.replication}, {"seed", p.seed}, {"ok", p.ok}};
        if (p.ok) {
            const Metrics& m = p.metrics;
            e["horizon"] = m.horizon;
            e["offered_rate"] = m.offered_rate;
            e["delivery_ratio"] = m.delivery_ratio;
            e["nbar_r"] = m.nbar_r;
            e["mean_reach"] = m.mean_reach;
            e["attempts"] = m.attempts;
            e["schedule_period"] = m.schedule_period;
        } else {
            e["error"] = p.error;
        }
        pts.push_back(std::move(e));
    }
    j["points"] = std::move(pts);
    nlohmann::json sizes = nlohmann::json::array();
    for (const auto& a : r.sizes)
        sizes.push_back({{"n", a.n},
                         {"ok_points", a.ok_points},
                         {"throughput_per_node", summary_json(a.throughput)},
                         {"xi_measured", summary_json(a.xi)},
                         {"tau_measured", summary_json(a.tau)},
                         {"active_fraction", summary_json(a.active_fraction)},
                         {"lambda_measured", summary_json(a.lambda)},
                         {"q_measured", summary_json(a.q)}});
    j["sizes"] = std::move(sizes);
    nlohmann::json fits = nlohmann::json::object();
    if (r.throughput_fit) fits["throughput_per_node"] = to_json(*r.throughput_fit);
    if (r.xi_fit) fits["xi_measured"] = to_json(*r.xi_fit);
    if (r.lambda_fit) fits["lambda_measured"] = to_json(*r.lambda_fit);
    j["fits"] = std::move(fits);
    if (r.verdict) j["verdict"] = to_json(*r.verdict);
    if (r.theta) j["theta_check"] = to_json(*r.theta);
    return j;
}

void persist_run(const RunRecord& record, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / "sweep.csv", std::ios::app);
        if (!csv) throw std::runtime_error("cannot write " + (dir / "sweep.csv").string());
        if (std::filesystem::file_size(dir / "sweep.csv") == 0) {
            write_points_csv(csv, record);
        } else {
            std::ostringstream os;
            write_points_csv(os, record);
            const std::string body = os.str();
            csv << body.substr(body.find('\n') + 1);
        }
    }
    std::ofstream js(dir / "sweep.json");
    if (!js) throw std::runtime_error("cannot write " + (dir / "sweep.json").string());
    js << to_json(record).dump(2) << '\n';
}

std::vector<std::pair<double, double>> read_csv_columns(std::istream& in, std::string_view x, std::string_view y) {
    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
        return out;
    };
    std::string line;
    if (!std::getline(in, line)) throw InvalidConfig("empty csv");
    const auto header = split(line);
    auto column = [&](std::string_view name) {
        if (const auto it = std::find(header.begin(), header.end(), name); it != header.end())
            return static_cast<std::size_t>(it - header.begin());
        std::size_t hits = 0, at = 0;
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i].starts_with(name)) ++hits, at = i;
        if (hits != 1) throw InvalidConfig("csv has no unique column '" + std::string(name) + "'");
        return at;
    };
    const std::size_t cx = column(x);
    const std::size_t cy = column(y);
    std::vector<std::pair<double, double>> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto row = split(line);
        if (row.size() <= std::max(cx, cy)) throw InvalidConfig("short csv row");
        out.emplace_back(to_double(row[cx], std::string(x)), to_double(row[cy], std::string(y)));
    }
    return out;
}

} // namespace rdcap
