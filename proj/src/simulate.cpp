#include "rdcap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

#include "rdcap/errors.hpp"
#include "rdcap/mac.hpp"
#include "rdcap/routing.hpp"
#include "rdcap/topology.hpp"

namespace rdcap {

double ReachCalibration::chat_at(double load) const {
    if (chat_by_load.empty()) throw DomainError("reach calibration is empty");
    const auto& t = chat_by_load;
    if (load <= t.front().first) return t.front().second;
    if (load >= t.back().first) return t.back().second;
    auto hi = std::upper_bound(t.begin(), t.end(), load, [](double v, const auto& e) { return v < e.first; });
    auto lo = hi - 1;
    const double u = std::log(load / lo->first) / std::log(hi->first / lo->first);
    return std::exp(std::log(lo->second) + u * (std::log(hi->second) - std::log(lo->second)));
}

double ReachCalibration::mean_reach(double load, std::size_t n_nodes) const {
    if (n_nodes < 2) return 0.0;
    if (!(load > 0.0)) return f_isolated;
    const double share = chat_at(load) / (load * static_cast<double>(n_nodes - 1));
    return std::clamp(std::min(f_isolated, share), 0.0, 1.0);
}

ReachCalibration calibrate_reach(const NetworkConfig& config, std::span<const double> loads, std::size_t rdp_slots,
                                 std::size_t isolated_floods) {
    config.validate();
    if (config.n < 2) throw InvalidConfig("calibration needs at least two nodes");
    NetworkConfig cal = config;
    cal.seed = stream_seed(config.seed, Stream::calibration);
    const NodePlacement placement = place_nodes(cal);
    Rng rng(derive_seed(cal.seed, {0x63616cULL}));
    const std::size_t n = config.n;

    ReachCalibration out;
    out.n = n;

    double sum_f = 0.0;
    for (std::size_t i = 0; i < isolated_floods; ++i) {
        const auto origin = static_cast<std::uint32_t>(rng.below(n));
        sum_f += run_flood(origin, placement, cal, std::numeric_limits<std::size_t>::max()).f;
    }
    out.f_isolated = isolated_floods > 0 ? sum_f / static_cast<double>(isolated_floods) : 1.0;

    std::vector<double> sorted(loads.begin(), loads.end());
    std::sort(sorted.begin(), sorted.end());
    for (double load : sorted) {
        if (!(load > 0.0 && load <= 1.0)) throw InvalidConfig("calibration load must lie in (0, 1]");
        FloodEngine engine(placement, cal);
        const std::size_t skip = rdp_slots / 4;
        std::uint64_t rx_at_skip = 0;
        for (std::size_t s = 0; s < rdp_slots; ++s) {
            for (std::uint32_t v = 0; v < n; ++v)
                if (rng.bernoulli(load)) engine.initiate(v);
            engine.step();
            if (s + 1 == skip) rx_at_skip = engine.first_receptions();
        }
        const double measured = static_cast<double>(engine.first_receptions() - rx_at_skip) /
                                static_cast<double>((rdp_slots - skip) * n);
        out.chat_by_load.emplace_back(load, std::max(measured, 1e-12));
    }
    return out;
}

SuccessMode success_mode(const SimulationConfig& config) {
    if (config.mode == SuccessMode::analytic && config.calibration.empty())
        throw InvalidConfig("analytic success mode needs a reach calibration");
    return config.mode;
}

bool draw_success(const GModel& model, double f, Rng& rng) {
    const double g = g_eval(model, std::clamp(f, 0.0, 1.0));
    if (g >= 1.0) return true;
    if (g <= 0.0) return false;
    return rng.bernoulli(g);
}

bool is_rdp_slot(std::uint64_t t, double theta) {
    return std::floor(static_cast<double>(t + 1) * theta) != std::floor(static_cast<double>(t) * theta);
}

std::uint64_t next_rdp_slot(std::uint64_t t, double theta) {
    while (!is_rdp_slot(t, theta)) ++t;
    return t;
}

std::uint64_t data_slot_index(std::uint64_t t, double theta) {
    return t - static_cast<std::uint64_t>(std::floor(static_cast<double>(t) * theta));
}

double active_fraction(double tau, double xi) {
    if (!(tau >= 0.0) || !(xi >= 0.0)) throw DomainError("active_fraction: negative duration");
    if (tau + xi == 0.0) throw DomainError("active_fraction: tau + xi = 0");
    return tau / (tau + xi);
}

namespace {

struct DInterval {
    std::uint32_t node;
    std::uint32_t src_cell;
    std::uint32_t dst_cell;
    std::uint32_t start;
    std::uint32_t end;
};

enum class EventKind : std::uint8_t { d_end, n_end, attempt };

struct Event {
    std::uint64_t t;
    std::uint64_t seq;
    std::uint32_t node;
    std::uint32_t epoch;
    EventKind kind;
    bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
};

struct ControlResult {
    std::vector<DInterval> intervals;
    double d_time = 0.0;
    std::uint64_t d_to_n = 0;
    std::uint64_t n_to_d = 0;
    double attempts = 0.0;
    std::uint64_t successes = 0;
    double reach_sum = 0.0;  // sum of f over counted attempts, mean after finish()
    double resolved = 0.0;   // flooded mode: counted attempts whose flood closed
    std::uint64_t first_receptions = 0;
    std::vector<double> flood_f;
    std::vector<StatePeriod> timeline;
};

// Node state machine and route discovery. Produces the D intervals the data plane replays.
class ControlPlane {
public:
    ControlPlane(const SimulationConfig& cfg, const NodePlacement& placement, const Grid& grid,
                 std::uint64_t horizon, std::uint64_t window_start)
        : cfg_(cfg),
          net_(cfg.network),
          placement_(placement),
          grid_(grid),
          n_(cfg.network.n),
          horizon_(horizon),
          w0_(window_start),
          rng_(stream_seed(cfg.network.seed, Stream::control)),
          flood_rng_(stream_seed(cfg.network.seed, Stream::floods)) {
        Rng dest_rng(stream_seed(net_.seed, Stream::destinations));
        dest_ = assign_destinations(n_, dest_rng);
        mode_.assign(n_, NodeMode::n);
        epoch_.assign(n_, 0);
        since_.assign(n_, 0);
        d_src_.assign(n_, 0);
        d_dst_.assign(n_, 0);
        n_pos_.resize(n_);
        for (std::uint32_t i = 0; i < n_; ++i) {
            n_list_.push_back(i);
            n_pos_[i] = i;
        }
        const double tau = std::max(1.0, net_.tau());
        d_end_prob_ = 1.0 / tau;
    }

    ControlResult run() {
        if (cfg_.mode == SuccessMode::flooded) engine_.emplace(placement_, net_);
        for (std::uint32_t i = 0; i < n_; ++i) schedule_n(i, 0);
        if (cfg_.mode == SuccessMode::analytic) run_events();
        else run_slots();
        finish();
        return std::move(res_);
    }

private:
    void push(std::uint64_t t, std::uint32_t node, EventKind kind) {
        if (t >= horizon_) return;
        events_.push({t, seq_++, node, epoch_[node], kind});
    }

    double overlap(std::uint64_t s, std::uint64_t e) const {
        const std::uint64_t a = std::max(s, w0_), b = std::min(e, horizon_);
        return b > a ? static_cast<double>(b - a) : 0.0;
    }

    void remove_from_n_list(std::uint32_t i) {
        const std::uint32_t pos = n_pos_[i];
        const std::uint32_t last = n_list_.back();
        n_list_[pos] = last;
        n_pos_[last] = pos;
        n_list_.pop_back();
    }

    // A node losing its route trades destinations with a random node still searching,
    // which keeps the destination map a derangement without disturbing active routes.
    void new_destination(std::uint32_t i) {
        if (n_list_.size() < 2) return;
        for (int tries = 0; tries < 4; ++tries) {
            const std::uint32_t k = n_list_[rng_.below(n_list_.size())];
            if (k == i || dest_[k] == i || dest_[i] == k) continue;
            std::swap(dest_[i], dest_[k]);
            return;
        }
    }

    // Analytic mode: attempts arrive at rate nu and each succeeds with G(f̄) for the current
    // load, so the N period is geometric with parameter nu * p, ending in an RDP slot.
    void schedule_n(std::uint32_t i, std::uint64_t t) {
        if (cfg_.mode == SuccessMode::flooded) {
            if (net_.nu > 0.0) push(t + rng_.geometric(net_.nu), i, EventKind::attempt);
            return;
        }
        const double load = net_.nu * static_cast<double>(n_list_.size()) / (net_.theta * static_cast<double>(n_));
        const double f = cfg_.calibration.mean_reach(load, n_);
        const double p = g_eval(cfg_.gmodel, f);
        if (!(net_.nu > 0.0) || !(p > 0.0)) return;
        const std::uint64_t d = rng_.geometric(net_.nu * p);
        const std::uint64_t end = next_rdp_slot(t + d - 1, net_.theta);
        const double span = static_cast<double>(end - t + 1);
        const double fail_rate = net_.nu * (1.0 - p) / (1.0 - net_.nu * p);
        const double attempts = 1.0 + (span - 1.0) * (std::isfinite(fail_rate) ? fail_rate : 0.0);
        const double counted = attempts * overlap(t, end + 1) / span;
        res_.attempts += counted;
        res_.reach_sum += counted * f;
        push(end, i, EventKind::n_end);
    }

    void enter_d(std::uint32_t i, std::uint64_t t) {
        if (t >= horizon_) return;
        record(i, NodeMode::n, since_[i], t);
        remove_from_n_list(i);
        mode_[i] = NodeMode::d;
        ++epoch_[i];
        since_[i] = t;
        if (t >= w0_) ++res_.n_to_d;
        d_src_[i] = grid_.cell_of[i];
        d_dst_[i] = grid_.cell_of[dest_[i]];
        push(t + rng_.geometric(d_end_prob_), i, EventKind::d_end);
    }

    void enter_n(std::uint32_t i, std::uint64_t t) {
        close_d(i, t);
        mode_[i] = NodeMode::n;
        ++epoch_[i];
        since_[i] = t;
        n_pos_[i] = static_cast<std::uint32_t>(n_list_.size());
        n_list_.push_back(i);
        if (t >= w0_) ++res_.d_to_n;
        new_destination(i);
        schedule_n(i, t);
    }

    void close_d(std::uint32_t i, std::uint64_t t) {
        const std::uint64_t s = since_[i];
        res_.d_time += overlap(s, t);
        res_.intervals.push_back({i, d_src_[i], d_dst_[i], static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(t)});
        record(i, NodeMode::d, s, t);
    }

    void record(std::uint32_t i, NodeMode m, std::uint64_t s, std::uint64_t e) {
        if (cfg_.keep_timeline) res_.timeline.push_back({i, m, s, e});
    }

    void handle(const Event& ev) {
        if (ev.epoch != epoch_[ev.node]) return;
        switch (ev.kind) {
        case EventKind::d_end: enter_n(ev.node, ev.t); break;
        case EventKind::n_end:
            if (ev.t >= w0_) ++res_.successes;
            enter_d(ev.node, ev.t + 1);
            break;
        case EventKind::attempt:
            pending_.push_back(ev.node);
            push(ev.t + rng_.geometric(net_.nu), ev.node, EventKind::attempt);
            break;
        }
    }

    void run_events() {
        while (!events_.empty()) {
            const Event ev = events_.top();
            events_.pop();
            handle(ev);
        }
    }

    void run_slots() {
        std::uint64_t rx_window_start = 0;
        for (std::uint64_t t = 0; t < horizon_; ++t) {
            if (t == w0_) rx_window_start = engine_->first_receptions();
            while (!events_.empty() && events_.top().t <= t) {
                const Event ev = events_.top();
                events_.pop();
                handle(ev);
            }
            if (!is_rdp_slot(t, net_.theta)) continue;
            for (std::uint32_t i : pending_) {
                if (mode_[i] != NodeMode::n) continue;
                const std::uint64_t id = engine_->initiate(i);
                if (flood_owner_.size() <= id) flood_owner_.resize(id + 1);
                flood_owner_[id] = {i, epoch_[i], t >= w0_};
                if (t >= w0_) res_.attempts += 1.0;
            }
            pending_.clear();
            for (const RdpOutcome& o : engine_->step()) {
                const FloodOwner owner = flood_owner_[o.rdp_id];
                const bool success = draw_success(cfg_.gmodel, o.f, flood_rng_);
                if (owner.counted) {
                    res_.resolved += 1.0;
                    res_.reach_sum += o.f;
                    res_.flood_f.push_back(o.f);
                    if (success) ++res_.successes;
                }
                if (success && mode_[owner.node] == NodeMode::n && epoch_[owner.node] == owner.epoch)
                    enter_d(owner.node, t + 1);
            }
        }
        res_.first_receptions = engine_->first_receptions() - rx_window_start;
    }

    void finish() {
        for (std::uint32_t i = 0; i < n_; ++i) {
            if (mode_[i] == NodeMode::d) close_d(i, horizon_);
            else record(i, NodeMode::n, since_[i], horizon_);
        }
        const double counted = cfg_.mode == SuccessMode::flooded ? res_.resolved : res_.attempts;
        if (counted > 0.0) res_.reach_sum /= counted;
    }

    struct FloodOwner {
        std::uint32_t node = 0;
        std::uint32_t epoch = 0;
        bool counted = false;
    };

    const SimulationConfig& cfg_;
    const NetworkConfig& net_;
    const NodePlacement& placement_;
    const Grid& grid_;
    std::size_t n_;
    std::uint64_t horizon_;
    std::uint64_t w0_;
    Rng rng_;
    Rng flood_rng_;
    double d_end_prob_ = 1.0;

    std::vector<std::uint32_t> dest_;
    std::vector<NodeMode> mode_;
    std::vector<std::uint32_t> epoch_;
    std::vector<std::uint64_t> since_;
    std::vector<std::uint32_t> d_src_;
    std::vector<std::uint32_t> d_dst_;
    std::vector<std::uint32_t> n_list_;
    std::vector<std::uint32_t> n_pos_;

    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::uint64_t seq_ = 0;

    std::optional<FloodEngine> engine_;
    std::vector<std::uint32_t> pending_;
    std::vector<FloodOwner> flood_owner_;

    ControlResult res_;
};

struct Packet {
    std::uint32_t src_cell;
    std::uint32_t dst_cell;
    std::uint32_t gen;
    std::uint32_t hop;
};

struct Replay {
    double generated = 0.0;   // packets generated in the window
    double delivered = 0.0;   // of those, delivered before the drain ends
    double ratio() const { return generated > 0.0 ? delivered / generated : 1.0; }
};

// Data plane for one offered rate: sources in D accumulate `rate` packets of credit per slot,
// each cell forwards the head of its FIFO when its color comes up in a data slot.
class DataPlane {
public:
    DataPlane(const std::vector<DInterval>& intervals, const Grid& grid, const Schedule& schedule, double theta,
              std::uint64_t horizon, std::uint64_t window_start, std::uint64_t seed)
        : grid_(grid), theta_(theta), horizon_(horizon), w0_(window_start), classes_(schedule.classes()) {
        // Random initial credit makes the expected packet count exactly rate x D time.
        Rng rng(seed);
        start_credit_.resize(grid.cell_of.size());
        for (double& c : start_credit_) c = rng.uniform();
        period_ = schedule.period;
        by_node_ = intervals;
        std::sort(by_node_.begin(), by_node_.end(), [](const DInterval& a, const DInterval& b) {
            return a.node != b.node ? a.node < b.node : a.start < b.start;
        });
        drain_ = static_cast<std::uint64_t>(4.0 * static_cast<double>(grid.m) * period_ / (1.0 - theta));
    }

    Replay run(double rate) const {
        std::vector<Packet> packets;
        double credit = 0.0;
        std::uint32_t node = std::numeric_limits<std::uint32_t>::max();
        for (const DInterval& iv : by_node_) {
            if (iv.node != node) {
                node = iv.node;
                credit = start_credit_[node];
            }
            const double len = static_cast<double>(iv.end - iv.start);
            const double total = credit + len * rate;
            const auto k = static_cast<std::uint64_t>(std::floor(total));
            for (std::uint64_t j = 1; j <= k; ++j) {
                const double at = std::ceil((static_cast<double>(j) - credit) / rate) - 1.0;
                const auto off = static_cast<std::uint32_t>(std::clamp(at, 0.0, len - 1.0));
                packets.push_back({iv.src_cell, iv.dst_cell, iv.start + off, 0});
            }
            credit = total - static_cast<double>(k);
        }
        std::sort(packets.begin(), packets.end(), [](const Packet& a, const Packet& b) { return a.gen < b.gen; });

        Replay out;
        for (const Packet& p : packets)
            if (p.gen >= w0_) out.generated += 1.0;
        if (packets.empty()) return out;

        std::vector<std::deque<Packet>> queues(grid_.cell_count());
        std::size_t queued = 0, next = 0;
        const std::uint64_t end = horizon_ + drain_;
        std::uint64_t t = packets.front().gen;
        while (t < end) {
            while (next < packets.size() && packets[next].gen <= t) {
                queues[packets[next].src_cell].push_back(packets[next]);
                ++queued;
                ++next;
            }
            if (queued == 0) {
                if (next >= packets.size()) break;
                t = packets[next].gen;
                continue;
            }
            if (!is_rdp_slot(t, theta_)) {
                const auto color = static_cast<std::uint32_t>(data_slot_index(t, theta_) % period_);
                if (color < classes_.size()) {
                    for (std::uint32_t cell : classes_[color]) {
                        auto& q = queues[cell];
                        if (q.empty()) continue;
                        Packet p = q.front();
                        q.pop_front();
                        ++p.hop;
                        const std::size_t len = l_path_length(p.src_cell, p.dst_cell, grid_.m);
                        const std::size_t needed = len > 1 ? len - 1 : 1;
                        if (p.hop >= needed) {
                            --queued;
                            if (p.gen >= w0_) out.delivered += 1.0;
                        } else {
                            queues[l_path_cell(p.src_cell, p.dst_cell, grid_.m, p.hop)].push_back(p);
                        }
                    }
                }
            }
            ++t;
        }
        return out;
    }

private:
    const Grid& grid_;
    double theta_;
    std::uint64_t horizon_;
    std::uint64_t w0_;
    std::vector<std::vector<std::uint32_t>> classes_;
    std::uint32_t period_ = 1;
    std::vector<DInterval> by_node_;
    std::vector<double> start_credit_;
    std::uint64_t drain_ = 0;
};

} // namespace

Metrics run_simulation(const SimulationConfig& config, std::uint64_t horizon_slots) {
    const NetworkConfig& net = config.network;
    net.validate();
    success_mode(config);
    if (net.n < 2) throw InvalidConfig("simulation needs at least two nodes");
    if (horizon_slots < 1000) throw InvalidConfig("horizon must be at least 1000 slots");
    if (horizon_slots >= std::numeric_limits<std::uint32_t>::max() / 2) throw InvalidConfig("horizon too long");
    if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction < 1.0))
        throw InvalidConfig("warmup_fraction must lie in [0, 1)");

    const NodePlacement placement = place_nodes(net);
    const Grid grid = build_grid(placement, net);
    const Schedule schedule = lattice_schedule(grid, net);

    const std::uint64_t horizon = horizon_slots;
    const auto w0 = static_cast<std::uint64_t>(std::floor(config.warmup_fraction * static_cast<double>(horizon)));
    const double window = static_cast<double>(horizon - w0);
    const double n = static_cast<double>(net.n);

    ControlPlane control(config, placement, grid, horizon, w0);
    ControlResult cr = control.run();

    Metrics m;
    m.horizon = horizon;
    m.window_slots = horizon - w0;
    m.window_rdp_slots = static_cast<std::uint64_t>(std::floor(static_cast<double>(horizon) * net.theta) -
                                                    std::floor(static_cast<double>(w0) * net.theta));
    m.schedule_period = schedule.period;
    m.d_periods = cr.d_to_n;
    m.n_periods = cr.n_to_d;
    m.successes = cr.successes;
    m.active_fraction = cr.d_time / (n * window);
    const double n_time = n * window - cr.d_time;
    const double inf = std::numeric_limits<double>::infinity();
    m.xi_measured = cr.n_to_d > 0 ? n_time / static_cast<double>(cr.n_to_d) : inf;
    m.tau_measured = cr.d_to_n > 0 ? cr.d_time / static_cast<double>(cr.d_to_n) : inf;
    m.attempts = cr.attempts;
    m.lambda_measured = cr.attempts / window;
    m.mean_reach = cr.reach_sum;

    if (config.mode == SuccessMode::flooded) {
        m.q_measured = cr.resolved > 0.0 ? static_cast<double>(cr.successes) / cr.resolved : 0.0;
        m.nbar_r = m.window_rdp_slots > 0
                       ? static_cast<double>(cr.first_receptions) / static_cast<double>(m.window_rdp_slots)
                       : 0.0;
        if (!cr.flood_f.empty()) {
            std::vector<RdpOutcome> outs(cr.flood_f.size());
            for (std::size_t i = 0; i < outs.size(); ++i) outs[i].f = cr.flood_f[i];
            m.floods = flood_stats(outs, net.n, std::max<std::uint64_t>(1, m.window_rdp_slots));
            m.floods.nbar_r = m.nbar_r;
            m.floods.chat = m.nbar_r / n;
        }
    } else {
        m.q_measured = cr.attempts > 0.0 ? static_cast<double>(cr.successes) / cr.attempts : 0.0;
        // Little's law: first receptions per RDP slot = RDP arrivals per RDP slot x mean reach x (n - 1).
        m.nbar_r = m.lambda_measured / net.theta * m.mean_reach * (n - 1.0);
    }

    if (config.measure_throughput || config.offered_rate) {
        const DataPlane plane(cr.intervals, grid, schedule, net.theta, horizon, w0,
                              derive_seed(net.seed, {static_cast<std::uint64_t>(Stream::control), 0x646174ULL}));
        const double cap = (1.0 - net.theta) / static_cast<double>(schedule.period);
        const auto ok = [&](const Replay& r) { return r.ratio() >= config.target_delivery; };

        double best = 0.0;
        Replay best_run;
        if (config.offered_rate) {
            best = *config.offered_rate;
            best_run = plane.run(best);
        } else {
            Replay top = plane.run(cap);
            if (ok(top)) {
                best = cap;
                best_run = top;
            } else {
                double hi = cap, lo = cap / 4.0;
                Replay low = plane.run(lo);
                for (int i = 0; i < 10 && !ok(low); ++i) {
                    hi = lo;
                    lo /= 4.0;
                    low = plane.run(lo);
                }
                if (ok(low)) {
                    best = lo;
                    best_run = low;
                    for (int i = 0; i < config.bisection_steps; ++i) {
                        const double mid = std::sqrt(lo * hi);
                        Replay r = plane.run(mid);
                        if (ok(r)) {
                            lo = mid;
                            best = mid;
                            best_run = r;
                        } else {
                            hi = mid;
                        }
                    }
                }
            }
        }
        m.offered_rate = best;
        m.delivery_ratio = best_run.ratio();
        m.generated_bits = best_run.generated * net.s_rreq;
        m.delivered_bits = best_run.delivered * net.s_rreq;
        m.throughput_per_node = m.delivered_bits / (n * window * net.slot_length());
    }

    m.timeline = std::move(cr.timeline);
    return m;
}

} // namespace rdcap
