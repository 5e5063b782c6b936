#include "rdcap/rdp_flood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <utility>

#include "rdcap/errors.hpp"

namespace rdcap {

FloodEngine::FloodEngine(const NodePlacement& placement, const NetworkConfig& config, FloodEngineOptions options)
    : placement_(&placement), n_(placement.size()), options_(options) {
    const double radius = config.reception_radius();
    unbounded_ = !std::isfinite(radius);
    radius2_ = radius * radius;
    if (!unbounded_)
        buckets_per_side_ = static_cast<std::uint32_t>(std::clamp(std::floor(1.0 / radius), 1.0, 2048.0));

    const std::size_t buckets = static_cast<std::size_t>(buckets_per_side_) * buckets_per_side_;
    node_bucket_.resize(n_);
    bucket_start_.assign(buckets + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        const Point p = placement.positions[i];
        const auto axis = [this](double c) {
            const auto b = static_cast<long>(c * buckets_per_side_);
            return static_cast<std::uint32_t>(std::clamp<long>(b, 0, buckets_per_side_ - 1));
        };
        node_bucket_[i] = axis(p.y) * buckets_per_side_ + axis(p.x);
        ++bucket_start_[node_bucket_[i] + 1];
    }
    for (std::size_t b = 1; b <= buckets; ++b) bucket_start_[b] += bucket_start_[b - 1];
    bucket_nodes_.resize(n_);
    std::vector<std::uint32_t> fill(bucket_start_.begin(), bucket_start_.end() - 1);
    for (std::uint32_t i = 0; i < n_; ++i) bucket_nodes_[fill[node_bucket_[i]]++] = i;

    queue_.resize(n_);
    in_busy_.assign(n_, 0);
    transmitting_.assign(n_, 0);
    best_d2_.assign(n_, std::numeric_limits<double>::infinity());
    best_tx_.assign(n_, 0);
    tx_flood_.assign(n_, 0);
}

bool FloodEngine::test_and_set(Flood& fl, std::uint32_t node) {
    std::uint64_t& word = fl.seen[node >> 6];
    const std::uint64_t bit = std::uint64_t{1} << (node & 63);
    if (word & bit) return false;
    word |= bit;
    return true;
}

void FloodEngine::enqueue(std::uint32_t node, std::uint64_t id) {
    queue_[node].push_back(id);
    ++floods_[id].copies;
    if (!in_busy_[node]) {
        in_busy_[node] = 1;
        busy_.push_back(node);
    }
}

std::uint64_t FloodEngine::initiate(std::uint32_t origin) {
    if (origin >= n_) throw DomainError("flood origin out of range");
    const std::uint64_t id = floods_.size();
    Flood fl;
    fl.open = true;
    fl.outcome.rdp_id = id;
    fl.outcome.origin = origin;
    fl.outcome.start_slot = slot_ + 1;
    if (!spare_bits_.empty()) {
        fl.seen = std::move(spare_bits_.back());
        spare_bits_.pop_back();
        std::fill(fl.seen.begin(), fl.seen.end(), 0);
    } else {
        fl.seen.assign((n_ + 63) / 64, 0);
    }
    floods_.push_back(std::move(fl));
    test_and_set(floods_.back(), origin);
    active_.push_back(id);
    enqueue(origin, id);
    return id;
}

RdpOutcome FloodEngine::close(std::uint64_t id, bool truncated) {
    Flood& fl = floods_[id];
    fl.open = false;
    fl.outcome.truncated = truncated;
    fl.outcome.f = n_ > 1 ? static_cast<double>(fl.outcome.reached) / static_cast<double>(n_ - 1) : 0.0;
    spare_bits_.push_back(std::move(fl.seen));
    fl.seen = {};
    RdpOutcome out = std::move(fl.outcome);
    fl.outcome = {};
    return out;
}

std::vector<RdpOutcome> FloodEngine::step() {
    ++slot_;
    const auto& pos = placement_->positions;

    // Transmit: each busy node sends its oldest RREQ that still belongs to an open flood.
    std::vector<std::uint32_t> tx;
    std::vector<std::uint32_t> still_busy;
    for (std::uint32_t node : busy_) {
        auto& q = queue_[node];
        while (!q.empty() && !floods_[q.front()].open) q.pop_front();
        if (q.empty()) {
            in_busy_[node] = 0;
            continue;
        }
        const std::uint64_t id = q.front();
        q.pop_front();
        --floods_[id].copies;
        tx.push_back(node);
        tx_flood_[node] = id;
        transmitting_[node] = 1;
        ++transmissions_;
        if (options_.trace) trace_.push_back({slot_, id, node, true});
        if (q.empty()) in_busy_[node] = 0;
        else still_busy.push_back(node);
    }
    busy_ = std::move(still_busy);

    for (std::uint64_t id : active_) floods_[id].outcome.first_receptions_per_slot.push_back(0);

    // Capture: every listening node keeps the nearest transmitter inside its disk.
    const long bps = buckets_per_side_;
    for (std::uint32_t t : tx) {
        const Point pt = pos[t];
        const long bx = node_bucket_[t] % bps, by = node_bucket_[t] / bps;
        for (long y = std::max(0L, by - 1); y <= std::min(bps - 1, by + 1); ++y)
            for (long x = std::max(0L, bx - 1); x <= std::min(bps - 1, bx + 1); ++x) {
                const auto b = static_cast<std::size_t>(y * bps + x);
                for (std::uint32_t i = bucket_start_[b]; i < bucket_start_[b + 1]; ++i) {
                    const std::uint32_t v = bucket_nodes_[i];
                    if (transmitting_[v]) continue;
                    const double dx = pos[v].x - pt.x, dy = pos[v].y - pt.y;
                    const double d2 = dx * dx + dy * dy;
                    if (!unbounded_ && d2 > radius2_) continue;
                    if (best_d2_[v] == std::numeric_limits<double>::infinity()) touched_.push_back(v);
                    if (d2 < best_d2_[v] || (d2 == best_d2_[v] && t < best_tx_[v])) {
                        best_d2_[v] = d2;
                        best_tx_[v] = t;
                    }
                }
            }
    }

    for (std::uint32_t v : touched_) {
        const std::uint64_t id = tx_flood_[best_tx_[v]];
        best_d2_[v] = std::numeric_limits<double>::infinity();
        Flood& fl = floods_[id];
        if (!test_and_set(fl, v)) continue;
        ++fl.outcome.reached;
        ++fl.outcome.first_receptions_per_slot.back();
        ++first_receptions_;
        if (options_.trace) trace_.push_back({slot_, id, v, false});
        enqueue(v, id);
    }
    touched_.clear();
    for (std::uint32_t t : tx) transmitting_[t] = 0;

    std::vector<RdpOutcome> closed;
    std::vector<std::uint64_t> remaining;
    for (std::uint64_t id : active_) {
        Flood& fl = floods_[id];
        ++fl.outcome.slots_used;
        if (fl.copies == 0) closed.push_back(close(id, false));
        else if (options_.slot_budget > 0 && fl.outcome.slots_used >= options_.slot_budget)
            closed.push_back(close(id, true));
        else remaining.push_back(id);
    }
    active_ = std::move(remaining);
    return closed;
}

std::vector<RdpOutcome> FloodEngine::close_all() {
    std::vector<RdpOutcome> closed;
    for (std::uint64_t id : active_) closed.push_back(close(id, floods_[id].copies > 0));
    active_.clear();
    return closed;
}

RdpOutcome run_flood(std::uint32_t origin, const NodePlacement& placement, const NetworkConfig& config,
                     std::size_t slot_budget) {
    const std::uint32_t origins[] = {origin};
    return run_concurrent_floods(origins, placement, config, slot_budget).outcomes.front();
}

ConcurrentFloods run_concurrent_floods(std::span<const std::uint32_t> origins, const NodePlacement& placement,
                                       const NetworkConfig& config, std::size_t slot_budget) {
    if (placement.size() < 2) throw DomainError("flood needs at least two nodes");
    if (origins.empty()) throw DomainError("no flood origins");
    if (slot_budget < 1) throw DomainError("slot budget must be >= 1");
    FloodEngine engine(placement, config, {slot_budget, false});
    for (std::uint32_t o : origins) engine.initiate(o);

    std::vector<RdpOutcome> outcomes(origins.size());
    auto take = [&](std::vector<RdpOutcome>&& closed) {
        for (auto& o : closed) outcomes[o.rdp_id] = std::move(o);
    };
    while (!engine.idle()) take(engine.step());

    ConcurrentFloods result;
    result.stats = flood_stats(outcomes, placement.size(), engine.slot());
    result.outcomes = std::move(outcomes);
    return result;
}

FloodStats flood_stats(std::span<const RdpOutcome> outcomes, std::size_t n, std::size_t rdp_slots) {
    if (outcomes.empty()) throw DomainError("flood_stats: no outcomes");
    FloodStats s;
    s.floods = outcomes.size();
    std::vector<double> fs;
    fs.reserve(outcomes.size());
    double total_rx = 0.0;
    std::size_t first = std::numeric_limits<std::size_t>::max(), last = 0;
    for (const auto& o : outcomes) {
        fs.push_back(o.f);
        total_rx += static_cast<double>(o.reached);
        first = std::min(first, o.start_slot);
        last = std::max(last, o.start_slot + o.slots_used);
    }
    double sum = 0.0;
    for (double f : fs) sum += f;
    s.mean_f = sum / static_cast<double>(fs.size());

    std::sort(fs.begin(), fs.end());
    const std::size_t k = fs.size();
    s.median_f = k % 2 ? fs[k / 2] : 0.5 * (fs[k / 2 - 1] + fs[k / 2]);
    s.gamma_hat = s.mean_f > 0.0 ? s.median_f / s.mean_f : 0.0;

    const std::size_t slots = rdp_slots > 0 ? rdp_slots : std::max<std::size_t>(1, last - first);
    s.nbar_r = total_rx / static_cast<double>(slots);
    s.chat = n > 0 ? s.nbar_r / static_cast<double>(n) : 0.0;
    return s;
}

void write_flood_trace_csv(std::ostream& out, std::span<const FloodTraceEvent> trace) {
    std::map<std::pair<std::size_t, std::uint64_t>, std::pair<std::size_t, std::size_t>> rows;
    for (const auto& e : trace) {
        auto& r = rows[{e.slot, e.rdp_id}];
        (e.transmit ? r.first : r.second) += 1;
    }
    out << "slot,rdp_id,transmitters,first_receptions\n";
    for (const auto& [key, counts] : rows)
        out << key.first << ',' << key.second << ',' << counts.first << ',' << counts.second << '\n';
}

} // namespace rdcap
