#include "rdcap/mac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rdcap {

std::vector<std::vector<std::uint32_t>> Schedule::classes() const {
    std::vector<std::vector<std::uint32_t>> out(period);
    for (std::uint32_t c = 0; c < colors.size(); ++c) out[colors[c]].push_back(c);
    return out;
}

Schedule color_schedule(const CellAdjacency& interference) {
    Schedule s;
    const std::size_t cells = interference.size();
    s.colors.assign(cells, 0);
    std::uint32_t used_max = 0;
    std::vector<std::uint32_t> stamp;
    for (std::uint32_t c = 0; c < cells; ++c) {
        stamp.assign(interference[c].size() + 2, 0);
        for (std::uint32_t nb : interference[c])
            if (nb < c && s.colors[nb] < stamp.size()) stamp[s.colors[nb]] = 1;
        std::uint32_t k = 0;
        while (stamp[k]) ++k;
        s.colors[c] = k;
        used_max = std::max(used_max, k);
    }
    s.period = cells == 0 ? 1 : used_max + 1;
    return s;
}

Schedule lattice_schedule(const Grid& grid, const NetworkConfig& config) {
    const double limit = (2.0 + config.delta) * grid.range;
    // Largest per-axis offset k with gap (k - 1) * side < limit.
    long k = 1;
    while (static_cast<double>(k) * grid.side < limit) ++k;
    const auto p = static_cast<std::uint32_t>(k + 1);
    Schedule s;
    s.period = p * p;
    s.colors.resize(grid.cell_count());
    for (std::uint32_t c = 0; c < s.colors.size(); ++c) {
        const CellCoord xy = grid.coord(c);
        s.colors[c] = (xy.x % p) + p * (xy.y % p);
    }
    return s;
}

bool schedule_is_proper(const Schedule& schedule, const CellAdjacency& interference) {
    for (std::uint32_t a = 0; a < interference.size(); ++a)
        for (std::uint32_t b : interference[a])
            if (schedule.colors[a] == schedule.colors[b]) return false;
    return true;
}

std::vector<LinkOutcome> data_slot_success(std::span<const Link> links, const NodePlacement& placement,
                                           double range, double delta) {
    const auto& pos = placement.positions;
    const double guard = (1.0 + delta) * range;
    std::vector<LinkOutcome> out(links.size(), LinkOutcome::success);
    for (std::size_t i = 0; i < links.size(); ++i) {
        const Point rx = pos[links[i].receiver];
        if (distance(pos[links[i].sender], rx) > range) {
            out[i] = LinkOutcome::out_of_range;
            continue;
        }
        for (std::size_t k = 0; k < links.size(); ++k) {
            if (k == i || links[k].sender == links[i].sender) continue;
            if (distance(pos[links[k].sender], rx) < guard) {
                out[i] = LinkOutcome::interfered;
                break;
            }
        }
    }
    return out;
}

double received_power(double d, double alpha) {
    if (d <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(d, -alpha);
}

std::optional<std::uint32_t> capture_receive(std::uint32_t receiver, std::span<const std::uint32_t> transmitters,
                                             const NodePlacement& placement, const NetworkConfig& config) {
    // Power falls monotonically with distance, so the winner never depends on the exponent;
    // comparing squared distances keeps this exact.
    const double radius = config.reception_radius();
    const double radius2 = radius * radius;
    const Point rx = placement.positions[receiver];
    std::optional<std::uint32_t> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::uint32_t t : transmitters) {
        if (t == receiver) continue;
        const double dx = placement.positions[t].x - rx.x, dy = placement.positions[t].y - rx.y;
        const double d2 = dx * dx + dy * dy;
        if (std::isfinite(radius) && d2 > radius2) continue;
        if (d2 < best_d2 || (d2 == best_d2 && t < *best)) {
            best = t;
            best_d2 = d2;
        }
    }
    return best;
}

CaptureIndex::CaptureIndex(const NodePlacement& placement, double radius)
    : placement_(&placement),
      radius_(radius),
      radius2_(radius * radius),
      unbounded_(!std::isfinite(radius)) {
    buckets_per_side_ = 1;
    if (!unbounded_) {
        const double per_side = std::floor(1.0 / radius);
        buckets_per_side_ = static_cast<std::uint32_t>(std::clamp(per_side, 1.0, 2048.0));
    }
    node_bucket_.resize(placement.size());
    for (std::size_t i = 0; i < placement.size(); ++i) node_bucket_[i] = bucket_of(placement.positions[i]);
    start_.assign(static_cast<std::size_t>(buckets_per_side_) * buckets_per_side_ + 1, 0);
}

std::uint32_t CaptureIndex::bucket_of(Point p) const {
    const auto axis = [this](double c) {
        const auto b = static_cast<long>(c * buckets_per_side_);
        return static_cast<std::uint32_t>(std::clamp<long>(b, 0, buckets_per_side_ - 1));
    };
    return axis(p.y) * buckets_per_side_ + axis(p.x);
}

void CaptureIndex::assign(std::span<const std::uint32_t> transmitters) {
    std::fill(start_.begin(), start_.end(), 0);
    for (std::uint32_t t : transmitters) ++start_[node_bucket_[t] + 1];
    for (std::size_t b = 1; b < start_.size(); ++b) start_[b] += start_[b - 1];
    items_.resize(transmitters.size());
    fill_.assign(start_.begin(), start_.end() - 1);
    for (std::uint32_t t : transmitters) items_[fill_[node_bucket_[t]]++] = t;
}

std::optional<std::uint32_t> CaptureIndex::winner(std::uint32_t receiver) const {
    const auto& pos = placement_->positions;
    const Point rx = pos[receiver];
    std::optional<std::uint32_t> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    const auto consider = [&](std::uint32_t t) {
        if (t == receiver) return;
        const double dx = pos[t].x - rx.x, dy = pos[t].y - rx.y;
        const double d2 = dx * dx + dy * dy;
        if (!unbounded_ && d2 > radius2_) return;
        if (d2 < best_d2 || (d2 == best_d2 && t < *best)) {
            best = t;
            best_d2 = d2;
        }
    };
    const long bps = buckets_per_side_;
    const long bx = node_bucket_[receiver] % bps, by = node_bucket_[receiver] / bps;
    for (long y = std::max(0L, by - 1); y <= std::min(bps - 1, by + 1); ++y)
        for (long x = std::max(0L, bx - 1); x <= std::min(bps - 1, bx + 1); ++x) {
            const auto b = static_cast<std::size_t>(y * bps + x);
            for (std::uint32_t i = start_[b]; i < start_[b + 1]; ++i) consider(items_[i]);
        }
    return best;
}

} // namespace rdcap
