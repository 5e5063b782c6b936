#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rdcap/config.hpp"
#include "rdcap/topology.hpp"

namespace rdcap {

struct Schedule {
    std::vector<std::uint32_t> colors;  // cell -> color in [0, period)
    std::uint32_t period = 1;

    // Cells grouped by color, ascending.
    std::vector<std::vector<std::uint32_t>> classes() const;
};

// Greedy proper coloring in cell-index order; period <= max degree + 1.
Schedule color_schedule(const CellAdjacency& interference);

// Periodic coloring color = (x mod p) + p * (y mod p), where p - 1 is the largest per-axis
// offset at which two cells can still interfere. The period p^2 depends only on delta and
// the range/side ratio, never on the grid size.
Schedule lattice_schedule(const Grid& grid, const NetworkConfig& config);

// True if no two interfering cells share a color.
bool schedule_is_proper(const Schedule& schedule, const CellAdjacency& interference);

struct Link {
    std::uint32_t sender = 0;
    std::uint32_t receiver = 0;
};

enum class LinkOutcome { success, interfered, out_of_range };

// Protocol model: sender -> receiver succeeds iff the receiver lies within `range` of its
// sender and every other active sender is at least (1 + delta) * range from the receiver.
std::vector<LinkOutcome> data_slot_success(std::span<const Link> links, const NodePlacement& placement,
                                           double range, double delta);

// Received power of an equal-power transmitter at distance d (free-space style d^-alpha).
double received_power(double d, double alpha);

// Capture: among transmitters inside the receiver's reception disk, the packet with the
// highest SINR wins. With equal transmit powers that is the nearest transmitter; exact ties
// go to the lower node index. Returns the winning transmitter, or nothing.
std::optional<std::uint32_t> capture_receive(std::uint32_t receiver, std::span<const std::uint32_t> transmitters,
                                             const NodePlacement& placement, const NetworkConfig& config);

// Bucketed spatial index answering the same question as capture_receive for many
// receivers against one slot's transmitter set.
class CaptureIndex {
public:
    CaptureIndex(const NodePlacement& placement, double radius);

    void assign(std::span<const std::uint32_t> transmitters);
    std::optional<std::uint32_t> winner(std::uint32_t receiver) const;

private:
    std::uint32_t bucket_of(Point p) const;

    const NodePlacement* placement_;
    double radius_;
    double radius2_;
    bool unbounded_;
    std::uint32_t buckets_per_side_;
    std::vector<std::uint32_t> node_bucket_;
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> items_;
    std::vector<std::uint32_t> fill_;
};

} // namespace rdcap
