#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "rdcap/config.hpp"
#include "rdcap/topology.hpp"

namespace rdcap {

struct RdpOutcome {
    std::uint64_t rdp_id = 0;
    std::uint32_t origin = 0;
    double f = 0.0;                 // distinct receivers / (n - 1)
    std::size_t reached = 0;        // distinct receivers, origin excluded
    std::size_t slots_used = 0;     // RDP slots from initiation to closure
    std::size_t start_slot = 0;     // engine slot of the first broadcast
    bool truncated = false;         // closed by the slot budget with copies still pending
    std::vector<std::uint32_t> first_receptions_per_slot;
};

struct FloodStats {
    double mean_f = 0.0;
    double median_f = 0.0;
    double nbar_r = 0.0;     // first-time receptions per RDP slot
    double gamma_hat = 0.0;  // median_f / mean_f
    double chat = 0.0;       // nbar_r / n
    std::size_t floods = 0;
};

struct FloodTraceEvent {
    std::size_t slot = 0;
    std::uint64_t rdp_id = 0;
    std::uint32_t node = 0;
    bool transmit = false;   // false: first reception
};

struct FloodEngineOptions {
    std::size_t slot_budget = 0;  // per-flood age limit in RDP slots; 0 means none
    bool trace = false;
};

// Concurrent RREQ floods over a fixed placement. Each call to step() is one RDP slot:
// every node with pending RREQs broadcasts its oldest one, every other node captures the
// nearest transmitter inside its reception disk, and a captured RREQ the node has not seen
// before is queued for rebroadcast.
class FloodEngine {
public:
    FloodEngine(const NodePlacement& placement, const NetworkConfig& config, FloodEngineOptions options = {});

    // Queues a new RREQ at `origin`; it is broadcast at the origin's next turn.
    std::uint64_t initiate(std::uint32_t origin);

    // Runs one RDP slot and returns the floods that closed in it.
    std::vector<RdpOutcome> step();

    // Closes every open flood as truncated.
    std::vector<RdpOutcome> close_all();

    bool idle() const { return active_.empty(); }
    std::size_t active_floods() const { return active_.size(); }
    std::size_t slot() const { return slot_; }
    std::uint64_t first_receptions() const { return first_receptions_; }
    std::uint64_t transmissions() const { return transmissions_; }
    const std::vector<FloodTraceEvent>& trace() const { return trace_; }

private:
    struct Flood {
        RdpOutcome outcome;
        std::vector<std::uint64_t> seen;  // bitset over nodes, origin included
        std::size_t copies = 0;           // queued broadcasts not yet sent
        bool open = false;
    };

    bool test_and_set(Flood& fl, std::uint32_t node);
    RdpOutcome close(std::uint64_t id, bool truncated);
    void enqueue(std::uint32_t node, std::uint64_t id);

    const NodePlacement* placement_;
    std::size_t n_;
    double radius2_;
    bool unbounded_;
    FloodEngineOptions options_;

    std::uint32_t buckets_per_side_ = 1;
    std::vector<std::uint32_t> bucket_start_;
    std::vector<std::uint32_t> bucket_nodes_;
    std::vector<std::uint32_t> node_bucket_;

    std::vector<Flood> floods_;
    std::vector<std::uint64_t> active_;
    std::vector<std::deque<std::uint64_t>> queue_;
    std::vector<std::uint32_t> busy_;
    std::vector<std::uint8_t> in_busy_;
    std::vector<std::vector<std::uint64_t>> spare_bits_;

    std::vector<std::uint8_t> transmitting_;
    std::vector<double> best_d2_;
    std::vector<std::uint32_t> best_tx_;
    std::vector<std::uint32_t> touched_;
    std::vector<std::uint64_t> tx_flood_;

    std::size_t slot_ = 0;
    std::uint64_t first_receptions_ = 0;
    std::uint64_t transmissions_ = 0;
    std::vector<FloodTraceEvent> trace_;
};

// Single flood from `origin`. Throws DomainError when the network has fewer than two nodes.
RdpOutcome run_flood(std::uint32_t origin, const NodePlacement& placement, const NetworkConfig& config,
                     std::size_t slot_budget);

struct ConcurrentFloods {
    std::vector<RdpOutcome> outcomes;  // in origin order
    FloodStats stats;
};

// All origins initiate in the first RDP slot and share the channel until every flood closes.
ConcurrentFloods run_concurrent_floods(std::span<const std::uint32_t> origins, const NodePlacement& placement,
                                       const NetworkConfig& config, std::size_t slot_budget);

// Statistics over outcomes; n̄_r divides total first receptions by `rdp_slots`, or by the
// slot span the outcomes cover when `rdp_slots` is 0. Throws DomainError on empty input.
FloodStats flood_stats(std::span<const RdpOutcome> outcomes, std::size_t n, std::size_t rdp_slots = 0);

// Columns: slot, rdp_id, transmitters, first_receptions.
void write_flood_trace_csv(std::ostream& out, std::span<const FloodTraceEvent> trace);

} // namespace rdcap
