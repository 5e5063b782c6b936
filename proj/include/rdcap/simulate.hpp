#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rdcap/config.hpp"
#include "rdcap/rdp_analysis.hpp"
#include "rdcap/rdp_flood.hpp"
#include "rdcap/rng.hpp"

namespace rdcap {

enum class SuccessMode { analytic, flooded };

// Mean flood reach as a function of the RDP load, measured from flooded runs.
// load is initiations per node per RDP slot; chat is first receptions per node per RDP slot.
struct ReachCalibration {
    double f_isolated = 0.0;                          // mean reach of a flood alone in the network
    std::vector<std::pair<double, double>> chat_by_load;  // (load, chat), ascending load
    std::size_t n = 0;                                // network size the table was measured at

    bool empty() const { return chat_by_load.empty(); }
    // Log-log interpolation, clamped outside the measured loads.
    double chat_at(double load) const;
    // f̄ = min(f_isolated, chat(load) / (load (n - 1))).
    double mean_reach(double load, std::size_t n_nodes) const;
};

// Runs flooded steady-state loads on a placement drawn from the calibration stream of
// config.seed. Each load runs `rdp_slots` RDP slots, the first quarter discarded.
ReachCalibration calibrate_reach(const NetworkConfig& config, std::span<const double> loads, std::size_t rdp_slots,
                                 std::size_t isolated_floods);

struct SimulationConfig {
    NetworkConfig network;
    GModel gmodel = GModel::identity();
    SuccessMode mode = SuccessMode::analytic;
    ReachCalibration calibration;  // required in analytic mode
    double warmup_fraction = 0.2;
    double target_delivery = 0.95;
    int bisection_steps = 6;
    std::optional<double> offered_rate;  // packets per slot per active source; skips the search
    bool measure_throughput = true;
    bool keep_timeline = false;
};

// Throws InvalidConfig when analytic mode is requested without a calibration.
SuccessMode success_mode(const SimulationConfig& config);

// One route-discovery outcome given the reach of its flood.
bool draw_success(const GModel& model, double f, Rng& rng);

// Scheme A slot pattern: slot t carries RDP traffic iff floor((t+1) theta) != floor(t theta).
bool is_rdp_slot(std::uint64_t t, double theta);
std::uint64_t next_rdp_slot(std::uint64_t t, double theta);  // first RDP slot >= t
std::uint64_t data_slot_index(std::uint64_t t, double theta);  // data slots before t

enum class NodeMode : std::uint8_t { d, n };

struct StatePeriod {
    std::uint32_t node = 0;
    NodeMode mode = NodeMode::n;
    std::uint64_t start = 0;
    std::uint64_t end = 0;  // exclusive; the horizon for periods still open
};

struct Metrics {
    // Measured over the window that follows the warm-up.
    double throughput_per_node = 0.0;  // bits per unit time
    double xi_measured = 0.0;          // N time / N-to-D transitions, slots
    double tau_measured = 0.0;         // D time / D-to-N transitions, slots
    double active_fraction = 0.0;
    double lambda_measured = 0.0;      // RDP initiations per slot, whole network
    double q_measured = 0.0;           // successes per resolved attempt
    double delivered_bits = 0.0;
    double generated_bits = 0.0;

    double offered_rate = 0.0;         // sustained packets per slot per active source
    double delivery_ratio = 0.0;
    double nbar_r = 0.0;               // first receptions per RDP slot
    double mean_reach = 0.0;           // mean f over attempts
    FloodStats floods;                 // flooded mode only

    std::uint64_t horizon = 0;
    std::uint64_t window_slots = 0;
    std::uint64_t window_rdp_slots = 0;
    std::uint32_t schedule_period = 0;
    double attempts = 0.0;
    std::uint64_t successes = 0;
    std::uint64_t d_periods = 0;       // D-to-N transitions in the window
    std::uint64_t n_periods = 0;       // N-to-D transitions in the window

    std::vector<StatePeriod> timeline;  // filled when keep_timeline is set
};

// Slotted simulation under Scheme A. All nodes start in state N with a random
// destination. Requires n >= 2 and horizon >= 1000.
Metrics run_simulation(const SimulationConfig& config, std::uint64_t horizon_slots);

// tau / (tau + xi). Throws DomainError when tau + xi = 0.
double active_fraction(double tau, double xi);

} // namespace rdcap
