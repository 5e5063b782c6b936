#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rdcap/analysis.hpp"
#include "rdcap/config.hpp"
#include "rdcap/rdp_analysis.hpp"
#include "rdcap/simulate.hpp"

namespace rdcap {

struct ScenarioPreset {
    TauModel tau;
    GModelFamily gmodel;
};

// example1: tau constant, identity G.
// example2: tau = c / sqrt(n), k_target with k = c' sqrt(n).
// example3: tau = c / sqrt(n), step_repair.
// Throws InvalidConfig for unknown names.
ScenarioPreset scenario_presets(std::string_view name, std::optional<double> tau_coeff = std::nullopt,
                                double k_coeff = 1.0);

struct ExperimentSpec {
    NetworkConfig base;
    std::vector<std::size_t> n_values{256, 1024, 4096, 16384};
    std::size_t replications = 8;
    std::string scenario = "example1";  // example1 | example2 | example3 | custom
    std::optional<double> tau_coeff;     // presets only
    double k_coeff = 1.0;                // example2 only
    GModelFamily gmodel;                 // custom only; tau comes from base.tau_model
    SuccessMode mode = SuccessMode::analytic;
    std::uint64_t horizon_slots = 20000;  // minimum; stretched to cover slow state dynamics
    std::uint64_t max_horizon_slots = 4000000;
    std::string output_dir = "results";
    std::size_t workers = 0;              // 0 = available parallelism
    std::size_t calibration_n_max = 4096;
    std::size_t calibration_rdp_slots = 800;
    std::size_t calibration_isolated_floods = 10;
    double warmup_fraction = 0.2;
    double target_delivery = 0.95;
    double regime_threshold = -0.1;
    double theta_factor = 4.0;
    double probe_min = 100.0;
    double probe_max = 1.0e6;

    // Throws InvalidConfig.
    void validate() const;
    ScenarioPreset resolved() const;
    std::string to_text() const;
    // FNV-1a 64 of to_text(), hex.
    std::string hash() const;
};

// Flat key=value lines; '#' starts a comment. Unknown keys throw InvalidConfig.
ExperimentSpec parse_spec(std::string_view text);
ExperimentSpec load_spec(const std::filesystem::path& path);

std::uint64_t point_seed(std::uint64_t base_seed, std::size_t n, std::size_t replication);

// Slots to simulate at size n: the spec minimum, stretched to about ten predicted
// state cycles and ten drain times of the data plane.
std::uint64_t effective_horizon(const ExperimentSpec& spec, std::size_t n, const ReachCalibration& calibration);

struct PointResult {
    std::size_t n = 0;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    Metrics metrics;
};

struct Summary {
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct SizeAggregate {
    std::size_t n = 0;
    std::size_t ok_points = 0;
    Summary throughput, xi, tau, active_fraction, lambda, q;
};

struct RunRecord {
    std::string spec_hash;
    std::string spec_text;
    std::string generator{kGeneratorName};
    std::vector<PointResult> points;  // ordered by (n, replication)
    std::vector<SizeAggregate> sizes;
    std::optional<ScalingFit> throughput_fit, xi_fit, lambda_fit;
    std::optional<RegimeVerdict> verdict;
    std::optional<ThetaCheck> theta;
    std::string started_at;
    std::string finished_at;

    std::size_t failed_points() const;
};

using ProgressFn = std::function<void(const PointResult&)>;
using PointRunner = std::function<Metrics(const SimulationConfig&, std::uint64_t horizon)>;

// Runs every (n, replication) point on a bounded worker pool. A failing point is
// recorded and the sweep continues; throws std::runtime_error only when all fail.
// The runner defaults to run_simulation.
RunRecord run_sweep(const ExperimentSpec& spec, const ProgressFn& progress = {}, const PointRunner& runner = {});

// Columns: n, seed, throughput_per_node, xi_measured, tau_measured, active_fraction,
// lambda_measured, q_measured. Failed points are omitted.
void write_points_csv(std::ostream& out, const RunRecord& record);
nlohmann::json to_json(const RunRecord& record, bool with_timestamps = true);

// Writes sweep.csv and sweep.json into dir.
void persist_run(const RunRecord& record, const std::filesystem::path& dir);

// Reads a CSV with a header row and returns the (x, y) columns. A name matches a column
// exactly or, failing that, as the prefix of exactly one column.
std::vector<std::pair<double, double>> read_csv_columns(std::istream& in, std::string_view x, std::string_view y);

} // namespace rdcap
