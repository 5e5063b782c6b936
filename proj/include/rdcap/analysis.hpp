#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rdcap/config.hpp"
#include "rdcap/rdp_analysis.hpp"

namespace rdcap {

// W tau / xi. Throws DomainError for xi <= 0.
double dormancy_bound(double w, double tau, double xi);

// W / sqrt(n ln n). Throws DomainError for n < 2.
double interference_bound(double w, double n);

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;  // ln value at ln n = 0
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    std::vector<std::pair<double, double>> points;

    double predict(double n) const;
};

// Ordinary least squares of ln value on ln n. Needs >= 3 points with positive n and value.
ScalingFit fit_exponent(std::span<const std::pair<double, double>> points);

enum class Regime { rdp_limited, interference_limited, indeterminate };

std::string_view to_string(Regime regime);

struct RegimeVerdict {
    Regime regime = Regime::indeterminate;
    std::vector<double> n_probe;
    std::vector<double> lhs;        // tau(n) G(1/n)
    std::vector<double> rhs;        // 1 / sqrt(n ln n)
    std::vector<double> predicted;  // reference throughput shape, unnormalized
    ScalingFit ratio_fit;           // log-log fit of lhs / rhs
    double slope_ci_low = 0.0;
    double slope_ci_high = 0.0;
    double threshold = -0.1;
};

// Decides o(.) versus Omega(.) by the trend of lhs/rhs over the probes: slope below the
// threshold means rdp_limited, at or above it interference_limited, and a 95% confidence
// interval that straddles the threshold gives indeterminate. Needs >= 4 probes spanning
// >= 2 decades.
RegimeVerdict classify_regime(const TauModel& tau, const GModelFamily& gmodel, std::span<const double> n_probe,
                              double threshold = -0.1);

// Log-spaced probe sizes between a and b inclusive.
std::vector<double> probe_sizes(double a, double b, std::size_t count);

struct ThetaCheck {
    double max_ratio = 0.0;
    double min_ratio = 0.0;
    double spread = 0.0;  // max / min of value / reference
    double factor = 4.0;
    bool consistent = false;
};

// Compares value/reference across a common n-grid. Throws DomainError if the grids differ.
ThetaCheck check_theta(std::span<const std::pair<double, double>> points,
                       std::span<const std::pair<double, double>> reference, double factor = 4.0);

nlohmann::json to_json(const ScalingFit& fit);
nlohmann::json to_json(const RegimeVerdict& verdict);
nlohmann::json to_json(const ThetaCheck& check);

// Columns: n, lhs, rhs, predicted.
void write_reference_csv(std::ostream& out, const RegimeVerdict& verdict);

} // namespace rdcap
