#include "rdcap/analysis.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>

#include "rdcap/errors.hpp"

namespace rdcap {

double dormancy_bound(double w, double tau, double xi) {
    if (!(xi > 0.0)) throw DomainError("dormancy_bound: xi must be positive");
    return w * tau / xi;
}

double interference_bound(double w, double n) {
    if (!(n >= 2.0)) throw DomainError("interference_bound: n must be >= 2");
    return w / std::sqrt(n * std::log(n));
}

double ScalingFit::predict(double n) const { return std::exp(intercept + slope * std::log(n)); }

ScalingFit fit_exponent(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw DomainError("fit_exponent: need at least 3 points");
    const auto k = static_cast<double>(points.size());
    double sx = 0, sy = 0;
    for (const auto& [n, v] : points) {
        if (!(n > 0.0) || !(v > 0.0) || !std::isfinite(v)) throw DomainError("fit_exponent: values must be positive");
        sx += std::log(n);
        sy += std::log(v);
    }
    const double mx = sx / k, my = sy / k;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [n, v] : points) {
        const double dx = std::log(n) - mx, dy = std::log(v) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw DomainError("fit_exponent: all n are equal");
    ScalingFit fit;
    fit.points.assign(points.begin(), points.end());
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double sse = std::max(0.0, syy - fit.slope * sxy);
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    fit.slope_stderr = points.size() > 2 ? std::sqrt(sse / (k - 2.0) / sxx) : 0.0;
    return fit;
}

std::string_view to_string(Regime regime) {
    switch (regime) {
    case Regime::rdp_limited: return "rdp_limited";
    case Regime::interference_limited: return "interference_limited";
    case Regime::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

std::vector<double> probe_sizes(double a, double b, std::size_t count) {
    if (!(a >= 2.0) || !(b > a) || count < 2) throw DomainError("probe_sizes: invalid range");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::round(std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (count - 1)));
    return out;
}

RegimeVerdict classify_regime(const TauModel& tau, const GModelFamily& gmodel, std::span<const double> n_probe,
                              double threshold) {
    if (n_probe.size() < 4) throw DomainError("classify_regime: need at least 4 probe sizes");
    const auto [lo, hi] = std::minmax_element(n_probe.begin(), n_probe.end());
    if (*lo < 2.0 || *hi / *lo < 100.0) throw DomainError("classify_regime: probes must span two decades");

    RegimeVerdict v;
    v.threshold = threshold;
    std::vector<std::pair<double, double>> ratio;
    for (double n : n_probe) {
        const double l = tau.at(n) * g_eval(gmodel.at(n), 1.0 / n);
        const double r = 1.0 / std::sqrt(n * std::log(n));
        v.n_probe.push_back(n);
        v.lhs.push_back(l);
        v.rhs.push_back(r);
        ratio.emplace_back(n, l / r);
    }
    v.ratio_fit = fit_exponent(ratio);
    const double df = static_cast<double>(n_probe.size()) - 2.0;
    const double t = boost::math::quantile(boost::math::complement(boost::math::students_t(df), 0.025));
    v.slope_ci_low = v.ratio_fit.slope - t * v.ratio_fit.slope_stderr;
    v.slope_ci_high = v.ratio_fit.slope + t * v.ratio_fit.slope_stderr;
    if (v.slope_ci_high < threshold) v.regime = Regime::rdp_limited;
    else if (v.slope_ci_low >= threshold) v.regime = Regime::interference_limited;
    else v.regime = Regime::indeterminate;

    for (std::size_t i = 0; i < v.n_probe.size(); ++i) {
        switch (v.regime) {
        case Regime::rdp_limited: v.predicted.push_back(v.lhs[i]); break;
        case Regime::interference_limited: v.predicted.push_back(v.rhs[i]); break;
        case Regime::indeterminate: v.predicted.push_back(std::min(v.lhs[i], v.rhs[i])); break;
        }
    }
    return v;
}

ThetaCheck check_theta(std::span<const std::pair<double, double>> points,
                       std::span<const std::pair<double, double>> reference, double factor) {
    if (points.size() != reference.size() || points.empty()) throw DomainError("check_theta: grid size mismatch");
    ThetaCheck c;
    c.factor = factor;
    c.max_ratio = -std::numeric_limits<double>::infinity();
    c.min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].first != reference[i].first) throw DomainError("check_theta: n-grids differ");
        if (!(reference[i].second > 0.0)) throw DomainError("check_theta: reference must be positive");
        const double r = points[i].second / reference[i].second;
        c.max_ratio = std::max(c.max_ratio, r);
        c.min_ratio = std::min(c.min_ratio, r);
    }
    c.spread = c.min_ratio > 0.0 ? c.max_ratio / c.min_ratio : std::numeric_limits<double>::infinity();
    c.consistent = c.spread < factor;
    return c;
}

nlohmann::json to_json(const ScalingFit& fit) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [n, v] : fit.points) pts.push_back({n, v});
    return {{"slope", fit.slope},
            {"intercept", fit.intercept},
            {"r_squared", fit.r_squared},
            {"slope_stderr", fit.slope_stderr},
            {"points", pts}};
}

nlohmann::json to_json(const RegimeVerdict& v) {
    return {{"regime", std::string(to_string(v.regime))},
            {"threshold", v.threshold},
            {"ratio_slope", v.ratio_fit.slope},
            {"slope_ci", {v.slope_ci_low, v.slope_ci_high}},
            {"n_probe", v.n_probe},
            {"lhs", v.lhs},
            {"rhs", v.rhs},
            {"predicted", v.predicted}};
}

nlohmann::json to_json(const ThetaCheck& c) {
    return {{"max_ratio", c.max_ratio},
            {"min_ratio", c.min_ratio},
            {"spread", c.spread},
            {"factor", c.factor},
            {"consistent", c.consistent}};
}

void write_reference_csv(std::ostream& out, const RegimeVerdict& v) {
    out << "n,lhs,rhs,predicted\n";
    out.precision(10);
    for (std::size_t i = 0; i < v.n_probe.size(); ++i)
        out << v.n_probe[i] << ',' << v.lhs[i] << ',' << v.rhs[i] << ',' << v.predicted[i] << '\n';
}

} // namespace rdcap
