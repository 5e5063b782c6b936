#include "rdcap/rdp_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "rdcap/errors.hpp"

namespace rdcap {

namespace {

double parse_number(std::string_view s) {
    std::string str(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(str, &used);
    } catch (const std::exception&) {
        throw InvalidConfig("gmodel: cannot parse number '" + str + "'");
    }
    if (used != str.size()) throw InvalidConfig("gmodel: trailing characters in '" + str + "'");
    return v;
}

} // namespace

GModel GModel::identity() { return GModel{}; }

GModel GModel::k_target(double k) {
    if (!(k > 0.0)) throw DomainError("k_target: k must be positive");
    GModel g;
    g.kind = Kind::k_target;
    g.k = k;
    return g;
}

GModel GModel::step_repair() {
    GModel g;
    g.kind = Kind::step_repair;
    return g;
}

GModel GModel::table(std::vector<std::pair<double, double>> points) {
    if (points.empty()) throw DomainError("table G-model needs at least one point");
    std::sort(points.begin(), points.end());
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].first == points[i - 1].first) throw DomainError("table G-model has duplicate f");
    GModel g;
    g.kind = Kind::table;
    g.points = std::move(points);
    return g;
}

std::string GModel::to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
    case Kind::identity: os << "identity"; break;
    case Kind::k_target: os << "k_target:" << k; break;
    case Kind::step_repair: os << "step_repair"; break;
    case Kind::table:
        os << "table:";
        for (std::size_t i = 0; i < points.size(); ++i) os << (i ? "," : "") << points[i].first << '=' << points[i].second;
        break;
    }
    return os.str();
}

GModel GModelFamily::at(double n) const {
    if (!k_scales_with_sqrt_n) return base;
    GModel g = GModel::k_target(k_coeff * std::sqrt(n));
    g.gamma = base.gamma;
    return g;
}

GModelFamily GModelFamily::parse(std::string_view text) {
    GModelFamily fam;
    const auto colon = text.find(':');
    const std::string_view kind = text.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    if (kind == "identity") {
        fam.base = GModel::identity();
    } else if (kind == "step_repair") {
        fam.base = GModel::step_repair();
    } else if (kind == "k_target") {
        fam.base = GModel::k_target(parse_number(arg));
    } else if (kind == "k_target_sqrt") {
        fam.k_scales_with_sqrt_n = true;
        fam.k_coeff = parse_number(arg);
        if (!(fam.k_coeff > 0.0)) throw InvalidConfig("k_target_sqrt coefficient must be positive");
        fam.base = GModel::k_target(fam.k_coeff);
    } else if (kind == "table") {
        std::vector<std::pair<double, double>> pts;
        std::size_t pos = 0;
        while (pos <= arg.size()) {
            auto end = arg.find(',', pos);
            if (end == std::string_view::npos) end = arg.size();
            const auto item = arg.substr(pos, end - pos);
            if (!item.empty()) {
                const auto eq = item.find('=');
                if (eq == std::string_view::npos) throw InvalidConfig("gmodel table entry needs f=G");
                pts.emplace_back(parse_number(item.substr(0, eq)), parse_number(item.substr(eq + 1)));
            }
            pos = end + 1;
        }
        fam.base = GModel::table(std::move(pts));
    } else {
        throw InvalidConfig("unknown gmodel '" + std::string(text) + "'");
    }
    return fam;
}

std::string GModelFamily::to_string() const {
    if (!k_scales_with_sqrt_n) return base.to_string();
    std::ostringstream os;
    os.precision(17);
    os << "k_target_sqrt:" << k_coeff;
    return os.str();
}

double g_eval(const GModel& model, double f) {
    if (!(f >= 0.0 && f <= 1.0)) throw DomainError("g_eval: f must lie in [0, 1]");
    switch (model.kind) {
    case GModel::Kind::identity: return f;
    case GModel::Kind::k_target:
        // 1 - (1 - f)^k, evaluated stably for small f.
        if (f == 1.0) return 1.0;
        return -std::expm1(model.k * std::log1p(-f));
    case GModel::Kind::step_repair: return f > 0.0 ? 1.0 : 0.0;
    case GModel::Kind::table: {
        const auto& p = model.points;
        if (f <= p.front().first) return p.front().second;
        if (f >= p.back().first) return p.back().second;
        auto hi = std::upper_bound(p.begin(), p.end(), f, [](double v, const auto& e) { return v < e.first; });
        auto lo = hi - 1;
        const double t = (f - lo->first) / (hi->first - lo->first);
        return lo->second + t * (hi->second - lo->second);
    }
    }
    return f;
}

std::vector<GViolation> validate_gmodel(const GModel& model) {
    std::vector<GViolation> out;
    constexpr int steps = 1000;
    constexpr double tol = 1e-12;
    std::vector<double> g(steps + 1);
    for (int i = 0; i <= steps; ++i) g[i] = g_eval(model, static_cast<double>(i) / steps);

    if (std::abs(g[0]) > tol) out.push_back({"G(0)=0", 0.0, g[0]});
    if (std::abs(g[steps] - 1.0) > tol) out.push_back({"G(1)=1", 1.0, g[steps]});
    for (int i = 1; i <= steps; ++i) {
        if (g[i] < g[i - 1] - tol) {
            out.push_back({"monotone", static_cast<double>(i) / steps, g[i]});
            break;
        }
    }
    for (int i = 0; i <= steps; ++i) {
        const double f = static_cast<double>(i) / steps;
        if (g[i] < f - tol) {
            out.push_back({"G>=f", f, g[i]});
            break;
        }
    }
    for (int i = 1; i < steps; ++i) {
        if (g[i - 1] - 2.0 * g[i] + g[i + 1] > 1e-9) {
            out.push_back({"concave", static_cast<double>(i) / steps, g[i]});
            break;
        }
    }
    return out;
}

double q_upper_bound(const GModel& model, double nbar_r, double lambda, std::size_t n) {
    if (!(lambda > 0.0)) throw DomainError("q_upper_bound: lambda must be positive");
    if (n < 2) throw DomainError("q_upper_bound: n must be >= 2");
    const double arg = nbar_r / (lambda * static_cast<double>(n - 1));
    return g_eval(model, std::clamp(arg, 0.0, 1.0));
}

double q_lower_bound(const GModel& model, double nbar_r, double lambda, std::size_t n) {
    if (!(lambda > 0.0)) throw DomainError("q_lower_bound: lambda must be positive");
    if (n < 2) throw DomainError("q_lower_bound: n must be >= 2");
    const double arg = model.gamma * nbar_r / (lambda * static_cast<double>(n));
    return 0.5 * g_eval(model, std::clamp(arg, 0.0, 1.0));
}

double scheme_a_qprime(const RateFunction& q_fn, double lambda, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("scheme_a_qprime: theta must lie in (0, 1)");
    return q_fn(lambda / theta);
}

double expected_attempts(double q) {
    if (!(q > 0.0)) throw DivergenceError("expected_attempts: success probability is zero");
    if (q > 1.0) throw DomainError("expected_attempts: q must be <= 1");
    return 1.0 / q;
}

LambdaSolution solve_lambda_detailed(double n, double nu, double tau, const RateFunction& q_prime) {
    if (!(n > 0.0) || !(nu >= 0.0) || !(tau >= 0.0)) throw DomainError("solve_lambda: invalid arguments");
    const double total = n * nu;
    LambdaSolution sol;
    if (total == 0.0) {
        sol.converged = true;
        return sol;
    }

    std::map<double, double> seen;
    const auto qp = [&](double lambda) {
        const double v = q_prime(lambda);
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("solve_lambda: Q' left [0, 1]");
        auto [it, inserted] = seen.emplace(lambda, v);
        if (!inserted) return it->second;
        if (it != seen.begin() && std::prev(it)->second < v - 1e-12)
            throw DomainError("solve_lambda: Q' is not nonincreasing in lambda");
        if (auto nx = std::next(it); nx != seen.end() && nx->second > v + 1e-12)
            throw DomainError("solve_lambda: Q' is not nonincreasing in lambda");
        return v;
    };
    const auto F = [&](double lambda) { return total / (1.0 + qp(lambda) * tau * nu); };

    double lo = total / (1.0 + tau * nu);
    double hi = total;
    for (int i = 0; i <= 16; ++i) qp(lo + (hi - lo) * i / 16.0);

    const double tol = 1e-9 * total;
    double mid = lo;
    for (int it = 1; it <= 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double h = mid - F(mid);
        sol.iterations = it;
        sol.residual = std::abs(h);
        if (h == 0.0 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
        if (h < 0.0) lo = mid;
        else hi = mid;
    }
    sol.converged = sol.residual < tol;
    sol.lambda = mid;
    return sol;
}

double solve_lambda(double n, double nu, double tau, const RateFunction& q_prime) {
    const LambdaSolution sol = solve_lambda_detailed(n, nu, tau, q_prime);
    if (!sol.converged) throw DomainError("solve_lambda: no fixed point within tolerance");
    return sol.lambda;
}

double xi_from_rates(double nu, double q_prime) {
    if (!(nu > 0.0)) throw DivergenceError("xi_from_rates: nu is zero");
    if (!(q_prime > 0.0)) throw DivergenceError("xi_from_rates: Q' is zero");
    return 1.0 / (nu * q_prime);
}

double xi_reference(const GModel& model, std::size_t n) {
    if (n < 2) throw DomainError("xi_reference: n must be >= 2");
    const double g = g_eval(model, 1.0 / static_cast<double>(n));
    if (!(g > 0.0)) throw DivergenceError("xi_reference: G(1/n) is zero");
    return 1.0 / g;
}

RdpRates rdp_rates(const RateFunction& q_fn, double n, double nu, double tau, double theta) {
    const RateFunction qprime = [&](double l) { return scheme_a_qprime(q_fn, l, theta); };
    RdpRates r;
    r.lambda = solve_lambda(n, nu, tau, qprime);
    r.q = q_fn(r.lambda);
    r.q_prime = qprime(r.lambda);
    r.n_avg = expected_attempts(r.q_prime);
    r.xi = xi_from_rates(nu, r.q_prime);
    return r;
}

} // namespace rdcap
