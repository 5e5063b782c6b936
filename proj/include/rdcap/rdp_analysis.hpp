#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rdcap {

// Route-discovery success as a function of the fraction f of nodes a flood reached.
struct GModel {
    enum class Kind { identity, k_target, step_repair, table };

    Kind kind = Kind::identity;
    double k = 1.0;                                  // k_target: number of nodes that know the route
    std::vector<std::pair<double, double>> points;   // table: (f, G) sorted by f
    double gamma = 1.0;                              // median/mean reach constant used by the lower bound

    static GModel identity();
    static GModel k_target(double k);
    static GModel step_repair();
    static GModel table(std::vector<std::pair<double, double>> points);

    std::string to_string() const;
};

// A G-model whose k_target parameter may grow as coeff * sqrt(n).
struct GModelFamily {
    GModel base = GModel::identity();
    bool k_scales_with_sqrt_n = false;
    double k_coeff = 1.0;

    GModel at(double n) const;

    // "identity", "step_repair", "k_target:K", "k_target_sqrt:C", "table:f=g,f=g,..."
    static GModelFamily parse(std::string_view text);
    std::string to_string() const;
};

// Throws DomainError when f lies outside [0, 1].
double g_eval(const GModel& model, double f);

struct GViolation {
    std::string property;  // "G(0)=0", "G(1)=1", "monotone", "G>=f", "concave"
    double f = 0.0;
    double value = 0.0;
};

// Checks the defining properties on a lattice of spacing 1e-3. Never throws.
std::vector<GViolation> validate_gmodel(const GModel& model);

// Q <= G(min(1, nbar_r / (lambda (n - 1)))). nbar_r and lambda must use the same time unit.
double q_upper_bound(const GModel& model, double nbar_r, double lambda, std::size_t n);

// Q >= 1/2 G(min(1, gamma nbar_r / (lambda n))), with gamma taken from the model.
double q_lower_bound(const GModel& model, double nbar_r, double lambda, std::size_t n);

using RateFunction = std::function<double(double)>;

// Q'(lambda) = Q(lambda / theta) under Scheme A; theta in (0, 1).
double scheme_a_qprime(const RateFunction& q_fn, double lambda, double theta);

// 1 / q; throws DivergenceError for q <= 0.
double expected_attempts(double q);

struct LambdaSolution {
    double lambda = 0.0;
    double residual = 0.0;  // |lambda - F(lambda)|
    int iterations = 0;
    bool converged = false;
};

// Fixed point of F(lambda) = n nu / (1 + Q'(lambda) tau nu) by bisection on
// [n nu / (1 + tau nu), n nu]. Throws DomainError if Q' is seen to increase or leave [0, 1].
LambdaSolution solve_lambda_detailed(double n, double nu, double tau, const RateFunction& q_prime);

// As above; throws DomainError if the residual tolerance 1e-9 n nu is not met.
double solve_lambda(double n, double nu, double tau, const RateFunction& q_prime);

// Expected N-state duration 1 / (nu Q'); throws DivergenceError when Q' = 0 or nu = 0.
double xi_from_rates(double nu, double q_prime);

// 1 / G(1/n); throws DivergenceError when G(1/n) = 0.
double xi_reference(const GModel& model, std::size_t n);

struct RdpRates {
    double lambda = 0.0;   // total RDP arrivals per slot
    double q = 0.0;        // Q(lambda) without data traffic
    double q_prime = 0.0;  // Q'(lambda) under Scheme A
    double n_avg = 0.0;    // expected attempts
    double xi = 0.0;       // expected N-state duration, slots
};

// Closes the loop lambda -> Q' -> xi for a rate-dependent Q.
RdpRates rdp_rates(const RateFunction& q_fn, double n, double nu, double tau, double theta);

} // namespace rdcap
