#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rdcap {

// Exogenous mean route lifetime tau(n), in slots.
class TauModel {
public:
    enum class Kind { constant, inv_sqrt, table };

    static TauModel constant(double slots);
    // tau(n) = coeff / sqrt(n)
    static TauModel inv_sqrt(double coeff);
    // Log-log interpolation between (n, tau) samples; clamped outside the range.
    static TauModel table(std::vector<std::pair<double, double>> samples);

    // Accepts "constant:C", "inv_sqrt:C" or "table:n1=t1;n2=t2;...".
    static TauModel parse(std::string_view text);
    std::string to_string() const;

    double at(double n) const;
    Kind kind() const { return kind_; }
    double coeff() const { return coeff_; }

private:
    Kind kind_ = Kind::constant;
    double coeff_ = 1.0;
    std::vector<std::pair<double, double>> samples_;
};

struct NetworkConfig {
    std::size_t n = 1024;
    double w = 1.0;                 // bits per unit time
    double s_rreq = 1.0;            // bits
    double delta = 1.0;             // protocol-model guard factor
    double nu = 0.01;               // RDP initiations per slot by a node in state N
    double theta = 0.5;             // fraction of RDP slots (Scheme A)
    double area_coeff = 16.0;       // a(n) = min(1, area_coeff / n)
    TauModel tau_model = TauModel::constant(4.0);
    std::uint64_t seed = 1;
    double path_loss_exponent = 3.0;

    double slot_length() const { return s_rreq / w; }
    double reception_area() const;
    // Radius of the reception disk; infinite once a(n) reaches the whole domain.
    double reception_radius() const;
    double tau() const { return tau_model.at(static_cast<double>(n)); }

    // Throws InvalidConfig.
    void validate() const;
};

} // namespace rdcap
