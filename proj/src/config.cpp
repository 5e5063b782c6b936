#include "rdcap/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rdcap/errors.hpp"

namespace rdcap {

namespace {

double parse_double(std::string_view s, std::string_view what) {
    std::string str(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(str, &used);
    } catch (const std::exception&) {
        throw InvalidConfig("cannot parse number for " + std::string(what) + ": '" + str + "'");
    }
    if (used != str.size())
        throw InvalidConfig("trailing characters in " + std::string(what) + ": '" + str + "'");
    return v;
}

} // namespace

TauModel TauModel::constant(double slots) {
    TauModel t;
    t.kind_ = Kind::constant;
    t.coeff_ = slots;
    return t;
}

TauModel TauModel::inv_sqrt(double coeff) {
    TauModel t;
    t.kind_ = Kind::inv_sqrt;
    t.coeff_ = coeff;
    return t;
}

TauModel TauModel::table(std::vector<std::pair<double, double>> samples) {
    if (samples.empty()) throw InvalidConfig("tau table needs at least one sample");
    std::sort(samples.begin(), samples.end());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].first > 0.0) || !(samples[i].second > 0.0))
            throw InvalidConfig("tau table entries must be positive");
        if (i > 0 && samples[i].first == samples[i - 1].first)
            throw InvalidConfig("duplicate n in tau table");
    }
    TauModel t;
    t.kind_ = Kind::table;
    t.samples_ = std::move(samples);
    return t;
}

TauModel TauModel::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw InvalidConfig("tau_model must look like kind:value, got '" + std::string(text) + "'");
    const std::string_view kind = text.substr(0, colon);
    const std::string_view rest = text.substr(colon + 1);
    if (kind == "constant") return constant(parse_double(rest, "tau_model"));
    if (kind == "inv_sqrt") return inv_sqrt(parse_double(rest, "tau_model"));
    if (kind == "table") {
        std::vector<std::pair<double, double>> samples;
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            auto end = rest.find(';', pos);
            if (end == std::string_view::npos) end = rest.size();
            const auto item = rest.substr(pos, end - pos);
            if (!item.empty()) {
                const auto eq = item.find('=');
                if (eq == std::string_view::npos) throw InvalidConfig("tau table entry needs n=tau");
                samples.emplace_back(parse_double(item.substr(0, eq), "tau table n"),
                                     parse_double(item.substr(eq + 1), "tau table tau"));
            }
            pos = end + 1;
        }
        return table(std::move(samples));
    }
    throw InvalidConfig("unknown tau_model kind '" + std::string(kind) + "'");
}

std::string TauModel::to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
    case Kind::constant: os << "constant:" << coeff_; break;
    case Kind::inv_sqrt: os << "inv_sqrt:" << coeff_; break;
    case Kind::table:
        os << "table:";
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            if (i) os << ';';
            os << samples_[i].first << '=' << samples_[i].second;
        }
        break;
    }
    return os.str();
}

double TauModel::at(double n) const {
    switch (kind_) {
    case Kind::constant: return coeff_;
    case Kind::inv_sqrt: return coeff_ / std::sqrt(n);
    case Kind::table: {
        if (n <= samples_.front().first) return samples_.front().second;
        if (n >= samples_.back().first) return samples_.back().second;
        auto hi = std::upper_bound(samples_.begin(), samples_.end(), n,
                                   [](double v, const auto& s) { return v < s.first; });
        auto lo = hi - 1;
        const double t = (std::log(n) - std::log(lo->first)) / (std::log(hi->first) - std::log(lo->first));
        return std::exp(std::log(lo->second) + t * (std::log(hi->second) - std::log(lo->second)));
    }
    }
    return coeff_;
}

double NetworkConfig::reception_area() const {
    return std::min(1.0, area_coeff / static_cast<double>(n));
}

double NetworkConfig::reception_radius() const {
    const double a = reception_area();
    if (a >= 1.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(a / std::numbers::pi);
}

void NetworkConfig::validate() const {
    if (n < 1) throw InvalidConfig("n must be >= 1");
    if (!(w > 0.0)) throw InvalidConfig("w must be > 0");
    if (!(s_rreq > 0.0)) throw InvalidConfig("s_rreq must be > 0");
    if (!(delta >= 0.0)) throw InvalidConfig("delta must be >= 0");
    // nu = 0 is accepted as the degenerate "no route discovery" case.
    if (!(nu >= 0.0 && nu <= 1.0)) throw InvalidConfig("nu must lie in [0, 1]");
    if (!(theta > 0.0 && theta < 1.0)) throw InvalidConfig("theta must lie in (0, 1)");
    if (!(area_coeff > 0.0)) throw InvalidConfig("area_coeff must be > 0");
    if (!(path_loss_exponent > 0.0)) throw InvalidConfig("path_loss_exponent must be > 0");
    if (!(tau() > 0.0)) throw InvalidConfig("tau(n) must be > 0");
}

} // namespace rdcap
