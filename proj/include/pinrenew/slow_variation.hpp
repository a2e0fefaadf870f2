#pragma once

#include <cmath>
#include <complex>

#include "pinrenew/errors.hpp"

namespace pinrenew {

// Slowly varying factor of an inter-arrival tail. Two shapes are supported:
// a constant, and c * (log(e + x))^gamma. The shifted logarithm keeps the
// factor finite and positive from x = 1 on.
enum class sv_kind { constant, log_power };

struct SlowVariation {
    sv_kind kind = sv_kind::constant;
    double c = 1.0;
    double gamma = 0.0;

    double operator()(double x) const {
        if (kind == sv_kind::constant) return c;
        return c * std::pow(std::log(std::exp(1.0) + x), gamma);
    }

    std::complex<double> eval(std::complex<double> z) const {
        if (kind == sv_kind::constant) return {c, 0.0};
        return c * std::pow(std::log(std::exp(1.0) + z), gamma);
    }

    // Derivatives of log L, used by the tail machinery. With u = e + x and
    // l = log u they have closed forms; the constant case is identically 0.
    double dlog(double x) const {
        if (kind == sv_kind::constant) return 0.0;
        double u = std::exp(1.0) + x, l = std::log(u);
        return gamma / (u * l);
    }

    double d2log(double x) const {
        if (kind == sv_kind::constant) return 0.0;
        double u = std::exp(1.0) + x, l = std::log(u);
        return -gamma * (l + 1.0) / (u * u * l * l);
    }

    double d3log(double x) const {
        if (kind == sv_kind::constant) return 0.0;
        double u = std::exp(1.0) + x, l = std::log(u);
        return gamma * (2.0 * l * l + 3.0 * l + 2.0) / (u * u * u * l * l * l);
    }

    bool is_constant() const { return kind == sv_kind::constant || gamma == 0.0; }
};

inline SlowVariation make_constant_sv(double c = 1.0) {
    if (!(c > 0.0)) throw error("invalid-sv", "slow variation constant must be positive");
    return SlowVariation{sv_kind::constant, c, 0.0};
}

inline SlowVariation make_log_power_sv(double gamma, double c = 1.0) {
    if (!(c > 0.0)) throw error("invalid-sv", "slow variation constant must be positive");
    return SlowVariation{sv_kind::log_power, c, gamma};
}

// Pointwise product L1^p1 * L2^p2 collapsed back into a single factor.
// Only defined when the result is again one of the supported shapes.
inline SlowVariation sv_power(const SlowVariation& L, double p) {
    SlowVariation out = L;
    out.c = std::pow(L.c, p);
    if (L.kind == sv_kind::log_power) out.gamma = L.gamma * p;
    return out;
}

} // namespace pinrenew
