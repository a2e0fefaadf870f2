#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "pinrenew/errors.hpp"
#include "pinrenew/fft.hpp"
#include "pinrenew/law.hpp"
#include "pinrenew/numeric.hpp"
#include "pinrenew/renewal.hpp"

namespace pinrenew {

namespace detail {

// K-hat(F) = sum_n K(n) e^{-Fn}: the cached prefix plus a certified tail.
inline double law_transform(const InterArrivalLaw& law, double F) {
    kahan_sum s;
    for (std::size_t n = 1; n <= law.cache_n(); ++n)
        s.add(law.cache[n] * std::exp(-F * static_cast<double>(n)));
    if (law.kind == law_kind::table) {
        // geometric continuation: sum_{j>=1} t_m geo^j e^{-F(m+j)} = t_m e^{-Fm} q/(1-q)
        double q = law.geo * std::exp(-F);
        double tail = q > 0.0 ? law.cache[law.cache_n()] *
                                    std::exp(-F * static_cast<double>(law.cache_n())) * q /
                                    (1.0 - q)
                              : 0.0;
        return s.value() + tail;
    }
    double btot = law.b + F;
    TailEstimate t = tail_sum_power(law.sv, law.alpha, btot, 0,
                                    static_cast<double>(law.cache_n()));
    return s.value() + law.cb * law.norm * t.value;
}

// Derivative series sum_n n K(n) e^{-Fn}, for Newton steps and for the
// implicit derivative of the fixed point. Requires law.b + F > 0 when the
// law has alpha <= 1 (otherwise the series diverges and the caller must not
// ask).
inline double law_transform_moment(const InterArrivalLaw& law, double F) {
    kahan_sum s;
    for (std::size_t n = 1; n <= law.cache_n(); ++n)
        s.add(static_cast<double>(n) * law.cache[n] * std::exp(-F * static_cast<double>(n)));
    if (law.kind == law_kind::table) {
        double q = law.geo * std::exp(-F);
        if (q > 0.0) {
            double m = static_cast<double>(law.cache_n());
            double tm = law.cache[law.cache_n()] * std::exp(-F * m);
            s.add(tm * (m * q / (1.0 - q) + q / ((1.0 - q) * (1.0 - q))));
        }
        return s.value();
    }
    double btot = law.b + F;
    TailEstimate t =
        tail_sum_power(law.sv, law.alpha, btot, 1, static_cast<double>(law.cache_n()));
    return s.value() + law.cb * law.norm * t.value;
}

} // namespace detail

struct FreeEnergySolution {
    double h = 0.0;
    double F = 0.0;
    double dF = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;
    InterArrivalLaw tilted;
};

// Solve sum_n K(n) e^{-Fn} = e^{-h} for F >= 0. For h <= 0 the localized
// solution does not exist and F = 0 is returned (the free energy vanishes at
// and below criticality; the normalization puts the critical point at 0).
inline FreeEnergySolution free_energy(const InterArrivalLaw& law, double h, double tol = 1e-12) {
    if (law.b != 0.0) throw error("invalid-law", "free energy expects the untilted law");
    if (!std::isfinite(h)) throw error("invalid-law", "h must be finite");

    FreeEnergySolution sol;
    sol.h = h;
    if (h <= 0.0) {
        sol.F = 0.0;
        sol.residual = detail::law_transform(law, 0.0) - std::exp(-h);
        sol.tilted = law;
        return sol;
    }

    double target = std::exp(-h);
    double lo = 0.0, hi = h;
    // The transform is strictly decreasing in F, phi(0) >= 0 >= phi(h).
    while (hi - lo > 1e-6 * std::max(1.0, h)) {
        double mid = 0.5 * (lo + hi);
        if (detail::law_transform(law, mid) - target >= 0.0)
            lo = mid;
        else
            hi = mid;
    }

    double F = 0.5 * (lo + hi);
    double best_F = F, best_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        double phi = detail::law_transform(law, F) - target;
        if (std::abs(phi) < best_res) {
            best_res = std::abs(phi);
            best_F = F;
        }
        if (std::abs(phi) <= tol * 1e-3) break;
        double m1 = detail::law_transform_moment(law, F);
        double step = phi / m1;
        double Fn = F + step;
        if (!(Fn > 0.0) || !std::isfinite(Fn)) Fn = 0.5 * (F + lo);
        if (std::abs(step) <= std::numeric_limits<double>::epsilon() * std::max(F, 1e-300)) {
            F = Fn;
            break;
        }
        F = Fn;
    }
    sol.F = best_F;
    sol.residual = best_res;
    if (!(best_res <= tol))
        throw error("no-convergence", "fixed-point residual " + std::to_string(best_res) +
                                          " above tolerance after 200 iterations");
    sol.dF = target / detail::law_transform_moment(law, sol.F);
    sol.tilted = tilt(law, sol.F);
    return sol;
}

// The implicit derivative of the fixed point, cross-checked against the
// inverse mean of the tilted law; the two are the same quantity by the
// stationarity of the tilted renewal.
inline double free_energy_derivative(const FreeEnergySolution& sol) {
    if (!(sol.h > 0.0))
        throw error("at-criticality", "derivative requires h > 0");
    double rl = renewal_limit(sol.tilted);
    if (!(std::abs(sol.dF - rl) <= 1e-9 * std::abs(rl)))
        throw error("invariant-violation",
                    "implicit derivative " + std::to_string(sol.dF) +
                        " disagrees with the tilted renewal limit " + std::to_string(rl));
    return sol.dF;
}

// log Z_{N,h} by the pinned recursion Z_n = e^h sum_{j<n} Z_j K(n-j).
inline double homogeneous_log_partition(const InterArrivalLaw& law, double h, std::size_t N) {
    if (N < 1) throw error("invalid-law", "horizon must be at least 1");
    if (law.kind == law_kind::power && law.cache_n() < N)
        throw error("horizon-exceeds-cache", "law cached to " + std::to_string(law.cache_n()) +
                                                 " but horizon is " + std::to_string(N));
    std::vector<double> k(N + 1, 0.0);
    for (std::size_t n = 1; n <= N; ++n) k[n] = law.K(n);
    std::vector<double> w(N + 1, std::exp(h));
    std::vector<double> logz;
    online_selfconv_logged(k, w, logz);
    return logz[N];
}

} // namespace pinrenew
