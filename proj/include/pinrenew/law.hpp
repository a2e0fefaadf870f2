#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pinrenew/errors.hpp"
#include "pinrenew/numeric.hpp"
#include "pinrenew/slow_variation.hpp"
#include "pinrenew/tail_sum.hpp"

namespace pinrenew {

enum class law_kind { power, table };

// Inter-arrival law of a renewal process on {1, 2, ...}. Two families:
//   power: K(n) = cb * norm * L(n) * exp(-b n) / n^{1+alpha}, normalized so
//          the untilted law has total mass 1 and the tilted one mass 1 again
//          through cb;
//   table: an explicit finite prefix, optionally continued by a geometric
//          tail, for closed-form oracle laws.
struct InterArrivalLaw {
    law_kind kind = law_kind::power;
    double alpha = 0.0;
    SlowVariation sv;
    double norm = 1.0;
    double b = 0.0;
    double cb = 1.0;
    double tail_tol = 1e-9;
    std::vector<double> cache; // cache[n] = K(n), n = 1..cache_n(); cache[0] = 0
    double geo = 0.0;          // table tail ratio: K(m+j) = cache[m] * geo^j

    std::size_t cache_n() const { return cache.empty() ? 0 : cache.size() - 1; }

    // The (power) closed form; cache entries come from this exact code path,
    // so cached and recomputed values are bit-identical.
    double k_formula(double n) const {
        return cb * norm * sv(n) * std::exp(-b * n) * std::pow(n, -(1.0 + alpha));
    }

    double K(std::size_t n) const {
        if (n == 0) return 0.0;
        if (n <= cache_n()) return cache[n];
        if (kind == law_kind::table) {
            if (geo <= 0.0) return 0.0;
            std::size_t m = cache_n();
            return cache[m] * std::pow(geo, static_cast<double>(n - m));
        }
        return k_formula(static_cast<double>(n));
    }

    // The normalized slowly varying factor: the combination every tail
    // asymptotic in this library is phrased in.
    double L_eff(double x) const { return norm * sv(x); }

    // Total mass with a certified truncation bound.
    TailEstimate mass_certificate() const {
        kahan_sum s;
        for (std::size_t n = 1; n <= cache_n(); ++n) s.add(cache[n]);
        if (kind == law_kind::table) {
            double tail = geo > 0.0 ? cache[cache_n()] * geo / (1.0 - geo) : 0.0;
            return {s.value() + tail, 16.0 * std::numeric_limits<double>::epsilon() *
                                          static_cast<double>(cache_n() + 1)};
        }
        TailEstimate t = tail_sum_power(sv, alpha, b, 0, static_cast<double>(cache_n()));
        return {s.value() + cb * norm * t.value,
                cb * norm * t.bound +
                    16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(cache_n())};
    }

    // Mean inter-arrival time sum n K(n), certified; throws when divergent.
    TailEstimate mean_certificate() const {
        if (kind == law_kind::table) {
            kahan_sum s;
            for (std::size_t n = 1; n <= cache_n(); ++n)
                s.add(static_cast<double>(n) * cache[n]);
            double tail = 0.0;
            if (geo > 0.0) {
                double m = static_cast<double>(cache_n());
                tail = cache[cache_n()] *
                       (m * geo / (1.0 - geo) + geo / ((1.0 - geo) * (1.0 - geo)));
            }
            return {s.value() + tail, 16.0 * std::numeric_limits<double>::epsilon() *
                                          static_cast<double>(cache_n() + 1) *
                                          static_cast<double>(cache_n() + 1)};
        }
        if (b == 0.0 && alpha <= 1.0)
            throw error("divergent-tail", "mean diverges for an untilted law with alpha <= 1");
        kahan_sum s;
        for (std::size_t n = 1; n <= cache_n(); ++n)
            s.add(static_cast<double>(n) * cache[n]);
        TailEstimate t = tail_sum_power(sv, alpha, b, 1, static_cast<double>(cache_n()));
        return {s.value() + cb * norm * t.value,
                cb * norm * t.bound + 16.0 * std::numeric_limits<double>::epsilon() *
                                          static_cast<double>(cache_n()) *
                                          static_cast<double>(cache_n())};
    }
};

namespace detail {

// Normalizing sum of the untilted or tilted raw series L(n) e^{-bn} n^{-1-a},
// pushing the cutoff out until the certified remainder is small enough.
inline double certified_series_mass(double alpha, const SlowVariation& sv, double b,
                                    std::size_t start_T, double tail_tol) {
    std::size_t T = std::max<std::size_t>(start_T, 1024);
    for (;;) {
        kahan_sum s;
        for (std::size_t n = 1; n <= T; ++n) {
            double x = static_cast<double>(n);
            s.add(sv(x) * std::exp(-b * x) * std::pow(x, -(1.0 + alpha)));
        }
        TailEstimate t = tail_sum_power(sv, alpha, b, 0, static_cast<double>(T));
        double total = s.value() + t.value;
        if (t.bound <= 0.25 * tail_tol * total) return total;
        if (T >= 100000000)
            throw error("tail-not-resolvable",
                        "certified remainder cannot be brought below tail_tol by N_cut = 1e8");
        T *= 2;
    }
}

} // namespace detail

inline InterArrivalLaw make_power_law(double alpha, SlowVariation sv, std::size_t n_max,
                                      double tail_tol = 1e-9) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw error("alpha-out-of-range", "tail exponent must be positive");
    if (n_max < 64) throw error("invalid-law", "cache horizon must be at least 64");
    if (!(tail_tol > 0.0 && tail_tol <= 1e-6))
        throw error("invalid-law", "tail_tol must lie in (0, 1e-6]");

    InterArrivalLaw law;
    law.kind = law_kind::power;
    law.alpha = alpha;
    law.sv = sv;
    law.tail_tol = tail_tol;
    law.norm = 1.0 / detail::certified_series_mass(alpha, sv, 0.0, n_max, tail_tol);

    law.cache.assign(n_max + 1, 0.0);
    for (std::size_t n = 1; n <= n_max; ++n)
        law.cache[n] = law.k_formula(static_cast<double>(n));
    return law;
}

inline InterArrivalLaw make_table_law(const std::vector<double>& table, double geo_tail = 0.0) {
    if (table.empty()) throw error("not-a-probability", "empty table");
    if (!(geo_tail >= 0.0 && geo_tail < 1.0))
        throw error("not-a-probability", "geometric tail ratio must lie in [0, 1)");
    for (double e : table)
        if (!(e >= 0.0) || !std::isfinite(e))
            throw error("not-a-probability", "table entries must be nonnegative");
    if (geo_tail > 0.0 && !(table.back() > 0.0))
        throw error("not-a-probability", "geometric tail needs a positive last entry");

    InterArrivalLaw law;
    law.kind = law_kind::table;
    law.geo = geo_tail;
    law.tail_tol = 1e-15;
    law.cache.assign(table.size() + 1, 0.0);
    for (std::size_t i = 0; i < table.size(); ++i) law.cache[i + 1] = table[i];

    TailEstimate m = law.mass_certificate();
    if (std::abs(m.value - 1.0) > 1e-12)
        throw error("not-a-probability",
                    "table mass deviates from 1 by " + std::to_string(m.value - 1.0));
    return law;
}

// Exponential reweighting K_b(n) = cb e^{-bn} K(n) of an untilted law,
// renormalized to total mass 1.
inline InterArrivalLaw tilt(const InterArrivalLaw& law, double b) {
    if (law.b != 0.0) throw error("invalid-law", "tilt expects an untilted law");
    if (!(b >= 0.0) || !std::isfinite(b)) throw error("invalid-law", "tilt exponent must be >= 0");
    if (b == 0.0) return law;

    InterArrivalLaw out = law;
    out.b = b;
    if (law.kind == law_kind::table) {
        kahan_sum s;
        std::size_t m = law.cache_n();
        for (std::size_t n = 1; n <= m; ++n) {
            out.cache[n] = law.cache[n] * std::exp(-b * static_cast<double>(n));
            s.add(out.cache[n]);
        }
        out.geo = law.geo * std::exp(-b);
        double mass = s.value() + (out.geo > 0.0 ? out.cache[m] * out.geo / (1.0 - out.geo) : 0.0);
        out.cb = 1.0 / mass;
        for (std::size_t n = 1; n <= m; ++n) out.cache[n] *= out.cb;
        return out;
    }
    double tilted_mass =
        law.norm * detail::certified_series_mass(law.alpha, law.sv, b, law.cache_n(), law.tail_tol);
    out.cb = 1.0 / tilted_mass;
    for (std::size_t n = 1; n <= out.cache_n(); ++n)
        out.cache[n] = out.k_formula(static_cast<double>(n));
    return out;
}

struct IrrelevanceReport {
    bool holds = false;
    // Partial sums of n^{2 alpha - 2} / L(n)^2 at increasing horizons: the
    // convergence/divergence evidence behind the verdict.
    std::vector<std::pair<double, double>> partial_sums;
    std::string verdict;
};

inline IrrelevanceReport check_irrelevance_condition(const InterArrivalLaw& law) {
    if (law.kind == law_kind::table)
        throw error("unsupported-L", "table laws have no asymptotic form; classify via the "
                                     "squared-renewal summability instead");
    if (law.b != 0.0) throw error("invalid-law", "condition applies to untilted laws");

    IrrelevanceReport rep;
    if (law.alpha < 0.5) {
        rep.holds = true;
        rep.verdict = "alpha < 1/2";
    } else if (law.alpha == 0.5) {
        bool log_conv = law.sv.kind == sv_kind::log_power && law.sv.gamma > 0.5;
        rep.holds = log_conv;
        rep.verdict = log_conv ? "alpha = 1/2 and the log-power series converges (gamma > 1/2)"
                               : "alpha = 1/2 and the series diverges";
    } else {
        rep.holds = false;
        rep.verdict = "alpha > 1/2";
    }

    kahan_sum s;
    std::size_t next_report = 1000;
    for (std::size_t n = 1; n <= 1000000; ++n) {
        double x = static_cast<double>(n);
        double Lx = law.sv(x);
        s.add(std::pow(x, 2.0 * law.alpha - 2.0) / (Lx * Lx));
        if (n == next_report) {
            rep.partial_sums.emplace_back(x, s.value());
            next_report *= 10;
        }
    }
    return rep;
}

// Closed-form oracle laws used throughout the tests.
inline InterArrivalLaw geometric_law(double p) {
    if (!(p > 0.0 && p < 1.0)) throw error("not-a-probability", "geometric p must lie in (0,1)");
    // K(n) = (1-p) p^{n-1}: success probability 1-p per step, mean 1/(1-p).
    return make_table_law({1.0 - p}, p);
}

inline InterArrivalLaw deterministic_law(std::size_t period = 1) {
    if (period == 0) throw error("not-a-probability", "period must be positive");
    std::vector<double> t(period, 0.0);
    t[period - 1] = 1.0;
    return make_table_law(t);
}

} // namespace pinrenew
