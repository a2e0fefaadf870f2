#pragma once

// Intersection of two independent copies of a renewal process: the squared
// renewal function, extended-precision deconvolution of its inter-arrival
// law, generating-function evaluators with certified tails, and the Fourier
// diagnostics for the untilted law.

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pinrenew/bigfloat.hpp"
#include "pinrenew/errors.hpp"
#include "pinrenew/law.hpp"
#include "pinrenew/numeric.hpp"
#include "pinrenew/renewal.hpp"
#include "pinrenew/slow_variation.hpp"
#include "pinrenew/tail_sum.hpp"

namespace pinrenew {

// ---------------------------------------------------------------------------
// Tail helpers shared by the evaluators below.

// Sum of K(n) n^k e^{-extra n} beyond N for a power law, constants included.
inline TailEstimate law_tail_sum(const InterArrivalLaw& law, double extra_rate, int k,
                                 std::size_t N) {
    TailEstimate t =
        tail_sum_power(law.sv, law.alpha, law.b + extra_rate, k, static_cast<double>(N));
    double c = law.cb * law.norm;
    return {c * t.value, c * t.bound};
}

// Sum of u(n)^2 e^{-decay n} beyond N for an untilted power law, using the
// renewal density asymptotic u(n) ~ (alpha sin(pi alpha)/pi) / (L_eff(n)
// n^{1-alpha}). The bound covers the quadrature, not the asymptotic itself.
inline TailEstimate squared_density_tail(const InterArrivalLaw& law, double decay,
                                         std::size_t N) {
    if (law.kind != law_kind::power || law.b != 0.0 || !(law.alpha < 1.0))
        throw error("not-applicable",
                    "density asymptotic holds for untilted power laws with exponent below 1");
    double a = law.alpha;
    double cgl = a * std::sin(M_PI * a) / M_PI;
    SlowVariation sv2 = sv_power(law.sv, -2.0);
    double scale = cgl * cgl / (law.norm * law.norm);
    TailEstimate t = tail_sum_power(sv2, 1.0 - 2.0 * a, decay, 0, static_cast<double>(N));
    return {scale * t.value, scale * t.bound};
}

// ---------------------------------------------------------------------------
// Squared renewal table.

inline RenewalTable square_renewal(const RenewalTable& table) {
    RenewalTable out = table;
    for (auto& v : out.u) v *= v;
    out.u_inf *= out.u_inf;
    out.power = table.power * 2;
    return out;
}

// ---------------------------------------------------------------------------
// Extended-precision deconvolution.

namespace mpdetail {

struct mp_tables {
    std::vector<bigfloat> u; // base renewal function, indices 0..N
    std::vector<bigfloat> U; // u raised to the table's power
    std::vector<bigfloat> K; // deconvolved inter-arrival law, K[0] unused
    bigfloat u_inf;
    bigfloat U_inf;
    unsigned bits = 0;
};

// Certified double tail of sum_{n>N} n K(n), used to close the mean when the
// limit of u is needed at working precision.
inline double mean_tail_beyond(const InterArrivalLaw& law, std::size_t N) {
    if (law.kind == law_kind::table) {
        std::size_t m = law.cache_n();
        double kN = law.K(N);
        if (law.geo <= 0.0 || kN <= 0.0 || N < m) return 0.0;
        double g = law.geo;
        double s0 = g / (1.0 - g), s1 = g / ((1.0 - g) * (1.0 - g));
        return kN * (static_cast<double>(N) * s0 + s1);
    }
    return law_tail_sum(law, 0.0, 1, N).value;
}

// One deconvolution pass at fixed precision. The renewal function is rebuilt
// here rather than taken from the double table, because the deconvolved
// entries live far below the double noise floor of any precomputed u.
//
// Table laws are taken verbatim from their double entries: those values ARE
// the law. A tilted power law is instead rebuilt from its closed form with
// the normalization re-closed at working precision: the double cache carries
// a ~1e-14 mass defect, invisible pointwise but enough to shift the renewal
// limit, and generating-function evaluations beyond z = 1 amplify that shift
// by z^N.
inline mp_tables run_deconvolution(const InterArrivalLaw& law, int power, std::size_t N,
                                   unsigned bits) {
    precision_guard guard(bits);
    mp_tables t;
    t.bits = bits;

    std::vector<bigfloat> k;
    if (law.kind == law_kind::power && law.b > 0.0) {
        double horizon = ((static_cast<double>(bits) + 32.0) * M_LN2 + 32.0) / law.b;
        std::size_t M = std::max(N, static_cast<std::size_t>(horizon) + 1);
        k.assign(M + 1, bigfloat(0));
        bigfloat e1 = boost::multiprecision::exp(bigfloat(1));
        bigfloat mass(0);
        for (std::size_t n = 1; n <= M; ++n) {
            bigfloat x(n);
            bigfloat sv(law.sv.c);
            if (law.sv.kind == sv_kind::log_power && law.sv.gamma != 0.0)
                sv *= boost::multiprecision::pow(boost::multiprecision::log(e1 + x),
                                                 bigfloat(law.sv.gamma));
            k[n] = sv * boost::multiprecision::exp(bigfloat(-law.b) * x) *
                   boost::multiprecision::pow(x, bigfloat(-1.0 - law.alpha));
            mass += k[n];
        }
        bigfloat mean(0);
        for (std::size_t n = 1; n <= M; ++n) {
            k[n] /= mass;
            mean += bigfloat(n) * k[n];
        }
        t.u_inf = 1 / mean;
    } else {
        k.assign(N + 1, bigfloat(0));
        for (std::size_t n = 1; n <= N; ++n) k[n] = bigfloat(law.K(n));
        if (law.kind == law_kind::power && law.alpha <= 1.0) {
            t.u_inf = 0;
        } else {
            bigfloat mean(0);
            for (std::size_t n = 1; n <= N; ++n) mean += bigfloat(n) * k[n];
            mean += bigfloat(mean_tail_beyond(law, N));
            t.u_inf = 1 / mean;
        }
    }

    mpfr_t acc;
    mpfr_init2(acc, bits);

    t.u.assign(N + 1, bigfloat(0));
    t.u[0] = 1;
    for (std::size_t n = 1; n <= N; ++n) {
        mpfr_set_ui(acc, 0, MPFR_RNDN);
        for (std::size_t j = 0; j < n; ++j)
            mpfr_fma(acc, t.u[j].backend().data(), k[n - j].backend().data(), acc, MPFR_RNDN);
        mpfr_set(t.u[n].backend().data(), acc, MPFR_RNDN);
    }
    t.U_inf = 1;
    for (int q = 0; q < power; ++q) t.U_inf *= t.u_inf;

    t.U.assign(N + 1, bigfloat(0));
    for (std::size_t n = 0; n <= N; ++n) {
        bigfloat p(1);
        for (int q = 0; q < power; ++q) p *= t.u[n];
        t.U[n] = p;
    }

    t.K.assign(N + 1, bigfloat(0));
    for (std::size_t n = 1; n <= N; ++n) {
        mpfr_set_ui(acc, 0, MPFR_RNDN);
        for (std::size_t j = 1; j < n; ++j)
            mpfr_fma(acc, t.K[j].backend().data(), t.U[n - j].backend().data(), acc, MPFR_RNDN);
        mpfr_sub(t.K[n].backend().data(), t.U[n].backend().data(), acc, MPFR_RNDN);
    }

    mpfr_clear(acc);
    return t;
}

// Least-squares slope of -log K(n) against n over the last decade of
// resolvable indices; NaN when there is nothing to fit.
inline double fit_decay_rate(const mp_tables& t) {
    std::size_t N = t.K.size() - 1;
    std::size_t lo = std::max<std::size_t>(N / 10, 8);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t n = lo; n <= N; ++n) {
        if (t.K[n] > bigfloat(1e-300))
            pts.emplace_back(static_cast<double>(n),
                             -boost::multiprecision::log(t.K[n]).convert_to<double>());
    }
    if (pts.size() < 8) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = static_cast<double>(pts.size());
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace mpdetail

// Inter-arrival law of the intersection renewal, peeled off a squared
// renewal table by extended-precision deconvolution.
struct IntersectionTable {
    std::vector<double> Kk; // K(n) at index n, entry 0 is zero
    double mass_defect = 0.0;
    RenewalTable U; // the squared table the deconvolution reproduces
    int precision_bits = 0;
    double agreement_err = 0.0;
    double fitted_rate = 0.0; // decay rate of K from the last decade, NaN when flat
    std::shared_ptr<const mpdetail::mp_tables> mp;

    std::size_t N() const { return Kk.size() - 1; }
};

namespace mpdetail {

// Tail of sum_{n>N} K(n) for the mass defect, by the model matching the law:
// the squared-density asymptotic for a terminating power intersection, a
// geometric continuation of the fitted rate otherwise, a power-exponent fit
// as a last resort.
inline double intersection_mass_tail(const InterArrivalLaw& law, const mp_tables& t,
                                     const std::vector<double>& Kk, double fitted_rate) {
    std::size_t N = Kk.size() - 1;
    if (law.kind == law_kind::power && law.b == 0.0 && law.alpha < 0.5) {
        kahan_sum ssq;
        for (std::size_t n = 0; n <= N; ++n) ssq.add(t.U[n].convert_to<double>());
        double tail = squared_density_tail(law, 0.0, N).value;
        double sumsq = ssq.value() + tail;
        return tail / (sumsq * sumsq);
    }
    if (std::isfinite(fitted_rate) && fitted_rate > 1e-6) {
        double rho = std::exp(-fitted_rate);
        return Kk[N] * rho / (1.0 - rho);
    }
    // power-exponent fit on the last decade: K(n) ~ C n^{-q}
    std::size_t lo = std::max<std::size_t>(N / 10, 8);
    if (!(Kk[lo] > 0.0 && Kk[N] > 0.0) || lo >= N) return 0.0;
    double q = -std::log(Kk[N] / Kk[lo]) / std::log(static_cast<double>(N) / lo);
    if (!(q > 1.0)) return 0.0;
    return Kk[N] * static_cast<double>(N) / (q - 1.0);
}

} // namespace mpdetail

inline IntersectionTable deconvolve(const RenewalTable& U, double target_rel_err,
                                    unsigned start_bits = 128) {
    if (!(target_rel_err > 0.0))
        throw error("invalid-law", "target_rel_err must be positive");
    if (U.u.empty() || U.u[0] != 1.0)
        throw error("invalid-renewal-function", "a renewal function starts at U(0) = 1");
    if (!U.law) throw error("invalid-renewal-function", "table carries no law");
    if (start_bits < 32 || start_bits > 4096)
        throw error("invalid-law", "starting precision must lie in [32, 4096] bits");
    std::size_t N = U.N();

    mpdetail::mp_tables prev = mpdetail::run_deconvolution(*U.law, U.power, N, start_bits);
    for (unsigned bits = start_bits * 2; bits <= 4096; bits *= 2) {
        mpdetail::mp_tables cur = mpdetail::run_deconvolution(*U.law, U.power, N, bits);
        precision_guard guard(bits);
        double worst = 0.0;
        for (std::size_t n = 1; n <= N; ++n) {
            if (!(boost::multiprecision::abs(cur.K[n]) > bigfloat(1e-300))) continue;
            bigfloat rel = boost::multiprecision::abs(prev.K[n] - cur.K[n]) /
                           boost::multiprecision::abs(cur.K[n]);
            worst = std::max(worst, rel.convert_to<double>());
        }
        if (worst <= target_rel_err) {
            IntersectionTable out;
            out.U = U;
            out.precision_bits = static_cast<int>(bits);
            out.agreement_err = worst;
            out.Kk.assign(N + 1, 0.0);
            for (std::size_t n = 1; n <= N; ++n) out.Kk[n] = cur.K[n].convert_to<double>();
            auto mp = std::make_shared<mpdetail::mp_tables>(std::move(cur));
            out.fitted_rate = mpdetail::fit_decay_rate(*mp);
            kahan_sum mass;
            for (std::size_t n = 1; n <= N; ++n) mass.add(out.Kk[n]);
            double tail =
                mpdetail::intersection_mass_tail(*U.law, *mp, out.Kk, out.fitted_rate);
            out.mass_defect = std::clamp(1.0 - mass.value() - tail, 0.0, 1.0);
            out.mp = std::move(mp);
            return out;
        }
        prev = std::move(cur);
    }
    throw error("precision-exhausted",
                "deconvolution runs disagree at " + std::to_string(target_rel_err) +
                    " up to 4096 bits");
}

// Defect of the defining recursion, U(n) - sum_{j<=n} K(j) U(n-j), evaluated
// at the table's own working precision.
inline std::vector<double> reconvolution_residuals(const IntersectionTable& KT) {
    const auto& t = *KT.mp;
    precision_guard guard(t.bits);
    std::size_t N = KT.N();
    std::vector<double> res(N + 1, 0.0);
    res[0] = (t.U[0] - 1).convert_to<double>();
    for (std::size_t n = 1; n <= N; ++n) {
        bigfloat s(0);
        for (std::size_t j = 1; j <= n; ++j) s += t.K[j] * t.U[n - j];
        res[n] = (t.U[n] - s).convert_to<double>();
    }
    return res;
}

// ---------------------------------------------------------------------------
// Classification: terminating versus recurrent intersection.

struct ClassificationReport {
    bool terminating = false;
    double K_infinity = 0.0;
};

inline ClassificationReport classify_intersection(const IntersectionTable& K0,
                                                  const RenewalTable& u0) {
    const InterArrivalLaw& law = *u0.law;
    if (law.b != 0.0) throw error("invalid-law", "classification expects an untilted law");
    if (u0.power != 1) throw error("invalid-law", "expects the unsquared renewal table");
    (void)K0;

    if (law.kind == law_kind::table) {
        if (u0.u_inf > 0.0) return {false, 0.0};
        throw error("inconclusive", "no tail extension for a table law with vanishing u");
    }
    IrrelevanceReport irr = check_irrelevance_condition(law);
    if (!irr.holds) return {false, 0.0};
    if (law.alpha >= 0.5)
        throw error("inconclusive",
                    "boundary case: summable by the log factor but no closed tail extension");
    kahan_sum s;
    for (std::size_t n = 0; n <= u0.N(); ++n) s.add(u0.u[n] * u0.u[n]);
    double sumsq = s.value() + squared_density_tail(law, 0.0, u0.N()).value;
    return {true, 1.0 / sumsq};
}

// ---------------------------------------------------------------------------
// Generating functions.

struct DhatResult {
    double value = 0.0;
    double tail_fraction = 0.0;
};

// D_hat(z) = sum_{n>=0} (u(n)^2 - u_inf^2) z^n from the double table with the
// documented tail extension beyond the horizon. For z > 1 the direct part is
// cut where u(n) - u_inf drops below the double noise floor and the extension
// takes over from there.
inline DhatResult eval_Dhat(const RenewalTable& u_table, const InterArrivalLaw& law_b,
                            double z) {
    if (u_table.power != 1) throw error("invalid-law", "expects the unsquared renewal table");
    if (!(z > 0.0)) throw error("invalid-law", "z must be positive");
    double b = law_b.b;
    if (law_b.kind == law_kind::power) {
        if (b == 0.0) {
            if (z > 1.0) throw error("invalid-law", "z must not exceed 1 for an untilted law");
            if (!(law_b.alpha < 1.0))
                throw error("not-applicable",
                            "no tail model for an untilted law with positive density limit");
            if (z == 1.0 && !check_irrelevance_condition(law_b).holds)
                throw error("not-applicable",
                            "squared renewal density is not summable; z = 1 diverges");
        } else if (!(z < std::exp(b))) {
            throw error("invalid-law", "z must lie below e^b");
        }
    } else if (z > 1.0) {
        double dev = std::abs(u_table.u[u_table.N()] - u_table.u_inf);
        if (dev > 1e-12 * (1.0 + u_table.u_inf))
            throw error("tail-dominates", "table-law deviations unresolved at the horizon");
    }

    const std::vector<double>& u = u_table.u;
    double u_inf = u_table.u_inf;
    std::size_t N = u_table.N();
    std::size_t n_eff = N;
    if (z > 1.0) {
        while (n_eff > 1 && std::abs(u[n_eff] - u_inf) <= 1e-11 * u_inf) --n_eff;
    }

    kahan_sum s;
    s.add(1.0 - u_inf * u_inf);
    double zp = 1.0;
    for (std::size_t n = 1; n <= n_eff; ++n) {
        zp *= z;
        if (n % 4096 == 0) zp = std::pow(z, static_cast<double>(n));
        s.add((u[n] - u_inf) * (u[n] + u_inf) * zp);
    }

    double tail = 0.0;
    if (law_b.kind == law_kind::power) {
        if (b > 0.0) {
            double scale = std::pow(law_b.cb - 1.0, -2.0);
            tail = 2.0 * u_inf * scale * law_tail_sum(law_b, -std::log(z), 0, n_eff).value;
            SlowVariation sv2 = sv_power(law_b.sv, 2.0);
            double c2 = law_b.cb * law_b.norm;
            TailEstimate sq = tail_sum_power(sv2, 1.0 + 2.0 * law_b.alpha,
                                             2.0 * b - std::log(z), 0,
                                             static_cast<double>(n_eff));
            tail += scale * scale * c2 * c2 * sq.value;
        } else {
            tail = squared_density_tail(law_b, -std::log(z), N).value;
        }
    } else {
        double dev = std::abs(u[n_eff] - u_inf);
        if (dev > 1e-12 * (1.0 + u_inf) && n_eff >= 9) {
            double prev = std::abs(u[n_eff - 8] - u_inf);
            if (prev > 0.0 && dev < prev) {
                double rho = std::pow(dev / prev, 1.0 / 8.0);
                double q = z * rho;
                if (!(q < 1.0))
                    throw error("tail-dominates", "table-law tail ratio reaches 1");
                tail = 2.0 * u_inf * dev * std::pow(z, static_cast<double>(n_eff)) * q /
                       (1.0 - q);
            }
        }
    }

    double value = s.value() + tail;
    double frac = std::abs(tail) / std::max(std::abs(value), 1e-300);
    if (frac > 0.10)
        throw error("tail-dominates", "tail extension contributes " + std::to_string(frac) +
                                          " of the value; enlarge the horizon");
    return {value, frac};
}

// Delta_hat(z) = sum_{n>=0} (u(n) - u_inf) z^n for a tilted power law.
inline double eval_Delta_hat(const RenewalTable& u_table, const InterArrivalLaw& law_b,
                             double z) {
    if (law_b.kind != law_kind::power || !(law_b.b > 0.0))
        throw error("not-applicable", "first-power transform needs a tilted power law");
    if (!(z > 0.0 && z < std::exp(law_b.b)))
        throw error("invalid-law", "z must lie in (0, e^b)");
    const std::vector<double>& u = u_table.u;
    double u_inf = u_table.u_inf;
    kahan_sum s;
    s.add(1.0 - u_inf);
    double zp = 1.0;
    for (std::size_t n = 1; n <= u_table.N(); ++n) {
        zp *= z;
        if (n % 4096 == 0) zp = std::pow(z, static_cast<double>(n));
        s.add((u[n] - u_inf) * zp);
    }
    double scale = std::pow(law_b.cb - 1.0, -2.0);
    return s.value() + scale * law_tail_sum(law_b, -std::log(z), 0, u_table.N()).value;
}

// Generating function of the intersection law at real z, from the double
// table plus a geometric tail bound continued at the fitted rate.
struct KhatValue {
    double value = 0.0;
    double tail_bound = 0.0;
};

inline KhatValue eval_Khat(const IntersectionTable& KT, double z) {
    if (!(z > 0.0)) throw error("invalid-law", "z must be positive");
    std::size_t N = KT.N();
    kahan_sum s;
    double zp = 1.0;
    for (std::size_t n = 1; n <= N; ++n) {
        zp *= z;
        if (n % 4096 == 0) zp = std::pow(z, static_cast<double>(n));
        s.add(KT.Kk[n] * zp);
    }
    double rate = std::isfinite(KT.fitted_rate) ? std::max(KT.fitted_rate, 0.0) : 0.0;
    double q = z * std::exp(-rate);
    double bound = std::numeric_limits<double>::infinity();
    if (q < 1.0 && KT.Kk[N] > 0.0)
        bound = KT.Kk[N] * std::pow(z, static_cast<double>(N)) * q / (1.0 - q);
    else if (KT.Kk[N] == 0.0)
        bound = 0.0;
    return {s.value(), bound};
}

// First two factorial-moment transforms of the law at 1: K_hat'(1) and
// K_hat''(1), certified sums.
struct KhatMoments {
    double kp1 = 0.0;  // sum n K(n)
    double kpp1 = 0.0; // sum n (n-1) K(n)
};

inline KhatMoments khat_moments(const InterArrivalLaw& law) {
    double m1 = law.mean_certificate().value;
    double m2;
    std::size_t M = law.cache_n();
    if (law.kind == law_kind::table) {
        kahan_sum s;
        for (std::size_t n = 1; n <= M; ++n)
            s.add(static_cast<double>(n) * static_cast<double>(n) * law.K(n));
        double tail = 0.0;
        if (law.geo > 0.0) {
            double g = law.geo, m = static_cast<double>(M);
            double s0 = g / (1.0 - g);
            double s1 = g / ((1.0 - g) * (1.0 - g));
            double s2 = g * (1.0 + g) / ((1.0 - g) * (1.0 - g) * (1.0 - g));
            tail = law.K(M) * (m * m * s0 + 2.0 * m * s1 + s2);
        }
        m2 = s.value() + tail;
    } else {
        if (law.b == 0.0 && law.alpha <= 2.0)
            throw error("divergent-tail", "second moment diverges for an untilted law");
        kahan_sum s;
        for (std::size_t n = 1; n <= M; ++n)
            s.add(static_cast<double>(n) * static_cast<double>(n) * law.K(n));
        m2 = s.value() + law_tail_sum(law, 0.0, 2, M).value;
    }
    return {m1, m2 - m1};
}

// ---------------------------------------------------------------------------
// Fourier diagnostics for the untilted power law.

namespace specdetail {

struct g_value {
    std::complex<double> value;
    double bound;
};

// G(theta) = sum_j K(j)(1 - e^{2 pi i theta j}) with a certified truncation:
// the real remainder is summed by the power tail, the oscillatory remainder
// by contour rotation for small frequencies and an Abel bound otherwise.
inline g_value eval_G_certified(const InterArrivalLaw& law, double theta, std::size_t J) {
    bool flip = theta > 0.5;
    double th = flip ? 1.0 - theta : theta;
    double omega = 2.0 * M_PI * th;

    kahan_sum re, im;
    for (std::size_t j = 1; j <= J; ++j) {
        double kj = law.K(j);
        double ph = omega * static_cast<double>(j);
        re.add(kj * (1.0 - std::cos(ph)));
        im.add(-kj * std::sin(ph));
    }
    std::complex<double> g(re.value(), im.value());

    TailEstimate flat = law_tail_sum(law, 0.0, 0, J);
    g += flat.value;
    double bound = flat.bound;
    if (omega < 0.35) {
        ComplexTailEstimate osc =
            tail_sum_oscillatory(law.sv, law.alpha, 0.0, omega, static_cast<double>(J));
        g -= law.norm * osc.value;
        bound += law.norm * osc.bound;
    } else {
        bound += law.K(J + 1) / std::sin(omega / 2.0);
    }
    if (flip) g = std::conj(g);
    return {g, bound};
}

} // namespace specdetail

inline std::complex<double> eval_G(const InterArrivalLaw& law, double theta) {
    if (law.kind != law_kind::power || law.b != 0.0)
        throw error("not-applicable", "G is defined for untilted power laws");
    if (!(theta > 0.0 && theta < 1.0))
        throw error("invalid-law", "theta must lie in (0, 1)");
    double omega = 2.0 * M_PI * std::min(theta, 1.0 - theta);
    std::size_t J = omega < 0.35 ? 8192 : 65536;
    return specdetail::eval_G_certified(law, theta, J).value;
}

struct PlancherelReport {
    double sum_sq = 0.0;
    double integral = 0.0;
    double gap = 0.0;
    bool ok = false;
};

// Compares sum_n u(n)^2 against the integral of 1/|G|^2 over the circle.
// The integrand's endpoint singularity theta^{-2 alpha} is flattened by the
// substitution theta = s^{1/(1-2 alpha)}; the node count doubles until the
// midpoint rule is stable to 1e-4 relative.
inline PlancherelReport plancherel_check(const RenewalTable& u0, const InterArrivalLaw& law) {
    IrrelevanceReport irr = check_irrelevance_condition(law);
    if (!irr.holds)
        throw error("not-applicable", "1/|G|^2 is not integrable: " + irr.verdict);
    if (law.alpha >= 0.5)
        throw error("endpoint-singularity-unresolved",
                    "boundary exponent: the grading substitution degenerates");
    if (u0.power != 1) throw error("invalid-law", "expects the unsquared renewal table");

    PlancherelReport rep;
    kahan_sum ssq;
    for (std::size_t n = 0; n <= u0.N(); ++n) ssq.add(u0.u[n] * u0.u[n]);
    rep.sum_sq = ssq.value() + squared_density_tail(law, 0.0, u0.N()).value;

    double q = 1.0 / (1.0 - 2.0 * law.alpha);
    double smax = std::pow(0.5, 1.0 / q);
    auto f = [&](double s) {
        double theta = std::pow(s, q);
        std::complex<double> g = eval_G(law, theta);
        return q * std::pow(s, q - 1.0) / std::norm(g);
    };
    double prev = 0.0;
    bool converged = false;
    for (std::size_t m = 64; m <= 16384; m *= 2) {
        kahan_sum acc;
        double h = smax / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i)
            acc.add(f(h * (static_cast<double>(i) + 0.5)));
        double cur = 2.0 * h * acc.value();
        if (m > 64 && std::abs(cur - prev) <= 1e-4 * std::abs(cur)) {
            rep.integral = cur;
            converged = true;
            break;
        }
        prev = cur;
    }
    if (!converged)
        throw error("endpoint-singularity-unresolved",
                    "midpoint refinement did not stabilize to 1e-4 by 16384 nodes");
    rep.gap = std::abs(rep.sum_sq - rep.integral) / rep.sum_sq;
    rep.ok = rep.gap < 0.05;
    return rep;
}

struct SpectralDiagnostics {
    std::vector<double> theta_grid;
    std::vector<std::complex<double>> G_values;
    double D0_hat_1 = 0.0;
    double plancherel_gap = 0.0;
};

inline SpectralDiagnostics spectral_diagnostics(const RenewalTable& u0,
                                                const InterArrivalLaw& law,
                                                std::vector<double> theta_grid) {
    SpectralDiagnostics d;
    d.theta_grid = std::move(theta_grid);
    for (double th : d.theta_grid) d.G_values.push_back(eval_G(law, th));
    d.D0_hat_1 = eval_Dhat(u0, law, 1.0).value;
    d.plancherel_gap = plancherel_check(u0, law).gap;
    return d;
}

// ---------------------------------------------------------------------------
// Asymptotic ratio of the intersection law against the squared density.

struct Prop57Report {
    double c = 0.0;
    std::vector<std::pair<std::size_t, double>> ratios;
    bool ok = false;
};

inline Prop57Report prop57_check(const IntersectionTable& K0, const RenewalTable& u0) {
    ClassificationReport cls = classify_intersection(K0, u0);
    if (!cls.terminating)
        throw error("not-applicable", "ratio law needs a terminating intersection");

    Prop57Report rep;
    double sumsq = 1.0 / cls.K_infinity;
    rep.c = 1.0 / (sumsq * sumsq);

    std::size_t N = std::min(K0.N(), u0.N());
    rep.ok = true;
    static constexpr std::size_t steps[3] = {1, 2, 5};
    for (std::size_t dec = 1; dec <= N; dec *= 10) {
        for (std::size_t s : steps) {
            std::size_t n = dec * s;
            if (n > N) break;
            double ratio = K0.Kk[n] / (rep.c * u0.u[n] * u0.u[n]);
            rep.ratios.emplace_back(n, ratio);
            if (n * 10 >= N && std::abs(ratio - 1.0) > 0.10) rep.ok = false;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Exponential decay rate of the tilted intersection law: the minimal real
// root of (r - 1) D_hat_b(r) = u_b(inf)^2 against the fitted table rate.

struct Prop58Report {
    double r = 0.0;
    double fitted_rate = 0.0;
    double agreement = 0.0;
    bool sign_change = false;
};

inline Prop58Report prop58_rate(const InterArrivalLaw& law_b, const RenewalTable& u_b,
                                const IntersectionTable& Kb) {
    if (!(law_b.b > 0.0))
        throw error("not-applicable", "decay-rate law needs a tilted law");
    if (!std::isfinite(Kb.fitted_rate))
        throw error("not-applicable", "no resolvable tail to fit");
    const auto& t = *Kb.mp;
    precision_guard guard(t.bits);

    double dd = (t.U_inf.convert_to<double>());
    if (std::abs(u_b.u_inf * u_b.u_inf - dd) > 1e-6 * dd)
        throw error("invariant-violation", "renewal table does not match the deconvolution");

    std::size_t N = Kb.N();
    auto dhat = [&](double z) {
        bigfloat acc = 1 - t.U_inf;
        bigfloat zp(1), zb(z);
        for (std::size_t n = 1; n <= N; ++n) {
            zp *= zb;
            acc += (t.U[n] - t.U_inf) * zp;
        }
        // table laws lose their deviations geometrically fast; only the
        // power tail needs an extension beyond the horizon
        if (law_b.kind == law_kind::power) {
            double scale = std::pow(law_b.cb - 1.0, -2.0);
            double u_inf = t.u_inf.convert_to<double>();
            acc +=
                bigfloat(2.0 * u_inf * scale * law_tail_sum(law_b, -std::log(z), 0, N).value);
        }
        return acc;
    };
    auto phi = [&](double r) {
        bigfloat v = bigfloat(dd) - (bigfloat(r) - 1) * dhat(r);
        return v.convert_to<double>();
    };

    Prop58Report rep;
    rep.fitted_rate = Kb.fitted_rate;
    double lo = 1.0 + 1e-9, hi = std::exp(law_b.b) * (1.0 - 1e-9);
    if (!(phi(lo) > 0.0) || !(phi(hi) < 0.0)) {
        rep.r = std::numeric_limits<double>::quiet_NaN();
        rep.agreement = std::numeric_limits<double>::quiet_NaN();
        rep.sign_change = false;
        return rep;
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * lo; ++it) {
        double mid = 0.5 * (lo + hi);
        (phi(mid) > 0.0 ? lo : hi) = mid;
    }
    rep.r = 0.5 * (lo + hi);
    rep.sign_change = true;
    rep.agreement = std::abs(rep.fitted_rate - std::log(rep.r)) / std::log(rep.r);
    return rep;
}

// ---------------------------------------------------------------------------
// The Q transforms of the tilted law and their normalized ratios.

struct QTransformReport {
    std::complex<double> Q1{0.0, 0.0};
    std::complex<double> Q2{0.0, 0.0};
    double Q1_1 = 0.0;
    double Q2_1 = 0.0;
    std::complex<double> F1{0.0, 0.0};
    std::complex<double> F2{0.0, 0.0};
    bool f2_bounded = false;
};

namespace specdetail {

// Q1(z) = sum_j a_j (1-z^j)/(1-z) and Q2(z) = sum_j a_j (j(1-z)-1+z^j)/(1-z)^2
// with a_j = L_eff(j) j^{-1-alpha} e^{-bj}, evaluated through the stable
// recurrences T_{m+1} = z T_m + 1 and G_{j+1} = G_j + T_j, which reproduce
// the z = 1 closed forms exactly and never cancel.
inline void q_partial(const InterArrivalLaw& law, std::complex<double> z, std::size_t J,
                      std::complex<double>& q1, std::complex<double>& q2) {
    kahan_sum re1, im1, re2, im2;
    std::complex<double> T(0.0, 0.0), G(0.0, 0.0);
    for (std::size_t j = 1; j <= J; ++j) {
        G += T;
        T = z * T + 1.0;
        double x = static_cast<double>(j);
        double aj = law.L_eff(x) * std::exp(-law.b * x) * std::pow(x, -(1.0 + law.alpha));
        std::complex<double> t1 = aj * T;
        std::complex<double> t2 = aj * G;
        re1.add(t1.real());
        im1.add(t1.imag());
        re2.add(t2.real());
        im2.add(t2.imag());
    }
    q1 = {re1.value(), im1.value()};
    q2 = {re2.value(), im2.value()};
}

} // namespace specdetail

inline QTransformReport q_transforms(const InterArrivalLaw& law_b, std::complex<double> z) {
    if (law_b.kind != law_kind::power || !(law_b.b > 0.0))
        throw error("not-applicable", "Q transforms need a tilted power law");
    if (std::abs(z) > 1.0 + 1e-12)
        throw error("invalid-law", "z must lie in the closed unit disc");

    std::size_t J = std::max<std::size_t>(1024, static_cast<std::size_t>(45.0 / law_b.b));
    QTransformReport rep;
    for (;; J *= 2) {
        std::complex<double> q1, q2;
        specdetail::q_partial(law_b, z, J, q1, q2);
        std::complex<double> q11, q21;
        specdetail::q_partial(law_b, {1.0, 0.0}, J, q11, q21);

        TailEstimate t0 =
            tail_sum_power(law_b.sv, law_b.alpha, law_b.b, 0, static_cast<double>(J));
        TailEstimate t1 =
            tail_sum_power(law_b.sv, law_b.alpha, law_b.b, 1, static_cast<double>(J));
        TailEstimate t2 =
            tail_sum_power(law_b.sv, law_b.alpha, law_b.b, 2, static_cast<double>(J));
        double n0 = law_b.norm * (t0.value + t0.bound);
        double n1 = law_b.norm * (t1.value + t1.bound);
        double n2 = law_b.norm * (t2.value + t2.bound);
        double d = std::abs(1.0 - z);
        double b1 = d > 0.0 ? std::min(n1, 2.0 * n0 / d) : n1;
        double b2 = d > 0.0 ? std::min(0.5 * n2, 2.0 * n1 / (d * d)) : 0.5 * n2;

        bool good = b1 <= 1e-10 * std::abs(q11) && b2 <= 1e-10 * std::abs(q21);
        if (good || J >= (1u << 22)) {
            rep.Q1 = q1;
            rep.Q2 = q2;
            rep.Q1_1 = q11.real() + law_b.norm * t1.value;
            rep.Q2_1 = q21.real() + 0.5 * law_b.norm * (t2.value - t1.value);
            break;
        }
    }
    rep.F1 = rep.Q1 / rep.Q1_1;
    rep.F2 = rep.Q2 / rep.Q2_1;
    rep.f2_bounded = std::abs(rep.F2) <= 1.0 + 1e-9;
    return rep;
}

// ---------------------------------------------------------------------------
// One-call pipeline: tilt, renewal table, square, deconvolve.

struct IntersectionBuild {
    InterArrivalLaw law_b;
    RenewalTable u_table;
    IntersectionTable K;
};

inline IntersectionBuild build_intersection(const InterArrivalLaw& base, double b,
                                            std::size_t N, double target_rel_err = 1e-9,
                                            unsigned start_bits = 128) {
    IntersectionBuild out;
    InterArrivalLaw wide = base;
    if (base.kind == law_kind::power && base.cache_n() < N)
        wide = make_power_law(base.alpha, base.sv, N, base.tail_tol);
    out.law_b = b > 0.0 ? tilt(wide, b) : wide;
    out.u_table = renewal_function(out.law_b, N, true);
    out.K = deconvolve(square_renewal(out.u_table), target_rel_err, start_bits);
    return out;
}

} // namespace pinrenew
