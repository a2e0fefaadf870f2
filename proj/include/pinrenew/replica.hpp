#pragma once

// Homogeneous pinning of the intersection renewal: the two-replica free
// energy B(b, lambda) solving Khat(e^{-B}) = e^{-lambda} on a deconvolved
// intersection table, the explicit constants entering the sandwich bounds,
// the first-order small-(b, lambda) ratio, and the finite-horizon partition
// function whose growth rate the solver value must match.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pinrenew/errors.hpp"
#include "pinrenew/intersection.hpp"
#include "pinrenew/law.hpp"
#include "pinrenew/numeric.hpp"
#include "pinrenew/renewal.hpp"

namespace pinrenew {

// ---------------------------------------------------------------------------
// Free energy of the pinned intersection renewal.

struct ReplicaSolution {
    double b = 0.0;
    double lambda = 0.0;
    double B = 0.0;
    // Rescaled variable (1 - e^{-B}) / u_b^2(inf); NaN when the intersection
    // terminates and the limit is zero.
    double x = 0.0;
    double residual = 0.0;
    // Set for b = 0 with lambda below the solvable range; B is 0 there and
    // residual reports the unreachable gap e^{-lambda} - Khat_0(1).
    bool below_threshold = false;
};

inline ReplicaSolution replica_free_energy(const IntersectionTable& Kb, double lambda,
                                           double tol) {
    if (!(tol > 0.0) || !std::isfinite(tol))
        throw error("invalid-input", "tolerance must be positive");
    if (!std::isfinite(lambda)) throw error("invalid-input", "lambda must be finite");
    if (!Kb.U.law) throw error("invalid-law", "intersection table carries no law");

    ReplicaSolution sol;
    sol.b = Kb.U.law->b;
    sol.lambda = lambda;
    double target = std::exp(-lambda);
    // Total mass of the intersection law with its tail model, the value of
    // the transform at z = 1.
    double khat1 = 1.0 - Kb.mass_defect;

    if (sol.b > 0.0) {
        if (lambda < 0.0)
            throw error("invalid-input", "lambda must be nonnegative for a recurrent intersection");
    } else if (target > khat1) {
        // A terminating intersection cannot pay more than its return mass;
        // below the threshold -log Khat_0(1) the pinned free energy is zero.
        sol.below_threshold = true;
        sol.B = 0.0;
        sol.residual = target - khat1;
        sol.x = Kb.U.u_inf > 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        return sol;
    }

    auto excess = [&](double B) { return eval_Khat(Kb, std::exp(-B)).value - target; };

    double lo = 0.0;
    double f0 = excess(0.0);
    if (f0 <= 0.0) {
        // lambda = 0 up to the truncation defect of the table.
        sol.B = 0.0;
        sol.residual = -f0;
    } else {
        double hi = lambda + 1.0;
        int widen = 0;
        while (excess(hi) > 0.0) {
            hi *= 2.0;
            if (++widen > 60)
                throw error("no-convergence", "transform stays above the target at every bracket");
        }
        for (int it = 0; it < 200 && hi - lo > tol; ++it) {
            double mid = 0.5 * (lo + hi);
            (excess(mid) > 0.0 ? lo : hi) = mid;
        }
        sol.B = 0.5 * (lo + hi);
        sol.residual = std::abs(excess(sol.B));
    }

    KhatValue kv = eval_Khat(Kb, std::exp(-sol.B));
    if (!(kv.tail_bound <= 1e-6 * std::max(std::abs(kv.value), 1e-300)))
        throw error("tail-not-resolvable",
                    "geometric tail of the transform exceeds 1e-6 of its value; "
                    "rebuild the intersection with a larger horizon");

    sol.x = Kb.U.u_inf > 0.0 ? -std::expm1(-sol.B) / Kb.U.u_inf
                             : std::numeric_limits<double>::quiet_NaN();
    return sol;
}

// ---------------------------------------------------------------------------
// Explicit constants of the sandwich bounds.

struct PaperConstants {
    double Dc = 0.0;      // grid supremum of Dhat_b(e^{-B}) over b in (0, c], B >= 0
    double lambda0 = 0.0; // -log(1 - 1/(2 Dc))
    double c1 = 0.0;      // half the supremum of |g''| for g = s/(1 - s Dc), s = 1 - e^{-lambda}
    double b0_eps = 0.0;  // largest tilt the upper bound tolerates at this eps
    std::string grid_meta;
};

struct ReplicaGrid {
    double b_min = 1e-4;
    std::size_t nb = 12; // geometric b points from b_min to c
    std::size_t nB = 9;  // linear B points on [0, B_max]
    double B_max = 1.0;
    std::size_t horizon_cap = 150000;     // per-b renewal horizon is 12/b, capped
    std::size_t curvature_points = 4001;  // lambda grid for the c1 supremum
};

namespace repdetail {

// Truncated deviation transform sum_{n<=N} (u(n)^2 - u_inf^2) z^n straight
// off a double renewal table. The per-b horizon keeps the omitted tail below
// the grid resolution, so no tail model is added here.
inline double dhat_truncated(const RenewalTable& t, double z) {
    double u2 = t.u_inf * t.u_inf;
    kahan_sum s;
    double zp = 1.0;
    for (std::size_t n = 0; n <= t.N(); ++n) {
        s.add((t.u[n] * t.u[n] - u2) * zp);
        zp *= z;
        if ((n + 1) % 4096 == 0) zp = std::pow(z, static_cast<double>(n + 1));
    }
    return s.value();
}

inline double constants_sweep(const InterArrivalLaw& law, double c, const ReplicaGrid& grid,
                              std::size_t nb, std::size_t nB) {
    double best = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
        double bb = grid.b_min * std::pow(c / grid.b_min,
                                          static_cast<double>(i) / static_cast<double>(nb - 1));
        std::size_t NT = std::min<std::size_t>(static_cast<std::size_t>(12.0 / bb),
                                               grid.horizon_cap);
        NT = std::max<std::size_t>(NT, 32);
        InterArrivalLaw base = law;
        if (law.cache_n() < NT) base = make_power_law(law.alpha, law.sv, NT, law.tail_tol);
        InterArrivalLaw law_b = tilt(base, bb);
        RenewalTable t = renewal_function(law_b, NT, NT > 4096);
        for (std::size_t j = 0; j < nB; ++j) {
            double B = grid.B_max * static_cast<double>(j) / static_cast<double>(nB - 1);
            best = std::max(best, dhat_truncated(t, std::exp(-B)));
        }
    }
    return best;
}

} // namespace repdetail

inline PaperConstants paper_constants(const InterArrivalLaw& law, double c, double eps,
                                      const ReplicaGrid& grid = ReplicaGrid{}) {
    if (law.kind != law_kind::power || law.b != 0.0 || !(law.alpha < 1.0))
        throw error("not-applicable",
                    "constants are defined for an untilted power law with alpha in (0, 1)");
    if (!(c > 0.0) || !std::isfinite(c)) throw error("invalid-input", "c must be positive");
    if (!(eps > 0.0) || !(eps < 1.0)) throw error("invalid-input", "eps must lie in (0, 1)");
    if (grid.nb < 2 || grid.nB < 2 || grid.curvature_points < 2 || !(grid.b_min > 0.0) ||
        !(grid.b_min < c))
        throw error("invalid-input", "grid needs b_min in (0, c) and at least 2 points per axis");

    PaperConstants out;
    double coarse = repdetail::constants_sweep(law, c, grid, grid.nb, grid.nB);
    double fine = repdetail::constants_sweep(law, c, grid, 2 * grid.nb, 2 * grid.nB - 1);
    if (std::abs(fine - coarse) > 0.05 * std::max(coarse, 1e-300))
        throw error("grid-unstable", "doubling the (b, B) grid moved the supremum by more than 5%");
    out.Dc = std::max(coarse, fine);

    out.lambda0 = -std::log1p(-0.5 / out.Dc);

    // Half the largest curvature of g(lambda) = s / (1 - s Dc), s = 1 - e^{-lambda},
    // scanned over (0, lambda0].
    double worst = 0.0;
    for (std::size_t i = 1; i <= grid.curvature_points; ++i) {
        double lam = out.lambda0 * static_cast<double>(i) / static_cast<double>(grid.curvature_points);
        double s = -std::expm1(-lam);
        double d = 1.0 - s * out.Dc;
        double g2 = (1.0 - s) / (d * d) * (2.0 * out.Dc * (1.0 - s) / d - 1.0);
        worst = std::max(worst, std::abs(g2));
    }
    out.c1 = 0.5 * worst;

    // Largest b whose u_b^2(inf) keeps exp(2 (lambda0 + c1 lambda0^2) u_b^2) - 1
    // below eps; u_b(inf) grows with b, so a bisection on (0, c] suffices.
    double need = std::log1p(eps) / (2.0 * (out.lambda0 + out.c1 * out.lambda0 * out.lambda0));
    auto u2_of = [&](double bb) {
        double ui = renewal_limit(tilt(law, bb));
        return ui * ui;
    };
    if (u2_of(c) < need) {
        out.b0_eps = c;
    } else {
        double lo = 0.0, hi = c;
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            (u2_of(mid) < need ? lo : hi) = mid;
        }
        out.b0_eps = 0.5 * (lo + hi);
    }

    out.grid_meta = "b geomspace(" + std::to_string(grid.b_min) + ", " + std::to_string(c) +
                    ", " + std::to_string(grid.nb) + "->" + std::to_string(2 * grid.nb) +
                    "); B linspace(0, " + std::to_string(grid.B_max) + ", " +
                    std::to_string(grid.nB) + "->" + std::to_string(2 * grid.nB - 1) +
                    "); horizon 12/b capped " + std::to_string(grid.horizon_cap) +
                    "; curvature grid " + std::to_string(grid.curvature_points);
    return out;
}

// ---------------------------------------------------------------------------
// Sandwich bounds around a solved B.

struct ReplicaBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool within = false;
};

inline ReplicaBounds replica_bounds(const ReplicaSolution& sol, const InterArrivalLaw& law_b,
                                    const PaperConstants& consts, double eps) {
    if (!(eps > 0.0) || !(eps < 1.0)) throw error("invalid-input", "eps must lie in (0, 1)");
    if (!(sol.b <= consts.b0_eps) || !(sol.lambda <= consts.lambda0) || sol.lambda < 0.0)
        throw error("hypotheses-violated",
                    "bounds need b <= b0(eps) and lambda in [0, lambda0]");
    double ui = renewal_limit(law_b);
    double u2 = ui * ui;
    ReplicaBounds out;
    out.lower = u2 * sol.lambda;
    out.upper = (1.0 + eps) * u2 * (sol.lambda + consts.c1 * sol.lambda * sol.lambda);
    out.within = out.lower <= sol.B && sol.B <= out.upper;
    return out;
}

// ---------------------------------------------------------------------------
// Auto-horizon intersection build for solver work. A cheap double scout
// table estimates Dhat_b(1), whose ratio to u_b^2(inf) sets the decay scale
// of the intersection law; the deconvolution horizon is a fixed multiple of
// that scale.

inline IntersectionBuild replica_intersection(const InterArrivalLaw& base, double b,
                                              double target_rel_err = 1e-9,
                                              unsigned start_bits = 128) {
    if (!(b > 0.0) || !std::isfinite(b))
        throw error("invalid-input", "auto horizon needs a positive tilt");
    if (base.b != 0.0) throw error("invalid-law", "auto horizon expects an untilted base law");
    std::size_t N0 = std::min<std::size_t>(
        std::max<std::size_t>(4096, static_cast<std::size_t>(48.0 / b)), 150000);
    InterArrivalLaw wide = base;
    if (base.kind == law_kind::power && base.cache_n() < N0)
        wide = make_power_law(base.alpha, base.sv, N0, base.tail_tol);
    InterArrivalLaw law_b = tilt(wide, b);
    RenewalTable scout = renewal_function(law_b, N0, N0 > 4096);
    double u2 = scout.u_inf * scout.u_inf;
    if (!(u2 > 0.0)) throw error("invalid-law", "intersection does not recur at this tilt");
    double d1 = repdetail::dhat_truncated(scout, 1.0);
    double span = 16.0 * d1 / u2;
    std::size_t N = static_cast<std::size_t>(std::clamp(span, 512.0, 40000.0));
    return build_intersection(base, b, N, target_rel_err, start_bits);
}

// ---------------------------------------------------------------------------
// First-order ratio along a path shrinking to (0, 0).

inline std::vector<double> first_order_check(const InterArrivalLaw& law,
                                             const std::vector<std::pair<double, double>>& path) {
    if (path.empty()) throw error("invalid-input", "path must be nonempty");
    std::vector<double> ratios;
    ratios.reserve(path.size());
    for (const auto& [bb, lam] : path) {
        if (!(bb > 0.0) || !(lam > 0.0))
            throw error("invalid-input", "path points need b > 0 and lambda > 0");
        IntersectionBuild built = replica_intersection(law, bb);
        ReplicaSolution sol = replica_free_energy(built.K, lam, 1e-12);
        double ui = renewal_limit(built.law_b);
        ratios.push_back(sol.B / (lam * ui * ui));
    }
    return ratios;
}

// ---------------------------------------------------------------------------
// Finite-horizon partition function of the pinned intersection.

struct FiniteNReplica {
    double logW_over_N = 0.0;
    double B_gap = 0.0;
};

// The recursion alone, without the infinite-horizon diagnostic. It only
// reads table entries up to N, so it stays available where the transform
// tail is out of reach, e.g. the untilted build at criticality whose
// intersection law has a polynomial tail.
inline double finite_N_log_replica(const IntersectionTable& Kb, double lambda, std::size_t N) {
    if (N < 1) throw error("invalid-input", "horizon must be at least 1");
    if (N > Kb.N())
        throw error("invalid-input", "horizon exceeds the intersection table");

    const double el = std::exp(lambda);
    std::vector<double> W(N + 1, 0.0);
    W[0] = 1.0;
    double offset = 0.0; // log of the accumulated rescale factor
    for (std::size_t n = 1; n <= N; ++n) {
        kahan_sum s;
        for (std::size_t j = 1; j <= n; ++j) s.add(Kb.Kk[j] * W[n - j]);
        W[n] = el * s.value();
        if (W[n] > 1e250 || (W[n] > 0.0 && W[n] < 1e-250)) {
            double shift = W[n];
            for (std::size_t m = 0; m <= n; ++m) W[m] /= shift;
            offset += std::log(shift);
        }
    }
    // W[N] = 0 happens for periodic laws at misaligned horizons; the log is
    // -inf there and the gap is reported as infinite rather than thrown.
    return (std::log(W[N]) + offset) / static_cast<double>(N);
}

inline FiniteNReplica finite_N_replica(const IntersectionTable& Kb, double lambda,
                                       std::size_t N) {
    FiniteNReplica out;
    out.logW_over_N = finite_N_log_replica(Kb, lambda, N);
    ReplicaSolution sol = replica_free_energy(Kb, lambda, 1e-12);
    out.B_gap = std::abs(out.logW_over_N - sol.B);
    return out;
}

} // namespace pinrenew
