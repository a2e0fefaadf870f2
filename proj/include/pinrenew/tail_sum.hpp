#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <complex>
#include <limits>

#include "pinrenew/errors.hpp"
#include "pinrenew/slow_variation.hpp"

namespace pinrenew {

// A numerical value together with a bound on its absolute error. The bound
// is what downstream truncation certificates are built from, so it must
// hold with margin rather than be a best estimate.
struct TailEstimate {
    double value = 0.0;
    double bound = 0.0;
};

struct ComplexTailEstimate {
    std::complex<double> value{0.0, 0.0};
    double bound = 0.0;
};

namespace detail {

// f(x) = L(x) x^{-p} e^{-bx} with the log-derivative chain that converts
// d^k log f into d^k f. Everything the tail formulas need in one place.
struct power_integrand {
    const SlowVariation& L;
    double p, b;

    double logf(double x) const { return std::log(L(x)) - p * std::log(x) - b * x; }

    double operator()(double x) const {
        double lf = logf(x);
        return lf < -745.0 ? 0.0 : std::exp(lf);
    }

    std::complex<double> eval(std::complex<double> z) const {
        return L.eval(z) * std::exp(-p * std::log(z) - b * z);
    }

    void derivs(double x, double out[4]) const {
        double f = (*this)(x);
        double g1 = L.dlog(x) - p / x - b;
        double g2 = L.d2log(x) + p / (x * x);
        double g3 = L.d3log(x) - 2.0 * p / (x * x * x);
        out[0] = f;
        out[1] = f * g1;
        out[2] = f * (g2 + g1 * g1);
        out[3] = f * (g3 + 3.0 * g1 * g2 + g1 * g1 * g1);
    }
};

template <class F>
double integrate_half_line(const F& f, double tol, double& abs_err) {
    static thread_local boost::math::quadrature::exp_sinh<double> integ;
    double rel = 0.0, l1 = 0.0;
    double v = integ.integrate(f, tol, &rel, &l1);
    abs_err = rel * std::max(l1, std::abs(v));
    if (!std::isfinite(abs_err)) abs_err = std::abs(v);
    return v;
}

// int_N^inf L(x) x^{-p} e^{-bx} dx with the decay made explicit before
// quadrature. For b > 0, x = N + y/b turns the integrand into a polynomially
// varying factor times e^{-y}, the shape exp-sinh is built for, valid for
// every real p. For b = 0 (needs p > 1), x = N/v maps onto (0,1] with an
// integrable endpoint singularity that tanh-sinh absorbs.
inline double integrate_power_tail(const SlowVariation& L, double p, double b, double N,
                                   double tol, double& abs_err) {
    if (b > 0.0) {
        double logpre = -b * N - std::log(b);
        if (logpre < -700.0) {
            abs_err = 4.0 * std::numeric_limits<double>::min();
            return 0.0;
        }
        double J = integrate_half_line(
            [&](double y) {
                double x = N + y / b;
                return L(x) * std::exp(-p * std::log(x) - y);
            },
            tol, abs_err);
        double pre = std::exp(logpre);
        abs_err *= pre;
        return pre * J;
    }
    static thread_local boost::math::quadrature::tanh_sinh<double> ts;
    double rel = 0.0, l1 = 0.0;
    double J = ts.integrate([&](double v) { return L(N / v) * std::pow(v, p - 2.0); }, 0.0, 1.0,
                            tol, &rel, &l1);
    double pre = std::pow(N, 1.0 - p);
    abs_err = rel * std::max(l1, std::abs(J)) * pre;
    if (!std::isfinite(abs_err)) abs_err = std::abs(J) * pre;
    return pre * J;
}

} // namespace detail

// Certified value of sum_{n > N} L(n) n^{-(1+alpha-k)} e^{-bn}. The sum is
// replaced by the half-line integral plus endpoint corrections through the
// third derivative; the remainder of that expansion is bounded by the
// integral of |f''''|, which for our eventually monotone f'''' is at most
// |f'''(N)|. A factor four covers the pre-asymptotic regime.
inline TailEstimate tail_sum_power(const SlowVariation& L, double alpha, double b, int k,
                                   double N, double tol = 1e-13) {
    if (!(N >= 1.0)) throw error("invalid-tail", "tail cutoff must be >= 1");
    if (b < 0.0) throw error("invalid-tail", "tilt exponent must be nonnegative");
    double p = 1.0 + alpha - k;
    if (b == 0.0 && p <= 1.0)
        throw error("divergent-tail", "untilted power tail with exponent <= 1 does not sum");

    detail::power_integrand f{L, p, b};
    double d[4];
    f.derivs(N, d);
    if (!(d[0] > 0.0))
        return {0.0, 4.0 * std::numeric_limits<double>::min()};

    double qerr = 0.0;
    double I = detail::integrate_power_tail(L, p, b, N, tol, qerr);

    double value = I - d[0] / 2.0 - d[1] / 12.0 + d[3] / 720.0;
    double bound = 0.0056 * std::abs(d[3]) + 4.0 * qerr +
                   8.0 * std::numeric_limits<double>::epsilon() * std::abs(I);
    return {value, bound};
}

// Certified value of sum_{n > N} L(n) n^{-(1+alpha)} e^{-bn} e^{i omega n}
// for 0 < omega < ~0.35. The half-line integral is rotated onto the
// vertical contour x = N + it, where e^{i omega x} turns into decay e^{-omega t};
// the endpoint corrections pick up powers of (i omega), which is what limits
// the usable omega range. The remainder bound grows like omega^4 times the
// absolute-integrable mass, so callers should switch to direct summation
// with an Abel bound once omega is of order one.
inline ComplexTailEstimate tail_sum_oscillatory(const SlowVariation& L, double alpha, double b,
                                                double omega, double N, double tol = 1e-13) {
    if (!(N >= 1.0)) throw error("invalid-tail", "tail cutoff must be >= 1");
    if (!(omega > 0.0)) throw error("invalid-tail", "oscillation frequency must be positive");
    double p = 1.0 + alpha;

    detail::power_integrand f{L, p, b};
    double d[4];
    f.derivs(N, d);
    if (!(d[0] > 0.0))
        return {{0.0, 0.0}, 4.0 * std::numeric_limits<double>::min()};

    double qr = 0.0, qi = 0.0, qa = 0.0;
    double re = detail::integrate_half_line(
        [&](double t) { return (f.eval({N, t}) * std::exp(-omega * t)).real(); }, tol, qr);
    double im = detail::integrate_half_line(
        [&](double t) { return (f.eval({N, t}) * std::exp(-omega * t)).imag(); }, tol, qi);
    double I_abs = detail::integrate_half_line([&](double t) { return f(N + t); }, tol, qa);

    std::complex<double> phase = std::exp(std::complex<double>(0.0, omega * N));
    std::complex<double> I = std::complex<double>(0.0, 1.0) * phase * std::complex<double>(re, im);

    std::complex<double> h0 = d[0] * phase;
    std::complex<double> h1 = (std::complex<double>(d[1], omega * d[0])) * phase;
    std::complex<double> h3 =
        (std::complex<double>(d[3] - 3.0 * omega * omega * d[1],
                              3.0 * omega * d[2] - omega * omega * omega * d[0])) *
        phase;

    ComplexTailEstimate out;
    out.value = I - h0 / 2.0 - h1 / 12.0 + h3 / 720.0;
    double w = omega;
    double d4_mass = std::abs(d[3]) + 4.0 * w * std::abs(d[2]) + 6.0 * w * w * std::abs(d[1]) +
                     4.0 * w * w * w * d[0] + w * w * w * w * I_abs;
    out.bound = 0.0056 * d4_mass + 4.0 * (qr + qi) +
                8.0 * std::numeric_limits<double>::epsilon() * std::abs(I);
    return out;
}

} // namespace pinrenew
