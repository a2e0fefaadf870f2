#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pinrenew/errors.hpp"
#include "pinrenew/fft.hpp"
#include "pinrenew/law.hpp"

namespace pinrenew {

// The renewal function u(n) = P(n is a renewal point) for n = 0..N, plus its
// limit. u_inf is 0 in the null-recurrent case (infinite mean). power records
// pointwise powers applied after the fact (2 for a squared table), so that
// consumers can reconstruct the table from the law.
struct RenewalTable {
    std::vector<double> u;
    double u_inf = 0.0;
    std::shared_ptr<const InterArrivalLaw> law;
    bool accel = false;
    int power = 1;

    std::size_t N() const { return u.size() - 1; }
};

inline double renewal_limit(const InterArrivalLaw& law) {
    if (law.kind == law_kind::power && law.b == 0.0 && law.alpha <= 1.0)
        return 0.0; // infinite mean, null recurrent
    TailEstimate mean = law.mean_certificate();
    return 1.0 / mean.value;
}

inline RenewalTable renewal_function(const InterArrivalLaw& law, std::size_t N,
                                     bool accel = false) {
    if (N < 1) throw error("invalid-law", "horizon must be at least 1");
    if (law.kind == law_kind::power && law.cache_n() < N)
        throw error("horizon-exceeds-cache", "law cached to " + std::to_string(law.cache_n()) +
                                                 " but horizon is " + std::to_string(N));
    std::vector<double> k(N + 1, 0.0);
    for (std::size_t n = 1; n <= N; ++n) k[n] = law.K(n);
    std::vector<double> w(N + 1, 1.0);

    RenewalTable t;
    online_selfconv(k, w, t.u, accel);
    t.u_inf = renewal_limit(law);
    t.law = std::make_shared<const InterArrivalLaw>(law);
    t.accel = accel;
    return t;
}

// Recursion defect u(n) - sum_{j=1..n} K(j) u(n-j) at every index, via one
// full convolution. Diagnostic for table validity and for CSV output.
inline std::vector<double> renewal_residuals(const RenewalTable& t) {
    std::size_t N = t.N();
    std::vector<double> k(N + 1, 0.0);
    for (std::size_t n = 1; n <= N; ++n) k[n] = t.law->K(n);
    std::vector<double> conv = convolve(k, t.u);
    std::vector<double> res(N + 1, 0.0);
    res[0] = t.u[0] - 1.0;
    for (std::size_t n = 1; n <= N; ++n) res[n] = t.u[n] - conv[n];
    return res;
}

// Ratio of u(n) against its regular-variation limit law on a log-spaced
// grid: u(n) * L_eff(n) * n^{1-alpha} * pi / (alpha sin(pi alpha)) -> 1.
inline std::vector<std::pair<std::size_t, double>>
garsia_lamperti_ratio(const RenewalTable& t, const InterArrivalLaw& law) {
    if (law.kind != law_kind::power || !(law.alpha > 0.0 && law.alpha < 1.0))
        throw error("not-applicable",
                    "asymptotic ratio requires a power law with alpha in (0,1)");
    if (law.b != 0.0)
        throw error("not-applicable", "asymptotic ratio requires the untilted law");

    double a = law.alpha;
    double c = M_PI / (a * std::sin(M_PI * a));
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t n = 8; n <= t.N(); n *= 2) {
        double x = static_cast<double>(n);
        out.emplace_back(n, t.u[n] * law.L_eff(x) * std::pow(x, 1.0 - a) * c);
    }
    if (out.empty() || out.back().first != t.N()) {
        double x = static_cast<double>(t.N());
        out.emplace_back(t.N(), t.u[t.N()] * law.L_eff(x) * std::pow(x, 1.0 - a) * c);
    }
    return out;
}

} // namespace pinrenew
