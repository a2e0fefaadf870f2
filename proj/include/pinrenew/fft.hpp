#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

namespace pinrenew {

namespace fftdetail {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

} // namespace fftdetail

// Linear convolution of two real sequences: out[t] = sum_a a[a] b[t-a].
inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    std::size_t out_n = a.size() + b.size() - 1;
    if (static_cast<double>(a.size()) * static_cast<double>(b.size()) < 4096.0) {
        std::vector<double> out(out_n, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
        return out;
    }
    std::size_t m = fftdetail::next_pow2(out_n);
    std::vector<std::complex<double>> fa(m), fb(m);
    for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
    fftdetail::fft_inplace(fa, false);
    fftdetail::fft_inplace(fb, false);
    for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
    fftdetail::fft_inplace(fa, true);
    std::vector<double> out(out_n);
    for (std::size_t i = 0; i < out_n; ++i) out[i] = fa[i].real();
    return out;
}

namespace fftdetail {

// Divide-and-conquer online convolution. Finalizes
//   out[n] = w[n] * (acc-from-earlier-blocks + sum_{j=lo..n-1} out[j] k[n-j])
// left half first, then pushes the left half's contribution into the right
// half with one block convolution, then recurses right. O(N log^2 N).
struct cdq_state {
    const std::vector<double>& k;
    const std::vector<double>& w;
    std::vector<double>& out;
    std::vector<double> acc;
    static constexpr std::size_t base = 64;

    void solve(std::size_t lo, std::size_t hi) {
        if (hi - lo + 1 <= base) {
            for (std::size_t n = lo; n <= hi; ++n) {
                double s = acc[n];
                for (std::size_t j = lo; j < n; ++j) s += out[j] * k[n - j];
                out[n] = (n == 0) ? 1.0 : w[n] * s;
            }
            return;
        }
        std::size_t mid = lo + (hi - lo) / 2;
        solve(lo, mid);

        std::size_t span = hi - lo;
        std::vector<double> left(out.begin() + static_cast<std::ptrdiff_t>(lo),
                                 out.begin() + static_cast<std::ptrdiff_t>(mid + 1));
        std::vector<double> ker(k.begin() + 1, k.begin() + static_cast<std::ptrdiff_t>(span + 1));
        std::vector<double> c = convolve(left, ker);
        // c[t] collects out[lo+a] * k[1+q] with t = a + q, feeding index lo+1+t.
        for (std::size_t n = mid + 1; n <= hi; ++n) acc[n] += c[n - lo - 1];
        solve(mid + 1, hi);
    }
};

} // namespace fftdetail

// Self-referential weighted convolution out[0] = 1,
// out[n] = w[n] * sum_{j=0..n-1} out[j] k[n-j], solved online.
// k and w are indexed 0..N with k[0] and w[0] unused.
inline void online_selfconv(const std::vector<double>& k, const std::vector<double>& w,
                            std::vector<double>& out, bool accel) {
    std::size_t N = k.size() - 1;
    out.assign(N + 1, 0.0);
    if (!accel) {
        out[0] = 1.0;
        for (std::size_t n = 1; n <= N; ++n) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += out[j] * k[n - j];
            out[n] = w[n] * s;
        }
        return;
    }
    fftdetail::cdq_state st{k, w, out, std::vector<double>(N + 1, 0.0)};
    st.solve(0, N);
}

// The same recursion with power-of-two rescaling, for weights that drive the
// values across the double range. Emits log(out[n]) per index, snapshotted
// the moment out[n] is finalized; ldexp rescaling is exact, so the logs are
// as accurate as the recursion itself.
inline void online_selfconv_logged(const std::vector<double>& k, const std::vector<double>& w,
                                   std::vector<double>& logout) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::size_t N = k.size() - 1;
    std::vector<double> z(N + 1, 0.0);
    double offset = 0.0; // true value = z[j] * e^{offset} for all live entries
    z[0] = 1.0;
    logout.assign(N + 1, neg_inf);
    logout[0] = 0.0;
    // Fast path: common-scale recursion with power-of-two rescaling. When a
    // rescale toward small values would push the largest live entry out the
    // top of the double range (the prefix then spans more than ~2000 binary
    // orders, e.g. a short-range kernel under a strongly suppressing weight),
    // switch to an exact log-sum-exp recursion on the already-final logs.
    std::vector<double> logk;
    bool lse = false;
    for (std::size_t n = 1; n <= N; ++n) {
        if (!lse) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += z[j] * k[n - j];
            z[n] = w[n] * s;
            if (z[n] > 0.0) logout[n] = std::log(z[n]) + offset;
            double az = std::abs(z[n]);
            if (az > 0x1p500) {
                for (std::size_t j = 0; j <= n; ++j) z[j] = std::ldexp(z[j], -512);
                offset += 512.0 * M_LN2;
            } else if (az > 0.0 && az < 0x1p-500) {
                double top = 0.0;
                for (std::size_t j = 0; j <= n; ++j) top = std::max(top, std::abs(z[j]));
                if (top > 0x1p500) {
                    lse = true;
                    logk.resize(N + 1, neg_inf);
                    for (std::size_t m = 1; m <= N; ++m)
                        logk[m] = k[m] > 0.0 ? std::log(k[m]) : neg_inf;
                } else {
                    for (std::size_t j = 0; j <= n; ++j) z[j] = std::ldexp(z[j], 512);
                    offset -= 512.0 * M_LN2;
                }
            }
            if (!lse) continue;
        }
        double peak = neg_inf;
        for (std::size_t j = 0; j < n; ++j)
            if (logout[j] > neg_inf && logk[n - j] > neg_inf)
                peak = std::max(peak, logout[j] + logk[n - j]);
        if (peak == neg_inf || !(w[n] > 0.0)) {
            logout[n] = neg_inf;
            continue;
        }
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (logout[j] > neg_inf && logk[n - j] > neg_inf)
                s += std::exp(logout[j] + logk[n - j] - peak);
        logout[n] = std::log(w[n]) + peak + std::log(s);
    }
}

} // namespace pinrenew
