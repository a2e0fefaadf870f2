#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace pinrenew {

// Neumaier-compensated accumulator. Used wherever a long sum feeds a
// certified bound, so truncation error stays the only error that matters.
struct kahan_sum {
    double s = 0.0;
    double c = 0.0;

    void add(double x) {
        double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }

    double value() const { return s + c; }
};

// Deterministic pairwise tree reduction over an index-ordered vector.
// The result depends only on the values and their order, never on how
// many threads produced them.
inline double tree_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    return tree_sum(v, lo, mid) + tree_sum(v, mid, hi);
}

inline double tree_sum(const std::vector<double>& v) {
    return v.empty() ? 0.0 : tree_sum(v, 0, v.size());
}

inline double tree_mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : tree_sum(v) / static_cast<double>(v.size());
}

// Sample standard error of the mean (unbiased variance, same tree order).
inline double tree_se(const std::vector<double>& v) {
    std::size_t n = v.size();
    if (n < 2) return 0.0;
    double m = tree_mean(v);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - m) * (v[i] - m);
    double var = tree_sum(sq) / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
}

// log(sum exp(v_i)) with the usual max shift, tree-ordered.
inline double log_sum_exp(const std::vector<double>& v) {
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    std::vector<double> e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e[i] = std::exp(v[i] - mx);
    return mx + std::log(tree_sum(e));
}

} // namespace pinrenew
