#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pinrenew/fft.hpp"

using namespace pinrenew;

TEST_CASE("linear convolution matches the direct triple loop") {
    std::vector<double> a(300), b(451);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::sin(0.1 * i) + 0.3;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::cos(0.05 * i) - 0.2;
    auto fast = convolve(a, b);
    REQUIRE(fast.size() == a.size() + b.size() - 1);
    for (std::size_t t : {0ul, 5ul, 299ul, 500ul, 749ul}) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (t >= i && t - i < b.size()) s += a[i] * b[t - i];
        REQUIRE(fast[t] == Catch::Approx(s).margin(1e-9));
    }
}

TEST_CASE("online self-convolution: accelerated equals direct") {
    std::size_t N = 4096;
    std::vector<double> k(N + 1, 0.0), w(N + 1, 0.0);
    for (std::size_t n = 1; n <= N; ++n) {
        k[n] = std::pow(static_cast<double>(n), -1.3) * 0.25;
        w[n] = 1.0 + 0.5 * std::sin(static_cast<double>(n));
    }
    std::vector<double> direct, fast;
    online_selfconv(k, w, direct, false);
    online_selfconv(k, w, fast, true);
    for (std::size_t n = 0; n <= N; ++n)
        REQUIRE(std::abs(direct[n] - fast[n]) < 1e-10);
}

TEST_CASE("logged recursion matches plain logs in the safe range") {
    std::size_t N = 600;
    std::vector<double> k(N + 1, 0.0), w(N + 1, 0.0);
    for (std::size_t n = 1; n <= N; ++n) {
        k[n] = std::pow(static_cast<double>(n), -1.5) * 0.4;
        w[n] = 1.1;
    }
    std::vector<double> plain, logged;
    online_selfconv(k, w, plain, false);
    online_selfconv_logged(k, w, logged);
    for (std::size_t n = 1; n <= N; ++n)
        REQUIRE(logged[n] == Catch::Approx(std::log(plain[n])).margin(1e-11));
}

TEST_CASE("logged recursion survives strong exponential growth") {
    std::size_t N = 4000;
    std::vector<double> k(N + 1, 0.0), w(N + 1, std::exp(2.0));
    k[1] = 1.0;
    std::vector<double> logged;
    online_selfconv_logged(k, w, logged);
    // Deterministic kernel: log out[n] = 2n, far beyond double range as a value.
    REQUIRE(logged[N] == Catch::Approx(2.0 * static_cast<double>(N)).epsilon(1e-12));
}

TEST_CASE("logged recursion survives strong decay") {
    std::size_t N = 4000;
    std::vector<double> k(N + 1, 0.0), w(N + 1, std::exp(-2.0));
    k[1] = 1.0;
    std::vector<double> logged;
    online_selfconv_logged(k, w, logged);
    REQUIRE(logged[N] == Catch::Approx(-2.0 * static_cast<double>(N)).epsilon(1e-12));
}
