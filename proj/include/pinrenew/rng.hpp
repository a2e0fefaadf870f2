#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"

namespace pinrenew {

// Finalizer from the splitmix64 generator. Per-sample seeds follow the
// documented rule seed = base + index, so consecutive integers reach the
// engine; this scrambler turns them into well-separated states.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// One logical seed feeds several independent uses (disorder draw, path
// sampling). Distinct stream ids give distinct engine states without
// breaking the seed = base + index contract.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed + 0x632BE59BD9B4E019ULL * (stream + 1));
}

// Names the engine and the transform. Reports carry this tag so a stored
// seed can be recognized as stale if either ever changes.
inline std::string generator_version() { return "mt19937_64/boxmuller-1"; }

// 53-bit uniform in [0,1) from one engine word.
inline double unit_double(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1p-53; }

// Standard normals: mt19937_64 driving Box-Muller. The log argument must be
// positive, so the zero word is bumped to the smallest representable draw.
// Pairs are consumed in cos/sin order; the spare is cached.
class normal_generator {
public:
    explicit normal_generator(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = unit_double(eng_());
        if (u1 == 0.0) u1 = 0x1p-53;
        double u2 = unit_double(eng_());
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Uniform [0,1) stream for the path sampler.
class uniform_generator {
public:
    explicit uniform_generator(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    double operator()() { return unit_double(eng_()); }

private:
    std::mt19937_64 eng_;
};

// Site energies for one sample. omega[0] is a placeholder so omega[n] is
// the charge at site n; regenerable bit-exactly from (seed, N) under the
// generator version above.
struct DisorderSample {
    std::uint64_t seed = 0;
    std::vector<double> omega;

    std::size_t N() const { return omega.empty() ? 0 : omega.size() - 1; }
};

inline DisorderSample make_disorder(std::uint64_t seed, std::size_t N) {
    if (N < 1) throw error("invalid-input", "disorder needs at least one site");
    DisorderSample d;
    d.seed = seed;
    d.omega.assign(N + 1, 0.0);
    normal_generator g(derive_stream(seed, 0));
    for (std::size_t n = 1; n <= N; ++n) d.omega[n] = g();
    return d;
}

} // namespace pinrenew
