#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <string>

#include "pinrenew/intersection.hpp"

using namespace pinrenew;

namespace {

std::string thrown_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const error& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST_CASE("squaring a renewal table squares entries, limit, and power") {
    auto t = renewal_function(geometric_law(0.5), 64);
    auto sq = square_renewal(t);
    REQUIRE(sq.power == 2);
    REQUIRE(sq.u[0] == 1.0);
    for (std::size_t n = 1; n <= 64; ++n)
        REQUIRE(sq.u[n] == Catch::Approx(0.25).epsilon(1e-12));
    REQUIRE(sq.u_inf == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("deterministic intersection deconvolves to a unit step") {
    auto t = renewal_function(deterministic_law(), 40);
    auto KT = deconvolve(square_renewal(t), 1e-12);
    REQUIRE(KT.Kk[1] == 1.0);
    for (std::size_t n = 2; n <= 40; ++n) REQUIRE(KT.Kk[n] == 0.0);
    REQUIRE(KT.agreement_err == 0.0);
    REQUIRE(KT.mass_defect == 0.0);
    REQUIRE(std::isnan(KT.fitted_rate));
}

TEST_CASE("geometric intersection law is exactly geometric") {
    auto t = renewal_function(geometric_law(0.5), 48);
    auto KT = deconvolve(square_renewal(t), 1e-9);

    const auto& mp = *KT.mp;
    precision_guard guard(mp.bits);
    bigfloat q(1);
    for (std::size_t n = 1; n <= KT.N(); ++n) {
        bigfloat closed = bigfloat(0.25) * q; // 0.25 * 0.75^{n-1}
        q *= bigfloat(0.75);
        bigfloat rel = boost::multiprecision::abs(mp.K[n] / closed - 1);
        REQUIRE(rel.convert_to<double>() < 1e-20);
        REQUIRE(KT.Kk[n] ==
                Catch::Approx(0.25 * std::pow(0.75, static_cast<double>(n - 1))).epsilon(1e-13));
    }
    REQUIRE(KT.agreement_err < 1e-30);
    REQUIRE(KT.mass_defect < 1e-9);
    REQUIRE(KT.fitted_rate == Catch::Approx(-std::log(0.75)).epsilon(1e-6));

    auto kh = eval_Khat(KT, 0.5);
    REQUIRE(kh.value == Catch::Approx(0.125 / (1.0 - 0.375)).epsilon(1e-12));
    REQUIRE(kh.tail_bound < 1e-12);
}

TEST_CASE("deconvolution validates its input") {
    auto t = renewal_function(geometric_law(0.5), 32);
    auto sq = square_renewal(t);
    auto broken = sq;
    broken.u[0] = 0.9;
    REQUIRE(thrown_code([&] { deconvolve(broken, 1e-9); }) == "invalid-renewal-function");
    REQUIRE(thrown_code([&] { deconvolve(sq, -1.0); }) == "invalid-law");
    REQUIRE(thrown_code([&] { deconvolve(sq, 1e-9, 16); }) == "invalid-law");
}

TEST_CASE("untilted intersection: frozen head values, mass split, round trip") {
    auto law = make_power_law(0.3, make_constant_sv(), 2048, 1e-9);
    auto u0 = renewal_function(law, 2048, true);
    auto KT = deconvolve(square_renewal(u0), 1e-9);

    const double frozen[6] = {0.06468211, 0.02403044, 0.01351061,
                              0.00898884, 0.00655605, 0.00506718};
    for (int i = 0; i < 6; ++i)
        REQUIRE(KT.Kk[i + 1] == Catch::Approx(frozen[i]).epsilon(5e-7));

    auto cls = classify_intersection(KT, u0);
    REQUIRE(cls.terminating);
    REQUIRE(cls.K_infinity == Catch::Approx(1.0 / 1.2424391537558888).epsilon(5e-4));
    // the mass defect of the deconvolved law is the escape probability
    REQUIRE(KT.mass_defect == Catch::Approx(cls.K_infinity).epsilon(0.01));

    auto res = reconvolution_residuals(KT);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, std::abs(r));
    REQUIRE(worst <= std::max(KT.agreement_err, 1e-30));
}

TEST_CASE("classification separates terminating from recurrent intersections") {
    auto law75 = make_power_law(0.75, make_constant_sv(), 256, 1e-9);
    auto u75 = renewal_function(law75, 256);
    auto K75 = deconvolve(square_renewal(u75), 1e-9);
    auto cls75 = classify_intersection(K75, u75);
    REQUIRE_FALSE(cls75.terminating);
    REQUIRE(cls75.K_infinity == 0.0);

    auto ug = renewal_function(geometric_law(0.5), 64);
    auto Kg = deconvolve(square_renewal(ug), 1e-9);
    REQUIRE_FALSE(classify_intersection(Kg, ug).terminating);

    // boundary exponent: summable thanks to the log factor, but there is no
    // closed tail extension to finish the sum with
    auto lawb = make_power_law(0.5, make_log_power_sv(1.0), 128, 1e-9);
    auto ub = renewal_function(lawb, 128);
    auto Kb = deconvolve(square_renewal(ub), 1e-9);
    REQUIRE(thrown_code([&] { classify_intersection(Kb, ub); }) == "inconclusive");

    auto tilted = tilt(make_power_law(0.3, make_constant_sv(), 128, 1e-9), 0.2);
    auto ut = renewal_function(tilted, 128);
    auto Kt = deconvolve(square_renewal(ut), 1e-9);
    REQUIRE(thrown_code([&] { classify_intersection(Kt, ut); }) == "invalid-law");
}

TEST_CASE("intersection tail follows c times the squared density") {
    auto law = make_power_law(0.3, make_constant_sv(), 10000, 1e-9);
    auto u0 = renewal_function(law, 10000, true);
    auto KT = deconvolve(square_renewal(u0), 1e-9);

    auto rep = prop57_check(KT, u0);
    REQUIRE(rep.c == Catch::Approx(0.6478131234637213).epsilon(5e-4));
    REQUIRE(rep.ok);

    double r1e3 = 0.0, r1e4 = 0.0;
    for (const auto& [n, r] : rep.ratios) {
        if (n == 1000) r1e3 = r;
        if (n == 10000) r1e4 = r;
    }
    REQUIRE(r1e3 == Catch::Approx(1.0117).margin(0.004));
    REQUIRE(r1e4 == Catch::Approx(1.0045).margin(0.004));
}

TEST_CASE("ratio law is refused for a recurrent intersection") {
    auto ug = renewal_function(geometric_law(0.5), 64);
    auto Kg = deconvolve(square_renewal(ug), 1e-9);
    REQUIRE(thrown_code([&] { prop57_check(Kg, ug); }) == "not-applicable");
}

TEST_CASE("generating-function identity ties the intersection law to the squared table") {
    auto base = make_power_law(0.3, make_constant_sv(), 512, 1e-9);
    auto built = build_intersection(base, 0.25, 512);
    double ui2 = built.u_table.u_inf * built.u_table.u_inf;

    for (double z : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
        auto kh = eval_Khat(built.K, z);
        auto dh = eval_Dhat(built.u_table, built.law_b, z);
        double rhs = 1.0 - (1.0 - z) / (ui2 + (1.0 - z) * dh.value);
        REQUIRE(kh.value == Catch::Approx(rhs).margin(1e-7));
        REQUIRE(kh.tail_bound < 1e-8);
        REQUIRE(dh.tail_fraction < 0.01);
    }
}

TEST_CASE("tilted intersection decays at the generating-function pole rate") {
    auto base = make_power_law(0.3, make_constant_sv(), 512, 1e-9);
    auto built = build_intersection(base, 0.5, 360);
    REQUIRE(built.law_b.cb == Catch::Approx(4.616385491133).epsilon(1e-9));
    double ui2 = built.u_table.u_inf * built.u_table.u_inf;
    REQUIRE(ui2 == Catch::Approx(0.445906462192).epsilon(1e-9));
    REQUIRE(built.K.Kk[1] ==
            Catch::Approx(built.law_b.K(1) * built.law_b.K(1)).epsilon(1e-12));

    auto rep = prop58_rate(built.law_b, built.u_table, built.K);
    REQUIRE(rep.sign_change);
    REQUIRE(rep.r == Catch::Approx(1.5407344649270889).epsilon(1e-8));
    REQUIRE(rep.agreement < 1e-3);

    // the double-table evaluator with its noise-floor cut lands near the
    // exact relation (r - 1) D(r) = u_inf^2 satisfied at the pole
    auto dh = eval_Dhat(built.u_table, built.law_b, rep.r);
    REQUIRE(dh.value == Catch::Approx(ui2 / (rep.r - 1.0)).epsilon(0.1));
}

TEST_CASE("decay-rate analysis is refused without a tilt or a tail") {
    auto t = renewal_function(deterministic_law(), 32);
    auto KT = deconvolve(square_renewal(t), 1e-9);
    auto u0 = renewal_function(make_power_law(0.3, make_constant_sv(), 64, 1e-9), 64);
    auto K0 = deconvolve(square_renewal(u0), 1e-9);
    REQUIRE(thrown_code([&] { prop58_rate(*u0.law, u0, K0); }) == "not-applicable");
    auto lt = tilt(*t.law, 0.1);
    REQUIRE(thrown_code([&] { prop58_rate(lt, t, KT); }) == "not-applicable");
}

TEST_CASE("density generating function at 1 matches the squared sum") {
    auto law = make_power_law(0.3, make_constant_sv(), 2048, 1e-9);
    auto u0 = renewal_function(law, 2048, true);
    auto dh = eval_Dhat(u0, law, 1.0);
    REQUIRE(dh.value == Catch::Approx(1.2424391537558888).epsilon(5e-4));
    REQUIRE(dh.tail_fraction < 0.01);

    REQUIRE(thrown_code([&] { eval_Dhat(u0, law, 1.2); }) == "invalid-law");
    auto law75 = make_power_law(0.75, make_constant_sv(), 128, 1e-9);
    auto u75 = renewal_function(law75, 128);
    REQUIRE(thrown_code([&] { eval_Dhat(u75, law75, 1.0); }) == "not-applicable");
    auto sq = square_renewal(u0);
    REQUIRE(thrown_code([&] { eval_Dhat(sq, law, 0.5); }) == "invalid-law");
}

TEST_CASE("moment transforms of the law at 1") {
    auto m = khat_moments(geometric_law(0.5));
    REQUIRE(m.kp1 == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(m.kpp1 == Catch::Approx(4.0).epsilon(1e-10));

    REQUIRE(thrown_code([&] {
                khat_moments(make_power_law(1.5, make_constant_sv(), 64, 1e-9));
            }) == "divergent-tail");

    auto lb = tilt(make_power_law(0.3, make_constant_sv(), 4096, 1e-9), 0.5);
    auto m2 = khat_moments(lb);
    kahan_sum b1, b2;
    for (std::size_t n = 1; n <= 4096; ++n) {
        double x = static_cast<double>(n);
        b1.add(x * lb.K(n));
        b2.add(x * x * lb.K(n));
    }
    REQUIRE(m2.kp1 == Catch::Approx(b1.value()).epsilon(1e-10));
    REQUIRE(m2.kpp1 == Catch::Approx(b2.value() - b1.value()).epsilon(1e-10));
}

TEST_CASE("Q transforms: normalization, boundedness, and the deviation identity") {
    auto base = make_power_law(0.3, make_constant_sv(), 4096, 1e-9);
    auto law_b = tilt(base, 0.01);

    auto at1 = q_transforms(law_b, {1.0, 0.0});
    REQUIRE(at1.F1.real() == Catch::Approx(1.0).margin(1e-8));
    REQUIRE(at1.F2.real() == Catch::Approx(1.0).margin(1e-8));
    REQUIRE(std::abs(at1.F1.imag()) < 1e-12);
    REQUIRE(at1.f2_bounded);

    for (double phi : {0.4, 1.2, 2.2, 3.0}) {
        auto rep = q_transforms(law_b, std::polar(1.0, phi));
        REQUIRE(rep.f2_bounded);
        REQUIRE(std::abs(rep.F1) <= 1.0 + 1e-9);
        REQUIRE(std::abs(rep.F2) <= 1.0 + 1e-9);
    }

    // the deviation transform of the renewal function factors through the
    // normalized Q ratios exactly, not just asymptotically
    auto law_w = tilt(make_power_law(0.3, make_constant_sv(), 2048, 1e-9), 0.01);
    auto u_b = renewal_function(law_w, 2048);
    auto mom = khat_moments(law_w);
    double pref = mom.kpp1 / (2.0 * mom.kp1 * mom.kp1);
    for (double z : {0.3, 0.6, 0.9}) {
        double lhs = eval_Delta_hat(u_b, law_w, z);
        auto qr = q_transforms(law_w, {z, 0.0});
        double rhs = pref * (qr.F2 / qr.F1).real();
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-6));
    }

    // the prefactor grows as the tilt is released
    double prev = 0.0;
    for (double b : {0.04, 0.02, 0.01}) {
        auto m = khat_moments(tilt(base, b));
        double g = m.kpp1 / (2.0 * m.kp1 * m.kp1);
        REQUIRE(g > prev);
        prev = g;
    }

    REQUIRE(thrown_code([&] { q_transforms(base, {0.5, 0.0}); }) == "not-applicable");
    REQUIRE(thrown_code([&] { q_transforms(law_b, {1.5, 0.0}); }) == "invalid-law");
}
