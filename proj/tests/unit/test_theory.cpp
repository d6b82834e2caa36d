#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "drnet/error.hpp"
#include "drnet/theory.hpp"

using namespace drnet;

namespace {

// Direct transcription of the three exponentials, written independently of the library.
double oracle_sum(double m, double n, double N, double eps, double T1, double T2, double Rh, double R, double M,
                  double hn, double hd) {
    const double a = std::exp(T1 * N * std::log(16 * M * Rh / eps) + T2 * N * std::log(N) -
                              3 * m * eps / (2048 * M * M));
    const double b = std::exp(-m * eps * eps / (2 * (3 * M + hn) * (3 * M + hn) * (hd + 2 * eps / 3)));
    const double big = hn > M ? hn * hn : M * M;
    const double c = std::exp(std::log(4 * m) + T1 * N * std::log(80 * M * Rh * R * R * N * N * N * N / eps) +
                              T2 * N * std::log(N) - n * eps * eps / (115200 * big * std::pow(R, 8) * std::pow(N, 16)));
    const double s = a + b + c;
    return s > 3 ? 3 : s;
}

}  // namespace

TEST_CASE("covering constants for d = 1, q = 1") {
    CHECK(covering_T1(1, 1) == 12.0);
    CHECK(covering_T2(1, 1) == 253.0);
    CHECK(r_hat(1.0, 1, 1) == 15.0 * 29.0);
    CHECK(r_hat(1.0, 1, 1, RhatVariant::Statement) == 3.0 * 29.0);
    // d = 3, q = 2: n_q = 6
    CHECK(covering_T1(3, 2) == 5 * 6 + 10 + 5);
    CHECK(covering_T2(3, 2) == 9 * 5 * 6 + 90 + 190);
    for (std::size_t d = 1; d <= 8; ++d)
        for (unsigned q = 1; q <= 4; ++q) CHECK(covering_T1(d, q) < covering_T2(d, q));
}

TEST_CASE("covering bound") {
    const HypothesisSpaceSpec one{2.0, 1};
    const double Rh = 15.0 * 16.0 * 29.0;
    SUBCASE("N = 1 drops the log N term") {
        for (double eps : {1e-3, 0.1, 5.0}) {
            CHECK(covering_bound(one, 1, 1, eps).value == doctest::Approx(12.0 * std::log(Rh / eps)).epsilon(1e-14));
            CHECK(h2_covering_bound(one, 1, 1, eps).value ==
                  doctest::Approx(12.0 * std::log(Rh / eps)).epsilon(1e-14));
        }
    }
    SUBCASE("general N") {
        const HypothesisSpaceSpec s{2.0, 7};
        const double expect = 12.0 * 7 * std::log(Rh / 0.01) + 253.0 * 7 * std::log(7.0);
        CHECK(covering_bound(s, 1, 1, 0.01).value == doctest::Approx(expect).epsilon(1e-14));
    }
    SUBCASE("monotone in eps and N") {
        for (std::size_t N : {1, 3, 10})
            for (double eps : {1e-6, 1e-2, 1.0, 100.0}) {
                const HypothesisSpaceSpec s{3.0, N};
                CHECK(covering_bound(s, 2, 2, 2 * eps).value < covering_bound(s, 2, 2, eps).value);
                CHECK(h2_covering_bound(s, 2, 2, 2 * eps).value < h2_covering_bound(s, 2, 2, eps).value);
                const HypothesisSpaceSpec t{3.0, N + 1};
                CHECK(covering_bound(t, 2, 2, eps).value > covering_bound(s, 2, 2, eps).value);
            }
    }
    SUBCASE("eps beyond R-hat clamps") {
        auto b = covering_bound(one, 1, 1, 2 * Rh);
        CHECK(b.clamped);
        CHECK(b.value == 0.0);
        CHECK(b.raw < 0.0);
        CHECK_FALSE(covering_bound(one, 1, 1, 0.5 * Rh).clamped);
    }
    CHECK_THROWS_AS(covering_bound(one, 1, 1, 0.0), ParameterError);
    CHECK_THROWS_AS(covering_bound(HypothesisSpaceSpec{0.5, 2}, 1, 1, 0.1), ParameterError);
    CHECK(h2_sup_bound(HypothesisSpaceSpec{2.0, 3}) == 3 * 4 * 81);
}

TEST_CASE("oracle right-hand side") {
    auto k = make_theory_constants(2, 2, 4.0, 1.5, 1.0, 0.8);
    SUBCASE("matches the transcription") {
        struct Case { double m, n; std::size_t N; double eps, hn, hd; };
        for (auto c : {Case{1.34e6, 1e20, 1, 0.5, 1.0, 0.1}, Case{1.335e6, 1e25, 1, 0.5, 0.3, 0.2},
                       Case{1e9, 1e30, 2, 0.5, 1.0, 0.1}, Case{100, 100, 2, 0.1, 1.0, 0.1}}) {
            auto r = oracle_rhs(c.m, c.n, c.N, c.eps, k, c.hn, c.hd);
            const double want = oracle_sum(c.m, c.n, static_cast<double>(c.N), c.eps, k.T1, k.T2, k.R_hat, k.R, k.M,
                                           c.hn, c.hd);
            CHECK(r.value == doctest::Approx(want).epsilon(1e-10));
            CHECK(std::isfinite(r.log_value));
            CHECK(r.value == doctest::Approx(std::exp(std::min(r.log_value, std::log(3.0)))).epsilon(1e-12));
            CHECK(r.value <= 3.0);
        }
    }
    SUBCASE("mid-range value lies strictly inside (0, 3)") {
        auto r = oracle_rhs(1.34e6, 1e20, 1, 0.5, k, 1.0, 0.1);
        CHECK(r.value > 1e-3);
        CHECK(r.value < 1.0);
    }
    SUBCASE("limits in m and n") {
        auto small = oracle_rhs(1e3, 1e40, 1, 0.5, k, 1.0, 0.1);
        auto large = oracle_rhs(1e6, 1e40, 1, 0.5, k, 1.0, 0.1);
        CHECK(large.terms[1] < small.terms[1]);
        CHECK(large.log_terms[0] < small.log_terms[0]);
        auto huge = oracle_rhs(1e12, 1e40, 1, 0.5, k, 1.0, 0.1);
        CHECK(huge.terms[0] < 1e-12);
        CHECK(huge.terms[1] < 1e-12);
        auto nbig = oracle_rhs(1e3, 1e60, 1, 0.5, k, 1.0, 0.1);
        auto nsmall = oracle_rhs(1e3, 1e45, 1, 0.5, k, 1.0, 0.1);
        CHECK(nbig.log_terms[2] < nsmall.log_terms[2]);
        CHECK(nbig.terms[2] < 1e-12);
    }
    CHECK_THROWS_AS(oracle_rhs(0, 1, 1, 0.1, k, 1, 1), ParameterError);
}

TEST_CASE("rate constants reproduce the proof algebra") {
    const double C1 = 0.9, M = 2.0, beta = 0.5, R = 5.0;
    auto k = make_theory_constants(3, 2, R, M, beta, C1);
    const double Rh = 15 * std::pow(R, 4) * (10 * 6 + 3 + 18);
    CHECK(k.R_hat == doctest::Approx(Rh).epsilon(1e-15));
    const double A1 = k.T1 * (std::log(8 * M * Rh / (C1 * C1)) + 2 * beta) + k.T2;
    const double A2 = k.T1 * (std::log(40 * M * Rh * R * R / (C1 * C1)) + 2 * beta + 4) + k.T2;
    const double A3 = 115200 * (M + C1) * (M + C1) * std::pow(R, 8);
    const double a = 3 * C1 * C1 / (2048 * M * M * A1), b = 3 * C1 * C1 / (4096 * M * M * A2);
    const double A4 = std::pow(a < b ? a : b, 1 / (2 * beta + 1));
    const double A5 = 3 * A3 * std::pow(A4, 2 * beta + 16) / (4096 * M * M * C1 * C1);
    const double A6 = 3 * C1 * C1 * std::pow(A4, -2 * beta) / (4096 * M * M);
    const double A7 = 18 * C1 * C1 * std::pow(2, 2 * beta) * std::pow(A4, -2 * beta) * (std::log(A4) + 1 / (2 * beta + 1)) +
                      2304 * (4 * M + C1) * (4 * M + C1);
    CHECK(std::abs(k.A1 - A1) <= 1e-12 * A1);
    CHECK(std::abs(k.A2 - A2) <= 1e-12 * A2);
    CHECK(std::abs(k.A3 - A3) <= 1e-12 * A3);
    CHECK(std::abs(k.A4 - A4) <= 1e-12 * A4);
    CHECK(std::abs(k.A5 - A5) <= 1e-12 * A5);
    CHECK(std::abs(k.A6 - A6) <= 1e-12 * A6);
    CHECK(std::abs(k.A7 - A7) <= 1e-12 * std::abs(A7));
    CHECK(excess_risk_bound(100, k) == doctest::Approx(A7 * std::pow(100.0, -0.5) * std::log(100.0)));
}

TEST_CASE("rate schedule") {
    SUBCASE("beta = 1 exponents") {
        TheoryConstants k;
        k.beta = 1.0;
        k.A4 = 2.0;
        k.A5 = 1e-6;
        k.A6 = 1.0;
        auto s = rate_schedule(1000, k);
        CHECK(s.N_target == doctest::Approx(20.0).epsilon(1e-14));
        CHECK(s.N == 20);
        CHECK(s.n_target == doctest::Approx(1e-6 * 1e21).epsilon(1e-12));
        CHECK_FALSE(s.n_saturated);
        CHECK(s.restriction_ok == (std::log(4000.0) <= 10.0));
    }
    SUBCASE("desk-scale constants clamp N") {
        auto k = make_theory_constants(2, 2, 10.0, 1.0, 1.0, 1.0);
        CHECK(k.A4 < 1e-2);
        auto s = rate_schedule(1024, k);
        CHECK(s.N == 1);
        CHECK(s.N_clamped);
    }
    SUBCASE("doubling m scales the N target") {
        for (double beta : {0.25, 0.5, 1.0}) {
            auto k = make_theory_constants(1, 1, 2.0, 1.0, beta, 1.0);
            for (double m : {4.0, 100.0, 1e6}) {
                auto s1 = rate_schedule(m, k), s2 = rate_schedule(2 * m, k);
                CHECK(s2.N_target == doctest::Approx(s1.N_target * std::pow(2.0, 1 / (2 * beta + 1))).epsilon(1e-13));
                CHECK(s2.n_target >= s1.n_target);
            }
        }
    }
    SUBCASE("huge n saturates") {
        TheoryConstants k;
        k.beta = 1.0;
        k.A4 = 1.0;
        k.A5 = 1e10;
        auto s = rate_schedule(1e6, k);
        CHECK(s.n_saturated);
        CHECK(s.n_min == std::numeric_limits<std::uint64_t>::max());
    }
}

TEST_CASE("constants from a construction") {
    auto r = build(shipped_target("radial-sin"), 4, 1);
    auto k = theory_constants_for(r, 30.0);
    // radial-sin: B_G = 28, B_Q = 9, |g| = 1, |f| = 1, beta = 1
    CHECK(k.C1 == doctest::Approx(2 * 28 + 27).epsilon(1e-14));
    CHECK(k.R == r.R);
    CHECK(k.q == 2);
    CHECK(k.d == 2);
    CHECK_THROWS_AS(theory_constants_for(build_ridge(shipped_target("ridge-sin"), 4), 1.0), PreconditionError);
    CHECK_THROWS_AS(make_theory_constants(1, 1, 2.0, 0.0, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(make_theory_constants(1, 1, 2.0, 1.0, 1.5, 1.0), ParameterError);
}

TEST_CASE("continuity bound") {
    CHECK(continuity_bound(2.0, 3.0, 0.5) == 3.0);
    CHECK(continuity_bound(1.0, 1.0, 0.0) == 0.0);
}
