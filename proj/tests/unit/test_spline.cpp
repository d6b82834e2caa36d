#include <cmath>

#include "doctest.h"
#include "drnet/error.hpp"
#include "drnet/numeric.hpp"
#include "drnet/spline.hpp"

using namespace drnet;

namespace {

// Transcription of the five-case formula with the paper's 1-based indices.
std::vector<double> reference_diff(const std::vector<double>& zeta_from_2) {
    const std::size_t N = (zeta_from_2.size() - 1) / 2;
    auto z = [&](std::size_t k) { return zeta_from_2[k - 2]; };
    std::vector<double> out;
    for (std::size_t i = 1; i <= 2 * N + 3; ++i) {
        if (i == 1)
            out.push_back(z(2));
        else if (i == 2)
            out.push_back(z(3) - 2 * z(2));
        else if (i <= 2 * N + 1)
            out.push_back(z(i - 1) - 2 * z(i) + z(i + 1));
        else if (i == 2 * N + 2)
            out.push_back(z(2 * N + 1) - 2 * z(2 * N + 2));
        else
            out.push_back(z(2 * N + 2));
    }
    return out;
}

}  // namespace

TEST_CASE("mesh knots") {
    Mesh m(4, 2.0);
    CHECK(m.size() == 11);
    CHECK(m.knot(0) == -1.25);
    CHECK(m.knot(1) == -1.0);
    CHECK(m.knot(9) == 1.0);
    CHECK(m.knot(10) == 1.25);
    CHECK(m.scaled_knot(1) == -2.0);
    CHECK_THROWS_AS(Mesh(0, 1.0), ParameterError);
    CHECK_THROWS_AS(Mesh(3, 0.0), ParameterError);
}

TEST_CASE("diff operator of a constant") {
    std::vector<double> z(9, 2.5);
    auto out = diff_operator(z);
    REQUIRE(out.size() == 11);
    CHECK(out[0] == 2.5);
    CHECK(out[1] == -2.5);
    for (std::size_t i = 2; i <= 8; ++i) CHECK(out[i] == 0.0);
    CHECK(out[9] == -2.5);
    CHECK(out[10] == 2.5);
}

TEST_CASE("diff operator hand example N=1") {
    auto out = diff_operator(std::vector<double>{1, 2, 4});
    CHECK(out == std::vector<double>{1, 0, 1, -6, 4});
    CHECK(out == reference_diff({1, 2, 4}));
}

TEST_CASE("diff operator kills affine interiors") {
    Mesh m(4, 1.0);
    std::vector<double> z;
    for (std::size_t k = 1; k <= 9; ++k) z.push_back(m.knot(k));
    auto out = diff_operator(z);
    for (std::size_t i = 2; i <= 8; ++i) CHECK(std::abs(out[i]) < 1e-15);
}

TEST_CASE("diff operator agrees with the transcription, is linear and bounded") {
    Rng rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (std::size_t N = 1; N <= 12; ++N) {
        std::vector<double> a(2 * N + 1), b(2 * N + 1), mix(2 * N + 1);
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        for (std::size_t k = 0; k < a.size(); ++k) mix[k] = 0.7 * a[k] - 1.3 * b[k];
        auto la = diff_operator(a), lb = diff_operator(b), lm = diff_operator(mix);
        CHECK(la == reference_diff(a));
        double amax = 0.0, lmax = 0.0;
        for (double v : a) amax = std::max(amax, std::abs(v));
        for (std::size_t i = 0; i < la.size(); ++i) {
            CHECK(std::abs(lm[i] - (0.7 * la[i] - 1.3 * lb[i])) < 1e-12);
            lmax = std::max(lmax, std::abs(la[i]));
        }
        CHECK(lmax <= 4.0 * amax);
    }
}

TEST_CASE("diff operator rejects bad lengths") {
    CHECK_THROWS_AS(diff_operator(std::vector<double>{1, 2}), ShapeError);
    CHECK_THROWS_AS(diff_operator(std::vector<double>{1}), ShapeError);
    CHECK_THROWS_AS(diff_operator(std::vector<double>{1, 2, 3, 4}), ShapeError);
}

TEST_CASE("quasi-interpolant reproduces constants") {
    for (std::size_t N : {1, 3, 8}) {
        auto L = QuasiInterpolant::of([](double) { return -0.75; }, Mesh(N, 1.7));
        for (int k = 0; k <= 200; ++k) {
            const double x = -1.7 + 3.4 * k / 200.0;
            CHECK(std::abs(L(x) + 0.75) < 1e-12);
        }
    }
}

TEST_CASE("quasi-interpolant interpolates at the inner knots") {
    Mesh m(6, 1.5);
    auto g = [](double x) { return std::cos(2 * x) + x * x * x; };
    auto L = QuasiInterpolant::of(g, m);
    for (std::size_t k = 1; k <= 2 * m.N + 1; ++k)
        CHECK(std::abs(L(m.scaled_knot(k)) - g(m.scaled_knot(k))) < 1e-12);
}

TEST_CASE("quasi-interpolant error bound for |x| and sin") {
    auto La = QuasiInterpolant::of([](double x) { return std::abs(x); }, Mesh(8, 1.0));
    double err = 0.0;
    for (int k = 0; k <= 10000; ++k) {
        const double x = -1.0 + 2.0 * k / 10000.0;
        err = std::max(err, std::abs(La(x) - std::abs(x)));
    }
    CHECK(err <= 0.25);

    double prev = 1e9;
    for (std::size_t N : {4, 8, 16, 32}) {
        auto L = QuasiInterpolant::of([](double x) { return std::sin(x); }, Mesh(N, 1.0));
        double e = 0.0;
        for (int k = 0; k <= 100000; ++k) {
            const double x = -1.0 + 2.0 * k / 100000.0;
            e = std::max(e, std::abs(L(x) - std::sin(x)));
        }
        CHECK(e <= 2.0 / static_cast<double>(N));
        CHECK(e < prev);
        prev = e;
    }
}
