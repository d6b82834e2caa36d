#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "drnet/error.hpp"
#include "drnet/numeric.hpp"
#include "drnet/ridgedecomp.hpp"

using namespace drnet;

namespace {

std::size_t count_monomials_brute(std::size_t d, unsigned q) {
    // enumerate all exponent vectors in [0,q]^d and count those of total degree q
    std::size_t total = 1, hits = 0;
    for (std::size_t i = 0; i < d; ++i) total *= (q + 1);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        unsigned deg = 0;
        for (std::size_t i = 0; i < d; ++i) {
            deg += static_cast<unsigned>(c % (q + 1));
            c /= (q + 1);
        }
        hits += (deg == q);
    }
    return hits;
}

PolynomialSpec one_plus_x1x2() { return PolynomialSpec(2, {{{0, 0}, 1.0}, {{1, 1}, 1.0}}); }

}  // namespace

TEST_CASE("n_q values") {
    CHECK(n_q(2, 2) == 3);
    CHECK(n_q(1, 5) == 1);
    CHECK(n_q(3, 3) == 10);
    for (std::size_t d = 1; d <= 5; ++d)
        for (unsigned q = 1; q <= 5; ++q) {
            CHECK(n_q(d, q) == count_monomials_brute(d, q));
            CHECK(monomials(d, q).size() == n_q(d, q));
        }
    CHECK(n_q(31, 30) == 118264581564861424ULL);
    CHECK_THROWS_AS(n_q(1000, 1000), CapacityError);
    CHECK_THROWS_AS(n_q(0, 2), ParameterError);
}

TEST_CASE("monomials are distinct and of the right degree") {
    auto m = monomials(3, 4);
    std::set<MultiIndex> uniq(m.begin(), m.end());
    CHECK(uniq.size() == m.size());
    for (const auto& a : m) CHECK(a[0] + a[1] + a[2] == 4);
}

TEST_CASE("polynomial evaluation and gradient") {
    PolynomialSpec Q(2, {{{2, 1}, 3.0}, {{0, 1}, -1.0}, {{0, 0}, 0.5}});
    std::vector<double> x{0.3, -0.4};
    CHECK(Q(x) == doctest::Approx(3 * 0.09 * -0.4 + 0.4 + 0.5));
    auto g = Q.gradient(x);
    CHECK(g[0] == doctest::Approx(6 * 0.3 * -0.4));
    CHECK(g[1] == doctest::Approx(3 * 0.09 - 1));
    CHECK(Q.degree() == 3);
    CHECK(Q.constant() == 0.5);
}

TEST_CASE("linear polynomial decomposes exactly") {
    std::vector<double> xi{0.3, -0.5, 0.2};
    auto Q = PolynomialSpec::linear(xi);
    auto D = decompose(Q, 42);
    CHECK(D.count() == 3);
    CHECK(D.residual <= 1e-10);
    for (const auto& v : D.directions) CHECK(std::abs(norm2(v) - 1.0) < 1e-12);
}

TEST_CASE("squared norm in d=2") {
    auto Q = PolynomialSpec::squared_norm(2);
    auto D = decompose(Q, 7);
    CHECK(D.count() == 3);
    CHECK(reconstruction_residual(Q, D, 512, 99) <= 1e-8);
    for (std::size_t k = 0; k < D.count(); ++k) CHECK(std::abs(D.gamma_at(k, 1)) < 1e-12);
}

TEST_CASE("1 + x1 x2 keeps its constant") {
    auto Q = one_plus_x1x2();
    auto D = decompose(Q, 3);
    CHECK(D.q0 == 1.0);
    CHECK(reconstruction_residual(Q, D, 512, 5) <= 1e-8);
}

TEST_CASE("cubic in three variables") {
    PolynomialSpec Q(3, {{{1, 0, 0}, 1.0}, {{0, 2, 0}, 0.5}, {{1, 0, 1}, -1.0}, {{0, 1, 2}, 0.25}});
    auto D = decompose(Q, 11);
    CHECK(D.count() == 10);
    CHECK(reconstruction_residual(Q, D, 512, 12) <= 1e-8);
}

TEST_CASE("decomposition is deterministic in the seed") {
    auto Q = one_plus_x1x2();
    auto a = decompose(Q, 5), b = decompose(Q, 5);
    CHECK(a.gamma == b.gamma);
    CHECK(a.directions == b.directions);
}

TEST_CASE("constant polynomials are rejected") {
    CHECK_THROWS_AS(decompose(PolynomialSpec(2, {{{0, 0}, 2.0}}), 1), ParameterError);
}

TEST_CASE("standard-basis radial decomposition") {
    auto D = decompose_squared_norm(4);
    CHECK(D.count() == 4);
    CHECK(D.gamma_l1() == 4.0);
    CHECK(D.residual < 1e-15);
}

TEST_CASE("sup norm estimates") {
    CHECK(poly_sup_norm(PolynomialSpec::squared_norm(3), 2000) == doctest::Approx(1.0).epsilon(1e-9));
    std::vector<double> xi{0.6, 0.8};
    CHECK(poly_sup_norm(PolynomialSpec::linear(xi), 2000) == doctest::Approx(1.0).epsilon(1e-9));
    const double s = poly_sup_norm(one_plus_x1x2(), 2000);
    CHECK(s <= 1.5 + 1e-12);
    CHECK(s >= 1.5 - 1e-8);
    CHECK(one_plus_x1x2().abs_coefficient_sum() >= s);
    CHECK(poly_gradient_sup_estimate(one_plus_x1x2(), 2000) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("decomposition csv round trip") {
    auto D = decompose(one_plus_x1x2(), 8);
    std::stringstream g, x;
    write_gamma_csv(g, D);
    write_directions_csv(x, D);
    auto back = read_decomposition_csv(g, x);
    CHECK(back.gamma == D.gamma);
    CHECK(back.directions == D.directions);
    CHECK(back.q0 == D.q0);
    CHECK(back.residual == D.residual);
}
