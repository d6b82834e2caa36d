#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "drnet/error.hpp"
#include "drnet/measure.hpp"
#include "drnet/numeric.hpp"

using namespace drnet;

TEST_CASE("dirac sampler repeats the point") {
    auto mu = sample_measure(DistributionSpec::dirac_at({0.0, 0.0}), 5, 123);
    CHECK(mu.size() == 5);
    for (double v : mu.data()) CHECK(v == 0.0);
}

TEST_CASE("uniform ball atoms stay in the ball") {
    auto mu = sample_measure(DistributionSpec::uniform_ball(2), 100, 7);
    CHECK(mu.size() == 100);
    for (std::size_t i = 0; i < mu.size(); ++i) CHECK(norm2(mu.atom(i)) <= 1.0);
}

TEST_CASE("sampling is deterministic in the seed") {
    auto spec = DistributionSpec::truncated_gaussian({0.1, -0.2, 0.3}, 0.5);
    auto a = sample_measure(spec, 50, 99);
    auto b = sample_measure(spec, 50, 99);
    auto c = sample_measure(spec, 50, 100);
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
    CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
}

TEST_CASE("truncated gaussian mean matches polar quadrature") {
    const double cx = 0.5, s = 0.2;
    auto mu = sample_measure(DistributionSpec::truncated_gaussian({cx, 0.0}, s), 10000, 2024);
    // E[x1] over the unit disc with density proportional to exp(-|x-c|^2 / 2s^2)
    const int nr = 800, nt = 800;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) / nr;
        for (int j = 0; j < nt; ++j) {
            const double th = 2.0 * std::numbers::pi * (j + 0.5) / nt;
            const double x = r * std::cos(th), y = r * std::sin(th);
            const double w = r * std::exp(-((x - cx) * (x - cx) + y * y) / (2 * s * s));
            num += w * x;
            den += w;
        }
    }
    const double expected = num / den;
    CHECK(std::abs(mu.mean()[0] - expected) < 0.02);
    CHECK(std::abs(mu.mean()[1]) < 0.02);
}

TEST_CASE("sphere mixture lands on its spheres or the boundary") {
    auto spec = DistributionSpec::sphere_mixture(2, {{{0.2, 0.0}, 0.3, 1.0}, {{-0.5, 0.1}, 0.2, 2.0}});
    auto mu = sample_measure(spec, 200, 5);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        auto x = mu.atom(i);
        const double d1 = std::hypot(x[0] - 0.2, x[1]);
        const double d2 = std::hypot(x[0] + 0.5, x[1] - 0.1);
        const bool on_sphere = std::abs(d1 - 0.3) < 1e-12 || std::abs(d2 - 0.2) < 1e-12;
        CHECK((on_sphere || std::abs(norm2(x) - 1.0) < 1e-12));
    }
}

TEST_CASE("invalid specs are rejected") {
    auto spec = DistributionSpec::truncated_gaussian({0.0}, -1.0);
    CHECK_THROWS_AS(sample_measure(spec, 3, 1), ParameterError);
    CHECK_THROWS_AS(sample_measure(DistributionSpec::uniform_ball(2), 0, 1), ParameterError);
    CHECK_THROWS_AS(EmpiricalMeasure(2, {1.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(EmpiricalMeasure(2, {0.1, 0.1, 0.1}), ShapeError);
    CHECK_THROWS_AS(family_from_name("cauchy"), ParameterError);
}

TEST_CASE("measure csv round-trips bit-exactly") {
    auto mu = sample_measure(DistributionSpec::uniform_ball(3), 17, 11);
    std::stringstream ss;
    write_measure_csv(ss, mu);
    CHECK(ss.str().rfind("# n=17 d=3\nx0,x1,x2\n", 0) == 0);
    auto back = read_measure_csv(ss);
    CHECK(back.dim() == 3);
    CHECK(std::equal(mu.data().begin(), mu.data().end(), back.data().begin(), back.data().end()));
}

TEST_CASE("malformed csv reports the line") {
    std::stringstream ss("# n=2 d=2\nx0,x1\n0.1,0.2\n0.3\n");
    try {
        read_measure_csv(ss);
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("duplicated and permuted measures integrate identically") {
    auto mu = sample_measure(DistributionSpec::uniform_ball(2), 9, 3);
    auto fn = [](std::span<const double> x) { return std::sin(3 * x[0]) + x[1] * x[1]; };
    CHECK(std::abs(mu.integrate(fn) - mu.duplicated(4).integrate(fn)) < 1e-14);
    std::vector<std::size_t> order{8, 7, 6, 5, 4, 3, 2, 1, 0};
    CHECK(std::abs(mu.integrate(fn) - mu.permuted(order).integrate(fn)) < 1e-14);
}
