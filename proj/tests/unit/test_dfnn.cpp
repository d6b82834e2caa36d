#include <cmath>
#include <numeric>

#include "doctest.h"
#include "drnet/dfnn.hpp"
#include "drnet/error.hpp"
#include "drnet/wasserstein.hpp"
#include "random_nets.hpp"

using namespace drnet;

namespace {

DistributionNet identity_net() {
    std::vector<Layer> layers{{RowMatrix::Identity(1, 1), Eigen::VectorXd::Zero(1)},
                              {RowMatrix::Identity(1, 1), Eigen::VectorXd::Zero(1)}};
    return DistributionNet(1, 1, std::move(layers), Eigen::VectorXd::Ones(1));
}

DistributionNet boundary_net(std::size_t d, std::size_t d1, double R, std::size_t N) {
    const std::size_t w = 2 * N + 3;
    auto net = DistributionNet::zeros(d, 2, {d1, w, w});
    const double Nd = static_cast<double>(N);
    for (auto& L : net.layers()) {
        L.F.col(0).setConstant(R * Nd * Nd);
        L.b.setConstant(R);
    }
    net.c().setConstant(R * Nd);
    return net;
}

}  // namespace

TEST_CASE("hand-evaluated two-atom example") {
    auto net = identity_net();
    EmpiricalMeasure mu(1, {1.0, -1.0});
    CHECK(net.forward(mu) == 0.5);
    CHECK(net.integrated_features(mu)[0] == 0.5);
}

TEST_CASE("single-atom reduction is exact") {
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        auto net = testutil::random_net(rng, 3, 1 + rep % 3, {7, 5, 4, 3});
        auto mu = sample_measure(DistributionSpec::uniform_ball(3), 1, rng());
        CHECK(net.forward(mu) == net.forward_point(mu.atom(0)));
    }
}

TEST_CASE("parallel forward equals the serial reference bit for bit") {
    Rng rng(2);
    auto net = testutil::random_net(rng, 2, 2, {40, 23, 23});
    auto mu = sample_measure(DistributionSpec::uniform_ball(2), 1000, 9);
    CHECK(net.forward(mu) == net.forward_reference(mu));
}

TEST_CASE("permutation and duplication invariance") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        auto net = testutil::random_net(rng, 2, 2, {9, 7, 7});
        auto mu = testutil::random_measure(rng, 2, 30);
        std::vector<std::size_t> order(mu.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        CHECK(std::abs(net.forward(mu.permuted(order)) - net.forward(mu)) < 1e-12);
        CHECK(std::abs(net.forward(mu.duplicated(3)) - net.forward(mu)) < 1e-12);
    }
}

TEST_CASE("dimension mismatch is a shape error") {
    auto net = identity_net();
    CHECK_THROWS_AS(net.forward(sample_measure(DistributionSpec::uniform_ball(2), 3, 1)), ShapeError);
    std::vector<Layer> bad{{RowMatrix::Zero(2, 3), Eigen::VectorXd::Zero(2)}};
    CHECK_THROWS_AS(DistributionNet(2, 1, bad, Eigen::VectorXd::Zero(2)), ShapeError);
    CHECK_THROWS_AS(DistributionNet::zeros(2, 0, {3}), ShapeError);
}

TEST_CASE("gradient matches central differences") {
    Rng rng(4);
    auto net = testutil::random_net(rng, 2, 2, {6, 5, 4});
    auto mu = sample_measure(DistributionSpec::uniform_ball(2), 70, 5);
    NetGradient g;
    const double out = forward_with_gradient(net, mu, g);
    CHECK(out == net.forward(mu));
    const double h = 1e-6;
    auto check_param = [&](double& p, double analytic) {
        const double keep = p;
        p = keep + h;
        const double up = net.forward(mu);
        p = keep - h;
        const double dn = net.forward(mu);
        p = keep;
        CHECK(analytic == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5).scale(1.0));
    };
    for (std::size_t j = 0; j < net.depth(); ++j) {
        auto& L = net.layers()[j];
        for (Eigen::Index i = 0; i < L.F.size(); i += 3) check_param(L.F.data()[i], g.dF[j].data()[i]);
        for (Eigen::Index i = 0; i < L.b.size(); ++i) check_param(L.b[i], g.db[j][i]);
    }
    for (Eigen::Index i = 0; i < net.c().size(); ++i) check_param(net.c()[i], g.dc[i]);
}

TEST_CASE("param norms") {
    RowMatrix F(2, 2);
    F << 1, -2, 3, 0;
    CHECK(matrix_inf_norm(F) == 3.0);
    CHECK(matrix_inf_norm(RowMatrix::Zero(3, 4)) == 0.0);
}

TEST_CASE("membership") {
    const double R = 2.0;
    const std::size_t N = 3;
    HypothesisSpaceSpec spec{R, N};
    CHECK(in_hypothesis_space(DistributionNet::zeros(2, 2, {9, 9, 9}), {0.1, N}));
    auto edge = boundary_net(2, 18, R, N);
    CHECK(in_hypothesis_space(edge, spec));
    auto rep = check_membership(edge, {R / 2, N});
    CHECK_FALSE(rep.member);
    CHECK(rep.first_violation.rfind("F1", 0) == 0);
    edge.c()[0] *= 1.001;
    CHECK_FALSE(in_hypothesis_space(edge, spec));
    CHECK_THROWS_AS(in_hypothesis_space(DistributionNet::zeros(2, 2, {9, 8, 8}), spec), ShapeError);
    CHECK_THROWS_AS(in_hypothesis_space(DistributionNet::zeros(2, 1, {9, 9, 9}), spec), ShapeError);
}

TEST_CASE("membership is monotone in R") {
    Rng rng(6);
    auto net = testutil::random_member(rng, 2, 14, 1.5, 2);
    bool prev = false;
    for (double R = 0.1; R < 5; R += 0.1) {
        const bool now = in_hypothesis_space(net, {R, 2});
        CHECK((now || !prev));
        prev = now;
    }
    CHECK(prev);
}

TEST_CASE("projection") {
    CHECK(project_M(1.5, 1.0) == 1.0);
    CHECK(project_M(-3.0, 2.0) == -2.0);
    CHECK(project_M(0.3, 1.0) == 0.3);
}

TEST_CASE("certificates") {
    const double R = 2.0;
    const std::size_t N = 3;
    HypothesisSpaceSpec spec{R, N};
    CHECK(lipschitz_certificate(boundary_net(2, 9, R, N), spec) == 9 * std::pow(R, 4) * std::pow(3.0, 7));
    CHECK(lipschitz_certificate(DistributionNet::zeros(2, 2, {9, 9, 9}), spec) == 0.0);
    CHECK(uniform_bound({1.0, 1}) == 20.0);
    CHECK_THROWS_AS(uniform_bound({1.0, 0}), PreconditionError);
    auto outside = boundary_net(2, 9, R, N);
    CHECK_THROWS_AS(lipschitz_certificate(outside, {R / 4, N}), PreconditionError);
}

TEST_CASE("random members obey the Lipschitz and uniform bounds") {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const double R = 0.5 + rep * 0.2;
        const std::size_t N = 1 + rep % 3;
        HypothesisSpaceSpec spec{R, N};
        auto net = testutil::random_member(rng, 2, 3 * (2 * N + 3), R, N);
        const double L = lipschitz_certificate(net, spec), U = uniform_bound(spec);
        for (int k = 0; k < 10; ++k) {
            auto mu = testutil::random_measure(rng, 2), nu = testutil::random_measure(rng, 2);
            const double fm = net.forward(mu), fn = net.forward(nu);
            CHECK(std::abs(fm) <= U);
            CHECK(std::abs(fm - fn) <= L * wasserstein(mu, nu, 1) + 1e-9);
            CHECK(std::abs(fm - fn) <= L * wasserstein(mu, nu, 2) + 1e-9);
        }
    }
}

TEST_CASE("json round trip is bit exact") {
    Rng rng(8);
    auto net = testutil::random_net(rng, 3, 2, {5, 4, 6});
    net.layers()[0].F(0, 0) = 0.1 + 0.2;
    net.c()[1] = -1e-300;
    auto back = from_json(to_json(net));
    CHECK(back.widths() == net.widths());
    CHECK(back.realizing_level() == 2);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(back.layers()[j].F == net.layers()[j].F);
        CHECK(back.layers()[j].b == net.layers()[j].b);
    }
    CHECK(back.c() == net.c());
    CHECK_THROWS_AS(from_json("{\"J\": 2}"), ConfigError);
    CHECK_THROWS_AS(from_json("not json"), ConfigError);
}
