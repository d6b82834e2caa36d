#include "drnet/construct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "drnet/error.hpp"
#include "drnet/numeric.hpp"
#include "drnet/spline.hpp"

namespace drnet {

namespace {

constexpr double kBoundSlack = 1e-9;

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}


/// (N/B) L_N(h(B t_k))
std::vector<double> spline_row(const ScalarFunction& h, std::size_t N, double B) {
    Mesh mesh(N, B);
    auto coef = diff_operator(inner_samples(h.value, mesh));
    const double scale = static_cast<double>(N) / B;
    for (auto& v : coef) v *= scale;
    return coef;
}

std::vector<double> scaled_knots(std::size_t N, double B) { return Mesh(N, B).scaled_knots(); }

RowMatrix tile_rows(const std::vector<double>& row, std::size_t count) {
    RowMatrix F(count, row.size());
    for (std::size_t r = 0; r < count; ++r)
        for (std::size_t c = 0; c < row.size(); ++c) F(r, c) = row[c];
    return F;
}

void check_N(std::size_t N) {
    if (N == 0) throw ParameterError("resolution N must be >= 1");
    if (2 * N + 3 > kMaxWidth) throw CapacityError("resolution N too large for the width cap");
}

double bound_value(const TargetConstants& k, double inner_term, std::size_t N) {
    const double Nb = std::pow(static_cast<double>(N), k.beta);
    return (2.0 * std::pow(k.B_G, k.beta) * k.f_holder + std::pow(inner_term, k.beta) * k.f_holder) / Nb;
}

void finish_outer(TargetConstants& k, const TargetFunctional& target) {
    if (!(k.B_G > 0.0) || !std::isfinite(k.B_G))
        throw ParameterError("target '" + target.id + "' has B_G = 0; the inner function vanishes identically");
    k.f_holder = target.f.seminorm_on(k.B_G);
    k.f_sup = target.f.sup_on(k.B_G);
    k.beta = target.f.beta;
}

ConstructionReport ridge_impl(const TargetFunctional& target, std::size_t N, double B_xi) {
    check_N(N);
    const std::size_t d = target.xi.size();
    const std::size_t w = 2 * N + 3;

    ConstructionReport r;
    r.target_id = target.id;
    r.kind = target.kind;
    r.N = N;
    r.dim = d;
    auto& k = r.constants;
    k.B_inner = B_xi;
    k.g_lip = target.g.seminorm_on(B_xi);
    k.B_g = target.g.sup_on(B_xi);
    k.B_G = k.B_g + 2.0 * B_xi * k.g_lip;
    finish_outer(k, target);

    const auto b1 = scaled_knots(N, B_xi);
    const auto f2 = spline_row(target.g, N, B_xi);
    const auto b2 = scaled_knots(N, k.B_G);
    const auto c = spline_row(target.f, N, k.B_G);

    std::vector<Layer> layers{{tile_rows(target.xi, w), to_vec(b1)}, {tile_rows(f2, w), to_vec(b2)}};
    r.net = DistributionNet(d, 1, std::move(layers), to_vec(c));
    r.generators = {{"xi", 1, d, target.xi}, {"b1", 1, w, b1}, {"F2-row", 1, w, f2}, {"b2", 1, w, b2},
                    {"c", 1, w, c}};
    for (const auto& g : r.generators) r.param_count += g.size();
    r.claimed_bound = bound_value(k, 2.0 * B_xi * k.g_lip, N);
    r.c_limit = 4.0 * k.f_sup * static_cast<double>(N) / k.B_G;
    return r;
}

ConstructionReport composite_impl(const TargetFunctional& target, std::size_t N, RidgeDecomposition D,
                                  bool radial) {
    check_N(N);
    const std::size_t d = target.Q.dim();
    const unsigned q = D.degree;
    const std::size_t n = D.count();
    const std::size_t w = 2 * N + 3;
    const double Nd = static_cast<double>(N);
    if (n * w > kMaxWidth) throw CapacityError("first-layer width n_q(2N+3) exceeds the width cap");

    ConstructionReport r;
    r.target_id = target.id;
    r.kind = target.kind;
    r.N = N;
    r.dim = d;
    r.degree = q;
    auto& k = r.constants;
    k.gamma_l1 = D.gamma_l1();
    k.B_hat_Q = target.q_sup ? *target.q_sup : target.Q.abs_coefficient_sum();
    k.B_inner = k.B_hat_Q + 2.0 * q * k.gamma_l1;
    const double B_Q = k.B_inner;
    k.g_lip = target.g.seminorm_on(B_Q);
    k.B_g = target.g.sup_on(B_Q);
    k.B_G = k.B_g + 3.0 * B_Q * k.g_lip;
    finish_outer(k, target);

    const auto t = Mesh(N, 1.0).knots();
    // N v^[l], v^[l] = L_N(t_j^l)
    std::vector<std::vector<double>> NV(q);
    for (unsigned l = 1; l <= q; ++l) {
        auto v = diff_operator(inner_samples([l](double s) { return std::pow(s, static_cast<int>(l)); }, Mesh(N, 1.0)));
        for (auto& x : v) x *= Nd;
        NV[l - 1] = std::move(v);
    }

    RowMatrix F1(n * w, d);
    Eigen::VectorXd b1(n * w);
    std::vector<double> row2(n * w);
    for (std::size_t kk = 0; kk < n; ++kk) {
        for (std::size_t j = 0; j < w; ++j) {
            for (std::size_t i = 0; i < d; ++i) F1(kk * w + j, i) = D.directions[kk][i];
            b1[kk * w + j] = t[j];
            double s = 0.0;
            for (unsigned l = 1; l <= q; ++l) s += D.gamma_at(kk, l) * NV[l - 1][j];
            row2[kk * w + j] = s;
        }
    }
    const double q0 = target.Q.constant();
    std::vector<double> b2(w);
    for (std::size_t j = 0; j < w; ++j) b2[j] = -q0 + B_Q * t[j];
    const auto f3 = spline_row(target.g, N, B_Q);
    const auto b3 = scaled_knots(N, k.B_G);
    const auto c = spline_row(target.f, N, k.B_G);

    std::vector<Layer> layers{{std::move(F1), b1}, {tile_rows(row2, w), to_vec(b2)}, {tile_rows(f3, w), to_vec(b3)}};
    r.net = DistributionNet(d, 2, std::move(layers), to_vec(c));

    std::vector<double> dirs;
    for (const auto& xi : D.directions) dirs.insert(dirs.end(), xi.begin(), xi.end());
    r.generators.push_back({"directions", n, d, dirs});
    r.generators.push_back({"knots", 1, w, t});
    if (radial) {
        std::vector<double> g2(n);
        for (std::size_t kk = 0; kk < n; ++kk) g2[kk] = D.gamma_at(kk, 2);
        r.generators.push_back({"gamma", n, 1, g2});
        r.generators.push_back({"V", 1, w, NV[1]});
    } else {
        r.generators.push_back({"gamma", n, q, D.gamma});
        std::vector<double> V;
        for (const auto& v : NV) V.insert(V.end(), v.begin(), v.end());
        r.generators.push_back({"V", q, w, V});
    }
    r.generators.push_back({"b2", 1, w, b2});
    r.generators.push_back({"F3-row", 1, w, f3});
    r.generators.push_back({"b3", 1, w, b3});
    r.generators.push_back({"c", 1, w, c});
    for (const auto& g : r.generators) r.param_count += g.size();

    const double inner_term = radial ? (12.0 * static_cast<double>(d) + 3.0) * k.g_lip : 3.0 * B_Q * k.g_lip;
    r.claimed_bound = bound_value(k, inner_term, N);
    r.c_limit = 4.0 * k.f_sup * Nd / k.B_G;
    r.inner_bound = 2.0 * q * k.gamma_l1 / Nd;
    r.decomposition = std::move(D);

    const auto cert = certify_bounds(r);
    r.R = cert.R;
    r.certified = cert.pass;
    r.violation = cert.violation;
    return r;
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

const ParameterGroup* group(const ConstructionReport& r, const std::string& name) {
    for (const auto& g : r.generators)
        if (g.name == name) return &g;
    return nullptr;
}

}  // namespace

bool ConstructionReport::pass() const {
    const bool error_ok = measured_error >= 0.0 && measured_error <= claimed_bound + kBoundSlack;
    return error_ok && (!is_three_layer() || certified);
}

std::size_t ridge_param_count(std::size_t N, std::size_t d) { return 8 * N + d + 12; }

std::size_t poly_param_count(std::size_t N, std::size_t d, unsigned q, std::uint64_t nq) {
    return (2 * q + 10) * N + (d + q) * nq + 3 * q + 15;
}

std::size_t radial_param_count(std::size_t N, std::size_t d) { return 12 * N + d * d + d + 18; }

ConstructionReport build_ridge(const TargetFunctional& target, std::size_t N) {
    target.validate();
    if (target.kind == TargetKind::Laplace) {
        const double nx = norm2(target.xi);
        return ridge_impl(target, N, nx > 1.0 ? nx : 1.0);
    }
    if (target.kind != TargetKind::Ridge)
        throw ParameterError(std::string("build_ridge needs a ridge target, got ") + kind_name(target.kind));
    return ridge_impl(target, N, norm2(target.xi));
}

ConstructionReport build_laplace(std::span<const double> xi, std::size_t N) {
    return build_ridge(TargetFunctional::laplace("laplace", {xi.begin(), xi.end()}), N);
}

ConstructionReport build_poly(const TargetFunctional& target, std::size_t N, std::uint64_t seed) {
    target.validate();
    if (target.kind != TargetKind::PolyComposite)
        throw ParameterError(std::string("build_poly needs a poly-composite target, got ") + kind_name(target.kind));
    check_N(N);
    return composite_impl(target, N, decompose(target.Q, seed), false);
}

ConstructionReport build_radial(const TargetFunctional& target, std::size_t N) {
    target.validate();
    if (target.kind != TargetKind::Radial)
        throw ParameterError(std::string("build_radial needs a radial target, got ") + kind_name(target.kind));
    return composite_impl(target, N, decompose_squared_norm(target.Q.dim()), true);
}

ConstructionReport build(const TargetFunctional& target, std::size_t N, std::uint64_t seed) {
    switch (target.kind) {
        case TargetKind::Ridge:
        case TargetKind::Laplace: return build_ridge(target, N);
        case TargetKind::PolyComposite: return build_poly(target, N, seed);
        case TargetKind::Radial: return build_radial(target, N);
    }
    throw ParameterError("unknown target kind");
}

double parameter_bound_R(const ConstructionReport& r) {
    if (!r.is_three_layer()) throw PreconditionError("parameter bound R applies to (2,3) constructions only");
    const auto& k = r.constants;
    const double B_Q = k.B_inner;
    return std::max({2.0 * std::sqrt(static_cast<double>(r.dim)), 20.0 * k.gamma_l1, 3.0 * B_Q, 20.0 * k.B_G / B_Q,
                     2.0 * k.B_G, 4.0 * k.f_sup / k.B_G});
}

Certification certify_bounds(const ConstructionReport& r, double R) {
    if (!r.is_three_layer()) throw PreconditionError("certification applies to (2,3) constructions only");
    const auto rep = check_membership(r.net, HypothesisSpaceSpec{R, r.N});
    const auto norms = param_norms(r.net);
    const double Nd = static_cast<double>(r.N);
    double t = norms.c_inf / (R * Nd);
    for (std::size_t j = 0; j < norms.F_inf.size(); ++j)
        t = std::max({t, norms.F_inf[j] / (R * Nd * Nd), norms.b_inf[j] / R});
    return {R, rep.member, rep.first_violation, t};
}

Certification certify_bounds(const ConstructionReport& r) { return certify_bounds(r, parameter_bound_R(r)); }

std::optional<std::size_t> structural_parameter_count(const ConstructionReport& r) {
    const auto& net = r.net;
    const std::size_t w = 2 * r.N + 3;
    auto tiled = [&](const RowMatrix& F, const ParameterGroup& g, std::size_t repeat) {
        // rows: block k of `repeat` identical rows equal to row k of g
        if (static_cast<std::size_t>(F.rows()) != g.rows * repeat || static_cast<std::size_t>(F.cols()) != g.cols)
            return false;
        for (Eigen::Index i = 0; i < F.rows(); ++i)
            for (Eigen::Index j = 0; j < F.cols(); ++j)
                if (!same(F(i, j), g.values[(static_cast<std::size_t>(i) / repeat) * g.cols + j])) return false;
        return true;
    };
    auto equal_vec = [&](const Eigen::VectorXd& v, const ParameterGroup& g) {
        if (static_cast<std::size_t>(v.size()) != g.size()) return false;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (!same(v[i], g.values[i])) return false;
        return true;
    };
    auto sum = [&] {
        std::size_t s = 0;
        for (const auto& g : r.generators) s += g.size();
        return s;
    };

    if (!r.is_three_layer()) {
        const auto *xi = group(r, "xi"), *b1 = group(r, "b1"), *f2 = group(r, "F2-row"), *b2 = group(r, "b2"),
                   *c = group(r, "c");
        if (!xi || !b1 || !f2 || !b2 || !c || net.depth() != 2 || net.realizing_level() != 1) return std::nullopt;
        if (!tiled(net.layer(1).F, *xi, w) || !equal_vec(net.layer(1).b, *b1)) return std::nullopt;
        if (!tiled(net.layer(2).F, *f2, w) || !equal_vec(net.layer(2).b, *b2) || !equal_vec(net.c(), *c))
            return std::nullopt;
        return sum();
    }

    const auto *dirs = group(r, "directions"), *knots = group(r, "knots"), *gamma = group(r, "gamma"),
               *V = group(r, "V"), *b2 = group(r, "b2"), *f3 = group(r, "F3-row"), *b3 = group(r, "b3"),
               *c = group(r, "c");
    if (!dirs || !knots || !gamma || !V || !b2 || !f3 || !b3 || !c) return std::nullopt;
    if (net.depth() != 3 || net.realizing_level() != 2) return std::nullopt;
    const std::size_t n = dirs->rows;
    if (!tiled(net.layer(1).F, *dirs, w)) return std::nullopt;
    const auto& b1 = net.layer(1).b;
    if (static_cast<std::size_t>(b1.size()) != n * w) return std::nullopt;
    for (std::size_t i = 0; i < n * w; ++i)
        if (!same(b1[i], knots->values[i % w])) return std::nullopt;
    // every row of F2 is gamma_Q F^[N]; radial uses only the degree-2 column
    const RowMatrix& F2 = net.layer(2).F;
    if (static_cast<std::size_t>(F2.rows()) != w || static_cast<std::size_t>(F2.cols()) != n * w) return std::nullopt;
    const std::size_t q = gamma->cols;
    if (V->rows != q || V->cols != w) return std::nullopt;
    for (Eigen::Index row = 0; row < F2.rows(); ++row)
        for (std::size_t kk = 0; kk < n; ++kk)
            for (std::size_t j = 0; j < w; ++j) {
                double s = 0.0;
                for (std::size_t l = 0; l < q; ++l) s += gamma->values[kk * q + l] * V->values[l * w + j];
                if (!same(F2(row, kk * w + j), s)) return std::nullopt;
            }
    if (!equal_vec(net.layer(2).b, *b2)) return std::nullopt;
    if (!tiled(net.layer(3).F, *f3, w) || !equal_vec(net.layer(3).b, *b3) || !equal_vec(net.c(), *c))
        return std::nullopt;
    return sum();
}

double inner_polynomial(const ConstructionReport& r, std::span<const double> x) {
    if (!r.is_three_layer()) throw PreconditionError("inner polynomial exists for (2,3) constructions only");
    if (x.size() != r.dim) throw ShapeError("point dimension mismatch");
    const auto& L1 = r.net.layer(1);
    const auto& F2 = r.net.layer(2).F;
    double s = 0.0;
    for (Eigen::Index i = 0; i < L1.F.rows(); ++i) {
        double z = -L1.b[i];
        for (std::size_t j = 0; j < x.size(); ++j) z += L1.F(i, static_cast<Eigen::Index>(j)) * x[j];
        s += F2(0, i) * relu(z);
    }
    return s - r.net.layer(2).b[0] + r.constants.B_inner * Mesh(r.N, 1.0).knot(0);
}

double inner_polynomial_error(const ConstructionReport& r, const PolynomialSpec& Q, std::size_t points,
                              std::uint64_t seed) {
    const std::size_t d = r.dim;
    std::vector<std::vector<double>> pts;
    auto ball = sample_measure(DistributionSpec::uniform_ball(d), points, derive_seed(seed, 1));
    auto sphere = sample_measure(DistributionSpec::sphere_mixture(d, {{std::vector<double>(d, 0.0), 1.0, 1.0}}),
                                 points / 2 + 1, derive_seed(seed, 2));
    for (const auto* m : {&ball, &sphere})
        for (std::size_t i = 0; i < m->size(); ++i) pts.emplace_back(m->atom(i).begin(), m->atom(i).end());
    for (std::size_t i = 0; i < d; ++i)
        for (double s : {-1.0, 1.0}) {
            std::vector<double> e(d, 0.0);
            e[i] = s;
            pts.push_back(e);
        }
    pts.emplace_back(d, 0.0);
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, std::abs(inner_polynomial(r, p) - Q(p)));
    return worst;
}

std::vector<EmpiricalMeasure> construction_suite(std::size_t d, std::uint64_t seed, std::size_t size,
                                                 const std::vector<std::vector<double>>& probes) {
    if (d == 0 || d > kMaxDimension) throw ShapeError("suite dimension must be in 1..16");
    std::vector<EmpiricalMeasure> suite;
    const std::vector<double> origin(d, 0.0);
    suite.push_back(EmpiricalMeasure::dirac(origin));

    std::vector<std::vector<double>> dirs;
    for (const auto& p : probes) {
        if (p.size() != d) throw ShapeError("probe dimension mismatch");
        const double n = norm2(p);
        if (n <= 0.0) continue;
        std::vector<double> u(p);
        for (auto& v : u) v /= n;
        dirs.push_back(u);
    }
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> e(d, 0.0);
        e[i] = 1.0;
        dirs.push_back(e);
    }

    // Diracs sweeping each direction, and segment grids along it
    for (std::size_t a = 0; a < dirs.size(); ++a) {
        const std::size_t steps = a < probes.size() ? 41 : 9;
        for (std::size_t s = 0; s < steps; ++s) {
            const double r = -1.0 + 2.0 * static_cast<double>(s) / static_cast<double>(steps - 1);
            std::vector<double> x(d);
            for (std::size_t i = 0; i < d; ++i) x[i] = std::clamp(r * dirs[a][i], -1.0, 1.0);
            suite.push_back(EmpiricalMeasure::dirac(x));
        }
        for (std::size_t n : {16, 33}) {
            std::vector<double> atoms;
            for (std::size_t s = 0; s < n; ++s) {
                const double r = -1.0 + 2.0 * static_cast<double>(s) / static_cast<double>(n - 1);
                for (std::size_t i = 0; i < d; ++i) atoms.push_back(r * dirs[a][i]);
            }
            suite.emplace_back(d, std::move(atoms));
        }
    }

    // lattice grids restricted to the ball, full and shrunk
    const std::size_t m = d == 1 ? 41 : d == 2 ? 11 : d == 3 ? 7 : d <= 5 ? 4 : 2;
    for (double scale : {1.0, 0.5}) {
        std::vector<double> atoms;
        std::vector<std::size_t> idx(d, 0);
        while (true) {
            std::vector<double> x(d);
            for (std::size_t i = 0; i < d; ++i)
                x[i] = scale * (-1.0 + 2.0 * static_cast<double>(idx[i]) / static_cast<double>(m - 1));
            if (norm2(x) <= 1.0) atoms.insert(atoms.end(), x.begin(), x.end());
            std::size_t i = 0;
            while (i < d && ++idx[i] == m) idx[i++] = 0;
            if (i == d) break;
        }
        if (!atoms.empty()) suite.emplace_back(d, std::move(atoms));
    }

    // random families
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto random_point = [&](double radius) {
        auto mu = sample_measure(DistributionSpec::uniform_ball(d), 1, rng());
        std::vector<double> x(mu.atom(0).begin(), mu.atom(0).end());
        for (auto& v : x) v *= radius;
        return x;
    };
    const DistributionSpec unit_sphere = DistributionSpec::sphere_mixture(d, {{origin, 1.0, 1.0}});
    for (std::size_t i = 0; suite.size() < size; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(unit(rng) * 60.0);
        switch (i % 6) {
            case 0: suite.push_back(EmpiricalMeasure::dirac(random_point(1.0))); break;
            case 1: suite.push_back(sample_measure(unit_sphere, 1, rng())); break;
            case 2: {
                auto spec = DistributionSpec::uniform_ball(d);
                spec.center = random_point(0.8);
                spec.scale = 0.05 + 0.6 * unit(rng);
                suite.push_back(sample_measure(spec, n, rng()));
                break;
            }
            case 3:
                suite.push_back(sample_measure(DistributionSpec::truncated_gaussian(random_point(0.9), 0.05 + 0.5 * unit(rng)),
                                               n, rng()));
                break;
            case 4: {
                std::vector<SphereComponent> comps{{random_point(0.5), 0.1 + 0.5 * unit(rng), 1.0},
                                                   {random_point(0.5), 0.1 + 0.5 * unit(rng), 0.2 + unit(rng)}};
                suite.push_back(sample_measure(DistributionSpec::sphere_mixture(d, comps), n, rng()));
                break;
            }
            default: {
                auto a = sample_measure(unit_sphere, 1, rng());
                auto b = random_point(1.0);
                std::vector<double> atoms(a.data().begin(), a.data().end());
                atoms.insert(atoms.end(), b.begin(), b.end());
                suite.emplace_back(d, std::move(atoms));
                break;
            }
        }
    }
    return suite;
}

std::vector<EmpiricalMeasure> suite_for(const TargetFunctional& target, std::uint64_t seed, std::size_t size) {
    std::vector<std::vector<double>> probes;
    if ((target.kind == TargetKind::Ridge || target.kind == TargetKind::Laplace) && norm2(target.xi) > 0.0)
        probes.push_back(target.xi);
    return construction_suite(target.dim(), seed, size, probes);
}

double max_error(const DistributionNet& net, const TargetFunctional& target,
                 const std::vector<EmpiricalMeasure>& suite) {
    const auto count = static_cast<std::ptrdiff_t>(suite.size());
    std::vector<double> err(suite.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const double e = std::abs(net.forward(suite[i]) - target(suite[i]));
        err[i] = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
    }
    double worst = 0.0;
    for (double e : err) worst = std::max(worst, e);
    return worst;
}

void evaluate(ConstructionReport& r, const TargetFunctional& target, const std::vector<EmpiricalMeasure>& suite) {
    r.measured_error = max_error(r.net, target, suite);
    r.suite_size = suite.size();
}

ConstructionReport construct(const TargetFunctional& target, std::size_t N, std::uint64_t seed,
                             std::size_t suite_size) {
    auto r = build(target, N, seed);
    evaluate(r, target, suite_for(target, derive_seed(seed, 77), suite_size));
    return r;
}

void write_report_header(std::ostream& os) { os << "target-id,N,claimed_bound,measured_error,param_count,R,pass\n"; }

void write_report_row(std::ostream& os, const ConstructionReport& r) {
    os << r.target_id << ',' << r.N << ',' << format_double(r.claimed_bound) << ','
       << format_double(r.measured_error) << ',' << r.param_count << ','
       << (r.is_three_layer() ? format_double(r.R) : std::string("nan")) << ',' << (r.pass() ? "true" : "false")
       << '\n';
}

}  // namespace drnet
