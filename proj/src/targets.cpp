#include "drnet/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "drnet/error.hpp"
#include "drnet/numeric.hpp"

namespace drnet {

ScalarFunction ScalarFunction::constant(double v) {
    return {"constant", 1.0, [v](double) { return v; }, [](double) { return 0.0; },
            [v](double) { return std::abs(v); }};
}

ScalarFunction scalar_function(const std::string& name) {
    constexpr double half_pi = std::numbers::pi / 2;
    if (name == "identity")
        return {name, 1.0, [](double x) { return x; }, [](double) { return 1.0; }, [](double B) { return B; }};
    if (name == "sin")
        return {name, 1.0, [](double x) { return std::sin(x); }, [](double) { return 1.0; },
                [=](double B) { return B >= half_pi ? 1.0 : std::sin(B); }};
    if (name == "cos")
        return {name, 1.0, [](double x) { return std::cos(x); },
                [=](double B) { return std::sin(std::min(B, half_pi)); }, [](double) { return 1.0; }};
    if (name == "tanh")
        return {name, 1.0, [](double x) { return std::tanh(x); }, [](double) { return 1.0; },
                [](double B) { return std::tanh(B); }};
    if (name == "abs")
        return {name, 1.0, [](double x) { return std::abs(x); }, [](double) { return 1.0; },
                [](double B) { return B; }};
    if (name == "exp_neg")
        return {name, 1.0, [](double x) { return std::exp(-x); }, [](double B) { return std::exp(B); },
                [](double B) { return std::exp(B); }};
    if (name == "sqrt_abs")
        return {name, 0.5, [](double x) { return std::sqrt(std::abs(x)); }, [](double) { return 1.0; },
                [](double B) { return std::sqrt(B); }};
    if (name == "square")
        return {name, 1.0, [](double x) { return x * x; }, [](double B) { return 2.0 * B; },
                [](double B) { return B * B; }};
    if (name == "relu")
        return {name, 1.0, [](double x) { return relu(x); }, [](double) { return 1.0; },
                [](double B) { return B; }};
    throw ConfigError("unknown scalar function '" + name + "'");
}

std::vector<std::string> scalar_function_names() {
    return {"identity", "sin", "cos", "tanh", "abs", "exp_neg", "sqrt_abs", "square", "relu"};
}

const char* kind_name(TargetKind k) {
    switch (k) {
        case TargetKind::Ridge: return "ridge";
        case TargetKind::Laplace: return "laplace";
        case TargetKind::PolyComposite: return "poly-composite";
        case TargetKind::Radial: return "radial";
    }
    return "?";
}

TargetKind kind_from_name(const std::string& name) {
    for (auto k : {TargetKind::Ridge, TargetKind::Laplace, TargetKind::PolyComposite, TargetKind::Radial})
        if (name == kind_name(k)) return k;
    throw ConfigError("unknown target kind '" + name + "'");
}

std::size_t TargetFunctional::dim() const {
    return (kind == TargetKind::Ridge || kind == TargetKind::Laplace) ? xi.size() : Q.dim();
}

double TargetFunctional::inner_argument(std::span<const double> x) const {
    if (kind == TargetKind::Ridge || kind == TargetKind::Laplace) return dot(xi, x);
    return Q(x);
}

double TargetFunctional::inner(const EmpiricalMeasure& mu) const {
    if (mu.dim() != dim()) throw ShapeError("measure dimension does not match the target");
    return mu.integrate([this](std::span<const double> x) { return G(x); });
}

void TargetFunctional::validate() const {
    if (!f.value || !g.value || !f.seminorm_on || !g.seminorm_on || !f.sup_on || !g.sup_on)
        throw ParameterError("target '" + id + "' has an incomplete scalar function");
    if (!(f.beta > 0.0 && f.beta <= 1.0)) throw ParameterError("outer exponent must lie in (0, 1]");
    if (g.beta != 1.0) throw ParameterError("inner function must be Lipschitz");
    if (dim() == 0 || dim() > kMaxDimension) throw ParameterError("target dimension must be in 1..16");
    switch (kind) {
        case TargetKind::Ridge:
            if (norm2(xi) <= 0.0) throw ParameterError("ridge feature vector must be nonzero");
            break;
        case TargetKind::Laplace:
            if (g.name != "exp_neg" || f.name != "identity")
                throw ParameterError("laplace target must use g = exp(-x) and f = identity");
            break;
        case TargetKind::PolyComposite:
        case TargetKind::Radial:
            if (Q.degree() == 0) throw ParameterError("composite target needs a nonconstant polynomial");
            if (q_sup && !(*q_sup > 0.0)) throw ParameterError("sup of Q must be positive");
            break;
    }
}

TargetFunctional TargetFunctional::ridge(std::string id, std::vector<double> xi, ScalarFunction g,
                                         ScalarFunction f) {
    TargetFunctional t;
    t.id = std::move(id);
    t.kind = TargetKind::Ridge;
    t.xi = std::move(xi);
    t.g = std::move(g);
    t.f = std::move(f);
    t.validate();
    return t;
}

TargetFunctional TargetFunctional::laplace(std::string id, std::vector<double> xi) {
    TargetFunctional t;
    t.id = std::move(id);
    t.kind = TargetKind::Laplace;
    t.xi = std::move(xi);
    t.g = scalar_function("exp_neg");
    t.f = scalar_function("identity");
    t.validate();
    return t;
}

TargetFunctional TargetFunctional::poly(std::string id, PolynomialSpec Q, ScalarFunction g, ScalarFunction f) {
    TargetFunctional t;
    t.id = std::move(id);
    t.kind = TargetKind::PolyComposite;
    t.Q = std::move(Q);
    t.g = std::move(g);
    t.f = std::move(f);
    t.validate();
    return t;
}

TargetFunctional TargetFunctional::radial(std::string id, std::size_t dim, ScalarFunction g, ScalarFunction f) {
    TargetFunctional t;
    t.id = std::move(id);
    t.kind = TargetKind::Radial;
    t.Q = PolynomialSpec::squared_norm(dim);
    t.q_sup = 1.0;
    t.g = std::move(g);
    t.f = std::move(f);
    t.validate();
    return t;
}

std::vector<TargetFunctional> shipped_ridge_targets() {
    auto S = scalar_function;
    return {
        TargetFunctional::ridge("ridge-sin", {1.2, -0.9}, S("sin"), S("identity")),
        TargetFunctional::ridge("ridge-tanh-sqrt", {0.8, -0.4, 0.2}, S("tanh"), S("sqrt_abs")),
        TargetFunctional::ridge("ridge-abs-cos", {0.9}, S("abs"), S("cos")),
        TargetFunctional::ridge("ridge-exp-tanh", {0.5, 0.5, 0.5, 0.5}, S("exp_neg"), S("tanh")),
    };
}

std::vector<TargetFunctional> shipped_laplace_targets() {
    return {
        TargetFunctional::laplace("laplace-unit", {0.6, 0.8}),
        TargetFunctional::laplace("laplace-inner", {0.3, -0.2, 0.1}),
        TargetFunctional::laplace("laplace-1d", {1.0}),
    };
}

std::vector<TargetFunctional> shipped_composite_targets() {
    auto S = scalar_function;
    return {
        TargetFunctional::radial("radial-sin", 2, S("sin"), S("identity")),
        TargetFunctional::poly("poly-saddle", PolynomialSpec(2, {{{1, 1}, 1.0}, {{1, 0}, 0.5}}), S("tanh"),
                               S("identity")),
        TargetFunctional::poly("poly-cubic", PolynomialSpec(3, {{{3, 0, 0}, 1.0}, {{0, 1, 1}, -1.0}, {{0, 0, 0}, 0.3}}),
                               S("sin"), S("sqrt_abs")),
        TargetFunctional::poly("poly-quad", PolynomialSpec(2, {{{2, 0}, 1.0}, {{0, 2}, -1.0}, {{1, 1}, 1.0}}),
                               S("cos"), S("sin")),
    };
}

std::vector<std::string> shipped_target_ids() {
    std::vector<std::string> ids;
    for (const auto& list : {shipped_ridge_targets(), shipped_laplace_targets(), shipped_composite_targets()})
        for (const auto& t : list) ids.push_back(t.id);
    return ids;
}

TargetFunctional shipped_target(const std::string& id) {
    for (const auto& list : {shipped_ridge_targets(), shipped_laplace_targets(), shipped_composite_targets()})
        for (const auto& t : list)
            if (t.id == id) return t;
    throw ConfigError("unknown target '" + id + "'");
}

}  // namespace drnet
