#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drnet/measure.hpp"
#include "drnet/ridgedecomp.hpp"

namespace drnet {

/// Univariate function with closed-form constants on symmetric intervals.
struct ScalarFunction {
    std::string name;
    double beta = 1.0;  // Hoelder exponent used for the seminorm
    std::function<double(double)> value;
    std::function<double(double)> seminorm_on;  // B -> |.|_{C^{0,beta}[-B,B]}
    std::function<double(double)> sup_on;       // B -> |.|_{C[-B,B]}

    double operator()(double x) const { return value(x); }

    static ScalarFunction constant(double v);
};

/// identity, sin, cos, tanh, abs, exp_neg, sqrt_abs, square, relu.
ScalarFunction scalar_function(const std::string& name);
std::vector<std::string> scalar_function_names();

enum class TargetKind { Ridge, Laplace, PolyComposite, Radial };

const char* kind_name(TargetKind k);
TargetKind kind_from_name(const std::string& name);

/// mu -> f( integral of G dmu ) with G(x) = g(xi . x) or g(Q(x)).
struct TargetFunctional {
    std::string id;
    TargetKind kind = TargetKind::Ridge;
    ScalarFunction f;
    ScalarFunction g;
    std::vector<double> xi;        // ridge, laplace
    PolynomialSpec Q;              // poly-composite, radial
    std::optional<double> q_sup;   // known sup |Q| on the unit ball; otherwise the coefficient sum is used

    std::size_t dim() const;
    double beta() const { return f.beta; }
    double inner_argument(std::span<const double> x) const;  // xi . x or Q(x)
    double G(std::span<const double> x) const { return g(inner_argument(x)); }
    double inner(const EmpiricalMeasure& mu) const;  // L_G(mu)
    double operator()(const EmpiricalMeasure& mu) const { return f(inner(mu)); }

    /// Throws ParameterError for inconsistent fields.
    void validate() const;

    static TargetFunctional ridge(std::string id, std::vector<double> xi, ScalarFunction g, ScalarFunction f);
    static TargetFunctional laplace(std::string id, std::vector<double> xi);
    static TargetFunctional poly(std::string id, PolynomialSpec Q, ScalarFunction g, ScalarFunction f);
    static TargetFunctional radial(std::string id, std::size_t dim, ScalarFunction g, ScalarFunction f);
};

/// Targets used by the acceptance checks and the CLI.
std::vector<TargetFunctional> shipped_ridge_targets();
std::vector<TargetFunctional> shipped_composite_targets();
std::vector<TargetFunctional> shipped_laplace_targets();
/// Any shipped target by id; throws ConfigError if unknown.
TargetFunctional shipped_target(const std::string& id);
std::vector<std::string> shipped_target_ids();

}  // namespace drnet
