#include "drnet/spline.hpp"

#include <cmath>

#include "drnet/error.hpp"
#include "drnet/numeric.hpp"

namespace drnet {

Mesh::Mesh(std::size_t resolution, double half_width) : N(resolution), B(half_width) {
    if (N < 1) throw ParameterError("mesh: N must be >= 1");
    if (!(B > 0.0) || !std::isfinite(B)) throw ParameterError("mesh: B must be positive and finite");
}

double Mesh::knot(std::size_t i) const {
    // exact for the inner knots: (i-1)/N - 1 with integer numerator
    return (static_cast<double>(i) - 1.0) / static_cast<double>(N) - 1.0;
}

std::vector<double> Mesh::knots() const {
    std::vector<double> t(size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = knot(i);
    return t;
}

std::vector<double> Mesh::scaled_knots() const {
    std::vector<double> t(size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scaled_knot(i);
    return t;
}

std::vector<double> diff_operator(std::span<const double> z) {
    const std::size_t len = z.size();
    if (len < 3 || len % 2 == 0) throw ShapeError("diff_operator: input length must be odd and >= 3");
    std::vector<double> out(len + 2);
    out[0] = z[0];
    out[1] = z[1] - 2.0 * z[0];
    for (std::size_t i = 2; i < len; ++i) out[i] = z[i - 2] - 2.0 * z[i - 1] + z[i];
    out[len] = z[len - 2] - 2.0 * z[len - 1];
    out[len + 1] = z[len - 1];
    return out;
}

std::vector<double> inner_samples(const std::function<double(double)>& g, const Mesh& mesh) {
    std::vector<double> z(2 * mesh.N + 1);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = g(mesh.scaled_knot(k + 1));
    return z;
}

QuasiInterpolant::QuasiInterpolant(Mesh mesh, std::vector<double> coefficients)
    : mesh_(mesh), coef_(std::move(coefficients)) {
    if (coef_.size() != mesh_.size()) throw ShapeError("quasi-interpolant: need 2N+3 coefficients");
}

QuasiInterpolant QuasiInterpolant::of(const std::function<double(double)>& g, const Mesh& mesh) {
    return QuasiInterpolant(mesh, diff_operator(inner_samples(g, mesh)));
}

double QuasiInterpolant::operator()(double x) const {
    const double scale = static_cast<double>(mesh_.N) / mesh_.B;
    double s = 0.0;
    for (std::size_t i = 0; i < coef_.size(); ++i) s += coef_[i] * relu(x - mesh_.scaled_knot(i));
    return scale * s;
}

}  // namespace drnet
