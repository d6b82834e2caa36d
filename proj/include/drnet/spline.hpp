#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace drnet {

/// Uniform mesh t_i = -1 + (i-2)/N, i = 1..2N+3, on [-1-1/N, 1+1/N].
///
/// Indices in this API are 0-based: knot(0) is t_1, knot(2N+2) is t_{2N+3}.
struct Mesh {
    std::size_t N = 1;
    double B = 1.0;

    Mesh(std::size_t resolution, double half_width);

    std::size_t size() const { return 2 * N + 3; }
    double knot(std::size_t i) const;
    double scaled_knot(std::size_t i) const { return B * knot(i); }
    std::vector<double> knots() const;
    std::vector<double> scaled_knots() const;
};

/// Second-difference operator from 2N+1 samples to 2N+3 coefficients.
///
/// out[0] = z[0], out[1] = z[1] - 2 z[0], interior second differences,
/// out[2N+1] = z[2N-1] - 2 z[2N], out[2N+2] = z[2N].
std::vector<double> diff_operator(std::span<const double> zeta);

/// Samples g(B t_k) for the inner knots k = 2..2N+2.
std::vector<double> inner_samples(const std::function<double(double)>& g, const Mesh& mesh);

/// ReLU spline x -> (N/B) sum_i coef_i relu(x - B t_i).
class QuasiInterpolant {
public:
    QuasiInterpolant(Mesh mesh, std::vector<double> coefficients);

    static QuasiInterpolant of(const std::function<double(double)>& g, const Mesh& mesh);

    const Mesh& mesh() const { return mesh_; }
    /// Raw second differences (before the N/B factor).
    std::span<const double> coefficients() const { return coef_; }
    double operator()(double x) const;

private:
    Mesh mesh_;
    std::vector<double> coef_;
};

}  // namespace drnet
