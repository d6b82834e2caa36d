#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace drnet {

using MultiIndex = std::vector<unsigned>;

/// Polynomial on R^d in the monomial basis.
class PolynomialSpec {
public:
    PolynomialSpec() = default;
    PolynomialSpec(std::size_t dim, std::map<MultiIndex, double> coefficients);

    /// sum_k x_k^2
    static PolynomialSpec squared_norm(std::size_t dim);
    /// xi . x
    static PolynomialSpec linear(std::span<const double> xi);

    std::size_t dim() const { return dim_; }
    unsigned degree() const { return degree_; }
    double constant() const;
    const std::map<MultiIndex, double>& coefficients() const { return coef_; }

    double operator()(std::span<const double> x) const;
    std::vector<double> gradient(std::span<const double> x) const;
    /// Coefficients of the degree-l homogeneous part, ordered as monomials(dim, l).
    std::vector<double> homogeneous_part(unsigned l) const;

    /// sum |coef|: an upper bound on sup |Q| over the unit ball.
    double abs_coefficient_sum() const;
    /// sum |coef| * |alpha|: an upper bound on sup |grad Q|_2 over the unit ball.
    double gradient_bound() const;

private:
    std::size_t dim_ = 0;
    unsigned degree_ = 0;
    std::map<MultiIndex, double> coef_;
};

/// Exponent vectors of total degree l in d variables, in a fixed order.
std::vector<MultiIndex> monomials(std::size_t d, unsigned l);

/// binom(d-1+q, q); throws CapacityError on 64-bit overflow.
std::uint64_t n_q(std::size_t d, unsigned q);

/// Q(x) = q0 + sum_k sum_l gamma(k, l) (xi_k . x)^l.
struct RidgeDecomposition {
    std::size_t dim = 0;
    unsigned degree = 0;
    std::vector<std::vector<double>> directions;  // unit vectors
    std::vector<double> gamma;                    // directions.size() x degree, row-major, l = 1..q
    double q0 = 0.0;
    double residual = 0.0;  // max relative reconstruction error on the verification points

    std::size_t count() const { return directions.size(); }
    double gamma_at(std::size_t k, unsigned l) const { return gamma[k * degree + (l - 1)]; }
    double gamma_l1() const;
    double operator()(std::span<const double> x) const;
};

/// Random sphere directions plus per-degree minimum-norm least squares.
RidgeDecomposition decompose(const PolynomialSpec& Q, std::uint64_t seed);

/// The exact decomposition of |x|^2 over the standard basis: d directions, gamma(k,2) = 1.
RidgeDecomposition decompose_squared_norm(std::size_t dim);

/// max |Q(x) - D(x)| / (1 + |Q(x)|) over `points` uniform samples in the ball.
double reconstruction_residual(const PolynomialSpec& Q, const RidgeDecomposition& D, std::size_t points,
                               std::uint64_t seed);

/// Lower estimate of sup |Q| on the unit ball: Halton points in the ball, points on
/// the sphere, then projected gradient refinement of the best candidates.
double poly_sup_norm(const PolynomialSpec& Q, std::size_t grid_size);

/// Same search applied to |grad Q|_2; a lower estimate.
double poly_gradient_sup_estimate(const PolynomialSpec& Q, std::size_t grid_size);

/// gamma table: "k,l,gamma" rows (1-based k and l); directions table: "k,x0..x{d-1}".
void write_gamma_csv(std::ostream& os, const RidgeDecomposition& D);
void write_directions_csv(std::ostream& os, const RidgeDecomposition& D);
RidgeDecomposition read_decomposition_csv(std::istream& gamma, std::istream& directions);
void save_decomposition(const std::filesystem::path& prefix, const RidgeDecomposition& D);
RidgeDecomposition load_decomposition(const std::filesystem::path& prefix);

}  // namespace drnet
