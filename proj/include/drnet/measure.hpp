#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace drnet {

inline constexpr std::size_t kMaxDimension = 16;
inline constexpr double kBallSlack = 1e-12;

/// Equal-weight atom list in the closed unit ball of R^d.
///
/// Atoms are stored row-major. Every downstream quantity (integrals,
/// Wasserstein distances, network outputs) is invariant under atom
/// permutation.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(std::size_t dim, std::vector<double> atoms_row_major);
    static EmpiricalMeasure from_rows(const std::vector<std::vector<double>>& rows);
    static EmpiricalMeasure dirac(std::span<const double> point);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return data_.size() / dim_; }
    std::span<const double> atom(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<const double> data() const { return data_; }

    /// Integral of a scalar function against the measure (compensated average).
    double integrate(const std::function<double(std::span<const double>)>& fn) const;
    std::vector<double> mean() const;

    /// Each atom repeated `k` times; same measure, larger support list.
    EmpiricalMeasure duplicated(std::size_t k) const;
    EmpiricalMeasure permuted(std::span<const std::size_t> order) const;

private:
    std::size_t dim_;
    std::vector<double> data_;
};

enum class Family { UniformBall, TruncatedGaussian, SphereMixture, Dirac };

struct SphereComponent {
    std::vector<double> center;
    double radius = 0.0;
    double weight = 1.0;
};

/// Parametric family used to synthesize input measures.
///
/// - UniformBall: uniform on the ball B(center, scale), radially projected into the unit ball.
/// - TruncatedGaussian: N(center, scale^2 I) conditioned on the unit ball (rejection).
/// - SphereMixture: mixture of uniform laws on spheres |x - c_k| = r_k, radially projected.
/// - Dirac: point mass at `center`.
struct DistributionSpec {
    Family family = Family::UniformBall;
    std::size_t dim = 1;
    std::vector<double> center;
    double scale = 1.0;
    std::vector<SphereComponent> components;

    void validate() const;

    static DistributionSpec uniform_ball(std::size_t dim);
    static DistributionSpec truncated_gaussian(std::vector<double> mean, double scale);
    static DistributionSpec dirac_at(std::vector<double> point);
    static DistributionSpec sphere_mixture(std::size_t dim, std::vector<SphereComponent> comps);
};

const char* family_name(Family f);
Family family_from_name(const std::string& name);

/// n i.i.d. atoms from `spec`; deterministic in `seed`.
EmpiricalMeasure sample_measure(const DistributionSpec& spec, std::size_t n, std::uint64_t seed);

/// CSV layout: "# n=<count> d=<dim>", header "x0,...,x{d-1}", one atom per row.
void write_measure_csv(std::ostream& os, const EmpiricalMeasure& mu);
EmpiricalMeasure read_measure_csv(std::istream& is);
void save_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& mu);
EmpiricalMeasure load_measure_csv(const std::filesystem::path& path);

}  // namespace drnet
