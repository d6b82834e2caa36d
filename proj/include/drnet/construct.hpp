#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drnet/dfnn.hpp"
#include "drnet/measure.hpp"
#include "drnet/ridgedecomp.hpp"
#include "drnet/targets.hpp"

namespace drnet {

/// Constants entering the weights and the error bound of a construction.
struct TargetConstants {
    double beta = 1.0;
    double B_inner = 0.0;  // B_xi (ridge) or B_Q (composite)
    double B_hat_Q = 0.0;  // sup |Q| bound, composite only
    double gamma_l1 = 0.0;
    double g_lip = 0.0;    // |g|_{C^{0,1}[-B_inner, B_inner]}
    double B_g = 0.0;      // |g|_{C[-B_inner, B_inner]}
    double B_G = 0.0;
    double f_holder = 0.0; // |f|_{C^{0,beta}[-B_G, B_G]}
    double f_sup = 0.0;    // |f|_{C[-B_G, B_G]}
};

/// Named block of free parameters; the built net is a fixed tiling of these values.
struct ParameterGroup {
    std::string name;
    std::size_t rows = 1;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
    std::size_t size() const { return values.size(); }
};

struct ConstructionReport {
    std::string target_id;
    TargetKind kind = TargetKind::Ridge;
    std::size_t N = 1;
    std::size_t dim = 0;
    unsigned degree = 1;
    DistributionNet net;
    TargetConstants constants;
    double claimed_bound = 0.0;
    double c_limit = 0.0;       // 4 |f|_inf N / B_G
    double inner_bound = 0.0;   // 2 q |gamma|_1 / N, composite only
    std::vector<ParameterGroup> generators;
    std::size_t param_count = 0;  // sum of generator sizes
    std::optional<RidgeDecomposition> decomposition;

    double measured_error = -1.0;  // negative until evaluate() runs
    std::size_t suite_size = 0;
    double R = 0.0;                // parameter-bound constant, (2,3) nets only
    bool certified = false;
    std::string violation;

    bool is_three_layer() const { return kind == TargetKind::PolyComposite || kind == TargetKind::Radial; }
    /// measured error within the claimed bound (+1e-9) and, for (2,3) nets, certified.
    bool pass() const;
};

std::size_t ridge_param_count(std::size_t N, std::size_t d);
std::size_t poly_param_count(std::size_t N, std::size_t d, unsigned q, std::uint64_t nq);
std::size_t radial_param_count(std::size_t N, std::size_t d);

/// Type (1,2), width 2N+3. Accepts ridge and laplace targets.
ConstructionReport build_ridge(const TargetFunctional& target, std::size_t N);
/// Laplace functional mu -> int exp(-xi . x) dmu; B_xi = max(|xi|_2, 1).
ConstructionReport build_laplace(std::span<const double> xi, std::size_t N);
/// Type (2,3), widths (n_q(2N+3), 2N+3, 2N+3), using decompose(Q, seed).
ConstructionReport build_poly(const TargetFunctional& target, std::size_t N, std::uint64_t seed);
/// Type (2,3) with the standard-basis decomposition of |x|^2, d_1 = d(2N+3).
ConstructionReport build_radial(const TargetFunctional& target, std::size_t N);
/// Dispatch on target.kind.
ConstructionReport build(const TargetFunctional& target, std::size_t N, std::uint64_t seed);

/// max{2 sqrt d, 20 |gamma|_1, 3 B_Q, 20 B_G / B_Q, 2 B_G, 4 |f|_inf / B_G}
double parameter_bound_R(const ConstructionReport& report);

struct Certification {
    double R = 0.0;
    bool pass = false;
    std::string violation;
    double tightness = 0.0;  // max over constraints of norm / limit; pass iff <= 1
};

/// Membership of the (2,3) net in H_{R,N}; throws PreconditionError for ridge nets.
Certification certify_bounds(const ConstructionReport& report, double R);
Certification certify_bounds(const ConstructionReport& report);

/// Sum of generator sizes if the net is exactly the documented tiling of its generators, else nullopt.
std::optional<std::size_t> structural_parameter_count(const ConstructionReport& report);

/// Q-tilde(x) realized by the first two layers of a composite construction.
double inner_polynomial(const ConstructionReport& report, std::span<const double> x);
/// sup |Q-tilde - Q| over ball samples, sphere samples and the axis endpoints.
double inner_polynomial_error(const ConstructionReport& report, const PolynomialSpec& Q, std::size_t points,
                              std::uint64_t seed);

/// Diverse measures in the unit ball: Diracs (axis, probe sweeps, random), uniform grids, random families.
std::vector<EmpiricalMeasure> construction_suite(std::size_t d, std::uint64_t seed, std::size_t size = 240,
                                                 const std::vector<std::vector<double>>& probes = {});
/// The suite used for a target: probes along the ridge direction for ridge-type targets.
std::vector<EmpiricalMeasure> suite_for(const TargetFunctional& target, std::uint64_t seed, std::size_t size = 240);

/// max over the suite of |net(mu) - target(mu)|.
double max_error(const DistributionNet& net, const TargetFunctional& target,
                 const std::vector<EmpiricalMeasure>& suite);
void evaluate(ConstructionReport& report, const TargetFunctional& target, const std::vector<EmpiricalMeasure>& suite);

/// Build, certify (composite) and evaluate on suite_for(target, seed).
ConstructionReport construct(const TargetFunctional& target, std::size_t N, std::uint64_t seed,
                             std::size_t suite_size = 240);

/// CSV row: target-id,N,claimed_bound,measured_error,param_count,R,pass
void write_report_header(std::ostream& os);
void write_report_row(std::ostream& os, const ConstructionReport& report);

}  // namespace drnet
