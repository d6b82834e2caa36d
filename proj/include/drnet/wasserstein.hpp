#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "drnet/measure.hpp"

namespace drnet {

inline constexpr std::size_t kMaxSupport = 512;
/// Unequal atom counts are expanded to a common size when lcm(n, m) stays at or below this.
inline constexpr std::size_t kMaxExpandedSize = 512;

/// Optimal coupling between two uniform empirical measures.
struct TransportPlan {
    int order = 1;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> coupling;  // rows x cols, row-major; row sums 1/rows, column sums 1/cols
    double transport_cost = 0.0;   // sum coupling_ij * |x_i - y_j|^p  (= W_p^p)

    double distance() const;
    double at(std::size_t i, std::size_t j) const { return coupling[i * cols + j]; }
};

/// Minimum-cost perfect matching on a dense square cost matrix (row-major).
/// Returns col_of_row. Shortest augmenting path with potentials, O(n^3);
/// ties resolved toward the lowest index.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

/// Balanced transportation problem with integer supplies/demands, solved by
/// the network simplex method on the transportation graph with Bland's rule.
/// Returns the integer flow matrix (rows x cols, row-major).
std::vector<std::int64_t> solve_transportation(std::span<const double> cost,
                                               std::span<const std::int64_t> supply,
                                               std::span<const std::int64_t> demand);

TransportPlan optimal_plan(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p);

/// W_p between two uniform empirical measures, p in {1, 2}.
double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p);

/// A test function with a certified Lipschitz constant on the unit ball.
struct Witness {
    std::function<double(std::span<const double>)> fn;
    double lipschitz = 1.0;
    std::string name;
};

/// max over witnesses of |int psi dmu - int psi dnu|; a lower bound on W_1
/// by Kantorovich-Rubinstein duality.
double kr_lower_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      std::span<const Witness> witnesses);

}  // namespace drnet
