#include "drnet/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "drnet/error.hpp"
#include "drnet/numeric.hpp"

namespace drnet {

namespace {

double ground_cost(std::span<const double> x, std::span<const double> y, int p) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = x[k] - y[k];
        s += t * t;
    }
    return p == 2 ? s : std::sqrt(s);
}

/// Atom indices sorted lexicographically by coordinates.
std::vector<std::size_t> canonical_order(const EmpiricalMeasure& mu) {
    std::vector<std::size_t> idx(mu.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        auto xa = mu.atom(a), xb = mu.atom(b);
        return std::lexicographical_compare(xa.begin(), xa.end(), xb.begin(), xb.end());
    });
    return idx;
}

bool sorted_less(const EmpiricalMeasure& a, std::span<const std::size_t> ia, const EmpiricalMeasure& b,
                 std::span<const std::size_t> ib) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t r = 0; r < ia.size(); ++r) {
        auto xa = a.atom(ia[r]), xb = b.atom(ib[r]);
        if (std::lexicographical_compare(xa.begin(), xa.end(), xb.begin(), xb.end())) return true;
        if (std::lexicographical_compare(xb.begin(), xb.end(), xa.begin(), xa.end())) return false;
    }
    return false;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) { return b == 0 ? a : gcd64(b, a % b); }

void check_order(int p) {
    if (p != 1 && p != 2) throw ParameterError("wasserstein: only p = 1 and p = 2 are supported");
}

/// Monotone (north-west corner) coupling of sorted 1-D atoms; optimal for convex costs.
std::vector<std::int64_t> monotone_flow(std::size_t n, std::size_t m) {
    std::vector<std::int64_t> flow(n * m, 0);
    std::int64_t supply = static_cast<std::int64_t>(m), demand = static_cast<std::int64_t>(n);
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        const std::int64_t f = std::min(supply, demand);
        flow[i * m + j] += f;
        supply -= f;
        demand -= f;
        if (supply == 0) {
            ++i;
            supply = static_cast<std::int64_t>(m);
        }
        if (demand == 0) {
            ++j;
            demand = static_cast<std::int64_t>(n);
        }
    }
    return flow;
}

}  // namespace

double TransportPlan::distance() const {
    return order == 2 ? std::sqrt(transport_cost) : transport_cost;
}

std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
    if (cost.size() != n * n) throw ShapeError("assignment: cost matrix must be n x n");
    if (n == 0) return {};
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; column 0 is the virtual source.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
    std::vector<double> minv(n + 1);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = row_of_col[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> col_of_row(n);
    for (std::size_t j = 1; j <= n; ++j) col_of_row[row_of_col[j] - 1] = j - 1;
    return col_of_row;
}

std::vector<std::int64_t> solve_transportation(std::span<const double> cost,
                                               std::span<const std::int64_t> supply,
                                               std::span<const std::int64_t> demand) {
    const std::size_t n = supply.size(), m = demand.size();
    if (n == 0 || m == 0 || cost.size() != n * m) throw ShapeError("transportation: bad dimensions");
    if (std::accumulate(supply.begin(), supply.end(), std::int64_t{0}) !=
        std::accumulate(demand.begin(), demand.end(), std::int64_t{0}))
        throw ParameterError("transportation: unbalanced supply and demand");

    std::vector<std::int64_t> flow(n * m, 0);
    std::vector<char> basic(n * m, 0);
    std::vector<std::size_t> basis;  // cell indices, n + m - 1 of them

    // North-west corner start; a simultaneous exhaustion keeps a degenerate zero cell.
    {
        std::vector<std::int64_t> s(supply.begin(), supply.end()), d(demand.begin(), demand.end());
        std::size_t i = 0, j = 0;
        while (true) {
            const std::int64_t f = std::min(s[i], d[j]);
            flow[i * m + j] = f;
            basic[i * m + j] = 1;
            basis.push_back(i * m + j);
            s[i] -= f;
            d[j] -= f;
            if (i == n - 1 && j == m - 1) break;
            if (s[i] == 0 && i < n - 1)
                ++i;
            else
                ++j;
        }
    }

    double cmax = 0.0;
    for (double c : cost) cmax = std::max(cmax, std::abs(c));
    const double tol = 1e-11 * (1.0 + cmax);

    const std::size_t nodes = n + m;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(nodes);
    std::vector<double> pot(nodes);
    std::vector<char> seen(nodes);
    std::vector<std::size_t> parent_node(nodes), parent_cell(nodes);

    const std::size_t max_iter = 50 * n * m + 1000;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (auto& a : adj) a.clear();
        for (std::size_t cell : basis) {
            const std::size_t i = cell / m, j = cell % m;
            adj[i].push_back({n + j, cell});
            adj[n + j].push_back({i, cell});
        }
        // Potentials: pot[row] + pot[col] = cost on basic cells.
        std::fill(seen.begin(), seen.end(), 0);
        std::deque<std::size_t> queue{0};
        pot[0] = 0.0;
        seen[0] = 1;
        while (!queue.empty()) {
            const std::size_t a = queue.front();
            queue.pop_front();
            for (auto [b, cell] : adj[a]) {
                if (seen[b]) continue;
                seen[b] = 1;
                pot[b] = cost[cell] - pot[a];
                queue.push_back(b);
            }
        }

        std::size_t entering = n * m;
        for (std::size_t cell = 0; cell < n * m && entering == n * m; ++cell) {
            if (basic[cell]) continue;
            const double reduced = cost[cell] - pot[cell / m] - pot[n + cell % m];
            if (reduced < -tol) entering = cell;
        }
        if (entering == n * m) return flow;

        // Tree path from the entering row to the entering column.
        const std::size_t ei = entering / m, ej = entering % m;
        std::fill(seen.begin(), seen.end(), 0);
        queue.assign(1, ei);
        seen[ei] = 1;
        while (!queue.empty() && !seen[n + ej]) {
            const std::size_t a = queue.front();
            queue.pop_front();
            for (auto [b, cell] : adj[a]) {
                if (seen[b]) continue;
                seen[b] = 1;
                parent_node[b] = a;
                parent_cell[b] = cell;
                queue.push_back(b);
            }
        }
        std::vector<std::size_t> path;  // from column ej back to row ei; signs -, +, -, ...
        for (std::size_t node = n + ej; node != ei; node = parent_node[node]) path.push_back(parent_cell[node]);

        std::int64_t theta = std::numeric_limits<std::int64_t>::max();
        std::size_t leaving = n * m;
        for (std::size_t k = 0; k < path.size(); k += 2) {
            const std::size_t cell = path[k];
            if (flow[cell] < theta || (flow[cell] == theta && cell < leaving)) {
                theta = flow[cell];
                leaving = cell;
            }
        }
        flow[entering] += theta;
        for (std::size_t k = 0; k < path.size(); ++k) flow[path[k]] += (k % 2 == 0) ? -theta : theta;
        basic[leaving] = 0;
        basic[entering] = 1;
        *std::find(basis.begin(), basis.end(), leaving) = entering;
    }
    throw CapacityError("transportation simplex exceeded its iteration cap");
}

TransportPlan optimal_plan(const EmpiricalMeasure& mu_in, const EmpiricalMeasure& nu_in, int p) {
    check_order(p);
    if (mu_in.dim() != nu_in.dim()) throw ShapeError("wasserstein: dimension mismatch");
    const std::size_t d = mu_in.dim();
    if (d > 1 && (mu_in.size() > kMaxSupport || nu_in.size() > kMaxSupport))
        throw CapacityError("wasserstein: support size above 512");

    // Canonical atom order and canonical argument order make the result exactly
    // symmetric and exactly permutation invariant.
    auto order_mu = canonical_order(mu_in);
    auto order_nu = canonical_order(nu_in);
    const bool swapped = sorted_less(nu_in, order_nu, mu_in, order_mu);
    const EmpiricalMeasure& a = swapped ? nu_in : mu_in;
    const EmpiricalMeasure& b = swapped ? mu_in : nu_in;
    const auto& ia = swapped ? order_nu : order_mu;
    const auto& ib = swapped ? order_mu : order_nu;
    const std::size_t n = a.size(), m = b.size();

    std::vector<double> cost(n * m);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) cost[r * m + c] = ground_cost(a.atom(ia[r]), b.atom(ib[c]), p);

    // Canonical-order coupling expressed as integer masses over n*m.
    std::vector<std::int64_t> flow;
    if (d == 1) {
        flow = monotone_flow(n, m);
    } else if (n == m) {
        flow.assign(n * m, 0);
        auto col = solve_assignment(cost, n);
        for (std::size_t r = 0; r < n; ++r) flow[r * m + col[r]] = static_cast<std::int64_t>(m);
    } else {
        const std::int64_t g = gcd64(static_cast<std::int64_t>(n), static_cast<std::int64_t>(m));
        const std::size_t lcm = n / static_cast<std::size_t>(g) * m;
        if (lcm <= kMaxExpandedSize) {
            const std::size_t rep_a = lcm / n, rep_b = lcm / m;
            std::vector<double> big(lcm * lcm);
            for (std::size_t r = 0; r < lcm; ++r)
                for (std::size_t c = 0; c < lcm; ++c) big[r * lcm + c] = cost[(r / rep_a) * m + c / rep_b];
            auto col = solve_assignment(big, lcm);
            flow.assign(n * m, 0);
            // each expanded unit carries mass 1/lcm = (n*m/lcm) / (n*m)
            const std::int64_t unit = static_cast<std::int64_t>(n * m / lcm);
            for (std::size_t r = 0; r < lcm; ++r) flow[(r / rep_a) * m + col[r] / rep_b] += unit;
        } else {
            std::vector<std::int64_t> supply(n, static_cast<std::int64_t>(m)), demand(m, static_cast<std::int64_t>(n));
            flow = solve_transportation(cost, supply, demand);
        }
    }

    TransportPlan plan;
    plan.order = p;
    plan.rows = mu_in.size();
    plan.cols = nu_in.size();
    plan.coupling.assign(plan.rows * plan.cols, 0.0);
    const double total = static_cast<double>(n) * static_cast<double>(m);
    CompensatedSum acc;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            const std::int64_t f = flow[r * m + c];
            if (f == 0) continue;
            const double w = static_cast<double>(f) / total;
            acc.add(w * cost[r * m + c]);
            const std::size_t oi = swapped ? ib[c] : ia[r];
            const std::size_t oj = swapped ? ia[r] : ib[c];
            plan.coupling[oi * plan.cols + oj] += w;
        }
    }
    plan.transport_cost = std::max(0.0, acc.value());
    return plan;
}

double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p) {
    return optimal_plan(mu, nu, p).distance();
}

double kr_lower_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      std::span<const Witness> witnesses) {
    if (mu.dim() != nu.dim()) throw ShapeError("kr_lower_bound: dimension mismatch");
    double best = 0.0;
    for (const auto& w : witnesses) {
        if (!w.fn) throw ParameterError("witness '" + w.name + "' has no function");
        if (!(w.lipschitz >= 0.0 && w.lipschitz <= 1.0 + 1e-12))
            throw ParameterError("witness '" + w.name + "' is not certified 1-Lipschitz");
        const double gap = std::abs(mu.integrate(w.fn) - nu.integrate(w.fn));
        best = std::max(best, gap);
    }
    return best;
}

}  // namespace drnet
