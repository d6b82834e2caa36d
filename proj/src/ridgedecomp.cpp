#include "drnet/ridgedecomp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "drnet/error.hpp"
#include "drnet/measure.hpp"
#include "drnet/numeric.hpp"

namespace drnet {

namespace {

constexpr std::size_t kMaxDirections = 2048;
constexpr int kMaxAttempts = 50;
constexpr double kRankTolerance = 1e-10;
constexpr double kResidualTolerance = 1e-8;

void enumerate(std::size_t d, unsigned remaining, std::size_t pos, MultiIndex& cur, std::vector<MultiIndex>& out) {
    if (pos + 1 == d) {
        cur[pos] = remaining;
        out.push_back(cur);
        return;
    }
    for (unsigned a = remaining + 1; a-- > 0;) {
        cur[pos] = a;
        enumerate(d, remaining - a, pos + 1, cur, out);
    }
}

double monomial_value(const MultiIndex& alpha, std::span<const double> x) {
    double v = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (unsigned e = 0; e < alpha[i]; ++e) v *= x[i];
    return v;
}

double int_pow(double base, unsigned e) {
    double v = 1.0;
    for (unsigned i = 0; i < e; ++i) v *= base;
    return v;
}

/// l! / prod alpha_i!
double multinomial(const MultiIndex& alpha) {
    double v = 1.0;
    unsigned total = 0;
    for (unsigned a : alpha)
        for (unsigned i = 1; i <= a; ++i) {
            ++total;
            v = v * total / i;
        }
    return v;
}

std::vector<double> random_unit(Rng& rng, std::size_t d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(d);
    double r = 0.0;
    do {
        for (double& x : v) x = normal(rng);
        r = norm2(v);
    } while (r < 1e-8);
    for (double& x : v) x /= r;
    return v;
}

std::vector<double> uniform_ball_point(Rng& rng, std::size_t d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto v = random_unit(rng, d);
    const double r = std::pow(u(rng), 1.0 / static_cast<double>(d));
    for (double& x : v) x *= r;
    return v;
}

double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

void project_ball(std::vector<double>& x) {
    const double r = norm2(x);
    if (r > 1.0)
        for (double& v : x) v /= r;
}

/// Deterministic search for the max of `fn` over the unit ball.
double maximize_on_ball(const std::function<double(std::span<const double>)>& fn, std::size_t d,
                        std::size_t grid_size) {
    if (grid_size < 1000) throw ParameterError("grid_size must be >= 1000");
    struct Cand {
        double value;
        std::vector<double> x;
    };
    std::vector<Cand> cands;
    cands.reserve(2 * grid_size + 1);
    cands.push_back({fn(std::vector<double>(d, 0.0)), std::vector<double>(d, 0.0)});
    std::vector<double> v(d);
    for (std::size_t i = 1; i <= grid_size; ++i) {
        for (std::size_t k = 0; k < d; ++k) v[k] = 2.0 * radical_inverse(i, kPrimes[k]) - 1.0;
        const double r2 = norm2(v);
        if (r2 == 0.0) continue;
        double rinf = 0.0;
        for (double c : v) rinf = std::max(rinf, std::abs(c));
        // cube -> ball (radial rescale) and cube -> sphere
        std::vector<double> inner(d), outer(d);
        for (std::size_t k = 0; k < d; ++k) {
            inner[k] = v[k] * rinf / r2;
            outer[k] = v[k] / r2;
        }
        cands.push_back({fn(inner), inner});
        cands.push_back({fn(outer), outer});
    }
    std::partial_sort(cands.begin(), cands.begin() + std::min<std::size_t>(8, cands.size()), cands.end(),
                      [](const Cand& a, const Cand& b) { return a.value > b.value; });
    double best = cands.front().value;
    for (std::size_t c = 0; c < std::min<std::size_t>(8, cands.size()); ++c) {
        auto x = cands[c].x;
        double fx = cands[c].value;
        for (double step = 0.1; step > 1e-10; step *= 0.5) {
            bool improved = true;
            while (improved) {
                improved = false;
                for (std::size_t k = 0; k < d; ++k)
                    for (double sgn : {1.0, -1.0}) {
                        auto y = x;
                        y[k] += sgn * step;
                        project_ball(y);
                        const double fy = fn(y);
                        if (fy > fx) {
                            fx = fy;
                            x = std::move(y);
                            improved = true;
                        }
                    }
            }
        }
        best = std::max(best, fx);
    }
    return best;
}

}  // namespace

PolynomialSpec::PolynomialSpec(std::size_t dim, std::map<MultiIndex, double> coefficients)
    : dim_(dim), coef_(std::move(coefficients)) {
    if (dim_ == 0 || dim_ > kMaxDimension) throw ShapeError("polynomial dimension must be in 1..16");
    for (auto it = coef_.begin(); it != coef_.end();) {
        if (it->first.size() != dim_) throw ShapeError("multi-index has wrong length");
        if (!std::isfinite(it->second)) throw ParameterError("polynomial coefficient is not finite");
        if (it->second == 0.0) {
            it = coef_.erase(it);
            continue;
        }
        unsigned deg = 0;
        for (unsigned a : it->first) deg += a;
        degree_ = std::max(degree_, deg);
        ++it;
    }
}

PolynomialSpec PolynomialSpec::squared_norm(std::size_t dim) {
    std::map<MultiIndex, double> c;
    for (std::size_t k = 0; k < dim; ++k) {
        MultiIndex a(dim, 0);
        a[k] = 2;
        c[a] = 1.0;
    }
    return PolynomialSpec(dim, std::move(c));
}

PolynomialSpec PolynomialSpec::linear(std::span<const double> xi) {
    std::map<MultiIndex, double> c;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        MultiIndex a(xi.size(), 0);
        a[k] = 1;
        c[a] = xi[k];
    }
    return PolynomialSpec(xi.size(), std::move(c));
}

double PolynomialSpec::constant() const {
    auto it = coef_.find(MultiIndex(dim_, 0));
    return it == coef_.end() ? 0.0 : it->second;
}

double PolynomialSpec::operator()(std::span<const double> x) const {
    if (x.size() != dim_) throw ShapeError("polynomial evaluated at a point of the wrong dimension");
    CompensatedSum s;
    for (const auto& [alpha, c] : coef_) s.add(c * monomial_value(alpha, x));
    return s.value();
}

std::vector<double> PolynomialSpec::gradient(std::span<const double> x) const {
    if (x.size() != dim_) throw ShapeError("polynomial gradient at a point of the wrong dimension");
    std::vector<double> g(dim_, 0.0);
    for (const auto& [alpha, c] : coef_)
        for (std::size_t i = 0; i < dim_; ++i) {
            if (alpha[i] == 0) continue;
            MultiIndex b = alpha;
            b[i] -= 1;
            g[i] += c * alpha[i] * monomial_value(b, x);
        }
    return g;
}

std::vector<double> PolynomialSpec::homogeneous_part(unsigned l) const {
    auto basis = monomials(dim_, l);
    std::vector<double> out(basis.size(), 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        auto it = coef_.find(basis[i]);
        if (it != coef_.end()) out[i] = it->second;
    }
    return out;
}

double PolynomialSpec::abs_coefficient_sum() const {
    double s = 0.0;
    for (const auto& [alpha, c] : coef_) s += std::abs(c);
    return s;
}

double PolynomialSpec::gradient_bound() const {
    double s = 0.0;
    for (const auto& [alpha, c] : coef_) {
        unsigned deg = 0;
        for (unsigned a : alpha) deg += a;
        s += std::abs(c) * deg;
    }
    return s;
}

std::vector<MultiIndex> monomials(std::size_t d, unsigned l) {
    if (d == 0) throw ShapeError("monomials: d must be >= 1");
    std::vector<MultiIndex> out;
    MultiIndex cur(d, 0);
    enumerate(d, l, 0, cur, out);
    return out;
}

std::uint64_t n_q(std::size_t d, unsigned q) {
    if (d < 1 || q < 1) throw ParameterError("n_q needs d >= 1 and q >= 1");
    // C(n, k) with n = d-1+q, k = min(q, d-1); each partial product is itself a binomial.
    __extension__ typedef unsigned __int128 u128;
    if (d > (1ULL << 32) || q > (1U << 31)) throw CapacityError("n_q overflows 64 bits");
    const u128 n = static_cast<u128>(d) - 1 + q;
    const u128 k = std::min<u128>(q, d - 1);
    u128 r = 1;
    for (u128 i = 1; i <= k; ++i) {
        r = r * (n - k + i);  // r < 2^64 before the product, factor < 2^33
        r /= i;
        if (r > UINT64_MAX) throw CapacityError("n_q overflows 64 bits");
    }
    return static_cast<std::uint64_t>(r);
}

double RidgeDecomposition::gamma_l1() const {
    double s = 0.0;
    for (double g : gamma) s += std::abs(g);
    return s;
}

double RidgeDecomposition::operator()(std::span<const double> x) const {
    if (x.size() != dim) throw ShapeError("decomposition evaluated at a point of the wrong dimension");
    CompensatedSum s;
    s.add(q0);
    for (std::size_t k = 0; k < directions.size(); ++k) {
        const double t = dot(directions[k], x);
        double p = 1.0;
        for (unsigned l = 1; l <= degree; ++l) {
            p *= t;
            s.add(gamma_at(k, l) * p);
        }
    }
    return s.value();
}

double reconstruction_residual(const PolynomialSpec& Q, const RidgeDecomposition& D, std::size_t points,
                               std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        auto x = uniform_ball_point(rng, Q.dim());
        const double qx = Q(x);
        worst = std::max(worst, std::abs(qx - D(x)) / (1.0 + std::abs(qx)));
    }
    return worst;
}

RidgeDecomposition decompose(const PolynomialSpec& Q, std::uint64_t seed) {
    const std::size_t d = Q.dim();
    const unsigned q = Q.degree();
    if (q < 1) throw ParameterError("decompose: polynomial degree must be >= 1");
    const std::uint64_t count = n_q(d, q);
    if (count > kMaxDirections) throw CapacityError("decompose: n_q above 2048");

    std::vector<std::vector<MultiIndex>> basis(q + 1);
    for (unsigned l = 1; l <= q; ++l) basis[l] = monomials(d, l);

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        RidgeDecomposition D;
        D.dim = d;
        D.degree = q;
        D.q0 = Q.constant();
        for (std::uint64_t k = 0; k < count; ++k) D.directions.push_back(random_unit(rng, d));
        D.gamma.assign(count * q, 0.0);

        bool ok = true;
        for (unsigned l = 1; l <= q && ok; ++l) {
            const auto& mons = basis[l];
            Eigen::MatrixXd M(mons.size(), count);
            for (std::size_t a = 0; a < mons.size(); ++a) {
                const double mult = multinomial(mons[a]);
                for (std::uint64_t k = 0; k < count; ++k) {
                    double v = mult;
                    for (std::size_t i = 0; i < d; ++i) v *= int_pow(D.directions[k][i], mons[a][i]);
                    M(a, k) = v;
                }
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto& sv = svd.singularValues();
            if (sv.size() < static_cast<Eigen::Index>(mons.size()) ||
                sv(sv.size() - 1) <= kRankTolerance * sv(0)) {
                ok = false;
                break;
            }
            auto h = Q.homogeneous_part(l);
            Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
            Eigen::VectorXd sol = svd.solve(rhs);  // minimum-norm solution
            for (std::uint64_t k = 0; k < count; ++k) D.gamma[k * q + (l - 1)] = sol(static_cast<Eigen::Index>(k));
        }
        if (!ok) continue;
        D.residual = reconstruction_residual(Q, D, 512, derive_seed(seed, 1000 + attempt));
        if (D.residual <= kResidualTolerance) return D;
    }
    throw DegenerateError("decompose: directions failed the span check after 50 attempts");
}

RidgeDecomposition decompose_squared_norm(std::size_t dim) {
    if (dim == 0 || dim > kMaxDimension) throw ShapeError("dimension must be in 1..16");
    RidgeDecomposition D;
    D.dim = dim;
    D.degree = 2;
    for (std::size_t k = 0; k < dim; ++k) {
        std::vector<double> e(dim, 0.0);
        e[k] = 1.0;
        D.directions.push_back(e);
        D.gamma.push_back(0.0);
        D.gamma.push_back(1.0);
    }
    D.residual = reconstruction_residual(PolynomialSpec::squared_norm(dim), D, 512, 0);
    return D;
}

double poly_sup_norm(const PolynomialSpec& Q, std::size_t grid_size) {
    return maximize_on_ball([&](std::span<const double> x) { return std::abs(Q(x)); }, Q.dim(), grid_size);
}

double poly_gradient_sup_estimate(const PolynomialSpec& Q, std::size_t grid_size) {
    return maximize_on_ball([&](std::span<const double> x) { return norm2(Q.gradient(x)); }, Q.dim(),
                            grid_size);
}

void write_gamma_csv(std::ostream& os, const RidgeDecomposition& D) {
    os << "# ridge-gamma d=" << D.dim << " q=" << D.degree << " n=" << D.count() << " q0=" << format_double(D.q0)
       << " residual=" << format_double(D.residual) << "\n";
    os << "k,l,gamma\n";
    for (std::size_t k = 0; k < D.count(); ++k)
        for (unsigned l = 1; l <= D.degree; ++l)
            os << k + 1 << "," << l << "," << format_double(D.gamma_at(k, l)) << "\n";
}

void write_directions_csv(std::ostream& os, const RidgeDecomposition& D) {
    os << "# ridge-directions d=" << D.dim << " n=" << D.count() << "\n";
    os << "k";
    for (std::size_t i = 0; i < D.dim; ++i) os << ",x" << i;
    os << "\n";
    for (std::size_t k = 0; k < D.count(); ++k) {
        os << k + 1;
        for (double v : D.directions[k]) os << "," << format_double(v);
        os << "\n";
    }
}

namespace {

std::map<std::string, std::string> parse_comment(const std::string& line) {
    std::map<std::string, std::string> kv;
    std::istringstream ss(line.substr(1));
    std::string tok;
    while (ss >> tok) {
        auto eq = tok.find('=');
        if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::size_t to_count(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError(std::string("decomposition csv: bad ") + what + " '" + s + "'");
    }
}

}  // namespace

RidgeDecomposition read_decomposition_csv(std::istream& gamma_in, std::istream& dir_in) {
    RidgeDecomposition D;
    std::string line;
    if (!std::getline(gamma_in, line) || line.rfind("# ridge-gamma", 0) != 0)
        throw ConfigError("decomposition csv: missing gamma header comment");
    auto kv = parse_comment(line);
    D.dim = to_count(kv["d"], "d");
    D.degree = static_cast<unsigned>(to_count(kv["q"], "q"));
    const std::size_t n = to_count(kv["n"], "n");
    D.q0 = parse_double(kv["q0"]);
    D.residual = parse_double(kv["residual"]);
    D.gamma.assign(n * D.degree, 0.0);
    std::getline(gamma_in, line);  // column header
    std::size_t rows = 0, line_no = 2;
    while (std::getline(gamma_in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != 3) throw ConfigError("gamma csv line " + std::to_string(line_no) + ": expected 3 columns");
        const std::size_t k = to_count(cells[0], "k"), l = to_count(cells[1], "l");
        if (k < 1 || k > n || l < 1 || l > D.degree)
            throw ConfigError("gamma csv line " + std::to_string(line_no) + ": index out of range");
        D.gamma[(k - 1) * D.degree + (l - 1)] = parse_double(cells[2]);
        ++rows;
    }
    if (rows != n * D.degree) throw ConfigError("gamma csv: row count does not match n*q");

    if (!std::getline(dir_in, line) || line.rfind("# ridge-directions", 0) != 0)
        throw ConfigError("decomposition csv: missing directions header comment");
    std::getline(dir_in, line);
    line_no = 2;
    while (std::getline(dir_in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != D.dim + 1)
            throw ConfigError("directions csv line " + std::to_string(line_no) + ": wrong column count");
        std::vector<double> xi;
        for (std::size_t i = 1; i < cells.size(); ++i) xi.push_back(parse_double(cells[i]));
        D.directions.push_back(std::move(xi));
    }
    if (D.directions.size() != n) throw ConfigError("directions csv: row count does not match n");
    return D;
}

void save_decomposition(const std::filesystem::path& prefix, const RidgeDecomposition& D) {
    std::ofstream g(prefix.string() + "_gamma.csv"), x(prefix.string() + "_directions.csv");
    if (!g || !x) throw ConfigError("cannot write decomposition files at " + prefix.string());
    write_gamma_csv(g, D);
    write_directions_csv(x, D);
}

RidgeDecomposition load_decomposition(const std::filesystem::path& prefix) {
    std::ifstream g(prefix.string() + "_gamma.csv"), x(prefix.string() + "_directions.csv");
    if (!g || !x) throw ConfigError("cannot read decomposition files at " + prefix.string());
    return read_decomposition_csv(g, x);
}

}  // namespace drnet
