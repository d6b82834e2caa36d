#include "drnet/measure.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "drnet/error.hpp"
#include "drnet/numeric.hpp"

namespace drnet {

namespace {

void check_dim(std::size_t dim) {
    if (dim == 0) throw ShapeError("dimension must be >= 1");
    if (dim > kMaxDimension) throw CapacityError("dimension above 16 is not supported");
}

void project_into_ball(std::span<double> x) {
    const double r = norm2(x);
    if (r > 1.0)
        for (double& v : x) v /= r;
}

void unit_direction(Rng& rng, std::span<double> out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double r = 0.0;
    do {
        for (double& v : out) v = normal(rng);
        r = norm2(out);
    } while (r == 0.0);
    for (double& v : out) v /= r;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> atoms_row_major)
    : dim_(dim), data_(std::move(atoms_row_major)) {
    check_dim(dim_);
    if (data_.empty() || data_.size() % dim_ != 0)
        throw ShapeError("measure needs n >= 1 atoms of dimension d");
    for (std::size_t i = 0; i < size(); ++i) {
        const double r = norm2(atom(i));
        if (!(r <= 1.0 + kBallSlack))
            throw ParameterError("atom " + std::to_string(i) + " lies outside the unit ball");
    }
}

EmpiricalMeasure EmpiricalMeasure::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ShapeError("measure needs at least one atom");
    const std::size_t d = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * d);
    for (const auto& r : rows) {
        if (r.size() != d) throw ShapeError("ragged atom rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return EmpiricalMeasure(d, std::move(flat));
}

EmpiricalMeasure EmpiricalMeasure::dirac(std::span<const double> point) {
    return EmpiricalMeasure(point.size(), std::vector<double>(point.begin(), point.end()));
}

double EmpiricalMeasure::integrate(const std::function<double(std::span<const double>)>& fn) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < size(); ++i) s.add(fn(atom(i)));
    return s.value() / static_cast<double>(size());
}

std::vector<double> EmpiricalMeasure::mean() const {
    std::vector<double> m(dim_);
    for (std::size_t k = 0; k < dim_; ++k) {
        CompensatedSum s;
        for (std::size_t i = 0; i < size(); ++i) s.add(data_[i * dim_ + k]);
        m[k] = s.value() / static_cast<double>(size());
    }
    return m;
}

EmpiricalMeasure EmpiricalMeasure::duplicated(std::size_t k) const {
    if (k == 0) throw ParameterError("duplication factor must be >= 1");
    std::vector<double> out;
    out.reserve(data_.size() * k);
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t r = 0; r < k; ++r) out.insert(out.end(), atom(i).begin(), atom(i).end());
    return EmpiricalMeasure(dim_, std::move(out));
}

EmpiricalMeasure EmpiricalMeasure::permuted(std::span<const std::size_t> order) const {
    if (order.size() != size()) throw ShapeError("permutation length mismatch");
    std::vector<double> out;
    out.reserve(data_.size());
    for (std::size_t idx : order) {
        if (idx >= size()) throw ShapeError("permutation index out of range");
        out.insert(out.end(), atom(idx).begin(), atom(idx).end());
    }
    return EmpiricalMeasure(dim_, std::move(out));
}

void DistributionSpec::validate() const {
    check_dim(dim);
    auto check_center = [&](const std::vector<double>& c, const char* what) {
        if (c.size() != dim) throw ParameterError(std::string(what) + " has wrong dimension");
        for (double v : c)
            if (!std::isfinite(v)) throw ParameterError(std::string(what) + " is not finite");
    };
    switch (family) {
        case Family::UniformBall:
        case Family::TruncatedGaussian:
            check_center(center, "center");
            if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("scale must be positive");
            break;
        case Family::Dirac:
            check_center(center, "dirac location");
            if (!(norm2(center) <= 1.0 + kBallSlack))
                throw ParameterError("dirac location outside the unit ball");
            break;
        case Family::SphereMixture: {
            if (components.empty()) throw ParameterError("sphere mixture needs components");
            double total = 0.0;
            for (const auto& c : components) {
                check_center(c.center, "component center");
                if (!(c.radius >= 0.0)) throw ParameterError("component radius must be >= 0");
                if (!(c.weight > 0.0)) throw ParameterError("component weight must be positive");
                total += c.weight;
            }
            if (!std::isfinite(total)) throw ParameterError("mixture weights not finite");
            break;
        }
    }
}

DistributionSpec DistributionSpec::uniform_ball(std::size_t dim) {
    DistributionSpec s;
    s.family = Family::UniformBall;
    s.dim = dim;
    s.center.assign(dim, 0.0);
    s.scale = 1.0;
    return s;
}

DistributionSpec DistributionSpec::truncated_gaussian(std::vector<double> mean, double scale) {
    DistributionSpec s;
    s.family = Family::TruncatedGaussian;
    s.dim = mean.size();
    s.center = std::move(mean);
    s.scale = scale;
    return s;
}

DistributionSpec DistributionSpec::dirac_at(std::vector<double> point) {
    DistributionSpec s;
    s.family = Family::Dirac;
    s.dim = point.size();
    s.center = std::move(point);
    return s;
}

DistributionSpec DistributionSpec::sphere_mixture(std::size_t dim, std::vector<SphereComponent> comps) {
    DistributionSpec s;
    s.family = Family::SphereMixture;
    s.dim = dim;
    s.center.assign(dim, 0.0);
    s.components = std::move(comps);
    return s;
}

const char* family_name(Family f) {
    switch (f) {
        case Family::UniformBall: return "uniform-ball";
        case Family::TruncatedGaussian: return "truncated-gaussian";
        case Family::SphereMixture: return "sphere-mixture";
        case Family::Dirac: return "dirac";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "uniform-ball") return Family::UniformBall;
    if (name == "truncated-gaussian") return Family::TruncatedGaussian;
    if (name == "sphere-mixture") return Family::SphereMixture;
    if (name == "dirac") return Family::Dirac;
    throw ParameterError("unknown distribution family '" + name + "'");
}

EmpiricalMeasure sample_measure(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n == 0) throw ParameterError("sample size must be >= 1");
    const std::size_t d = spec.dim;
    Rng rng(seed);
    std::vector<double> out(n * d);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> weights;
    for (const auto& c : spec.components) weights.push_back(c.weight);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

    constexpr int kMaxRejections = 100000;
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> x(out.data() + i * d, d);
        switch (spec.family) {
            case Family::Dirac:
                for (std::size_t k = 0; k < d; ++k) x[k] = spec.center[k];
                project_into_ball(x);
                break;
            case Family::UniformBall: {
                unit_direction(rng, x);
                const double r = spec.scale * std::pow(unif(rng), 1.0 / static_cast<double>(d));
                for (std::size_t k = 0; k < d; ++k) x[k] = spec.center[k] + r * x[k];
                project_into_ball(x);
                break;
            }
            case Family::TruncatedGaussian: {
                int tries = 0;
                for (;;) {
                    for (std::size_t k = 0; k < d; ++k) x[k] = spec.center[k] + spec.scale * normal(rng);
                    if (norm2(x) <= 1.0) break;
                    if (++tries > kMaxRejections)
                        throw ParameterError("truncated gaussian has negligible mass in the unit ball");
                }
                break;
            }
            case Family::SphereMixture: {
                const auto& comp = spec.components[pick(rng)];
                unit_direction(rng, x);
                for (std::size_t k = 0; k < d; ++k) x[k] = comp.center[k] + comp.radius * x[k];
                project_into_ball(x);
                break;
            }
        }
    }
    return EmpiricalMeasure(d, std::move(out));
}

void write_measure_csv(std::ostream& os, const EmpiricalMeasure& mu) {
    const std::size_t d = mu.dim();
    os << "# n=" << mu.size() << " d=" << d << "\n";
    for (std::size_t k = 0; k < d; ++k) os << (k ? "," : "") << "x" << k;
    os << "\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        auto a = mu.atom(i);
        for (std::size_t k = 0; k < d; ++k) os << (k ? "," : "") << format_double(a[k]);
        os << "\n";
    }
}

EmpiricalMeasure read_measure_csv(std::istream& is) {
    std::string line;
    std::size_t declared_n = 0, declared_d = 0;
    bool have_comment = false, have_header = false;
    std::vector<double> flat;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (std::sscanf(line.c_str(), "# n=%zu d=%zu", &declared_n, &declared_d) == 2) have_comment = true;
            continue;
        }
        if (!have_header) {
            have_header = true;
            if (line[0] == 'x') continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                flat.push_back(parse_double(cell));
            } catch (const ConfigError& e) {
                throw ConfigError("measure csv line " + std::to_string(line_no) + ": " + e.what());
            }
            ++cols;
        }
        if (declared_d == 0) declared_d = cols;
        if (cols != declared_d)
            throw ConfigError("measure csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(declared_d) + " columns");
    }
    if (declared_d == 0) throw ConfigError("measure csv has no atoms");
    if (have_comment && flat.size() != declared_n * declared_d)
        throw ConfigError("measure csv atom count does not match its n= comment");
    return EmpiricalMeasure(declared_d, std::move(flat));
}

void save_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& mu) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    write_measure_csv(os, mu);
}

EmpiricalMeasure load_measure_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path.string());
    return read_measure_csv(is);
}

}  // namespace drnet
