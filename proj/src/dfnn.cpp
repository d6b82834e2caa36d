#include "drnet/dfnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "drnet/error.hpp"
#include "drnet/numeric.hpp"

namespace drnet {

namespace {

constexpr std::size_t kAtomBlock = 32;
constexpr std::size_t kParallelThreshold = 32;

/// out = relu(F in - b); plain in-order dot products.
void dense_relu(const Layer& L, const double* in, double* out, double* pre) {
    const auto rows = static_cast<std::size_t>(L.F.rows()), cols = static_cast<std::size_t>(L.F.cols());
    const double* F = L.F.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const double* row = F + r * cols;
        for (std::size_t k = 0; k < cols; ++k) s += row[k] * in[k];
        const double z = s - L.b[static_cast<Eigen::Index>(r)];
        if (pre) pre[r] = z;
        out[r] = relu(z);
    }
}

double output_dot(const Eigen::VectorXd& c, const Eigen::VectorXd& h) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) s += c[i] * h[i];
    return s;
}

std::size_t max_width(const DistributionNet& net) {
    std::size_t w = net.input_dim();
    for (std::size_t j = 1; j <= net.depth(); ++j) w = std::max(w, net.width(j));
    return w;
}

/// Layers 1..J1 applied to one atom.
void atom_features(const DistributionNet& net, std::span<const double> x, double* out, std::vector<double>& a,
                   std::vector<double>& tmp) {
    std::copy(x.begin(), x.end(), a.begin());
    const std::size_t J1 = net.realizing_level();
    for (std::size_t j = 1; j <= J1; ++j) {
        double* dst = (j == J1) ? out : tmp.data();
        dense_relu(net.layer(j), a.data(), dst, nullptr);
        if (j != J1) std::swap(a, tmp);
    }
}

/// Column means of an n x w buffer, exactly rounded so atom order and duplication do not matter.
Eigen::VectorXd column_means(const std::vector<double>& buf, std::size_t n, std::size_t w) {
    Eigen::VectorXd h(static_cast<Eigen::Index>(w));
    for (std::size_t k = 0; k < w; ++k) {
        ExactSum s;
        for (std::size_t i = 0; i < n; ++i) s.add(buf[i * w + k]);
        h[static_cast<Eigen::Index>(k)] = s.mean(n);
    }
    return h;
}

void check_measure(const DistributionNet& net, const EmpiricalMeasure& mu) {
    if (mu.dim() != net.input_dim())
        throw ShapeError("measure dimension " + std::to_string(mu.dim()) + " does not match network input " +
                         std::to_string(net.input_dim()));
}

}  // namespace

DistributionNet::DistributionNet(std::size_t input_dim, std::size_t realizing_level, std::vector<Layer> layers,
                                 Eigen::VectorXd c)
    : input_dim_(input_dim), level_(realizing_level), layers_(std::move(layers)), c_(std::move(c)) {
    validate();
}

DistributionNet DistributionNet::zeros(std::size_t input_dim, std::size_t realizing_level,
                                       const std::vector<std::size_t>& widths) {
    std::vector<Layer> layers;
    std::size_t prev = input_dim;
    for (std::size_t w : widths) {
        layers.push_back({RowMatrix::Zero(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(prev)),
                          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w))});
        prev = w;
    }
    return DistributionNet(input_dim, realizing_level, std::move(layers),
                           Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prev)));
}

void DistributionNet::validate() const {
    if (input_dim_ == 0 || input_dim_ > kMaxDimension) throw ShapeError("network input dimension must be in 1..16");
    if (layers_.empty()) throw ShapeError("network needs at least one layer");
    if (level_ < 1) throw ShapeError("realizing level 0 (pure vector network) is not supported");
    if (level_ > layers_.size()) throw ShapeError("realizing level exceeds depth");
    std::size_t prev = input_dim_;
    for (std::size_t j = 0; j < layers_.size(); ++j) {
        const auto& L = layers_[j];
        if (static_cast<std::size_t>(L.F.cols()) != prev)
            throw ShapeError("layer " + std::to_string(j + 1) + " has " + std::to_string(L.F.cols()) +
                             " columns, expected " + std::to_string(prev));
        if (L.F.rows() != L.b.size())
            throw ShapeError("layer " + std::to_string(j + 1) + " bias length does not match its rows");
        if (L.F.rows() < 1 || static_cast<std::size_t>(L.F.rows()) > kMaxWidth)
            throw CapacityError("layer " + std::to_string(j + 1) + " width must be in 1..4096");
        prev = static_cast<std::size_t>(L.F.rows());
    }
    if (static_cast<std::size_t>(c_.size()) != prev) throw ShapeError("output coefficients do not match d_J");
}

std::size_t DistributionNet::width(std::size_t j) const {
    if (j == 0) return input_dim_;
    return static_cast<std::size_t>(layer(j).F.rows());
}

std::vector<std::size_t> DistributionNet::widths() const {
    std::vector<std::size_t> w;
    for (std::size_t j = 0; j <= depth(); ++j) w.push_back(width(j));
    return w;
}

std::size_t DistributionNet::parameter_total() const {
    std::size_t n = static_cast<std::size_t>(c_.size());
    for (const auto& L : layers_) n += static_cast<std::size_t>(L.F.size() + L.b.size());
    return n;
}

Eigen::VectorXd DistributionNet::post_integration(const Eigen::VectorXd& h) const {
    Eigen::VectorXd a = h;
    for (std::size_t j = level_ + 1; j <= depth(); ++j) {
        Eigen::VectorXd next(layer(j).F.rows());
        dense_relu(layer(j), a.data(), next.data(), nullptr);
        a = std::move(next);
    }
    return a;
}

Eigen::VectorXd DistributionNet::integrated_features(const EmpiricalMeasure& mu) const {
    check_measure(*this, mu);
    const std::size_t n = mu.size(), w = width(level_), mw = max_width(*this);
    std::vector<double> buf(n * w);
#pragma omp parallel if (n >= kParallelThreshold)
    {
        std::vector<double> a(mw), tmp(mw);
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < n; ++i) atom_features(*this, mu.atom(i), buf.data() + i * w, a, tmp);
    }
    return column_means(buf, n, w);
}

double DistributionNet::forward(const EmpiricalMeasure& mu) const {
    return output_dot(c_, post_integration(integrated_features(mu)));
}

double DistributionNet::forward_reference(const EmpiricalMeasure& mu) const {
    check_measure(*this, mu);
    const std::size_t n = mu.size(), w = width(level_), mw = max_width(*this);
    std::vector<double> buf(n * w), a(mw), tmp(mw);
    for (std::size_t i = 0; i < n; ++i) atom_features(*this, mu.atom(i), buf.data() + i * w, a, tmp);
    return output_dot(c_, post_integration(column_means(buf, n, w)));
}

double DistributionNet::forward_point(std::span<const double> x) const {
    if (x.size() != input_dim_) throw ShapeError("point dimension does not match network input");
    const std::size_t mw = max_width(*this);
    std::vector<double> a(mw), tmp(mw);
    Eigen::VectorXd h(static_cast<Eigen::Index>(width(level_)));
    atom_features(*this, x, h.data(), a, tmp);
    return output_dot(c_, post_integration(h));
}

NetGradient NetGradient::zeros_like(const DistributionNet& net) {
    NetGradient g;
    for (const auto& L : net.layers()) {
        g.dF.push_back(RowMatrix::Zero(L.F.rows(), L.F.cols()));
        g.db.push_back(Eigen::VectorXd::Zero(L.b.size()));
    }
    g.dc = Eigen::VectorXd::Zero(net.c().size());
    return g;
}

void NetGradient::add_scaled(const NetGradient& other, double scale) {
    for (std::size_t j = 0; j < dF.size(); ++j) {
        dF[j] += scale * other.dF[j];
        db[j] += scale * other.db[j];
    }
    dc += scale * other.dc;
}

double forward_with_gradient(const DistributionNet& net, const EmpiricalMeasure& mu, NetGradient& grad) {
    check_measure(net, mu);
    const std::size_t J = net.depth(), J1 = net.realizing_level(), n = mu.size();
    grad = NetGradient::zeros_like(net);

    // post-integration forward with stored activations
    std::vector<Eigen::VectorXd> act(J + 1), pre(J + 1);
    act[J1] = net.integrated_features(mu);
    for (std::size_t j = J1 + 1; j <= J; ++j) {
        const auto& L = net.layer(j);
        act[j].resize(L.F.rows());
        pre[j].resize(L.F.rows());
        dense_relu(L, act[j - 1].data(), act[j].data(), pre[j].data());
    }
    const double out = output_dot(net.c(), act[J]);
    grad.dc = act[J];

    Eigen::VectorXd g = net.c();  // d out / d act[J]
    for (std::size_t j = J; j > J1; --j) {
        const auto& L = net.layer(j);
        Eigen::VectorXd gz = g.array() * (pre[j].array() > 0.0).cast<double>();
        grad.dF[j - 1].noalias() += gz * act[j - 1].transpose();
        grad.db[j - 1] -= gz;
        g = L.F.transpose() * gz;
    }
    const Eigen::VectorXd g_level = g / static_cast<double>(n);

    // per-atom backward through layers 1..J1, fixed blocks summed in order
    const std::size_t blocks = (n + kAtomBlock - 1) / kAtomBlock;
    std::vector<NetGradient> partial(blocks);
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        NetGradient& pg = partial[blk];
        for (std::size_t j = 1; j <= J1; ++j) {
            pg.dF.push_back(RowMatrix::Zero(net.layer(j).F.rows(), net.layer(j).F.cols()));
            pg.db.push_back(Eigen::VectorXd::Zero(net.layer(j).b.size()));
        }
        std::vector<Eigen::VectorXd> a(J1 + 1), z(J1 + 1);
        for (std::size_t i = blk * kAtomBlock; i < std::min(n, (blk + 1) * kAtomBlock); ++i) {
            auto x = mu.atom(i);
            a[0] = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
            for (std::size_t j = 1; j <= J1; ++j) {
                const auto& L = net.layer(j);
                a[j].resize(L.F.rows());
                z[j].resize(L.F.rows());
                dense_relu(L, a[j - 1].data(), a[j].data(), z[j].data());
            }
            Eigen::VectorXd ga = g_level;
            for (std::size_t j = J1; j >= 1; --j) {
                Eigen::VectorXd gz = ga.array() * (z[j].array() > 0.0).cast<double>();
                pg.dF[j - 1].noalias() += gz * a[j - 1].transpose();
                pg.db[j - 1] -= gz;
                if (j > 1) ga = net.layer(j).F.transpose() * gz;
            }
        }
    }
    for (const auto& pg : partial)
        for (std::size_t j = 0; j < J1; ++j) {
            grad.dF[j] += pg.dF[j];
            grad.db[j] += pg.db[j];
        }
    return out;
}

double matrix_inf_norm(const RowMatrix& A) {
    double best = 0.0;
    for (Eigen::Index r = 0; r < A.rows(); ++r) best = std::max(best, A.row(r).cwiseAbs().sum());
    return best;
}

ParamNorms param_norms(const DistributionNet& net) {
    ParamNorms p;
    for (const auto& L : net.layers()) {
        p.F_inf.push_back(matrix_inf_norm(L.F));
        p.b_inf.push_back(L.b.size() ? L.b.cwiseAbs().maxCoeff() : 0.0);
    }
    p.c_inf = net.c().size() ? net.c().cwiseAbs().maxCoeff() : 0.0;
    return p;
}

void HypothesisSpaceSpec::validate() const {
    if (!(R > 0.0) || !std::isfinite(R)) throw ParameterError("hypothesis space needs R > 0");
    if (N < 1) throw PreconditionError("hypothesis space needs N >= 1");
}

MembershipReport check_membership(const DistributionNet& net, const HypothesisSpaceSpec& spec) {
    spec.validate();
    const std::size_t w = 2 * spec.N + 3;
    if (net.depth() != 3 || net.realizing_level() != 2)
        throw ShapeError("hypothesis space holds type (2,3) networks only");
    if (net.width(2) != w || net.width(3) != w)
        throw ShapeError("hypothesis space needs d2 = d3 = 2N+3 = " + std::to_string(w));

    const double N = static_cast<double>(spec.N);
    auto within = [](double value, double limit) { return value <= limit + 1e-12 * std::max(1.0, limit); };
    const auto norms = param_norms(net);
    MembershipReport rep;
    for (std::size_t j = 0; j < 3; ++j) {
        if (!within(norms.F_inf[j], spec.R * N * N)) {
            rep.first_violation = "F" + std::to_string(j + 1) + ": |F|_inf = " + format_double(norms.F_inf[j]) +
                                  " > R N^2 = " + format_double(spec.R * N * N);
            return rep;
        }
        if (!within(norms.b_inf[j], spec.R)) {
            rep.first_violation = "b" + std::to_string(j + 1) + ": |b|_inf = " + format_double(norms.b_inf[j]) +
                                  " > R = " + format_double(spec.R);
            return rep;
        }
    }
    if (!within(norms.c_inf, spec.R * N)) {
        rep.first_violation =
            "c: |c|_inf = " + format_double(norms.c_inf) + " > R N = " + format_double(spec.R * N);
        return rep;
    }
    rep.member = true;
    return rep;
}

bool in_hypothesis_space(const DistributionNet& net, const HypothesisSpaceSpec& spec) {
    return check_membership(net, spec).member;
}

double project_M(double value, double M) {
    if (!(M > 0.0)) throw ParameterError("projection bound M must be positive");
    return std::clamp(value, -M, M);
}

double lipschitz_certificate(const DistributionNet& net, const HypothesisSpaceSpec& spec) {
    auto rep = check_membership(net, spec);
    if (!rep.member) throw PreconditionError("network is outside the hypothesis space: " + rep.first_violation);
    const auto norms = param_norms(net);
    double L = static_cast<double>(2 * spec.N + 3) * norms.c_inf;
    for (double f : norms.F_inf) L *= f;
    return L;
}

double uniform_bound(const HypothesisSpaceSpec& spec) {
    spec.validate();
    const double R = spec.R, N = static_cast<double>(spec.N);
    return (2 * N + 3) * (2 * R * R * R * R + R * R * R + R * R) * std::pow(N, 7);
}

std::string to_json(const DistributionNet& net) {
    nlohmann::json j;
    j["format"] = "drnet-network";
    j["version"] = 1;
    j["J"] = net.depth();
    j["J1"] = net.realizing_level();
    j["dims"] = net.widths();
    j["layers"] = nlohmann::json::array();
    for (const auto& L : net.layers()) {
        nlohmann::json F = nlohmann::json::array();
        for (Eigen::Index r = 0; r < L.F.rows(); ++r) {
            std::vector<double> row(L.F.row(r).begin(), L.F.row(r).end());
            F.push_back(row);
        }
        j["layers"].push_back({{"F", F}, {"b", std::vector<double>(L.b.begin(), L.b.end())}});
    }
    j["c"] = std::vector<double>(net.c().begin(), net.c().end());
    return j.dump();
}

DistributionNet from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("network json: ") + e.what());
    }
    try {
        const auto dims = j.at("dims").get<std::vector<std::size_t>>();
        const auto J = j.at("J").get<std::size_t>();
        if (dims.size() != J + 1) throw ConfigError("network json: dims must have J+1 entries");
        std::vector<Layer> layers;
        for (std::size_t l = 0; l < J; ++l) {
            const auto& jl = j.at("layers").at(l);
            const auto rows = jl.at("F").get<std::vector<std::vector<double>>>();
            const auto b = jl.at("b").get<std::vector<double>>();
            if (rows.size() != dims[l + 1]) throw ConfigError("network json: layer row count mismatch");
            Layer L{RowMatrix(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l])),
                    Eigen::VectorXd(static_cast<Eigen::Index>(b.size()))};
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != dims[l]) throw ConfigError("network json: ragged matrix row");
                for (std::size_t c = 0; c < dims[l]; ++c)
                    L.F(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
            }
            for (std::size_t r = 0; r < b.size(); ++r) L.b[static_cast<Eigen::Index>(r)] = b[r];
            layers.push_back(std::move(L));
        }
        const auto c = j.at("c").get<std::vector<double>>();
        Eigen::VectorXd cv(static_cast<Eigen::Index>(c.size()));
        for (std::size_t r = 0; r < c.size(); ++r) cv[static_cast<Eigen::Index>(r)] = c[r];
        return DistributionNet(dims[0], j.at("J1").get<std::size_t>(), std::move(layers), std::move(cv));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("network json: ") + e.what());
    }
}

void save_net(const std::filesystem::path& path, const DistributionNet& net) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << to_json(net) << "\n";
}

DistributionNet load_net(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json(ss.str());
}

}  // namespace drnet
