#include "drnet/regress.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "drnet/error.hpp"

namespace drnet {

namespace {

constexpr std::size_t kSampleBlock = 8;

std::vector<double> unit_ball_point(std::size_t d, double radius, Rng& rng) {
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    std::vector<double> v(d);
    double nrm = 0.0;
    do {
        for (auto& x : v) x = gauss(rng);
        nrm = norm2(v);
    } while (nrm == 0.0);
    const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(d));
    for (auto& x : v) x *= r / nrm;
    return v;
}

double mean_in_order(const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    return v.empty() ? 0.0 : s.value() / static_cast<double>(v.size());
}

RiskEstimate mean_and_se(const std::vector<double>& v) {
    RiskEstimate r;
    r.mean = mean_in_order(v);
    if (v.size() > 1) {
        CompensatedSum s;
        for (double x : v) s.add((x - r.mean) * (x - r.mean));
        r.se = std::sqrt(s.value() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return r;
}

/// net outputs on every entry's second-stage sample or reference sample
std::vector<double> outputs(const DistributionNet& net, const TwoStageDataset& data, Stage which) {
    std::vector<double> out(data.m());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < data.m(); ++i) {
        const auto& e = data.entries[i];
        out[i] = net.forward(which == Stage::SecondStage ? e.sample : e.reference);
    }
    return out;
}

double squared_error(const std::vector<double>& pred, const TwoStageDataset& data, std::optional<double> M) {
    std::vector<double> sq(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = M ? project_M(pred[i], *M) : pred[i];
        sq[i] = (p - data.entries[i].y) * (p - data.entries[i].y);
    }
    return mean_in_order(sq);
}

/// Layers after the averaging step applied to cached features; fills grad for those layers and c when asked.
double head_forward(const DistributionNet& net, const Eigen::VectorXd& features, NetGradient* grad, double scale) {
    const std::size_t J = net.depth(), J1 = net.realizing_level();
    std::vector<Eigen::VectorXd> act(J + 1), pre(J + 1);
    act[J1] = features;
    for (std::size_t j = J1 + 1; j <= J; ++j) {
        const auto& L = net.layer(j);
        pre[j] = L.F * act[j - 1] - L.b;
        act[j] = pre[j].cwiseMax(0.0);
    }
    const double out = net.c().dot(act[J]);
    if (grad) {
        grad->dc += scale * act[J];
        Eigen::VectorXd g = scale * net.c();
        for (std::size_t j = J; j > J1; --j) {
            Eigen::VectorXd gz = g.array() * (pre[j].array() > 0.0).cast<double>();
            grad->dF[j - 1].noalias() += gz * act[j - 1].transpose();
            grad->db[j - 1] -= gz;
            g = net.layer(j).F.transpose() * gz;
        }
    }
    return out;
}

class Objective {
public:
    Objective(const TwoStageDataset& data, const DistributionNet& init, const TrainableMask& mask)
        : data_(data), cached_(mask.per_atom_frozen(init)) {
        if (cached_) {
            features_.resize(data.m());
#pragma omp parallel for schedule(dynamic)
            for (std::size_t i = 0; i < data.m(); ++i) features_[i] = init.integrated_features(data.entries[i].sample);
        }
    }

    double loss(const DistributionNet& net) const {
        std::vector<double> sq(data_.m());
#pragma omp parallel for schedule(dynamic)
        for (std::size_t i = 0; i < data_.m(); ++i) {
            const double p = cached_ ? head_forward(net, features_[i], nullptr, 0.0) : net.forward(data_.entries[i].sample);
            sq[i] = (p - data_.entries[i].y) * (p - data_.entries[i].y);
        }
        return mean_in_order(sq);
    }

    /// gradient of (1/m) sum (f - y)^2; blocks of samples summed in index order
    NetGradient gradient(const DistributionNet& net) const {
        const std::size_t m = data_.m();
        const std::size_t blocks = (m + kSampleBlock - 1) / kSampleBlock;
        std::vector<NetGradient> partial(blocks, NetGradient::zeros_like(net));
        const double inv_m = 1.0 / static_cast<double>(m);
#pragma omp parallel for schedule(dynamic)
        for (std::size_t blk = 0; blk < blocks; ++blk) {
            NetGradient one;
            for (std::size_t i = blk * kSampleBlock; i < std::min(m, (blk + 1) * kSampleBlock); ++i) {
                const double y = data_.entries[i].y;
                if (cached_) {
                    // head_forward scales the gradient, so get the residual first
                    const double p = head_forward(net, features_[i], nullptr, 0.0);
                    head_forward(net, features_[i], &partial[blk], 2.0 * (p - y) * inv_m);
                } else {
                    const double p = forward_with_gradient(net, data_.entries[i].sample, one);
                    partial[blk].add_scaled(one, 2.0 * (p - y) * inv_m);
                }
            }
        }
        NetGradient total = NetGradient::zeros_like(net);
        for (const auto& g : partial) total.add_scaled(g, 1.0);
        return total;
    }

private:
    const TwoStageDataset& data_;
    bool cached_;
    std::vector<Eigen::VectorXd> features_;
};

void apply_step(DistributionNet& net, const NetGradient& g, double step, const TrainableMask& mask) {
    for (std::size_t j = 0; j < net.depth(); ++j) {
        if (mask.F[j]) net.layers()[j].F -= step * g.dF[j];
        if (mask.b[j]) net.layers()[j].b -= step * g.db[j];
    }
    if (mask.c) net.c() -= step * g.dc;
}

double gradient_norm_sq(const NetGradient& g, const TrainableMask& mask) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.dF.size(); ++j) {
        if (mask.F[j]) s += g.dF[j].squaredNorm();
        if (mask.b[j]) s += g.db[j].squaredNorm();
    }
    if (mask.c) s += g.dc.squaredNorm();
    return s;
}

DistributionSpec spec_from_row(Family family, std::vector<double> center, double scale) {
    switch (family) {
        case Family::TruncatedGaussian: return DistributionSpec::truncated_gaussian(std::move(center), scale);
        case Family::UniformBall: {
            auto s = DistributionSpec::uniform_ball(center.size());
            s.center = std::move(center);
            s.scale = scale;
            return s;
        }
        case Family::Dirac: return DistributionSpec::dirac_at(std::move(center));
        case Family::SphereMixture: break;
    }
    throw ConfigError("sphere mixtures cannot be stored in first_stage.csv");
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

void ParameterPrior::validate() const {
    if (!(center_radius >= 0.0 && center_radius <= 1.0)) throw ParameterError("center radius must lie in [0, 1]");
    if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) throw ParameterError("need 0 < scale_lo <= scale_hi");
    if (!(gaussian_fraction >= 0.0 && gaussian_fraction <= 1.0))
        throw ParameterError("gaussian fraction must lie in [0, 1]");
}

DistributionSpec ParameterPrior::draw(std::size_t d, Rng& rng) const {
    std::uniform_real_distribution<double> unif;
    auto center = unit_ball_point(d, center_radius, rng);
    const double scale = scale_lo + (scale_hi - scale_lo) * unif(rng);
    if (unif(rng) < gaussian_fraction) return DistributionSpec::truncated_gaussian(std::move(center), scale);
    return spec_from_row(Family::UniformBall, std::move(center), scale);
}

double target_sup_bound(const TargetFunctional& target) {
    double B = 0.0;
    if (target.kind == TargetKind::Ridge || target.kind == TargetKind::Laplace)
        B = norm2(target.xi);
    else
        B = target.q_sup ? *target.q_sup : target.Q.abs_coefficient_sum();
    return target.f.sup_on(target.g.sup_on(B));
}

MetaDistribution MetaDistribution::make(TargetFunctional target, double noise, ParameterPrior prior,
                                        std::size_t n_ref) {
    if (!(noise >= 0.0)) throw ParameterError("noise half-width must be nonnegative");
    if (n_ref == 0) throw ParameterError("reference sample size must be positive");
    prior.validate();
    target.validate();
    MetaDistribution meta;
    meta.M = target_sup_bound(target) + noise;
    if (!(meta.M > 0.0)) throw ParameterError("output bound M must be positive");
    meta.target = std::move(target);
    meta.prior = prior;
    meta.noise = noise;
    meta.n_ref = n_ref;
    return meta;
}

TwoStageDataset generate(const MetaDistribution& meta, std::size_t m, std::size_t n, std::uint64_t seed) {
    if (m == 0 || n == 0) throw ParameterError("sample sizes must be positive");
    TwoStageDataset data;
    data.target_id = meta.target.id;
    data.dim = meta.target.dim();
    data.n = n;
    data.n_ref = meta.n_ref;
    data.noise = meta.noise;
    data.M = meta.M;
    data.seed = seed;
    data.prior = meta.prior;

    std::vector<std::optional<DatasetEntry>> slots(m);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < m; ++i) {
        Rng spec_rng(derive_seed(seed, 4 * i));
        auto spec = meta.prior.draw(data.dim, spec_rng);
        const auto atoms_seed = derive_seed(seed, 4 * i + 1);
        const auto ref_seed = derive_seed(seed, 4 * i + 2);
        auto reference = sample_measure(spec, meta.n_ref, ref_seed);
        const double f_ref = meta.target(reference);
        double eps = 0.0;
        if (meta.noise > 0.0) {
            Rng noise_rng(derive_seed(seed, 4 * i + 3));
            eps = std::uniform_real_distribution<double>(-meta.noise, meta.noise)(noise_rng);
        }
        const double y = std::clamp(f_ref + eps, -meta.M, meta.M);
        slots[i].emplace(DatasetEntry{spec, y, f_ref, atoms_seed, ref_seed, sample_measure(spec, n, atoms_seed),
                                      std::move(reference)});
    }
    data.entries.reserve(m);
    for (auto& s : slots) data.entries.push_back(std::move(*s));
    return data;
}

void write_first_stage_csv(std::ostream& os, const TwoStageDataset& data) {
    os << "i,y,f_ref,family,scale,atoms_seed,ref_seed";
    for (std::size_t k = 0; k < data.dim; ++k) os << ",c" << k;
    os << "\n";
    for (std::size_t i = 0; i < data.m(); ++i) {
        const auto& e = data.entries[i];
        os << i << "," << format_double(e.y) << "," << format_double(e.f_ref) << "," << family_name(e.spec.family)
           << "," << format_double(e.spec.scale) << "," << e.atoms_seed << "," << e.ref_seed;
        for (double c : e.spec.center) os << "," << format_double(c);
        os << "\n";
    }
}

void save_dataset(const std::filesystem::path& dir, const TwoStageDataset& data) {
    std::filesystem::create_directories(dir / "second_stage");
    nlohmann::json j;
    j["format"] = "drnet-dataset";
    j["version"] = 1;
    j["target"] = data.target_id;
    j["dim"] = data.dim;
    j["m"] = data.m();
    j["n"] = data.n;
    j["n_ref"] = data.n_ref;
    j["noise"] = data.noise;
    j["M"] = data.M;
    j["seed"] = data.seed;
    j["prior"] = {{"center_radius", data.prior.center_radius},
                  {"scale_lo", data.prior.scale_lo},
                  {"scale_hi", data.prior.scale_hi},
                  {"gaussian_fraction", data.prior.gaussian_fraction}};
    {
        std::ofstream os(dir / "meta.json");
        if (!os) throw ConfigError("cannot write " + (dir / "meta.json").string());
        os << j.dump(2) << "\n";
    }
    {
        std::ofstream os(dir / "first_stage.csv");
        if (!os) throw ConfigError("cannot write " + (dir / "first_stage.csv").string());
        write_first_stage_csv(os, data);
    }
    for (std::size_t i = 0; i < data.m(); ++i)
        save_measure_csv(dir / "second_stage" / (std::to_string(i) + ".csv"), data.entries[i].sample);
}

TwoStageDataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream js(dir / "meta.json");
    if (!js) throw ConfigError("cannot read " + (dir / "meta.json").string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("meta.json: " + std::string(ex.what()));
    }
    TwoStageDataset data;
    std::size_t m = 0;
    try {
        if (j.at("format") != "drnet-dataset") throw ConfigError("meta.json: not a dataset");
        data.target_id = j.at("target").get<std::string>();
        data.dim = j.at("dim").get<std::size_t>();
        m = j.at("m").get<std::size_t>();
        data.n = j.at("n").get<std::size_t>();
        data.n_ref = j.at("n_ref").get<std::size_t>();
        data.noise = j.at("noise").get<double>();
        data.M = j.at("M").get<double>();
        data.seed = j.at("seed").get<std::uint64_t>();
        const auto& p = j.at("prior");
        data.prior = {p.at("center_radius").get<double>(), p.at("scale_lo").get<double>(),
                      p.at("scale_hi").get<double>(), p.at("gaussian_fraction").get<double>()};
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("meta.json: " + std::string(ex.what()));
    }

    std::ifstream fs(dir / "first_stage.csv");
    if (!fs) throw ConfigError("cannot read " + (dir / "first_stage.csv").string());
    std::string line;
    std::getline(fs, line);
    std::size_t lineno = 1;
    while (std::getline(fs, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 7 + data.dim)
            throw ConfigError("first_stage.csv line " + std::to_string(lineno) + ": expected " +
                              std::to_string(7 + data.dim) + " fields");
        const std::size_t i = data.entries.size();
        if (std::stoull(cells[0]) != i)
            throw ConfigError("first_stage.csv line " + std::to_string(lineno) + ": rows out of order");
        std::vector<double> center;
        for (std::size_t k = 0; k < data.dim; ++k) center.push_back(parse_double(cells[7 + k]));
        auto spec = spec_from_row(family_from_name(cells[3]), std::move(center), parse_double(cells[4]));
        const double y = parse_double(cells[1]);
        if (std::abs(y) > data.M)
            throw ConfigError("first_stage.csv line " + std::to_string(lineno) + ": |y| exceeds M");
        const std::uint64_t atoms_seed = std::stoull(cells[5]), ref_seed = std::stoull(cells[6]);
        auto sample = load_measure_csv(dir / "second_stage" / (std::to_string(i) + ".csv"));
        if (sample.dim() != data.dim || sample.size() != data.n)
            throw ConfigError("second_stage/" + std::to_string(i) + ".csv has the wrong shape");
        auto reference = sample_measure(spec, data.n_ref, ref_seed);
        data.entries.push_back(
            DatasetEntry{spec, y, parse_double(cells[2]), atoms_seed, ref_seed, std::move(sample), std::move(reference)});
    }
    if (data.m() != m) throw ConfigError("first_stage.csv row count does not match meta.json");
    return data;
}

double empirical_error(const DistributionNet& net, const TwoStageDataset& data, Stage which, std::optional<double> M) {
    if (net.input_dim() != data.dim) throw ShapeError("network input dimension does not match the data");
    return squared_error(outputs(net, data, which), data, M);
}

TrainableMask TrainableMask::all(const DistributionNet& net) {
    return {std::vector<bool>(net.depth(), true), std::vector<bool>(net.depth(), true), true};
}

TrainableMask TrainableMask::head(const DistributionNet& net) {
    TrainableMask m{std::vector<bool>(net.depth(), false), std::vector<bool>(net.depth(), false), true};
    for (std::size_t j = net.realizing_level(); j < net.depth(); ++j) m.F[j] = m.b[j] = true;
    return m;
}

TrainableMask TrainableMask::output_only(const DistributionNet& net) {
    return {std::vector<bool>(net.depth(), false), std::vector<bool>(net.depth(), false), true};
}

bool TrainableMask::per_atom_frozen(const DistributionNet& net) const {
    for (std::size_t j = 0; j < net.realizing_level(); ++j)
        if (F[j] || b[j]) return false;
    return true;
}

void project_l1_ball(std::span<double> v, double radius) {
    double total = 0.0;
    for (double x : v) total += std::abs(x);
    if (total <= radius) return;
    if (radius <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    std::vector<double> u(v.size());
    std::transform(v.begin(), v.end(), u.begin(), [](double x) { return std::abs(x); });
    std::vector<std::size_t> order(u.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        cum += u[order[k]];
        const double t = (cum - radius) / static_cast<double>(k + 1);
        if (u[order[k]] > t) theta = t;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = std::max(u[i] - theta, 0.0);
        v[i] = v[i] < 0.0 ? -a : a;
    }
}

void project_to_hypothesis_space(DistributionNet& net, const HypothesisSpaceSpec& spec, const TrainableMask& mask) {
    spec.validate();
    const double N = static_cast<double>(spec.N);
    for (std::size_t j = 0; j < net.depth(); ++j) {
        auto& L = net.layers()[j];
        if (mask.F[j])
            for (Eigen::Index r = 0; r < L.F.rows(); ++r)
                project_l1_ball(std::span<double>(L.F.row(r).data(), static_cast<std::size_t>(L.F.cols())),
                                spec.R * N * N);
        if (mask.b[j]) L.b = L.b.cwiseMax(-spec.R).cwiseMin(spec.R);
    }
    if (mask.c) net.c() = net.c().cwiseMax(-spec.R * N).cwiseMin(spec.R * N);
}

TrainResult erm_train(const TwoStageDataset& data, const HypothesisSpaceSpec& spec, const DistributionNet& init,
                      const TrainOptions& options) {
    if (!(options.step > 0.0)) throw ParameterError("step size must be positive");
    if (init.input_dim() != data.dim) throw ShapeError("network input dimension does not match the data");
    const auto rep = check_membership(init, spec);
    if (!rep.member) throw PreconditionError("initial network is outside the hypothesis space: " + rep.first_violation);
    const TrainableMask mask = options.mask ? *options.mask : TrainableMask::all(init);
    if (mask.F.size() != init.depth() || mask.b.size() != init.depth())
        throw ShapeError("trainable mask does not match the network depth");

    Objective obj(data, init, mask);
    TrainResult res;
    res.net = init;
    res.initial_loss = obj.loss(init);
    double loss = res.initial_loss;
    double step = options.step;
    for (std::size_t epoch = 0; epoch < options.epochs && step >= options.min_step; ++epoch) {
        const NetGradient g = obj.gradient(res.net);
        if (gradient_norm_sq(g, mask) == 0.0) break;
        bool accepted = false;
        while (step >= options.min_step) {
            DistributionNet cand = res.net;
            apply_step(cand, g, step, mask);
            project_to_hypothesis_space(cand, spec, mask);
            const double cl = obj.loss(cand);
            if (cl <= loss) {
                const auto chk = check_membership(cand, spec);
                if (!chk.member) throw std::logic_error("projection left the hypothesis space: " + chk.first_violation);
                res.net = std::move(cand);
                loss = cl;
                res.history.push_back(loss);
                ++res.accepted;
                step *= options.grow;
                accepted = true;
                break;
            }
            ++res.rejected;
            step *= 0.5;
        }
        if (!accepted) break;
    }
    res.final_loss = loss;
    res.final_step = step;
    return res;
}

ConstructionReport warm_start(const MetaDistribution& meta, std::size_t N, std::uint64_t seed) {
    if (meta.target.kind != TargetKind::PolyComposite && meta.target.kind != TargetKind::Radial)
        throw PreconditionError("warm start needs a composite target with a (2,3) construction");
    auto report = build(meta.target, N, seed);
    if (!report.certified) throw PreconditionError("construction failed certification: " + report.violation);
    return report;
}

RiskEstimate excess_risk(const DistributionNet& net, const TwoStageDataset& fresh, double M) {
    const auto pred = outputs(net, fresh, Stage::FirstStageReference);
    std::vector<double> sq(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = project_M(pred[i], M) - fresh.entries[i].f_ref;
        sq[i] = r * r;
    }
    return mean_and_se(sq);
}

double ErrorDecomposition::bound() const { return I1 + I2 + std::abs(I3) + std::abs(I4) + R; }

bool ErrorDecomposition::holds() const { return excess <= bound() + 3.0 * se_combined; }

ErrorDecomposition decompose_error(const DistributionNet& net, const DistributionNet& h, const TwoStageDataset& data,
                                   const MetaDistribution& meta, std::size_t mc_size, std::uint64_t seed) {
    if (mc_size < 2) throw ParameterError("Monte Carlo size must be at least 2");
    if (net.input_dim() != data.dim || h.input_dim() != data.dim)
        throw ShapeError("network input dimension does not match the data");
    const double M = meta.M;

    // fresh meta-draws; n = 1 since only the reference samples are used
    const auto fresh = generate(meta, mc_size, 1, seed);
    const auto f_mc = outputs(net, fresh, Stage::FirstStageReference);
    const auto h_mc = outputs(h, fresh, Stage::FirstStageReference);
    std::vector<double> a(mc_size), b(mc_size);
    for (std::size_t j = 0; j < mc_size; ++j) {
        const auto& e = fresh.entries[j];
        const double base = (e.f_ref - e.y) * (e.f_ref - e.y);
        const double fp = project_M(f_mc[j], M);
        a[j] = (fp - e.y) * (fp - e.y) - base;
        b[j] = (h_mc[j] - e.y) * (h_mc[j] - e.y) - base;
    }
    const auto ex = mean_and_se(a);
    const auto rh = mean_and_se(b);

    const auto f_ref_pred = outputs(net, data, Stage::FirstStageReference);
    const auto f_hat_pred = outputs(net, data, Stage::SecondStage);
    const auto h_ref_pred = outputs(h, data, Stage::FirstStageReference);
    const auto h_hat_pred = outputs(h, data, Stage::SecondStage);
    const double ED_f = squared_error(f_ref_pred, data, M);
    const double EDhat_f = squared_error(f_hat_pred, data, M);
    const double ED_h = squared_error(h_ref_pred, data, std::nullopt);
    const double EDhat_h = squared_error(h_hat_pred, data, std::nullopt);
    std::vector<double> rho_sq(data.m());
    for (std::size_t i = 0; i < data.m(); ++i) {
        const auto& e = data.entries[i];
        rho_sq[i] = (e.f_ref - e.y) * (e.f_ref - e.y);
    }
    const double ED_rho = mean_in_order(rho_sq);

    ErrorDecomposition out;
    out.excess = ex.mean;
    out.R = rh.mean;
    out.I1 = ex.mean - (ED_f - ED_rho);
    out.I2 = (ED_h - ED_rho) - rh.mean;
    out.I3 = ED_f - EDhat_f;
    out.I4 = EDhat_h - ED_h;
    out.se_excess = ex.se;
    out.se_R = rh.se;
    out.se_combined = std::sqrt(ex.se * ex.se + rh.se * rh.se);
    out.slack = EDhat_h - EDhat_f;
    out.mc_size = mc_size;
    out.n_ref = meta.n_ref;
    return out;
}

}  // namespace drnet
