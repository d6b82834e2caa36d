#include "drnet/cli.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "drnet/construct.hpp"
#include "drnet/error.hpp"
#include "drnet/numeric.hpp"
#include "drnet/regress.hpp"
#include "drnet/theory.hpp"

namespace drnet {

namespace {

using nlohmann::json;

const std::vector<std::string> kExperiments{"approx-rate", "learn-rate", "cover-bound", "decompose",
                                            "construct",   "gen-data",   "train"};

constexpr std::size_t kMaxTotalAtoms = 200'000'000;

template <class T>
T get_field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("field '") + key + "': wrong type");
    }
}

template <class T>
std::vector<T> get_grid(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError(std::string("field '") + key + "': expected an array");
    std::vector<T> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(std::string("field '") + key + "': entries must be numbers");
        if constexpr (std::is_integral_v<T>) {
            if (!e.is_number_unsigned() || e.get<T>() == 0)
                throw ConfigError(std::string("field '") + key + "': entries must be positive integers");
        }
        out.push_back(e.get<T>());
    }
    return out;
}

void require_grid(bool nonempty, const char* key) {
    if (!nonempty) throw ConfigError(std::string("field '") + key + "': grid must be nonempty");
}

TargetFunctional composite_target(const ExperimentConfig& c) {
    auto t = shipped_target(c.targets.front());
    if (t.kind != TargetKind::PolyComposite && t.kind != TargetKind::Radial)
        throw ConfigError("field 'target': '" + t.id + "' has no (2,3) construction; use a composite target");
    return t;
}

MetaDistribution meta_for(const ExperimentConfig& c) {
    return MetaDistribution::make(composite_target(c), c.noise, {}, c.n_ref);
}

TrainableMask mask_for(const ExperimentConfig& c, const DistributionNet& net) {
    if (c.mask == "all") return TrainableMask::all(net);
    if (c.mask == "head") return TrainableMask::head(net);
    return TrainableMask::output_only(net);
}

TrainOptions train_options(const ExperimentConfig& c, const DistributionNet& net) {
    TrainOptions o;
    o.epochs = c.epochs;
    o.step = c.step;
    o.mask = mask_for(c, net);
    return o;
}

std::string fmt(double v) { return format_double(v); }

void check_capacity(std::size_t m, std::size_t n) {
    if (static_cast<double>(m) * static_cast<double>(n) > static_cast<double>(kMaxTotalAtoms))
        throw CapacityError("m * n = " + std::to_string(m) + " * " + std::to_string(n) + " exceeds the atom cap");
}

}  // namespace

void ExperimentConfig::validate() const {
    if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end())
        throw ConfigError("field 'experiment': unknown experiment '" + experiment + "'");
    for (const auto& id : targets) shipped_target(id);
    if (!(noise >= 0.0)) throw ConfigError("field 'noise': must be nonnegative");
    if (n_ref == 0) throw ConfigError("field 'n_ref': must be positive");
    if (!(step > 0.0)) throw ConfigError("field 'step': must be positive");
    if (mask != "all" && mask != "head" && mask != "output") throw ConfigError("field 'mask': all, head or output");
    if (rhat != "proof" && rhat != "statement") throw ConfigError("field 'rhat': proof or statement");
    if (mc_size < 2) throw ConfigError("field 'mc_size': must be at least 2");
    if (runs == 0) throw ConfigError("field 'runs': must be positive");
    if (!(N_mult > 0.0 && n_mult > 0.0 && n_exponent >= 0.0))
        throw ConfigError("fields 'N_mult', 'n_mult' must be positive and 'n_exponent' nonnegative");

    const bool needs_target = experiment != "cover-bound";
    if (needs_target) require_grid(!targets.empty(), "target");
    if (experiment == "approx-rate" || experiment == "construct" || experiment == "cover-bound" ||
        experiment == "decompose" || experiment == "train")
        require_grid(!N_grid.empty(), "N");
    if (experiment == "learn-rate") {
        require_grid(!m_grid.empty(), "m");
        if (m_grid.size() > 1) {
            const auto [lo, hi] = std::minmax_element(m_grid.begin(), m_grid.end());
            if (m_grid.size() < 4 || *hi < 8 * *lo)
                throw ConfigError("field 'm': a slope fit needs at least 4 values spanning a factor of 8");
        }
    }
    if (experiment == "decompose" || experiment == "gen-data" || (experiment == "train" && data_dir.empty())) {
        require_grid(!m_grid.empty(), "m");
        require_grid(!n_grid.empty(), "n");
    }
    if (experiment == "cover-bound") {
        require_grid(!eps_grid.empty(), "eps");
        for (double e : eps_grid)
            if (!(e > 0.0)) throw ConfigError("field 'eps': entries must be positive");
        if (targets.empty() && !(R >= 1.0)) throw ConfigError("field 'R': needs R >= 1 when no target is given");
        if (d == 0 || q == 0) throw ConfigError("fields 'd', 'q': must be positive");
    }
    if (experiment == "gen-data" && out.empty()) throw ConfigError("field 'out': gen-data needs an output directory");
}

std::string ExperimentConfig::canonical() const {
    json j;
    j["experiment"] = experiment;
    j["targets"] = targets;
    j["N"] = N_grid;
    j["m"] = m_grid;
    j["n"] = n_grid;
    j["eps"] = eps_grid;
    j["seed"] = seed;
    j["noise"] = noise;
    j["n_ref"] = n_ref;
    j["suite_size"] = suite_size;
    j["epochs"] = epochs;
    j["step"] = step;
    j["mask"] = mask;
    j["mc_size"] = mc_size;
    j["runs"] = runs;
    j["data"] = data_dir;
    j["N_mult"] = N_mult;
    j["n_mult"] = n_mult;
    j["n_exponent"] = n_exponent;
    j["d"] = d;
    j["q"] = q;
    j["R"] = R;
    j["rhat"] = rhat;
    return j.dump();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

ExperimentConfig parse_config(std::string_view text, std::string_view source, bool check) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& ex) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < ex.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON syntax error");
    }
    if (!j.is_object()) throw ConfigError(std::string(source) + ": top level must be an object");

    ExperimentConfig c;
    static const std::vector<std::string> known{
        "experiment", "target", "targets",    "N",   "m", "n",     "eps",  "seed",       "out",
        "jobs",       "noise",  "n_ref",      "suite_size", "epochs", "step", "mask", "mc_size", "runs",
        "data",       "net_out", "N_mult",    "n_mult", "n_exponent", "d", "q", "R", "rhat"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(std::string(source) + ": unknown field '" + key + "'");

    try {
        if (!j.contains("experiment")) throw ConfigError("field 'experiment': missing");
        c = default_config(get_field<std::string>(j, "experiment"));
        if (j.contains("target") && j.contains("targets"))
            throw ConfigError("fields 'target' and 'targets' are exclusive");
        if (j.contains("target")) c.targets = {get_field<std::string>(j, "target")};
        if (j.contains("targets")) c.targets = get_field<std::vector<std::string>>(j, "targets");
        if (j.contains("N")) c.N_grid = get_grid<std::size_t>(j, "N");
        if (j.contains("m")) c.m_grid = get_grid<std::size_t>(j, "m");
        if (j.contains("n")) c.n_grid = get_grid<std::size_t>(j, "n");
        if (j.contains("eps")) c.eps_grid = get_grid<double>(j, "eps");
        if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
        if (j.contains("out")) c.out = get_field<std::string>(j, "out");
        if (j.contains("jobs")) c.jobs = get_field<std::size_t>(j, "jobs");
        if (j.contains("noise")) c.noise = get_field<double>(j, "noise");
        if (j.contains("n_ref")) c.n_ref = get_field<std::size_t>(j, "n_ref");
        if (j.contains("suite_size")) c.suite_size = get_field<std::size_t>(j, "suite_size");
        if (j.contains("epochs")) c.epochs = get_field<std::size_t>(j, "epochs");
        if (j.contains("step")) c.step = get_field<double>(j, "step");
        if (j.contains("mask")) c.mask = get_field<std::string>(j, "mask");
        if (j.contains("mc_size")) c.mc_size = get_field<std::size_t>(j, "mc_size");
        if (j.contains("runs")) c.runs = get_field<std::size_t>(j, "runs");
        if (j.contains("data")) c.data_dir = get_field<std::string>(j, "data");
        if (j.contains("net_out")) c.net_out = get_field<std::string>(j, "net_out");
        if (j.contains("N_mult")) c.N_mult = get_field<double>(j, "N_mult");
        if (j.contains("n_mult")) c.n_mult = get_field<double>(j, "n_mult");
        if (j.contains("n_exponent")) c.n_exponent = get_field<double>(j, "n_exponent");
        if (j.contains("d")) c.d = get_field<std::size_t>(j, "d");
        if (j.contains("q")) c.q = get_field<unsigned>(j, "q");
        if (j.contains("R")) c.R = get_field<double>(j, "R");
        if (j.contains("rhat")) c.rhat = get_field<std::string>(j, "rhat");
        if (check) c.validate();
    } catch (const ConfigError& ex) {
        throw ConfigError(std::string(source) + ": " + ex.what());
    }
    return c;
}

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig c;
    c.experiment = experiment;
    if (experiment == "approx-rate") {
        c.targets = shipped_target_ids();
        c.N_grid = {2, 4, 8, 16, 32};
    } else if (experiment == "construct") {
        c.targets = {"poly-saddle"};
        c.N_grid = {4};
    } else if (experiment == "learn-rate") {
        c.targets = {"radial-sin"};
        c.m_grid = {64, 128, 256, 512, 1024};
        c.n_ref = 1024;
    } else if (experiment == "cover-bound") {
        c.targets = {"radial-sin"};
        c.N_grid = {1, 2, 4, 8, 16, 32};
        c.eps_grid = {1e-3, 1e-2, 1e-1, 1.0};
    } else if (experiment == "decompose") {
        c.targets = {"radial-sin"};
        c.m_grid = {64};
        c.n_grid = {64};
        c.N_grid = {3};
        c.runs = 20;
        c.mc_size = 500;
        c.n_ref = 512;
        c.epochs = 50;
    } else if (experiment == "gen-data") {
        c.targets = {"radial-sin"};
        c.m_grid = {16};
        c.n_grid = {32};
    } else if (experiment == "train") {
        c.targets = {"radial-sin"};
        c.m_grid = {64};
        c.n_grid = {64};
        c.N_grid = {4};
        c.n_ref = 512;
    } else {
        throw ConfigError("field 'experiment': unknown experiment '" + experiment + "'");
    }
    return c;
}

std::string csv_banner(const ExperimentConfig& config) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config.hash()));
    return std::string("# drnet ") + DRNET_VERSION + " experiment=" + config.experiment + " config=" + hex + "\n";
}

LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("log-log fit needs at least two points");
    const std::size_t k = x.size();
    std::vector<double> lx(k), ly(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw ParameterError("log-log fit needs positive values");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (k > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double r = ly[i] - fit.intercept - fit.slope * lx[i];
            rss += r * r;
        }
        const double se = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
        boost::math::students_t dist(static_cast<double>(k - 2));
        fit.halfwidth = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
    }
    return fit;
}

RunResult run_approx_rate(const ExperimentConfig& c) {
    std::ostringstream os;
    os << csv_banner(c) << "target,N,measured,bound,ratio,param_count,R\n";
    RunResult res;
    std::size_t violations = 0;
    for (const auto& id : c.targets) {
        const auto t = shipped_target(id);
        for (std::size_t N : c.N_grid) {
            const auto r = construct(t, N, c.seed, c.suite_size);
            const double ratio = r.claimed_bound > 0.0 ? r.measured_error / r.claimed_bound
                                                       : (r.measured_error > 0.0 ? INFINITY : 0.0);
            os << id << "," << N << "," << fmt(r.measured_error) << "," << fmt(r.claimed_bound) << "," << fmt(ratio)
               << "," << r.param_count << "," << (r.is_three_layer() ? fmt(r.R) : "nan") << "\n";
            if (!(r.measured_error <= r.claimed_bound + 1e-9)) ++violations;
        }
    }
    res.csv = os.str();
    if (violations) {
        res.exit_code = kExitBoundViolation;
        res.message = std::to_string(violations) + " grid point(s) exceed the claimed bound";
    }
    return res;
}

RunResult run_construct(const ExperimentConfig& c) {
    std::ostringstream os;
    os << csv_banner(c);
    write_report_header(os);
    RunResult res;
    std::size_t failures = 0;
    for (const auto& id : c.targets) {
        const auto t = shipped_target(id);
        for (std::size_t N : c.N_grid) {
            const auto r = construct(t, N, c.seed, c.suite_size);
            write_report_row(os, r);
            if (!r.pass()) {
                ++failures;
                if (!r.violation.empty()) res.message += id + " N=" + std::to_string(N) + ": " + r.violation + "\n";
            }
            if (!c.net_out.empty()) {
                std::filesystem::create_directories(c.net_out);
                save_net(std::filesystem::path(c.net_out) / (id + "_N" + std::to_string(N) + ".json"), r.net);
            }
        }
    }
    res.csv = os.str();
    if (failures) {
        res.exit_code = kExitBoundViolation;
        res.message += std::to_string(failures) + " construction(s) failed";
    }
    return res;
}

RunResult run_learn_rate(const ExperimentConfig& c) {
    const auto meta = meta_for(c);
    const double beta = meta.target.beta();
    const double inv = 1.0 / (2.0 * beta + 1.0);
    const auto fresh = generate(meta, c.mc_size, 1, derive_seed(c.seed, 0xF4E5));

    std::ostringstream os;
    os << csv_banner(c)
       << "m,N,n,theory_N,theory_n_min,restriction_ok,excess_risk,stderr,bound_sq,train_loss\n";
    std::vector<double> ms, risks;
    for (std::size_t m : c.m_grid) {
        const double md = static_cast<double>(m);
        const auto N = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(c.N_mult * std::pow(md, inv) * (1.0 + 1e-12))));
        const auto n = static_cast<std::size_t>(std::ceil(c.n_mult * std::pow(md, c.n_exponent) * (1.0 - 1e-12)));
        check_capacity(m, n);
        const auto ws = warm_start(meta, N, c.seed);
        const auto theory = rate_schedule(md, theory_constants_for(ws, meta.M));
        const auto data = generate(meta, m, std::max<std::size_t>(n, 1), derive_seed(c.seed, m));
        const HypothesisSpaceSpec spec{ws.R, N};
        const auto trained = erm_train(data, spec, ws.net, train_options(c, ws.net));
        const auto risk = excess_risk(trained.net, fresh, meta.M);
        os << m << "," << N << "," << n << "," << theory.N << ","
           << (theory.n_saturated ? std::string("inf") : std::to_string(theory.n_min)) << ","
           << (theory.restriction_ok ? "true" : "false") << "," << fmt(risk.mean) << "," << fmt(risk.se) << ","
           << fmt(ws.claimed_bound * ws.claimed_bound) << "," << fmt(trained.final_loss) << "\n";
        ms.push_back(md);
        risks.push_back(risk.mean);
    }
    RunResult res;
    if (ms.size() >= 2 && std::all_of(risks.begin(), risks.end(), [](double r) { return r > 0.0; })) {
        const auto fit = loglog_fit(ms, risks);
        res.slope = fit.slope;
        res.slope_halfwidth = fit.halfwidth;
        os << "# slope=" << fmt(fit.slope) << " halfwidth=" << (fit.halfwidth ? fmt(*fit.halfwidth) : "nan")
           << " target=" << fmt(-2.0 * beta / (2.0 * beta + 1.0)) << "\n";
    } else {
        os << "# slope=absent\n";
        res.message = "slope not fitted: fewer than two positive points";
    }
    res.csv = os.str();
    return res;
}

RunResult run_cover_bound(const ExperimentConfig& c) {
    std::size_t d = c.d;
    unsigned q = c.q;
    double R = c.R;
    if (!c.targets.empty()) {
        const auto t = composite_target(c);
        const auto r = build(t, 1, c.seed);
        d = r.dim;
        q = r.degree;
        if (R == 0.0) R = r.R;
    }
    const auto variant = c.rhat == "proof" ? RhatVariant::Proof : RhatVariant::Statement;
    std::ostringstream os;
    os << csv_banner(c) << "# d=" << d << " q=" << q << " R=" << fmt(R) << " R_hat=" << fmt(r_hat(R, d, q, variant))
       << " T1=" << fmt(covering_T1(d, q)) << " T2=" << fmt(covering_T2(d, q)) << "\n"
       << "N,eps,bound,clamped\n";
    for (std::size_t N : c.N_grid)
        for (double eps : c.eps_grid) {
            const auto b = covering_bound(HypothesisSpaceSpec{R, N}, d, q, eps, variant);
            os << N << "," << fmt(eps) << "," << fmt(b.value) << "," << (b.clamped ? "true" : "false") << "\n";
        }
    RunResult res;
    res.csv = os.str();
    return res;
}

RunResult run_decompose(const ExperimentConfig& c) {
    const auto meta = meta_for(c);
    const std::size_t m = c.m_grid.front(), n = c.n_grid.front(), N = c.N_grid.front();
    check_capacity(m, n);
    const auto ws = warm_start(meta, N, c.seed);
    const HypothesisSpaceSpec spec{ws.R, N};
    std::ostringstream os;
    os << csv_banner(c) << "run,I1,I2,I3,I4,R,excess,se_combined,bound,slack,holds\n";
    RunResult res;
    std::size_t failures = 0;
    for (std::size_t run = 0; run < c.runs; ++run) {
        const auto s = derive_seed(c.seed, 1000 + run);
        const auto data = generate(meta, m, n, s);
        const auto trained = erm_train(data, spec, ws.net, train_options(c, ws.net));
        const auto d = decompose_error(trained.net, ws.net, data, meta, c.mc_size, derive_seed(s, 1));
        os << run << "," << fmt(d.I1) << "," << fmt(d.I2) << "," << fmt(d.I3) << "," << fmt(d.I4) << ","
           << fmt(d.R) << "," << fmt(d.excess) << "," << fmt(d.se_combined) << "," << fmt(d.bound()) << ","
           << fmt(d.slack) << "," << (d.holds() ? "true" : "false") << "\n";
        if (!d.holds()) ++failures;
    }
    res.csv = os.str();
    if (failures) {
        res.exit_code = kExitBoundViolation;
        res.message = std::to_string(failures) + " run(s) violate the decomposition inequality";
    }
    return res;
}

RunResult run_gen_data(const ExperimentConfig& c) {
    const auto t = shipped_target(c.targets.front());
    const auto meta = MetaDistribution::make(t, c.noise, {}, c.n_ref);
    const std::size_t m = c.m_grid.front(), n = c.n_grid.front();
    check_capacity(m, n);
    const auto data = generate(meta, m, n, c.seed);
    save_dataset(c.out, data);
    RunResult res;
    res.message = "wrote " + std::to_string(m) + " entries to " + c.out;
    return res;
}

RunResult run_train(const ExperimentConfig& c) {
    const auto meta = meta_for(c);
    TwoStageDataset data;
    if (!c.data_dir.empty()) {
        data = load_dataset(c.data_dir);
        if (data.target_id != meta.target.id)
            throw ConfigError("field 'data': dataset was generated for '" + data.target_id + "'");
    } else {
        check_capacity(c.m_grid.front(), c.n_grid.front());
        data = generate(meta, c.m_grid.front(), c.n_grid.front(), c.seed);
    }
    const std::size_t N = c.N_grid.front();
    const auto ws = warm_start(meta, N, c.seed);
    const HypothesisSpaceSpec spec{ws.R, N};
    const auto trained = erm_train(data, spec, ws.net, train_options(c, ws.net));
    if (!c.net_out.empty()) save_net(c.net_out, trained.net);
    std::ostringstream os;
    os << csv_banner(c) << "step,loss\n0," << fmt(trained.initial_loss) << "\n";
    for (std::size_t k = 0; k < trained.history.size(); ++k) os << k + 1 << "," << fmt(trained.history[k]) << "\n";
    RunResult res;
    res.csv = os.str();
    res.message = "second-stage error " + fmt(trained.initial_loss) + " -> " + fmt(trained.final_loss) +
                  "; truncated reference error " +
                  fmt(empirical_error(trained.net, data, Stage::FirstStageReference, data.M));
    return res;
}

RunResult run_experiment(const ExperimentConfig& config) {
    RunResult res;
    try {
        config.validate();
        const auto& e = config.experiment;
        if (e == "approx-rate") return run_approx_rate(config);
        if (e == "construct") return run_construct(config);
        if (e == "learn-rate") return run_learn_rate(config);
        if (e == "cover-bound") return run_cover_bound(config);
        if (e == "decompose") return run_decompose(config);
        if (e == "gen-data") return run_gen_data(config);
        return run_train(config);
    } catch (const CapacityError& ex) {
        res.exit_code = kExitCapacity;
        res.message = ex.what();
    } catch (const ConfigError& ex) {
        res.exit_code = kExitConfig;
        res.message = ex.what();
    } catch (const ParameterError& ex) {
        res.exit_code = kExitConfig;
        res.message = ex.what();
    } catch (const PreconditionError& ex) {
        res.exit_code = kExitConfig;
        res.message = ex.what();
    } catch (const std::exception& ex) {
        res.exit_code = kExitFailure;
        res.message = ex.what();
    }
    return res;
}

}  // namespace drnet
