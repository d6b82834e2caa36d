#include "drnet/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drnet/error.hpp"
#include "drnet/ridgedecomp.hpp"

namespace drnet {

namespace {

void check_dims(std::size_t d, unsigned q) {
    if (d == 0) throw ParameterError("dimension must be positive");
    if (q == 0) throw ParameterError("polynomial degree must be positive");
}

double capped_exp(double x) { return x > std::log(3.0) ? 3.0 : std::exp(x); }

CoveringBound covering_form(const HypothesisSpaceSpec& spec, std::size_t d, unsigned q, double eps,
                            RhatVariant variant) {
    spec.validate();
    if (!(eps > 0.0)) throw ParameterError("covering radius must be positive");
    if (spec.R < 1.0) throw ParameterError("covering bounds need R >= 1");
    const double N = static_cast<double>(spec.N);
    const double Rh = r_hat(spec.R, d, q, variant);
    CoveringBound out;
    out.raw = covering_T1(d, q) * N * std::log(Rh / eps) + covering_T2(d, q) * N * std::log(N);
    out.clamped = eps >= Rh;
    out.value = std::max(out.raw, 0.0);
    return out;
}

}  // namespace

double covering_T1(std::size_t d, unsigned q) {
    check_dims(d, q);
    return static_cast<double>(d + q) * static_cast<double>(n_q(d, q)) + 5.0 * q + 5.0;
}

double covering_T2(std::size_t d, unsigned q) {
    check_dims(d, q);
    return 9.0 * static_cast<double>(d + q) * static_cast<double>(n_q(d, q)) + 45.0 * q + 190.0;
}

double r_hat(double R, std::size_t d, unsigned q, RhatVariant variant) {
    check_dims(d, q);
    const double base = 10.0 * static_cast<double>(n_q(d, q)) + static_cast<double>(d) + 18.0;
    const double lead = variant == RhatVariant::Proof ? 15.0 : 3.0;
    return lead * R * R * R * R * base;
}

CoveringBound covering_bound(const HypothesisSpaceSpec& spec, std::size_t d, unsigned q, double eps,
                             RhatVariant variant) {
    return covering_form(spec, d, q, eps, variant);
}

CoveringBound h2_covering_bound(const HypothesisSpaceSpec& spec, std::size_t d, unsigned q, double eps,
                                RhatVariant variant) {
    return covering_form(spec, d, q, eps, variant);
}

double h2_sup_bound(const HypothesisSpaceSpec& spec) {
    spec.validate();
    const double N = static_cast<double>(spec.N);
    return 3.0 * spec.R * spec.R * N * N * N * N;
}

double c1_constant(const TargetConstants& k) {
    return 2.0 * std::pow(k.B_G, k.beta) * k.f_holder + std::pow(3.0 * k.B_inner * k.g_lip, k.beta) * k.f_holder;
}

TheoryConstants make_theory_constants(std::size_t d, unsigned q, double R, double M, double beta, double C1,
                                      RhatVariant variant) {
    check_dims(d, q);
    if (!(R >= 1.0)) throw ParameterError("R must be at least 1");
    if (!(M > 0.0)) throw ParameterError("output bound M must be positive");
    if (!(C1 > 0.0)) throw ParameterError("C1 must be positive");
    if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in (0, 1]");
    TheoryConstants k;
    k.d = d;
    k.q = q;
    k.nq = n_q(d, q);
    k.T1 = covering_T1(d, q);
    k.T2 = covering_T2(d, q);
    k.R = R;
    k.R_hat = r_hat(R, d, q, variant);
    k.M = M;
    k.beta = beta;
    k.C1 = C1;

    const double C1sq = C1 * C1, Msq = M * M;
    k.A1 = k.T1 * (std::log(8.0 * M * k.R_hat / C1sq) + 2.0 * beta) + k.T2;
    k.A2 = k.T1 * (std::log(40.0 * M * k.R_hat * R * R / C1sq) + 2.0 * beta + 4.0) + k.T2;
    if (!(k.A1 > 0.0 && k.A2 > 0.0)) throw ParameterError("rate constants A1, A2 must be positive");
    k.A3 = 115200.0 * (M + C1) * (M + C1) * std::pow(R, 8);
    const double inv = 1.0 / (2.0 * beta + 1.0);
    k.A4 = std::pow(std::min(3.0 * C1sq / (2048.0 * Msq * k.A1), 3.0 * C1sq / (4096.0 * Msq * k.A2)), inv);
    k.A5 = 3.0 * k.A3 * std::pow(k.A4, 2.0 * beta + 16.0) / (4096.0 * Msq * C1sq);
    k.A6 = 3.0 * C1sq * std::pow(k.A4, -2.0 * beta) / (4096.0 * Msq);
    k.A7 = 18.0 * C1sq * std::pow(2.0, 2.0 * beta) * std::pow(k.A4, -2.0 * beta) * (std::log(k.A4) + inv) +
           2304.0 * (4.0 * M + C1) * (4.0 * M + C1);
    return k;
}

TheoryConstants theory_constants_for(const ConstructionReport& report, double M, RhatVariant variant) {
    if (!report.is_three_layer()) throw PreconditionError("rate constants need a (2,3) construction");
    const double R = report.R > 0.0 ? report.R : parameter_bound_R(report);
    return make_theory_constants(report.dim, report.degree, R, M, report.constants.beta,
                                 c1_constant(report.constants), variant);
}

OracleRhs oracle_rhs(double m, double n, std::size_t N, double eps, const TheoryConstants& k, double h_norm,
                     double h_dist) {
    if (!(m > 0.0 && n > 0.0 && eps > 0.0) || N == 0) throw ParameterError("oracle arguments must be positive");
    if (h_norm < 0.0 || h_dist < 0.0) throw ParameterError("norms must be nonnegative");
    const double Nd = static_cast<double>(N);
    const double logN = std::log(Nd);
    const double M = k.M, R = k.R;
    OracleRhs out;
    out.log_terms[0] = k.T1 * Nd * std::log(16.0 * M * k.R_hat / eps) + k.T2 * Nd * logN -
                       3.0 * m * eps / (2048.0 * M * M);
    const double s = 3.0 * M + h_norm;
    out.log_terms[1] = -m * eps * eps / (2.0 * s * s * (h_dist + 2.0 * eps / 3.0));
    const double big = std::max(h_norm * h_norm, M * M);
    out.log_terms[2] = std::log(4.0 * m) +
                       k.T1 * Nd * std::log(80.0 * M * k.R_hat * R * R * std::pow(Nd, 4) / eps) +
                       k.T2 * Nd * logN - n * eps * eps / (115200.0 * big * std::pow(R, 8) * std::pow(Nd, 16));
    const double top = std::max({out.log_terms[0], out.log_terms[1], out.log_terms[2]});
    double scaled = 0.0;
    for (double l : out.log_terms) scaled += std::exp(l - top);
    out.log_value = top + std::log(scaled);
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        out.terms[i] = capped_exp(out.log_terms[i]);
        sum += out.terms[i];
    }
    out.value = std::min(3.0, sum);
    return out;
}

RateSchedule rate_schedule(double m, const TheoryConstants& k) {
    if (!(m >= 1.0)) throw ParameterError("first-stage sample size must be at least 1");
    const double inv = 1.0 / (2.0 * k.beta + 1.0);
    RateSchedule s;
    s.N_target = k.A4 * std::pow(m, inv);
    // guard against m^{1/3} style rounding just below an integer
    const double Nf = std::floor(s.N_target * (1.0 + 1e-12));
    s.N_clamped = Nf < 1.0;
    s.N = s.N_clamped ? 1 : static_cast<std::size_t>(Nf);
    s.n_target = k.A5 * std::pow(m, (4.0 * k.beta + 17.0) * inv);
    const double nc = std::ceil(s.n_target);
    s.n_saturated = !(nc < 18446744073709551615.0);
    s.n_min = s.n_saturated ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(nc);
    s.restriction_ok = std::log(4.0 * m) <= k.A6 * std::pow(m, inv);
    return s;
}

double excess_risk_bound(double m, const TheoryConstants& k) {
    if (!(m >= 1.0)) throw ParameterError("first-stage sample size must be at least 1");
    return k.A7 * std::pow(m, -2.0 * k.beta / (2.0 * k.beta + 1.0)) * std::log(m);
}

double continuity_bound(double g_lip, double grad_Q_sup, double w1) { return g_lip * grad_Q_sup * w1; }

}  // namespace drnet
