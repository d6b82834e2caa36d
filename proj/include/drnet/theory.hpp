#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "drnet/construct.hpp"
#include "drnet/dfnn.hpp"

namespace drnet {

/// Which value of R-hat to use in the covering bounds.
/// Proof: 15 R^4 (10 n_q + d + 18). Statement: 3 R^4 (10 n_q + d + 18).
enum class RhatVariant { Proof, Statement };

double covering_T1(std::size_t d, unsigned q);  // (d+q) n_q + 5q + 5
double covering_T2(std::size_t d, unsigned q);  // 9 (d+q) n_q + 45q + 190
double r_hat(double R, std::size_t d, unsigned q, RhatVariant variant = RhatVariant::Proof);

struct CoveringBound {
    double value = 0.0;     // natural log of the covering number bound, >= 0
    double raw = 0.0;       // the formula before clamping
    bool clamped = false;   // eps >= R-hat: the log term is nonpositive
};

/// log N(H_{(2,3),R,N}, eps) <= T1 N log(R-hat / eps) + T2 N log N
CoveringBound covering_bound(const HypothesisSpaceSpec& spec, std::size_t d, unsigned q, double eps,
                             RhatVariant variant = RhatVariant::Proof);
/// Same form for the class of first output coordinates of the two per-atom layers.
CoveringBound h2_covering_bound(const HypothesisSpaceSpec& spec, std::size_t d, unsigned q, double eps,
                                RhatVariant variant = RhatVariant::Proof);
/// sup |H_2| <= 3 R^2 N^4 over that class.
double h2_sup_bound(const HypothesisSpaceSpec& spec);

/// 2 B_G^beta |f| + (3 B_Q |g|)^beta |f|
double c1_constant(const TargetConstants& k);

struct TheoryConstants {
    std::size_t d = 1;
    unsigned q = 1;
    std::uint64_t nq = 1;
    double T1 = 0.0;
    double T2 = 0.0;
    double R = 1.0;
    double R_hat = 0.0;
    double M = 1.0;
    double beta = 1.0;
    double C1 = 0.0;
    double A1 = 0.0, A2 = 0.0, A3 = 0.0, A4 = 0.0, A5 = 0.0, A6 = 0.0, A7 = 0.0;
};

/// Throws ParameterError unless R >= 1, M > 0, C1 > 0, beta in (0, 1] and A1, A2 > 0.
TheoryConstants make_theory_constants(std::size_t d, unsigned q, double R, double M, double beta, double C1,
                                      RhatVariant variant = RhatVariant::Proof);
/// From a composite construction: its d, degree, R and C1; throws PreconditionError for ridge reports.
TheoryConstants theory_constants_for(const ConstructionReport& report, double M,
                                     RhatVariant variant = RhatVariant::Proof);

struct OracleRhs {
    std::array<double, 3> log_terms{};  // exponents of the three terms
    std::array<double, 3> terms{};      // exp of each, clamped to [0, 3]
    double log_value = 0.0;             // log of the unclamped sum, finite even when the terms underflow
    double value = 0.0;                 // min(3, sum)
};

/// Right-hand side of the oracle inequality for a given h with |h|_inf = h_norm and |h - f_rho|^2 = h_dist.
OracleRhs oracle_rhs(double m, double n, std::size_t N, double eps, const TheoryConstants& k, double h_norm,
                     double h_dist);

struct RateSchedule {
    double N_target = 0.0;      // A4 m^{1/(2 beta + 1)}
    std::size_t N = 1;          // floor of the target, at least 1
    bool N_clamped = false;
    double n_target = 0.0;      // A5 m^{(4 beta + 17)/(2 beta + 1)}
    std::uint64_t n_min = 0;    // ceiling, saturated at UINT64_MAX
    bool n_saturated = false;
    bool restriction_ok = false;  // log(4m) <= A6 m^{1/(2 beta + 1)}
};

RateSchedule rate_schedule(double m, const TheoryConstants& k);
/// A7 m^{-2 beta/(2 beta + 1)} log m
double excess_risk_bound(double m, const TheoryConstants& k);

/// |L(mu) - L(nu)| <= |g|_{Lip} sup |grad Q|_2 W1(mu, nu) for the inner functional of a composite target.
double continuity_bound(double g_lip, double grad_Q_sup, double w1);

}  // namespace drnet
