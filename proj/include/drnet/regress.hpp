#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drnet/construct.hpp"
#include "drnet/dfnn.hpp"
#include "drnet/measure.hpp"
#include "drnet/numeric.hpp"
#include "drnet/targets.hpp"

namespace drnet {

/// Prior over input distributions: a truncated Gaussian or a uniform sub-ball,
/// centred uniformly in the ball of radius `center_radius`, scale uniform in [scale_lo, scale_hi].
struct ParameterPrior {
    double center_radius = 0.6;
    double scale_lo = 0.1;
    double scale_hi = 0.5;
    double gaussian_fraction = 0.5;

    void validate() const;
    DistributionSpec draw(std::size_t d, Rng& rng) const;
};

/// sup of |f_rho| over all probability measures on the ball, from the target's closed-form constants.
double target_sup_bound(const TargetFunctional& target);

struct MetaDistribution {
    TargetFunctional target;
    ParameterPrior prior;
    double noise = 0.0;        // half-width s of the uniform label noise
    double M = 0.0;            // target_sup_bound + s
    std::size_t n_ref = 4096;  // reference sample standing in for mu_i

    static MetaDistribution make(TargetFunctional target, double noise, ParameterPrior prior = {},
                                 std::size_t n_ref = 4096);
};

struct DatasetEntry {
    DistributionSpec spec;
    double y = 0.0;
    double f_ref = 0.0;  // f_rho on the reference sample
    std::uint64_t atoms_seed = 0;
    std::uint64_t ref_seed = 0;
    EmpiricalMeasure sample;     // n second-stage atoms
    EmpiricalMeasure reference;  // n_ref atoms
};

struct TwoStageDataset {
    std::string target_id;
    std::size_t dim = 0;
    std::size_t n = 0;
    std::size_t n_ref = 0;
    double noise = 0.0;
    double M = 0.0;
    std::uint64_t seed = 0;
    ParameterPrior prior;
    std::vector<DatasetEntry> entries;

    std::size_t m() const { return entries.size(); }
};

/// y_i = clamp(f_rho(mu_i) + eps_i, -M, M) with eps_i uniform on [-s, s]; entries drawn in parallel from derived seeds.
TwoStageDataset generate(const MetaDistribution& meta, std::size_t m, std::size_t n, std::uint64_t seed);

/// Directory with meta.json, first_stage.csv and second_stage/<i>.csv; references are regenerated from seeds on load.
void save_dataset(const std::filesystem::path& dir, const TwoStageDataset& data);
TwoStageDataset load_dataset(const std::filesystem::path& dir);
/// first_stage.csv content: i,y,f_ref,family,scale,atoms_seed,ref_seed,c0..c{d-1}
void write_first_stage_csv(std::ostream& os, const TwoStageDataset& data);

enum class Stage { FirstStageReference, SecondStage };

/// (1/m) sum (pi_M(net(mu_i)) - y_i)^2; no truncation when M is empty.
double empirical_error(const DistributionNet& net, const TwoStageDataset& data, Stage which,
                       std::optional<double> M = std::nullopt);

/// Which parameter blocks gradient steps may change.
struct TrainableMask {
    std::vector<bool> F;  // per layer, 0-based
    std::vector<bool> b;
    bool c = true;

    static TrainableMask all(const DistributionNet& net);
    /// Layers after the averaging step and c; lets training reuse the averaged features.
    static TrainableMask head(const DistributionNet& net);
    static TrainableMask output_only(const DistributionNet& net);
    bool per_atom_frozen(const DistributionNet& net) const;
};

struct TrainOptions {
    std::size_t epochs = 100;
    double step = 1e-2;
    double min_step = 1e-12;
    double grow = 1.25;  // step multiplier after an accepted step
    std::optional<TrainableMask> mask;  // defaults to all parameters
};

struct TrainResult {
    DistributionNet net;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> history;  // loss after each accepted step
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double final_step = 0.0;
};

/// Euclidean projection of v onto the l1 ball of the given radius (sorted-threshold method).
void project_l1_ball(std::span<double> v, double radius);
/// Row l1 projection of F, clamps on b and c, applied to the masked blocks.
void project_to_hypothesis_space(DistributionNet& net, const HypothesisSpaceSpec& spec, const TrainableMask& mask);

/// Projected gradient descent on the second-stage empirical error with monotone acceptance.
/// Throws PreconditionError if init is outside the space.
TrainResult erm_train(const TwoStageDataset& data, const HypothesisSpaceSpec& spec, const DistributionNet& init,
                      const TrainOptions& options = {});

/// Construction for the meta-distribution's target, used as the warm start.
ConstructionReport warm_start(const MetaDistribution& meta, std::size_t N, std::uint64_t seed);

struct RiskEstimate {
    double mean = 0.0;
    double se = 0.0;
};

/// |pi_M f - f_rho|^2_rho estimated on the reference measures of a fresh dataset.
RiskEstimate excess_risk(const DistributionNet& net, const TwoStageDataset& fresh, double M);

struct ErrorDecomposition {
    double I1 = 0.0, I2 = 0.0, I3 = 0.0, I4 = 0.0, R = 0.0;
    double excess = 0.0;
    double se_excess = 0.0;
    double se_R = 0.0;
    double se_combined = 0.0;
    double slack = 0.0;  // E_Dhat(h) - E_Dhat(pi_M f)
    std::size_t mc_size = 0;
    std::size_t n_ref = 0;

    double bound() const;  // I1 + I2 + |I3| + |I4| + R
    bool holds() const;    // excess <= bound + 3 se_combined
};

/// Terms of the two-stage decomposition for f = net (truncated at M) and a comparison h in the space.
ErrorDecomposition decompose_error(const DistributionNet& net, const DistributionNet& h, const TwoStageDataset& data,
                                   const MetaDistribution& meta, std::size_t mc_size, std::uint64_t seed);

}  // namespace drnet
