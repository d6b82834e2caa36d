#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "drnet/measure.hpp"

namespace drnet {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kMaxWidth = 4096;

struct Layer {
    RowMatrix F;        // d_j x d_{j-1}
    Eigen::VectorXd b;  // d_j
};

/// Distribution-input ReLU network of type (J1, J).
///
/// Layers 1..J1 act on each atom, their outputs are averaged over the measure,
/// layers J1+1..J act on the average, and the output is c . h^(J).
/// Pre-activations are F h - b.
class DistributionNet {
public:
    DistributionNet() = default;
    DistributionNet(std::size_t input_dim, std::size_t realizing_level, std::vector<Layer> layers,
                    Eigen::VectorXd c);

    /// All-zero network with the given widths d_1..d_J.
    static DistributionNet zeros(std::size_t input_dim, std::size_t realizing_level,
                                 const std::vector<std::size_t>& widths);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t depth() const { return layers_.size(); }
    std::size_t realizing_level() const { return level_; }
    std::size_t width(std::size_t j) const;  // j = 0 gives d
    std::vector<std::size_t> widths() const;  // d_0 = d, d_1, ..., d_J
    std::size_t parameter_total() const;

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    const Layer& layer(std::size_t j) const { return layers_.at(j - 1); }  // 1-based
    Layer& layer(std::size_t j) { return layers_.at(j - 1); }
    const Eigen::VectorXd& c() const { return c_; }
    Eigen::VectorXd& c() { return c_; }

    /// Averaged level-J1 features; atoms processed in parallel, summed in index order.
    Eigen::VectorXd integrated_features(const EmpiricalMeasure& mu) const;
    double forward(const EmpiricalMeasure& mu) const;
    /// Single-threaded evaluation with the same arithmetic as forward().
    double forward_reference(const EmpiricalMeasure& mu) const;
    /// Plain vector network at x (no averaging branch).
    double forward_point(std::span<const double> x) const;

    /// Throws ShapeError if dimensions are inconsistent.
    void validate() const;

private:
    Eigen::VectorXd post_integration(const Eigen::VectorXd& h) const;

    std::size_t input_dim_ = 0;
    std::size_t level_ = 1;
    std::vector<Layer> layers_;
    Eigen::VectorXd c_;
};

/// Gradient of the scalar output with respect to every parameter.
struct NetGradient {
    std::vector<RowMatrix> dF;
    std::vector<Eigen::VectorXd> db;
    Eigen::VectorXd dc;

    static NetGradient zeros_like(const DistributionNet& net);
    void add_scaled(const NetGradient& other, double scale);
};

/// Output and its gradient; ReLU derivative at 0 is taken as 0.
/// Per-atom terms are accumulated in fixed blocks so the result does not depend on thread count.
double forward_with_gradient(const DistributionNet& net, const EmpiricalMeasure& mu, NetGradient& grad);

struct ParamNorms {
    std::vector<double> F_inf;  // max row l1 norm per layer
    std::vector<double> b_inf;
    double c_inf = 0.0;
};

/// max_r sum_c |A_rc|
double matrix_inf_norm(const RowMatrix& A);
ParamNorms param_norms(const DistributionNet& net);

/// Constraint set |F|_inf <= R N^2, |b|_inf <= R, |c|_inf <= R N on (2,3) nets with d2 = d3 = 2N+3.
struct HypothesisSpaceSpec {
    double R = 1.0;
    std::size_t N = 1;
    void validate() const;
};

/// Per-constraint verdict; `first_violation` names the offending layer when membership fails.
struct MembershipReport {
    bool member = false;
    std::string first_violation;
};

MembershipReport check_membership(const DistributionNet& net, const HypothesisSpaceSpec& spec);
bool in_hypothesis_space(const DistributionNet& net, const HypothesisSpaceSpec& spec);

double project_M(double value, double M);

/// (2N+3) |c|_inf prod_j |F^(j)|_inf; a Lipschitz constant in W_1 for members of the space.
double lipschitz_certificate(const DistributionNet& net, const HypothesisSpaceSpec& spec);
/// (2N+3)(2R^4 + R^3 + R^2) N^7
double uniform_bound(const HypothesisSpaceSpec& spec);

std::string to_json(const DistributionNet& net);
DistributionNet from_json(const std::string& text);
void save_net(const std::filesystem::path& path, const DistributionNet& net);
DistributionNet load_net(const std::filesystem::path& path);

}  // namespace drnet
