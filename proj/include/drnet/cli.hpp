#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drnet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBoundViolation = 3;
inline constexpr int kExitCapacity = 4;

/// One experiment; parsed from a JSON object, command-line flags override file values.
struct ExperimentConfig {
    std::string experiment;  // approx-rate | learn-rate | cover-bound | decompose | construct | gen-data | train
    std::vector<std::string> targets;
    std::vector<std::size_t> N_grid;
    std::vector<std::size_t> m_grid;
    std::vector<std::size_t> n_grid;
    std::vector<double> eps_grid;
    std::uint64_t seed = 1;
    std::string out;
    std::size_t jobs = 0;  // 0 keeps the OpenMP default

    // data and training
    double noise = 0.1;
    std::size_t n_ref = 4096;
    std::size_t suite_size = 240;
    std::size_t epochs = 200;
    double step = 1e-3;
    std::string mask = "head";  // all | head | output
    std::size_t mc_size = 2000;
    std::size_t runs = 1;
    std::string data_dir;  // train: existing dataset directory
    std::string net_out;   // train, construct: where to write the network JSON

    // learn-rate schedule: N = max(1, floor(N_mult m^{1/(2 beta + 1)})), n = ceil(n_mult m^{n_exponent})
    double N_mult = 1.0;
    double n_mult = 1.0;
    double n_exponent = 1.0;

    // cover-bound without a target
    std::size_t d = 2;
    unsigned q = 2;
    double R = 0.0;  // 0 takes R from the first target's construction
    std::string rhat = "proof";  // proof | statement

    /// Throws ConfigError naming the field for missing or inconsistent entries.
    void validate() const;
    /// Canonical JSON of every field that affects results (excludes out and jobs).
    std::string canonical() const;
    std::uint64_t hash() const;
};

/// Parse JSON text; syntax errors report line and column, field errors name the field.
/// Pass check = false when flags are merged afterwards; validate() then runs on the merged config.
ExperimentConfig parse_config(std::string_view text, std::string_view source = "config", bool check = true);
ExperimentConfig default_config(const std::string& experiment);

struct RunResult {
    std::string csv;
    int exit_code = kExitOk;
    std::string message;
    std::optional<double> slope;  // learn-rate fit
    std::optional<double> slope_halfwidth;
};

/// "# drnet <version> experiment=<id> config=<16 hex digits>"
std::string csv_banner(const ExperimentConfig& config);

RunResult run_approx_rate(const ExperimentConfig& config);
RunResult run_construct(const ExperimentConfig& config);
RunResult run_learn_rate(const ExperimentConfig& config);
RunResult run_cover_bound(const ExperimentConfig& config);
RunResult run_decompose(const ExperimentConfig& config);
RunResult run_gen_data(const ExperimentConfig& config);
RunResult run_train(const ExperimentConfig& config);

/// Dispatch on config.experiment; library errors are mapped to exit codes.
RunResult run_experiment(const ExperimentConfig& config);

/// OLS slope of log y on log x with the 95% t half-width; nullopt half-width for two points.
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::optional<double> halfwidth;
};
LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace drnet
