#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxvi/metrics.hpp"
#include "proxvi/optimizer.hpp"
#include "proxvi/targets.hpp"

namespace proxvi {

struct TargetSpec {
    TargetKind kind = TargetKind::gaussian;
    int dim = 0;   // gaussian / gaussian_mixture
    int order = 2; // gaussian_mixture
    int n = 200;   // Bayesian train size
    int p = 5;     // bayes_logistic feature count
    int hidden_dim = 16;
    int classes = 3;
    int test_n = 0;
    double prior_variance = 1.0;
    double tau = 1.0;
    std::uint64_t data_seed = 2024;
};

struct FamilySpec {
    std::string family = "gauss_full"; // gauss_diag | gauss_full | gauss_mixture | planar_flow
    int k = 2;                         // mixture components
    double gumbel_temperature = 0.05;
    std::string init = "random"; // random | small_eig
    double small_eig_value = 1e-4;
};

struct AlgorithmSpec {
    std::vector<std::string> algos{"proximal_sm"}; // proximal_sm | advi | perfect_min
    long outer_iterations = 500;                   // T; also the advi iteration count
    long inner_steps = 20;                         // N
    std::vector<int> mc_samples{1};                // S sweep
    double eta = 0.1;
    double advi_eta = 0.0; // 0 = same as eta
    OptimizerConfig optimizer;
    std::vector<AlphaSchedule> schedules{AlphaSchedule{}};
    bool reset_inner_optimizer = false;
    int batch_size = 0; // 0 = full data
};

struct ExperimentConfig {
    std::string name = "experiment";
    TargetSpec target;
    FamilySpec family;
    AlgorithmSpec algorithm;
    MetricSchedule metrics;
    std::vector<double> betas{0.0};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::string output_dir = "out";
};

struct ConfigError {
    enum class Kind { parse, validation };
    Kind kind = Kind::parse;
    int line = 0; // 0 when no specific line applies
    std::string key;
    std::string message;
};

struct ParseResult {
    std::optional<ExperimentConfig> config;
    std::vector<ConfigError> errors; // all of them, not just the first
    bool ok() const { return config.has_value() && errors.empty(); }
};

/// Parses the sectioned key=value config syntax, fills defaults, validates
/// cross-field consistency, and collects every error it finds.
ParseResult parse_config(const std::string& text);

/// Fixed-order serialization of every resolved field; input to run_id hashing
/// and useful for diffing resolved configs.
std::string canonical_form(const ExperimentConfig& cfg);

/// Named, fully specified desk-scale experiment. UnknownPreset for bad names.
ExperimentConfig preset(const std::string& name);
/// (name, one-line description) for every preset, in catalog order.
std::vector<std::pair<std::string, std::string>> preset_catalog();
/// Raw config text of a preset (what preset() parses).
std::string preset_text(const std::string& name);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view text);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

} // namespace proxvi
