#pragma once

#include <map>
#include <string>

#include "proxvi/families.hpp"
#include "proxvi/metrics.hpp"
#include "proxvi/optimizer.hpp"
#include "proxvi/targets.hpp"
#include "proxvi/trace.hpp"

namespace proxvi {

/// Rng stream key reserved for metric evaluation inside runs, so recording
/// cadence never perturbs the optimization path.
inline constexpr std::uint64_t kMetricStreamKey = 0xA11CE5;

struct ProximalConfig {
    long outer_iterations = 500; // T
    long inner_steps = 20;       // N
    int mc_samples = 1;          // S
    double learning_rate = 0.1;  // eta
    OptimizerConfig optimizer;
    AlphaSchedule schedule;
    bool reset_inner_optimizer = false;
    // Bayesian targets only: mini-batch size per outer iteration; 0 = full data.
    int batch_size = 0;
};

struct AdviConfig {
    long iterations = 500;
    int mc_samples = 1;
    double learning_rate = 0.01;
    OptimizerConfig optimizer;
    int batch_size = 0;
};

enum class RunStatus { completed, aborted_nonfinite, failed };
std::string to_string(RunStatus status);

/// Extra inputs some metrics need: held-out data for ece/nll, ground-truth
/// Gaussian parameters for param_err.
struct MetricContext {
    const BayesDataset* test_set = nullptr;
    const GaussianTargetParams* truth = nullptr;
};

struct RunOutcome {
    MetricTrace trace;
    RunStatus status = RunStatus::completed;
    std::map<std::string, double> final_metrics;
};

/// Proximal score-matching optimizer. Per outer iteration t: draw S samples
/// from q_t, evaluate the (noisy/mini-batch) target score once per sample,
/// freeze grad log q_t at the samples, then take N optimizer steps on the
/// proximal objective with alpha_t before advancing to q_{t+1}. Exactly T*S
/// score calls regardless of N. Metrics are evaluated on a child rng stream
/// so recording cadence never perturbs the optimization path.
RunOutcome run_proximal(const TargetOracle& target, VariationalFamily& family,
                        const ProximalConfig& cfg, const NoiseConfig& noise,
                        const MetricSchedule& metrics, const MetricContext& ctx,
                        SeededRng rng);

/// Reparametrized negative-ELBO baseline: descends the S-sample estimate of
/// E_q[log q(theta) - log Phi(theta)], with the target score entering the
/// pathwise gradient linearly. iterations*S score calls.
RunOutcome run_advi(const TargetOracle& target, VariationalFamily& family,
                    const AdviConfig& cfg, const NoiseConfig& noise,
                    const MetricSchedule& metrics, const MetricContext& ctx, SeededRng rng);

/// Idealized algorithm for a Gaussian target: each outer iteration replaces
/// the inner gradient descent by the exact Gaussian projection.
GaussianVariational run_perfect_minimization(const GaussianTargetParams& target,
                                             const GaussianVariational& init,
                                             const AlphaSchedule& schedule, long total);

/// Evaluates the scheduled metrics once and appends rows to the trace;
/// returns the values keyed by metric name. loss may be null (not recorded).
std::map<std::string, double> record_metrics(const TargetOracle& target,
                                             const VariationalFamily& family,
                                             const MetricSchedule& metrics,
                                             const MetricContext& ctx, SeededRng& rng,
                                             MetricTrace& trace, long outer_t,
                                             long long score_calls, const double* loss);

} // namespace proxvi
