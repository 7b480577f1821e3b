#pragma once

#include <span>
#include <vector>

namespace proxvi {

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double beta1 = 0.9; // adam
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double momentum = 0.0; // sgd
};

/// Flat-vector first-order optimizer with persistent moments.
class OptimizerState {
  public:
    OptimizerState(OptimizerConfig cfg, int param_count);

    /// In-place update lambda <- lambda - eta * step(grad).
    void step(std::vector<double>& lambda, std::span<const double> grad, double eta);
    /// Clears moments and the step counter.
    void reset();

    const OptimizerConfig& config() const { return cfg_; }
    long steps_taken() const { return step_; }

  private:
    OptimizerConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    long step_ = 0;
};

enum class ScheduleKind { linear, constant, zero };

struct AlphaSchedule {
    ScheduleKind kind = ScheduleKind::linear;
    double constant = 0.5; // constant schedule only
};

/// linear: t/T; constant: c; zero: 0. Requires 0 <= t < T.
double alpha_schedule(const AlphaSchedule& schedule, long t, long total);

/// gamma_T = prod_{t=0}^{T-1} alpha_t / (1 + alpha_t).
double telescoped_gamma(const AlphaSchedule& schedule, long total);

} // namespace proxvi
