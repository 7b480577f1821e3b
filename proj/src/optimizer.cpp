#include "proxvi/optimizer.hpp"

#include <cmath>

#include "proxvi/errors.hpp"

namespace proxvi {

OptimizerState::OptimizerState(OptimizerConfig cfg, int param_count)
    : cfg_(cfg), m_(param_count, 0.0), v_(param_count, 0.0) {}

void OptimizerState::step(std::vector<double>& lambda, std::span<const double> grad,
                          double eta) {
    if (lambda.size() != m_.size() || grad.size() != m_.size())
        throw ShapeMismatch("optimizer_step: parameter/gradient size mismatch");
    ++step_;
    if (cfg_.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            m_[i] = cfg_.momentum * m_[i] + grad[i];
            lambda[i] -= eta * m_[i];
        }
        return;
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        const double m_hat = m_[i] / bc1;
        const double v_hat = v_[i] / bc2;
        lambda[i] -= eta * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
}

void OptimizerState::reset() {
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
    step_ = 0;
}

double alpha_schedule(const AlphaSchedule& schedule, long t, long total) {
    if (t < 0 || t >= total) throw DimensionMismatch("alpha_schedule: need 0 <= t < T");
    switch (schedule.kind) {
        case ScheduleKind::linear:
            return static_cast<double>(t) / static_cast<double>(total);
        case ScheduleKind::constant:
            return schedule.constant;
        case ScheduleKind::zero:
            return 0.0;
    }
    return 0.0;
}

double telescoped_gamma(const AlphaSchedule& schedule, long total) {
    if (total < 1) throw DimensionMismatch("telescoped_gamma: T must be >= 1");
    double gamma = 1.0;
    for (long t = 0; t < total; ++t) {
        const double a = alpha_schedule(schedule, t, total);
        gamma *= a / (1.0 + a);
    }
    return gamma;
}

} // namespace proxvi
