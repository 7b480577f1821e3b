#include "proxvi/algorithms.hpp"

#include <cmath>

#include "proxvi/errors.hpp"
#include "proxvi/math_util.hpp"

namespace proxvi {

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::completed: return "completed";
        case RunStatus::aborted_nonfinite: return "aborted_nonfinite";
        case RunStatus::failed: return "failed";
    }
    return "unknown";
}

std::map<std::string, double> record_metrics(const TargetOracle& target,
                                             const VariationalFamily& family,
                                             const MetricSchedule& metrics,
                                             const MetricContext& ctx, SeededRng& rng,
                                             MetricTrace& trace, long outer_t,
                                             long long score_calls, const double* loss) {
    std::map<std::string, double> values;
    // ece and nll share one posterior-predictive pass.
    std::vector<std::vector<double>> predictive;
    bool predictive_ready = false;
    auto ensure_predictive = [&]() {
        if (predictive_ready) return;
        if (!ctx.test_set || ctx.test_set->size() == 0)
            throw NotApplicable("record_metrics: ece/nll need a test set");
        const DenseMatrix thetas =
            family.sample(metrics.posterior_predictive_samples, rng);
        std::vector<std::vector<double>> samples(thetas.rows);
        for (int i = 0; i < thetas.rows; ++i) {
            const auto row = thetas.row(i);
            samples[i].assign(row.begin(), row.end());
        }
        predictive = posterior_predictive(target, samples, *ctx.test_set);
        predictive_ready = true;
    };

    for (const std::string& name : metrics.which) {
        double value = 0.0;
        if (name == "fkl") {
            value = forward_kl(target, family, metrics.fkl_samples, rng);
        } else if (name == "nelbo") {
            value = negative_elbo(target, family, metrics.nelbo_samples, rng);
        } else if (name == "param_err") {
            const auto* gauss = dynamic_cast<const GaussianVariational*>(&family);
            if (!gauss || !ctx.truth)
                throw FamilyMismatch("record_metrics: param_err needs Gaussian family and truth");
            value = param_error(*gauss, *ctx.truth);
        } else if (name == "ece") {
            ensure_predictive();
            value = ece(predictive, ctx.test_set->labels, metrics.ece_bins);
        } else if (name == "nll") {
            ensure_predictive();
            double acc = 0.0;
            for (int i = 0; i < ctx.test_set->size(); ++i)
                acc += -std::log(predictive[i][ctx.test_set->labels[i]]);
            value = acc / ctx.test_set->size();
        } else if (name == "loss") {
            if (!loss) continue;
            value = *loss;
        } else {
            throw MetricMissing("record_metrics: unknown metric '" + name + "'");
        }
        trace.add(name, value, outer_t, score_calls);
        values[name] = value;
    }
    return values;
}

RunOutcome run_proximal(const TargetOracle& target, VariationalFamily& family,
                        const ProximalConfig& cfg, const NoiseConfig& noise,
                        const MetricSchedule& metrics, const MetricContext& ctx,
                        SeededRng rng) {
    if (family.dim() != target.dim())
        throw DimensionMismatch("run_proximal: family/target dimension mismatch");
    if (cfg.outer_iterations < 1 || cfg.mc_samples < 1 || cfg.learning_rate <= 0.0)
        throw DimensionMismatch("run_proximal: need T >= 1, S >= 1, eta > 0");

    RunOutcome out;
    SeededRng metric_rng = rng.child(kMetricStreamKey);
    const long long base_calls = target.score_calls();
    out.final_metrics = record_metrics(target, family, metrics, ctx, metric_rng, out.trace, 0,
                                       0, nullptr);
    if (cfg.inner_steps == 0) return out; // no-op run: q unchanged, initial metrics only

    const int s = cfg.mc_samples;
    const int d = family.dim();
    const bool minibatch =
        cfg.batch_size > 0 && target.data_size() > 0 && cfg.batch_size < target.data_size();

    std::vector<double> lambda = family.params();
    OptimizerState opt(cfg.optimizer, static_cast<int>(lambda.size()));

    SampleBatch batch;
    for (long t = 0; t < cfg.outer_iterations; ++t) {
        batch.thetas = family.sample(s, rng, &batch.aux);
        batch.prev_scores = DenseMatrix(s, d);
        batch.target_scores = DenseMatrix(s, d);
        std::vector<int> indices;
        if (minibatch) indices = draw_batch(target.data_size(), cfg.batch_size, rng);
        for (int i = 0; i < s; ++i) {
            const auto theta = batch.thetas.row(i);
            const std::vector<double> prev = family.score_theta(theta);
            std::vector<double> s_hat =
                minibatch ? target.minibatch_score(theta, indices) : target.score(theta);
            s_hat = inject_noise(s_hat, noise, rng);
            for (int j = 0; j < d; ++j) {
                batch.prev_scores.at(i, j) = prev[j];
                batch.target_scores.at(i, j) = s_hat[j];
            }
        }

        const double alpha = alpha_schedule(cfg.schedule, t, cfg.outer_iterations);
        if (cfg.reset_inner_optimizer) opt.reset();
        double last_loss = 0.0;
        for (long n = 0; n < cfg.inner_steps; ++n) {
            const LossGrad lg = family.proximal_loss_grad(batch, alpha);
            if (!std::isfinite(lg.loss) || !all_finite(lg.grad)) {
                out.status = RunStatus::aborted_nonfinite;
                try {
                    out.final_metrics =
                        record_metrics(target, family, metrics, ctx, metric_rng, out.trace,
                                       t + 1, target.score_calls() - base_calls, nullptr);
                } catch (const Error&) {
                    // Metrics themselves may be unevaluable in a blown-up state.
                }
                return out;
            }
            opt.step(lambda, lg.grad, cfg.learning_rate);
            family.set_params(lambda);
            lambda = family.params(); // re-sync in case the family clamped
            last_loss = lg.loss;
        }

        if ((t + 1) % metrics.every_k_outer == 0 || t + 1 == cfg.outer_iterations) {
            out.final_metrics =
                record_metrics(target, family, metrics, ctx, metric_rng, out.trace, t + 1,
                               target.score_calls() - base_calls, &last_loss);
        }
    }
    return out;
}

RunOutcome run_advi(const TargetOracle& target, VariationalFamily& family,
                    const AdviConfig& cfg, const NoiseConfig& noise,
                    const MetricSchedule& metrics, const MetricContext& ctx, SeededRng rng) {
    if (family.dim() != target.dim())
        throw DimensionMismatch("run_advi: family/target dimension mismatch");
    if (cfg.mc_samples < 1 || cfg.learning_rate <= 0.0)
        throw DimensionMismatch("run_advi: need S >= 1, eta > 0");

    RunOutcome out;
    SeededRng metric_rng = rng.child(kMetricStreamKey);
    const long long base_calls = target.score_calls();
    out.final_metrics = record_metrics(target, family, metrics, ctx, metric_rng, out.trace, 0,
                                       0, nullptr);
    if (cfg.iterations == 0) return out;

    const int s = cfg.mc_samples;
    const bool minibatch =
        cfg.batch_size > 0 && target.data_size() > 0 && cfg.batch_size < target.data_size();

    std::vector<double> lambda = family.params();
    OptimizerState opt(cfg.optimizer, static_cast<int>(lambda.size()));
    std::vector<double> grad(lambda.size());

    for (long t = 0; t < cfg.iterations; ++t) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double objective = 0.0;
        std::vector<int> indices;
        if (minibatch) indices = draw_batch(target.data_size(), cfg.batch_size, rng);
        for (int i = 0; i < s; ++i) {
            const VariationalFamily::ReparamDraw draw = family.reparam_sample(rng);
            std::vector<double> s_hat = minibatch
                                            ? target.minibatch_score(draw.theta, indices)
                                            : target.score(draw.theta);
            s_hat = inject_noise(s_hat, noise, rng);
            const double log_q = family.elbo_term_grad(draw, s_hat, grad);
            objective += log_q - target.log_potential(draw.theta);
        }
        const double inv_s = 1.0 / s;
        for (double& g : grad) g *= inv_s;
        objective *= inv_s;

        if (!std::isfinite(objective) || !all_finite(grad)) {
            out.status = RunStatus::aborted_nonfinite;
            try {
                out.final_metrics =
                    record_metrics(target, family, metrics, ctx, metric_rng, out.trace, t + 1,
                                   target.score_calls() - base_calls, nullptr);
            } catch (const Error&) {
            }
            return out;
        }
        opt.step(lambda, grad, cfg.learning_rate);
        family.set_params(lambda);
        lambda = family.params();

        if ((t + 1) % metrics.every_k_outer == 0 || t + 1 == cfg.iterations) {
            out.final_metrics =
                record_metrics(target, family, metrics, ctx, metric_rng, out.trace, t + 1,
                               target.score_calls() - base_calls, &objective);
        }
    }
    return out;
}

GaussianVariational run_perfect_minimization(const GaussianTargetParams& target,
                                             const GaussianVariational& init,
                                             const AlphaSchedule& schedule, long total) {
    if (!init.is_full())
        throw FamilyMismatch("run_perfect_minimization: init must be full-covariance");
    if (total < 1) throw DimensionMismatch("run_perfect_minimization: T must be >= 1");
    GaussianVariational q = init;
    for (long t = 0; t < total; ++t) {
        const double alpha = alpha_schedule(schedule, t, total);
        q = gaussian_projection(q, target.mean, target.covariance, alpha);
    }
    return q;
}

} // namespace proxvi
