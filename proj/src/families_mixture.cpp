#include <cmath>

#include "proxvi/errors.hpp"
#include "proxvi/families.hpp"
#include "proxvi/math_util.hpp"

namespace proxvi {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
const double kLogStdFloor = std::log(1e-4);
} // namespace

MixtureVariational::MixtureVariational(int dim, int order, double gumbel_temperature)
    : dim_(dim), order_(order), gumbel_temperature_(gumbel_temperature) {
    if (dim < 1 || order < 1)
        throw DimensionMismatch("MixtureVariational: dim and order must be >= 1");
    if (gumbel_temperature <= 0.0)
        throw DimensionMismatch("MixtureVariational: temperature must be positive");
    logits_.assign(order_, 0.0);
    means_.assign(static_cast<std::size_t>(order_) * dim_, 0.0);
    log_stds_.assign(static_cast<std::size_t>(order_) * dim_, 0.0);
}

void MixtureVariational::floor_spread() {
    for (double& v : log_stds_) v = std::max(v, kLogStdFloor);
}

std::vector<double> MixtureVariational::params() const {
    std::vector<double> p;
    p.reserve(param_count());
    p.insert(p.end(), logits_.begin(), logits_.end());
    p.insert(p.end(), means_.begin(), means_.end());
    p.insert(p.end(), log_stds_.begin(), log_stds_.end());
    return p;
}

void MixtureVariational::set_params(std::span<const double> p) {
    if (static_cast<int>(p.size()) != param_count())
        throw ShapeMismatch("MixtureVariational: wrong parameter count");
    const std::size_t kd = static_cast<std::size_t>(order_) * dim_;
    std::copy(p.begin(), p.begin() + order_, logits_.begin());
    std::copy(p.begin() + order_, p.begin() + order_ + kd, means_.begin());
    std::copy(p.begin() + order_ + kd, p.end(), log_stds_.begin());
    floor_spread();
}

std::unique_ptr<VariationalFamily> MixtureVariational::clone() const {
    return std::make_unique<MixtureVariational>(*this);
}

std::vector<double> MixtureVariational::weights() const { return softmax(logits_); }

std::span<const double> MixtureVariational::component_mean(int k) const {
    return {means_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<const double> MixtureVariational::component_log_std(int k) const {
    return {log_stds_.data() + static_cast<std::size_t>(k) * dim_,
            static_cast<std::size_t>(dim_)};
}

void MixtureVariational::component_log_terms(std::span<const double> theta,
                                             std::vector<double>& out) const {
    const std::vector<double> w = weights();
    out.resize(order_);
    for (int k = 0; k < order_; ++k) {
        const auto m = component_mean(k);
        const auto ls = component_log_std(k);
        double acc = std::log(w[k]) - 0.5 * dim_ * kLog2Pi;
        for (int j = 0; j < dim_; ++j) {
            const double u = (theta[j] - m[j]) * std::exp(-ls[j]);
            acc += -0.5 * u * u - ls[j];
        }
        out[k] = acc;
    }
}

DenseMatrix MixtureVariational::sample(int s, SeededRng& rng, DenseMatrix* aux) const {
    if (s < 1) throw EmptyInput("sample: s must be >= 1");
    if (aux) *aux = DenseMatrix();
    const std::vector<double> w = weights();
    DenseMatrix out(s, dim_);
    std::vector<double> z(dim_);
    for (int i = 0; i < s; ++i) {
        const double u = rng.uniform();
        int k = order_ - 1;
        double acc = 0.0;
        for (int j = 0; j < order_; ++j) {
            acc += w[j];
            if (u < acc) {
                k = j;
                break;
            }
        }
        const auto m = component_mean(k);
        const auto ls = component_log_std(k);
        rng.fill_normal(z);
        for (int j = 0; j < dim_; ++j) out.at(i, j) = m[j] + std::exp(ls[j]) * z[j];
    }
    return out;
}

double MixtureVariational::log_density(std::span<const double> theta) const {
    check_theta(theta);
    std::vector<double> log_terms;
    component_log_terms(theta, log_terms);
    return logsumexp(log_terms);
}

std::vector<double> MixtureVariational::score_theta(std::span<const double> theta) const {
    check_theta(theta);
    std::vector<double> log_terms;
    component_log_terms(theta, log_terms);
    const double lse = logsumexp(log_terms);
    std::vector<double> g(dim_, 0.0);
    for (int k = 0; k < order_; ++k) {
        const double resp = std::exp(log_terms[k] - lse);
        const auto m = component_mean(k);
        const auto ls = component_log_std(k);
        for (int j = 0; j < dim_; ++j)
            g[j] -= resp * (theta[j] - m[j]) * std::exp(-2.0 * ls[j]);
    }
    return g;
}

LossGrad MixtureVariational::proximal_loss_grad(const SampleBatch& batch, double alpha) const {
    check_batch(batch);
    const int s = batch.size();
    const int d = dim_;
    const int k_ord = order_;
    LossGrad out;
    out.grad.assign(param_count(), 0.0);
    const double inv_s = 1.0 / s;
    const std::size_t kd = static_cast<std::size_t>(k_ord) * d;

    std::vector<double> log_terms, resp(k_ord), g(d), v(d), comp_scores(k_ord);
    DenseMatrix gk(k_ord, d); // per-component scores at theta
    for (int i = 0; i < s; ++i) {
        const auto theta = batch.thetas.row(i);
        const auto prev = batch.prev_scores.row(i);
        const auto target = batch.target_scores.row(i);

        component_log_terms(theta, log_terms);
        const double lse = logsumexp(log_terms);
        std::fill(g.begin(), g.end(), 0.0);
        for (int k = 0; k < k_ord; ++k) {
            resp[k] = std::exp(log_terms[k] - lse);
            const auto m = component_mean(k);
            const auto ls = component_log_std(k);
            for (int j = 0; j < d; ++j) {
                gk.at(k, j) = -(theta[j] - m[j]) * std::exp(-2.0 * ls[j]);
                g[j] += resp[k] * gk.at(k, j);
            }
        }
        for (int j = 0; j < d; ++j) {
            const double dp = g[j] - prev[j];
            const double dt = g[j] - target[j];
            out.loss += inv_s * (alpha * dp * dp + dt * dt);
            v[j] = 2.0 * alpha * dp + 2.0 * dt;
        }
        // s_k = v . g_k and its responsibility average
        double s_bar = 0.0;
        for (int k = 0; k < k_ord; ++k) {
            comp_scores[k] = dot(v, gk.row(k));
            s_bar += resp[k] * comp_scores[k];
        }
        for (int k = 0; k < k_ord; ++k) {
            const double dk = comp_scores[k] - s_bar;
            out.grad[k] += inv_s * resp[k] * dk;
            const auto m = component_mean(k);
            const auto ls = component_log_std(k);
            for (int j = 0; j < d; ++j) {
                const double inv_var = std::exp(-2.0 * ls[j]);
                const double centered = theta[j] - m[j];
                out.grad[k_ord + static_cast<std::size_t>(k) * d + j] +=
                    inv_s * resp[k] * (centered * inv_var * dk + v[j] * inv_var);
                out.grad[k_ord + kd + static_cast<std::size_t>(k) * d + j] +=
                    inv_s * resp[k] *
                    (dk * (centered * centered * inv_var - 1.0) +
                     2.0 * centered * inv_var * v[j]);
            }
        }
    }
    return out;
}

MixtureVariational::ReparamDraw MixtureVariational::reparam_sample(SeededRng& rng) const {
    // raw layout: [z_1 .. z_K (K*d), gumbels (K)]
    ReparamDraw draw;
    draw.raw.resize(static_cast<std::size_t>(order_) * dim_ + order_);
    rng.fill_normal(std::span<double>(draw.raw.data(), static_cast<std::size_t>(order_) * dim_));
    const std::size_t kd = static_cast<std::size_t>(order_) * dim_;
    for (int k = 0; k < order_; ++k)
        draw.raw[kd + k] = -std::log(-std::log(rng.uniform_pos()));

    std::vector<double> scaled(order_);
    for (int k = 0; k < order_; ++k)
        scaled[k] = (logits_[k] + draw.raw[kd + k]) / gumbel_temperature_;
    const std::vector<double> c = softmax(scaled);

    draw.theta.assign(dim_, 0.0);
    for (int k = 0; k < order_; ++k) {
        const auto m = component_mean(k);
        const auto ls = component_log_std(k);
        const double* z = draw.raw.data() + static_cast<std::size_t>(k) * dim_;
        for (int j = 0; j < dim_; ++j)
            draw.theta[j] += c[k] * (m[j] + std::exp(ls[j]) * z[j]);
    }
    return draw;
}

double MixtureVariational::elbo_term_grad(const ReparamDraw& draw,
                                          std::span<const double> target_score,
                                          std::span<double> grad) const {
    if (static_cast<int>(grad.size()) != param_count())
        throw ShapeMismatch("elbo_term_grad: grad buffer size mismatch");
    const int d = dim_;
    const int k_ord = order_;
    const std::size_t kd = static_cast<std::size_t>(k_ord) * d;
    const auto& theta = draw.theta;

    std::vector<double> scaled(k_ord);
    for (int k = 0; k < k_ord; ++k)
        scaled[k] = (logits_[k] + draw.raw[kd + k]) / gumbel_temperature_;
    const std::vector<double> c = softmax(scaled);

    std::vector<double> log_terms;
    component_log_terms(theta, log_terms);
    const double lse = logsumexp(log_terms);
    const std::vector<double> w = weights();
    const std::vector<double> g_q = score_theta(theta);
    std::vector<double> v(d);
    for (int j = 0; j < d; ++j) v[j] = g_q[j] - target_score[j];

    // Pre-mix component samples y_k = m_k + sigma_k z_k; dtheta/dlogit_j
    // collapses to c_j (y_j - theta) / temperature.
    DenseMatrix y(k_ord, d);
    for (int k = 0; k < k_ord; ++k) {
        const auto m = component_mean(k);
        const auto ls = component_log_std(k);
        const double* z = draw.raw.data() + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) y.at(k, j) = m[j] + std::exp(ls[j]) * z[j];
    }
    for (int k = 0; k < k_ord; ++k) {
        const double resp = std::exp(log_terms[k] - lse);
        double vy = 0.0;
        for (int j = 0; j < d; ++j) vy += v[j] * (y.at(k, j) - theta[j]);
        grad[k] += (resp - w[k]) + c[k] * vy / gumbel_temperature_;
        const auto m = component_mean(k);
        const auto ls = component_log_std(k);
        const double* z = draw.raw.data() + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) {
            const double inv_var = std::exp(-2.0 * ls[j]);
            const double centered = theta[j] - m[j];
            grad[k_ord + static_cast<std::size_t>(k) * d + j] +=
                resp * centered * inv_var + v[j] * c[k];
            grad[k_ord + kd + static_cast<std::size_t>(k) * d + j] +=
                resp * (centered * centered * inv_var - 1.0) +
                v[j] * c[k] * std::exp(ls[j]) * z[j];
        }
    }
    return lse;
}

void MixtureVariational::init_random(SeededRng& rng) {
    std::fill(logits_.begin(), logits_.end(), 0.0);
    for (double& v : means_) v = rng.normal();
    std::fill(log_stds_.begin(), log_stds_.end(), 0.0);
}

} // namespace proxvi
