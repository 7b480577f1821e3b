#include <cmath>

#include "proxvi/errors.hpp"
#include "proxvi/families.hpp"
#include "proxvi/math_util.hpp"

namespace proxvi {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
// Variance floor 1e-8, i.e. standard deviations never drop below 1e-4.
const double kLogStdFloor = std::log(1e-4);
} // namespace

GaussianVariational::GaussianVariational(int dim, Cov cov)
    : cov_(cov), mean_(dim, 0.0) {
    if (dim < 1) throw DimensionMismatch("GaussianVariational: dim must be >= 1");
    if (cov_ == Cov::diagonal)
        log_std_.assign(dim, 0.0);
    else
        chol_ = DenseMatrix::identity(dim);
}

GaussianVariational GaussianVariational::diagonal(std::vector<double> mean,
                                                  std::vector<double> log_std) {
    if (mean.size() != log_std.size())
        throw DimensionMismatch("GaussianVariational: mean/log_std length mismatch");
    GaussianVariational g(static_cast<int>(mean.size()), Cov::diagonal);
    g.mean_ = std::move(mean);
    g.log_std_ = std::move(log_std);
    g.floor_spread();
    return g;
}

GaussianVariational GaussianVariational::full_cov(std::vector<double> mean, DenseMatrix chol) {
    const int d = static_cast<int>(mean.size());
    if (chol.rows != d || chol.cols != d)
        throw DimensionMismatch("GaussianVariational: cholesky shape mismatch");
    GaussianVariational g(d, Cov::full);
    g.mean_ = std::move(mean);
    g.chol_ = std::move(chol);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) g.chol_.at(i, j) = 0.0;
    g.floor_spread();
    return g;
}

void GaussianVariational::floor_spread() {
    const double floor_std = std::exp(kLogStdFloor);
    if (cov_ == Cov::diagonal) {
        for (double& v : log_std_) v = std::max(v, kLogStdFloor);
    } else {
        for (int i = 0; i < chol_.rows; ++i)
            chol_.at(i, i) = std::max(chol_.at(i, i), floor_std);
    }
}

int GaussianVariational::param_count() const {
    const int d = dim();
    return cov_ == Cov::diagonal ? 2 * d : d + d * (d + 1) / 2;
}

std::vector<double> GaussianVariational::params() const {
    const int d = dim();
    std::vector<double> p;
    p.reserve(param_count());
    p.insert(p.end(), mean_.begin(), mean_.end());
    if (cov_ == Cov::diagonal) {
        p.insert(p.end(), log_std_.begin(), log_std_.end());
    } else {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j <= i; ++j)
                p.push_back(i == j ? std::log(chol_.at(i, i)) : chol_.at(i, j));
    }
    return p;
}

void GaussianVariational::set_params(std::span<const double> p) {
    const int d = dim();
    if (static_cast<int>(p.size()) != param_count())
        throw ShapeMismatch("GaussianVariational: wrong parameter count");
    for (int i = 0; i < d; ++i) mean_[i] = p[i];
    if (cov_ == Cov::diagonal) {
        for (int i = 0; i < d; ++i) log_std_[i] = p[d + i];
    } else {
        int idx = d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j <= i; ++j) {
                chol_.at(i, j) = i == j ? std::exp(p[idx]) : p[idx];
                ++idx;
            }
    }
    floor_spread();
}

std::unique_ptr<VariationalFamily> GaussianVariational::clone() const {
    return std::make_unique<GaussianVariational>(*this);
}

DenseMatrix GaussianVariational::covariance() const {
    const int d = dim();
    if (cov_ == Cov::diagonal) {
        DenseMatrix v(d, d);
        for (int i = 0; i < d; ++i) v.at(i, i) = std::exp(2.0 * log_std_[i]);
        return v;
    }
    return matmul(chol_, transpose(chol_));
}

DenseMatrix GaussianVariational::chol() const {
    const int d = dim();
    if (cov_ == Cov::diagonal) {
        DenseMatrix l(d, d);
        for (int i = 0; i < d; ++i) l.at(i, i) = std::exp(log_std_[i]);
        return l;
    }
    return chol_;
}

void GaussianVariational::set_isotropic_covariance(double value) {
    if (value <= 0.0) throw DimensionMismatch("set_isotropic_covariance: value must be > 0");
    const int d = dim();
    if (cov_ == Cov::diagonal) {
        log_std_.assign(d, 0.5 * std::log(value));
    } else {
        chol_ = DenseMatrix::identity(d);
        for (int i = 0; i < d; ++i) chol_.at(i, i) = std::sqrt(value);
    }
    floor_spread();
}

DenseMatrix GaussianVariational::sample(int s, SeededRng& rng, DenseMatrix* aux) const {
    if (s < 1) throw EmptyInput("sample: s must be >= 1");
    const int d = dim();
    if (aux) *aux = DenseMatrix();
    DenseMatrix out(s, d);
    std::vector<double> z(d);
    for (int i = 0; i < s; ++i) {
        rng.fill_normal(z);
        if (cov_ == Cov::diagonal) {
            for (int j = 0; j < d; ++j)
                out.at(i, j) = mean_[j] + std::exp(log_std_[j]) * z[j];
        } else {
            const std::vector<double> lz = matvec(chol_, z);
            for (int j = 0; j < d; ++j) out.at(i, j) = mean_[j] + lz[j];
        }
    }
    return out;
}

double GaussianVariational::log_density(std::span<const double> theta) const {
    check_theta(theta);
    const int d = dim();
    if (cov_ == Cov::diagonal) {
        double acc = -0.5 * d * kLog2Pi;
        for (int j = 0; j < d; ++j) {
            const double u = (theta[j] - mean_[j]) * std::exp(-log_std_[j]);
            acc += -0.5 * u * u - log_std_[j];
        }
        return acc;
    }
    std::vector<double> r(d);
    for (int j = 0; j < d; ++j) r[j] = theta[j] - mean_[j];
    const std::vector<double> u = solve_lower_triangular(chol_, r);
    double acc = -0.5 * d * kLog2Pi - 0.5 * dot(u, u);
    for (int i = 0; i < d; ++i) acc -= std::log(chol_.at(i, i));
    return acc;
}

std::vector<double> GaussianVariational::score_theta(std::span<const double> theta) const {
    check_theta(theta);
    const int d = dim();
    std::vector<double> g(d);
    if (cov_ == Cov::diagonal) {
        for (int j = 0; j < d; ++j)
            g[j] = -(theta[j] - mean_[j]) * std::exp(-2.0 * log_std_[j]);
        return g;
    }
    std::vector<double> r(d);
    for (int j = 0; j < d; ++j) r[j] = theta[j] - mean_[j];
    const std::vector<double> y = solve_lower_triangular(chol_, r);
    const std::vector<double> a = solve_upper_triangular_transposed(chol_, y);
    for (int j = 0; j < d; ++j) g[j] = -a[j];
    return g;
}

LossGrad GaussianVariational::proximal_loss_grad(const SampleBatch& batch, double alpha) const {
    check_batch(batch);
    const int d = dim();
    const int s = batch.size();
    LossGrad out;
    out.grad.assign(param_count(), 0.0);
    const double inv_s = 1.0 / s;

    std::vector<double> g(d), v(d), r(d);
    for (int i = 0; i < s; ++i) {
        const auto theta = batch.thetas.row(i);
        const auto prev = batch.prev_scores.row(i);
        const auto target = batch.target_scores.row(i);

        std::vector<double> y, a, lv, c;
        if (cov_ == Cov::diagonal) {
            for (int j = 0; j < d; ++j)
                g[j] = -(theta[j] - mean_[j]) * std::exp(-2.0 * log_std_[j]);
        } else {
            for (int j = 0; j < d; ++j) r[j] = theta[j] - mean_[j];
            y = solve_lower_triangular(chol_, r);
            a = solve_upper_triangular_transposed(chol_, y);
            for (int j = 0; j < d; ++j) g[j] = -a[j];
        }
        for (int j = 0; j < d; ++j) {
            const double dp = g[j] - prev[j];
            const double dt = g[j] - target[j];
            out.loss += inv_s * (alpha * dp * dp + dt * dt);
            v[j] = 2.0 * alpha * dp + 2.0 * dt;
        }
        if (cov_ == Cov::diagonal) {
            for (int j = 0; j < d; ++j) {
                const double inv_var = std::exp(-2.0 * log_std_[j]);
                out.grad[j] += inv_s * v[j] * inv_var;
                out.grad[d + j] += inv_s * 2.0 * (theta[j] - mean_[j]) * inv_var * v[j];
            }
        } else {
            lv = solve_lower_triangular(chol_, v);
            c = solve_upper_triangular_transposed(chol_, lv);
            for (int j = 0; j < d; ++j) out.grad[j] += inv_s * c[j];
            int idx = d;
            for (int i2 = 0; i2 < d; ++i2)
                for (int j2 = 0; j2 <= i2; ++j2) {
                    double gl = a[i2] * lv[j2] + c[i2] * y[j2];
                    if (i2 == j2) gl *= chol_.at(i2, i2); // log-diagonal storage
                    out.grad[idx++] += inv_s * gl;
                }
        }
    }
    return out;
}

GaussianVariational::ReparamDraw GaussianVariational::reparam_sample(SeededRng& rng) const {
    const int d = dim();
    ReparamDraw draw;
    draw.raw = rng.normals(d);
    draw.theta.resize(d);
    if (cov_ == Cov::diagonal) {
        for (int j = 0; j < d; ++j)
            draw.theta[j] = mean_[j] + std::exp(log_std_[j]) * draw.raw[j];
    } else {
        const std::vector<double> lz = matvec(chol_, draw.raw);
        for (int j = 0; j < d; ++j) draw.theta[j] = mean_[j] + lz[j];
    }
    return draw;
}

double GaussianVariational::elbo_term_grad(const ReparamDraw& draw,
                                           std::span<const double> target_score,
                                           std::span<double> grad) const {
    const int d = dim();
    if (static_cast<int>(grad.size()) != param_count())
        throw ShapeMismatch("elbo_term_grad: grad buffer size mismatch");
    const auto& z = draw.raw;
    for (int j = 0; j < d; ++j) grad[j] += -target_score[j];
    if (cov_ == Cov::diagonal) {
        for (int j = 0; j < d; ++j)
            grad[d + j] += -1.0 - target_score[j] * std::exp(log_std_[j]) * z[j];
    } else {
        int idx = d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j <= i; ++j) {
                double gl = -target_score[i] * z[j];
                if (i == j) gl = gl * chol_.at(i, i) - 1.0;
                grad[idx++] += gl;
            }
    }
    return log_density(draw.theta);
}

void GaussianVariational::init_random(SeededRng& rng) {
    for (double& v : mean_) v = rng.normal();
    set_isotropic_covariance(1.0);
}

} // namespace proxvi
