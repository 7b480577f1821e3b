#include "proxvi/targets.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "proxvi/dual.hpp"
#include "proxvi/errors.hpp"
#include "proxvi/math_util.hpp"

namespace proxvi {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
} // namespace

std::string to_string(TargetKind kind) {
    switch (kind) {
        case TargetKind::gaussian: return "gaussian";
        case TargetKind::gaussian_mixture: return "gaussian_mixture";
        case TargetKind::bayes_logistic: return "bayes_logistic";
        case TargetKind::bayes_mlp: return "bayes_mlp";
    }
    return "unknown";
}

std::vector<double> inject_noise(std::span<const double> score, const NoiseConfig& noise,
                                 SeededRng& rng) {
    std::vector<double> out(score.begin(), score.end());
    if (noise.beta == 0.0) return out;
    const double scale = noise.beta * inf_norm(score);
    if (scale == 0.0) return out;
    for (double& v : out) v += scale * rng.normal();
    return out;
}

void TargetOracle::check_dim(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != dim())
        throw DimensionMismatch("target: theta has wrong length");
}

std::vector<double> TargetOracle::score(std::span<const double> theta) const {
    check_dim(theta);
    score_calls_.fetch_add(1, std::memory_order_relaxed);
    return score_impl(theta);
}

std::vector<double> TargetOracle::minibatch_score(std::span<const double> theta,
                                                  std::span<const int> batch) const {
    check_dim(theta);
    if (data_size() == 0)
        throw NotApplicable("minibatch_score: target has no dataset");
    if (batch.empty()) throw EmptyBatch("minibatch_score: batch is empty");
    for (int idx : batch)
        if (idx < 0 || idx >= data_size())
            throw DimensionMismatch("minibatch_score: batch index out of range");
    score_calls_.fetch_add(1, std::memory_order_relaxed);
    return minibatch_score_impl(theta, batch);
}

std::vector<double> TargetOracle::minibatch_score_impl(std::span<const double>,
                                                       std::span<const int>) const {
    throw NotApplicable("minibatch_score: not implemented for this kind");
}

double TargetOracle::log_density(std::span<const double>) const {
    throw NotSamplable("log_density: no normalized density for this kind");
}

DenseMatrix TargetOracle::sample_target(int, SeededRng&) const {
    throw NotSamplable("sample_target: target kind is not samplable");
}

std::vector<double> TargetOracle::predict_proba(std::span<const double>,
                                                std::span<const double>) const {
    throw NotApplicable("predict_proba: target has no predictive model");
}

// ---------------------------------------------------------------------------
// Gaussian target

GaussianTarget::GaussianTarget(GaussianTargetParams params) : params_(std::move(params)) {
    const int d = static_cast<int>(params_.mean.size());
    if (params_.covariance.rows != d || params_.covariance.cols != d)
        throw DimensionMismatch("GaussianTarget: covariance shape mismatch");
    chol_ = cholesky(params_.covariance);
    precision_ = spd_inverse(params_.covariance);
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(chol_.at(i, i));
    log_norm_const_ = -0.5 * (d * kLog2Pi + log_det);
}

double GaussianTarget::log_potential(std::span<const double> theta) const {
    check_dim(theta);
    const int d = dim();
    std::vector<double> r(d);
    for (int i = 0; i < d; ++i) r[i] = theta[i] - params_.mean[i];
    const std::vector<double> pr = matvec(precision_, r);
    return -0.5 * dot(r, pr);
}

double GaussianTarget::log_density(std::span<const double> theta) const {
    return log_potential(theta) + log_norm_const_;
}

std::vector<double> GaussianTarget::score_impl(std::span<const double> theta) const {
    const int d = dim();
    std::vector<double> r(d);
    for (int i = 0; i < d; ++i) r[i] = theta[i] - params_.mean[i];
    std::vector<double> s = matvec(precision_, r);
    for (double& v : s) v = -v;
    return s;
}

DenseMatrix GaussianTarget::sample_target(int n, SeededRng& rng) const {
    const int d = dim();
    DenseMatrix out(n, d);
    std::vector<double> z(d);
    for (int i = 0; i < n; ++i) {
        rng.fill_normal(z);
        const std::vector<double> lz = matvec(chol_, z);
        for (int j = 0; j < d; ++j) out.at(i, j) = params_.mean[j] + lz[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian mixture target

MixtureTarget::MixtureTarget(MixtureTargetParams params) : params_(std::move(params)) {
    const int k = params_.order();
    if (k < 1) throw DimensionMismatch("MixtureTarget: empty mixture");
    if (static_cast<int>(params_.means.size()) != k ||
        static_cast<int>(params_.covariances.size()) != k)
        throw DimensionMismatch("MixtureTarget: component count mismatch");
    dim_ = static_cast<int>(params_.means[0].size());
    double weight_sum = 0.0;
    for (double w : params_.weights) {
        if (w <= 0.0) throw DimensionMismatch("MixtureTarget: weights must be positive");
        weight_sum += w;
    }
    if (std::abs(weight_sum - 1.0) > 1e-12)
        throw DimensionMismatch("MixtureTarget: weights must sum to one");
    chols_.reserve(k);
    precisions_.reserve(k);
    for (int c = 0; c < k; ++c) {
        if (static_cast<int>(params_.means[c].size()) != dim_)
            throw DimensionMismatch("MixtureTarget: mean length mismatch");
        chols_.push_back(cholesky(params_.covariances[c]));
        precisions_.push_back(spd_inverse(params_.covariances[c]));
        double log_det = 0.0;
        for (int i = 0; i < dim_; ++i) log_det += 2.0 * std::log(chols_[c].at(i, i));
        log_norm_consts_.push_back(-0.5 * (dim_ * kLog2Pi + log_det));
        log_weights_.push_back(std::log(params_.weights[c]));
    }
}

void MixtureTarget::component_log_terms(std::span<const double> theta,
                                        std::vector<double>& log_terms) const {
    const int k = params_.order();
    log_terms.resize(k);
    std::vector<double> r(dim_);
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < dim_; ++i) r[i] = theta[i] - params_.means[c][i];
        const std::vector<double> pr = matvec(precisions_[c], r);
        log_terms[c] = log_weights_[c] + log_norm_consts_[c] - 0.5 * dot(r, pr);
    }
}

double MixtureTarget::log_potential(std::span<const double> theta) const {
    return log_density(theta);
}

double MixtureTarget::log_density(std::span<const double> theta) const {
    check_dim(theta);
    std::vector<double> log_terms;
    component_log_terms(theta, log_terms);
    return logsumexp(log_terms);
}

std::vector<double> MixtureTarget::score_impl(std::span<const double> theta) const {
    const int k = params_.order();
    std::vector<double> log_terms;
    component_log_terms(theta, log_terms);
    const double lse = logsumexp(log_terms);
    std::vector<double> s(dim_, 0.0);
    std::vector<double> r(dim_);
    for (int c = 0; c < k; ++c) {
        const double resp = std::exp(log_terms[c] - lse);
        for (int i = 0; i < dim_; ++i) r[i] = theta[i] - params_.means[c][i];
        const std::vector<double> pr = matvec(precisions_[c], r);
        for (int i = 0; i < dim_; ++i) s[i] -= resp * pr[i];
    }
    return s;
}

DenseMatrix MixtureTarget::sample_target(int n, SeededRng& rng) const {
    std::vector<int> unused;
    return sample_with_components(n, rng, unused);
}

DenseMatrix MixtureTarget::sample_with_components(int n, SeededRng& rng,
                                                  std::vector<int>& components) const {
    const int k = params_.order();
    DenseMatrix out(n, dim_);
    components.assign(n, 0);
    std::vector<double> z(dim_);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        int c = k - 1;
        double acc = 0.0;
        for (int j = 0; j < k; ++j) {
            acc += params_.weights[j];
            if (u < acc) {
                c = j;
                break;
            }
        }
        components[i] = c;
        rng.fill_normal(z);
        const std::vector<double> lz = matvec(chols_[c], z);
        for (int j = 0; j < dim_; ++j) out.at(i, j) = params_.means[c][j] + lz[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bayesian logistic regression target

namespace {
inline double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}
} // namespace

BayesLogisticTarget::BayesLogisticTarget(BayesDataset data) : data_(std::move(data)) {
    if (data_.size() < 1) throw EmptyInput("BayesLogisticTarget: empty dataset");
    if (data_.prior_variance <= 0.0)
        throw DimensionMismatch("BayesLogisticTarget: prior_variance must be positive");
}

double BayesLogisticTarget::log_potential(std::span<const double> theta) const {
    check_dim(theta);
    double acc = -0.5 * dot(theta, theta) / data_.prior_variance;
    for (int i = 0; i < data_.size(); ++i) {
        const double z = dot(data_.inputs.row(i), theta);
        // y*z - softplus(z) = log p(y|x, theta) for y in {0,1}
        acc += data_.labels[i] * z - softplus(z);
    }
    return acc;
}

std::vector<double> BayesLogisticTarget::score_impl(std::span<const double> theta) const {
    std::vector<int> all(data_.size());
    std::iota(all.begin(), all.end(), 0);
    return minibatch_score_impl(theta, all);
}

std::vector<double>
BayesLogisticTarget::minibatch_score_impl(std::span<const double> theta,
                                          std::span<const int> batch) const {
    const int p = dim();
    const double scale = static_cast<double>(data_.size()) / static_cast<double>(batch.size());
    std::vector<double> g(p);
    for (int j = 0; j < p; ++j) g[j] = -theta[j] / data_.prior_variance;
    for (int idx : batch) {
        const auto x = data_.inputs.row(idx);
        const double resid = data_.labels[idx] - sigmoid(dot(x, theta));
        for (int j = 0; j < p; ++j) g[j] += scale * resid * x[j];
    }
    return g;
}

std::vector<double> BayesLogisticTarget::predict_proba(std::span<const double> theta,
                                                       std::span<const double> x) const {
    const double p1 = sigmoid(dot(x, theta));
    return {1.0 - p1, p1};
}

// ---------------------------------------------------------------------------
// Bayesian MLP target

BayesMlpTarget::BayesMlpTarget(MlpArchitecture arch, BayesDataset data)
    : arch_(arch), data_(std::move(data)) {
    if (data_.size() < 1) throw EmptyInput("BayesMlpTarget: empty dataset");
    if (data_.inputs.cols != arch_.input_dim)
        throw DimensionMismatch("BayesMlpTarget: input width mismatch");
    if (data_.likelihood_temperature <= 0.0)
        throw DimensionMismatch("BayesMlpTarget: temperature must be positive");
}

// theta layout: [W1 (H x P, row-major), b1 (H), W2 (K x H, row-major), b2 (K)]
double BayesMlpTarget::log_lik_sum(std::span<const double> theta, std::span<const int> batch,
                                   std::vector<double>* grad) const {
    const int P = arch_.input_dim;
    const int H = arch_.hidden_dim;
    const int K = arch_.classes;
    const double* w1 = theta.data();
    const double* b1 = w1 + H * P;
    const double* w2 = b1 + H;
    const double* b2 = w2 + K * H;
    if (grad) grad->assign(theta.size(), 0.0);

    std::vector<double> h(H), z(K), probs(K), dz(K), dh(H);
    double total = 0.0;
    for (int idx : batch) {
        const auto x = data_.inputs.row(idx);
        for (int i = 0; i < H; ++i) {
            double a = b1[i];
            const double* row = w1 + i * P;
            for (int j = 0; j < P; ++j) a += row[j] * x[j];
            h[i] = std::tanh(a);
        }
        for (int k = 0; k < K; ++k) {
            double a = b2[k];
            const double* row = w2 + k * H;
            for (int i = 0; i < H; ++i) a += row[i] * h[i];
            z[k] = a;
        }
        const double lse = logsumexp(z);
        const int y = data_.labels[idx];
        total += z[y] - lse;
        if (!grad) continue;

        for (int k = 0; k < K; ++k) probs[k] = std::exp(z[k] - lse);
        for (int k = 0; k < K; ++k) dz[k] = (k == y ? 1.0 : 0.0) - probs[k];
        double* g1 = grad->data();
        double* gb1 = g1 + H * P;
        double* g2 = gb1 + H;
        double* gb2 = g2 + K * H;
        std::fill(dh.begin(), dh.end(), 0.0);
        for (int k = 0; k < K; ++k) {
            double* row = g2 + k * H;
            for (int i = 0; i < H; ++i) row[i] += dz[k] * h[i];
            gb2[k] += dz[k];
            const double* wrow = w2 + k * H;
            for (int i = 0; i < H; ++i) dh[i] += dz[k] * wrow[i];
        }
        for (int i = 0; i < H; ++i) {
            const double da = dh[i] * (1.0 - h[i] * h[i]);
            double* row = g1 + i * P;
            for (int j = 0; j < P; ++j) row[j] += da * x[j];
            gb1[i] += da;
        }
    }
    return total;
}

double BayesMlpTarget::log_potential(std::span<const double> theta) const {
    check_dim(theta);
    std::vector<int> all(data_.size());
    std::iota(all.begin(), all.end(), 0);
    const double lik = log_lik_sum(theta, all, nullptr);
    return -0.5 * dot(theta, theta) / data_.prior_variance +
           lik / data_.likelihood_temperature;
}

std::vector<double> BayesMlpTarget::score_impl(std::span<const double> theta) const {
    std::vector<int> all(data_.size());
    std::iota(all.begin(), all.end(), 0);
    return minibatch_score_impl(theta, all);
}

std::vector<double> BayesMlpTarget::minibatch_score_impl(std::span<const double> theta,
                                                         std::span<const int> batch) const {
    std::vector<double> grad;
    log_lik_sum(theta, batch, &grad);
    const double scale = static_cast<double>(data_.size()) /
                         (static_cast<double>(batch.size()) * data_.likelihood_temperature);
    std::vector<double> s(theta.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = -theta[i] / data_.prior_variance + scale * grad[i];
    return s;
}

std::vector<double> BayesMlpTarget::predict_proba(std::span<const double> theta,
                                                  std::span<const double> x) const {
    const int P = arch_.input_dim;
    const int H = arch_.hidden_dim;
    const int K = arch_.classes;
    const double* w1 = theta.data();
    const double* b1 = w1 + H * P;
    const double* w2 = b1 + H;
    const double* b2 = w2 + K * H;
    std::vector<double> h(H), z(K);
    for (int i = 0; i < H; ++i) {
        double a = b1[i];
        const double* row = w1 + i * P;
        for (int j = 0; j < P; ++j) a += row[j] * x[j];
        h[i] = std::tanh(a);
    }
    for (int k = 0; k < K; ++k) {
        double a = b2[k];
        const double* row = w2 + k * H;
        for (int i = 0; i < H; ++i) a += row[i] * h[i];
        z[k] = a;
    }
    return softmax(z);
}

// ---------------------------------------------------------------------------
// Generators

namespace {

DenseMatrix random_pd_covariance(int dim, SeededRng& rng) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double a = std::sqrt(0.3) * rng.normal();
        DenseMatrix x(dim, dim);
        rng.fill_normal(x.entries);
        DenseMatrix cov = matmul(x, transpose(x));
        for (auto& v : cov.entries) v *= a;
        for (int i = 0; i < dim; ++i) cov.at(i, i) += 1.0;
        try {
            cholesky(cov);
            return cov;
        } catch (const NotPositiveDefinite&) {
        }
    }
    throw GenerationFailed("random_pd_covariance: no positive-definite draw in 1000 attempts");
}

} // namespace

MixtureTargetParams make_random_mixture(int dim, int order, SeededRng& rng) {
    if (dim < 1 || order < 1)
        throw DimensionMismatch("make_random_mixture: dim and order must be >= 1");
    MixtureTargetParams params;
    params.means.reserve(order);
    params.covariances.reserve(order);
    for (int c = 0; c < order; ++c) {
        params.means.push_back(rng.normals(dim));
        params.covariances.push_back(random_pd_covariance(dim, rng));
    }
    std::vector<double> logits(order);
    for (int c = 0; c < order; ++c) logits[c] = 1.0 + std::sqrt(0.3) * rng.normal();
    params.weights = softmax(logits);
    return params;
}

GaussianTargetParams make_random_gaussian(int dim, SeededRng& rng) {
    MixtureTargetParams mix = make_random_mixture(dim, 1, rng);
    return {std::move(mix.means[0]), std::move(mix.covariances[0])};
}

namespace {

BayesDataset make_logistic_data(int n, int p, std::span<const double> w_true, SeededRng& rng,
                                double prior_variance) {
    BayesDataset data;
    data.inputs = DenseMatrix(n, p);
    rng.fill_normal(data.inputs.entries);
    data.labels.resize(n);
    data.prior_variance = prior_variance;
    for (int i = 0; i < n; ++i) {
        const double prob = sigmoid(dot(data.inputs.row(i), w_true));
        data.labels[i] = rng.uniform() < prob ? 1 : 0;
    }
    return data;
}

} // namespace

BayesProblem make_bayes_logistic(int n, int p, SeededRng& rng, int test_n,
                                 double prior_variance) {
    if (n < 2 || p < 1) throw DimensionMismatch("make_bayes_logistic: need n >= 2, p >= 1");
    BayesProblem problem;
    problem.true_weights = rng.normals(p);
    problem.data = make_logistic_data(n, p, problem.true_weights, rng, prior_variance);
    if (test_n > 0)
        problem.test = make_logistic_data(test_n, p, problem.true_weights, rng, prior_variance);
    problem.oracle = std::make_unique<BayesLogisticTarget>(problem.data);
    return problem;
}

namespace {

BayesDataset make_blob_data(int n, int input_dim, int classes,
                            const std::vector<std::vector<double>>& centers, SeededRng& rng,
                            double prior_variance, double tau) {
    BayesDataset data;
    data.inputs = DenseMatrix(n, input_dim);
    data.labels.resize(n);
    data.prior_variance = prior_variance;
    data.likelihood_temperature = tau;
    std::vector<double> z(input_dim);
    for (int i = 0; i < n; ++i) {
        const int y = i % classes;
        data.labels[i] = y;
        rng.fill_normal(z);
        for (int j = 0; j < input_dim; ++j)
            data.inputs.at(i, j) = centers[y][j] + 0.7 * z[j];
    }
    return data;
}

} // namespace

BayesProblem make_bayes_mlp(int n, int input_dim, int hidden_dim, int classes, double tau,
                            SeededRng& rng, int test_n, double prior_variance) {
    if (n < 1 || input_dim < 1 || hidden_dim < 1 || classes < 1)
        throw DimensionMismatch("make_bayes_mlp: all counts must be >= 1");
    if (tau <= 0.0) throw DimensionMismatch("make_bayes_mlp: tau must be positive");
    std::vector<std::vector<double>> centers(classes);
    for (int k = 0; k < classes; ++k) {
        centers[k] = rng.normals(input_dim);
        for (double& v : centers[k]) v *= 2.0;
    }
    BayesProblem problem;
    problem.data = make_blob_data(n, input_dim, classes, centers, rng, prior_variance, tau);
    if (test_n > 0)
        problem.test =
            make_blob_data(test_n, input_dim, classes, centers, rng, prior_variance, tau);
    MlpArchitecture arch{input_dim, hidden_dim, classes};
    problem.oracle = std::make_unique<BayesMlpTarget>(arch, problem.data);
    return problem;
}

std::vector<int> draw_batch(int n, int size, SeededRng& rng) {
    if (size < 1 || size > n) throw EmptyBatch("draw_batch: need 1 <= size <= n");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < size; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(size);
    return idx;
}

} // namespace proxvi
