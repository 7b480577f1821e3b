#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "proxvi/dense_matrix.hpp"
#include "proxvi/rng.hpp"

namespace proxvi {

/// One outer iteration's frozen Monte Carlo state: samples from q_t, their
/// q_t-scores, and the (possibly noisy, possibly mini-batch) target scores.
/// aux carries family-specific latents; the planar flow stores the base-space
/// z that generated each theta.
struct SampleBatch {
    DenseMatrix thetas;        // S x d
    DenseMatrix prev_scores;   // S x d
    DenseMatrix target_scores; // S x d
    DenseMatrix aux;           // S x d or 0 x 0
    int size() const { return thetas.rows; }
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// A variational density q_lambda. Parameters are exposed as one flat
/// unconstrained vector so optimizers stay family-agnostic; positivity
/// constraints live inside the parameterization (log scales, log-diagonal
/// Cholesky factors, the planar flow's u-hat map).
class VariationalFamily {
  public:
    virtual ~VariationalFamily() = default;

    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual int param_count() const = 0;
    virtual std::vector<double> params() const = 0;
    virtual void set_params(std::span<const double> p) = 0;
    virtual std::unique_ptr<VariationalFamily> clone() const = 0;

    /// s i.i.d. draws (rows). Plain sampling, no reparameterization needed.
    /// If aux is non-null it receives per-sample latents (flow only).
    virtual DenseMatrix sample(int s, SeededRng& rng, DenseMatrix* aux = nullptr) const = 0;
    virtual double log_density(std::span<const double> theta) const = 0;
    /// Exact grad_theta log q_lambda(theta).
    virtual std::vector<double> score_theta(std::span<const double> theta) const = 0;

    /// Proximal score-matching objective over a frozen batch:
    ///   (1/S) sum_i [ alpha * |g(theta_i) - prev_i|^2 + |g(theta_i) - target_i|^2 ]
    /// with g = score_theta, plus its exact lambda-gradient holding the batch
    /// constant.
    virtual LossGrad proximal_loss_grad(const SampleBatch& batch, double alpha) const = 0;

    /// One reparametrized draw for the ELBO baseline. raw keeps the
    /// underlying noise so the pathwise gradient can be assembled later.
    struct ReparamDraw {
        std::vector<double> theta;
        std::vector<double> raw;
    };
    virtual ReparamDraw reparam_sample(SeededRng& rng) const = 0;
    /// Adds the pathwise gradient of log q(theta(lambda)) - log Phi(theta(lambda))
    /// for one draw to grad (unscaled), given the target score at theta.
    /// Returns log q(theta).
    virtual double elbo_term_grad(const ReparamDraw& draw,
                                  std::span<const double> target_score,
                                  std::span<double> grad) const = 0;

    /// Default initialization used by the harness: mean-like parameters drawn
    /// N(0,1), spreads at identity scale.
    virtual void init_random(SeededRng& rng) = 0;

  protected:
    void check_batch(const SampleBatch& batch) const;
    void check_theta(std::span<const double> theta) const;
};

class GaussianVariational : public VariationalFamily {
  public:
    enum class Cov { diagonal, full };

    GaussianVariational(int dim, Cov cov); // N(0, I)
    static GaussianVariational diagonal(std::vector<double> mean,
                                        std::vector<double> log_std);
    static GaussianVariational full_cov(std::vector<double> mean, DenseMatrix chol);

    std::string name() const override {
        return cov_ == Cov::diagonal ? "gauss_diag" : "gauss_full";
    }
    int dim() const override { return static_cast<int>(mean_.size()); }
    int param_count() const override;
    std::vector<double> params() const override;
    void set_params(std::span<const double> p) override;
    std::unique_ptr<VariationalFamily> clone() const override;

    DenseMatrix sample(int s, SeededRng& rng, DenseMatrix* aux = nullptr) const override;
    double log_density(std::span<const double> theta) const override;
    std::vector<double> score_theta(std::span<const double> theta) const override;
    LossGrad proximal_loss_grad(const SampleBatch& batch, double alpha) const override;
    ReparamDraw reparam_sample(SeededRng& rng) const override;
    double elbo_term_grad(const ReparamDraw& draw, std::span<const double> target_score,
                          std::span<double> grad) const override;
    void init_random(SeededRng& rng) override;

    bool is_full() const { return cov_ == Cov::full; }
    const std::vector<double>& mean() const { return mean_; }
    /// Realized covariance matrix.
    DenseMatrix covariance() const;
    /// Lower-triangular factor of the realized covariance.
    DenseMatrix chol() const;
    /// Sets V = value * I, keeping the mean.
    void set_isotropic_covariance(double value);

  private:
    Cov cov_;
    std::vector<double> mean_;
    std::vector<double> log_std_; // diagonal case
    DenseMatrix chol_;            // full case, positive diagonal
    void floor_spread();
};

class MixtureVariational : public VariationalFamily {
  public:
    MixtureVariational(int dim, int order, double gumbel_temperature = 0.05);

    std::string name() const override { return "gauss_mixture"; }
    int dim() const override { return dim_; }
    int param_count() const override { return order_ * (1 + 2 * dim_); }
    std::vector<double> params() const override;
    void set_params(std::span<const double> p) override;
    std::unique_ptr<VariationalFamily> clone() const override;

    DenseMatrix sample(int s, SeededRng& rng, DenseMatrix* aux = nullptr) const override;
    double log_density(std::span<const double> theta) const override;
    std::vector<double> score_theta(std::span<const double> theta) const override;
    LossGrad proximal_loss_grad(const SampleBatch& batch, double alpha) const override;
    ReparamDraw reparam_sample(SeededRng& rng) const override;
    double elbo_term_grad(const ReparamDraw& draw, std::span<const double> target_score,
                          std::span<double> grad) const override;
    void init_random(SeededRng& rng) override;

    int order() const { return order_; }
    std::vector<double> weights() const;
    std::span<const double> component_mean(int k) const;
    std::span<const double> component_log_std(int k) const;
    double gumbel_temperature() const { return gumbel_temperature_; }

    std::vector<double>& mutable_logits() { return logits_; }
    std::vector<double>& mutable_means() { return means_; }
    std::vector<double>& mutable_log_stds() { return log_stds_; }

  private:
    int dim_ = 0;
    int order_ = 0;
    std::vector<double> logits_;   // K
    std::vector<double> means_;    // K*d, component-major
    std::vector<double> log_stds_; // K*d
    double gumbel_temperature_ = 0.05;
    // log w_k + log N(theta; m_k, sigma_k^2) per component
    void component_log_terms(std::span<const double> theta, std::vector<double>& out) const;
    void floor_spread();
};

/// Single planar flow layer over a standard-normal base:
///   T(z) = z + u_hat * tanh(w^T z + b)
/// with u_hat the standard invertibility reparameterization of u_raw.
class PlanarFlowVariational : public VariationalFamily {
  public:
    explicit PlanarFlowVariational(int dim);

    std::string name() const override { return "planar_flow"; }
    int dim() const override { return dim_; }
    int param_count() const override { return 2 * dim_ + 1; }
    std::vector<double> params() const override;
    void set_params(std::span<const double> p) override;
    std::unique_ptr<VariationalFamily> clone() const override;

    DenseMatrix sample(int s, SeededRng& rng, DenseMatrix* aux = nullptr) const override;
    double log_density(std::span<const double> theta) const override;
    std::vector<double> score_theta(std::span<const double> theta) const override;
    LossGrad proximal_loss_grad(const SampleBatch& batch, double alpha) const override;
    ReparamDraw reparam_sample(SeededRng& rng) const override;
    double elbo_term_grad(const ReparamDraw& draw, std::span<const double> target_score,
                          std::span<double> grad) const override;
    void init_random(SeededRng& rng) override;

    /// z with T(z) = theta, via the monotone scalar equation in w^T z + b.
    std::vector<double> invert_flow(std::span<const double> theta) const;
    /// T(z).
    std::vector<double> forward(std::span<const double> z) const;
    std::vector<double> u_hat() const;

    void set_raw(std::vector<double> u_raw, std::vector<double> w, double b);

  private:
    int dim_ = 0;
    std::vector<double> u_raw_;
    std::vector<double> w_;
    double b_ = 0.0;
};

/// Closed-form minimizer of the proximal objective within the full-covariance
/// Gaussian family against a Gaussian target: with beta = alpha / (1 + alpha),
///   V' = (beta V^-1 + (1-beta) Sigma^-1)^-1,
///   m' = V' (beta V^-1 m + (1-beta) Sigma^-1 mu).
GaussianVariational gaussian_projection(const GaussianVariational& prev,
                                        std::span<const double> target_mean,
                                        const DenseMatrix& target_cov, double alpha);

} // namespace proxvi
