#pragma once

#include <atomic>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "proxvi/dense_matrix.hpp"
#include "proxvi/rng.hpp"

namespace proxvi {

enum class TargetKind { gaussian, gaussian_mixture, bayes_logistic, bayes_mlp };

std::string to_string(TargetKind kind);

struct NoiseConfig {
    double beta = 0.0; // 0 means exact scores
};

/// s + beta * ||s||_inf * eps with eps ~ N(0, I); unbiased for any beta.
std::vector<double> inject_noise(std::span<const double> score, const NoiseConfig& noise,
                                 SeededRng& rng);

struct GaussianTargetParams {
    std::vector<double> mean;
    DenseMatrix covariance;
};

struct MixtureTargetParams {
    std::vector<double> weights;
    std::vector<std::vector<double>> means;
    std::vector<DenseMatrix> covariances;
    int order() const { return static_cast<int>(weights.size()); }
};

struct BayesDataset {
    DenseMatrix inputs; // n x p
    std::vector<int> labels;
    double prior_variance = 1.0;
    double likelihood_temperature = 1.0;
    int size() const { return inputs.rows; }
};

/// A target distribution pi(theta) known up to normalization. Exposes the
/// log-potential log Phi and its gradient (the score); every score or
/// mini-batch score evaluation bumps an atomic counter so experiment budgets
/// can be audited after the fact. log_potential itself is free.
class TargetOracle {
  public:
    virtual ~TargetOracle() = default;

    virtual TargetKind kind() const = 0;
    virtual int dim() const = 0;

    /// Unnormalized log target log Phi(theta).
    virtual double log_potential(std::span<const double> theta) const = 0;

    /// grad log Phi(theta). Counts one score call.
    std::vector<double> score(std::span<const double> theta) const;

    /// grad log p(theta) + (|D|/|B|) grad log p(B|theta) for Bayesian kinds.
    /// The batch is index-based and should be drawn uniformly without
    /// replacement (see draw_batch). Counts one score call.
    std::vector<double> minibatch_score(std::span<const double> theta,
                                        std::span<const int> batch) const;

    long long score_calls() const { return score_calls_.load(std::memory_order_relaxed); }
    void reset_score_calls() { score_calls_.store(0, std::memory_order_relaxed); }

    /// True for synthetic kinds with exact samplers and normalized densities.
    virtual bool samplable() const { return false; }
    /// Normalized log pi(theta); NotSamplable unless samplable().
    virtual double log_density(std::span<const double> theta) const;
    /// n i.i.d. draws (rows); NotSamplable unless samplable().
    virtual DenseMatrix sample_target(int n, SeededRng& rng) const;

    /// Number of observations for Bayesian kinds, 0 otherwise.
    virtual int data_size() const { return 0; }
    /// Class probabilities under parameters theta at input x (Bayesian kinds).
    virtual std::vector<double> predict_proba(std::span<const double> theta,
                                              std::span<const double> x) const;

  protected:
    virtual std::vector<double> score_impl(std::span<const double> theta) const = 0;
    virtual std::vector<double> minibatch_score_impl(std::span<const double> theta,
                                                     std::span<const int> batch) const;
    void check_dim(std::span<const double> theta) const;

  private:
    mutable std::atomic<long long> score_calls_{0};
};

class GaussianTarget : public TargetOracle {
  public:
    explicit GaussianTarget(GaussianTargetParams params);

    TargetKind kind() const override { return TargetKind::gaussian; }
    int dim() const override { return static_cast<int>(params_.mean.size()); }
    double log_potential(std::span<const double> theta) const override;
    bool samplable() const override { return true; }
    double log_density(std::span<const double> theta) const override;
    DenseMatrix sample_target(int n, SeededRng& rng) const override;

    const GaussianTargetParams& params() const { return params_; }

  protected:
    std::vector<double> score_impl(std::span<const double> theta) const override;

  private:
    GaussianTargetParams params_;
    DenseMatrix chol_;
    DenseMatrix precision_;
    double log_norm_const_ = 0.0;
};

class MixtureTarget : public TargetOracle {
  public:
    explicit MixtureTarget(MixtureTargetParams params);

    TargetKind kind() const override { return TargetKind::gaussian_mixture; }
    int dim() const override { return dim_; }
    double log_potential(std::span<const double> theta) const override;
    bool samplable() const override { return true; }
    double log_density(std::span<const double> theta) const override;
    DenseMatrix sample_target(int n, SeededRng& rng) const override;
    /// Like sample_target but also reports the generating component per row.
    DenseMatrix sample_with_components(int n, SeededRng& rng, std::vector<int>& components) const;

    const MixtureTargetParams& params() const { return params_; }

  protected:
    std::vector<double> score_impl(std::span<const double> theta) const override;

  private:
    MixtureTargetParams params_;
    int dim_ = 0;
    std::vector<DenseMatrix> chols_;
    std::vector<DenseMatrix> precisions_;
    std::vector<double> log_norm_consts_;
    std::vector<double> log_weights_;
    // Per-component log density and responsibilities at theta.
    void component_log_terms(std::span<const double> theta, std::vector<double>& log_terms) const;
};

class BayesLogisticTarget : public TargetOracle {
  public:
    explicit BayesLogisticTarget(BayesDataset data);

    TargetKind kind() const override { return TargetKind::bayes_logistic; }
    int dim() const override { return data_.inputs.cols; }
    double log_potential(std::span<const double> theta) const override;
    int data_size() const override { return data_.size(); }
    std::vector<double> predict_proba(std::span<const double> theta,
                                      std::span<const double> x) const override;

    const BayesDataset& data() const { return data_; }

  protected:
    std::vector<double> score_impl(std::span<const double> theta) const override;
    std::vector<double> minibatch_score_impl(std::span<const double> theta,
                                             std::span<const int> batch) const override;

  private:
    BayesDataset data_;
};

struct MlpArchitecture {
    int input_dim = 2;
    int hidden_dim = 16;
    int classes = 3;
    int param_count() const {
        return (input_dim + 1) * hidden_dim + (hidden_dim + 1) * classes;
    }
};

/// One-hidden-layer tanh classifier with Gaussian prior and tempered
/// cross-entropy likelihood log p(D|theta) = -loss(theta; D)/tau, where loss
/// is the summed per-example cross entropy.
class BayesMlpTarget : public TargetOracle {
  public:
    BayesMlpTarget(MlpArchitecture arch, BayesDataset data);

    TargetKind kind() const override { return TargetKind::bayes_mlp; }
    int dim() const override { return arch_.param_count(); }
    double log_potential(std::span<const double> theta) const override;
    int data_size() const override { return data_.size(); }
    std::vector<double> predict_proba(std::span<const double> theta,
                                      std::span<const double> x) const override;

    const BayesDataset& data() const { return data_; }
    const MlpArchitecture& architecture() const { return arch_; }

  protected:
    std::vector<double> score_impl(std::span<const double> theta) const override;
    std::vector<double> minibatch_score_impl(std::span<const double> theta,
                                             std::span<const int> batch) const override;

  private:
    MlpArchitecture arch_;
    BayesDataset data_;
    // Sum over the batch of per-example log softmax probabilities at the
    // label, and optionally its gradient.
    double log_lik_sum(std::span<const double> theta, std::span<const int> batch,
                       std::vector<double>* grad) const;
};

/// Mixture parameters with means ~ N(0,1) elementwise and covariances
/// I + a X X^T (X standard normal, a ~ N(0, 0.3)) resampled until positive
/// definite; logits 1 + b with independent b ~ N(0, 0.3), softmax-normalized.
MixtureTargetParams make_random_mixture(int dim, int order, SeededRng& rng);

/// Single-Gaussian version of the same generator.
GaussianTargetParams make_random_gaussian(int dim, SeededRng& rng);

struct BayesProblem {
    std::unique_ptr<TargetOracle> oracle;
    BayesDataset data;
    BayesDataset test; // held out, same generating process; empty when test_n = 0
    std::vector<double> true_weights;
};

BayesProblem make_bayes_logistic(int n, int p, SeededRng& rng, int test_n = 0,
                                 double prior_variance = 1.0);

BayesProblem make_bayes_mlp(int n, int input_dim, int hidden_dim, int classes, double tau,
                            SeededRng& rng, int test_n = 0, double prior_variance = 1.0);

/// Uniform batch of `size` distinct indices from [0, n).
std::vector<int> draw_batch(int n, int size, SeededRng& rng);

} // namespace proxvi
