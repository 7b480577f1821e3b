#pragma once

#include <string>
#include <vector>

#include "proxvi/families.hpp"
#include "proxvi/targets.hpp"

namespace proxvi {

struct MetricSchedule {
    // Evaluated in this order at every recording point; valid names:
    // fkl, nelbo, param_err, ece, nll, loss.
    std::vector<std::string> which{"fkl", "nelbo"};
    long every_k_outer = 10;
    int fkl_samples = 500;
    int nelbo_samples = 1000;
    int ece_bins = 10;
    int posterior_predictive_samples = 5;
};

/// (1/n) sum_i [log pi(x_i) - log q(x_i)], x_i ~ pi. Needs a samplable
/// target with a normalized density.
double forward_kl(const TargetOracle& target, const VariationalFamily& family, int n,
                  SeededRng& rng);

/// (1/n) sum_i [log q(theta_i) - log Phi(theta_i)], theta_i ~ q. Uses the
/// log-potential only; never touches the score-call counter.
double negative_elbo(const TargetOracle& target, const VariationalFamily& family, int n,
                     SeededRng& rng);

/// |m - m_true|_2 + |V - V_true|_F for Gaussian q against a Gaussian target.
double param_error(const GaussianVariational& family, const GaussianTargetParams& truth);

/// Expected calibration error over all (example, class) confidence entries,
/// binned equal-width on [0,1]:
///   (1/M) sum_m (binsize[m]/(N*K)) * |acc[m] - conf[m]|
/// where conf[m] averages the entries' confidences and acc[m] averages the
/// indicator [label == class] over entries in the bin.
double ece(const std::vector<std::vector<double>>& confidences, const std::vector<int>& labels,
           int m_bins);

/// Mean over the test set of -log[(1/R) sum_r p(y|x, theta_r)].
double predictive_nll(const TargetOracle& target,
                      const std::vector<std::vector<double>>& posterior_samples,
                      const BayesDataset& test_set);

/// Posterior-averaged class probabilities for every test point:
/// row i holds (1/R) sum_r p(.|x_i, theta_r).
std::vector<std::vector<double>>
posterior_predictive(const TargetOracle& target,
                     const std::vector<std::vector<double>>& posterior_samples,
                     const BayesDataset& test_set);

} // namespace proxvi
