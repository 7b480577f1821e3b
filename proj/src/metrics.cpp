#include "proxvi/metrics.hpp"

#include <cmath>

#include "proxvi/errors.hpp"
#include "proxvi/math_util.hpp"

namespace proxvi {

double forward_kl(const TargetOracle& target, const VariationalFamily& family, int n,
                  SeededRng& rng) {
    if (n < 1) throw EmptyInput("forward_kl: n must be >= 1");
    if (!target.samplable()) throw NotSamplable("forward_kl: target is not samplable");
    const DenseMatrix draws = target.sample_target(n, rng);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto x = draws.row(i);
        acc += target.log_density(x) - family.log_density(x);
    }
    return acc / n;
}

double negative_elbo(const TargetOracle& target, const VariationalFamily& family, int n,
                     SeededRng& rng) {
    if (n < 1) throw EmptyInput("negative_elbo: n must be >= 1");
    const DenseMatrix draws = family.sample(n, rng);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto theta = draws.row(i);
        acc += family.log_density(theta) - target.log_potential(theta);
    }
    return acc / n;
}

double param_error(const GaussianVariational& family, const GaussianTargetParams& truth) {
    const int d = family.dim();
    if (static_cast<int>(truth.mean.size()) != d)
        throw FamilyMismatch("param_error: dimension mismatch with truth");
    double mean_err = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = family.mean()[i] - truth.mean[i];
        mean_err += diff * diff;
    }
    const DenseMatrix v = family.covariance();
    double cov_err = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double diff = v.at(i, j) - truth.covariance.at(i, j);
            cov_err += diff * diff;
        }
    return std::sqrt(mean_err) + std::sqrt(cov_err);
}

double ece(const std::vector<std::vector<double>>& confidences, const std::vector<int>& labels,
           int m_bins) {
    if (confidences.empty()) throw EmptyInput("ece: no predictions");
    if (confidences.size() != labels.size())
        throw DimensionMismatch("ece: confidences/labels length mismatch");
    if (m_bins < 1) throw EmptyInput("ece: need at least one bin");
    const std::size_t n = confidences.size();
    const std::size_t k = confidences[0].size();
    std::vector<long> count(m_bins, 0);
    std::vector<double> conf_sum(m_bins, 0.0);
    std::vector<double> acc_sum(m_bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (confidences[i].size() != k)
            throw DimensionMismatch("ece: ragged confidence vectors");
        double total = 0.0;
        for (double p : confidences[i]) total += p;
        if (std::abs(total - 1.0) > 1e-9)
            throw DimensionMismatch("ece: probability vector does not sum to 1");
        for (std::size_t j = 0; j < k; ++j) {
            const double p = confidences[i][j];
            int bin = static_cast<int>(p * m_bins);
            bin = std::min(std::max(bin, 0), m_bins - 1);
            ++count[bin];
            conf_sum[bin] += p;
            acc_sum[bin] += labels[i] == static_cast<int>(j) ? 1.0 : 0.0;
        }
    }
    const double total_entries = static_cast<double>(n) * static_cast<double>(k);
    double acc = 0.0;
    for (int m = 0; m < m_bins; ++m) {
        if (count[m] == 0) continue;
        const double conf_mean = conf_sum[m] / count[m];
        const double acc_mean = acc_sum[m] / count[m];
        acc += (count[m] / total_entries) * std::abs(acc_mean - conf_mean);
    }
    return acc / m_bins;
}

std::vector<std::vector<double>>
posterior_predictive(const TargetOracle& target,
                     const std::vector<std::vector<double>>& posterior_samples,
                     const BayesDataset& test_set) {
    if (posterior_samples.empty()) throw EmptyInput("posterior_predictive: no samples");
    if (test_set.size() < 1) throw EmptyInput("posterior_predictive: empty test set");
    const double inv_r = 1.0 / static_cast<double>(posterior_samples.size());
    std::vector<std::vector<double>> out(test_set.size());
    for (int i = 0; i < test_set.size(); ++i) {
        const auto x = test_set.inputs.row(i);
        std::vector<double> avg;
        for (const auto& theta : posterior_samples) {
            const std::vector<double> p = target.predict_proba(theta, x);
            if (avg.empty()) avg.assign(p.size(), 0.0);
            for (std::size_t j = 0; j < p.size(); ++j) avg[j] += inv_r * p[j];
        }
        out[i] = std::move(avg);
    }
    return out;
}

double predictive_nll(const TargetOracle& target,
                      const std::vector<std::vector<double>>& posterior_samples,
                      const BayesDataset& test_set) {
    const auto predictive = posterior_predictive(target, posterior_samples, test_set);
    double acc = 0.0;
    for (int i = 0; i < test_set.size(); ++i)
        acc += -std::log(predictive[i][test_set.labels[i]]);
    return acc / test_set.size();
}

} // namespace proxvi
