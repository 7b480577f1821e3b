#include <cmath>

#include "proxvi/errors.hpp"
#include "proxvi/families.hpp"

namespace proxvi {

void VariationalFamily::check_theta(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != dim())
        throw DimensionMismatch("family: theta has wrong length");
}

void VariationalFamily::check_batch(const SampleBatch& batch) const {
    if (batch.thetas.rows == 0) throw EmptyBatch("proximal_loss_grad: empty batch");
    const int s = batch.thetas.rows;
    const int d = dim();
    if (batch.thetas.cols != d || batch.prev_scores.rows != s || batch.prev_scores.cols != d ||
        batch.target_scores.rows != s || batch.target_scores.cols != d)
        throw ShapeMismatch("proximal_loss_grad: batch matrices disagree in shape");
    if (batch.aux.rows != 0 && (batch.aux.rows != s || batch.aux.cols != d))
        throw ShapeMismatch("proximal_loss_grad: aux shape mismatch");
}

GaussianVariational gaussian_projection(const GaussianVariational& prev,
                                        std::span<const double> target_mean,
                                        const DenseMatrix& target_cov, double alpha) {
    const int d = prev.dim();
    if (!prev.is_full())
        throw FamilyMismatch("gaussian_projection: prev must be full-covariance");
    if (static_cast<int>(target_mean.size()) != d || target_cov.rows != d ||
        target_cov.cols != d)
        throw DimensionMismatch("gaussian_projection: target shape mismatch");
    const double beta = alpha / (1.0 + alpha);
    if (beta == 0.0) {
        // Pure projection onto the target; exact, no solves involved.
        return GaussianVariational::full_cov(
            std::vector<double>(target_mean.begin(), target_mean.end()), cholesky(target_cov));
    }
    const DenseMatrix v_inv = spd_inverse(prev.covariance());
    const DenseMatrix s_inv = spd_inverse(target_cov);
    DenseMatrix precision(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            precision.at(i, j) = beta * v_inv.at(i, j) + (1.0 - beta) * s_inv.at(i, j);
    const std::vector<double> vm = matvec(v_inv, prev.mean());
    const std::vector<double> sm = matvec(s_inv, target_mean);
    std::vector<double> rhs(d);
    for (int i = 0; i < d; ++i) rhs[i] = beta * vm[i] + (1.0 - beta) * sm[i];
    const DenseMatrix new_cov = spd_inverse(precision);
    std::vector<double> new_mean = spd_solve(precision, rhs);
    return GaussianVariational::full_cov(std::move(new_mean), cholesky(new_cov));
}

} // namespace proxvi
