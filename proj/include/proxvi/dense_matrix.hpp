#pragma once

#include <span>
#include <vector>

namespace proxvi {

/// Row-major dense matrix. Deliberately small: the library works at modest
/// dimension (tens, not thousands), so clarity beats blocked kernels.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> entries; // rows * cols, row-major

    DenseMatrix() = default;
    DenseMatrix(int r, int c, double fill = 0.0);

    static DenseMatrix identity(int d);
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& data);

    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * cols + j]; }

    std::span<const double> row(int i) const;
    std::span<double> row(int i);

    bool square() const { return rows == cols; }
};

bool is_symmetric(const DenseMatrix& a, double tol = 1e-12);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);
/// y = a^T x without forming the transpose.
std::vector<double> matvec_transposed(const DenseMatrix& a, std::span<const double> x);

double frobenius_norm(const DenseMatrix& a);

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// If the factorization hits a non-positive pivot, one retry is made with
/// jitter 1e-10 * trace(a)/d added to the diagonal; failure after the retry
/// raises NotPositiveDefinite.
DenseMatrix cholesky(const DenseMatrix& a);

/// Solves l x = b with lower-triangular l. Raises SingularMatrix when any
/// |l_ii| < 1e-14.
std::vector<double> solve_lower_triangular(const DenseMatrix& l, std::span<const double> b);
/// Solves l^T x = b (back substitution on the transpose of lower-triangular l).
std::vector<double> solve_upper_triangular_transposed(const DenseMatrix& l,
                                                      std::span<const double> b);

/// a^{-1} b for symmetric positive-definite a, via Cholesky.
std::vector<double> spd_solve(const DenseMatrix& a, std::span<const double> b);
/// Dense inverse of a symmetric positive-definite matrix.
DenseMatrix spd_inverse(const DenseMatrix& a);

/// log det(a) for symmetric positive-definite a.
double spd_log_det(const DenseMatrix& a);

} // namespace proxvi
