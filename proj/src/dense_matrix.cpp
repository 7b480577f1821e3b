#include "proxvi/dense_matrix.hpp"

#include <cmath>

#include "proxvi/errors.hpp"

namespace proxvi {

DenseMatrix::DenseMatrix(int r, int c, double fill)
    : rows(r), cols(c), entries(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw DimensionMismatch("DenseMatrix: negative dimension");
}

DenseMatrix DenseMatrix::identity(int d) {
    DenseMatrix m(d, d);
    for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& data) {
    const int r = static_cast<int>(data.size());
    const int c = r == 0 ? 0 : static_cast<int>(data[0].size());
    DenseMatrix m(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(data[i].size()) != c)
            throw DimensionMismatch("from_rows: ragged input");
        for (int j = 0; j < c; ++j) m.at(i, j) = data[i][j];
    }
    return m;
}

std::span<const double> DenseMatrix::row(int i) const {
    return {entries.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
}

std::span<double> DenseMatrix::row(int i) {
    return {entries.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
}

bool is_symmetric(const DenseMatrix& a, double tol) {
    if (!a.square()) return false;
    for (int i = 0; i < a.rows; ++i)
        for (int j = i + 1; j < a.cols; ++j) {
            const double scale = std::max(1.0, std::abs(a.at(i, j)));
            if (std::abs(a.at(i, j) - a.at(j, i)) > tol * scale) return false;
        }
    return true;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw DimensionMismatch("matmul: inner dimensions differ");
    DenseMatrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    return c;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols != static_cast<int>(x.size()))
        throw DimensionMismatch("matvec: size mismatch");
    std::vector<double> y(a.rows, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < a.cols; ++j) acc += a.at(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

std::vector<double> matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
    if (a.rows != static_cast<int>(x.size()))
        throw DimensionMismatch("matvec_transposed: size mismatch");
    std::vector<double> y(a.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double xi = x[i];
        for (int j = 0; j < a.cols; ++j) y[j] += a.at(i, j) * xi;
    }
    return y;
}

double frobenius_norm(const DenseMatrix& a) {
    double acc = 0.0;
    for (double v : a.entries) acc += v * v;
    return std::sqrt(acc);
}

namespace {

// Returns false if a non-positive pivot is encountered.
bool try_cholesky(const DenseMatrix& a, double jitter, DenseMatrix& l) {
    const int d = a.rows;
    l = DenseMatrix(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double acc = a.at(i, j);
            if (i == j) acc += jitter;
            for (int k = 0; k < j; ++k) acc -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (acc <= 0.0 || !std::isfinite(acc)) return false;
                l.at(i, i) = std::sqrt(acc);
            } else {
                l.at(i, j) = acc / l.at(j, j);
            }
        }
    }
    return true;
}

} // namespace

DenseMatrix cholesky(const DenseMatrix& a) {
    if (!a.square()) throw DimensionMismatch("cholesky: matrix not square");
    if (!is_symmetric(a)) throw DimensionMismatch("cholesky: matrix not symmetric");
    DenseMatrix l;
    if (try_cholesky(a, 0.0, l)) return l;
    double trace = 0.0;
    for (int i = 0; i < a.rows; ++i) trace += a.at(i, i);
    const double jitter = 1e-10 * trace / a.rows;
    if (jitter > 0.0 && try_cholesky(a, jitter, l)) return l;
    throw NotPositiveDefinite("cholesky: matrix not positive definite");
}

std::vector<double> solve_lower_triangular(const DenseMatrix& l, std::span<const double> b) {
    if (!l.square() || l.rows != static_cast<int>(b.size()))
        throw DimensionMismatch("solve_lower_triangular: size mismatch");
    const int d = l.rows;
    for (int i = 0; i < d; ++i)
        if (std::abs(l.at(i, i)) < 1e-14)
            throw SingularMatrix("solve_lower_triangular: near-zero diagonal");
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i) {
        double acc = b[i];
        for (int j = 0; j < i; ++j) acc -= l.at(i, j) * x[j];
        x[i] = acc / l.at(i, i);
    }
    return x;
}

std::vector<double> solve_upper_triangular_transposed(const DenseMatrix& l,
                                                      std::span<const double> b) {
    if (!l.square() || l.rows != static_cast<int>(b.size()))
        throw DimensionMismatch("solve_upper_triangular_transposed: size mismatch");
    const int d = l.rows;
    for (int i = 0; i < d; ++i)
        if (std::abs(l.at(i, i)) < 1e-14)
            throw SingularMatrix("solve_upper_triangular_transposed: near-zero diagonal");
    std::vector<double> x(d);
    for (int i = d - 1; i >= 0; --i) {
        double acc = b[i];
        for (int j = i + 1; j < d; ++j) acc -= l.at(j, i) * x[j];
        x[i] = acc / l.at(i, i);
    }
    return x;
}

std::vector<double> spd_solve(const DenseMatrix& a, std::span<const double> b) {
    const DenseMatrix l = cholesky(a);
    const std::vector<double> y = solve_lower_triangular(l, b);
    return solve_upper_triangular_transposed(l, y);
}

DenseMatrix spd_inverse(const DenseMatrix& a) {
    const DenseMatrix l = cholesky(a);
    const int d = a.rows;
    DenseMatrix inv(d, d);
    std::vector<double> e(d, 0.0);
    for (int j = 0; j < d; ++j) {
        e[j] = 1.0;
        const std::vector<double> y = solve_lower_triangular(l, e);
        const std::vector<double> x = solve_upper_triangular_transposed(l, y);
        for (int i = 0; i < d; ++i) inv.at(i, j) = x[i];
        e[j] = 0.0;
    }
    // Symmetrize to remove round-off drift.
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double v = 0.5 * (inv.at(i, j) + inv.at(j, i));
            inv.at(i, j) = v;
            inv.at(j, i) = v;
        }
    return inv;
}

double spd_log_det(const DenseMatrix& a) {
    const DenseMatrix l = cholesky(a);
    double acc = 0.0;
    for (int i = 0; i < a.rows; ++i) acc += std::log(l.at(i, i));
    return 2.0 * acc;
}

} // namespace proxvi
