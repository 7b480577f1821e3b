#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "proxvi/dense_matrix.hpp"
#include "proxvi/dual.hpp"
#include "proxvi/errors.hpp"
#include "proxvi/math_util.hpp"
#include "proxvi/rng.hpp"

using namespace proxvi;

TEST_CASE("philox stream matches the reference generator") {
    // Frozen from an independent Python implementation of Philox4x32-10 with
    // the same counter/key layout.
    SeededRng a(42, 0);
    const std::uint32_t expect_a[8] = {0x9ceaf053u, 0x77f5493bu, 0x12bf50adu, 0x5742b3d7u,
                                       0xfcdb2127u, 0x53ba6cfdu, 0x838f5a6eu, 0x744e06fbu};
    for (std::uint32_t e : expect_a) CHECK(a.next_u32() == e);

    SeededRng b(1, 7);
    const std::uint32_t expect_b[8] = {0x08e4d831u, 0x50d9a6a3u, 0xe1f3bcbau, 0x16d75aa2u,
                                       0x81cca714u, 0xa6b896f1u, 0xe7f05f29u, 0x04b62f34u};
    for (std::uint32_t e : expect_b) CHECK(b.next_u32() == e);

    SeededRng c(0xDEADBEEFCAFEF00Dull, 0x123456789ABCDEF0ull);
    const std::uint32_t expect_c[4] = {0x716b51c8u, 0xf82e9b58u, 0x23cb55a7u, 0x4fb9decdu};
    for (std::uint32_t e : expect_c) CHECK(c.next_u32() == e);
}

TEST_CASE("rng determinism and stream separation") {
    SeededRng a(1, 0), b(1, 0);
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());

    bool seed_differs = false, stream_differs = false;
    SeededRng r1(1, 0), r2(2, 0), r3(1, 5);
    for (int i = 0; i < 10; ++i) {
        const std::uint64_t x = r1.next_u64();
        if (x != r2.next_u64()) seed_differs = true;
        if (x != r3.next_u64()) stream_differs = true;
    }
    CHECK(seed_differs);
    CHECK(stream_differs);

    // normals: run twice -> identical pair; child streams are reproducible.
    SeededRng n1(1, 0), n2(1, 0);
    const auto v1 = n1.normals(2), v2 = n2.normals(2);
    CHECK(v1 == v2);
    SeededRng parent(9, 3);
    SeededRng c1 = parent.child(4), c2 = parent.child(4), c3 = parent.child(5);
    CHECK(c1.next_u64() == c2.next_u64());
    CHECK(c1.next_u64() != c3.next_u64());
}

TEST_CASE("splitmix64 reference values") {
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafull);
    CHECK(splitmix64(1) == 0x910a2dec89025cc1ull);
    CHECK(splitmix64(0x9E3779B97F4A7C15ull) == 0x6e789e6aa1b965f4ull);
}

TEST_CASE("uniform ranges and index sampling") {
    SeededRng rng(3, 0);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double p = rng.uniform_pos();
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
        const double r = rng.uniform(-2.0, 5.0);
        CHECK(r >= -2.0);
        CHECK(r < 5.0);
    }
    bool seen[3] = {false, false, false};
    for (int i = 0; i < 1000; ++i) {
        const std::size_t k = rng.uniform_index(3);
        CHECK(k < 3);
        seen[k] = true;
    }
    CHECK(seen[0]);
    CHECK(seen[1]);
    CHECK(seen[2]);
    CHECK_THROWS_AS((void)rng.uniform_index(0), EmptyInput);
}

TEST_CASE("normal moments at one million draws") {
    SeededRng rng(1, 0);
    const std::size_t n = 1'000'000;
    std::vector<double> xs = rng.normals(n);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("cholesky known factors") {
    const DenseMatrix id3 = DenseMatrix::identity(3);
    const DenseMatrix l_id = cholesky(id3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(l_id.at(i, j) == doctest::Approx(id3.at(i, j)));

    const DenseMatrix a = DenseMatrix::from_rows({{4.0, 2.0}, {2.0, 3.0}});
    const DenseMatrix l = cholesky(a);
    CHECK(l.at(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(l.at(0, 1) == 0.0);
    CHECK(l.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l.at(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    const DenseMatrix rec = matmul(l, transpose(l));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(rec.at(i, j) - a.at(i, j)) <= 1e-12);

    CHECK_THROWS_AS((void)cholesky(DenseMatrix::from_rows({{1.0, 2.0}, {2.0, 1.0}})),
                    NotPositiveDefinite);
    CHECK_THROWS_AS((void)cholesky(DenseMatrix::from_rows({{1.0, 2.0}, {0.0, 1.0}})),
                    DimensionMismatch);
}

TEST_CASE("cholesky jitter rescues borderline matrices") {
    // Singular to round-off; the one-shot diagonal jitter makes it factorable.
    const DenseMatrix a = DenseMatrix::from_rows({{1.0, 1.0}, {1.0, 1.0}});
    const DenseMatrix l = cholesky(a);
    const DenseMatrix rec = matmul(l, transpose(l));
    CHECK(std::abs(rec.at(0, 0) - 1.0) < 1e-8);
    CHECK(std::abs(rec.at(1, 0) - 1.0) < 1e-8);
}

TEST_CASE("cholesky reconstructs random spd matrices") {
    SeededRng rng(7, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 1 + static_cast<int>(rng.uniform_index(6));
        DenseMatrix x(d, d);
        for (double& v : x.entries) v = rng.normal();
        DenseMatrix a = matmul(x, transpose(x));
        for (int i = 0; i < d; ++i) a.at(i, i) += 0.5;
        const DenseMatrix l = cholesky(a);
        const DenseMatrix rec = matmul(l, transpose(l));
        double diff = 0.0;
        for (std::size_t k = 0; k < a.entries.size(); ++k) {
            const double e = rec.entries[k] - a.entries[k];
            diff += e * e;
        }
        CHECK(std::sqrt(diff) <= 1e-10 * frobenius_norm(a));
    }
}

TEST_CASE("triangular solves") {
    const DenseMatrix id = DenseMatrix::identity(2);
    const std::vector<double> b{2.0, 3.0};
    CHECK(solve_lower_triangular(id, b) == b);

    const DenseMatrix l = DenseMatrix::from_rows({{2.0, 0.0}, {1.0, 1.0}});
    const std::vector<double> x = solve_lower_triangular(l, b);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-14));
    const std::vector<double> back = matvec(l, x);
    CHECK(std::abs(back[0] - b[0]) <= 1e-10 * inf_norm(b));
    CHECK(std::abs(back[1] - b[1]) <= 1e-10 * inf_norm(b));

    CHECK_THROWS_AS((void)solve_lower_triangular(
                        DenseMatrix::from_rows({{0.0, 0.0}, {1.0, 1.0}}), b),
                    SingularMatrix);

    // Transposed-upper solve: L^T x = b.
    const std::vector<double> xt = solve_upper_triangular_transposed(l, b);
    const std::vector<double> backt = matvec_transposed(l, xt);
    CHECK(std::abs(backt[0] - b[0]) <= 1e-12);
    CHECK(std::abs(backt[1] - b[1]) <= 1e-12);
}

TEST_CASE("spd solve, inverse, and log-determinant") {
    const DenseMatrix a = DenseMatrix::from_rows({{4.0, 2.0}, {2.0, 3.0}});
    const std::vector<double> b{1.0, -1.0};
    const std::vector<double> x = spd_solve(a, b);
    const std::vector<double> ax = matvec(a, x);
    CHECK(std::abs(ax[0] - b[0]) <= 1e-12);
    CHECK(std::abs(ax[1] - b[1]) <= 1e-12);

    const DenseMatrix inv = spd_inverse(a);
    const DenseMatrix prod = matmul(a, inv);
    CHECK(std::abs(prod.at(0, 0) - 1.0) <= 1e-12);
    CHECK(std::abs(prod.at(0, 1)) <= 1e-12);
    CHECK(std::abs(prod.at(1, 1) - 1.0) <= 1e-12);
    CHECK(inv.at(0, 1) == inv.at(1, 0)); // symmetrized

    CHECK(spd_log_det(a) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("matrix helpers") {
    const DenseMatrix a = DenseMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    const DenseMatrix b = DenseMatrix::from_rows({{5.0, 6.0}, {7.0, 8.0}});
    const DenseMatrix c = matmul(a, b);
    CHECK(c.at(0, 0) == 19.0);
    CHECK(c.at(0, 1) == 22.0);
    CHECK(c.at(1, 0) == 43.0);
    CHECK(c.at(1, 1) == 50.0);

    const std::vector<double> v{1.0, -1.0};
    const std::vector<double> av = matvec(a, v);
    CHECK(av[0] == -1.0);
    CHECK(av[1] == -1.0);
    const std::vector<double> atv = matvec_transposed(a, v);
    CHECK(atv[0] == -2.0);
    CHECK(atv[1] == -2.0);

    CHECK(transpose(a).at(0, 1) == 3.0);
    CHECK(frobenius_norm(DenseMatrix::identity(3)) == doctest::Approx(std::sqrt(3.0)));

    DenseMatrix s = DenseMatrix::from_rows({{1.0, 2.0}, {2.0 + 1e-13, 1.0}});
    CHECK(is_symmetric(s));
    s.at(1, 0) = 2.1;
    CHECK(!is_symmetric(s));
}

TEST_CASE("dual numbers differentiate elementary functions") {
    const double h = 1e-6;
    const auto check_fd = [&](auto f, double x) {
        const Dual y = f(Dual(x, 1.0));
        const double fd = (f(x + h) - f(x - h)) / (2.0 * h);
        CHECK(y.v == doctest::Approx(f(x)).epsilon(1e-12));
        CHECK(y.d == doctest::Approx(fd).epsilon(1e-6));
    };
    check_fd([](auto x) { return proxvi::tanh(x); }, 0.7);
    check_fd([](auto x) { return proxvi::exp(x); }, -0.3);
    check_fd([](auto x) { return proxvi::log(x); }, 2.5);
    check_fd([](auto x) { return proxvi::log1p(x); }, 0.4);
    check_fd([](auto x) { return proxvi::sqrt(x); }, 3.0);
    check_fd([](auto x) { return proxvi::softplus(x); }, -1.2);
    check_fd([](auto x) { return x * x * x + x; }, 0.9);
    check_fd([](auto x) { return (x + 1.0) / (x * x + 2.0); }, 0.5);

    // Product and quotient tangents are exact.
    const Dual a(2.0, 3.0), b(5.0, -1.0);
    CHECK((a * b).d == 3.0 * 5.0 + 2.0 * (-1.0));
    CHECK((a / b).d == doctest::Approx((3.0 * 5.0 - 2.0 * (-1.0)) / 25.0).epsilon(1e-15));
    CHECK(abs(Dual(-2.0, 1.0)).d == -1.0);
}

TEST_CASE("math utilities") {
    const std::vector<double> big{1000.0, 1000.0};
    CHECK(logsumexp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
    const std::vector<double> logits{0.3, -1.0, 2.0};
    const std::vector<double> p = softmax(logits);
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[2] > p[0]);

    CHECK(inf_norm(std::vector<double>{1.0, -5.0, 2.0}) == 5.0);
    CHECK(l2_norm(std::vector<double>{3.0, 4.0}) == doctest::Approx(5.0));
    CHECK(all_finite(std::vector<double>{1.0, 2.0}));
    CHECK(!all_finite(std::vector<double>{1.0, std::nan("")}));
    CHECK(!all_finite(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}));
}
