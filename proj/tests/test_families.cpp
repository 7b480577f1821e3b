#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <memory>

#include "proxvi/errors.hpp"
#include "proxvi/families.hpp"
#include "proxvi/math_util.hpp"
#include "proxvi/targets.hpp"

using namespace proxvi;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Central-difference gradient of log_density in theta.
std::vector<double> fd_score_theta(const VariationalFamily& family,
                                   std::span<const double> theta, double h = 1e-5) {
    std::vector<double> g(theta.size());
    std::vector<double> x(theta.begin(), theta.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double up = family.log_density(x);
        x[i] = orig - h;
        const double dn = family.log_density(x);
        x[i] = orig;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

void check_family_score(const VariationalFamily& family, SeededRng& rng, int trials = 10) {
    for (int trial = 0; trial < trials; ++trial) {
        const DenseMatrix draws = family.sample(1, rng);
        const std::vector<double> theta(draws.row(0).begin(), draws.row(0).end());
        const std::vector<double> s = family.score_theta(theta);
        const std::vector<double> fd = fd_score_theta(family, theta);
        const double scale = std::max(1.0, inf_norm(s));
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK(std::abs(s[i] - fd[i]) <= 1e-4 * scale);
    }
}

GaussianVariational tame_full(int d, SeededRng& rng) {
    GaussianVariational g(d, GaussianVariational::Cov::full);
    std::vector<double> p = g.params();
    for (double& v : p) v = 0.3 * rng.normal();
    g.set_params(p);
    return g;
}

MixtureVariational tame_mixture(int d, int k, SeededRng& rng, double temp = 0.75) {
    MixtureVariational m(d, k, temp);
    std::vector<double> p = m.params();
    for (double& v : p) v = 0.4 * rng.normal();
    m.set_params(p);
    return m;
}

PlanarFlowVariational tame_flow(int d, SeededRng& rng) {
    PlanarFlowVariational f(d);
    std::vector<double> u(d), w(d);
    for (double& v : u) v = 0.4 * rng.normal();
    for (double& v : w) v = 0.4 * rng.normal();
    f.set_raw(std::move(u), std::move(w), 0.2 * rng.normal());
    return f;
}

// Frozen batch whose target/prev scores are score_theta plus a shift, so the
// loss and gradient have a known structure.
SampleBatch make_batch(const VariationalFamily& family, int s, SeededRng& rng,
                       double prev_shift, double target_shift) {
    SampleBatch batch;
    DenseMatrix aux;
    batch.thetas = family.sample(s, rng, &aux);
    batch.aux = aux;
    const int d = family.dim();
    batch.prev_scores = DenseMatrix(s, d);
    batch.target_scores = DenseMatrix(s, d);
    for (int i = 0; i < s; ++i) {
        const auto row = batch.thetas.row(i);
        const std::vector<double> g =
            family.score_theta(std::vector<double>(row.begin(), row.end()));
        for (int j = 0; j < d; ++j) {
            batch.prev_scores.at(i, j) = g[j] + prev_shift;
            batch.target_scores.at(i, j) = g[j] + target_shift;
        }
    }
    return batch;
}

std::vector<double> fd_loss_grad(const VariationalFamily& family, const SampleBatch& batch,
                                 double alpha, double h = 1e-6) {
    std::unique_ptr<VariationalFamily> work = family.clone();
    std::vector<double> p = family.params();
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        work->set_params(p);
        const double up = work->proximal_loss_grad(batch, alpha).loss;
        p[i] = orig - h;
        work->set_params(p);
        const double dn = work->proximal_loss_grad(batch, alpha).loss;
        p[i] = orig;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

// theta(lambda, raw) replicated per family so the full reparametrized ELBO
// term can be finite-differenced in lambda.
using ThetaMap = std::function<std::vector<double>(const VariationalFamily&,
                                                   const std::vector<double>&)>;

std::vector<double> gauss_diag_theta(const VariationalFamily& fam,
                                     const std::vector<double>& raw) {
    const int d = fam.dim();
    const std::vector<double> p = fam.params();
    std::vector<double> theta(d);
    for (int j = 0; j < d; ++j) theta[j] = p[j] + std::exp(p[d + j]) * raw[j];
    return theta;
}

std::vector<double> gauss_full_theta(const VariationalFamily& fam,
                                     const std::vector<double>& raw) {
    const int d = fam.dim();
    const std::vector<double> p = fam.params();
    std::vector<double> theta(p.begin(), p.begin() + d);
    int idx = d;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) {
            const double l = i == j ? std::exp(p[idx]) : p[idx];
            theta[i] += l * raw[j];
            ++idx;
        }
    return theta;
}

std::vector<double> mixture_theta(const VariationalFamily& fam,
                                  const std::vector<double>& raw) {
    const auto& mix = dynamic_cast<const MixtureVariational&>(fam);
    const int d = mix.dim();
    const int k = mix.order();
    const std::vector<double> p = mix.params();
    const std::size_t kd = static_cast<std::size_t>(k) * d;
    std::vector<double> scaled(k);
    for (int c = 0; c < k; ++c)
        scaled[c] = (p[c] + raw[kd + c]) / mix.gumbel_temperature();
    const std::vector<double> soft = softmax(scaled);
    std::vector<double> theta(d, 0.0);
    for (int c = 0; c < k; ++c)
        for (int j = 0; j < d; ++j) {
            const double m = p[k + static_cast<std::size_t>(c) * d + j];
            const double ls = p[k + kd + static_cast<std::size_t>(c) * d + j];
            theta[j] += soft[c] * (m + std::exp(ls) * raw[static_cast<std::size_t>(c) * d + j]);
        }
    return theta;
}

std::vector<double> flow_theta(const VariationalFamily& fam, const std::vector<double>& raw) {
    return dynamic_cast<const PlanarFlowVariational&>(fam).forward(raw);
}

void check_elbo_grad(const VariationalFamily& family, const TargetOracle& target,
                     const ThetaMap& theta_of, SeededRng& rng, double tol = 2e-4) {
    std::unique_ptr<VariationalFamily> work = family.clone();
    const auto draw = family.reparam_sample(rng);

    // Reconstruction must reproduce the draw itself.
    const std::vector<double> rebuilt = theta_of(family, draw.raw);
    for (std::size_t j = 0; j < rebuilt.size(); ++j)
        CHECK(rebuilt[j] == doctest::Approx(draw.theta[j]).epsilon(1e-10));

    std::vector<double> grad(family.param_count(), 0.0);
    const std::vector<double> ts = target.score(draw.theta);
    const double logq = family.elbo_term_grad(draw, ts, grad);
    CHECK(logq == doctest::Approx(family.log_density(draw.theta)).epsilon(1e-10));

    const double h = 1e-5;
    std::vector<double> p = family.params();
    const double scale = std::max(1.0, inf_norm(grad));
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        const auto eval = [&](double value) {
            p[i] = value;
            work->set_params(p);
            const std::vector<double> theta = theta_of(*work, draw.raw);
            return work->log_density(theta) - target.log_potential(theta);
        };
        const double fd = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
        p[i] = orig;
        CHECK(std::abs(grad[i] - fd) <= tol * scale);
    }

    // The contract is accumulation: a second call doubles the buffer.
    std::vector<double> twice = grad;
    (void)family.elbo_term_grad(draw, ts, twice);
    for (std::size_t i = 0; i < twice.size(); ++i)
        CHECK(twice[i] == doctest::Approx(2.0 * grad[i]).epsilon(1e-12));

    std::vector<double> bad(family.param_count() + 1, 0.0);
    CHECK_THROWS_AS((void)family.elbo_term_grad(draw, ts, bad), ShapeMismatch);
}

} // namespace

TEST_CASE("sampling shapes, aux contract, and empty draws") {
    SeededRng rng(1, 0);
    GaussianVariational diag(3, GaussianVariational::Cov::diagonal);
    DenseMatrix aux;
    const DenseMatrix d1 = diag.sample(5, rng, &aux);
    CHECK(d1.rows == 5);
    CHECK(d1.cols == 3);
    CHECK(aux.rows == 0);

    MixtureVariational mix(2, 3);
    const DenseMatrix d2 = mix.sample(4, rng, &aux);
    CHECK(d2.rows == 4);
    CHECK(d2.cols == 2);
    CHECK(aux.rows == 0);

    PlanarFlowVariational flow(2);
    const DenseMatrix d3 = flow.sample(6, rng, &aux);
    CHECK(d3.rows == 6);
    CHECK(aux.rows == 6);
    CHECK(aux.cols == 2);

    CHECK_THROWS_AS((void)diag.sample(0, rng), EmptyInput);
    CHECK_THROWS_AS((void)flow.sample(-1, rng), EmptyInput);
}

TEST_CASE("log-std floor prevents collapse") {
    GaussianVariational diag(2, GaussianVariational::Cov::diagonal);
    std::vector<double> p = diag.params();
    p[0] = 1.5;
    p[1] = -0.5;
    p[2] = -100.0; // far below the floor
    p[3] = -100.0;
    diag.set_params(p);
    SeededRng rng(2, 0);
    const DenseMatrix draws = diag.sample(50, rng);
    for (int i = 0; i < draws.rows; ++i) {
        CHECK(std::abs(draws.at(i, 0) - 1.5) < 1e-3);
        CHECK(std::abs(draws.at(i, 1) + 0.5) < 1e-3);
    }
    CHECK(diag.covariance().at(0, 0) > 0.0);
}

TEST_CASE("degenerate mixture weights sample a single component") {
    MixtureVariational mix(1, 2);
    mix.mutable_logits() = {20.0, -20.0};
    mix.mutable_means() = {5.0, -5.0};
    mix.mutable_log_stds() = {-2.0, -2.0};
    SeededRng rng(3, 0);
    const DenseMatrix draws = mix.sample(100, rng);
    for (int i = 0; i < 100; ++i) CHECK(std::abs(draws.at(i, 0) - 5.0) < 1.0);
    const std::vector<double> w = mix.weights();
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("planar flow with zero raw parameters is the identity map") {
    PlanarFlowVariational flow(3);
    // Construction leaves u_raw = w = 0, b = 0.
    SeededRng rng(4, 0);
    DenseMatrix aux;
    const DenseMatrix draws = flow.sample(10, rng, &aux);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 3; ++j) CHECK(draws.at(i, j) == aux.at(i, j));

    const std::vector<double> theta{0.5, -1.0, 2.0};
    const double expect = -0.5 * (0.25 + 1.0 + 4.0) - 1.5 * kLog2Pi;
    CHECK(flow.log_density(theta) == doctest::Approx(expect).epsilon(1e-12));
    const std::vector<double> s = flow.score_theta(theta);
    for (int j = 0; j < 3; ++j) CHECK(s[j] == doctest::Approx(-theta[j]).epsilon(1e-12));
}

TEST_CASE("score_theta matches finite differences for every family") {
    SeededRng rng(5, 0);

    GaussianVariational diag(3, GaussianVariational::Cov::diagonal);
    diag.init_random(rng);
    check_family_score(diag, rng);

    GaussianVariational full = tame_full(3, rng);
    check_family_score(full, rng);

    MixtureVariational mix = tame_mixture(2, 3, rng);
    check_family_score(mix, rng);

    PlanarFlowVariational flow = tame_flow(3, rng);
    check_family_score(flow, rng);
}

TEST_CASE("log densities: hand values, mixtures of identical components, quadrature") {
    GaussianVariational std2(2, GaussianVariational::Cov::diagonal);
    CHECK(std2.log_density(std::vector<double>{0.0, 0.0}) ==
          doctest::Approx(-kLog2Pi).epsilon(1e-12));

    // A mixture whose components coincide is just that Gaussian.
    MixtureVariational mix(2, 3);
    mix.mutable_logits() = {0.3, -0.2, 0.8};
    mix.mutable_means() = {0.4, -0.1, 0.4, -0.1, 0.4, -0.1};
    mix.mutable_log_stds() = {0.2, -0.3, 0.2, -0.3, 0.2, -0.3};
    GaussianVariational same = GaussianVariational::diagonal({0.4, -0.1}, {0.2, -0.3});
    SeededRng rng(6, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<double> theta = rng.normals(2);
        CHECK(mix.log_density(theta) ==
              doctest::Approx(same.log_density(theta)).epsilon(1e-12));
    }

    // d = 1 flow: the density must integrate to one.
    PlanarFlowVariational flow(1);
    flow.set_raw({0.5}, {0.8}, 0.3);
    const int n = 4001;
    const double lo = -12.0, hi = 12.0;
    const double step = (hi - lo) / (n - 1);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + i * step;
        const double f = std::exp(flow.log_density(std::vector<double>{x}));
        mass += (i == 0 || i == n - 1) ? 0.5 * f : f;
    }
    mass *= step;
    CHECK(mass == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("flow inversion: round trips and the near-singular regime") {
    SeededRng rng(7, 0);
    PlanarFlowVariational flow = tame_flow(3, rng);
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<double> z = rng.normals(3);
        const std::vector<double> theta = flow.forward(z);
        const std::vector<double> back = flow.invert_flow(theta);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(back[j] - z[j]) <= 1e-9);
    }

    // Push u_hat.w to -0.999: the det is tiny near a = 0 but stays positive
    // and the scalar solve must still converge.
    PlanarFlowVariational stress(1);
    stress.set_raw({-6.907}, {1.0}, 0.0);
    const double c = dot(stress.u_hat(), std::vector<double>{1.0});
    CHECK(c == doctest::Approx(-0.999).epsilon(1e-3));
    CHECK(c > -1.0);
    for (double z0 : {-3.0, -0.5, -0.01, 0.0, 0.01, 0.5, 3.0}) {
        const std::vector<double> theta = stress.forward(std::vector<double>{z0});
        const std::vector<double> back = stress.invert_flow(theta);
        CHECK(std::abs(back[0] - z0) <= 1e-8);
    }
}

TEST_CASE("proximal loss: zero at matched scores, affine in alpha, exact gradients") {
    SeededRng rng(8, 0);
    GaussianVariational diag(2, GaussianVariational::Cov::diagonal);
    diag.init_random(rng);

    // target == prev == own score: loss and gradient vanish identically.
    const SampleBatch perfect = make_batch(diag, 6, rng, 0.0, 0.0);
    const LossGrad at_opt = diag.proximal_loss_grad(perfect, 1.7);
    CHECK(at_opt.loss == 0.0);
    CHECK(inf_norm(at_opt.grad) <= 1e-12);

    // Shifting the target by delta makes the alpha = 0 loss d * delta^2.
    const SampleBatch shifted = make_batch(diag, 6, rng, 0.5, 2.0);
    const double l0 = diag.proximal_loss_grad(shifted, 0.0).loss;
    CHECK(l0 == doctest::Approx(2.0 * 4.0).epsilon(1e-12));
    const double l1 = diag.proximal_loss_grad(shifted, 1.0).loss;
    const double l3 = diag.proximal_loss_grad(shifted, 3.0).loss;
    CHECK(l3 == doctest::Approx(l0 + 3.0 * (l1 - l0)).epsilon(1e-12));

    // Gradient vs finite differences, every family.
    const auto fd_check = [&](const VariationalFamily& fam) {
        const SampleBatch batch = make_batch(fam, 4, rng, 0.7, -0.4);
        const LossGrad lg = fam.proximal_loss_grad(batch, 0.8);
        const std::vector<double> fd = fd_loss_grad(fam, batch, 0.8);
        const double scale = std::max(1.0, inf_norm(lg.grad));
        for (std::size_t i = 0; i < fd.size(); ++i)
            CHECK(std::abs(lg.grad[i] - fd[i]) <= 1e-5 * scale);
    };
    fd_check(diag);
    fd_check(tame_full(2, rng));
    fd_check(tame_mixture(2, 2, rng));
    fd_check(tame_flow(2, rng));

    SampleBatch bad = make_batch(diag, 3, rng, 0.0, 1.0);
    bad.prev_scores = DenseMatrix(3, 5);
    CHECK_THROWS_AS((void)diag.proximal_loss_grad(bad, 1.0), ShapeMismatch);
    CHECK_THROWS_AS((void)diag.proximal_loss_grad(SampleBatch{}, 1.0), EmptyBatch);
}

TEST_CASE("gaussian_projection: endpoints and the hand-computed blend") {
    // d = 1, prev = N(2, 4), target = N(0, 1), alpha = 1/2:
    // V' = 4/3 and m' = 2/9.
    GaussianVariational prev =
        GaussianVariational::full_cov({2.0}, DenseMatrix::from_rows({{2.0}}));
    const DenseMatrix target_cov = DenseMatrix::from_rows({{1.0}});
    const std::vector<double> target_mean{0.0};

    const GaussianVariational blended =
        gaussian_projection(prev, target_mean, target_cov, 0.5);
    CHECK(blended.mean()[0] == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
    CHECK(blended.covariance().at(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    const GaussianVariational onto_target =
        gaussian_projection(prev, target_mean, target_cov, 0.0);
    CHECK(onto_target.mean()[0] == 0.0);
    CHECK(onto_target.covariance().at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    const GaussianVariational stay =
        gaussian_projection(prev, target_mean, target_cov, 1e8);
    CHECK(stay.mean()[0] == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(stay.covariance().at(0, 0) == doctest::Approx(4.0).epsilon(1e-5));

    GaussianVariational diag(1, GaussianVariational::Cov::diagonal);
    CHECK_THROWS_AS((void)gaussian_projection(diag, target_mean, target_cov, 0.5),
                    FamilyMismatch);
    CHECK_THROWS_AS(
        (void)gaussian_projection(prev, std::vector<double>{0.0, 0.0}, target_cov, 0.5),
        DimensionMismatch);
}

TEST_CASE("elbo term gradients match the reparametrized objective") {
    SeededRng trng(9, 0);
    const GaussianTargetParams tp2 = make_random_gaussian(2, trng);
    const GaussianTarget target2(tp2);
    const GaussianTargetParams tp3 = make_random_gaussian(3, trng);
    const GaussianTarget target3(tp3);

    SeededRng rng(10, 0);
    GaussianVariational diag(2, GaussianVariational::Cov::diagonal);
    diag.init_random(rng);
    check_elbo_grad(diag, target2, gauss_diag_theta, rng);

    GaussianVariational full = tame_full(3, rng);
    check_elbo_grad(full, target3, gauss_full_theta, rng);

    MixtureVariational mix = tame_mixture(2, 3, rng, 0.75);
    check_elbo_grad(mix, target2, mixture_theta, rng);

    PlanarFlowVariational flow = tame_flow(3, rng);
    check_elbo_grad(flow, target3, flow_theta, rng);
}

TEST_CASE("single-draw elbo gradients are unbiased for the gaussian KL") {
    // Diagonal q against a full-covariance target: the expected pathwise
    // gradient is the analytic KL gradient.
    const DenseMatrix sigma = DenseMatrix::from_rows({{2.0, 0.5}, {0.5, 1.0}});
    const std::vector<double> mu{1.0, -1.0};
    const GaussianTarget target({mu, sigma});
    const DenseMatrix prec = spd_inverse(sigma);

    GaussianVariational q = GaussianVariational::diagonal({0.4, 0.6}, {0.1, -0.2});
    const std::vector<double> m = q.mean();
    const DenseMatrix v = q.covariance();

    std::vector<double> expect(4);
    for (int j = 0; j < 2; ++j) {
        expect[j] = prec.at(j, 0) * (m[0] - mu[0]) + prec.at(j, 1) * (m[1] - mu[1]);
        expect[2 + j] = prec.at(j, j) * v.at(j, j) - 1.0;
    }

    SeededRng rng(11, 0);
    const int n = 10000;
    std::vector<double> mean(4, 0.0), sq(4, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto draw = q.reparam_sample(rng);
        std::vector<double> g(4, 0.0);
        (void)q.elbo_term_grad(draw, target.score(draw.theta), g);
        for (int j = 0; j < 4; ++j) {
            mean[j] += g[j];
            sq[j] += g[j] * g[j];
        }
    }
    for (int j = 0; j < 4; ++j) {
        mean[j] /= n;
        const double var = sq[j] / n - mean[j] * mean[j];
        const double se = std::sqrt(var / n);
        CHECK(std::abs(mean[j] - expect[j]) <= 4.0 * se + 1e-3);
    }
}
