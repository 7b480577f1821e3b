#include <cmath>

#include "proxvi/dual.hpp"
#include "proxvi/errors.hpp"
#include "proxvi/families.hpp"
#include "proxvi/math_util.hpp"

namespace proxvi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

// u_hat = u_raw + [(-1 + softplus(w.u_raw)) - w.u_raw] * w / |w|^2, which
// guarantees u_hat.w > -1 and hence an invertible transform.
template <typename T>
std::vector<T> compute_u_hat(const std::vector<T>& u_raw, const std::vector<T>& w) {
    const std::size_t d = u_raw.size();
    T w2{};
    for (std::size_t i = 0; i < d; ++i) w2 += w[i] * w[i];
    if (value_of(w2) < 1e-12) return u_raw;
    T x{};
    for (std::size_t i = 0; i < d; ++i) x += w[i] * u_raw[i];
    const T coef = (T(-1.0) + softplus(x) - x) / w2;
    std::vector<T> u_hat(d);
    for (std::size_t i = 0; i < d; ++i) u_hat[i] = u_raw[i] + coef * w[i];
    return u_hat;
}

// grad_theta log q at theta = T(z), expressed through z:
//   g = J^-T [ -z - (h''(a) c / det) w ],  J^-T = I - psi u_hat^T / det,
// with a = w.z + b, psi = h'(a) w, c = u_hat.w, det = 1 + h'(a) c.
template <typename T>
std::vector<T> flow_score_from_z(const std::vector<T>& z, const std::vector<T>& u_hat,
                                 const std::vector<T>& w, T b) {
    const std::size_t d = z.size();
    T a = b;
    for (std::size_t i = 0; i < d; ++i) a += w[i] * z[i];
    const T h = tanh(a);
    const T hp = T(1.0) - h * h;
    const T hpp = T(-2.0) * h * hp;
    T c{};
    for (std::size_t i = 0; i < d; ++i) c += u_hat[i] * w[i];
    const T det = T(1.0) + hp * c;
    const T coef = hpp * c / det;
    std::vector<T> m(d), g(d);
    for (std::size_t i = 0; i < d; ++i) m[i] = -z[i] - coef * w[i];
    T um{};
    for (std::size_t i = 0; i < d; ++i) um += u_hat[i] * m[i];
    const T scale = um / det;
    for (std::size_t i = 0; i < d; ++i) g[i] = m[i] - hp * w[i] * scale;
    return g;
}

} // namespace

PlanarFlowVariational::PlanarFlowVariational(int dim) : dim_(dim) {
    if (dim < 1) throw DimensionMismatch("PlanarFlowVariational: dim must be >= 1");
    u_raw_.assign(dim, 0.0);
    w_.assign(dim, 0.0);
}

std::vector<double> PlanarFlowVariational::params() const {
    std::vector<double> p;
    p.reserve(param_count());
    p.insert(p.end(), u_raw_.begin(), u_raw_.end());
    p.insert(p.end(), w_.begin(), w_.end());
    p.push_back(b_);
    return p;
}

void PlanarFlowVariational::set_params(std::span<const double> p) {
    if (static_cast<int>(p.size()) != param_count())
        throw ShapeMismatch("PlanarFlowVariational: wrong parameter count");
    std::copy(p.begin(), p.begin() + dim_, u_raw_.begin());
    std::copy(p.begin() + dim_, p.begin() + 2 * dim_, w_.begin());
    b_ = p[2 * dim_];
}

void PlanarFlowVariational::set_raw(std::vector<double> u_raw, std::vector<double> w,
                                    double b) {
    if (static_cast<int>(u_raw.size()) != dim_ || static_cast<int>(w.size()) != dim_)
        throw DimensionMismatch("PlanarFlowVariational: raw parameter length mismatch");
    u_raw_ = std::move(u_raw);
    w_ = std::move(w);
    b_ = b;
}

std::unique_ptr<VariationalFamily> PlanarFlowVariational::clone() const {
    return std::make_unique<PlanarFlowVariational>(*this);
}

std::vector<double> PlanarFlowVariational::u_hat() const {
    return compute_u_hat<double>(u_raw_, w_);
}

std::vector<double> PlanarFlowVariational::forward(std::span<const double> z) const {
    check_theta(z);
    const std::vector<double> uh = u_hat();
    const double h = std::tanh(dot(w_, z) + b_);
    std::vector<double> theta(z.begin(), z.end());
    for (int i = 0; i < dim_; ++i) theta[i] += uh[i] * h;
    return theta;
}

std::vector<double> PlanarFlowVariational::invert_flow(std::span<const double> theta) const {
    check_theta(theta);
    const std::vector<double> uh = u_hat();
    const double c = dot(w_, uh);
    const double rhs = dot(w_, theta) + b_;
    // Solve f(a) = a + c*tanh(a) - rhs = 0; f' = 1 + c*tanh'(a) > 0 because
    // c > -1, so f is strictly increasing and brackets are easy:
    // |c*tanh(a)| <= |c| gives sign changes at rhs -+ (|c| + 1).
    double lo = rhs - std::abs(c) - 1.0;
    double hi = rhs + std::abs(c) + 1.0;
    double a = rhs;
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
        const double t = std::tanh(a);
        const double f = a + c * t - rhs;
        if (std::abs(f) <= 1e-12) {
            converged = true;
            break;
        }
        if (f > 0.0)
            hi = a;
        else
            lo = a;
        const double fp = 1.0 + c * (1.0 - t * t);
        double cand = a - f / fp;
        if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
        a = cand;
    }
    if (!converged)
        throw FlowInversionFailed("invert_flow: scalar solve did not converge");
    const double h = std::tanh(a);
    std::vector<double> z(theta.begin(), theta.end());
    for (int i = 0; i < dim_; ++i) z[i] -= uh[i] * h;
    return z;
}

DenseMatrix PlanarFlowVariational::sample(int s, SeededRng& rng, DenseMatrix* aux) const {
    if (s < 1) throw EmptyInput("sample: s must be >= 1");
    if (aux) *aux = DenseMatrix(s, dim_);
    DenseMatrix out(s, dim_);
    std::vector<double> z(dim_);
    for (int i = 0; i < s; ++i) {
        rng.fill_normal(z);
        if (aux)
            for (int j = 0; j < dim_; ++j) aux->at(i, j) = z[j];
        const std::vector<double> theta = forward(z);
        for (int j = 0; j < dim_; ++j) out.at(i, j) = theta[j];
    }
    return out;
}

double PlanarFlowVariational::log_density(std::span<const double> theta) const {
    const std::vector<double> z = invert_flow(theta);
    const std::vector<double> uh = u_hat();
    const double a = dot(w_, z) + b_;
    const double hp = 1.0 - std::tanh(a) * std::tanh(a);
    const double det = 1.0 + hp * dot(uh, w_);
    return -0.5 * dot(z, z) - 0.5 * dim_ * kLog2Pi - std::log(std::abs(det));
}

std::vector<double> PlanarFlowVariational::score_theta(std::span<const double> theta) const {
    const std::vector<double> z = invert_flow(theta);
    const std::vector<double> uh = u_hat();
    return flow_score_from_z<double>(z, uh, w_, b_);
}

LossGrad PlanarFlowVariational::proximal_loss_grad(const SampleBatch& batch,
                                                   double alpha) const {
    check_batch(batch);
    const int s = batch.size();
    const int d = dim_;
    const int pcount = param_count();
    LossGrad out;
    out.grad.assign(pcount, 0.0);
    const double inv_s = 1.0 / s;

    const std::vector<double> uh = u_hat();

    // Dual copies of (u_raw, w, b) per parameter direction, with u_hat's
    // dependence on u_raw and w propagated once up front.
    std::vector<std::vector<Dual>> u_raw_d(pcount), w_d(pcount), uh_d(pcount);
    std::vector<Dual> b_d(pcount);
    for (int p = 0; p < pcount; ++p) {
        u_raw_d[p].resize(d);
        w_d[p].resize(d);
        for (int i = 0; i < d; ++i) {
            u_raw_d[p][i] = Dual(u_raw_[i], p == i ? 1.0 : 0.0);
            w_d[p][i] = Dual(w_[i], p == d + i ? 1.0 : 0.0);
        }
        b_d[p] = Dual(b_, p == 2 * d ? 1.0 : 0.0);
        uh_d[p] = compute_u_hat<Dual>(u_raw_d[p], w_d[p]);
    }

    std::vector<double> v(d);
    std::vector<Dual> z_d(d);
    for (int i = 0; i < s; ++i) {
        const auto theta = batch.thetas.row(i);
        const auto prev = batch.prev_scores.row(i);
        const auto target = batch.target_scores.row(i);

        // theta is frozen; the latent z = T^-1(theta) moves with lambda.
        const std::vector<double> z = invert_flow(theta);
        const double a = dot(w_, z) + b_;
        const double h = std::tanh(a);
        const double hp = 1.0 - h * h;
        const double c = dot(uh, w_);
        const double det = 1.0 + hp * c;

        const std::vector<double> g = flow_score_from_z<double>(z, uh, w_, b_);
        for (int j = 0; j < d; ++j) {
            const double dp = g[j] - prev[j];
            const double dt = g[j] - target[j];
            out.loss += inv_s * (alpha * dp * dp + dt * dt);
            v[j] = 2.0 * alpha * dp + 2.0 * dt;
        }

        for (int p = 0; p < pcount; ++p) {
            // Tangent of T(z; lambda) at fixed z, then the implicit-function
            // tangent z_dot = -J^-1 T_dot with J^-1 x = x - u_hat (psi.x)/det.
            double a_dot = b_d[p].d;
            for (int j = 0; j < d; ++j) a_dot += w_d[p][j].d * z[j];
            double psi_tdot = 0.0; // psi = hp * w
            std::vector<double> t_dot(d);
            for (int j = 0; j < d; ++j) {
                t_dot[j] = uh_d[p][j].d * h + uh[j] * hp * a_dot;
                psi_tdot += hp * w_[j] * t_dot[j];
            }
            for (int j = 0; j < d; ++j) {
                const double jinv = t_dot[j] - uh[j] * psi_tdot / det;
                z_d[j] = Dual(z[j], -jinv);
            }
            const std::vector<Dual> g_dual =
                flow_score_from_z<Dual>(z_d, uh_d[p], w_d[p], b_d[p]);
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += v[j] * g_dual[j].d;
            out.grad[p] += inv_s * acc;
        }
    }
    return out;
}

PlanarFlowVariational::ReparamDraw PlanarFlowVariational::reparam_sample(SeededRng& rng) const {
    ReparamDraw draw;
    draw.raw = rng.normals(dim_);
    draw.theta = forward(draw.raw);
    return draw;
}

double PlanarFlowVariational::elbo_term_grad(const ReparamDraw& draw,
                                             std::span<const double> target_score,
                                             std::span<double> grad) const {
    if (static_cast<int>(grad.size()) != param_count())
        throw ShapeMismatch("elbo_term_grad: grad buffer size mismatch");
    const int d = dim_;
    const auto& z = draw.raw;
    const std::vector<double> uh = u_hat();
    const double a = dot(w_, z) + b_;
    const double h = std::tanh(a);
    const double hp = 1.0 - h * h;
    const double det = 1.0 + hp * dot(uh, w_);

    // Pathwise: theta(lambda) = T_lambda(z) with z fixed, and
    // log q(theta(lambda)) = log N(z) - log|det(lambda)|.
    for (int p = 0; p < param_count(); ++p) {
        std::vector<Dual> u_raw_d(d), w_d(d);
        for (int i = 0; i < d; ++i) {
            u_raw_d[i] = Dual(u_raw_[i], p == i ? 1.0 : 0.0);
            w_d[i] = Dual(w_[i], p == d + i ? 1.0 : 0.0);
        }
        const Dual b_dual(b_, p == 2 * d ? 1.0 : 0.0);
        const std::vector<Dual> uh_dual = compute_u_hat<Dual>(u_raw_d, w_d);
        Dual a_dual = b_dual;
        for (int i = 0; i < d; ++i) a_dual += w_d[i] * Dual(z[i]);
        const Dual h_dual = tanh(a_dual);
        const Dual hp_dual = Dual(1.0) - h_dual * h_dual;
        Dual c_dual{};
        for (int i = 0; i < d; ++i) c_dual += uh_dual[i] * w_d[i];
        const Dual det_dual = Dual(1.0) + hp_dual * c_dual;
        double acc = -det_dual.d / det;
        for (int i = 0; i < d; ++i) {
            const double theta_dot = uh_dual[i].d * h_dual.v + uh[i] * h_dual.d;
            acc -= target_score[i] * theta_dot;
        }
        grad[p] += acc;
    }
    return -0.5 * dot(z, z) - 0.5 * d * kLog2Pi - std::log(std::abs(det));
}

void PlanarFlowVariational::init_random(SeededRng& rng) {
    for (double& v : u_raw_) v = 0.5 * rng.normal();
    for (double& v : w_) v = rng.normal();
    b_ = 0.5 * rng.normal();
}

} // namespace proxvi
