#include "ncsol/propagator.hpp"

#include "ncsol/parallel.hpp"
#include "ncsol/quadrature.hpp"
#include "ncsol/specfun.hpp"

#include <algorithm>
#include <cmath>

namespace ncsol {

namespace {

ComplexVector to_complex(const RealVector& v)
{
    std::vector<cplx> out(v.values().begin(), v.values().end());
    return ComplexVector(std::move(out));
}

// On the cut: phi_s, psi_{s + i side 0}.
void cut_ingredients(double s, int side, int n_max, ComplexVector& phi, ComplexVector& psi)
{
    auto p = laguerre_phi(s, n_max);
    auto pv = pv_psi(s, n_max);
    const double jump = side * pi * std::exp(-s);
    phi = to_complex(p);
    psi = ComplexVector(static_cast<std::size_t>(n_max) + 1);
    for (int x = 0; x <= n_max; ++x)
        psi[x] = cplx(pv[x], jump * p[x]);
}

void off_cut_ingredients(double z, int n_max, ComplexVector& phi, ComplexVector& psi)
{
    phi = to_complex(laguerre_phi(z, n_max));
    psi = to_complex(psi_vector(z, n_max));
}

// (K w)(x) = psi(x) sum_{y <= x} phi(y) w(y) + phi(x) sum_{y > x} psi(y) w(y)
ComplexVector kernel_apply(const ComplexVector& phi, const ComplexVector& psi, const ComplexVector& w, int n_max)
{
    int last = -1;
    for (int y = std::min<int>(n_max, w.truncation()); y >= 0; --y)
        if (w[y] != cplx(0.0)) {
            last = y;
            break;
        }
    ComplexVector out(static_cast<std::size_t>(n_max) + 1);
    if (last < 0)
        return out;
    std::vector<cplx> suffix(static_cast<std::size_t>(last) + 2, 0.0);
    for (int y = last; y >= 0; --y)
        suffix[y] = suffix[y + 1] + psi[y] * w[y];
    cplx prefix = 0.0;
    for (int x = 0; x <= n_max; ++x) {
        if (x <= last)
            prefix += phi[x] * w[x];
        out[x] = psi[x] * prefix + (x < last ? phi[x] * suffix[x + 1] : cplx(0.0));
    }
    return out;
}

int potential_sites(const LinearizedOperator& op)
{
    int s = 0;
    for (int x = 1; x < static_cast<int>(op.profile().alpha.size()); ++x)
        if (op.potential(x) > 1e-18 * op.rho_power())
            s = x;
    return s;
}

} // namespace

BoundaryResolvent::BoundaryResolvent(const LinearizedOperator& op, Hamiltonian which, double lambda, int side,
                                     int n_max)
    : lambda_(lambda), side_(side), n_max_(n_max)
{
    const double mu = op.mu();
    if (!(std::abs(lambda) > mu))
        throw DomainError("BoundaryResolvent: need |lambda| > mu");
    if (side != 1 && side != -1)
        throw DomainError("BoundaryResolvent: side must be +1 or -1");
    if (which != Hamiltonian::H2 && which != Hamiltonian::H)
        throw DomainError("BoundaryResolvent: only H2 and H are supported");
    if (lambda > mu) {
        cut_ingredients(lambda - mu, side, n_max, phi1_, psi1_);
        off_cut_ingredients(-lambda - mu, n_max, phi2_, psi2_);
    } else {
        // z2 = -(lambda +- i0) - mu sits on the opposite side of the cut
        off_cut_ingredients(lambda - mu, n_max, phi1_, psi1_);
        cut_ingredients(-lambda - mu, -side, n_max, phi2_, psi2_);
    }
    const cplx f1 = psi1_[0], f2 = psi2_[0];
    Eigen::Matrix2cd q0;
    q0 << op.q1(), op.q2(), -op.q2(), -op.q1();
    Eigen::Matrix2cd f = Eigen::Matrix2cd::Zero();
    f(0, 0) = f1;
    f(1, 1) = -f2;
    woodbury_ = (Eigen::Matrix2cd::Identity() - q0 * f).inverse() * q0;

    if (which == Hamiltonian::H2)
        return;
    s_sites_ = std::min(potential_sites(op), n_max);
    const int m = 2 * s_sites_;
    if (m == 0)
        return;
    blocks_.resize(s_sites_);
    Eigen::MatrixXcd qs = Eigen::MatrixXcd::Zero(m, m);
    for (int x = 1; x <= s_sites_; ++x) {
        const double p = op.potential(x);
        Eigen::Matrix2d b;
        b << (op.sigma() + 1) * p, op.sigma() * p, -op.sigma() * p, -(op.sigma() + 1) * p;
        blocks_[x - 1] = b;
        qs.block(2 * (x - 1), 2 * (x - 1), 2, 2) = b.cast<cplx>();
    }
    Eigen::MatrixXcd g(m, m);
    for (int k = 0; k < m; ++k) {
        BlockVector e(static_cast<std::size_t>(n_max) + 1);
        (k % 2 == 0 ? e.upper : e.lower)[k / 2 + 1] = 1.0;
        auto col = apply_h2(e);
        for (int j = 0; j < m; ++j)
            g(j, k) = (j % 2 == 0 ? col.upper : col.lower)[j / 2 + 1];
    }
    correction_ = (Eigen::MatrixXcd::Identity(m, m) - g * qs).inverse();
}

BlockVector BoundaryResolvent::apply_h2(const BlockVector& v) const
{
    auto a = kernel_apply(phi1_, psi1_, v.upper, n_max_);
    auto b = kernel_apply(phi2_, psi2_, v.lower, n_max_);
    Eigen::Vector2cd row;
    row(0) = dot(psi1_, v.upper.resized(psi1_.size()));
    row(1) = -dot(psi2_, v.lower.resized(psi2_.size()));
    Eigen::Vector2cd m = woodbury_ * row;
    BlockVector out(static_cast<std::size_t>(n_max_) + 1);
    for (int x = 0; x <= n_max_; ++x) {
        out.upper[x] = a[x] + psi1_[x] * m(0);
        out.lower[x] = -b[x] - psi2_[x] * m(1);
    }
    return out;
}

BlockVector BoundaryResolvent::apply(const BlockVector& v) const
{
    auto y = apply_h2(v);
    if (s_sites_ == 0)
        return y;
    // (H - z)^{-1} = (H2 - z)^{-1} (I + Q_S y_S) with y_S from the site-restricted system
    const int m = 2 * s_sites_;
    Eigen::VectorXcd ys(m);
    for (int j = 0; j < m; ++j)
        ys(j) = (j % 2 == 0 ? y.upper : y.lower)[j / 2 + 1];
    ys = correction_ * ys;
    BlockVector src(static_cast<std::size_t>(n_max_) + 1);
    for (int x = 1; x <= s_sites_; ++x) {
        Eigen::Vector2cd w = blocks_[x - 1].cast<cplx>() * ys.segment(2 * (x - 1), 2);
        src.upper[x] = w(0);
        src.lower[x] = w(1);
    }
    return y + apply_h2(src);
}

BlockVector density_apply(const LinearizedOperator& op, Hamiltonian which, double lambda, const BlockVector& v,
                          int n_max)
{
    BoundaryResolvent plus(op, which, lambda, 1, n_max), minus(op, which, lambda, -1, n_max);
    auto d = plus.apply(v) - minus.apply(v);
    d *= cplx(0.0, -0.5 / pi);
    return d;
}

BlockKernel h2_spectral_density(const LinearizedOperator& op, double lambda, int x_max)
{
    BoundaryResolvent plus(op, Hamiltonian::H2, lambda, 1, x_max), minus(op, Hamiltonian::H2, lambda, -1, x_max);
    const int n = x_max + 1;
    BlockKernel k;
    k.lambda = lambda;
    k.b11.resize(n, n);
    k.b12.resize(n, n);
    k.b21.resize(n, n);
    k.b22.resize(n, n);
    for (int y = 0; y < n; ++y) {
        for (int block = 0; block < 2; ++block) {
            BlockVector e(static_cast<std::size_t>(n));
            (block == 0 ? e.upper : e.lower)[y] = 1.0;
            auto d = plus.apply(e) - minus.apply(e);
            d *= cplx(0.0, -0.5 / pi);
            auto& top = block == 0 ? k.b11 : k.b12;
            auto& bottom = block == 0 ? k.b21 : k.b22;
            for (int x = 0; x < n; ++x) {
                top(x, y) = d.upper[x].real();
                bottom(x, y) = d.lower[x].real();
                k.imaginary_residual = std::max({k.imaginary_residual, std::abs(d.upper[x].imag()),
                                                 std::abs(d.lower[x].imag())});
                k.scale = std::max({k.scale, std::abs(d.upper[x]), std::abs(d.lower[x])});
            }
        }
    }
    if (k.imaginary_residual > 1e-8 * std::max(k.scale, 1e-300))
        throw NumericalFailure("h2_spectral_density: imaginary part does not cancel");
    return k;
}

SpectralPropagator::SpectralPropagator(const LinearizedOperator& op, Hamiltonian which, const BlockVector& v,
                                       const PropagatorOptions& opt)
    : opt_(opt), mu_(op.mu())
{
    const int n = opt.x_out;
    const std::size_t dim = 2 * static_cast<std::size_t>(n + 1);
    for (std::size_t x = n + 1; x < v.size(); ++x)
        if (v.upper[x] != cplx(0.0) || v.lower[x] != cplx(0.0))
            throw DomainError("SpectralPropagator: initial vector must be supported in 0..x_out");
    BlockVector wv(static_cast<std::size_t>(n) + 1);
    for (int x = 0; x <= n && x < static_cast<int>(v.size()); ++x) {
        wv.upper[x] = v.upper[x];
        wv.lower[x] = v.lower[x];
    }
    if (opt.weight.tau != 0.0)
        wv = apply_weight(opt.weight, wv);
    outside_estimate_ = opt.weight.tau != 0.0 ? weight_factor(opt.weight, n + 1) * norms(wv).l2 : norms(wv).l2;

    GridSpec spec = opt.grid;
    if (spec.lambda_max <= 0.0)
        spec.lambda_max = spectral_cutoff(n);
    grid_ = make_spectral_grid(spec);
    panels_ = grid_.breaks.size() - 1;
    order_ = spec.order;
    const auto& rule = gauss_legendre(order_);

    // values -> Legendre coefficients as a fixed matrix
    Eigen::MatrixXcd to_coeff(order_, order_);
    for (int j = 0; j < order_; ++j) {
        std::vector<cplx> unit(order_, 0.0);
        unit[j] = 1.0;
        auto c = legendre_coefficients(rule, unit);
        for (int k = 0; k < order_; ++k)
            to_coeff(k, j) = c[k];
    }

    for (auto& c : coefficients_)
        c.assign(panels_, Eigen::MatrixXcd());
    parallel_chunks(2 * panels_, [&](std::size_t task) {
        const int branch = static_cast<int>(task / panels_);
        const std::size_t p = task % panels_;
        const double a = grid_.breaks[p], b = grid_.breaks[p + 1];
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        Eigen::MatrixXcd values(order_, dim);
        for (int j = 0; j < order_; ++j) {
            const double s = c + h * rule.nodes[j];
            const double lambda = branch == 0 ? mu_ + s : -mu_ - s;
            auto d = density_apply(op, which, lambda, wv, n);
            for (int x = 0; x <= n; ++x) {
                values(j, x) = d.upper[x];
                values(j, n + 1 + x) = d.lower[x];
            }
        }
        coefficients_[branch][p] = to_coeff * values;
    });
}

BlockVector SpectralPropagator::evolve(double t) const
{
    const int n = opt_.x_out;
    Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(2 * (n + 1));
    for (int branch = 0; branch < 2; ++branch) {
        for (std::size_t p = 0; p < panels_; ++p) {
            const double a = grid_.breaks[p], b = grid_.breaks[p + 1];
            const double c = 0.5 * (a + b), h = 0.5 * (b - a);
            // lambda = mu + s on the upper branch, -mu - s on the lower one
            const double sign = branch == 0 ? 1.0 : -1.0;
            auto mom = legendre_fourier_moments(order_, sign * t * h);
            Eigen::RowVectorXcd m(order_);
            for (int k = 0; k < order_; ++k)
                m(k) = mom[k];
            const cplx phase = std::polar(h, -sign * t * (mu_ + c));
            acc += phase * (m * coefficients_[branch][p]);
        }
    }
    BlockVector out(static_cast<std::size_t>(n) + 1);
    for (int x = 0; x <= n; ++x) {
        out.upper[x] = acc(x);
        out.lower[x] = acc(n + 1 + x);
    }
    if (opt_.weight.tau != 0.0)
        out = apply_weight(opt_.weight, out);
    return out;
}

PropagatorComparison nested_grid_check(const LinearizedOperator& op, Hamiltonian which, const BlockVector& v,
                                       std::span<const double> times, const PropagatorOptions& opt)
{
    SpectralPropagator coarse(op, which, v, opt);
    PropagatorOptions fine_opt = opt;
    fine_opt.grid = coarse.grid().refined().spec;
    SpectralPropagator fine(op, which, v, fine_opt);
    PropagatorComparison out;
    for (double t : times) {
        auto a = coarse.evolve(t), b = fine.evolve(t);
        out.difference = std::max(out.difference, norms(a - b).linf);
        out.scale = std::max(out.scale, norms(b).linf);
    }
    return out;
}

DiscreteProjection::DiscreteProjection(std::vector<BlockVector> right, std::vector<BlockVector> left)
    : right_(std::move(right)), left_(std::move(left))
{
    if (right_.size() != left_.size())
        throw DomainError("DiscreteProjection: right and left sets differ in size");
    const auto k = static_cast<Eigen::Index>(right_.size());
    Eigen::MatrixXcd gram(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            gram(i, j) = dot(left_[i].upper, right_[j].upper) + dot(left_[i].lower, right_[j].lower);
    gram_inverse_ = gram.inverse();
}

BlockVector DiscreteProjection::apply(const BlockVector& v) const
{
    BlockVector out(v.size());
    const auto k = static_cast<Eigen::Index>(right_.size());
    Eigen::VectorXcd pair(k);
    for (Eigen::Index i = 0; i < k; ++i)
        pair(i) = dot(left_[i].upper, v.upper) + dot(left_[i].lower, v.lower);
    Eigen::VectorXcd c = gram_inverse_ * pair;
    for (Eigen::Index i = 0; i < k; ++i)
        for (std::size_t x = 0; x < v.size(); ++x) {
            out.upper[x] += c(i) * right_[i].upper.at(x);
            out.lower[x] += c(i) * right_[i].lower.at(x);
        }
    return out;
}

DiscreteProjection h2_discrete_projection(const Dispersion& disp, const EigenvalueReport& eig, int n_max)
{
    std::vector<BlockVector> right, left;
    for (cplx lambda : {eig.lambda_plus, eig.lambda_minus}) {
        auto r = h2_eigenvector(disp, lambda, n_max);
        left.push_back(apply_d(r));
        right.push_back(std::move(r));
    }
    return {std::move(right), std::move(left)};
}

DiscreteProjection h_discrete_projection(const LinearizedOperator& op, int n_max)
{
    const auto& alpha = op.profile().alpha;
    const int n_sites = std::min<int>(static_cast<int>(alpha.size()), n_max + 1);
    auto d = dmu_alpha(op.mu(), op.sigma(), n_sites);
    BlockVector phase(static_cast<std::size_t>(n_max) + 1), drift(static_cast<std::size_t>(n_max) + 1);
    for (int x = 0; x < n_sites; ++x) {
        phase.upper[x] = alpha[x];
        phase.lower[x] = -alpha[x];
        drift.upper[x] = d[x];
        drift.lower[x] = d[x];
    }
    std::vector<BlockVector> left{apply_d(phase), apply_d(drift)};
    return {{phase, drift}, std::move(left)};
}

BlockVector essential_part(const DiscreteProjection& pd, const BlockVector& v)
{
    return v - pd.apply(v);
}

namespace {

// Dormand-Prince 5(4) on a flat complex state; rhs(y, dy), monitor(y) -> edge mass.
template <class Rhs, class Monitor, class Sink>
void dopri5(std::vector<cplx> y, std::span<const double> times, const OdeOptions& opt, Rhs rhs,
            Monitor monitor, Sink sink, double& horizon, bool& truncated, long& steps, long& rejected)
{
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2;
    (void)c3;
    (void)c4;
    (void)c5;
    const std::size_t n = y.size();
    std::vector<cplx> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
    double t = 0.0;
    double dt = 1e-4;
    horizon = 0.0;
    truncated = false;
    steps = rejected = 0;
    std::size_t next = 0;
    while (next < times.size() && times[next] <= 0.0)
        sink(next++, y);
    rhs(y, k1);
    while (next < times.size()) {
        if (steps + rejected > opt.max_steps)
            throw NumericalFailure("evolve_ode: step budget exhausted");
        const double target = times[next];
        bool hit = false;
        double h = dt;
        if (t + h >= target) {
            h = target - t;
            hit = true;
        }
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * a21 * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(ynew, k7);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
        if (err > 1.0) {
            ++rejected;
            dt = h * std::max(fac, 0.2);
            continue;
        }
        ++steps;
        if (monitor(ynew) > opt.boundary_tol) {
            truncated = true;
            return;
        }
        t = hit ? target : t + h;
        horizon = t;
        y.swap(ynew);
        k1.swap(k7);
        if (!hit)
            dt = h * fac;
        while (next < times.size() && times[next] <= t)
            sink(next++, y);
    }
}

} // namespace

OdeResult evolve_ode(const LinearizedOperator& op, Hamiltonian which, const BlockVector& v,
                     std::span<const double> times, const OdeOptions& opt)
{
    if (!std::is_sorted(times.begin(), times.end()))
        throw DomainError("evolve_ode: sample times must be increasing");
    const int n = opt.n_max;
    const std::size_t half = static_cast<std::size_t>(n) + 1;
    std::vector<cplx> y(2 * half, 0.0);
    for (std::size_t x = 0; x < std::min(v.size(), half); ++x) {
        y[x] = v.upper[x];
        y[half + x] = v.lower[x];
    }
    const double mu = op.mu();
    const int sigma = op.sigma();
    int last = 0;
    if (which == Hamiltonian::H)
        last = std::min<int>(n, static_cast<int>(op.profile().alpha.size()) - 1);
    std::vector<double> diag_a(half, 0.0), diag_b(half, 0.0);
    if (which != Hamiltonian::H0)
        for (int x = 0; x <= last; ++x) {
            diag_a[x] = (sigma + 1) * op.potential(x);
            diag_b[x] = which == Hamiltonian::H1 ? 0.0 : sigma * op.potential(x);
        }
    const cplx minus_i(0.0, -1.0);
    auto rhs = [&](const std::vector<cplx>& u, std::vector<cplx>& du) {
        for (std::size_t x = 0; x < half; ++x) {
            const double xd = static_cast<double>(x);
            const double d = 2.0 * xd + 1.0 + mu;
            cplx up = d * u[x], lo = d * u[half + x];
            if (x + 1 < half) {
                up -= (xd + 1.0) * u[x + 1];
                lo -= (xd + 1.0) * u[half + x + 1];
            }
            if (x > 0) {
                up -= xd * u[x - 1];
                lo -= xd * u[half + x - 1];
            }
            const cplx pu = u[x], pl = u[half + x];
            up -= diag_a[x] * pu + diag_b[x] * pl;
            lo = -lo + diag_b[x] * pu + diag_a[x] * pl;
            du[x] = minus_i * up;
            du[half + x] = minus_i * lo;
        }
    };
    const double norm0 = std::max(norms(v).l2, 1e-300);
    auto monitor = [&](const std::vector<cplx>& u) {
        double s = 0.0;
        for (std::size_t x = half > 10 ? half - 10 : 0; x < half; ++x)
            s += std::norm(u[x]) + std::norm(u[half + x]);
        return std::sqrt(s) / norm0;
    };
    OdeResult res;
    auto sink = [&](std::size_t i, const std::vector<cplx>& u) {
        BlockVector s(half);
        for (std::size_t x = 0; x < half; ++x) {
            s.upper[x] = u[x];
            s.lower[x] = u[half + x];
        }
        res.times.push_back(times[i]);
        res.states.push_back(std::move(s));
    };
    dopri5(std::move(y), times, opt, rhs, monitor, sink, res.safe_horizon, res.truncated, res.steps, res.rejected);
    return res;
}

ScalarOdeResult evolve_ode_free(const ComplexVector& v, std::span<const double> times, const OdeOptions& opt)
{
    if (!std::is_sorted(times.begin(), times.end()))
        throw DomainError("evolve_ode_free: sample times must be increasing");
    const std::size_t half = static_cast<std::size_t>(opt.n_max) + 1;
    std::vector<cplx> y(half, 0.0);
    for (std::size_t x = 0; x < std::min(v.size(), half); ++x)
        y[x] = v[x];
    const cplx minus_i(0.0, -1.0);
    auto rhs = [&](const std::vector<cplx>& u, std::vector<cplx>& du) {
        apply_l0<cplx>(u, du);
        for (auto& d : du)
            d *= minus_i;
    };
    const double norm0 = std::max(norms(v).l2, 1e-300);
    auto monitor = [&](const std::vector<cplx>& u) {
        double s = 0.0;
        for (std::size_t x = half > 10 ? half - 10 : 0; x < half; ++x)
            s += std::norm(u[x]);
        return std::sqrt(s) / norm0;
    };
    ScalarOdeResult res;
    auto sink = [&](std::size_t i, const std::vector<cplx>& u) {
        res.times.push_back(times[i]);
        res.states.emplace_back(u);
    };
    long rejected = 0;
    dopri5(std::move(y), times, opt, rhs, monitor, sink, res.safe_horizon, res.truncated, res.steps, rejected);
    return res;
}

std::vector<double> log_spaced(double t0, double t1, int n)
{
    if (!(t0 > 0.0) || !(t1 > t0) || n < 2)
        throw DomainError("log_spaced: need 0 < t0 < t1 and n >= 2");
    std::vector<double> t(n);
    const double a = std::log(t0), b = std::log(t1);
    for (int i = 0; i < n; ++i)
        t[i] = std::exp(a + (b - a) * i / (n - 1));
    t.front() = t0;
    t.back() = t1;
    return t;
}

DecayFit decay_fit(const SpectralPropagator& prop, std::span<const double> times)
{
    DecayFit fit;
    for (double t : times) {
        if (!(t > 1.0))
            throw DomainError("decay_fit: sample times must exceed 1");
        const double s = norms(prop.evolve(t)).linf;
        const double l = std::log(t);
        fit.t.push_back(t);
        fit.s.push_back(s);
        fit.product.push_back(t * l * l * s);
    }
    if (fit.t.empty())
        return fit;
    auto [lo, hi] = std::minmax_element(fit.product.begin(), fit.product.end());
    fit.flatness = *hi / *lo;
    std::vector<double> top;
    for (std::size_t i = 0; i < fit.t.size(); ++i)
        if (fit.t[i] >= fit.t.back() / 10.0)
            top.push_back(fit.product[i]);
    std::sort(top.begin(), top.end());
    fit.constant = top.size() % 2 ? top[top.size() / 2] : 0.5 * (top[top.size() / 2 - 1] + top[top.size() / 2]);
    return fit;
}

double convolution_ratio(double t, double c3)
{
    auto g = [c3](double s) {
        const double u = s + c3;
        const double l = std::log(u);
        return 1.0 / (u * l * l);
    };
    // symmetric integrand: twice the integral over [0, t/2], log-graded panels
    const auto& rule = gauss_legendre(20);
    double sum = 0.0;
    double a = 0.0;
    double b = std::min(1.0, 0.5 * t);
    while (a < 0.5 * t) {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double s = c + h * rule.nodes[j];
            sum += h * rule.weights[j] * g(s) * g(t - s);
        }
        a = b;
        b = std::min(2.0 * b, 0.5 * t);
    }
    return 2.0 * sum / g(t);
}

DuhamelReport duhamel_transfer(const DecayFit& h2, const DecayFit& h, double c3)
{
    if (h2.t != h.t)
        throw DomainError("duhamel_transfer: fits must share the sample times");
    DuhamelReport r;
    r.t = h2.t;
    r.product_h2 = h2.product;
    r.product_h = h.product;
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        const double q = h.product[i] / h2.product[i];
        r.max_ratio = std::max({r.max_ratio, q, 1.0 / q});
        const double c = convolution_ratio(r.t[i], c3);
        r.convolution_ratio.push_back(c);
        r.convolution_constant = std::max(r.convolution_constant, c);
    }
    return r;
}

} // namespace ncsol
