#include "ncsol/linearized.hpp"

#include "ncsol/rank_one.hpp"
#include "ncsol/spectral_free.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace ncsol {

const char* hamiltonian_name(Hamiltonian which)
{
    switch (which) {
    case Hamiltonian::H0: return "H0";
    case Hamiltonian::H1: return "H1";
    case Hamiltonian::H2: return "H2";
    case Hamiltonian::H: return "H";
    }
    return "?";
}

LinearizedOperator::LinearizedOperator(SolitonProfile profile) : profile_(std::move(profile))
{
    rho_power_ = std::pow(profile_.rho, 2 * profile_.sigma);
    potential_.resize(profile_.alpha.size());
    for (std::size_t x = 0; x < potential_.size(); ++x)
        potential_[x] = std::pow(profile_.alpha[x], 2 * profile_.sigma);
}

double LinearizedOperator::potential(int x) const
{
    return x >= 0 && x < static_cast<int>(potential_.size()) ? potential_[x] : 0.0;
}

BlockVector LinearizedOperator::apply(Hamiltonian which, const BlockVector& v) const
{
    const double mu = this->mu();
    const int s = sigma();
    auto lu = apply_l0(v.upper);
    auto ll = apply_l0(v.lower);
    BlockVector out(v.size());
    for (std::size_t x = 0; x < v.size(); ++x) {
        out.upper[x] = lu[x] + mu * v.upper[x];
        out.lower[x] = -(ll[x] + mu * v.lower[x]);
    }
    out.upper.tail() = lu.tail();
    out.lower.tail() = ll.tail();
    if (which == Hamiltonian::H0)
        return out;
    // subtract Q_x = V(x) [(sigma+1) D + sigma J] on the sites carrying the potential
    std::size_t last = which == Hamiltonian::H ? std::min(v.size(), potential_.size()) : std::min<std::size_t>(1, v.size());
    for (std::size_t x = 0; x < last; ++x) {
        const double p = potential(static_cast<int>(x));
        const double a = (s + 1) * p;
        const double b = which == Hamiltonian::H1 ? 0.0 : s * p;
        const cplx up = v.upper[x], lo = v.lower[x];
        out.upper[x] -= a * up + b * lo;
        out.lower[x] -= -b * up - a * lo;
    }
    return out;
}

Eigen::MatrixXd LinearizedOperator::dense(Hamiltonian which, int n_max) const
{
    const int n = n_max + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int x = 0; x < n; ++x) {
        const double d = (x == 0 ? 1.0 : 2.0 * x + 1.0) + mu();
        m(x, x) = d;
        m(n + x, n + x) = -d;
        if (x + 1 < n) {
            m(x, x + 1) = m(x + 1, x) = -(x + 1.0);
            m(n + x, n + x + 1) = m(n + x + 1, n + x) = x + 1.0;
        }
    }
    if (which == Hamiltonian::H0)
        return m;
    const int last = which == Hamiltonian::H ? std::min(n, static_cast<int>(potential_.size())) : 1;
    for (int x = 0; x < last; ++x) {
        const double p = potential(x);
        const double a = (sigma() + 1) * p;
        const double b = which == Hamiltonian::H1 ? 0.0 : sigma() * p;
        m(x, x) -= a;
        m(x, n + x) -= b;
        m(n + x, x) += b;
        m(n + x, n + x) += a;
    }
    return m;
}

double LinearizedOperator::u_norm() const
{
    double worst = 0.0;
    for (std::size_t x = 1; x < potential_.size(); ++x)
        worst = std::max(worst, (2.0 * sigma() + 1.0) * potential_[x]);
    return worst;
}

double LinearizedOperator::u_norm_bound() const
{
    double s = 0.0;
    for (std::size_t x = potential_.size() - 1; x >= 1; --x)
        s += potential_[x];
    return 2.0 * (2.0 * sigma() + 1.0) * s;
}

double LinearizedOperator::m_of_mu(double slack) const
{
    return 2.0 * (2.0 * sigma() + 1.0) * std::pow(mu(), -(2.0 * sigma() - 1.0) / (2.0 * sigma())) * (1.0 + slack);
}

Dispersion::Dispersion(const LinearizedOperator& op, int n_sum)
    : n_sum_(n_sum), mu_(op.mu()), sigma_(op.sigma()), r_(op.rho_power()), q1_(op.q1()), q2_(op.q2())
{
    c0_ = 1.0 / ((2.0 * sigma_ + 1.0) * r_ * r_);
    c1_ = (sigma_ + 1.0) / ((2.0 * sigma_ + 1.0) * r_);
    ehat_ = ehat_scaled(op.profile());
    psi_minus_mu_ = psi_vector(-mu_, n_sum_).data();
}

cplx Dispersion::u_factor(cplx zj) const
{
    const cplx delta = zj + mu_;
    if (std::abs(delta) > 0.5 * mu_)
        return 1.0 - r_ * f_resolvent(zj);
    // 1 - r f_{zj} = (1 - r f_{-mu}) - r (f_{zj} - f_{-mu}), with the first bracket
    // equal to ehat and the second from the resolvent identity
    auto psi = psi_vector(zj, n_sum_);
    cplx s = 0.0;
    for (int x = n_sum_; x >= 0; --x)
        s += psi[x] * psi_minus_mu_[x];
    return ehat_ - r_ * delta * s;
}

cplx Dispersion::h(cplx z) const
{
    const cplx z1 = z - mu_, z2 = -z - mu_;
    if ((z1.imag() == 0.0 && z1.real() >= 0.0) || (z2.imag() == 0.0 && z2.real() >= 0.0))
        throw DomainError("h: z1 or z2 lies on [0, inf)");
    const cplx f1 = f_resolvent(z1), f2 = f_resolvent(z2);
    const cplx u1 = u_factor(z1), u2 = u_factor(z2);
    return (q2_ * (f1 * u2 + f2 * u1) - u1 * u2) / ((q1_ * f1 - 1.0) * (q1_ * f2 - 1.0));
}

cplx Dispersion::h_direct(cplx z) const
{
    auto a = f_rank_one(z - mu_, q1_);
    auto b = f_rank_one(-z - mu_, q1_);
    return q2_ * q2_ * a.value * b.value - 1.0;
}

double Dispersion::threshold_limit() const
{
    const double f2 = scaled_e1(2.0 * mu_);
    return q2_ * q2_ * f2 / (q1_ * (q1_ * f2 - 1.0)) - 1.0;
}

double Dispersion::h1(double a) const
{
    return (scaled_e1(mu_ - a) - c1_) * (scaled_e1(mu_ + a) - c1_);
}

EigenvalueReport find_imaginary_roots(const Dispersion& disp)
{
    EigenvalueReport rep;
    const double mu = disp.mu();
    rep.seed = std::sqrt(2.0 * disp.sigma()) * std::pow(mu, -disp.sigma());
    auto g = [&](double b) { return disp.h(cplx(0.0, b)).real(); };
    double lo = 0.25 * rep.seed, hi = 4.0 * rep.seed;
    hi = std::min(hi, mu);
    if (!(g(lo) > 0.0 && g(hi) < 0.0))
        throw NumericalFailure("find_imaginary_roots: no sign change of h(ib) on [seed/4, 4 seed]");
    while (hi - lo > 1e-14 * hi) {
        double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi)
            break;
        (g(mid) > 0.0 ? lo : hi) = mid;
        ++rep.iterations;
    }
    rep.b_star = std::sqrt(lo * hi);
    rep.lambda_plus = cplx(0.0, rep.b_star);
    rep.lambda_minus = cplx(0.0, -rep.b_star);
    rep.imag_residual = std::abs(disp.h(rep.lambda_plus).imag());
    const double b = 0.05 * rep.b_star;
    rep.curvature = 2.0 * (disp.h(0.0).real() - g(b)) / (b * b);
    return rep;
}

std::pair<double, double> threshold_roots(const Dispersion& disp)
{
    // f_{a - mu} = e^{s} E1(s) with s = mu - a, decreasing in s
    const double mu = disp.mu(), c1 = disp.c1();
    double lo = 1e-300, hi = 2.0 * mu;
    if (!(scaled_e1(hi) < c1))
        throw NumericalFailure("threshold_roots: no root of f - c1 on (-mu, mu)");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (scaled_e1(mid) > c1 ? lo : hi) = mid;
    }
    double r1 = mu - 0.5 * (lo + hi);
    return {r1, -r1};
}

RealScanReport real_axis_scan(const Dispersion& disp, int n_uniform)
{
    const double mu = disp.mu();
    RealScanReport rep;
    auto [r1, r2] = threshold_roots(disp);
    rep.r1 = r1;
    rep.r2 = r2;
    std::vector<double> pts;
    for (int k = 1; k < n_uniform; ++k)
        pts.push_back(-mu + 2.0 * mu * k / n_uniform);
    for (int k = 1; k <= 40; ++k) {
        const double off = mu * std::ldexp(1.0, -k);
        pts.push_back(mu - off);
        pts.push_back(-mu + off);
        pts.push_back(r1 + off / mu);
        pts.push_back(r1 - off / mu);
        pts.push_back(r2 + off / mu);
        pts.push_back(r2 - off / mu);
        pts.push_back(off / mu);
        pts.push_back(-off / mu);
    }
    pts.push_back(0.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    rep.min_h = 1e300;
    for (double a : pts) {
        if (!(a > -mu && a < mu))
            continue;
        double v = disp.h_real(a);
        rep.a.push_back(a);
        rep.h.push_back(v);
        if (v < rep.min_h) {
            rep.min_h = v;
            rep.argmin = a;
        }
        if (!(v > 0.0))
            rep.positive = false;
    }
    return rep;
}

BlockVector h2_eigenvector(const Dispersion& disp, cplx lambda, int n_max)
{
    const cplx z1 = lambda - disp.mu(), z2 = -lambda - disp.mu();
    const cplx f1 = f_resolvent(z1), f2 = f_resolvent(z2);
    // I - Q0 F = [[1 - q1 f1, q2 f2], [q2 f1, 1 - q1 f2]]; take the null vector from the first row
    const cplx c_upper = -disp.q2() * f2;
    const cplx c_lower = 1.0 - disp.q1() * f1;
    auto psi1 = psi_vector(z1, n_max);
    auto psi2 = psi_vector(z2, n_max);
    BlockVector r(static_cast<std::size_t>(n_max) + 1);
    for (int x = 0; x <= n_max; ++x) {
        r.upper[x] = c_upper * psi1[x];
        r.lower[x] = -c_lower * psi2[x];
    }
    return r;
}

std::vector<cplx> matrix_spectrum(const LinearizedOperator& op, Hamiltonian which, int n_max)
{
    Eigen::EigenSolver<Eigen::MatrixXd> es(op.dense(which, n_max), false);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("matrix_spectrum: eigensolver did not converge");
    std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return ev;
}

KernelResiduals kernel_residuals(const LinearizedOperator& op)
{
    const auto& alpha = op.profile().alpha;
    const std::size_t n = alpha.size();
    BlockVector phase(n), drift(n);
    auto d = dmu_alpha(op.mu(), op.sigma(), static_cast<int>(n));
    for (std::size_t x = 0; x < n; ++x) {
        phase.upper[x] = alpha[x];
        phase.lower[x] = -alpha[x];
        drift.upper[x] = d[x];
        drift.lower[x] = d[x];
    }
    KernelResiduals k;
    auto hp = op.apply(Hamiltonian::H, phase);
    auto hd = op.apply(Hamiltonian::H, drift);
    // the last site's stencil needs alpha beyond the truncation
    for (std::size_t x = 0; x + 1 < n; ++x) {
        k.phase = std::max({k.phase, std::abs(hp.upper[x]), std::abs(hp.lower[x])});
        k.dmu = std::max({k.dmu, std::abs(hd.upper[x] + phase.upper[x]), std::abs(hd.lower[x] + phase.lower[x])});
    }
    return k;
}

ResolventDifference resolvent_difference(const LinearizedOperator& op, cplx z, int n_max)
{
    const int dim = 2 * (n_max + 1);
    Eigen::MatrixXcd shift = z * Eigen::MatrixXcd::Identity(dim, dim);
    Eigen::MatrixXcd full = op.dense(Hamiltonian::H, n_max).cast<cplx>() - shift;
    Eigen::MatrixXcd local = op.dense(Hamiltonian::H2, n_max).cast<cplx>() - shift;
    Eigen::MatrixXcd rf = full.partialPivLu().inverse();
    Eigen::MatrixXcd rl = local.partialPivLu().inverse();
    ResolventDifference out;
    out.difference = Eigen::BDCSVD<Eigen::MatrixXcd>(rf - rl).singularValues()(0);
    out.full_norm = Eigen::BDCSVD<Eigen::MatrixXcd>(rf).singularValues()(0);
    return out;
}

} // namespace ncsol
