#include "ncsol/rank_one.hpp"

#include "ncsol/parallel.hpp"

#include <cmath>
#include <limits>

namespace ncsol {

RankOneResolvent f_rank_one(cplx z, double q)
{
    cplx f = f_resolvent(z);
    cplx denom = 1.0 - q * f;
    RankOneResolvent r;
    // root tolerance of find_lambda0 is 1e-12 relative in a; allow for that
    if (std::abs(denom) <= 1e-10 * std::max(1.0, std::abs(q * f))) {
        r.pole = true;
        r.value = cplx(std::numeric_limits<double>::infinity(), 0.0);
        return r;
    }
    r.value = f / denom;
    return r;
}

double find_lambda0(double q, double rel_tol)
{
    if (!(q > 0.0))
        throw DomainError("find_lambda0: q must be positive");
    // a -> e^a E1(a) decreases strictly from +inf to 0
    auto excess = [q](double a) { return q * scaled_e1(a) - 1.0; };
    double lo = 1e-8, hi = 50.0;
    while (excess(lo) <= 0.0)
        lo *= 1e-4;
    while (excess(hi) >= 0.0)
        hi *= 4.0;
    // bisection in log a
    while (hi - lo > rel_tol * lo) {
        double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi)
            break;
        if (excess(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return -std::sqrt(lo * hi);
}

double rank_one_weight_closed_form(double lambda, double q)
{
    const double decay = std::exp(-lambda);
    const double a = 1.0 + q * exp_integral_ei_scaled(lambda).value;
    const double b = pi * q * decay;
    return decay / (a * a + b * b);
}

RankOneSpectralData spectral_data_rank_one(double lambda, double q, int n_max)
{
    if (!(lambda > 0.0))
        throw DomainError("spectral_data_rank_one: lambda must be positive");
    RankOneSpectralData d;
    const double p = pv_f(lambda);
    const double jump = pi * std::exp(-lambda);
    const double re = 1.0 - q * p;
    const double im = q * jump;
    d.gain = 1.0 / (re * re + im * im);
    d.weight = d.gain * std::exp(-lambda);
    // f/(1 - q f) with f = p + i jump
    d.pv_f = d.gain * (p * re - q * jump * jump);
    d.delta_f = d.gain * jump / pi;

    auto phi = laguerre_phi(lambda, n_max);
    auto xi = xi_vector(lambda, n_max);
    std::vector<double> phi_l(phi.size()), pv_l(phi.size());
    for (std::size_t x = 0; x < phi.size(); ++x) {
        phi_l[x] = phi[x] + q * xi[x];
        const double pv_psi0 = p * phi[x] + xi[x];
        pv_l[x] = d.gain * (pv_psi0 * re - q * jump * jump * phi[x]);
    }
    d.phi = RealVector(std::move(phi_l), Tail{});
    d.pv_psi = RealVector(std::move(pv_l), Tail{});
    return d;
}

RankOneModel::RankOneModel(double q, int n_sites) : q_(q), lambda0_(find_lambda0(q))
{
    const double a = -lambda0_;
    int n_max = n_sites > 0 ? n_sites - 1
                            : static_cast<int>(std::min(2.0e6, std::max(200.0, std::ceil(400.0 / a))));
    auto psi = psi_vector(lambda0_, n_max);
    double norm = norms(psi).l2;
    psi *= 1.0 / norm;

    auto l = apply_l0(psi);
    double worst = 0.0, peak = 0.0;
    for (int x = 0; x < n_max; ++x) {
        double r = l[x] - (x == 0 ? q * psi[0] : 0.0) - lambda0_ * psi[x];
        worst = std::max(worst, std::abs(r));
        peak = std::max(peak, std::abs(psi[x]));
    }
    eigen_residual_ = worst / peak;
    eig_ = std::move(psi);
}

std::vector<std::vector<cplx>> rank_one_kernel(cplx z, double q, int n_max)
{
    auto phi = laguerre_phi(z, n_max);
    auto psi = psi_vector(z, n_max);
    const cplx f = psi[0];
    const cplx amp = q / (1.0 - q * f);
    std::vector<std::vector<cplx>> k(n_max + 1, std::vector<cplx>(n_max + 1));
    for (int x = 0; x <= n_max; ++x)
        for (int y = 0; y <= n_max; ++y)
            k[x][y] = phi[std::min(x, y)] * psi[std::max(x, y)] + amp * psi[x] * psi[y];
    return k;
}

ShiftReport shift_identities_check(double lambda, double q, int n_max)
{
    auto density = [&](double eps) {
        auto up = rank_one_kernel(cplx(lambda, eps), q, n_max);
        auto dn = rank_one_kernel(cplx(lambda, -eps), q, n_max);
        std::vector<std::vector<double>> out(n_max + 1, std::vector<double>(n_max + 1));
        for (int x = 0; x <= n_max; ++x)
            for (int y = 0; y <= n_max; ++y)
                out[x][y] = ((up[x][y] - dn[x][y]) / cplx(0.0, 2.0 * pi)).real();
        return out;
    };
    const double eps = 1e-4;
    auto coarse = density(eps);
    auto fine = density(0.1 * eps);
    auto data = spectral_data_rank_one(lambda, q, n_max);
    ShiftReport rep;
    for (int x = 0; x <= n_max; ++x)
        for (int y = 0; y <= n_max; ++y) {
            double limit = (10.0 * fine[x][y] - coarse[x][y]) / 9.0;
            double formula = data.weight * data.phi[x] * data.phi[y];
            double scale = std::max(1.0, std::abs(formula));
            rep.max_deviation = std::max(rep.max_deviation, std::abs(limit - formula) / scale);
        }
    auto f_up = f_rank_one(cplx(lambda, 0.1 * eps), q).value;
    auto f_up_coarse = f_rank_one(cplx(lambda, eps), q).value;
    double im_limit = (10.0 * f_up.imag() - f_up_coarse.imag()) / 9.0;
    rep.delta_f_deviation = std::abs(im_limit / pi - data.delta_f);
    return rep;
}

namespace {

using Accumulator = std::vector<std::vector<double>>;

// int over grid of weight(lambda) u_lambda(x) u_lambda(y), with u built by make_u.
template <class MakeU>
Accumulator integrate_outer(int x_max, const SpectralGrid& grid, MakeU make_u)
{
    const std::size_t n_nodes = grid.nodes.size();
    const std::size_t n_chunks = std::min<std::size_t>(64, n_nodes);
    const std::size_t n = static_cast<std::size_t>(x_max) + 1;
    std::vector<Accumulator> partial(n_chunks, Accumulator(n, std::vector<double>(n)));
    parallel_chunks(n_chunks, [&](std::size_t c) {
        auto& acc = partial[c];
        for (std::size_t k = c * n_nodes / n_chunks; k < (c + 1) * n_nodes / n_chunks; ++k) {
            std::vector<double> u = make_u(grid.nodes[k]);
            for (std::size_t x = 0; x < n; ++x)
                for (std::size_t y = 0; y < n; ++y)
                    acc[x][y] += grid.weights[k] * u[x] * u[y];
        }
    });
    Accumulator total(n, std::vector<double>(n));
    for (const auto& p : partial)
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y)
                total[x][y] += p[x][y];
    return total;
}

} // namespace

double rank_one_completeness_defect(const RankOneModel& model, int x_max, const SpectralGrid& grid)
{
    const double q = model.q();
    auto acc = integrate_outer(x_max, grid, [&](double lambda) {
        // sqrt(w^L) phi^L without forming e^{-lambda} phi separately
        auto wp = weighted_phi(lambda, x_max);
        auto wx = weighted_xi(lambda, x_max);
        auto d_re = 1.0 - q * pv_f(lambda);
        auto d_im = q * pi * std::exp(-lambda);
        double root_gain = 1.0 / std::sqrt(d_re * d_re + d_im * d_im);
        std::vector<double> u(wp.size());
        for (std::size_t x = 0; x < u.size(); ++x)
            u[x] = root_gain * (wp[x] + q * wx[x]);
        return u;
    });
    double worst = 0.0;
    for (int x = 0; x <= x_max; ++x)
        for (int y = 0; y <= x_max; ++y) {
            double v = acc[x][y] + model.eig()[x] * model.eig()[y] - (x == y ? 1.0 : 0.0);
            worst = std::max(worst, std::abs(v));
        }
    return worst;
}

double free_completeness_defect(int x_max, const SpectralGrid& grid)
{
    auto acc = integrate_outer(x_max, grid, [&](double lambda) { return weighted_phi(lambda, x_max).data(); });
    double worst = 0.0;
    for (int x = 0; x <= x_max; ++x)
        for (int y = 0; y <= x_max; ++y)
            worst = std::max(worst, std::abs(acc[x][y] - (x == y ? 1.0 : 0.0)));
    return worst;
}

} // namespace ncsol
