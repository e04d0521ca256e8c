#include "ncsol/soliton.hpp"

#include "ncsol/spectral_free.hpp"

#include <cmath>
#include <string>

namespace ncsol {

namespace {

// Ratio of the decaying solution of the linear interior recurrence at site x,
// from a backward continued fraction started far out.
double linear_tail_ratio(double mu, int x)
{
    const double r = std::sqrt(static_cast<double>(x)) + 12.0 / std::sqrt(mu);
    const int far = std::max(x + 20, static_cast<int>(std::ceil(r * r)));
    double ratio = 0.0;
    for (int k = far; k >= x; --k)
        ratio = k / (mu + 1.0 + 2.0 * k - (k + 1.0) * ratio);
    return ratio;
}

// Smallest X with the linear-model product rho eps_1...eps_X below cut * rho.
int predicted_truncation(double mu, double cut)
{
    double log_prod = 0.0;
    const double target = std::log(cut);
    int x = 1;
    for (;; ++x) {
        log_prod += std::log(linear_tail_ratio(mu, x));
        if (log_prod < target)
            return x;
    }
}

std::vector<double> assemble(double rho, const std::vector<double>& ratios)
{
    std::vector<double> a(ratios.size());
    a[0] = rho;
    for (std::size_t x = 1; x < ratios.size(); ++x)
        a[x] = a[x - 1] * ratios[x];
    return a;
}

} // namespace

double soliton_residual(const RealVector& u, double mu, int sigma)
{
    auto l = apply_l0(u);
    double worst = 0.0;
    for (std::size_t x = 0; x + 1 < u.size(); ++x) {
        double r = l[x] + mu * u[x] - std::pow(u[x], 2 * sigma + 1);
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

SolitonProfile solve_ratios(double mu, int sigma, const SolitonOptions& opt)
{
    if (!(mu >= opt.mu_min))
        throw DomainError("solve_ratios: mu = " + std::to_string(mu) + " below mu_min = " + std::to_string(opt.mu_min));
    if (sigma < 1)
        throw DomainError("solve_ratios: sigma must be a positive integer");

    int n_trunc = predicted_truncation(mu, opt.tail_cut);
    for (;;) {
        const int X = n_trunc;
        std::vector<double> eps(X + 1);
        for (int x = 1; x <= X; ++x)
            eps[x] = linear_tail_ratio(mu, x);
        const double seed = linear_tail_ratio(mu, X + 1);
        double rho = std::pow(mu + 1.0 - eps[1], 1.0 / (2 * sigma));

        SolitonProfile p;
        p.mu = mu;
        p.sigma = sigma;
        bool converged = false;
        for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
            auto alpha = assemble(rho, eps);
            double change = 0.0;
            double next = seed;
            for (int x = X; x >= 1; --x) {
                double updated = x / (mu + 1.0 + 2.0 * x - (x + 1.0) * next - std::pow(alpha[x], 2 * sigma));
                change = std::max(change, std::abs(updated - eps[x]));
                eps[x] = updated;
                next = updated;
            }
            double rho_new = std::pow(mu + 1.0 - eps[1], 1.0 / (2 * sigma));
            change = std::max(change, std::abs(rho_new - rho) / rho);
            rho = rho_new;
            p.sweeps = sweep;
            if (change < opt.tol) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NumericalFailure("solve_ratios: no convergence after " + std::to_string(opt.max_sweeps) + " sweeps");
        for (int x = 1; x <= X; ++x)
            if (!(eps[x] > 0.0 && eps[x] < 1.0))
                throw NumericalFailure("solve_ratios: ratio left (0, 1) at x = " + std::to_string(x));

        auto alpha = assemble(rho, eps);
        if (alpha[X] >= opt.tail_cut * rho) {
            n_trunc += 10;
            continue;
        }
        p.rho = rho;
        p.ratios = std::move(eps);
        p.tail_ratio = seed;
        p.alpha = RealVector(std::move(alpha), Tail::exponential(std::sqrt(mu)));
        p.residual_sup = soliton_residual(p.alpha, mu, sigma);
        return p;
    }
}

SolitonProfile refine_newton(const SolitonProfile& start, int max_steps)
{
    SolitonProfile p = start;
    const double mu = p.mu;
    const int sigma = p.sigma;
    const int n = static_cast<int>(p.alpha.size());
    std::vector<double> u = p.alpha.data();
    std::vector<double> sub(n), diag(n), sup(n), rhs(n);
    double last = soliton_residual(p.alpha, mu, sigma);
    for (int step = 0; step < max_steps; ++step) {
        // solve for the relative correction delta(x)/u(x) so the far tail keeps its digits
        RealVector cur(u);
        auto l = apply_l0(cur);
        for (int x = 0; x < n; ++x) {
            const double up = std::pow(u[x], 2 * sigma);
            const double scale = u[x] > 0.0 ? 1.0 / u[x] : 1.0;
            const double left = x > 0 ? u[x - 1] : 0.0;
            const double right = x + 1 < n ? u[x + 1] : 0.0;
            // beyond the last site u(x+1) = tail_ratio * u(x)
            const double closure = x + 1 == n ? (x + 1.0) * p.tail_ratio : 0.0;
            rhs[x] = -(l[x] - closure * u[x] + mu * u[x] - up * u[x]) * scale;
            diag[x] = ((x == 0 ? 1.0 : 2.0 * x + 1.0) - closure + mu - (2 * sigma + 1) * up) * (u[x] > 0.0 ? 1.0 : 0.0)
                      + (u[x] > 0.0 ? 0.0 : 1.0);
            sub[x] = x > 0 && u[x] > 0.0 ? -static_cast<double>(x) * left * scale : 0.0;
            sup[x] = x + 1 < n && u[x] > 0.0 ? -(x + 1.0) * right * scale : 0.0;
        }
        auto delta = solve_tridiagonal<double>(sub, diag, sup, rhs);
        for (int x = 0; x < n; ++x)
            delta[x] = u[x] > 0.0 ? delta[x] * u[x] : 0.0;
        std::vector<double> trial(u);
        for (int x = 0; x < n; ++x)
            trial[x] += delta[x];
        double res = soliton_residual(RealVector(trial), mu, sigma);
        if (!std::isfinite(res))
            throw NumericalFailure("refine_newton: divergence");
        if (res >= last)
            break;
        u = std::move(trial);
        last = res;
        p.newton_steps = step + 1;
    }
    p.alpha = RealVector(u, p.alpha.tail());
    p.rho = u[0];
    for (int x = 1; x < n && x < static_cast<int>(p.ratios.size()); ++x)
        p.ratios[x] = u[x - 1] > 0.0 ? u[x] / u[x - 1] : 0.0;
    p.residual_sup = last;
    return p;
}

SolitonProfile solve_soliton(double mu, int sigma, const SolitonOptions& opt)
{
    return refine_newton(solve_ratios(mu, sigma, opt));
}

double tail_l1(const SolitonProfile& p)
{
    double s = 0.0;
    for (std::size_t x = p.alpha.size() - 1; x >= 1; --x)
        s += p.alpha[x];
    return s;
}

double tail_l1_bound(double mu, int sigma, double slack)
{
    const double m = std::pow(mu, -(2.0 * sigma - 1.0) / (2.0 * sigma));
    return m * (1.0 + slack * m);
}

RealVector dmu_alpha(double mu, int sigma, int n_sites, double rel_step, bool richardson)
{
    auto central = [&](double h) {
        auto plus = solve_soliton(mu + h, sigma).alpha.resized(n_sites);
        auto minus = solve_soliton(mu - h, sigma).alpha.resized(n_sites);
        plus -= minus;
        plus *= 1.0 / (2.0 * h);
        return plus;
    };
    const double h = mu * rel_step;
    auto d = central(h);
    if (!richardson)
        return d;
    auto half = central(0.5 * h);
    half *= 4.0 / 3.0;
    d *= 1.0 / 3.0;
    half -= d;
    return half;
}

double ehat_scaled(const SolitonProfile& p)
{
    const int n_max = p.truncation();
    auto psi = psi_vector(-p.mu, n_max);
    double s = 0.0;
    for (int x = n_max; x >= 1; --x)
        s += psi[x] * std::pow(p.alpha[x], 2 * p.sigma + 1);
    return s / p.rho;
}

double rho_power_expansion(double mu, int sigma, double coefficient_mu3)
{
    return mu + 1.0 - 1.0 / mu + 3.0 / (mu * mu) + coefficient_mu3 / (mu * mu * mu)
           - std::pow(mu, -(2.0 * sigma + 1.0)) - std::pow(mu, -(2.0 * sigma + 2.0));
}

} // namespace ncsol
