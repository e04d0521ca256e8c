#include "ncsol/spectral_free.hpp"

#include "ncsol/parallel.hpp"
#include "ncsol/quadrature.hpp"

#include <cmath>
#include <limits>

namespace ncsol {

namespace {

// Three-term recurrence of L0 - z started from (first, second) at sites 0, 1.
template <class T>
std::vector<T> forward_solution(T z, int n_max, T first, T second)
{
    if (n_max < 0)
        throw DomainError("lattice truncation must be nonnegative");
    std::vector<T> v(static_cast<std::size_t>(n_max) + 1);
    v[0] = first;
    if (n_max >= 1)
        v[1] = second;
    for (int x = 1; x < n_max; ++x)
        v[x + 1] = ((2.0 * x + 1.0 - z) * v[x] - static_cast<double>(x) * v[x - 1]) / (x + 1.0);
    return v;
}

template <class T>
std::vector<T> phi_values(T z, int n_max, T scale)
{
    return forward_solution<T>(z, n_max, scale, (T(1.0) - z) * scale);
}

template <class T>
std::vector<T> xi_values(T z, int n_max, T scale)
{
    return forward_solution<T>(z, n_max, T(0.0), -scale);
}

// Backward recurrence from site m_start down to 0, normalized by the x = 0 row.
template <class T>
std::vector<T> miller_run(T z, int n_max, int m_start)
{
    std::vector<T> y(static_cast<std::size_t>(n_max) + 1);
    T next(0.0);
    T cur(1.0);
    if (m_start <= n_max)
        y[m_start] = cur;
    for (int x = m_start; x >= 1; --x) {
        T prev = ((2.0 * x + 1.0 - z) * cur - (x + 1.0) * next) / static_cast<double>(x);
        next = cur;
        cur = prev;
        if (x - 1 <= n_max)
            y[x - 1] = cur;
        if (std::abs(cur) > 1e200) {
            next *= 1e-200;
            cur *= 1e-200;
            for (int k = x - 1; k <= std::min(n_max, m_start); ++k)
                y[k] *= 1e-200;
        }
    }
    T y1 = n_max >= 1 ? y[1] : next;
    T s = T(1.0) / ((T(1.0) - z) * y[0] - y1);
    for (auto& e : y)
        e *= s;
    return y;
}

double decay_rate(cplx z)
{
    return std::sqrt(-z).real();
}

template <class T>
std::vector<T> psi_values(T z, T f_value, int n_max, PsiDiagnostics* diag, double tolerance)
{
    const double d = decay_rate(cplx(z));
    const double root_n = std::sqrt(static_cast<double>(std::max(n_max, 1)));
    PsiDiagnostics local;
    std::vector<T> out;
    if (4.0 * d * root_n <= 9.0) {
        auto phi = phi_values<T>(z, n_max, T(1.0));
        auto xi = xi_values<T>(z, n_max, T(1.0));
        out.resize(phi.size());
        for (std::size_t x = 0; x < phi.size(); ++x)
            out[x] = f_value * phi[x] + xi[x];
        local.contamination = std::numeric_limits<double>::epsilon() * std::exp(4.0 * d * root_n);
    } else {
        auto start = [&](double lead) {
            double r = root_n + lead / d;
            return std::max(n_max + 20, static_cast<int>(std::ceil(r * r)));
        };
        int m1 = start(12.0);
        int m2 = start(18.0);
        auto a = miller_run<T>(z, n_max, m1);
        out = miller_run<T>(z, n_max, m2);
        double diff = 0.0;
        for (std::size_t x = 0; x < out.size(); ++x)
            diff = std::max(diff, std::abs(out[x] - a[x]));
        local.backward = true;
        local.start_site = m2;
        local.contamination = diff / std::abs(out[0]);
    }
    if (diag)
        *diag = local;
    if (!(local.contamination <= tolerance))
        throw NumericalFailure("psi_vector: contamination monitor " + std::to_string(local.contamination)
                               + " exceeds tolerance");
    return out;
}

} // namespace

RealVector laguerre_phi(double lambda, int n_max)
{
    return RealVector(phi_values<double>(lambda, n_max, 1.0));
}

ComplexVector laguerre_phi(cplx z, int n_max)
{
    return ComplexVector(phi_values<cplx>(z, n_max, 1.0));
}

RealVector weighted_phi(double lambda, int n_max)
{
    return RealVector(phi_values<double>(lambda, n_max, std::exp(-0.5 * lambda)));
}

RealVector xi_vector(double lambda, int n_max)
{
    return RealVector(xi_values<double>(lambda, n_max, 1.0));
}

ComplexVector xi_vector(cplx z, int n_max)
{
    return ComplexVector(xi_values<cplx>(z, n_max, 1.0));
}

RealVector weighted_xi(double lambda, int n_max)
{
    return RealVector(xi_values<double>(lambda, n_max, std::exp(-0.5 * lambda)));
}

ComplexVector psi_vector(cplx z, int n_max, PsiDiagnostics* diag, double tolerance)
{
    if (z.imag() == 0.0 && z.real() >= 0.0)
        throw DomainError("psi_vector: z lies on the spectrum [0, inf)");
    return ComplexVector(psi_values<cplx>(z, f_resolvent(z), n_max, diag, tolerance),
                         Tail::exponential(decay_rate(z)));
}

RealVector psi_vector(double z, int n_max, PsiDiagnostics* diag, double tolerance)
{
    if (z >= 0.0)
        throw DomainError("psi_vector: z lies on the spectrum [0, inf)");
    return RealVector(psi_values<double>(z, scaled_e1(-z), n_max, diag, tolerance),
                      Tail::exponential(std::sqrt(-z)));
}

RealVector pv_psi(double lambda, int n_max)
{
    if (!(lambda > 0.0))
        throw DomainError("pv_psi: lambda must be positive");
    auto phi = phi_values<double>(lambda, n_max, 1.0);
    auto xi = xi_values<double>(lambda, n_max, 1.0);
    const double p = pv_f(lambda);
    for (std::size_t x = 0; x < phi.size(); ++x)
        phi[x] = p * phi[x] + xi[x];
    return RealVector(std::move(phi), Tail{});
}

SpectralPoint spectral_point(double lambda, int n_max)
{
    if (lambda < 0.0)
        throw DomainError("spectral_point: lambda must be nonnegative");
    SpectralPoint p;
    p.lambda = lambda;
    p.phi = laguerre_phi(lambda, n_max);
    p.weight = std::exp(-lambda);
    if (lambda > 0.0) {
        p.pv_f = pv_f(lambda);
        p.delta_f = delta_f(lambda);
    } else {
        p.pv_f = -std::numeric_limits<double>::infinity();
        p.delta_f = pi;
    }
    return p;
}

SpectralGrid make_spectral_grid(const GridSpec& spec)
{
    if (!(spec.lambda_max > 0.0) || !(spec.inner > 0.0) || !(spec.ratio > 1.0) || !(spec.bulk_width > 0.0))
        throw DomainError("make_spectral_grid: invalid grid specification");
    SpectralGrid g;
    g.spec = spec;
    const double top = spec.lambda_max;
    const double graded = std::min(spec.graded_until, top);
    g.breaks.push_back(0.0);
    double b = std::min(spec.inner, graded);
    while (b < graded * (1.0 - 1e-12)) {
        g.breaks.push_back(b);
        b *= spec.ratio;
    }
    g.breaks.push_back(graded);
    const auto n_bulk = static_cast<long>(std::ceil((top - graded) / spec.bulk_width - 1e-9));
    for (long k = 1; k <= n_bulk; ++k)
        g.breaks.push_back(k == n_bulk ? top : graded + k * spec.bulk_width);

    const auto& rule = gauss_legendre(spec.order);
    for (std::size_t p = 0; p + 1 < g.breaks.size(); ++p) {
        const double lo = g.breaks[p];
        const double hi = g.breaks[p + 1];
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            g.nodes.push_back(mid + half * rule.nodes[i]);
            g.weights.push_back(half * rule.weights[i]);
        }
    }
    return g;
}

SpectralGrid SpectralGrid::refined() const
{
    GridSpec s = spec;
    s.ratio = std::sqrt(spec.ratio);
    s.bulk_width = 0.5 * spec.bulk_width;
    return make_spectral_grid(s);
}

double spectral_cutoff(int x_max, double tol)
{
    double lambda = std::max(37.0, 4.0 * x_max + 2.0);
    for (;; lambda += 1.0) {
        auto wp = weighted_phi(lambda, x_max);
        double m = 0.0;
        for (double e : wp.values())
            m = std::max(m, e * e);
        if (m < tol)
            return lambda;
    }
}

ComplexVector functional_calculus_on(const std::function<cplx(double)>& g,
                                     const ComplexVector& v,
                                     const SpectralGrid& grid)
{
    const int n_max = v.truncation();
    const std::size_t n_nodes = grid.nodes.size();
    const std::size_t n_chunks = std::min<std::size_t>(64, n_nodes);
    std::vector<std::vector<cplx>> partial(n_chunks, std::vector<cplx>(v.size()));
    parallel_chunks(n_chunks, [&](std::size_t c) {
        auto& acc = partial[c];
        for (std::size_t k = c * n_nodes / n_chunks; k < (c + 1) * n_nodes / n_chunks; ++k) {
            const double lambda = grid.nodes[k];
            auto wp = weighted_phi(lambda, n_max);
            cplx proj = 0.0;
            for (std::size_t x = 0; x < v.size(); ++x)
                proj += wp[x] * v[x];
            const cplx coef = grid.weights[k] * g(lambda) * proj;
            for (std::size_t x = 0; x < v.size(); ++x)
                acc[x] += coef * wp[x];
        }
    });
    std::vector<cplx> out(v.size());
    for (const auto& p : partial)
        for (std::size_t x = 0; x < out.size(); ++x)
            out[x] += p[x];
    return ComplexVector(std::move(out), Tail{});
}

CalculusResult functional_calculus(const std::function<cplx(double)>& g,
                                   const ComplexVector& v,
                                   const SpectralGrid& grid)
{
    auto coarse = functional_calculus_on(g, v, grid);
    CalculusResult r;
    r.value = functional_calculus_on(g, v, grid.refined());
    for (std::size_t x = 0; x < v.size(); ++x)
        r.error_estimate = std::max(r.error_estimate, std::abs(r.value[x] - coarse[x]));
    return r;
}

DerivativeBoundReport check_derivative_bounds(bool use_xi, int x_max, double lambda_max,
                                              double kappa, double lambda_step, double fd_step)
{
    DerivativeBoundReport rep;
    auto eval = [&](double lambda) {
        return use_xi ? weighted_xi(lambda, x_max) : weighted_phi(lambda, x_max);
    };
    auto constant = [&](int n, double s) {
        if (!use_xi)
            return std::pow(3.0 * s, n + 1);
        switch (n) {
        case 0: return 12.0 * s * s;
        case 1: return 24.0 * s * s;
        default: return 36.0 * s * s * s;
        }
    };
    const auto n_steps = static_cast<long>(std::floor((lambda_max - fd_step) / lambda_step + 1e-9));
    for (long k = 0; k <= n_steps; ++k) {
        const double lambda = fd_step + k * lambda_step;
        auto lo = eval(lambda - fd_step);
        auto mid = eval(lambda);
        auto hi = eval(lambda + fd_step);
        for (int x = 0; x <= x_max; ++x) {
            const double s = x + kappa;
            const double eps = 1.0 - std::pow(1.0 - 1.0 / s, 2);
            const double decay = std::exp(-eps * lambda / 16.0);
            const double d[3] = {mid[x], (hi[x] - lo[x]) / (2.0 * fd_step),
                                 (hi[x] - 2.0 * mid[x] + lo[x]) / (fd_step * fd_step)};
            for (int n = 0; n < 3; ++n) {
                const double ratio = std::abs(d[n]) / (constant(n, s) * decay);
                ++rep.checked;
                if (!(ratio < 1.0))
                    ++rep.violations;
                if (ratio > rep.worst_ratio) {
                    rep.worst_ratio = ratio;
                    rep.worst_x = x;
                    rep.worst_order = n;
                    rep.worst_lambda = lambda;
                }
            }
        }
    }
    return rep;
}

} // namespace ncsol
