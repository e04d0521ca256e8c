#pragma once

#include "ncsol/lattice.hpp"

#include <vector>

namespace ncsol {

struct SolitonOptions {
    double mu_min = 10.0;
    double tol = 1e-15;          // sup change of the ratios between sweeps
    int max_sweeps = 500;
    double tail_cut = 1e-18;     // truncate where alpha < tail_cut * rho
};

struct SolitonProfile {
    double mu = 0.0;
    int sigma = 1;
    double rho = 0.0;                // alpha(0)
    std::vector<double> ratios;      // ratios[x] = alpha(x)/alpha(x-1), ratios[0] unused
    double tail_ratio = 0.0;         // alpha(N+1)/alpha(N) closing the last site
    RealVector alpha;
    double residual_sup = 0.0;       // sup |L0 alpha + mu alpha - alpha^{2 sigma + 1}|
    int sweeps = 0;
    int newton_steps = 0;

    int truncation() const { return alpha.truncation(); }
};

// sup-norm residual of L0 u + mu u - u^{2 sigma + 1} over sites 0..N-1
// (the last site is left out: its stencil needs u(N+1)).
double soliton_residual(const RealVector& u, double mu, int sigma);

// Downward fixed-point sweeps of the ratio recurrence.
SolitonProfile solve_ratios(double mu, int sigma, const SolitonOptions& opt = {});

// Newton iteration on the truncated lattice with a tridiagonal Jacobian.
SolitonProfile refine_newton(const SolitonProfile& start, int max_steps = 8);

// solve_ratios followed by refine_newton.
SolitonProfile solve_soliton(double mu, int sigma, const SolitonOptions& opt = {});

// sum_{x >= 1} alpha(x).
double tail_l1(const SolitonProfile& p);

// mu^{-(2 sigma - 1)/(2 sigma)} (1 + slack mu^{-(2 sigma - 1)/(2 sigma)}).
double tail_l1_bound(double mu, int sigma, double slack = 2.0);

// d alpha / d mu by central differences with step mu * rel_step, optionally
// Richardson-extrapolated against the half step. Output has n_sites entries.
RealVector dmu_alpha(double mu, int sigma, int n_sites, double rel_step = 1e-4, bool richardson = true);

// rho^{-1} (psi_{-mu}, (I - P0) alpha^{2 sigma + 1}).
double ehat_scaled(const SolitonProfile& p);

// Truncated large-mu expansion of rho^{2 sigma}. coefficient_mu3 is the
// mu^{-3} coefficient of f_{-mu}^{-1}.
double rho_power_expansion(double mu, int sigma, double coefficient_mu3);

} // namespace ncsol
