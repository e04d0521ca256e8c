#pragma once

#include "ncsol/lattice.hpp"
#include "ncsol/specfun.hpp"

#include <functional>
#include <vector>

namespace ncsol {

// Generalized eigenfunction of L0 with phi(0) = 1, sites 0..n_max.
RealVector laguerre_phi(double lambda, int n_max);
ComplexVector laguerre_phi(cplx z, int n_max);

// e^{-lambda/2} phi_lambda; bounded by 1 for lambda >= 0, so never overflows.
RealVector weighted_phi(double lambda, int n_max);

// Polynomial solution of (L0 - z) xi = chi_0 with xi(0) = 0.
RealVector xi_vector(double lambda, int n_max);
ComplexVector xi_vector(cplx z, int n_max);
RealVector weighted_xi(double lambda, int n_max);

struct PsiDiagnostics {
    bool backward = false;      // Miller pass used
    int start_site = 0;         // M of the backward pass
    double contamination = 0.0; // sup difference between two Miller runs, relative to |psi(0)|
};

// Resolvent vector R_z chi_0 of L0. Throws NumericalFailure when the
// contamination monitor exceeds tolerance.
ComplexVector psi_vector(cplx z, int n_max, PsiDiagnostics* diag = nullptr, double tolerance = 1e-10);
RealVector psi_vector(double z, int n_max, PsiDiagnostics* diag = nullptr, double tolerance = 1e-10);

// Principal value of psi on the cut, lambda > 0.
RealVector pv_psi(double lambda, int n_max);

struct SpectralPoint {
    double lambda = 0.0;
    RealVector phi;
    double weight = 0.0;  // e^{-lambda}
    double pv_f = 0.0;
    double delta_f = 0.0;
};
SpectralPoint spectral_point(double lambda, int n_max);

struct GridSpec {
    double lambda_max = 40.0;
    double inner = 1e-12;        // innermost geometric node offset from 0
    double graded_until = 1.0;   // geometric panels cover [inner, graded_until]
    double ratio = 2.0;          // geometric panel ratio
    double bulk_width = 0.5;     // uniform panel width above graded_until
    int order = 16;              // Gauss-Legendre points per panel
};

struct SpectralGrid {
    GridSpec spec;
    std::vector<double> breaks;  // panel end points, increasing
    std::vector<double> nodes;
    std::vector<double> weights;

    SpectralGrid refined() const;
};

SpectralGrid make_spectral_grid(const GridSpec& spec);

// Smallest cutoff such that e^{-L} phi_L(x)^2 stays below tol for all x <= x_max
// and all larger L.
double spectral_cutoff(int x_max, double tol = 1e-17);

struct CalculusResult {
    ComplexVector value;
    double error_estimate = 0.0;  // sup difference between grid and refined grid
};

// g(L0) v by quadrature on grid and on grid.refined().
CalculusResult functional_calculus(const std::function<cplx(double)>& g,
                                   const ComplexVector& v,
                                   const SpectralGrid& grid);

// Single-grid version without the nested estimate.
ComplexVector functional_calculus_on(const std::function<cplx(double)>& g,
                                     const ComplexVector& v,
                                     const SpectralGrid& grid);

struct DerivativeBoundReport {
    long checked = 0;
    long violations = 0;
    double worst_ratio = 0.0;   // max of |derivative| / bound
    int worst_x = 0;
    int worst_order = 0;
    double worst_lambda = 0.0;
};

// Finite-difference check of the weighted derivative bounds for
// e^{-lambda/2} phi_lambda(x) (use_xi = false) or e^{-lambda/2} xi_lambda(x).
DerivativeBoundReport check_derivative_bounds(bool use_xi, int x_max, double lambda_max,
                                              double kappa, double lambda_step = 0.05,
                                              double fd_step = 1e-3);

} // namespace ncsol
