#pragma once

#include <complex>
#include <vector>

namespace ncsol {

struct QuadratureRule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule; cached per n, safe to call concurrently.
const QuadratureRule& gauss_legendre(int n);

// Legendre coefficients c_k of the degree n-1 interpolant through the
// Gauss nodes: p(s) = sum_k c_k P_k(s).
std::vector<std::complex<double>> legendre_coefficients(const QuadratureRule& rule,
                                                        const std::vector<std::complex<double>>& values);

// int_{-1}^{1} P_k(s) e^{-i w s} ds for k = 0..n-1.
std::vector<std::complex<double>> legendre_fourier_moments(int n, double w);

} // namespace ncsol
