#pragma once

#include "ncsol/soliton.hpp"
#include "ncsol/specfun.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ncsol {

enum class Hamiltonian { H0, H1, H2, H };

const char* hamiltonian_name(Hamiltonian which);

using BlockVector = MatrixVector<cplx>;

class LinearizedOperator {
public:
    explicit LinearizedOperator(SolitonProfile profile);

    double mu() const { return profile_.mu; }
    int sigma() const { return profile_.sigma; }
    double rho() const { return profile_.rho; }
    double rho_power() const { return rho_power_; }   // rho^{2 sigma}
    double q1() const { return (sigma() + 1) * rho_power_; }
    double q2() const { return sigma() * rho_power_; }
    const SolitonProfile& profile() const { return profile_; }

    // alpha(x)^{2 sigma}, zero beyond the profile.
    double potential(int x) const;

    BlockVector apply(Hamiltonian which, const BlockVector& v) const;

    // Dense 2(N+1) square matrix; upper block indices 0..N, lower N+1..2N+1.
    Eigen::MatrixXd dense(Hamiltonian which, int n_max) const;

    // sup over x of the 2x2 block norm of U = H - H2, i.e. (2 sigma + 1) alpha(1)^{2 sigma}.
    double u_norm() const;
    // 2 (2 sigma + 1) ||(I - P0) alpha^{2 sigma}||_1.
    double u_norm_bound() const;
    // 2 (2 sigma + 1) mu^{-(2 sigma - 1)/(2 sigma)} (1 + slack).
    double m_of_mu(double slack = 1.0) const;

private:
    SolitonProfile profile_;
    double rho_power_;
    std::vector<double> potential_;
};

class Dispersion {
public:
    explicit Dispersion(const LinearizedOperator& op, int n_sum = 400);

    double c0() const { return c0_; }
    double c1() const { return c1_; }
    double c2() const { return c1_ * c1_ - c0_; }
    double ehat() const { return ehat_; }

    // q2^2 f^L_{z1} f^L_{z2} - 1, z1 = z - mu, z2 = -z - mu, evaluated with
    // the cancellation-free numerator near z = 0.
    cplx h(cplx z) const;
    // The same product formed directly from f^L.
    cplx h_direct(cplx z) const;
    // h on the real interval (-mu, mu).
    double h_real(double a) const { return h(cplx(a, 0.0)).real(); }
    // lim_{a -> mu} h(a).
    double threshold_limit() const;
    // (f_{a1} - c1)(f_{a2} - c1).
    double h1(double a) const;

    // u_j = 1 - rho^{2 sigma} f_{z_j}.
    cplx u_factor(cplx zj) const;

    double mu() const { return mu_; }
    int sigma() const { return sigma_; }
    double q1() const { return q1_; }
    double q2() const { return q2_; }

private:
    int n_sum_;
    double mu_;
    int sigma_;
    double r_, q1_, q2_;
    double c0_, c1_;
    double ehat_;
    std::vector<double> psi_minus_mu_;
};

struct EigenvalueReport {
    double seed = 0.0;          // sqrt(2 sigma) mu^{-sigma}
    double b_star = 0.0;
    cplx lambda_plus, lambda_minus;
    double imag_residual = 0.0; // |Im h(i b*)|
    double curvature = 0.0;     // h''(0)
    int iterations = 0;
};

// Root of b -> h(ib) on (0, mu], bracketed around the seed on a log scale.
EigenvalueReport find_imaginary_roots(const Dispersion& disp);

struct RealScanReport {
    std::vector<double> a;
    std::vector<double> h;
    double min_h = 0.0;
    double argmin = 0.0;
    bool positive = true;
    double r1 = 0.0, r2 = 0.0;  // roots of f_{a_j} - c1
};

RealScanReport real_axis_scan(const Dispersion& disp, int n_uniform = 10000);

// Roots of f_{a_1} - c1 and f_{a_2} - c1 on (-mu, mu).
std::pair<double, double> threshold_roots(const Dispersion& disp);

// Right eigenvector of H2 at an eigenvalue lambda, from the null vector of
// the 2x2 Woodbury matrix; the left eigenvector is D r.
BlockVector h2_eigenvector(const Dispersion& disp, cplx lambda, int n_max);

// Eigenvalues of the dense truncation.
std::vector<cplx> matrix_spectrum(const LinearizedOperator& op, Hamiltonian which, int n_max);

struct KernelResiduals {
    double phase = 0.0;      // ||H (alpha, -alpha)||_inf
    double dmu = 0.0;        // ||H (d alpha, d alpha) + (alpha, -alpha)||_inf
};
KernelResiduals kernel_residuals(const LinearizedOperator& op);

// Spectral norm of (H - z)^{-1} - (H2 - z)^{-1} on the truncation, and of (H - z)^{-1}.
struct ResolventDifference {
    double difference = 0.0;
    double full_norm = 0.0;
};
ResolventDifference resolvent_difference(const LinearizedOperator& op, cplx z, int n_max);

} // namespace ncsol
