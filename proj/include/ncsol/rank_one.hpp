#pragma once

#include "ncsol/spectral_free.hpp"

namespace ncsol {

struct RankOneResolvent {
    cplx value;
    bool pole = false;   // 1 - q f_z vanished to working precision
};

// (chi_0, (L0 - q P0 - z)^{-1} chi_0).
RankOneResolvent f_rank_one(cplx z, double q);

// Bound-state energy of L0 - q P0: the root lambda0 = -a of q e^a E1(a) = 1.
double find_lambda0(double q, double rel_tol = 1e-12);

struct RankOneSpectralData {
    double weight = 0.0;     // w^L = g e^{-lambda}
    double gain = 0.0;       // g = [(1 - q PVf)^2 + (q pi e^{-lambda})^2]^{-1}
    double pv_f = 0.0;       // principal value of f^L on the cut
    double delta_f = 0.0;    // (1/pi) Im f^L on the upper side
    RealVector phi;          // phi + q xi
    RealVector pv_psi;       // principal value of psi^L
};

RankOneSpectralData spectral_data_rank_one(double lambda, double q, int n_max);

// Closed form for w^L via Ei.
double rank_one_weight_closed_form(double lambda, double q);

class RankOneModel {
public:
    // n_sites bounds the eigenvector storage; the tail beyond is below 1e-17 of the peak.
    RankOneModel(double q, int n_sites = 0);

    double q() const { return q_; }
    double lambda0() const { return lambda0_; }
    const RealVector& eig() const { return eig_; }
    double eigen_residual() const { return eigen_residual_; }

    RankOneResolvent f(cplx z) const { return f_rank_one(z, q_); }
    RankOneSpectralData at(double lambda, int n_max) const { return spectral_data_rank_one(lambda, q_, n_max); }

private:
    double q_;
    double lambda0_;
    RealVector eig_;
    double eigen_residual_ = 0.0;
};

// Resolvent kernel of L0 - q P0 on sites 0..n_max at z off the spectrum,
// from phi_z(min) psi_z(max) plus the rank-one correction.
std::vector<std::vector<cplx>> rank_one_kernel(cplx z, double q, int n_max);

struct ShiftReport {
    double max_deviation = 0.0;   // spectral density from the shift formula vs the eps limit
    double delta_f_deviation = 0.0;
};

// Compares w^L phi^L(x) phi^L(y) with the Richardson limit of
// (R_{lambda+i eps} - R_{lambda-i eps}) / (2 pi i), x, y <= n_max.
ShiftReport shift_identities_check(double lambda, double q, int n_max = 20);

// sup over x, y <= x_max of |eig(x) eig(y) + int w^L phi^L(x) phi^L(y) - delta_xy|.
double rank_one_completeness_defect(const RankOneModel& model, int x_max, const SpectralGrid& grid);

// Same for L0 alone.
double free_completeness_defect(int x_max, const SpectralGrid& grid);

} // namespace ncsol
