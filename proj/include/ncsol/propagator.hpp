#pragma once

#include "ncsol/linearized.hpp"
#include "ncsol/spectral_free.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace ncsol {

// Boundary value (H - lambda -+ i0)^{-1} on |lambda| > mu for which = H2 or H,
// acting on vectors supported in 0..n_max and returning sites 0..n_max.
class BoundaryResolvent {
public:
    BoundaryResolvent(const LinearizedOperator& op, Hamiltonian which, double lambda, int side, int n_max);

    BlockVector apply(const BlockVector& v) const;

    double lambda() const { return lambda_; }
    int side() const { return side_; }

private:
    BlockVector apply_h2(const BlockVector& v) const;

    double lambda_;
    int side_;
    int n_max_;
    ComplexVector phi1_, psi1_, phi2_, psi2_;
    Eigen::Matrix2cd woodbury_;          // (I - Q0 F)^{-1} Q0
    // full H: sites 1..S carrying the remaining potential
    int s_sites_ = 0;
    std::vector<Eigen::Matrix2d> blocks_;
    Eigen::MatrixXcd correction_;        // (I - (R2)_SS Q_S)^{-1}
};

struct BlockKernel {
    double lambda = 0.0;
    // entries (x, y) of the 11, 12, 21, 22 blocks of (2 pi i)^{-1}(R+ - R-)
    Eigen::MatrixXd b11, b12, b21, b22;
    double imaginary_residual = 0.0;     // sup of the part that must cancel
    double scale = 0.0;
};

BlockKernel h2_spectral_density(const LinearizedOperator& op, double lambda, int x_max);

// (2 pi i)^{-1} (R+ - R-) v.
BlockVector density_apply(const LinearizedOperator& op, Hamiltonian which, double lambda,
                          const BlockVector& v, int n_max);

struct PropagatorOptions {
    WeightSpec weight{2.0, -3.0};
    int x_out = 60;
    GridSpec grid{0.0, 1e-10, 1.0, 2.0, 0.5, 16};   // lambda_max 0 means spectral_cutoff(x_out)
};

// e^{-itH} P_e by the spectral integral over both branches, with Legendre
// product quadrature on every panel. Coefficients are computed once per
// initial vector; evolve(t) is then cheap.
class SpectralPropagator {
public:
    SpectralPropagator(const LinearizedOperator& op, Hamiltonian which, const BlockVector& v,
                       const PropagatorOptions& opt = {});

    // W e^{-itH} P_e W v on sites 0..x_out (W omitted when tau = 0).
    BlockVector evolve(double t) const;

    const SpectralGrid& grid() const { return grid_; }
    double lambda_max() const { return grid_.spec.lambda_max; }
    // w(x_out + 1) ||W v||_2: rough size of what sites beyond x_out could add
    double outside_estimate() const { return outside_estimate_; }

private:
    PropagatorOptions opt_;
    double mu_;
    SpectralGrid grid_;
    std::size_t panels_ = 0;
    int order_ = 0;
    // coefficients_[branch][panel] -> (order) x (2 (x_out + 1)) Legendre coefficients
    std::vector<Eigen::MatrixXcd> coefficients_[2];
    double outside_estimate_ = 0.0;
};

struct PropagatorComparison {
    double difference = 0.0;     // sup over sites of |coarse - refined|
    double scale = 0.0;
};
// Nested-grid disagreement of evolve(t).
PropagatorComparison nested_grid_check(const LinearizedOperator& op, Hamiltonian which, const BlockVector& v,
                                       std::span<const double> times, const PropagatorOptions& opt = {});

// Riesz projection onto the discrete spectrum, built from right vectors r_i
// and left vectors D r_i under the bilinear pairing.
class DiscreteProjection {
public:
    DiscreteProjection() = default;
    DiscreteProjection(std::vector<BlockVector> right, std::vector<BlockVector> left);

    BlockVector apply(const BlockVector& v) const;
    std::size_t rank() const { return right_.size(); }
    const std::vector<BlockVector>& right() const { return right_; }

private:
    std::vector<BlockVector> right_, left_;
    Eigen::MatrixXcd gram_inverse_;
};

// Eigenvectors at +- i b* of H2.
DiscreteProjection h2_discrete_projection(const Dispersion& disp, const EigenvalueReport& eig, int n_max);
// Generalized kernel of H: (alpha, -alpha) and (d alpha, d alpha).
DiscreteProjection h_discrete_projection(const LinearizedOperator& op, int n_max);

BlockVector essential_part(const DiscreteProjection& pd, const BlockVector& v);

struct OdeOptions {
    int n_max = 3000;
    double rtol = 1e-11;
    double atol = 1e-14;
    double boundary_tol = 1e-8;   // l2 mass in the last 10 sites relative to ||v||_2
    int max_steps = 50000000;
};

struct OdeResult {
    std::vector<double> times;          // samples actually reached
    std::vector<BlockVector> states;
    double safe_horizon = 0.0;          // largest t with the boundary monitor below tolerance
    bool truncated = false;             // some samples were beyond the safe horizon
    long steps = 0;
    long rejected = 0;
};

// DOPRI5 for i du/dt = H u on the truncation 0..n_max.
OdeResult evolve_ode(const LinearizedOperator& op, Hamiltonian which, const BlockVector& v,
                     std::span<const double> times, const OdeOptions& opt = {});

// Scalar variant for i du/dt = L0 u.
struct ScalarOdeResult {
    std::vector<double> times;
    std::vector<ComplexVector> states;
    double safe_horizon = 0.0;
    bool truncated = false;
    long steps = 0;
};
ScalarOdeResult evolve_ode_free(const ComplexVector& v, std::span<const double> times, const OdeOptions& opt = {});

struct DecayFit {
    std::vector<double> t;
    std::vector<double> s;         // ||W e^{-itH} P_e W v||_inf
    std::vector<double> product;   // t log^2 t s(t)
    double constant = 0.0;         // median of the product over the top decade
    double flatness = 0.0;         // max / min of the product over all samples
};

std::vector<double> log_spaced(double t0, double t1, int n);

DecayFit decay_fit(const SpectralPropagator& prop, std::span<const double> times);

struct DuhamelReport {
    std::vector<double> t;
    std::vector<double> product_h2, product_h;
    double max_ratio = 0.0;        // max over t of product_h / product_h2 and its inverse
    double convolution_constant = 0.0;   // sup_t int_0^t g(s) g(t-s) ds / g(t)
    std::vector<double> convolution_ratio;
};

// int_0^t g(s) g(t-s) ds / g(t) with g(t) = [(t + c3) log^2(t + c3)]^{-1}.
double convolution_ratio(double t, double c3);

DuhamelReport duhamel_transfer(const DecayFit& h2, const DecayFit& h, double c3 = 3.0);

} // namespace ncsol
