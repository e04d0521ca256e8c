#pragma once

#include "ncsol/lattice.hpp"
#include "ncsol/soliton.hpp"

#include <complex>
#include <vector>

namespace ncsol {

// State of i dw/dt = L0 w - |w|^{2 sigma} w, stored in a frame rotating at
// `frame`: the physical field is e^{i frame t} w.
struct NLSState {
    double t = 0.0;
    ComplexVector w;
    int sigma = 1;
    double frame = 0.0;

    double mass() const;
    // (w, L0 w) - (sigma + 1)^{-1} sum |w|^{2 sigma + 2}; the frame does not enter.
    double energy() const;
    ComplexVector physical() const;
};

struct NlsOptions {
    double dt = 0.0;               // 0 means 0.01 / max(frame, 1)
    double inner_tol = 1e-14;      // sup change of the fixed-point iterate relative to sup |w|
    int max_inner = 60;
    int sponge_start = 0;          // absorbing layer on sponge_start..N; 0 disables it
    double sponge_strength = 0.0;  // peak absorption rate, reached quadratically at site N
    double boundary_tol = 1e-8;    // l2 mass in the last 10 sites relative to the total, checked when no sponge
};

// Energy- and mass-conserving midpoint scheme with the nonlinearity averaged
// between the old and new moduli. The linear part (L0 + frame - i sponge) is
// factored once; each step is a fixed-point iteration on tridiagonal solves.
class NlsIntegrator {
public:
    NlsIntegrator(std::size_t n_sites, int sigma, double frame, const NlsOptions& opt = {});

    void step(NLSState& s) const;
    // Steps until s.t reaches t_end (last step shortened so the end time is exact).
    void advance(NLSState& s, double t_end) const;

    double dt() const { return dt_; }
    int last_inner() const { return last_inner_; }

private:
    void solve(std::vector<std::complex<double>>& rhs, double h) const;
    void factor(double h) const;

    std::size_t n_;
    int sigma_;
    double frame_;
    NlsOptions opt_;
    double dt_;
    std::vector<double> diag_, off_, sponge_;
    // Thomas factorization for the current step length
    mutable double factored_h_ = -1.0;
    mutable std::vector<std::complex<double>> c_prime_, m_inv_;
    mutable int last_inner_ = 0;
};

NLSState nls_step(const NLSState& s, double dt);

struct SolitonRun {
    std::vector<double> t;
    std::vector<double> modulus_deviation;   // sup_x | |w(t, x)| - alpha(x) |
    std::vector<double> mass_drift;          // |mass(t) - mass(0)| / mass(0)
    std::vector<double> energy_drift;
    std::vector<double> phase_error;         // |arg(e^{-i mu t} w_phys(t, 0))| with w(0) = alpha
    double max_modulus_deviation = 0.0;
    double max_mass_drift = 0.0;
    double max_energy_drift = 0.0;
};

// Evolves w(0) = alpha_mu in the rotating frame and samples every `sample` time units.
SolitonRun soliton_stationarity(double mu, int sigma, double t_end, double sample = 0.5, const NlsOptions& opt = {});

struct PerturbationSpec {
    double amplitude = 0.01;     // ||beta_0||_2 / rho
    int site = 0;                // beta_0 starts as chi_site before projection
    double phase = 0.0;          // and is multiplied by e^{i phase}
};

struct ModulationSample {
    double t = 0.0;
    double mu_hat = 0.0;
    double nu_hat = 0.0;
    double theta = 0.0;                 // u = e^{-i theta}(alpha_{mu_hat} + beta)
    double orbit_distance = 0.0;        // || |w| - alpha_{mu_hat} ||_2
    double beta_l2 = 0.0;
    double beta_weighted = 0.0;         // sup_x w(x) |beta(x)|
    double orthogonality = 0.0;         // |(vec alpha, vec beta)| = 2 |Im (alpha, beta)|
    double mass = 0.0;
    double energy = 0.0;
};

// Three extractions at t - h, t, t + h for finite-difference residuals.
struct LnlsProbe {
    double h = 0.0;
    double t = 0.0;
    double mu_hat[3] = {0, 0, 0};
    double theta[3] = {0, 0, 0};
    ComplexVector beta[3];
};

struct ModulationTrack {
    double mu = 0.0;
    int sigma = 1;
    double rho = 0.0;
    WeightSpec weight{2.0, -3.0};
    std::vector<ModulationSample> samples;
    std::vector<LnlsProbe> probes;
    double beta0_l2 = 0.0;
    double max_orbit_distance = 0.0;
    bool absorbed = false;              // a sponge was active
};

struct PerturbationOptions {
    int n_sites = 400;
    double sample = 0.5;
    NlsOptions nls{0.0, 1e-14, 60, 200, 2.0, 1e-8};
    WeightSpec weight{2.0, -3.0};
    std::vector<double> probe_times;    // LNLS probes are taken around these times
    int probe_steps = 4;                // probe half-width in integrator steps
};

// Least-squares fit of |w| over the soliton family, Gauss-Newton in mu started at mu0.
struct FamilyFit {
    double mu = 0.0;
    double distance = 0.0;
    RealVector alpha;
    int iterations = 0;
};
FamilyFit fit_soliton_family(const ComplexVector& w, double mu0, int sigma, double tol = 1e-13, int max_iter = 30);

// beta_0 of the given spec with the alpha component removed, so that both
// (vec alpha, vec beta_0) = 0 and the mass changes only at second order.
ComplexVector perturbation_profile(const RealVector& alpha, const PerturbationSpec& spec);

ModulationTrack perturb_experiment(double mu, int sigma, const PerturbationSpec& spec, double t_end,
                                   const PerturbationOptions& opt = {});

struct LnlsResidual {
    double t = 0.0;
    double residual = 0.0;           // sup |i beta' - (H beta)_upper - gamma| with gamma derived from the NLS
    double display_residual = 0.0;   // same with the displayed gamma signs
    double scale = 0.0;              // sup |i beta'|
    double gamma1_scale = 0.0;
    double beta_sup = 0.0;
};

struct LnlsReport {
    std::vector<LnlsResidual> entries;
    double max_relative = 0.0;       // max residual / max(scale, ...)
};

LnlsReport lnls_residual_check(const ModulationTrack& track);

// gamma_0 + gamma_1 for u = e^{-i theta}(alpha_{mu_hat} + beta), upper component.
// display_signs selects the signs of the i d(alpha)/d(mu) term and the
// higher-order sum as displayed rather than as derived from the NLS.
ComplexVector lnls_forcing(const RealVector& alpha, const RealVector& alpha_hat, const RealVector& dalpha_hat,
                           const ComplexVector& beta, int sigma, double mu, double mu_hat, double dmu_hat,
                           double dnu_hat, bool display_signs = false);

struct DecayEvidence {
    std::vector<double> t;
    std::vector<double> product;     // t log^2 t sup_x w(x) |beta(x)|
    double early_max = 0.0;          // over [t0, sqrt(t0 t1)]
    double late_max = 0.0;           // over [sqrt(t0 t1), t1]
    bool bounded = false;            // late_max <= 4 early_max
};
DecayEvidence decay_evidence(const ModulationTrack& track, double t0, double t1);

} // namespace ncsol
