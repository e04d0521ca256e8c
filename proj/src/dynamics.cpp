#include "ncsol/dynamics.hpp"

#include "ncsol/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ncsol {

namespace {

using cplx = std::complex<double>;

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

// (F(a) - F(b)) / (a - b) for F(s) = s^{sigma+1} / (sigma+1), in polynomial form.
double averaged_power(double a, double b, int sigma)
{
    // Horner in a with coefficients b^k
    double sum = 0.0, bk = 1.0;
    for (int k = 0; k <= sigma; ++k) {
        sum = sum * a + bk;
        bk *= b;
    }
    return sum / (sigma + 1);
}

double sup_abs(std::span<const cplx> v)
{
    double m = 0.0;
    for (auto z : v)
        m = std::max(m, std::abs(z));
    return m;
}

RealVector padded(const RealVector& v, std::size_t n)
{
    auto out = v.resized(n);
    out.tail() = Tail::compact();
    return out;
}

// Gauss-Newton over the family with a fixed derivative direction.
FamilyFit fit_with_direction(const ComplexVector& w, double mu0, int sigma, const RealVector& direction, double tol,
                             int max_iter)
{
    const std::size_t n = w.size();
    std::vector<double> modulus(n);
    for (std::size_t x = 0; x < n; ++x)
        modulus[x] = std::abs(w[x]);
    double dd = 0.0;
    for (std::size_t x = 0; x < n; ++x)
        dd += direction.at(x) * direction.at(x);

    FamilyFit fit;
    fit.mu = mu0;
    for (int it = 0; it < max_iter; ++it) {
        fit.alpha = padded(solve_soliton(fit.mu, sigma).alpha, n);
        double dr = 0.0;
        for (std::size_t x = 0; x < n; ++x)
            dr += direction.at(x) * (modulus[x] - fit.alpha[x]);
        const double delta = dr / dd;
        fit.iterations = it + 1;
        if (!std::isfinite(delta))
            throw NumericalFailure("soliton family fit degenerated");
        if (std::abs(delta) <= tol * fit.mu)
            break;
        if (it + 1 == max_iter)
            throw NumericalFailure(fmt::format("soliton family fit did not converge near mu = {}", fit.mu));
        fit.mu += delta;
        if (fit.mu <= 1.0)
            throw NumericalFailure("soliton family fit left the small-perturbation regime");
    }
    double d2 = 0.0;
    for (std::size_t x = 0; x < n; ++x)
        d2 += (modulus[x] - fit.alpha[x]) * (modulus[x] - fit.alpha[x]);
    fit.distance = std::sqrt(d2);
    return fit;
}

double weighted_sup(const WeightSpec& w, const ComplexVector& v, std::size_t n)
{
    double m = 0.0;
    for (std::size_t x = 0; x < n; ++x)
        m = std::max(m, weight_factor(w, x) * std::abs(v[x]));
    return m;
}

} // namespace

double NLSState::mass() const
{
    double m = 0.0;
    for (auto z : w.values())
        m += std::norm(z);
    return m;
}

double NLSState::energy() const
{
    const auto lw = apply_l0(w);
    double quad = 0.0, pot = 0.0;
    for (std::size_t x = 0; x < w.size(); ++x) {
        quad += std::real(std::conj(w[x]) * lw[x]);
        pot += std::pow(std::norm(w[x]), sigma + 1);
    }
    return quad - pot / (sigma + 1);
}

ComplexVector NLSState::physical() const
{
    auto out = w;
    out *= std::polar(1.0, frame * t);
    return out;
}

NlsIntegrator::NlsIntegrator(std::size_t n_sites, int sigma, double frame, const NlsOptions& opt)
    : n_(n_sites), sigma_(sigma), frame_(frame), opt_(opt)
{
    if (n_sites < 12)
        throw DomainError("NLS lattice needs at least 12 sites");
    if (sigma < 1)
        throw DomainError("sigma must be a positive integer");
    dt_ = opt.dt > 0.0 ? opt.dt : 0.01 / std::max(frame, 1.0);
    diag_.resize(n_);
    off_.resize(n_);
    sponge_.assign(n_, 0.0);
    for (std::size_t x = 0; x < n_; ++x) {
        diag_[x] = 2.0 * x + 1.0 + frame_;
        off_[x] = -(static_cast<double>(x) + 1.0);
    }
    if (opt.sponge_start > 0 && static_cast<std::size_t>(opt.sponge_start) + 1 < n_) {
        const double width = static_cast<double>(n_ - 1 - opt.sponge_start);
        for (std::size_t x = opt.sponge_start; x < n_; ++x) {
            const double s = (x - opt.sponge_start) / width;
            sponge_[x] = opt.sponge_strength * s * s;
        }
    }
}

void NlsIntegrator::factor(double h) const
{
    if (h == factored_h_)
        return;
    const cplx ih(0.0, 0.5 * h);
    c_prime_.assign(n_, 0.0);
    m_inv_.assign(n_, 0.0);
    cplx prev_c = 0.0;
    for (std::size_t x = 0; x < n_; ++x) {
        const cplx d = 1.0 + ih * cplx(diag_[x], -sponge_[x]);
        const cplx e_prev = x > 0 ? ih * off_[x - 1] : cplx(0.0);
        const cplx m = d - e_prev * prev_c;
        m_inv_[x] = 1.0 / m;
        prev_c = (x + 1 < n_ ? ih * off_[x] : cplx(0.0)) * m_inv_[x];
        c_prime_[x] = prev_c;
    }
    factored_h_ = h;
}

void NlsIntegrator::solve(std::vector<cplx>& r, double h) const
{
    factor(h);
    const cplx ih(0.0, 0.5 * h);
    r[0] *= m_inv_[0];
    for (std::size_t x = 1; x < n_; ++x)
        r[x] = (r[x] - ih * off_[x - 1] * r[x - 1]) * m_inv_[x];
    for (std::size_t x = n_ - 1; x-- > 0;)
        r[x] -= c_prime_[x] * r[x + 1];
}

void NlsIntegrator::step(NLSState& s) const
{
    const double h = dt_;
    if (s.w.size() != n_)
        throw DomainError("state truncation does not match the integrator");
    const auto w = s.w.values();
    const double w_sup = std::max(sup_abs(w), 1e-300);

    if (opt_.sponge_start <= 0) {
        double edge = 0.0, total = 0.0;
        for (std::size_t x = 0; x < n_; ++x) {
            total += std::norm(w[x]);
            if (x + 10 >= n_)
                edge += std::norm(w[x]);
        }
        if (total > 0.0 && std::sqrt(edge / total) > opt_.boundary_tol)
            throw NumericalFailure(fmt::format("NLS mass reached the truncation boundary at t = {}", s.t));
    }

    // B w with B = I - (ih/2)(A - i sponge)
    const cplx ih(0.0, 0.5 * h);
    std::vector<cplx> bw(n_);
    std::vector<double> old_mod(n_);
    for (std::size_t x = 0; x < n_; ++x) {
        cplx aw = cplx(diag_[x], -sponge_[x]) * w[x];
        if (x + 1 < n_)
            aw += off_[x] * w[x + 1];
        if (x > 0)
            aw += off_[x - 1] * w[x - 1];
        bw[x] = w[x] - ih * aw;
        old_mod[x] = std::norm(w[x]);
    }

    std::vector<cplx> next(w.begin(), w.end()), trial(n_);
    const cplx ihh(0.0, h);
    int it = 0;
    for (;; ++it) {
        if (it == opt_.max_inner)
            throw NumericalFailure(fmt::format("NLS inner iteration did not converge at t = {}", s.t));
        for (std::size_t x = 0; x < n_; ++x) {
            const double g = averaged_power(std::norm(next[x]), old_mod[x], sigma_);
            trial[x] = bw[x] + ihh * g * 0.5 * (w[x] + next[x]);
        }
        solve(trial, h);
        double change = 0.0;
        for (std::size_t x = 0; x < n_; ++x)
            change = std::max(change, std::abs(trial[x] - next[x]));
        next.swap(trial);
        if (change <= opt_.inner_tol * w_sup)
            break;
    }
    last_inner_ = it + 1;
    std::copy(next.begin(), next.end(), w.begin());
    s.t += h;
}

void NlsIntegrator::advance(NLSState& s, double t_end) const
{
    const double span = t_end - s.t;
    if (span <= 0.0)
        return;
    const long n = std::max(1L, static_cast<long>(std::ceil(span / dt_ - 1e-9)));
    NlsIntegrator stepper = *this;
    stepper.dt_ = span / static_cast<double>(n);
    const double t0 = s.t;
    for (long k = 0; k < n; ++k) {
        stepper.step(s);
        s.t = t0 + span * static_cast<double>(k + 1) / static_cast<double>(n);
    }
    last_inner_ = stepper.last_inner_;
    factored_h_ = -1.0;
}

NLSState nls_step(const NLSState& s, double dt)
{
    NlsOptions opt;
    opt.dt = dt;
    NlsIntegrator stepper(s.w.size(), s.sigma, s.frame, opt);
    auto out = s;
    stepper.step(out);
    return out;
}

SolitonRun soliton_stationarity(double mu, int sigma, double t_end, double sample, const NlsOptions& opt)
{
    const auto p = solve_soliton(mu, sigma);
    const std::size_t n = p.alpha.size() + 20;
    const auto alpha = padded(p.alpha, n);

    NLSState s;
    s.sigma = sigma;
    s.frame = mu;
    s.w = ComplexVector(n);
    for (std::size_t x = 0; x < n; ++x)
        s.w[x] = alpha[x];
    const double m0 = s.mass(), e0 = s.energy();
    NlsIntegrator stepper(n, sigma, mu, opt);

    SolitonRun run;
    const long samples = std::lround(t_end / sample);
    for (long k = 1; k <= samples; ++k) {
        stepper.advance(s, sample * static_cast<double>(k));
        double dev = 0.0;
        for (std::size_t x = 0; x < n; ++x)
            dev = std::max(dev, std::abs(std::abs(s.w[x]) - alpha[x]));
        run.t.push_back(s.t);
        run.modulus_deviation.push_back(dev);
        run.mass_drift.push_back(std::abs(s.mass() - m0) / m0);
        run.energy_drift.push_back(std::abs(s.energy() - e0) / std::abs(e0));
        run.phase_error.push_back(std::abs(std::arg(s.w[0])));
        run.max_modulus_deviation = std::max(run.max_modulus_deviation, dev);
        run.max_mass_drift = std::max(run.max_mass_drift, run.mass_drift.back());
        run.max_energy_drift = std::max(run.max_energy_drift, run.energy_drift.back());
    }
    return run;
}

FamilyFit fit_soliton_family(const ComplexVector& w, double mu0, int sigma, double tol, int max_iter)
{
    const auto direction = dmu_alpha(mu0, sigma, static_cast<int>(w.size()));
    return fit_with_direction(w, mu0, sigma, direction, tol, max_iter);
}

ComplexVector perturbation_profile(const RealVector& alpha, const PerturbationSpec& spec)
{
    const std::size_t n = alpha.size();
    if (spec.site < 0 || static_cast<std::size_t>(spec.site) >= n)
        throw DomainError("perturbation site outside the lattice");
    const double rho = alpha[0];
    ComplexVector beta(n);
    beta[spec.site] = std::polar(1.0, spec.phase);
    double aa = 0.0;
    cplx ab = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        aa += alpha[x] * alpha[x];
        ab += alpha[x] * beta[x];
    }
    for (std::size_t x = 0; x < n; ++x)
        beta[x] -= ab / aa * alpha[x];
    const double norm = std::sqrt(NLSState{0.0, beta, 1, 0.0}.mass());
    if (norm == 0.0)
        throw DomainError("perturbation profile is parallel to the soliton");
    beta *= spec.amplitude * rho / norm;
    return beta;
}

ModulationTrack perturb_experiment(double mu, int sigma, const PerturbationSpec& spec, double t_end,
                                   const PerturbationOptions& opt)
{
    if (spec.amplitude < 0.0 || spec.amplitude > 0.01)
        throw DomainError("perturbation amplitude must lie in [0, 0.01] rho");
    const auto p = solve_soliton(mu, sigma);
    const std::size_t n = static_cast<std::size_t>(opt.n_sites);
    if (p.alpha.size() + 10 > n)
        throw DomainError("lattice too short for the soliton profile");
    const auto alpha = padded(p.alpha, n);
    const auto beta0 = perturbation_profile(alpha, spec);
    const auto direction = dmu_alpha(mu, sigma, static_cast<int>(n));
    const std::size_t interior =
        opt.nls.sponge_start > 0 ? std::min<std::size_t>(opt.nls.sponge_start, n) : n;

    ModulationTrack track;
    track.mu = mu;
    track.sigma = sigma;
    track.rho = p.rho;
    track.weight = opt.weight;
    track.absorbed = opt.nls.sponge_start > 0;
    track.beta0_l2 = std::sqrt(NLSState{0.0, beta0, sigma, 0.0}.mass());

    NLSState s;
    s.sigma = sigma;
    s.frame = mu;
    s.w = ComplexVector(n);
    for (std::size_t x = 0; x < n; ++x)
        s.w[x] = alpha[x] + beta0[x];
    NlsIntegrator stepper(n, sigma, mu, opt.nls);

    double last_phase = 0.0;     // unwrapped arg w(t, 0) in the rotating frame
    double last_mu = mu;
    double mu1_integral = 0.0;
    double last_t = 0.0;

    struct Extracted {
        double mu_hat, theta;
        ComplexVector beta;
        FamilyFit fit;
    };
    auto extract = [&](const NLSState& st) {
        Extracted e;
        e.fit = fit_with_direction(st.w, last_mu, sigma, direction, 1e-13, 30);
        double ph = std::arg(st.w[0]);
        ph += 2.0 * std::numbers::pi * std::round((last_phase - ph) / (2.0 * std::numbers::pi));
        e.mu_hat = e.fit.mu;
        e.theta = -mu * st.t - ph;
        e.beta = st.w;
        e.beta *= std::polar(1.0, -ph);
        for (std::size_t x = 0; x < n; ++x)
            e.beta[x] -= e.fit.alpha[x];
        return std::pair{e, ph};
    };
    auto record = [&](const NLSState& st, const Extracted& e) {
        ModulationSample m;
        m.t = st.t;
        m.mu_hat = e.mu_hat;
        mu1_integral += 0.5 * (st.t - last_t) * ((e.mu_hat - mu) + (last_mu - mu));
        m.theta = e.theta;
        m.nu_hat = e.theta + mu * st.t + mu1_integral;
        m.orbit_distance = e.fit.distance;
        double l2 = 0.0;
        cplx ab = 0.0;
        for (std::size_t x = 0; x < interior; ++x) {
            l2 += std::norm(e.beta[x]);
            ab += alpha[x] * e.beta[x];
        }
        m.beta_l2 = std::sqrt(l2);
        m.beta_weighted = weighted_sup(opt.weight, e.beta, interior);
        m.orthogonality = 2.0 * std::abs(ab.imag());
        m.mass = st.mass();
        m.energy = st.energy();
        track.samples.push_back(m);
        track.max_orbit_distance = std::max(track.max_orbit_distance, m.orbit_distance);
        last_t = st.t;
        last_mu = e.mu_hat;
    };

    {
        // t = 0 by definition: mu_hat = mu and beta = beta_0
        Extracted e;
        e.mu_hat = mu;
        e.theta = 0.0;
        e.beta = beta0;
        e.fit.mu = mu;
        e.fit.alpha = alpha;
        double d2 = 0.0;
        for (std::size_t x = 0; x < n; ++x)
            d2 += std::pow(std::abs(s.w[x]) - alpha[x], 2);
        e.fit.distance = std::sqrt(d2);
        record(s, e);
    }

    // Sample times and probe triples, merged in time order.
    struct Event {
        double t;
        bool sample;
        int probe;   // -1 for none
        int slot;
    };
    std::vector<Event> events;
    const long samples = std::lround(t_end / opt.sample);
    for (long k = 1; k <= samples; ++k)
        events.push_back({opt.sample * static_cast<double>(k), true, -1, 0});
    const double half = opt.probe_steps * stepper.dt();
    for (double c : opt.probe_times) {
        if (c - half <= 0.0 || c + half > t_end)
            continue;
        const int index = static_cast<int>(track.probes.size());
        track.probes.push_back(LnlsProbe{half, c, {}, {}, {}});
        for (int j = 0; j < 3; ++j)
            events.push_back({c + (j - 1) * half, false, index, j});
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

    for (const auto& ev : events) {
        if (ev.t > s.t)
            stepper.advance(s, ev.t);
        auto [e, ph] = extract(s);
        last_phase = ph;
        if (ev.probe >= 0) {
            auto& probe = track.probes[ev.probe];
            probe.mu_hat[ev.slot] = e.mu_hat;
            probe.theta[ev.slot] = e.theta;
            probe.beta[ev.slot] = e.beta;
        }
        if (ev.sample)
            record(s, e);
    }
    return track;
}

ComplexVector lnls_forcing(const RealVector& alpha, const RealVector& alpha_hat, const RealVector& dalpha_hat,
                           const ComplexVector& beta, int sigma, double mu, double mu_hat, double dmu_hat,
                           double dnu_hat, bool display_signs)
{
    const std::size_t n = beta.size();
    const double sign = display_signs ? 1.0 : -1.0;
    ComplexVector g(n);
    for (std::size_t x = 0; x < n; ++x) {
        const double a = alpha.at(x), ah = alpha_hat.at(x);
        const cplx b = beta[x], bc = std::conj(b);
        cplx acc = (mu_hat - mu) * b - dnu_hat * b - dnu_hat * ah + sign * cplx(0.0, 1.0) * dalpha_hat.at(x) * dmu_hat;
        acc -= ((sigma + 1.0) * b + static_cast<double>(sigma) * bc) *
               (std::pow(ah, 2 * sigma) - std::pow(a, 2 * sigma));
        cplx higher = 0.0;
        for (int j = 0; j <= sigma; ++j)
            for (int k = 0; k <= sigma + 1; ++k) {
                if ((j == 0 && k == 0) || (j == 0 && k == 1) || (j == 1 && k == 0))
                    continue;
                higher += binomial(sigma, j) * std::pow(bc, j) * std::pow(ah, sigma - j) * binomial(sigma + 1, k) *
                          std::pow(b, k) * std::pow(ah, sigma + 1 - k);
            }
        acc += sign * higher;
        g[x] = acc;
    }
    return g;
}

LnlsReport lnls_residual_check(const ModulationTrack& track)
{
    LnlsReport report;
    if (track.probes.empty())
        return report;
    const std::size_t n = track.probes.front().beta[1].size();
    const int sigma = track.sigma;
    const auto alpha = padded(solve_soliton(track.mu, sigma).alpha, n);
    for (const auto& pr : track.probes) {
        const double h = pr.h;
        const double mu_hat = pr.mu_hat[1];
        const double dmu_hat = (pr.mu_hat[2] - pr.mu_hat[0]) / (2.0 * h);
        const double dnu_hat = (pr.theta[2] - pr.theta[0]) / (2.0 * h) + mu_hat;
        const auto alpha_hat = padded(solve_soliton(mu_hat, sigma).alpha, n);
        const auto dalpha_hat = dmu_alpha(mu_hat, sigma, static_cast<int>(n));
        const auto& beta = pr.beta[1];
        const auto lb = apply_l0(beta);
        const auto gamma = lnls_forcing(alpha, alpha_hat, dalpha_hat, beta, sigma, track.mu, mu_hat, dmu_hat, dnu_hat);
        const auto gamma_display =
            lnls_forcing(alpha, alpha_hat, dalpha_hat, beta, sigma, track.mu, mu_hat, dmu_hat, dnu_hat, true);

        LnlsResidual r;
        r.t = pr.t;
        // the absorbing layer and the last site (cut stencil) are left out
        const std::size_t interior = std::min<std::size_t>(n - 1, track.absorbed ? n / 2 : n - 1);
        for (std::size_t x = 0; x < interior; ++x) {
            const cplx ib = cplx(0.0, 1.0) * (pr.beta[2][x] - pr.beta[0][x]) / (2.0 * h);
            const double ap = std::pow(alpha[x], 2 * sigma);
            const cplx hb = lb[x] + track.mu * beta[x] - (sigma + 1.0) * ap * beta[x] -
                            static_cast<double>(sigma) * ap * std::conj(beta[x]);
            r.residual = std::max(r.residual, std::abs(ib - hb - gamma[x]));
            r.display_residual = std::max(r.display_residual, std::abs(ib - hb - gamma_display[x]));
            r.scale = std::max(r.scale, std::abs(ib));
            r.beta_sup = std::max(r.beta_sup, std::abs(beta[x]));
        }
        report.max_relative = std::max(report.max_relative, r.residual / std::max(r.scale, 1e-300));
        report.entries.push_back(r);
    }
    return report;
}

DecayEvidence decay_evidence(const ModulationTrack& track, double t0, double t1)
{
    DecayEvidence ev;
    const double split = std::sqrt(t0 * t1);
    for (const auto& s : track.samples) {
        if (s.t < t0 || s.t > t1)
            continue;
        const double l = std::log(s.t);
        const double prod = s.t * l * l * s.beta_weighted;
        ev.t.push_back(s.t);
        ev.product.push_back(prod);
        (s.t <= split ? ev.early_max : ev.late_max) = std::max(s.t <= split ? ev.early_max : ev.late_max, prod);
    }
    ev.bounded = !ev.t.empty() && ev.late_max <= 4.0 * ev.early_max;
    return ev;
}

} // namespace ncsol
