#include "config.hpp"

#include "suite.hpp"

#include "ncsol/csv.hpp"
#include "ncsol/dynamics.hpp"
#include "ncsol/errors.hpp"
#include "ncsol/linearized.hpp"
#include "ncsol/parallel.hpp"
#include "ncsol/propagator.hpp"
#include "ncsol/rank_one.hpp"
#include "ncsol/soliton.hpp"
#include "ncsol/spectral_free.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace ncsol::cli {
namespace {

constexpr const char* artifact_version = "1.0.0";

enum Exit { ok = 0, config_error = 2, numerical_failure = 3 };

// Collects outputs, warnings and timings; written as manifest.json on every exit path.
class Run {
public:
    Run(std::string command, fs::path out, bool quiet) : command_(std::move(command)), out_(std::move(out)), quiet_(quiet) {}

    void set_config(const RunConfig& cfg, const std::string& path)
    {
        inputs_ = json::object();
        std::string canonical;
        for (const auto& [k, v] : cfg.values()) {
            inputs_[k] = v;
            canonical += k + "=" + v + "\n";
        }
        config_path_ = path;
        config_hash_ = fnv1a(command_ + "\n" + canonical);
    }

    void write_csv(const std::string& name, const CsvTable& table)
    {
        std::ofstream os(out_ / name);
        table.write(os);
        if (!os)
            throw NumericalFailure("cannot write " + (out_ / name).string());
        outputs_.push_back(name);
        say(fmt::format("wrote {}", (out_ / name).string()));
    }

    void write_vector(const std::string& name, const ComplexVector& v)
    {
        CsvTable t({"x", "value_re", "value_im"});
        for (std::size_t x = 0; x < v.size(); ++x)
            t.add_row({static_cast<double>(x), v[x].real(), v[x].imag()});
        write_csv(name, t);
    }

    void write_vector(const std::string& name, const RealVector& v)
    {
        CsvTable t({"x", "value_re", "value_im"});
        for (std::size_t x = 0; x < v.size(); ++x)
            t.add_row({static_cast<double>(x), v[x], 0.0});
        write_csv(name, t);
    }

    void warn(std::string w)
    {
        say("warning: " + w);
        warnings_.push_back(std::move(w));
    }
    void time(const std::string& phase, double seconds) { timings_[phase] = seconds; }
    void result(const std::string& key, json value) { results_[key] = std::move(value); }
    void say(const std::string& line) const
    {
        if (!quiet_)
            std::cout << line << '\n';
    }

    void finish(int code, const std::string& error)
    {
        json m;
        m["artifact_version"] = artifact_version;
        m["command"] = command_;
        m["config_path"] = config_path_;
        m["config_hash"] = fmt::format("{:016x}", config_hash_);
        m["inputs"] = inputs_;
        m["threads"] = worker_count();
        m["exit_code"] = code;
        m["error"] = error;
        m["timings_s"] = timings_;
        m["warnings"] = warnings_;
        m["results"] = results_;
        m["outputs"] = outputs_;
        std::error_code ec;
        fs::create_directories(out_, ec);
        std::ofstream os(out_ / "manifest.json");
        os << m.dump(2) << '\n';
    }

    const fs::path& out() const { return out_; }

private:
    static std::uint64_t fnv1a(const std::string& s)
    {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

    std::string command_;
    fs::path out_;
    bool quiet_;
    std::string config_path_;
    std::uint64_t config_hash_ = 0;
    json inputs_ = json::object();
    json timings_ = json::object();
    json results_ = json::object();
    std::vector<std::string> warnings_;
    std::vector<std::string> outputs_;
};

class Stopwatch {
public:
    double lap()
    {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

int cmd_soliton(const RunConfig& cfg, Run& run)
{
    const double mu = cfg.real("mu");
    const int sigma = cfg.integer("sigma");
    Stopwatch sw;
    const auto p = solve_soliton(mu, sigma);
    run.time("solve", sw.lap());
    if (p.residual_sup > 1e-10 * p.rho)
        run.warn(fmt::format("residual {} exceeds 1e-10 rho", p.residual_sup));

    CsvTable summary({"mu", "sigma", "rho", "rho_power", "residual_sup", "tail_l1", "tail_l1_bound", "sweeps",
                      "newton_steps", "truncation"});
    summary.add_row({mu, static_cast<double>(sigma), p.rho, std::pow(p.rho, 2 * sigma), p.residual_sup, tail_l1(p),
                     tail_l1_bound(mu, sigma), static_cast<double>(p.sweeps), static_cast<double>(p.newton_steps),
                     static_cast<double>(p.truncation())});
    run.write_csv("soliton_summary.csv", summary);
    run.write_vector("soliton_profile.csv", p.alpha);
    run.write_vector("soliton_dmu.csv", dmu_alpha(mu, sigma, static_cast<int>(p.alpha.size())));
    run.result("rho", p.rho);
    run.result("residual_sup", p.residual_sup);
    run.say(fmt::format("rho = {:.17g}, residual {:.2e}", p.rho, p.residual_sup));
    return ok;
}

int cmd_spectrum(const RunConfig& cfg, Run& run)
{
    const double q = cfg.real("q");
    const int x_max = cfg.integer("x_max");
    const double lambda_max = cfg.real("lambda_max");
    const int points = cfg.integer("lambda_points");
    Stopwatch sw;

    CsvTable table({"lambda", "weight", "pv_f", "delta_f", "phi_1", "phi_2"});
    for (int i = 0; i < points; ++i) {
        const double lambda = lambda_max * (i + 1) / points;
        if (q == 0.0) {
            const auto sp = spectral_point(lambda, 2);
            table.add_row({lambda, sp.weight, sp.pv_f, sp.delta_f, sp.phi[1], sp.phi[2]});
        } else {
            const auto d = spectral_data_rank_one(lambda, q, 2);
            table.add_row({lambda, d.weight, d.pv_f, d.delta_f, d.phi[1], d.phi[2]});
        }
    }
    run.write_csv("spectral_table.csv", table);
    run.time("table", sw.lap());

    GridSpec spec;
    spec.lambda_max = spectral_cutoff(x_max + 5);
    const auto grid = make_spectral_grid(spec);
    CsvTable summary({"q", "x_max", "completeness_defect", "lambda0", "pole_residual", "eigen_residual"});
    if (q == 0.0) {
        const double defect = free_completeness_defect(x_max, grid);
        summary.add_row({q, static_cast<double>(x_max), defect, 0.0, 0.0, 0.0});
        run.result("completeness_defect", defect);
    } else {
        RankOneModel m(q);
        const double defect = rank_one_completeness_defect(m, x_max, grid);
        const double pole = std::abs(1.0 - q * scaled_e1(-m.lambda0()));
        summary.add_row({q, static_cast<double>(x_max), defect, m.lambda0(), pole, m.eigen_residual()});
        run.write_vector("bound_state.csv", m.eig());
        run.result("completeness_defect", defect);
        run.result("lambda0", m.lambda0());
        run.say(fmt::format("lambda0 = {:.17g}", m.lambda0()));
    }
    run.write_csv("spectrum_summary.csv", summary);
    run.time("completeness", sw.lap());
    return ok;
}

int cmd_linearize(const RunConfig& cfg, Run& run)
{
    const double mu = cfg.real("mu");
    const int sigma = cfg.integer("sigma");
    Stopwatch sw;
    LinearizedOperator op(solve_soliton(mu, sigma));
    Dispersion disp(op);
    const auto eig = find_imaginary_roots(disp);
    const auto kernel = kernel_residuals(op);
    const auto [r1, r2] = threshold_roots(disp);
    run.time("eigenvalues", sw.lap());

    CsvTable summary({"mu", "sigma", "rho", "seed", "b_star", "imag_residual", "curvature", "h0", "threshold_limit",
                      "r1", "r2", "kernel_phase", "kernel_dmu", "u_norm", "m_of_mu"});
    summary.add_row({mu, static_cast<double>(sigma), op.profile().rho, eig.seed, eig.b_star, eig.imag_residual,
                     eig.curvature, disp.h_real(0.0), disp.threshold_limit(), r1, r2, kernel.phase, kernel.dmu,
                     op.u_norm(), op.m_of_mu()});
    run.write_csv("eigenvalues.csv", summary);
    run.result("b_star", eig.b_star);

    const auto scan = real_axis_scan(disp, cfg.integer("scan_points"));
    CsvTable scan_table({"a", "h"});
    for (std::size_t i = 0; i < scan.a.size(); ++i)
        scan_table.add_row({scan.a[i], scan.h[i]});
    run.write_csv("real_scan.csv", scan_table);
    if (!scan.positive)
        run.warn(fmt::format("h changes sign on the real axis near {}", scan.argmin));
    run.time("scan", sw.lap());

    const auto r = h2_eigenvector(disp, eig.lambda_plus, cfg.integer("eigenvector_sites"));
    run.write_vector("h2_eigenvector_upper.csv", r.upper);
    run.write_vector("h2_eigenvector_lower.csv", r.lower);

    if (const int n = cfg.integer("dense_n"); n > 0) {
        CsvTable dense({"re", "im"});
        for (auto l : matrix_spectrum(op, Hamiltonian::H2, n))
            if (std::abs(l.real()) < mu)
                dense.add_row({l.real(), l.imag()});
        run.write_csv("dense_h2_gap_eigenvalues.csv", dense);
        run.time("dense", sw.lap());
    }
    run.say(fmt::format("b* = {:.17g} (seed {:.6g})", eig.b_star, eig.seed));
    return ok;
}

int cmd_decay(const RunConfig& cfg, Run& run)
{
    const double mu = cfg.real("mu");
    const int sigma = cfg.integer("sigma");
    PropagatorOptions opt;
    opt.weight = {cfg.real("kappa"), cfg.real("tau")};
    opt.x_out = cfg.integer("x_out");
    const int site = cfg.integer("site");
    if (site > opt.x_out)
        throw ConfigError("invalid configuration:\n  decay.site must not exceed decay.x_out");
    Stopwatch sw;
    LinearizedOperator op(solve_soliton(mu, sigma));
    BlockVector v(static_cast<std::size_t>(opt.x_out) + 1);
    v.upper[site] = 1.0;
    const auto times = log_spaced(cfg.real("t_min"), cfg.real("t_max"), cfg.integer("samples"));

    SpectralPropagator h2(op, Hamiltonian::H2, v, opt);
    const auto f2 = decay_fit(h2, times);
    run.time("h2", sw.lap());
    SpectralPropagator h(op, Hamiltonian::H, v, opt);
    const auto f = decay_fit(h, times);
    run.time("h", sw.lap());
    const auto rep = duhamel_transfer(f2, f);

    CsvTable table({"t", "s_h2", "product_h2", "s_h", "product_h", "ratio", "convolution_ratio"});
    for (std::size_t i = 0; i < times.size(); ++i)
        table.add_row({times[i], f2.s[i], f2.product[i], f.s[i], f.product[i], f.product[i] / f2.product[i],
                       rep.convolution_ratio[i]});
    run.write_csv("decay.csv", table);
    CsvTable summary({"flatness_h2", "constant_h2", "flatness_h", "constant_h", "max_ratio", "convolution_constant",
                      "lambda_max", "outside_estimate"});
    summary.add_row({f2.flatness, f2.constant, f.flatness, f.constant, rep.max_ratio, rep.convolution_constant,
                     h2.lambda_max(), h2.outside_estimate()});
    run.write_csv("decay_summary.csv", summary);
    if (f2.flatness > 4.0)
        run.warn(fmt::format("H2 product varies by {:.2f} over the samples", f2.flatness));
    run.result("flatness_h2", f2.flatness);
    run.result("max_ratio", rep.max_ratio);
    run.say(fmt::format("H2 product flatness {:.3f}, H/H2 ratio {:.3f}", f2.flatness, rep.max_ratio));
    return ok;
}

int cmd_evolve(const RunConfig& cfg, Run& run)
{
    const double mu = cfg.real("mu");
    const int sigma = cfg.integer("sigma");
    PerturbationSpec spec{cfg.real("amplitude"), cfg.integer("site"), cfg.real("phase")};
    PerturbationOptions opt;
    opt.n_sites = cfg.integer("n_sites");
    opt.sample = cfg.real("sample");
    opt.nls.dt = cfg.real("dt");
    opt.nls.sponge_start = cfg.integer("sponge_start");
    opt.nls.sponge_strength = cfg.real("sponge_strength");
    opt.weight = {cfg.real("kappa"), cfg.real("tau")};
    const double t_end = cfg.real("t_end");
    for (double c : {0.25, 0.5, 0.75})
        opt.probe_times.push_back(c * t_end + 0.5 * opt.sample);

    Stopwatch sw;
    const auto track = perturb_experiment(mu, sigma, spec, t_end, opt);
    run.time("evolve", sw.lap());
    CsvTable table({"t", "mu_hat", "nu_hat", "theta", "mass", "energy", "beta_l2", "beta_weighted", "orbit_distance",
                    "orthogonality"});
    for (const auto& s : track.samples)
        table.add_row({s.t, s.mu_hat, s.nu_hat, s.theta, s.mass, s.energy, s.beta_l2, s.beta_weighted,
                       s.orbit_distance, s.orthogonality});
    run.write_csv("track.csv", table);

    const auto lnls = lnls_residual_check(track);
    CsvTable lt({"t", "residual", "display_residual", "scale", "beta_sup"});
    for (const auto& e : lnls.entries)
        lt.add_row({e.t, e.residual, e.display_residual, e.scale, e.beta_sup});
    run.write_csv("lnls_residual.csv", lt);
    run.time("lnls", sw.lap());

    run.result("beta0_l2", track.beta0_l2);
    run.result("max_orbit_distance", track.max_orbit_distance);
    if (track.max_orbit_distance > 2.0 * track.beta0_l2 && track.beta0_l2 > 0.0)
        run.warn("orbit distance exceeded 2 ||beta_0||");
    if (t_end >= 100.0) {
        const auto ev = decay_evidence(track, 10.0, t_end);
        run.result("product_early_max", ev.early_max);
        run.result("product_late_max", ev.late_max);
    }
    run.say(fmt::format("{} samples, orbit distance {:.3e} (beta0 {:.3e})", track.samples.size(),
                        track.max_orbit_distance, track.beta0_l2));
    return ok;
}

int cmd_verify(const RunConfig& cfg, Run& run)
{
    acceptance::SuiteOptions opt;
    opt.only = cfg.integers("only");
    opt.on_result = [&](const acceptance::CriterionResult& r) { run.say(acceptance::format_line(r)); };
    const auto results = acceptance::run_suite(opt);
    CsvTable table({"criterion", "pass", "seconds"});
    json details = json::object();
    int failed = 0;
    for (const auto& r : results) {
        table.add_row({static_cast<double>(r.id), r.pass ? 1.0 : 0.0, r.seconds});
        json m = json::object();
        for (const auto& [k, v] : r.measures)
            m[k] = v;
        details[std::to_string(r.id)] = {{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"measures", m}};
        failed += !r.pass;
    }
    run.write_csv("acceptance.csv", table);
    run.result("criteria", details);
    run.result("failed", failed);
    return failed == 0 ? ok : numerical_failure;
}

} // namespace
} // namespace ncsol::cli

int main(int argc, char** argv)
{
    using namespace ncsol::cli;
    CLI::App app{"ncsol: spectral analysis and decay of the noncommutative lattice soliton"};
    app.require_subcommand(1);
    app.footer(defaults_help() + "\nExit codes: 0 success, 2 configuration error, 3 numerical failure.\n"
                                 "NCSOL_THREADS caps the number of worker threads.");
    std::string config_path, out_dir = "out";
    bool quiet = false;
    app.add_option("--config", config_path, "ini configuration file");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--quiet", quiet, "only errors on stderr");
    bool print_reference = false;
    app.add_flag("--print-reference-config", print_reference, "print an ini file with every default and exit");

    for (const auto& s : schemas()) {
        auto* sub = app.add_subcommand(s.command, s.summary);
        sub->fallthrough();
    }
    app.require_subcommand(0, 1);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : config_error;
    }
    if (print_reference) {
        std::cout << reference_config();
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return config_error;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    if (const char* env = std::getenv("NCSOL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) {
            std::cerr << "invalid configuration:\n  NCSOL_THREADS must be a positive integer\n";
            return config_error;
        }
    }

    Run run(command, out_dir, quiet);
    int code = 0;
    std::string error;
    try {
        std::filesystem::create_directories(out_dir);
        const auto cfg = load_config(command, config_path);
        run.set_config(cfg, config_path);
        if (command == "soliton")
            code = cmd_soliton(cfg, run);
        else if (command == "spectrum")
            code = cmd_spectrum(cfg, run);
        else if (command == "linearize")
            code = cmd_linearize(cfg, run);
        else if (command == "decay")
            code = cmd_decay(cfg, run);
        else if (command == "evolve")
            code = cmd_evolve(cfg, run);
        else
            code = cmd_verify(cfg, run);
    } catch (const ncsol::ConfigError& e) {
        code = config_error;
        error = e.what();
    } catch (const ncsol::DomainError& e) {
        code = config_error;
        error = e.what();
    } catch (const std::exception& e) {
        code = numerical_failure;
        error = e.what();
    }
    if (!error.empty())
        std::cerr << error << '\n';
    try {
        run.finish(code, error);
    } catch (const std::exception& e) {
        std::cerr << "manifest not written: " << e.what() << '\n';
    }
    return code;
}
