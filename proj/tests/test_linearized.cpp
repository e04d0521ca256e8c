#include "doctest.h"

#include "ncsol/linearized.hpp"
#include "ncsol/specfun.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace ncsol;

namespace {

using lcplx = std::complex<long double>;

// (chi_0, (L0 - z)^{-1} chi_0) from the Jacobi continued fraction, long double
lcplx f_continued_fraction(lcplx z, int depth = 3000)
{
    lcplx tail = 0.0L;
    for (int x = depth; x >= 1; --x) {
        const long double xl = x;
        tail = xl * xl / (2.0L * xl + 1.0L - z - tail);
    }
    return 1.0L / (1.0L - z - tail);
}

cplx h_oracle(const LinearizedOperator& op, cplx z)
{
    const long double mu = op.mu(), q1 = op.q1(), q2 = op.q2();
    const lcplx zl(z.real(), z.imag());
    const lcplx f1 = f_continued_fraction(zl - mu), f2 = f_continued_fraction(-zl - mu);
    const lcplx g1 = f1 / (1.0L - q1 * f1), g2 = f2 / (1.0L - q1 * f2);
    const lcplx h = q2 * q2 * g1 * g2 - 1.0L;
    return {static_cast<double>(h.real()), static_cast<double>(h.imag())};
}

BlockVector random_block(std::mt19937& gen, std::size_t n)
{
    std::normal_distribution<double> nd;
    BlockVector v(n);
    for (std::size_t x = 0; x < n; ++x) {
        v.upper[x] = cplx(nd(gen), nd(gen));
        v.lower[x] = cplx(nd(gen), nd(gen));
    }
    return v;
}

} // namespace

TEST_CASE("apply agrees with the dense matrix")
{
    std::mt19937 gen(11);
    auto op = LinearizedOperator(solve_soliton(20.0, 2));
    const int n = 60;
    for (auto which : {Hamiltonian::H0, Hamiltonian::H1, Hamiltonian::H2, Hamiltonian::H}) {
        auto v = random_block(gen, n + 1);
        auto hv = op.apply(which, v);
        Eigen::VectorXcd flat(2 * (n + 1));
        for (int x = 0; x <= n; ++x) {
            flat(x) = v.upper[x];
            flat(n + 1 + x) = v.lower[x];
        }
        Eigen::VectorXcd m = op.dense(which, n).cast<cplx>() * flat;
        for (int x = 0; x <= n; ++x) {
            CHECK(std::abs(m(x) - hv.upper[x]) <= 1e-12 * (1.0 + std::abs(m(x))));
            CHECK(std::abs(m(n + 1 + x) - hv.lower[x]) <= 1e-12 * (1.0 + std::abs(m(n + 1 + x))));
        }
    }
}

TEST_CASE("D H is symmetric and the block swap reverses H")
{
    auto op = LinearizedOperator(solve_soliton(50.0, 1));
    const int n = 40;
    Eigen::MatrixXd h = op.dense(Hamiltonian::H, n);
    Eigen::MatrixXd swap = Eigen::MatrixXd::Zero(2 * (n + 1), 2 * (n + 1));
    for (int x = 0; x <= n; ++x) {
        swap(x, n + 1 + x) = 1.0;
        swap(n + 1 + x, x) = 1.0;
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(2 * (n + 1), 2 * (n + 1));
    d.bottomRightCorner(n + 1, n + 1) *= -1.0;
    // D H is self-adjoint
    Eigen::MatrixXd dh = d * h;
    CHECK((dh - dh.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    // S H S = -H for the block swap S
    CHECK((swap * h * swap + h).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("generalized kernel of H")
{
    for (int sigma : {1, 2, 3}) {
        for (double mu : {20.0, 50.0, 100.0}) {
            auto op = LinearizedOperator(solve_soliton(mu, sigma));
            auto k = kernel_residuals(op);
            CHECK(k.phase <= 1e-10 * std::pow(op.rho(), 2 * sigma + 1));
            CHECK(k.dmu <= 1e-5 * op.rho());
        }
    }
}

TEST_CASE("size of U = H - H2")
{
    for (int sigma : {1, 2, 3}) {
        for (double mu : {20.0, 50.0, 100.0, 200.0}) {
            auto op = LinearizedOperator(solve_soliton(mu, sigma));
            const double a1 = op.profile().alpha[1];
            CHECK(op.u_norm() == doctest::Approx((2.0 * sigma + 1.0) * std::pow(a1, 2 * sigma)).epsilon(1e-14));
            CHECK(op.u_norm() <= op.u_norm_bound());
            CHECK(op.u_norm_bound() <= op.m_of_mu());
            // U vanishes on site 0
            BlockVector e(5);
            e.upper[0] = 1.0;
            e.lower[0] = 2.0;
            auto diff = op.apply(Hamiltonian::H, e) - op.apply(Hamiltonian::H2, e);
            CHECK(std::abs(diff.upper[0]) + std::abs(diff.lower[0]) <= 1e-14 * op.q1());
        }
    }
}

TEST_CASE("h against the continued-fraction oracle")
{
    struct Case {
        double mu;
        int sigma;
    };
    for (auto c : {Case{20.0, 1}, Case{50.0, 1}, Case{20.0, 2}}) {
        auto op = LinearizedOperator(solve_soliton(c.mu, c.sigma));
        Dispersion d(op, 400);
        for (cplx z : {cplx(0.0, 0.0), cplx(0.0, 0.01), cplx(0.3, 0.0), cplx(0.0, 1.0), cplx(1.5, 0.7),
                       cplx(-4.0, 2.0), cplx(0.0, 0.4 * c.mu), cplx(0.8 * c.mu, 0.0)}) {
            cplx ref = h_oracle(op, z);
            cplx got = d.h(z);
            CHECK(std::abs(got - ref) <= 1e-7 * std::abs(ref) + 1e-14);
        }
    }
}

TEST_CASE("stable and direct forms of h agree where both are accurate")
{
    auto op = LinearizedOperator(solve_soliton(30.0, 1));
    Dispersion d(op);
    for (double a : {-25.0, -10.0, -1.0, 0.0, 2.0, 14.0, 29.0}) {
        cplx s = d.h(a), r = d.h_direct(a);
        CHECK(std::abs(s - r) <= 1e-8 * std::abs(r) + 1e-13);
    }
}

TEST_CASE("h is real on the imaginary axis")
{
    for (int sigma : {1, 2}) {
        auto op = LinearizedOperator(solve_soliton(50.0, sigma));
        Dispersion d(op);
        for (double b : {1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0}) {
            cplx v = d.h(cplx(0.0, b));
            CHECK(std::abs(v.imag()) <= 1e-12 * (1.0 + std::abs(v.real())));
        }
    }
}

TEST_CASE("imaginary eigenvalue pair of H2")
{
    for (int sigma : {1, 2}) {
        for (double mu : {20.0, 50.0, 100.0, 200.0}) {
            auto op = LinearizedOperator(solve_soliton(mu, sigma));
            Dispersion d(op);
            auto e = find_imaginary_roots(d);
            CHECK(std::abs(e.b_star / e.seed - 1.0) <= 10.0 / mu);
            CHECK(d.h(cplx(0.0, 0.99 * e.b_star)).real() > 0.0);
            CHECK(d.h(cplx(0.0, 1.01 * e.b_star)).real() < 0.0);
            // quadratic model h(ib) ~ h(0) - h''(0) b^2 / 2 predicts the root
            double predicted = std::sqrt(2.0 * d.h(0.0).real() / e.curvature);
            CHECK(std::abs(predicted / e.b_star - 1.0) <= 0.05);
        }
    }
}

TEST_CASE("dense H2 truncation reproduces the pair and H has a zero cluster instead")
{
    auto op = LinearizedOperator(solve_soliton(20.0, 1));
    Dispersion d(op);
    auto e = find_imaginary_roots(d);
    auto near_axis = [&](const std::vector<cplx>& ev) {
        double best = 0.0;
        for (auto l : ev)
            if (std::abs(l.real()) < 1e-6 && std::abs(l.imag()) < 1.0)
                best = std::max(best, std::abs(l.imag()));
        return best;
    };
    auto ev2 = matrix_spectrum(op, Hamiltonian::H2, 250);
    CHECK(std::abs(near_axis(ev2) / e.b_star - 1.0) <= 1e-6);

    auto ev = matrix_spectrum(op, Hamiltonian::H, 250);
    int cluster = 0;
    for (auto l : ev)
        if (std::abs(l) < 0.1 * e.b_star)
            ++cluster;
    CHECK(cluster == 2);
}

TEST_CASE("right eigenvector of H2")
{
    auto op = LinearizedOperator(solve_soliton(50.0, 2));
    Dispersion d(op);
    auto e = find_imaginary_roots(d);
    const int n = 200;
    auto r = h2_eigenvector(d, e.lambda_plus, n);
    auto hr = op.apply(Hamiltonian::H2, r);
    double scale = 0.0, worst = 0.0;
    for (int x = 0; x < n; ++x) {
        scale = std::max({scale, std::abs(r.upper[x]), std::abs(r.lower[x])});
        worst = std::max({worst, std::abs(hr.upper[x] - e.lambda_plus * r.upper[x]),
                          std::abs(hr.lower[x] - e.lambda_plus * r.lower[x])});
    }
    CHECK(worst <= 1e-9 * op.q1() * scale);
}

TEST_CASE("h on the real interval")
{
    for (int sigma : {1, 2, 3}) {
        for (double mu : {20.0, 50.0, 100.0}) {
            auto op = LinearizedOperator(solve_soliton(mu, sigma));
            Dispersion d(op);
            auto scan = real_axis_scan(d, 2000);
            CHECK(scan.positive);
            CHECK(std::abs(scan.argmin) <= 1e-6 * mu);
            // even in a
            for (double a : {0.5, 3.0, 0.7 * mu})
                CHECK(d.h_real(a) == doctest::Approx(d.h_real(-a)).epsilon(1e-9));
        }
    }
}

TEST_CASE("h(0) scale")
{
    // h(0) sigma mu^{2 sigma + 2} / 2 = 1 - (6 sigma + 6)/mu + O(mu^{-2})
    for (int sigma : {1, 2}) {
        for (double mu : {100.0, 200.0, 400.0}) {
            auto op = LinearizedOperator(solve_soliton(mu, sigma));
            Dispersion d(op);
            double ratio = d.h(0.0).real() * sigma * std::pow(mu, 2 * sigma + 2) / 2.0;
            CHECK(std::abs(ratio - 1.0 + (6.0 * sigma + 6.0) / mu) <= 80.0 * sigma * (sigma + 1.0) / (mu * mu));
        }
    }
}

TEST_CASE("threshold limit of h")
{
    for (double mu : {50.0, 100.0, 200.0}) {
        auto op = LinearizedOperator(solve_soliton(mu, 1));
        Dispersion d(op);
        CHECK(std::abs(d.threshold_limit() - (mu / 2.0 + 0.25)) <= 2.0 / mu);
        // overshoots near small gaps, then approaches logarithmically
        double prev = 1e300;
        for (double gap : {1e-9, 1e-12, 1e-15}) {
            double dev = std::abs(d.h_real(mu - gap * mu) - d.threshold_limit());
            CHECK(dev < prev);
            prev = dev;
        }
        CHECK(prev <= 1e-3 * d.threshold_limit());
    }
    for (int sigma : {2, 3}) {
        for (double mu : {50.0, 100.0, 200.0}) {
            auto op = LinearizedOperator(solve_soliton(mu, sigma));
            Dispersion d(op);
            CHECK(std::abs(d.threshold_limit() - 1.0 / (sigma * sigma - 1.0)) <= 3.0 / mu);
        }
    }
}

TEST_CASE("roots of f - c1")
{
    for (int sigma : {1, 2, 3}) {
        for (double mu : {50.0, 100.0, 200.0}) {
            auto op = LinearizedOperator(solve_soliton(mu, sigma));
            Dispersion d(op);
            auto [r1, r2] = threshold_roots(d);
            CHECK(r2 == doctest::Approx(-r1));
            CHECK(std::abs(scaled_e1(mu - r1) - d.c1()) <= 1e-13 * d.c1());
            CHECK(std::abs(r2 / (mu + sigma) - sigma / (sigma + 1.0)) <= 5.0 / mu);
        }
    }
}
