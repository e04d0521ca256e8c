#include "ncsol/quadrature.hpp"

#include "ncsol/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace ncsol {

namespace {

QuadratureRule build_rule(int n)
{
    // Golub-Welsch on the Legendre Jacobi matrix.
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        double b = k / std::sqrt(4.0 * k * k - 1.0);
        t(k, k - 1) = b;
        t(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = es.eigenvalues()(i);
        // polish the node with Newton steps on P_n, then take the classical weight
        for (int it = 0; it < 3; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            x -= p1 / dp;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.nodes[i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

} // namespace

const QuadratureRule& gauss_legendre(int n)
{
    if (n < 2 || n > 200)
        throw DomainError("gauss_legendre: order outside 2..200");
    static std::mutex lock;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard<std::mutex> guard(lock);
    auto& slot = cache[n];
    if (!slot)
        slot = std::make_unique<QuadratureRule>(build_rule(n));
    return *slot;
}

std::vector<std::complex<double>> legendre_coefficients(const QuadratureRule& rule,
                                                        const std::vector<std::complex<double>>& values)
{
    const int n = static_cast<int>(rule.nodes.size());
    std::vector<std::complex<double>> c(n);
    for (int i = 0; i < n; ++i) {
        double x = rule.nodes[i];
        double p0 = 1.0, p1 = x;
        for (int k = 0; k < n; ++k) {
            double pk;
            if (k == 0)
                pk = 1.0;
            else if (k == 1)
                pk = x;
            else {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
                pk = p2;
            }
            c[k] += rule.weights[i] * pk * values[i];
        }
    }
    for (int k = 0; k < n; ++k)
        c[k] *= (2.0 * k + 1.0) / 2.0;
    return c;
}

std::vector<std::complex<double>> legendre_fourier_moments(int n, double w)
{
    // int P_k(s) e^{-i w s} ds = 2 (-i)^k j_k(w)
    std::vector<std::complex<double>> m(n);
    const std::complex<double> minus_i(0.0, -1.0);
    std::complex<double> phase(1.0, 0.0);
    const double aw = std::abs(w);
    for (int k = 0; k < n; ++k) {
        double jk = aw == 0.0 ? (k == 0 ? 1.0 : 0.0) : std::sph_bessel(static_cast<unsigned>(k), aw);
        // j_k is even/odd in w with parity k
        if (w < 0.0 && (k % 2 == 1))
            jk = -jk;
        m[k] = 2.0 * phase * jk;
        phase *= minus_i;
    }
    return m;
}

} // namespace ncsol
