#pragma once

#include <complex>
#include <string_view>

namespace ncsol {

using cplx = std::complex<double>;

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;
inline constexpr double pi = 3.14159265358979323846264338327950288;

enum class Method { convergent_series, continued_fraction, asymptotic, quadrature, closed_form };

std::string_view method_name(Method m);

template <class T>
struct EvalResult {
    T value{};
    double abs_error_bound = 0.0;
    Method method = Method::convergent_series;
    bool underflow = false;
    bool overflow = false;
};

// E_1(x) for x > 0, regime chosen by x.
EvalResult<double> exp_integral_e1(double x);

// The individual branches, exposed so they can be cross-validated.
EvalResult<double> e1_series(double x);
EvalResult<double> e1_continued_fraction(double x);
EvalResult<double> e1_asymptotic(double x);

// E_{n+1}(x), 0 <= n <= 4, x > 0.
EvalResult<double> exp_integral_en(int n_plus_1, double x);

// E_{n+1}(w) by the convergent digamma series, principal log branch.
EvalResult<cplx> exp_integral_en_series(int n, cplx w);

// Ei(x) for x > 0, and e^{-x} Ei(x) which stays finite for large x.
EvalResult<double> exp_integral_ei(double x);
EvalResult<double> exp_integral_ei_scaled(double x);

// psi(k) = -gamma + sum_{j<k} 1/j, summed from j = 1 upward.
double digamma(int k);

// f_z = e^{-z} E_1(-z) for z off [0, inf).
EvalResult<cplx> f_resolvent_eval(cplx z);
cplx f_resolvent(cplx z);

// e^a E_1(a), a > 0; equals f at z = -a.
double scaled_e1(double a);

// Boundary values of f on the cut.
double pv_f(double lambda);
double delta_f(double lambda);

} // namespace ncsol
