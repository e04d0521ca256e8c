#include "ncsol/specfun.hpp"

#include "ncsol/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ncsol {

namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();

// Neumaier-compensated running sum.
template <class T>
struct CompensatedSum {
    T sum{};
    T carry{};
    double abs_total = 0.0;

    void add(T term)
    {
        T t = sum + term;
        if (std::abs(sum) >= std::abs(term))
            carry += (sum - t) + term;
        else
            carry += (term - t) + sum;
        sum = t;
        abs_total += std::abs(term);
    }
    T value() const { return sum + carry; }
};

// Lentz evaluation of e^{w} E_n(w); same code for real and complex w.
template <class T>
EvalResult<T> en_scaled_cf(int n, T w)
{
    constexpr double tiny = 1e-300;
    T b = w + static_cast<double>(n);
    T c = 1.0 / tiny;
    T d = 1.0 / b;
    T h = d;
    constexpr int max_iter = 200000;
    for (int i = 1; i <= max_iter; ++i) {
        double an = -static_cast<double>(i) * (n - 1 + i);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        T del = c * d;
        h *= del;
        double change = std::abs(del - 1.0);
        if (change < eps) {
            EvalResult<T> r;
            r.value = h;
            r.abs_error_bound = (change + 4.0 * eps * std::sqrt(static_cast<double>(i))) * std::abs(h);
            r.method = Method::continued_fraction;
            return r;
        }
    }
    throw NumericalFailure("continued fraction for E_n did not converge");
}

// sum_{k != n} (-w)^k / ((k - n) k!) plus the head term with log and digamma.
template <class T>
EvalResult<T> en_series(int n, T w, T log_w)
{
    CompensatedSum<T> tail;
    T term = 1.0; // (-w)^k / k!
    T head{};
    double head_bound = 0.0;
    for (int k = 0; k < 100000; ++k) {
        if (k > 0)
            term *= -w / static_cast<double>(k);
        if (k == n) {
            head = term * (-log_w + digamma(n + 1));
            head_bound = std::abs(term) * (std::abs(log_w) + std::abs(digamma(n + 1)));
            continue;
        }
        T piece = -term / static_cast<double>(k - n);
        tail.add(piece);
        if (k > n && std::abs(piece) <= eps * std::abs(tail.value()) * 0.25 &&
            static_cast<double>(k) > std::abs(w))
            break;
    }
    EvalResult<T> r;
    CompensatedSum<T> total = tail;
    total.add(head);
    r.value = total.value();
    r.abs_error_bound = 4.0 * eps * (tail.abs_total + head_bound);
    r.method = Method::convergent_series;
    return r;
}

} // namespace

std::string_view method_name(Method m)
{
    switch (m) {
    case Method::convergent_series: return "convergent_series";
    case Method::continued_fraction: return "continued_fraction";
    case Method::asymptotic: return "asymptotic";
    case Method::quadrature: return "quadrature";
    case Method::closed_form: return "closed_form";
    }
    return "unknown";
}

double digamma(int k)
{
    if (k < 1)
        throw DomainError("digamma: k must be >= 1");
    double s = -euler_gamma;
    for (int j = 1; j < k; ++j)
        s += 1.0 / j;
    return s;
}

EvalResult<double> e1_series(double x)
{
    if (!(x > 0))
        throw DomainError("E1: x must be > 0");
    return en_series<double>(0, x, std::log(x));
}

EvalResult<double> e1_continued_fraction(double x)
{
    if (!(x > 0))
        throw DomainError("E1: x must be > 0");
    auto r = en_scaled_cf<double>(1, x);
    double s = std::exp(-x);
    r.value *= s;
    r.abs_error_bound *= s;
    return r;
}

EvalResult<double> e1_asymptotic(double x)
{
    if (!(x > 0))
        throw DomainError("E1: x must be > 0");
    // e^x E1(x) ~ sum_k (-1)^k k! / x^{k+1}, truncated before the smallest term.
    CompensatedSum<double> s;
    double term = 1.0 / x;
    double omitted = term;
    for (int k = 0;; ++k) {
        double next = -term * (k + 1) / x;
        s.add(term);
        omitted = next;
        if (std::abs(next) >= std::abs(term) || k > 500)
            break;
        term = next;
    }
    double scale = std::exp(-x);
    EvalResult<double> r;
    r.value = s.value() * scale;
    r.abs_error_bound = (std::abs(omitted) + 4.0 * eps * s.abs_total) * scale;
    r.method = Method::asymptotic;
    return r;
}

EvalResult<double> exp_integral_e1(double x)
{
    if (!(x > 0))
        throw DomainError("E1: x must be > 0");
    EvalResult<double> r;
    if (x <= 1.0)
        r = e1_series(x);
    else if (x < 40.0)
        r = e1_continued_fraction(x);
    else
        r = e1_asymptotic(x);
    r.underflow = x > 700.0;
    return r;
}

EvalResult<double> exp_integral_en(int n_plus_1, double x)
{
    if (n_plus_1 < 1 || n_plus_1 > 5)
        throw DomainError("E_n: order outside 1..5");
    if (!(x > 0))
        throw DomainError("E_n: x must be > 0");
    if (n_plus_1 == 1)
        return exp_integral_e1(x);
    if (x <= 1.0)
        return en_series<double>(n_plus_1 - 1, x, std::log(x));
    auto r = en_scaled_cf<double>(n_plus_1, x);
    double s = std::exp(-x);
    r.value *= s;
    r.abs_error_bound *= s;
    r.underflow = x > 700.0;
    return r;
}

EvalResult<cplx> exp_integral_en_series(int n, cplx w)
{
    if (n < 0 || n > 4)
        throw DomainError("E_{n+1} series: n outside 0..4");
    if (w == cplx(0.0))
        throw DomainError("E_{n+1} series: w = 0");
    return en_series<cplx>(n, w, std::log(w));
}

namespace {

EvalResult<double> ei_series_scaled(double x)
{
    // e^{-x} [gamma + ln x + sum x^k/(k k!)]
    CompensatedSum<double> s;
    s.add(euler_gamma);
    s.add(std::log(x));
    double term = 1.0;
    for (int k = 1; k < 10000; ++k) {
        term *= x / k;
        double piece = term / k;
        s.add(piece);
        if (piece < eps * 0.25 * std::abs(s.value()) && k > x)
            break;
    }
    double scale = std::exp(-x);
    EvalResult<double> r;
    r.value = s.value() * scale;
    r.abs_error_bound = 4.0 * eps * s.abs_total * scale;
    r.method = Method::convergent_series;
    return r;
}

EvalResult<double> ei_asymptotic_scaled(double x)
{
    // e^{-x} Ei(x) ~ sum_k k! / x^{k+1}
    CompensatedSum<double> s;
    double term = 1.0 / x;
    double omitted = term;
    for (int k = 0;; ++k) {
        double next = term * (k + 1) / x;
        s.add(term);
        omitted = next;
        if (next >= term || k > 500)
            break;
        term = next;
    }
    EvalResult<double> r;
    r.value = s.value();
    r.abs_error_bound = omitted + 4.0 * eps * s.abs_total;
    r.method = Method::asymptotic;
    return r;
}

} // namespace

EvalResult<double> exp_integral_ei_scaled(double x)
{
    if (!(x > 0))
        throw DomainError("Ei: x must be > 0");
    return x < 40.0 ? ei_series_scaled(x) : ei_asymptotic_scaled(x);
}

EvalResult<double> exp_integral_ei(double x)
{
    auto r = exp_integral_ei_scaled(x);
    if (x > 709.0) {
        r.overflow = true;
        r.value = std::numeric_limits<double>::infinity();
        r.abs_error_bound = std::numeric_limits<double>::infinity();
        return r;
    }
    double s = std::exp(x);
    r.value *= s;
    r.abs_error_bound *= s;
    return r;
}

double scaled_e1(double a)
{
    if (!(a > 0))
        throw DomainError("e^a E1(a): a must be > 0");
    if (a <= 1.0)
        return std::exp(a) * e1_series(a).value;
    if (a < 40.0)
        return en_scaled_cf<double>(1, a).value;
    double x = a;
    CompensatedSum<double> s;
    double term = 1.0 / x;
    for (int k = 0; k < 500; ++k) {
        double next = -term * (k + 1) / x;
        s.add(term);
        if (std::abs(next) >= std::abs(term))
            break;
        term = next;
    }
    return s.value();
}

EvalResult<cplx> f_resolvent_eval(cplx z)
{
    if (z.imag() == 0.0 && z.real() >= 0.0)
        throw DomainError("f_z: z on the spectrum [0, inf); use pv_f / delta_f");
    if (z.imag() == 0.0) {
        EvalResult<cplx> r;
        double a = -z.real();
        r.value = scaled_e1(a);
        r.abs_error_bound = 8.0 * eps * std::abs(r.value);
        r.method = a <= 1.0 ? Method::convergent_series
                 : a < 40.0 ? Method::continued_fraction
                            : Method::asymptotic;
        return r;
    }
    cplx w = -z;
    double aw = std::abs(w);
    bool series = aw <= 1.0 || (w.real() < 0.0 && aw + w.real() <= 4.0 && aw <= 700.0);
    if (series) {
        auto e = en_series<cplx>(0, w, std::log(w));
        cplx s = std::exp(w);
        EvalResult<cplx> r;
        r.value = e.value * s;
        r.abs_error_bound = e.abs_error_bound * std::abs(s);
        r.method = Method::convergent_series;
        return r;
    }
    if (w.real() >= 0.0 && aw >= 40.0) {
        CompensatedSum<cplx> s;
        cplx term = 1.0 / w;
        cplx omitted = term;
        for (int k = 0;; ++k) {
            cplx next = -term * static_cast<double>(k + 1) / w;
            s.add(term);
            omitted = next;
            if (std::abs(next) >= std::abs(term) || k > 500)
                break;
            term = next;
        }
        EvalResult<cplx> r;
        r.value = s.value();
        r.abs_error_bound = std::abs(omitted) + 4.0 * eps * s.abs_total;
        r.method = Method::asymptotic;
        return r;
    }
    return en_scaled_cf<cplx>(1, w);
}

cplx f_resolvent(cplx z) { return f_resolvent_eval(z).value; }

double pv_f(double lambda)
{
    if (!(lambda > 0))
        throw DomainError("pv_f: lambda must be > 0");
    return -exp_integral_ei_scaled(lambda).value;
}

double delta_f(double lambda)
{
    if (!(lambda >= 0))
        throw DomainError("delta_f: lambda must be >= 0");
    return std::exp(-lambda);
}

} // namespace ncsol
