#pragma once

#include "ncsol/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ncsol {

struct Tail {
    enum class Kind { compact, exponential, unknown };
    Kind kind = Kind::unknown;
    double rate = 0.0;        // decay rate when kind == exponential
    bool truncated = false;   // a stencil was applied with v(N+1) = 0

    static Tail compact() { return {Kind::compact, 0.0, false}; }
    static Tail exponential(double r) { return {Kind::exponential, r, false}; }
};

// Values on {0, ..., N}.
template <class T>
class LatticeVector {
public:
    LatticeVector() = default;
    explicit LatticeVector(std::size_t n_sites, Tail tail = Tail::compact())
        : values_(n_sites, T{}), tail_(tail) {}
    LatticeVector(std::vector<T> values, Tail tail = Tail::compact())
        : values_(std::move(values)), tail_(tail) {}

    static LatticeVector unit(std::size_t x, std::size_t n_sites)
    {
        LatticeVector v(n_sites);
        v.values_.at(x) = T(1);
        return v;
    }

    std::size_t size() const { return values_.size(); }
    int truncation() const { return static_cast<int>(values_.size()) - 1; }
    T& operator[](std::size_t x) { return values_[x]; }
    const T& operator[](std::size_t x) const { return values_[x]; }
    T at(std::size_t x) const { return x < values_.size() ? values_[x] : T{}; }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }
    std::vector<T>& data() { return values_; }
    const std::vector<T>& data() const { return values_; }

    const Tail& tail() const { return tail_; }
    Tail& tail() { return tail_; }

    LatticeVector resized(std::size_t n_sites) const
    {
        auto v = values_;
        v.resize(n_sites, T{});
        return LatticeVector(std::move(v), tail_);
    }

    LatticeVector& operator+=(const LatticeVector& o)
    {
        require_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] += o.values_[i];
        return *this;
    }
    LatticeVector& operator-=(const LatticeVector& o)
    {
        require_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] -= o.values_[i];
        return *this;
    }
    template <class S>
    LatticeVector& operator*=(S s)
    {
        for (auto& x : values_)
            x *= s;
        return *this;
    }
    friend LatticeVector operator+(LatticeVector a, const LatticeVector& b) { return a += b; }
    friend LatticeVector operator-(LatticeVector a, const LatticeVector& b) { return a -= b; }
    template <class S>
    friend LatticeVector operator*(S s, LatticeVector a) { return a *= s; }

    bool all_finite() const
    {
        return std::all_of(values_.begin(), values_.end(), [](const T& x) { return std::isfinite(std::abs(x)); });
    }

private:
    void require_same(const LatticeVector& o) const
    {
        if (o.size() != size())
            throw DomainError("lattice vectors with different truncations");
    }

    std::vector<T> values_;
    Tail tail_;
};

using RealVector = LatticeVector<double>;
using ComplexVector = LatticeVector<std::complex<double>>;

// Pair (upper, lower) in H (+) H.
template <class T>
struct MatrixVector {
    LatticeVector<T> upper;
    LatticeVector<T> lower;

    MatrixVector() = default;
    MatrixVector(LatticeVector<T> u, LatticeVector<T> l) : upper(std::move(u)), lower(std::move(l))
    {
        if (upper.size() != lower.size())
            throw DomainError("matrix vector blocks with different truncations");
    }
    explicit MatrixVector(std::size_t n_sites) : upper(n_sites), lower(n_sites) {}

    std::size_t size() const { return upper.size(); }
    MatrixVector& operator+=(const MatrixVector& o) { upper += o.upper; lower += o.lower; return *this; }
    MatrixVector& operator-=(const MatrixVector& o) { upper -= o.upper; lower -= o.lower; return *this; }
    template <class S>
    MatrixVector& operator*=(S s) { upper *= s; lower *= s; return *this; }
    friend MatrixVector operator+(MatrixVector a, const MatrixVector& b) { return a += b; }
    friend MatrixVector operator-(MatrixVector a, const MatrixVector& b) { return a -= b; }
    template <class S>
    friend MatrixVector operator*(S s, MatrixVector a) { return a *= s; }
};

struct WeightSpec {
    double kappa = 2.0;
    double tau = -3.0;
};

struct Norms {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
};

// (L0 v)(x) = -(x+1) v(x+1) + (2x+1) v(x) - x v(x-1), with v(N+1) = 0.
template <class T>
void apply_l0(std::span<const T> v, std::span<T> out)
{
    const std::size_t n = v.size();
    for (std::size_t x = 0; x < n; ++x) {
        const double xd = static_cast<double>(x);
        T acc = (2.0 * xd + 1.0) * v[x];
        if (x + 1 < n)
            acc -= (xd + 1.0) * v[x + 1];
        if (x > 0)
            acc -= xd * v[x - 1];
        out[x] = acc;
    }
}

template <class T>
LatticeVector<T> apply_l0(const LatticeVector<T>& v)
{
    LatticeVector<T> out(v.size(), v.tail());
    apply_l0<T>(v.values(), out.values());
    out.tail().truncated = true;
    return out;
}

template <class T>
LatticeVector<T> apply_m(const LatticeVector<T>& v)
{
    auto out = v;
    for (std::size_t x = 0; x < out.size(); ++x)
        out[x] *= static_cast<double>(x);
    return out;
}

template <class T>
LatticeVector<T> apply_p0(const LatticeVector<T>& v)
{
    LatticeVector<T> out(v.size(), Tail::compact());
    out[0] = v[0];
    return out;
}

inline double weight_factor(const WeightSpec& w, std::size_t x)
{
    return std::pow(static_cast<double>(x) + w.kappa, w.tau);
}

template <class T>
LatticeVector<T> apply_weight(const WeightSpec& w, const LatticeVector<T>& v)
{
    auto out = v;
    if (w.tau == 0.0)
        return out;
    for (std::size_t x = 0; x < out.size(); ++x)
        out[x] *= weight_factor(w, x);
    return out;
}

template <class T>
MatrixVector<T> apply_weight(const WeightSpec& w, const MatrixVector<T>& v)
{
    return {apply_weight(w, v.upper), apply_weight(w, v.lower)};
}

// D = diag(1, -1)
template <class T>
MatrixVector<T> apply_d(const MatrixVector<T>& v)
{
    return {v.upper, -1.0 * v.lower};
}

// J = [[0, 1], [-1, 0]]
template <class T>
MatrixVector<T> apply_j(const MatrixVector<T>& v)
{
    return {v.lower, -1.0 * v.upper};
}

template <class T>
MatrixVector<T> apply_p0(const MatrixVector<T>& v)
{
    return {apply_p0(v.upper), apply_p0(v.lower)};
}

template <class T>
MatrixVector<T> apply_m(const MatrixVector<T>& v)
{
    return {apply_m(v.upper), apply_m(v.lower)};
}

template <class T>
Norms norms(std::span<const T> v)
{
    Norms n;
    double sq = 0.0;
    for (const auto& x : v) {
        double a = std::abs(x);
        n.l1 += a;
        sq += a * a;
        n.linf = std::max(n.linf, a);
    }
    n.l2 = std::sqrt(sq);
    return n;
}

template <class T>
Norms norms(const LatticeVector<T>& v) { return norms<T>(v.values()); }

template <class T>
Norms norms(const MatrixVector<T>& v)
{
    Norms a = norms(v.upper), b = norms(v.lower);
    return {a.l1 + b.l1, std::hypot(a.l2, b.l2), std::max(a.linf, b.linf)};
}

template <class V>
Norms weighted_norms(const WeightSpec& w, const V& v) { return norms(apply_weight(w, v)); }

// Bilinear pairing sum_x u(x) v(x); conjugation is left to the caller.
template <class T>
T dot(std::span<const T> u, std::span<const T> v)
{
    T s{};
    const std::size_t n = std::min(u.size(), v.size());
    for (std::size_t x = 0; x < n; ++x)
        s += u[x] * v[x];
    return s;
}

template <class T>
T dot(const LatticeVector<T>& u, const LatticeVector<T>& v) { return dot<T>(u.values(), v.values()); }

// Hermitian inner product (u, v) = sum conj(u) v.
std::complex<double> inner(const ComplexVector& u, const ComplexVector& v);

// l2 mass within `width` sites of the truncation edge.
template <class T>
double boundary_mass(const LatticeVector<T>& v, std::size_t width = 10)
{
    double s = 0.0;
    const std::size_t n = v.size();
    for (std::size_t x = n > width ? n - width : 0; x < n; ++x)
        s += std::norm(std::complex<double>(v[x]));
    return s;
}

// Thomas algorithm for sub/diag/super diagonals; no pivoting.
template <class T>
std::vector<T> solve_tridiagonal(std::span<const T> sub, std::span<const T> diag, std::span<const T> super,
                                 std::span<const T> rhs)
{
    const std::size_t n = diag.size();
    std::vector<T> c(n), d(n);
    T denom = diag[0];
    if (std::abs(denom) == 0.0)
        throw NumericalFailure("tridiagonal solve: zero pivot");
    c[0] = n > 1 ? super[0] / denom : T{};
    d[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - sub[i] * c[i - 1];
        if (std::abs(denom) == 0.0)
            throw NumericalFailure("tridiagonal solve: zero pivot");
        c[i] = i + 1 < n ? super[i] / denom : T{};
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        d[i] -= c[i] * d[i + 1];
    return d;
}

// CSV with columns x,value_re,value_im.
void write_csv(std::ostream& os, const ComplexVector& v);
void write_csv(std::ostream& os, const RealVector& v);
ComplexVector read_csv(std::istream& is);

} // namespace ncsol
