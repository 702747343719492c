#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "dhlab/errors.hpp"

namespace dhlab {

using Rational = boost::multiprecision::cpp_rational;
using Multidegree = std::vector<int>;

namespace detail {

template <typename Scalar>
bool negligible(const Scalar& c)
{
    if constexpr (std::is_floating_point_v<Scalar>) {
        return std::abs(c) < 1e-14;
    } else {
        return c == 0;
    }
}

template <typename To, typename From>
To scalar_cast(const From& v)
{
    if constexpr (std::is_same_v<To, From>) {
        return v;
    } else if constexpr (std::is_same_v<From, Rational>) {
        return v.template convert_to<To>();
    } else {
        return To(v);
    }
}

}  // namespace detail

/**
 * Multivariate polynomial with sparse coefficient table indexed by
 * multi-degree. Scalar is either double or Rational; with Rational every
 * operation below is exact.
 */
template <typename Scalar>
class Polynomial {
public:
    static constexpr int kDefaultCap = 64;

    explicit Polynomial(int vars = 1, int degree_cap = kDefaultCap) : vars_(vars), cap_(degree_cap)
    {
        if (vars < 0) throw ConfigError("polynomial: negative variable count");
    }

    static Polynomial constant(int vars, const Scalar& c)
    {
        Polynomial p(vars);
        p.set(Multidegree(static_cast<std::size_t>(vars), 0), c);
        return p;
    }

    static Polynomial variable(int vars, int index)
    {
        Polynomial p(vars);
        Multidegree d(static_cast<std::size_t>(vars), 0);
        d.at(static_cast<std::size_t>(index)) = 1;
        p.set(d, Scalar(1));
        return p;
    }

    int vars() const { return vars_; }
    int degree_cap() const { return cap_; }
    void set_degree_cap(int cap)
    {
        if (degree() > cap) throw ConfigError("polynomial: degree exceeds cap");
        cap_ = cap;
    }

    const std::map<Multidegree, Scalar>& coefficients() const { return coeffs_; }

    Scalar coefficient(const Multidegree& d) const
    {
        auto it = coeffs_.find(d);
        return it == coeffs_.end() ? Scalar(0) : it->second;
    }

    void set(const Multidegree& d, const Scalar& c)
    {
        if (static_cast<int>(d.size()) != vars_) throw ConfigError("polynomial: multi-degree arity mismatch");
        int total = 0;
        for (int e : d) {
            if (e < 0) throw ConfigError("polynomial: negative exponent");
            total += e;
        }
        if (detail::negligible(c)) {
            coeffs_.erase(d);
            return;
        }
        if (total > cap_) throw ConfigError("polynomial: degree exceeds cap");
        coeffs_[d] = c;
    }

    /// Total degree; -1 for the zero polynomial.
    int degree() const
    {
        int deg = -1;
        for (const auto& [d, c] : coeffs_) {
            int total = 0;
            for (int e : d) total += e;
            deg = std::max(deg, total);
        }
        return deg;
    }

    bool is_zero() const { return coeffs_.empty(); }

    double operator()(std::span<const double> x) const
    {
        if (static_cast<int>(x.size()) != vars_) throw DomainError("polynomial: evaluation arity mismatch");
        double sum = 0.0;
        for (const auto& [d, c] : coeffs_) {
            double term = detail::scalar_cast<double>(c);
            for (int i = 0; i < vars_; ++i) term *= std::pow(x[static_cast<std::size_t>(i)], d[static_cast<std::size_t>(i)]);
            sum += term;
        }
        return sum;
    }

    double operator()(double t) const { return (*this)(std::span<const double>(&t, 1)); }

    Polynomial& operator+=(const Polynomial& o)
    {
        check_arity(o);
        cap_ = std::max(cap_, o.cap_);
        for (const auto& [d, c] : o.coeffs_) set(d, coefficient(d) + c);
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }

    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a += b * Scalar(-1); }

    friend Polynomial operator*(const Polynomial& a, const Scalar& s)
    {
        Polynomial out(a.vars_, a.cap_);
        for (const auto& [d, c] : a.coeffs_) out.set(d, c * s);
        return out;
    }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b)
    {
        a.check_arity(b);
        Polynomial out(a.vars_, a.cap_ + b.cap_);
        for (const auto& [da, ca] : a.coeffs_) {
            for (const auto& [db, cb] : b.coeffs_) {
                Multidegree d(da.size());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = da[i] + db[i];
                out.set(d, out.coefficient(d) + ca * cb);
            }
        }
        return out;
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b)
    {
        return a.vars_ == b.vars_ && a.coeffs_ == b.coeffs_;
    }

    template <typename Other>
    Polynomial<Other> cast() const
    {
        Polynomial<Other> out(vars_, cap_);
        for (const auto& [d, c] : coeffs_) out.set(d, detail::scalar_cast<Other>(c));
        return out;
    }

    /**
     * Substitute x_i = sum_j C(i, j) y_j + c_i. The result has the same
     * number of variables and (for invertible C) the same degree.
     */
    Polynomial substitute_affine(const std::vector<std::vector<Scalar>>& C, const std::vector<Scalar>& c) const
    {
        const auto n = static_cast<std::size_t>(vars_);
        if (C.size() != n || c.size() != n) throw DomainError("polynomial: substitution arity mismatch");
        std::vector<Polynomial> forms;
        for (std::size_t i = 0; i < n; ++i) {
            Polynomial f = constant(vars_, c[i]);
            for (std::size_t j = 0; j < n; ++j) f += variable(vars_, static_cast<int>(j)) * C[i][j];
            forms.push_back(std::move(f));
        }
        // powers[i][e] = forms[i]^e, built lazily
        std::vector<std::vector<Polynomial>> powers(n);
        auto power = [&](std::size_t i, int e) -> const Polynomial& {
            auto& cache = powers[i];
            if (cache.empty()) cache.push_back(constant(vars_, Scalar(1)));
            while (static_cast<int>(cache.size()) <= e) cache.push_back(cache.back() * forms[i]);
            return cache[static_cast<std::size_t>(e)];
        };

        Polynomial out(vars_, cap_);
        for (const auto& [d, coef] : coeffs_) {
            Polynomial term = constant(vars_, coef);
            for (std::size_t i = 0; i < n; ++i) {
                if (d[i] > 0) term = term * power(i, d[i]);
            }
            out += term;
        }
        out.cap_ = cap_;
        return out;
    }

private:
    void check_arity(const Polynomial& o) const
    {
        if (o.vars_ != vars_) throw DomainError("polynomial: variable count mismatch");
    }

    int vars_;
    int cap_;
    std::map<Multidegree, Scalar> coeffs_;
};

using RationalPolynomial = Polynomial<Rational>;
using RealPolynomial = Polynomial<double>;

/// Integral-affine-style transition t -> A t + b. Entries are exact rationals;
/// any finite double converts to a rational exactly.
struct AffineTransition {
    std::vector<std::vector<Rational>> A;
    std::vector<Rational> b;

    std::size_t dim() const { return b.size(); }
};

namespace detail {

/// Exact inverse by Gauss-Jordan elimination; throws on singular input.
inline std::vector<std::vector<Rational>> rational_inverse(std::vector<std::vector<Rational>> m)
{
    const std::size_t n = m.size();
    std::vector<std::vector<Rational>> inv(n, std::vector<Rational>(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i) {
        if (m[i].size() != n) throw DomainError("transition: matrix is not square");
        inv[i][i] = 1;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && m[piv][col] == 0) ++piv;
        if (piv == n) throw DomainError("transition: singular matrix");
        std::swap(m[piv], m[col]);
        std::swap(inv[piv], inv[col]);
        const Rational p = m[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col || m[i][col] == 0) continue;
            const Rational f = m[i][col];
            for (std::size_t j = 0; j < n; ++j) {
                m[i][j] -= f * m[col][j];
                inv[i][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

}  // namespace detail

/// Inverse transition t -> A^{-1} (t - b).
inline AffineTransition inverse(const AffineTransition& t)
{
    AffineTransition out;
    out.A = detail::rational_inverse(t.A);
    out.b.assign(t.dim(), Rational(0));
    for (std::size_t i = 0; i < t.dim(); ++i) {
        for (std::size_t j = 0; j < t.dim(); ++j) out.b[i] -= out.A[i][j] * t.b[j];
    }
    return out;
}

/// True iff A has integer entries and |det A| = 1.
inline bool is_integral_affine(const AffineTransition& t)
{
    const std::size_t n = t.A.size();
    for (const auto& row : t.A) {
        if (row.size() != n) return false;
        for (const auto& a : row) {
            if (denominator(a) != 1) return false;
        }
    }
    // exact determinant by elimination over the rationals
    auto m = t.A;
    Rational det = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && m[piv][col] == 0) ++piv;
        if (piv == n) return false;
        if (piv != col) {
            std::swap(m[piv], m[col]);
            det = -det;
        }
        det *= m[col][col];
        for (std::size_t i = col + 1; i < n; ++i) {
            const Rational f = m[i][col] / m[col][col];
            for (std::size_t j = col; j < n; ++j) m[i][j] -= f * m[col][j];
        }
    }
    return det == 1 || det == -1;
}

/**
 * Pull a polynomial back along the inverse transition: returns p o t^{-1},
 * i.e. the same function expressed in the target chart.
 */
template <typename Scalar>
Polynomial<Scalar> apply_transition(const Polynomial<Scalar>& p, const AffineTransition& t)
{
    if (t.dim() != static_cast<std::size_t>(p.vars())) throw DomainError("apply_transition: dimension mismatch");
    const AffineTransition inv = inverse(t);
    std::vector<std::vector<Scalar>> C(t.dim(), std::vector<Scalar>(t.dim()));
    std::vector<Scalar> c(t.dim());
    for (std::size_t i = 0; i < t.dim(); ++i) {
        c[i] = detail::scalar_cast<Scalar>(inv.b[i]);
        for (std::size_t j = 0; j < t.dim(); ++j) C[i][j] = detail::scalar_cast<Scalar>(inv.A[i][j]);
    }
    return p.substitute_affine(C, c);
}

// ---- JSON ---------------------------------------------------------------

inline Rational parse_rational(const nlohmann::json& j)
{
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_number()) return Rational(j.get<double>());
    if (j.is_string()) {
        try {
            return Rational(j.get<std::string>());
        } catch (const std::exception&) {
            throw ConfigError("not a rational literal: " + j.get<std::string>());
        }
    }
    throw ConfigError("expected a number or rational string");
}

template <typename Scalar>
nlohmann::json to_json(const Polynomial<Scalar>& p)
{
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& [d, c] : p.coefficients()) {
        nlohmann::json entry{{"deg", d}};
        if constexpr (std::is_same_v<Scalar, Rational>) {
            entry["c"] = c.str();
        } else {
            entry["c"] = c;
        }
        coeffs.push_back(std::move(entry));
    }
    return {{"vars", p.vars()}, {"coeffs", std::move(coeffs)}};
}

template <typename Scalar>
Polynomial<Scalar> polynomial_from_json(const nlohmann::json& j)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "vars" && it.key() != "coeffs") throw ConfigError("polynomial JSON: unknown field " + it.key());
    }
    Polynomial<Scalar> p(j.at("vars").get<int>());
    for (const auto& entry : j.at("coeffs")) {
        const auto d = entry.at("deg").get<Multidegree>();
        const Rational c = parse_rational(entry.at("c"));
        p.set(d, p.coefficient(d) + detail::scalar_cast<Scalar>(c));
    }
    return p;
}

/// Integers as JSON numbers, other rationals as exact "p/q" strings.
inline nlohmann::json rational_json(const Rational& a)
{
    if (denominator(a) == 1) return numerator(a).convert_to<long long>();
    return a.str();
}

inline nlohmann::json to_json(const AffineTransition& t)
{
    nlohmann::json A = nlohmann::json::array();
    for (const auto& row : t.A) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& a : row) {
            r.push_back(rational_json(a));
        }
        A.push_back(std::move(r));
    }
    nlohmann::json b = nlohmann::json::array();
    for (const auto& v : t.b) b.push_back(rational_json(v));
    return {{"A", std::move(A)}, {"b", std::move(b)}};
}

inline AffineTransition transition_from_json(const nlohmann::json& j)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "A" && it.key() != "b") throw ConfigError("transition JSON: unknown field " + it.key());
    }
    AffineTransition t;
    for (const auto& row : j.at("A")) {
        std::vector<Rational> r;
        for (const auto& a : row) r.push_back(parse_rational(a));
        t.A.push_back(std::move(r));
    }
    for (const auto& v : j.at("b")) t.b.push_back(parse_rational(v));
    if (t.A.size() != t.b.size()) throw ConfigError("transition JSON: A and b sizes differ");
    return t;
}

}  // namespace dhlab
