#pragma once

#include "locsolv/linalg.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace locsolv {

/// Exponent vector of a monomial in a_1, a_2, ...; entry j-1 is the power of
/// a_j. Trailing zeros are always trimmed so equal monomials compare equal.
using Exponents = std::vector<int>;

inline void trim(Exponents& e) {
  while (!e.empty() && e.back() == 0) e.pop_back();
}

/// Weight sum_j j * e_j of a monomial.
inline int weight(const Exponents& e) {
  int w = 0;
  for (std::size_t j = 0; j < e.size(); ++j) w += static_cast<int>(j + 1) * e[j];
  return w;
}

inline int degree(const Exponents& e) {
  int d = 0;
  for (int v : e) d += v;
  return d;
}

inline Exponents multiply(const Exponents& a, const Exponents& b) {
  Exponents out(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

namespace detail {
template <class C>
bool is_zero(const C& c) {
  return c == C(0);
}
inline bool is_zero(const Vector& v) { return v.size() == 0 || v.isZero(0.0); }
}  // namespace detail

/// Sparse polynomial in a_1..a_J with coefficients of type C. C may be a
/// scalar (double, exact rational) or a vector, in which case the object is a
/// vector whose entries are polynomials.
template <class C>
class Polynomial {
 public:
  using Terms = std::map<Exponents, C>;

  Polynomial() = default;

  static Polynomial constant(C value) {
    Polynomial p;
    p.add_term({}, std::move(value));
    return p;
  }
  /// The variable a_j (j >= 1) times `value`.
  static Polynomial variable(int j, C value) {
    Exponents e(j, 0);
    e[j - 1] = 1;
    Polynomial p;
    p.add_term(std::move(e), std::move(value));
    return p;
  }

  const Terms& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  void add_term(Exponents e, const C& value) {
    trim(e);
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (!detail::is_zero(value)) terms_.emplace(std::move(e), value);
      return;
    }
    it->second = it->second + value;
    if (detail::is_zero(it->second)) terms_.erase(it);
  }

  /// Coefficient of a monomial (zero if absent).
  C coefficient(Exponents e, C zero = C(0)) const {
    trim(e);
    auto it = terms_.find(e);
    return it == terms_.end() ? zero : it->second;
  }

  Polynomial& operator+=(const Polynomial& other) {
    for (const auto& [e, c] : other.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& other) {
    for (const auto& [e, c] : other.terms_) add_term(e, C(-c));
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }
  Polynomial operator-() const {
    Polynomial out;
    for (const auto& [e, c] : terms_) out.terms_.emplace(e, C(-c));
    return out;
  }

  /// Apply `f` to every coefficient, dropping results that vanish.
  template <class F>
  auto map(F&& f) const {
    using R = std::decay_t<decltype(f(std::declval<const C&>()))>;
    Polynomial<R> out;
    for (const auto& [e, c] : terms_) out.add_term(e, f(c));
    return out;
  }

  /// Remove coefficients at or below `threshold` in magnitude (scalar C only).
  void drop_below(double threshold) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (std::abs(static_cast<double>(it->second)) <= threshold) {
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
  }

  /// Evaluate with a_j = values[j-1] (missing values read as zero).
  template <class V>
  C evaluate(const std::vector<V>& values, C zero = C(0)) const {
    C acc = zero;
    for (const auto& [e, c] : terms_) {
      V mono = V(1);
      bool vanished = false;
      for (std::size_t j = 0; j < e.size() && !vanished; ++j) {
        if (e[j] == 0) continue;
        if (j >= values.size()) {
          vanished = true;
          break;
        }
        for (int k = 0; k < e[j]; ++k) mono = mono * values[j];
      }
      if (!vanished) acc = acc + C(c * mono);
    }
    return acc;
  }

  bool weighted_homogeneous(int w) const {
    for (const auto& entry : terms_) {
      if (weight(entry.first) != w) return false;
    }
    return true;
  }

 private:
  Terms terms_;
};

/// Product of a scalar-coefficient polynomial with a polynomial whose
/// coefficients support left multiplication by that scalar.
template <class S, class C>
Polynomial<C> operator*(const Polynomial<S>& a, const Polynomial<C>& b) {
  Polynomial<C> out;
  for (const auto& [ea, ca] : a.terms()) {
    for (const auto& [eb, cb] : b.terms()) out.add_term(multiply(ea, eb), C(ca * cb));
  }
  return out;
}

using MultiPoly = Polynomial<double>;

/// Human-readable form, e.g. "0.25*a2 - 0.25*a1^2".
template <class C>
std::string format_polynomial(const Polynomial<C>& p) {
  if (p.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (e[j] == 0) continue;
      os << "*a" << (j + 1);
      if (e[j] > 1) os << '^' << e[j];
    }
  }
  return os.str();
}

/// Monomial key as text, e.g. "a1^2*a3"; the constant monomial is "1".
inline std::string monomial_key(const Exponents& e) {
  std::ostringstream os;
  bool first = true;
  for (std::size_t j = 0; j < e.size(); ++j) {
    if (e[j] == 0) continue;
    if (!first) os << '*';
    first = false;
    os << 'a' << (j + 1);
    if (e[j] > 1) os << '^' << e[j];
  }
  return first ? "1" : os.str();
}

}  // namespace locsolv
