#include "locsolv/oracle_m2.hpp"

#include <regex>
#include <type_traits>
#include <sstream>

namespace locsolv::exact {

std::string to_string(const Rational& r) {
  Rational c = r;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

Rational parse_rational(const std::string& text) {
  static const std::regex fraction(R"(^\s*([+-]?\d+)\s*/\s*(\d+)\s*$)");
  static const std::regex decimal(R"(^\s*([+-]?)(\d*)(?:\.(\d*))?\s*$)");
  std::smatch match;
  if (std::regex_match(text, match, fraction)) {
    const mpz_class den(match[2].str(), 10);
    if (den == 0) throw PreconditionError("zero denominator in '" + text + "'");
    Rational r(mpz_class(match[1].str(), 10), den);
    r.canonicalize();
    return r;
  }
  if (std::regex_match(text, match, decimal) && (match[2].length() + match[3].length()) > 0) {
    const std::string whole = match[2].length() ? match[2].str() : "0";
    const std::string frac = match[3].str();
    mpz_class num(whole + frac, 10);
    mpz_class den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    Rational r(num, den);
    r.canonicalize();
    return match[1].str() == "-" ? Rational(-r) : r;
  }
  throw PreconditionError("not a rational number: '" + text + "'");
}

HermiteVector HermiteVector::unit(int k, int max_degree) {
  if (k < 0 || k > max_degree) throw PreconditionError("Hermite index outside [0, max_degree]");
  HermiteVector v;
  v.max_degree = max_degree;
  v.coeffs.assign(max_degree + 1, Rational(0));
  v.coeffs[k] = 1;
  return v;
}

int HermiteVector::degree() const {
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) {
    if (coeffs[k] != 0) return k;
  }
  return -1;
}

namespace {

// Ring helpers so that one recursion serves numbers and polynomials.
Rational scaled(const Rational& s, const Rational& r) { return s * r; }
RationalPoly scaled(const RationalPoly& s, const Rational& r) {
  return s.map([&](const Rational& c) { return Rational(c * r); });
}
Rational product(const Rational& a, const Rational& b) { return a * b; }
RationalPoly product(const RationalPoly& a, const RationalPoly& b) { return a * b; }

template <class S>
S constant_of(const Rational& r) {
  if constexpr (std::is_same_v<S, Rational>) {
    return r;
  } else {
    return S::constant(r);
  }
}

// y H_k = H_{k+1}/2 + k H_{k-1}, on a coefficient vector of any ring.
template <class S>
std::vector<S> times_y(const std::vector<S>& c, int max_degree) {
  std::vector<S> out(max_degree + 1);
  for (int k = 0; k < static_cast<int>(c.size()); ++k) {
    if (c[k] == S()) continue;
    if (k + 1 > max_degree) {
      throw PreconditionError("Hermite degree overflow: raise max_degree");
    }
    out[k + 1] += scaled(c[k], Rational(1, 2));
    if (k > 0) out[k - 1] += scaled(c[k], Rational(k));
  }
  return out;
}

Rational hermite_norm(int k) {
  mpz_class w = 1;
  for (int i = 1; i <= k; ++i) w *= 2 * i;  // 2^k k!
  return Rational(w);
}

}  // namespace

HermiteVector exact_apply_y(const HermiteVector& v, int p) {
  if (p < 0) throw PreconditionError("power must be nonnegative");
  HermiteVector out = v;
  out.coeffs.resize(v.max_degree + 1);
  for (int i = 0; i < p; ++i) out.coeffs = times_y(out.coeffs, v.max_degree);
  return out;
}

Rational inner(const HermiteVector& u, const HermiteVector& v) {
  Rational acc = 0;
  const std::size_t n = std::min(u.coeffs.size(), v.coeffs.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (u.coeffs[k] == 0 || v.coeffs[k] == 0) continue;
    acc += u.coeffs[k] * v.coeffs[k] * hermite_norm(static_cast<int>(k));
  }
  return acc;
}

Rational exact_moment(int level, int j) {
  if (level < 0 || j < 0) throw PreconditionError("level and moment index must be nonnegative");
  const HermiteVector kernel = HermiteVector::unit(level, level + j);
  const HermiteVector moved = exact_apply_y(kernel, j);
  return inner(moved, kernel) / inner(kernel, kernel);
}

Rational threshold_value(int level, Branch branch) {
  const Rational v(2 * level + 1);
  return branch == Branch::Plus ? Rational(-v) : v;
}

namespace {

template <class S>
std::vector<S>& operator+=(std::vector<S>& a, const std::vector<S>& b) {
  for (std::size_t k = 0; k < b.size(); ++k) a[k] += b[k];
  return a;
}

// The recursion at level K. B0 acts on H_k e^{-y^2/2} as 2(k - K), so its
// deflated inverse is a division; the kernel component of a vector is its
// K-th coefficient (after normalization by the kernel norm).
template <class S>
std::vector<S> run_recursion(int level, const std::vector<S>& a, int order, Branch branch,
                             int order_cap) {
  if (level < 0) throw PreconditionError("level must be nonnegative");
  if (order < 1 || order > order_cap) {
    std::ostringstream os;
    os << "order must lie in [1, " << order_cap << "]";
    throw PreconditionError(os.str());
  }
  // Each beta_j raises the degree by j; phi_n then has degree <= K + n, well
  // inside this bound (checked by times_y).
  const int max_degree = level + order * order;
  const Rational sign = branch == Branch::Plus ? 1 : -1;

  std::vector<std::vector<S>> phi;
  phi.emplace_back(max_degree + 1);
  phi[0][level] = constant_of<S>(Rational(1));
  std::vector<S> lambda(order + 1);

  Rational inv_factorial = 1;
  std::vector<Rational> unit(order + 1);  // sign / j!
  for (int j = 1; j <= order; ++j) {
    inv_factorial /= j;
    unit[j] = sign * inv_factorial;
  }

  for (int n = 1; n <= order; ++n) {
    std::vector<S> beta_sum(max_degree + 1);
    for (int j = 1; j <= n; ++j) {
      std::vector<S> moved = phi[n - j];
      for (int p = 0; p < j; ++p) moved = times_y(moved, max_degree);
      for (auto& c : moved) c = product(a[j - 1], scaled(c, unit[j]));
      beta_sum += moved;
    }
    lambda[n] = beta_sum[level];

    std::vector<S> rhs(max_degree + 1);
    for (int k = 0; k <= max_degree; ++k) rhs[k] = S() - beta_sum[k];
    for (int j = 1; j <= n; ++j) {
      for (int k = 0; k <= max_degree; ++k) rhs[k] += product(lambda[j], phi[n - j][k]);
    }
    if (!(rhs[level] == S())) {
      throw std::logic_error("kernel component of the recursion right side is not exactly zero");
    }
    std::vector<S> next(max_degree + 1);
    for (int k = 0; k <= max_degree; ++k) {
      if (k == level || rhs[k] == S()) continue;
      Rational inverse_eigenvalue(1, 2 * (k - level));
      inverse_eigenvalue.canonicalize();
      next[k] = scaled(rhs[k], inverse_eigenvalue);
    }
    phi.push_back(std::move(next));
  }
  return lambda;
}

}  // namespace

std::vector<Rational> exact_lambda_series(int level, const std::vector<Rational>& taylor, int order,
                                          Branch branch, int order_cap) {
  std::vector<Rational> a(order, Rational(0));
  for (int j = 0; j < order && j < static_cast<int>(taylor.size()); ++j) a[j] = taylor[j];
  return run_recursion<Rational>(level, a, order, branch, order_cap);
}

std::vector<RationalPoly> exact_lambda_polynomials(int level, int order, Branch branch,
                                                   int order_cap) {
  std::vector<RationalPoly> a;
  for (int j = 1; j <= std::max(order, 0); ++j) a.push_back(RationalPoly::variable(j, Rational(1)));
  return run_recursion<RationalPoly>(level, a, order, branch, order_cap);
}

MultiPoly to_double(const RationalPoly& p) {
  return p.map([](const Rational& c) { return c.get_d(); });
}

}  // namespace locsolv::exact
