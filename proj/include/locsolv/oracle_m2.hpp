#pragma once

#include "locsolv/polynomial.hpp"
#include "locsolv/spectrum.hpp"

#include <gmpxx.h>

#include <string>
#include <vector>

namespace locsolv::exact {

/// Arbitrary precision rational, always in canonical form.
using Rational = mpq_class;
using RationalPoly = Polynomial<Rational>;

/// "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational& r);
/// Parses "p/q", an integer, or a finite decimal such as "-0.25".
Rational parse_rational(const std::string& text);

/// f = sum_k coeffs[k] H_k(y) exp(-y^2/2) with H_k the physicists' Hermite
/// polynomials. <H_j, H_k> = delta_jk 2^k k! (the common factor sqrt(pi)
/// cancels in every normalized quantity computed here).
struct HermiteVector {
  std::vector<Rational> coeffs;
  int max_degree = 64;

  static HermiteVector unit(int k, int max_degree);
  int degree() const;  ///< -1 for the zero vector
};

/// Coefficients of y^p f. Throws PreconditionError when the degree would
/// exceed max_degree.
HermiteVector exact_apply_y(const HermiteVector& v, int p = 1);

/// Weighted inner product sum_k c_k d_k 2^k k!.
Rational inner(const HermiteVector& u, const HermiteVector& v);

/// mu_j = <y^j H_K, H_K> / <H_K, H_K> for the level-K kernel function.
Rational exact_moment(int level, int j);

inline constexpr int kDefaultOrderCap = 8;

/// Lambda_1..Lambda_N (index 0 holds Lambda_0 = 0) for m = 2 at the threshold
/// value alpha = -(2K+1) of the + branch, or +(2K+1) of the - branch.
/// `taylor[j-1]` holds a^{(j)}(0).
std::vector<Rational> exact_lambda_series(int level, const std::vector<Rational>& taylor, int order,
                                          Branch branch = Branch::Plus,
                                          int order_cap = kDefaultOrderCap);

/// The same coefficients as exact polynomials in a_1..a_N.
std::vector<RationalPoly> exact_lambda_polynomials(int level, int order,
                                                   Branch branch = Branch::Plus,
                                                   int order_cap = kDefaultOrderCap);

/// Threshold value of the given level and branch: -(2K+1) for +, 2K+1 for -.
Rational threshold_value(int level, Branch branch);

/// Float copy of an exact polynomial.
MultiPoly to_double(const RationalPoly& p);

}  // namespace locsolv::exact
