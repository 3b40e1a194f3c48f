#pragma once

#include "locsolv/linalg.hpp"

namespace locsolv {

/// Galerkin basis of scaled Hermite functions
///   phi_k(y) = scale^{-1/2} h_k(y / scale),
/// h_k the orthonormal Hermite functions. Orthonormal by construction, so
/// there is no overlap matrix anywhere.
struct BasisSpec {
  int dim = 64;
  double scale = 1.0;

  static constexpr int kMinDim = 8;

  /// Throws PreconditionError when dim < 8 or scale <= 0.
  void validate() const;
  BasisSpec doubled() const { return {2 * dim, scale}; }
  bool operator==(const BasisSpec&) const = default;
};

inline constexpr int kDefaultMaxPower = 24;

/// Matrix of multiplication by y^p. Built as the p-th power of the single-y
/// ladder matrix at dimension dim + p and truncated, so every entry of the
/// returned block is exact (no truncation bias in the last rows).
OpMatrix position_matrix(const BasisSpec& basis, int p, int p_max = kDefaultMaxPower);

/// Matrix of -d^2/dy^2 (pentadiagonal with zero first off-diagonal).
OpMatrix kinetic_matrix(const BasisSpec& basis);

/// Value of sum_k coeffs[k] phi_k(y).
double synthesize(const BasisSpec& basis, const Vector& coeffs, double y);

/// Values of sum_k coeffs[k] phi_k and of its first derivative at y.
struct SynthValue {
  double value = 0.0;
  double derivative = 0.0;
};
SynthValue synthesize_with_derivative(const BasisSpec& basis, const Vector& coeffs, double y);

/// All basis functions phi_0..phi_{dim-1} at y, written to `out`.
void basis_values(const BasisSpec& basis, double y, Vector& out);

}  // namespace locsolv
