#include "locsolv/hermite.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace locsolv {

void BasisSpec::validate() const {
  if (dim < kMinDim) {
    std::ostringstream os;
    os << "basis dimension " << dim << " is below the minimum " << kMinDim;
    throw PreconditionError(os.str());
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw PreconditionError("basis scale must be positive and finite");
  }
}

OpMatrix position_matrix(const BasisSpec& basis, int p, int p_max) {
  basis.validate();
  if (p < 0 || p > p_max) {
    std::ostringstream os;
    os << "position power " << p << " outside [0, " << p_max << "]";
    throw PreconditionError(os.str());
  }
  const int n = basis.dim;
  if (p == 0) return OpMatrix::identity(n);

  const int padded = n + p;
  // ladder[k] = <phi_k | y | phi_{k+1}>
  std::vector<double> ladder(padded - 1);
  for (int k = 0; k + 1 < padded; ++k) ladder[k] = basis.scale * std::sqrt(0.5 * (k + 1));

  DenseMatrix power = DenseMatrix::Identity(padded, padded);
  DenseMatrix next = DenseMatrix::Zero(padded, padded);
  for (int step = 1; step <= p; ++step) {
    next.setZero();
    for (int i = 0; i < padded; ++i) {
      const int lo = std::max(0, i - step);
      const int hi = std::min(padded - 1, i + step);
      for (int j = lo; j <= hi; ++j) {
        double acc = 0.0;
        if (j >= 1) acc += power(i, j - 1) * ladder[j - 1];
        if (j + 1 < padded) acc += power(i, j + 1) * ladder[j];
        next(i, j) = acc;
      }
    }
    power.swap(next);
  }

  DenseMatrix out = DenseMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = std::max(0, j - p); i <= j; ++i) {
      out(i, j) = power(i, j);
      out(j, i) = power(i, j);
    }
  }
  return OpMatrix(std::move(out), p);
}

OpMatrix kinetic_matrix(const BasisSpec& basis) {
  basis.validate();
  const int n = basis.dim;
  const double inv = 1.0 / (2.0 * basis.scale * basis.scale);
  DenseMatrix out = DenseMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    out(k, k) = (2.0 * k + 1.0) * inv;
    if (k + 2 < n) {
      const double off = -std::sqrt((k + 1.0) * (k + 2.0)) * inv;
      out(k, k + 2) = off;
      out(k + 2, k) = off;
    }
  }
  return OpMatrix(std::move(out), 2);
}

void basis_values(const BasisSpec& basis, double y, Vector& out) {
  const int n = basis.dim;
  out.resize(n);
  const double u = y / basis.scale;
  const double norm = 1.0 / std::sqrt(basis.scale);
  double prev = 0.0;
  double cur = norm * std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * u * u);
  for (int k = 0; k < n; ++k) {
    out(k) = cur;
    const double nxt = std::sqrt(2.0 / (k + 1)) * u * cur - std::sqrt(double(k) / (k + 1)) * prev;
    prev = cur;
    cur = nxt;
  }
}

double synthesize(const BasisSpec& basis, const Vector& coeffs, double y) {
  Vector values;
  BasisSpec b = basis;
  b.dim = static_cast<int>(coeffs.size());
  basis_values(b, y, values);
  return values.dot(coeffs);
}

SynthValue synthesize_with_derivative(const BasisSpec& basis, const Vector& coeffs, double y) {
  const int n = static_cast<int>(coeffs.size());
  Vector values;
  BasisSpec b = basis;
  b.dim = n + 1;
  basis_values(b, y, values);
  // h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}
  SynthValue out;
  for (int k = 0; k < n; ++k) {
    out.value += coeffs(k) * values(k);
    double d = -std::sqrt(0.5 * (k + 1)) * values(k + 1);
    if (k > 0) d += std::sqrt(0.5 * k) * values(k - 1);
    out.derivative += coeffs(k) * d;
  }
  out.derivative /= basis.scale;
  return out;
}

}  // namespace locsolv
