#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace locsolv {

/// Base class of every error raised by the library. The `kind()` string is
/// stable and is what the command line front end reports.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error("precondition", what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what) : Error("convergence", what) {}
};

class AmbiguousKernelError : public Error {
 public:
  explicit AmbiguousKernelError(const std::string& what) : Error("ambiguous_kernel", what) {}
};

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Real symmetric matrix. Construction checks exact symmetry and finiteness;
/// the object is immutable afterwards.
class OpMatrix {
 public:
  OpMatrix() = default;

  /// Throws PreconditionError unless `entries` is square, finite and exactly
  /// symmetric.
  explicit OpMatrix(DenseMatrix entries, int bandwidth = -1);

  static OpMatrix identity(int dim);
  static OpMatrix diagonal(const std::vector<double>& values);

  int dim() const noexcept { return static_cast<int>(entries_.rows()); }
  /// Bandwidth hint; -1 when unknown.
  int bandwidth() const noexcept { return bandwidth_; }
  const DenseMatrix& dense() const noexcept { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

  Vector apply(const Vector& v) const { return entries_ * v; }
  double frobenius_norm() const { return entries_.norm(); }
  double trace() const { return entries_.trace(); }

  /// Sum of two symmetric matrices of equal dimension.
  OpMatrix operator+(const OpMatrix& other) const;
  OpMatrix scaled(double factor) const;

 private:
  DenseMatrix entries_;
  int bandwidth_ = -1;
};

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

/// Full eigensystem, values ascending, vectors as orthonormal columns.
struct Eigensystem {
  Vector values;
  DenseMatrix vectors;

  int dim() const noexcept { return static_cast<int>(values.size()); }
  EigenPair pair(int k) const { return {values(k), vectors.col(k)}; }
};

/// Complete eigendecomposition. Graded matrices (tiny entries top-left, huge
/// entries bottom-right, as produced by high powers of the position operator)
/// are reduced in reversed order and in extended precision so that their low
/// eigenvalues keep full accuracy.
Eigensystem eigensystem(const OpMatrix& matrix);

/// Eigenvalues only, ascending.
Vector eigenvalues(const OpMatrix& matrix);

/// Eigenpairs sorted ascending by value.
std::vector<EigenPair> eigh(const OpMatrix& matrix);

/// Pseudo-inverse that annihilates the kernel mode and inverts the matrix on
/// its orthogonal complement. The kernel mode is the eigenvalue of smallest
/// magnitude; its own (small) eigenvalue is dropped from the inverse.
class DeflatedInverse {
 public:
  /// Throws AmbiguousKernelError unless exactly one eigenvalue lies in
  /// [-gap_floor, gap_floor].
  DeflatedInverse(const OpMatrix& matrix, double gap_floor);
  DeflatedInverse(Eigensystem system, double gap_floor);

  const Vector& kernel() const noexcept { return kernel_; }
  double kernel_value() const noexcept { return system_.values(kernel_index_); }
  int kernel_index() const noexcept { return kernel_index_; }
  const Eigensystem& system() const noexcept { return system_; }

  /// Solution orthogonal to the kernel of matrix * x = rhs - <kernel, rhs> kernel.
  Vector apply(const Vector& rhs) const;
  /// Same, with the projection taken against an externally supplied kernel
  /// vector (which must be close to the internal one).
  Vector apply(const Vector& rhs, const Vector& kernel) const;

 private:
  void locate_kernel(double gap_floor);

  Eigensystem system_;
  int kernel_index_ = 0;
  Vector kernel_;
  Vector inverse_values_;
};

/// One-shot form of DeflatedInverse::apply with a caller-supplied kernel.
Vector deflated_solve(const OpMatrix& matrix, const Vector& kernel, const Vector& rhs,
                      double gap_floor);

struct LeastSquaresResult {
  Vector coefficients;
  double residual_norm = 0.0;
};

/// Least squares solution of design * c = rhs. Throws PreconditionError when
/// the design matrix is numerically rank deficient.
LeastSquaresResult least_squares(const DenseMatrix& design, const Vector& rhs);

}  // namespace locsolv
