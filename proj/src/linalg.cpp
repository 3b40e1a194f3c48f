#include "locsolv/linalg.hpp"

#include <cmath>
#include <sstream>

namespace locsolv {

namespace {

using ExtMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

void require_finite(const DenseMatrix& m) {
  if (!m.allFinite()) {
    throw PreconditionError("matrix has a non-finite entry");
  }
}

template <class Solver>
void require_converged(const Solver& solver, int dim) {
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "symmetric eigensolver did not converge for a matrix of dimension " << dim;
    throw ConvergenceError(os.str());
  }
}

// The Galerkin matrices are graded: tiny entries top-left, entries of size
// N^{m-1} bottom-right. Householder reduction keeps the small eigenvalues
// accurate only when the large entries come first, so the basis order is
// reversed before solving (and the vectors are mapped back afterwards).
ExtMatrix reversed_extended(const OpMatrix& matrix) {
  return matrix.dense().reverse().cast<long double>();
}

}  // namespace

OpMatrix::OpMatrix(DenseMatrix entries, int bandwidth)
    : entries_(std::move(entries)), bandwidth_(bandwidth) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw PreconditionError("operator matrix must be square and non-empty");
  }
  require_finite(entries_);
  const auto n = entries_.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      if (entries_(i, j) != entries_(j, i)) {
        std::ostringstream os;
        os << "matrix is not exactly symmetric at (" << i << "," << j << ")";
        throw PreconditionError(os.str());
      }
    }
  }
}

OpMatrix OpMatrix::identity(int dim) { return OpMatrix(DenseMatrix::Identity(dim, dim), 0); }

OpMatrix OpMatrix::diagonal(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  DenseMatrix m = DenseMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = values[i];
  return OpMatrix(std::move(m), 0);
}

OpMatrix OpMatrix::operator+(const OpMatrix& other) const {
  if (other.dim() != dim()) throw PreconditionError("dimension mismatch in matrix sum");
  const int band = (bandwidth_ < 0 || other.bandwidth_ < 0) ? -1 : std::max(bandwidth_, other.bandwidth_);
  return OpMatrix(entries_ + other.entries_, band);
}

OpMatrix OpMatrix::scaled(double factor) const { return OpMatrix(entries_ * factor, bandwidth_); }

Eigensystem eigensystem(const OpMatrix& matrix) {
  Eigen::SelfAdjointEigenSolver<ExtMatrix> solver(reversed_extended(matrix),
                                                  Eigen::ComputeEigenvectors);
  require_converged(solver, matrix.dim());
  return {solver.eigenvalues().cast<double>(),
          solver.eigenvectors().colwise().reverse().cast<double>()};
}

Vector eigenvalues(const OpMatrix& matrix) {
  Eigen::SelfAdjointEigenSolver<ExtMatrix> solver(reversed_extended(matrix),
                                                  Eigen::EigenvaluesOnly);
  require_converged(solver, matrix.dim());
  return solver.eigenvalues().cast<double>();
}

std::vector<EigenPair> eigh(const OpMatrix& matrix) {
  const Eigensystem sys = eigensystem(matrix);
  std::vector<EigenPair> out;
  out.reserve(sys.dim());
  for (int k = 0; k < sys.dim(); ++k) out.push_back(sys.pair(k));
  return out;
}

DeflatedInverse::DeflatedInverse(const OpMatrix& matrix, double gap_floor)
    : system_(eigensystem(matrix)) {
  locate_kernel(gap_floor);
}

DeflatedInverse::DeflatedInverse(Eigensystem system, double gap_floor)
    : system_(std::move(system)) {
  locate_kernel(gap_floor);
}

void DeflatedInverse::locate_kernel(double gap_floor) {
  if (!(gap_floor > 0.0)) throw PreconditionError("gap_floor must be positive");
  const int n = system_.dim();
  int inside = 0;
  kernel_index_ = 0;
  for (int k = 0; k < n; ++k) {
    const double v = std::abs(system_.values(k));
    if (v <= gap_floor) ++inside;
    if (v < std::abs(system_.values(kernel_index_))) kernel_index_ = k;
  }
  if (inside != 1) {
    std::ostringstream os;
    os << inside << " eigenvalues inside [-" << gap_floor << ", " << gap_floor
       << "]; expected exactly one (basis too small, or the coefficient is not a threshold value)";
    throw AmbiguousKernelError(os.str());
  }
  kernel_ = system_.vectors.col(kernel_index_);
  inverse_values_.resize(n);
  for (int k = 0; k < n; ++k) {
    inverse_values_(k) = (k == kernel_index_) ? 0.0 : 1.0 / system_.values(k);
  }
}

Vector DeflatedInverse::apply(const Vector& rhs) const { return apply(rhs, kernel_); }

Vector DeflatedInverse::apply(const Vector& rhs, const Vector& kernel) const {
  if (rhs.size() != system_.dim() || kernel.size() != system_.dim()) {
    throw PreconditionError("dimension mismatch in deflated solve");
  }
  const Vector projected = rhs - kernel.dot(rhs) * kernel;
  const Vector coords = system_.vectors.transpose() * projected;
  Vector x = system_.vectors * inverse_values_.cwiseProduct(coords);
  x -= kernel.dot(x) * kernel;
  return x;
}

Vector deflated_solve(const OpMatrix& matrix, const Vector& kernel, const Vector& rhs,
                      double gap_floor) {
  return DeflatedInverse(matrix, gap_floor).apply(rhs, kernel);
}

LeastSquaresResult least_squares(const DenseMatrix& design, const Vector& rhs) {
  if (design.rows() != rhs.size() || design.rows() < design.cols()) {
    throw PreconditionError("least squares needs at least as many rows as unknowns");
  }
  // Column equilibration: monomial designs span many orders of magnitude.
  Vector scale = design.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (!(scale(j) > 0.0)) throw PreconditionError("least squares design has a zero column");
  }
  const DenseMatrix balanced = design * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(balanced);
  qr.setThreshold(1e-12);
  if (qr.rank() < design.cols()) {
    throw PreconditionError("least squares design matrix is rank deficient");
  }
  LeastSquaresResult out;
  out.coefficients = qr.solve(rhs).cwiseQuotient(scale);
  out.residual_norm = (design * out.coefficients - rhs).norm();
  return out;
}

}  // namespace locsolv
