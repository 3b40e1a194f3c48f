#include "locsolv/hermite.hpp"

#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/hermite.hpp>
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace locsolv;

namespace {

// Orthonormal Hermite polynomial values without the Gaussian factor.
Vector normalized_polys(int n, double y) {
  Vector p(n);
  p(0) = std::pow(std::numbers::pi, -0.25);
  if (n > 1) p(1) = std::sqrt(2.0) * y * p(0);
  for (int k = 2; k < n; ++k) p(k) = std::sqrt(2.0 / k) * y * p(k - 1) - std::sqrt((k - 1.0) / k) * p(k - 2);
  return p;
}

// Gauss-Hermite nodes from the Jacobi matrix; weights in Christoffel form on
// Hermite functions, w_q = 1 / sum_k h_k(y_q)^2, so no tiny weight ever
// multiplies a huge polynomial value.
struct GaussHermite {
  Vector nodes;
  Vector weights;
  explicit GaussHermite(int n) {
    DenseMatrix jacobi = DenseMatrix::Zero(n, n);
    for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(jacobi, Eigen::EigenvaluesOnly);
    nodes = es.eigenvalues();
    weights.resize(n);
    for (int q = 0; q < n; ++q) {
      const double g = std::exp(-0.5 * nodes(q) * nodes(q));
      weights(q) = 1.0 / (normalized_polys(n, nodes(q)) * g).squaredNorm();
    }
  }
};

// <h_i, y^p h_j> for all i, j < n by quadrature.
DenseMatrix moment_by_quadrature(int n, int p) {
  const GaussHermite gh(n + p + 4);
  DenseMatrix out = DenseMatrix::Zero(n, n);
  for (int q = 0; q < gh.nodes.size(); ++q) {
    const Vector v = normalized_polys(n, gh.nodes(q)) * std::exp(-0.5 * gh.nodes(q) * gh.nodes(q));
    out += gh.weights(q) * std::pow(gh.nodes(q), p) * v * v.transpose();
  }
  return out;
}

}  // namespace

TEST_CASE("BasisSpec validation") {
  CHECK_THROWS_AS((BasisSpec{4, 1.0}.validate()), PreconditionError);
  CHECK_THROWS_AS((BasisSpec{16, 0.0}.validate()), PreconditionError);
  CHECK_NOTHROW((BasisSpec{16, 0.5}.validate()));
  CHECK(BasisSpec{16, 0.5}.doubled() == BasisSpec{32, 0.5});
}

TEST_CASE("position matrices match Gauss-Hermite quadrature") {
  const int n = 20;
  for (int p : {0, 1, 2, 3, 6, 10}) {
    const OpMatrix y = position_matrix({n, 1.0}, p);
    const DenseMatrix ref = moment_by_quadrature(n, p);
    CAPTURE(p);
    CHECK((y.dense() - ref).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("the basis scale enters as scale^p") {
  const OpMatrix a = position_matrix({16, 1.0}, 4);
  const OpMatrix b = position_matrix({16, 0.7}, 4);
  CHECK((b.dense() - std::pow(0.7, 4) * a.dense()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kinetic matrix plus y^2 is the harmonic oscillator") {
  const int n = 24;
  const DenseMatrix h = kinetic_matrix({n, 1.0}).dense() + moment_by_quadrature(n, 2);
  DenseMatrix expected = DenseMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) expected(k, k) = 2 * k + 1;
  CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("synthesis agrees with the closed-form Hermite functions") {
  const BasisSpec basis{16, 1.0};
  for (int k : {0, 1, 5, 12}) {
    Vector c = Vector::Zero(16);
    c(k) = 1.0;
    for (double y : {-3.1, -0.4, 0.0, 1.7, 4.2}) {
      const double norm = std::sqrt(std::pow(2.0, k) * boost::math::factorial<double>(k) * std::sqrt(std::numbers::pi));
      const double expected = boost::math::hermite(k, y) * std::exp(-0.5 * y * y) / norm;
      CAPTURE(k);
      CAPTURE(y);
      CHECK(synthesize(basis, c, y) == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("synthesized derivative matches a difference quotient") {
  const BasisSpec basis{12, 0.8};
  Vector c(12);
  for (int k = 0; k < 12; ++k) c(k) = std::cos(1.3 * k);
  for (double y : {-1.5, 0.2, 2.4}) {
    const double h = 1e-5;
    const double fd = (synthesize(basis, c, y + h) - synthesize(basis, c, y - h)) / (2 * h);
    const SynthValue v = synthesize_with_derivative(basis, c, y);
    CHECK(v.value == doctest::Approx(synthesize(basis, c, y)).epsilon(1e-14));
    CHECK(v.derivative == doctest::Approx(fd).epsilon(1e-7));
  }
}
