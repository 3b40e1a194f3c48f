#include "locsolv/spectrum.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace locsolv;

namespace {

ModelParams model(int m, double alpha, std::vector<double> taylor = {}, Branch b = Branch::Plus) {
  ModelParams p;
  p.m = m;
  p.alpha = alpha;
  p.branch = b;
  p.taylor = std::move(taylor);
  return p;
}

// Second-order finite differences for -u'' + V u on [-L, L], Dirichlet ends.
Vector fd_lowest(const std::function<double(double)>& potential, double half_width, int points) {
  const double h = 2.0 * half_width / (points + 1);
  Vector diag(points), off(points - 1);
  for (int i = 0; i < points; ++i) diag(i) = 2.0 / (h * h) + potential(-half_width + (i + 1) * h);
  off.setConstant(-1.0 / (h * h));
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es;
  es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

TEST_CASE("branch parsing") {
  CHECK(parse_branch("+") == Branch::Plus);
  CHECK(parse_branch("minus") == Branch::Minus);
  CHECK_THROWS_AS(parse_branch("*"), PreconditionError);
  CHECK(to_string(opposite(Branch::Plus)) == "-");
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(model(1, 0.0).validate(), PreconditionError);
  CHECK_THROWS_AS(model(2, NAN).validate(), PreconditionError);
  CHECK_THROWS_AS(model(2, 0.0, {1.0, INFINITY}).validate(), PreconditionError);
  CHECK(model(2, 0.0, {1.0, 2.0}).derivative(2) == 2.0);
  CHECK(model(2, 0.0, {1.0, 2.0}).derivative(3) == 0.0);
}

TEST_CASE("m=2 assembly is the shifted harmonic oscillator") {
  const DenseMatrix h = assemble(model(2, 0.0), 0.0, {32, 1.0}).dense();
  for (int k = 0; k < 30; ++k) CHECK(h(k, k) == doctest::Approx(2 * k + 1).epsilon(1e-13));
  CHECK((h - DenseMatrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
  const Vector shifted = eigenvalues(assemble(model(2, -1.0), 0.0, {32, 1.0}));
  for (int k = 0; k < 10; ++k) CHECK(shifted(k) == doctest::Approx(2.0 * k).scale(1.0).epsilon(1e-12));
}

TEST_CASE("the alpha = 0 operator is strictly positive") {
  for (int m = 2; m <= 6; ++m) {
    const ConvergedSpectrum s = eigenpairs_converged(model(m, 0.0), 0.0, 1, 1e-9);
    CAPTURE(m);
    CHECK(s.pairs[0].value > 0.0);
  }
}

TEST_CASE("converged eigenpairs: harmonic values, determinism") {
  const ConvergedSpectrum a = eigenpairs_converged(model(2, 0.0), 0.0, 3, 1e-10);
  for (int k = 0; k < 3; ++k) CHECK(a.pairs[k].value == doctest::Approx(2 * k + 1).epsilon(1e-10));
  const ConvergedSpectrum b = eigenpairs_converged(model(2, 0.0), 0.0, 3, 1e-10);
  CHECK(a.pairs[2].value == b.pairs[2].value);
  CHECK(a.basis == b.basis);
}

TEST_CASE("quartic oscillator agrees with finite differences") {
  const ConvergedSpectrum s = eigenpairs_converged(model(3, 0.0), 0.0, 3, 1e-10);
  const Vector fd = fd_lowest([](double y) { return std::pow(y, 4); }, 8.0, 4000);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(s.pairs[k].value - fd(k)) < 1e-4);
  CHECK(s.pairs[0].value == doctest::Approx(1.0603620904).epsilon(1e-9));
}

TEST_CASE("the linear term at m=3 agrees with finite differences") {
  // -u'' + y^4 u + 2 alpha y u with alpha = 0.8
  const ConvergedSpectrum s = eigenpairs_converged(model(3, 0.8), 0.0, 3, 1e-10);
  const Vector fd = fd_lowest([](double y) { return std::pow(y, 4) + 1.6 * y; }, 8.0, 4000);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(s.pairs[k].value - fd(k)) < 1e-4);
}

TEST_CASE("unbounded truncated potentials are reported") {
  try {
    assemble(model(2, -1.0, {0.0, 0.0, -60.0}), 1.0, {64, 1.0});
    FAIL("expected an instability error");
  } catch (const Error& e) {
    CHECK(e.kind() == "instability");
  }
}

TEST_CASE("threshold set for m=2") {
  const SigmaSet s = sigma_set(2, Branch::Plus, -8.0, 0.0, 1e-10);
  REQUIRE(s.elements.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(s.elements[k] == doctest::Approx(-7.0 + 2 * k).epsilon(1e-9));
  CHECK(s.crossing_index == std::vector<int>{3, 2, 1, 0});
  const SigmaSet minus = sigma_set(2, Branch::Minus, 0.0, 8.0, 1e-10);
  REQUIRE(minus.elements.size() == 4);
  CHECK(minus.elements[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("even m threshold sets are negative") {
  for (int m : {2, 4}) {
    const SigmaSet s = sigma_set(m, Branch::Plus, -4.0, 4.0, 1e-10);
    CHECK(!s.elements.empty());
    for (double v : s.elements) CHECK(v < 0.0);
    for (std::size_t i = 1; i < s.elements.size(); ++i) CHECK(s.elements[i] - s.elements[i - 1] > 1e-9);
  }
}

TEST_CASE("odd m threshold sets are symmetric across the two branches") {
  const SigmaSet plus = sigma_set(3, Branch::Plus, -3.0, 3.0, 1e-10);
  const SigmaSet minus = sigma_set(3, Branch::Minus, -3.0, 3.0, 1e-10);
  REQUIRE(plus.elements.size() == minus.elements.size());
  REQUIRE(!plus.elements.empty());
  const std::size_t n = plus.elements.size();
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(plus.elements[i] + minus.elements[n - 1 - i]) < 1e-9);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(plus.elements[i] + plus.elements[n - 1 - i]) < 1e-9);
}

TEST_CASE("threshold values are stable under basis doubling") {
  SigmaOptions small;
  SigmaOptions large;
  large.convergence.start_dim = 256;
  const SigmaSet a = sigma_set(4, Branch::Plus, -2.0, -0.5, 1e-10, small);
  const SigmaSet b = sigma_set(4, Branch::Plus, -2.0, -0.5, 1e-10, large);
  REQUIRE(a.elements.size() == b.elements.size());
  for (std::size_t i = 0; i < a.elements.size(); ++i) CHECK(std::abs(a.elements[i] - b.elements[i]) < 1e-6);
}

TEST_CASE("even m: negating odd Taylor entries leaves the spectrum unchanged") {
  const BasisSpec basis{96, 1.0};
  const Vector a = eigenvalues(assemble(model(4, -1.0, {0.4, -0.3, 0.2}), 0.2, basis));
  const Vector b = eigenvalues(assemble(model(4, -1.0, {-0.4, -0.3, -0.2}), 0.2, basis));
  CHECK((a - b).head(10).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("odd m: B+ at eps equals B- at -eps") {
  const BasisSpec basis{96, 1.0};
  const Vector a = eigenvalues(assemble(model(3, -1.5, {0.4, -0.3}), 0.2, basis));
  const Vector b = eigenvalues(assemble(model(3, -1.5, {0.4, -0.3}, Branch::Minus), -0.2, basis));
  CHECK((a - b).head(10).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("small eigenvalue") {
  const SmallEigenConfig cfg = SmallEigenConfig::defaults();
  CHECK(std::abs(small_eigenvalue(model(2, -1.0), 0.0, cfg)) < 1e-7);
  CHECK(std::abs(small_eigenvalue(model(2, -1.0), 0.1, cfg)) < 1e-8);
  const ModelParams p = model(2, -1.0, {1.0, 0.0});
  double previous = INFINITY;
  for (double eps : {0.1, 0.01, 0.001}) {
    const double v = std::abs(small_eigenvalue(p, eps, cfg));
    CHECK(v < previous);
    previous = v;
  }
  CHECK(previous < 1e-6);
  CHECK_THROWS_AS(small_eigenvalue(model(2, -0.5), 0.0, cfg), PreconditionError);
  SmallEigenConfig wide = cfg;
  wide.theta = 1.5;
  CHECK_THROWS_AS(small_eigenvalue(model(2, -1.0), 0.0, wide), PreconditionError);
}

TEST_CASE("sweep fit") {
  const SmallEigenConfig cfg = SmallEigenConfig::defaults();
  const SweepFit flat = sweep_fit(model(2, -1.0), cfg);
  for (double c : flat.coefficients) CHECK(std::abs(c) < 1e-8);
  const SweepFit fit = sweep_fit(model(2, -1.0, {1.0, 0.0}), cfg);
  CHECK(fit.coefficients[2] == doctest::Approx(-0.25).epsilon(1e-2));
  CHECK(std::abs(fit.coefficients[1]) < 1e-3);
  SmallEigenConfig uneven = cfg;
  uneven.eps_grid = {0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005};
  CHECK_THROWS_AS(sweep_fit(model(2, -1.0), uneven), PreconditionError);
  SmallEigenConfig short_grid = cfg;
  short_grid.eps_grid = {0.1, 0.05, 0.025};
  CHECK_THROWS_AS(sweep_fit(model(2, -1.0), short_grid), PreconditionError);
}
