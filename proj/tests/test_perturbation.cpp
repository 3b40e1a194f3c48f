#include "locsolv/perturbation.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

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

double principal(int m) { return sigma_set(m, Branch::Plus, -4.0, -0.01, 1e-10).elements.back(); }

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST_CASE("Gaussian moments at m=2") {
  const KernelData d = kernel_and_moments(2, -1.0, Branch::Plus, 8);
  const double expected[] = {1.0, 0.0, 0.5, 0.0, 0.75, 0.0, 1.875, 0.0, 6.5625};
  for (int j = 0; j <= 8; ++j) CHECK(d.moments.mu[j] == doctest::Approx(expected[j]).scale(1.0).epsilon(1e-12));
  CHECK(std::abs(d.kernel_value) < 1e-12);
  CHECK(d.moments.at(-1) == 0.0);
  CHECK_THROWS_AS(d.moments.at(9), PreconditionError);
  // 8 mu_4 - 6 mu_2 - 3 mu_0 = 0
  CHECK(std::abs(moment_recurrence_residual(d.moments, 1)) < 1e-12);
}

TEST_CASE("moment recurrence holds at converged kernels") {
  for (int m : {2, 3, 4}) {
    const double alpha = principal(m);
        const KernelData d = kernel_and_moments(m, alpha, Branch::Plus, 2 * m + 9);
    CHECK(d.moments.mu[1] * d.moments.mu[1] <= d.moments.mu[2]);
    for (int j = -2; j <= 10; ++j) {
      CAPTURE(m);
      CAPTURE(j);
      const double scale = std::max(moment_recurrence_scale(d.moments, j), std::abs(d.moments.mu[0]));
      CHECK(std::abs(moment_recurrence_residual(d.moments, j)) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("moments are positive at the negative m=3 element and alternate at the positive one") {
  const double alpha = principal(3);
  CHECK(alpha == doctest::Approx(-1.5).epsilon(1e-9));
  const KernelData neg = kernel_and_moments(3, alpha, Branch::Plus, 15);
  const KernelData pos = kernel_and_moments(3, -alpha, Branch::Plus, 15);
  for (int j = 0; j <= 15; ++j) {
    CHECK(neg.moments.mu[j] > 1e-10);
    CHECK(pos.moments.mu[j] * (j % 2 ? -1.0 : 1.0) > 1e-10);
    CHECK(std::abs(pos.moments.mu[j]) == doctest::Approx(neg.moments.mu[j]).epsilon(1e-8));
  }
}

TEST_CASE("closed-form Lambda_2 at m=2") {
  CHECK(lambda_series(model(2, -1.0, {1.0, 0.0}), 2).lambdas[2] == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(std::abs(lambda_series(model(2, -1.0, {1.0, 1.0}), 2).lambdas[2]) < 1e-10);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    const double a1 = u(rng), a2 = u(rng);
    CHECK(lambda_series(model(2, -1.0, {a1, a2}), 2).lambdas[2] == doctest::Approx((a2 - a1 * a1) / 4).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("constant coefficient: every Lambda_n and corrector vanishes") {
  const PerturbSeries s = lambda_series(model(3, principal(3)), 6);
  for (int n = 1; n <= 6; ++n) {
    CHECK(std::abs(s.lambdas[n]) < 1e-12);
    CHECK(s.correctors[n].norm() < 1e-12);
  }
}

TEST_CASE("recursion residuals are small") {
  const ModelParams p = model(4, principal(4), {0.3, -0.5, 0.2, 0.7});
  const PerturbSeries s = lambda_series(p, 6);
  for (int n = 1; n <= 6; ++n) CHECK(recursion_residual(p, s, n) < 1e-7 * std::max(1.0, s.correctors[n].norm()));
}

TEST_CASE("c_n is the signed moment coefficient") {
  for (Branch b : {Branch::Plus, Branch::Minus}) {
    const double alpha = b == Branch::Plus ? principal(3) : -principal(3);
    const PerturbSeries s = lambda_series(model(3, alpha, {}, b), 5);
    for (int n = 1; n <= 5; ++n) {
      const double expected = sign_of(b) * 2.0 * s.moments[1 + n] / factorial(n);
      CHECK(s.c[n] == doctest::Approx(expected).scale(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("even m: odd-order coefficients vanish in both modes") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int m : {2, 4}) {
    const double alpha = principal(m);
    const PolySeries polys = lambda_polynomials(m, alpha, Branch::Plus, 5);
    for (int n = 1; n <= 5; n += 2) CHECK(polys.lambdas[n].empty());
    for (int trial = 0; trial < 3; ++trial) {
      const ModelParams p = model(m, alpha, {u(rng), u(rng), u(rng), u(rng)});
      const PerturbSeries s = lambda_series(p, 5);
      for (int n = 1; n <= 5; n += 2) CHECK(std::abs(s.lambdas[n]) < 1e-7);
      for (int n = 2; n <= 4; n += 2) {
        CHECK(polys.lambdas[n].evaluate(p.taylor) == doctest::Approx(s.lambdas[n]).scale(1.0).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("polynomial mode: structure and weighted homogeneity") {
  const PolySeries s = lambda_polynomials(2, -1.0, Branch::Plus, 4);
  CHECK(s.lambdas[2].coefficient({0, 1}) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(s.lambdas[2].coefficient({2}) == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(s.lambdas[2].size() == 2);
  for (int m : {2, 3, 4}) {
    const PolySeries ps = lambda_polynomials(m, principal(m), Branch::Plus, 6);
    for (int n = 1; n <= 6; ++n) CHECK(ps.lambdas[n].weighted_homogeneous(n));
    for (int n = 1; n <= 6; ++n) {
      // Lambda_n = c_n a_n - Q_n
      Exponents e(n, 0);
      e[n - 1] = 1;
      CHECK(ps.lambdas[n].coefficient(e) == doctest::Approx(ps.c[n]).scale(1.0).epsilon(1e-10));
      MultiPoly rebuilt = MultiPoly::variable(n, ps.c[n]) - ps.q[n];
      rebuilt -= ps.lambdas[n];
      rebuilt.drop_below(1e-10);
      CHECK(rebuilt.empty());
    }
  }
}

TEST_CASE("odd m: the minus branch at the same alpha flips odd orders") {
  const double alpha = principal(3);
  const std::vector<double> taylor{0.5, 0.25, -0.75, 0.1, 0.3};
  const PerturbSeries plus = lambda_series(model(3, alpha, taylor), 5);
  const PerturbSeries minus = lambda_series(model(3, alpha, taylor, Branch::Minus), 5);
  for (int n = 1; n <= 5; ++n) CHECK(minus.lambdas[n] == doctest::Approx((n % 2 ? -1 : 1) * plus.lambdas[n]).scale(1.0).epsilon(1e-8));
}

TEST_CASE("lambda series demands a threshold value") {
  CHECK_THROWS_AS(lambda_series(model(2, -0.5, {1.0}), 2), PreconditionError);
  CHECK_THROWS_AS(lambda_series(model(2, -1.0, {1.0}), 0), PreconditionError);
}

TEST_CASE("decision table") {
  const Decision off = decide(2, -0.5, {1.0, 2.0}, 4);
  CHECK(off.verdict == Decision::Verdict::NotOnSigmaSolvable);
  CHECK(to_string(off.verdict) == "NotOnSigma_Solvable");

  const Decision witness = decide(2, -1.0, {1.0, 0.0}, 6);
  CHECK(witness.verdict == Decision::Verdict::Solvable);
  CHECK(witness.witness_order == 2);
  CHECK(witness.lambda_value == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(witness.branch == Branch::Plus);

  // a'' = a'^2 satisfies order 2; Lambda_4 = 3/32 then decides.
  const Decision fourth = decide(2, -1.0, {1.0, 1.0}, 4);
  CHECK(fourth.verdict == Decision::Verdict::Solvable);
  CHECK(fourth.witness_order == 4);
  CHECK(fourth.lambda_value == doctest::Approx(3.0 / 32).epsilon(1e-9));

  const Decision flat = decide(2, -1.0, {}, 6);
  CHECK(flat.verdict == Decision::Verdict::NonsolvableToOrder);
  CHECK(flat.order == 6);
  CHECK(flat.exceptions.empty());

  const Decision mirrored = decide(2, 3.0, {}, 4);
  CHECK(mirrored.verdict == Decision::Verdict::NonsolvableToOrder);
  CHECK(mirrored.branch == Branch::Minus);

  const Decision cubic = decide(3, 1.5, {}, 6);
  CHECK(cubic.verdict == Decision::Verdict::NonsolvableToOrder);
  CHECK(cubic.exceptions.empty());

  const Decision odd_witness = decide(3, -1.5, {0.0, 1.0}, 4);
  CHECK(odd_witness.verdict == Decision::Verdict::Solvable);
  CHECK(odd_witness.witness_order == 2);
}

TEST_CASE("even m witnesses only appear at even orders") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 4; ++i) {
    const Decision d = decide(2, -1.0, {u(rng), u(rng), u(rng), u(rng)}, 4);
    REQUIRE(d.witness_order.has_value());
    CHECK(*d.witness_order % 2 == 0);
  }
}

TEST_CASE("forced Taylor values") {
  const ForcedResult r = forced_taylor(2, -1.0, {1.0}, 4);
  REQUIRE(r.entries.size() == 4);
  CHECK(!r.entries[0].forced);
  CHECK(r.entries[1].forced);
  CHECK(r.entries[1].value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(!r.entries[2].forced);
  CHECK(r.entries[3].forced);
  for (const auto& e : r.entries) CHECK(std::abs(e.lambda) < 1e-8);
  CHECK(!r.obstruction_order);

  const ForcedResult zero = forced_taylor(2, -1.0, {0.0}, 2);
  CHECK(std::abs(zero.entries[1].value) < 1e-12);

  // The forced data passes the decision to that order.
  std::vector<double> taylor;
  for (const auto& e : r.entries) taylor.push_back(e.value);
  CHECK(decide(2, -1.0, taylor, 4).verdict == Decision::Verdict::NonsolvableToOrder);
  CHECK_THROWS_AS(forced_taylor(2, -0.5, {}, 2), PreconditionError);
}
