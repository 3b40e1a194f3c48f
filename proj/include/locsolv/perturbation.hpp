#pragma once

#include "locsolv/polynomial.hpp"
#include "locsolv/spectrum.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace locsolv {

struct SeriesOptions {
  int start_dim = 64;
  int max_dim = 512;
  double scale = 1.0;
  /// |kernel eigenvalue| allowed for alpha to count as a threshold value.
  double kernel_tol = 1e-6;
  /// Agreement required between consecutive basis doublings.
  double convergence_tol = 1e-9;
  /// Same for moment tables; y^j amplifies roundoff in the tail of psi_0.
  double moment_convergence_tol = 1e-7;
  /// Relative floor for treating c_n as zero: c_floor = c_floor_rel * max |mu_j|.
  double c_floor_rel = 1e-6;
  /// Safety cap on monomials per coefficient in polynomial mode.
  std::size_t max_monomials = 20000;
};

/// Moments mu_j = <y^j psi0, psi0> of the normalized kernel function.
struct MomentTable {
  int m = 2;
  double alpha = 0.0;
  Branch branch = Branch::Plus;
  std::vector<double> mu;  ///< mu[j], j = 0..j_max
  BasisSpec basis;

  int j_max() const noexcept { return static_cast<int>(mu.size()) - 1; }
  /// mu_j, with mu_j = 0 for j < 0; throws beyond j_max.
  double at(int j) const;
};

struct KernelData {
  Vector psi0;  ///< unit norm, gauge: first non-negligible coefficient positive
  double kernel_value = 0.0;
  MomentTable moments;
};

/// Kernel function of the unperturbed operator and its moments up to j_max,
/// converged under basis doubling.
KernelData kernel_and_moments(int m, double alpha, Branch branch, int j_max,
                              const SeriesOptions& options = {});

/// LHS - RHS of the three-term moment identity for the kernel function,
///   (2m+2j+2) mu_{2m+j-1} + (m+2j+2) g mu_{m+j-1} = j(j+1)(j+2)/2 mu_{j-1},
/// where g = +-(m-1) alpha is the coefficient of y^{m-2} in the potential.
double moment_recurrence_residual(const MomentTable& table, int j);
/// Largest magnitude among the three terms of that identity (for relative checks).
double moment_recurrence_scale(const MomentTable& table, int j);

/// Numeric perturbation series of the small eigenvalue.
struct PerturbSeries {
  int order = 0;
  int m = 2;
  Branch branch = Branch::Plus;
  double alpha = 0.0;
  std::vector<double> lambdas;     ///< Lambda_0..Lambda_N, Lambda_0 = 0
  std::vector<Vector> correctors;  ///< phi_0 = psi0, phi_1..phi_N, each orthogonal to psi0
  std::vector<double> c;           ///< c_0..c_N (c_0 unused, 0)
  std::map<int, double> forced;    ///< a^{(n)}(0) making Lambda_n vanish, where |c_n| > c_floor
  double c_floor = 0.0;
  std::vector<double> moments;     ///< mu_0..mu_{m-2+N}
  BasisSpec basis;
  int refinements = 0;
};

/// Runs the recursion for the corrections phi_n and coefficients Lambda_n to
/// order N. Missing Taylor entries are zero.
PerturbSeries lambda_series(const ModelParams& params, int order, const SeriesOptions& options = {});

/// Same recursion at a fixed basis, without convergence control.
PerturbSeries lambda_series_at(const ModelParams& params, int order, const BasisSpec& basis,
                               const SeriesOptions& options = {});

/// Norm of B0 phi_n + sum_{j=1..n} (beta_j - Lambda_j) phi_{n-j} in the basis.
double recursion_residual(const ModelParams& params, const PerturbSeries& series, int n);

/// Lambda_n as polynomials in a_1..a_N.
struct PolySeries {
  int order = 0;
  int m = 2;
  Branch branch = Branch::Plus;
  double alpha = 0.0;
  std::vector<MultiPoly> lambdas;  ///< index 0..N, lambdas[0] = 0
  std::vector<double> c;           ///< coefficient of a_n in Lambda_n
  std::vector<MultiPoly> q;        ///< Q_n = c_n a_n - Lambda_n
  std::map<int, MultiPoly> forced; ///< P_n = Q_n / c_n where |c_n| > c_floor
  double c_floor = 0.0;
  BasisSpec basis;
  int refinements = 0;
};

PolySeries lambda_polynomials(int m, double alpha, Branch branch, int order,
                              const SeriesOptions& options = {});
PolySeries lambda_polynomials_at(int m, double alpha, Branch branch, int order,
                                 const BasisSpec& basis, const SeriesOptions& options = {});

struct DecideOptions {
  double tol_sigma = 1e-6;
  double tol_lambda = 1e-7;
  double sigma_search_radius = 0.25;
  double sigma_root_tol = 1e-10;
  SeriesOptions series;
};

struct Decision {
  enum class Verdict { NotOnSigmaSolvable, Solvable, NonsolvableToOrder };
  Verdict verdict = Verdict::NotOnSigmaSolvable;
  int order = 0;                   ///< N requested
  std::optional<int> witness_order;
  std::optional<Branch> branch;
  std::optional<double> threshold;  ///< the element of the threshold set matched
  double lambda_value = 0.0;
  std::optional<double> sigma_distance;  ///< distance from a0 to the nearest element found
  std::vector<int> exceptions;      ///< orders with c_n numerically zero (odd m)
  std::vector<double> lambdas;      ///< Lambda_0..Lambda_N when computed
  DecideOptions tolerances;
  int basis_dim = 0;
  int refinements = 0;
};

std::string to_string(Decision::Verdict v);

/// Solvability verdict from a(0) and the Taylor data of a at 0.
Decision decide(int m, double a0, const std::vector<double>& taylor, int order,
                const DecideOptions& options = {});

struct ForcedEntry {
  int order = 0;
  double value = 0.0;       ///< a^{(n)}(0) used for this order
  bool forced = false;      ///< true when c_n != 0 and the value was solved for
  bool obstruction = false; ///< c_n == 0 but Lambda_n != 0: a solvability witness
  double lambda = 0.0;      ///< Lambda_n with the value substituted
  double c = 0.0;
};

struct ForcedResult {
  Branch branch = Branch::Plus;
  double threshold = 0.0;
  std::vector<ForcedEntry> entries;
  std::optional<int> obstruction_order;
  BasisSpec basis;
};

/// Taylor data making Lambda_1..Lambda_N vanish: forced values where c_n != 0,
/// `partial_taylor` (or zero) at the free orders.
ForcedResult forced_taylor(int m, double a0, const std::vector<double>& partial_taylor, int order,
                           const DecideOptions& options = {});

/// Branch on which a0 can be a threshold value: for even m the threshold set
/// of + lies in (-inf, 0) and that of - is its mirror image; for odd m both
/// coincide and + is used.
Branch applicable_branch(int m, double a0);

}  // namespace locsolv
