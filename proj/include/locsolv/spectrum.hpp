#pragma once

#include "locsolv/hermite.hpp"
#include "locsolv/linalg.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace locsolv {

/// Sign in front of the first-order term: Plus selects
///   -d^2 + y^{2(m-1)} + (m-1) y^{m-2} a(eps y),
/// Minus the same operator with the last term negated.
enum class Branch { Plus, Minus };

inline int sign_of(Branch b) { return b == Branch::Plus ? 1 : -1; }
inline Branch opposite(Branch b) { return b == Branch::Plus ? Branch::Minus : Branch::Plus; }
std::string to_string(Branch b);
/// Accepts "+", "-", "plus", "minus".
Branch parse_branch(const std::string& text);

/// A problem instance. `taylor[j-1]` holds the derivative value a^{(j)}(0)
/// (not the monomial coefficient a^{(j)}(0)/j!).
struct ModelParams {
  int m = 2;
  Branch branch = Branch::Plus;
  double alpha = 0.0;
  std::vector<double> taylor;

  int taylor_order() const noexcept { return static_cast<int>(taylor.size()); }
  /// a^{(j)}(0) for j >= 1, zero beyond the stored order.
  double derivative(int j) const noexcept {
    return (j >= 1 && j <= taylor_order()) ? taylor[j - 1] : 0.0;
  }
  void validate() const;
};

/// Precomputed matrix pieces for one (m, basis) pair. Assembly for many
/// alpha / eps values only recombines these.
class ModelAssembler {
 public:
  ModelAssembler(int m, BasisSpec basis, int max_taylor_order = 0);

  int m() const noexcept { return m_; }
  const BasisSpec& basis() const noexcept { return basis_; }
  const OpMatrix& kinetic() const noexcept { return kinetic_; }
  /// y^{m-2+j}, j = 0..max_taylor_order.
  const OpMatrix& coupling_power(int j) const;
  /// Principal part -d^2 + y^{2(m-1)}.
  const OpMatrix& principal() const noexcept { return principal_; }

  /// Unperturbed operator at threshold value alpha (eps = 0).
  OpMatrix unperturbed(Branch branch, double alpha) const;
  /// Full operator with a(eps y) replaced by its Taylor truncation.
  OpMatrix operator()(const ModelParams& params, double eps) const;

 private:
  int m_;
  BasisSpec basis_;
  OpMatrix kinetic_;
  OpMatrix principal_;
  std::vector<OpMatrix> coupling_;
};

/// Matrix of the operator at the given eps; eps = 0 yields the unperturbed
/// threshold operator. Throws an "instability" Error when the truncated
/// potential is unbounded below on the resolved region.
OpMatrix assemble(const ModelParams& params, double eps, const BasisSpec& basis);

struct ConvergenceOptions {
  int start_dim = 64;
  int max_dim = 2048;
  double scale = 1.0;
};

struct ConvergedSpectrum {
  std::vector<EigenPair> pairs;  ///< lowest n_wanted pairs at the final basis
  BasisSpec basis;
  int refinements = 0;           ///< number of doublings performed
};

/// Doubles the basis from start_dim until the lowest n_wanted eigenvalues
/// change by less than tol. Throws ConvergenceError at max_dim.
ConvergedSpectrum eigenpairs_converged(const ModelParams& params, double eps, int n_wanted,
                                       double tol, const ConvergenceOptions& options = {});

struct SigmaSet {
  int m = 2;
  Branch branch = Branch::Plus;
  std::vector<double> elements;        ///< ascending
  std::vector<int> crossing_index;     ///< which sorted eigenvalue curve vanishes there
  double lo = 0.0;
  double hi = 0.0;
  double tol = 1e-8;
  BasisSpec basis_used;
};

struct SigmaOptions {
  double step = 0.05;
  int max_step_refinements = 6;
  ConvergenceOptions convergence;
};

/// Threshold values alpha in [lo, hi] at which the unperturbed operator of
/// the branch has a zero eigenvalue.
SigmaSet sigma_set(int m, Branch branch, double lo, double hi, double tol,
                   const SigmaOptions& options = {});

/// Newton/bisection polish of one threshold value near `guess`, returned to
/// near machine precision at the given basis.
double refine_threshold(const ModelAssembler& assembler, Branch branch, double guess,
                        double bracket_half_width);

struct SmallEigenConfig {
  double theta = 0.0;  ///< <= 0 selects the default (half the second smallest |eigenvalue|)
  std::vector<double> eps_grid;
  int fit_order = 3;
  double convergence_tol = 1e-11;
  /// Largest |eigenvalue| of the unperturbed operator accepted as its kernel.
  double kernel_tol = 1e-6;
  ConvergenceOptions convergence;

  /// eps_grid = {2^-3, ..., 2^-10}, fit_order = 3.
  static SmallEigenConfig defaults();
};

/// Half of the second smallest eigenvalue magnitude of the unperturbed operator.
double default_theta(const ModelParams& params, const ConvergenceOptions& options = {});

/// The unique eigenvalue in [-theta, theta] of the eps-operator.
double small_eigenvalue(const ModelParams& params, double eps, const SmallEigenConfig& cfg);

struct SweepFit {
  std::vector<double> coefficients;  ///< fitted Lambda_0..Lambda_fit_order
  double residual = 0.0;
  std::vector<double> eps;
  std::vector<double> values;
};

/// Least-squares fit of the small eigenvalue against 1, eps, ..., eps^fit_order.
/// Orders beyond 3-4 are numerically ill-posed on the default grid.
SweepFit sweep_fit(const ModelParams& params, const SmallEigenConfig& cfg);

}  // namespace locsolv
