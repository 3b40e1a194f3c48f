#include "locsolv/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace locsolv {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void fix_gauge(Vector& v) {
  const double cutoff = 1e-8 * v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > cutoff) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

// Everything the recursion needs at one basis: the deflated inverse of B0,
// the kernel function, the perturbation matrices and the moments.
class SeriesContext {
 public:
  SeriesContext(int m, double alpha, Branch branch, int order, int j_max, const BasisSpec& basis,
                const SeriesOptions& options)
      : m_(m),
        branch_(branch),
        assembler_(m, basis, order),
        inverse_(build_inverse(assembler_.unperturbed(branch, alpha), options)) {
    psi0_ = inverse_.kernel();
    fix_gauge(psi0_);
    const int p_max = std::max({kDefaultMaxPower, j_max, m - 2 + order});
    const int top = std::max(j_max, m - 2 + order);
    moments_.resize(top + 1);
    for (int j = 0; j <= top; ++j) {
      moments_[j] = psi0_.dot(position_matrix(basis, j, p_max).apply(psi0_));
    }
    for (int j = 1; j <= order; ++j) {
      unit_.push_back(sign_of(branch) * (m - 1) / factorial(j));
      coupled_kernel_.push_back(assembler_.coupling_power(j).apply(psi0_));
    }
  }

  int m() const { return m_; }
  Branch branch() const { return branch_; }
  const BasisSpec& basis() const { return assembler_.basis(); }
  const Vector& psi0() const { return psi0_; }
  double kernel_value() const { return inverse_.kernel_value(); }
  const std::vector<double>& moments() const { return moments_; }

  /// beta_j / a_j = +-(m-1)/j! y^{m-2+j}
  Vector apply_unit_beta(int j, const Vector& v) const {
    return unit_[j - 1] * assembler_.coupling_power(j).apply(v);
  }
  /// <beta_j v, psi0> / a_j
  double unit_beta_against_kernel(int j, const Vector& v) const {
    return unit_[j - 1] * coupled_kernel_[j - 1].dot(v);
  }
  /// c_j = <beta_j psi0, psi0> / a_j
  double c(int j) const { return unit_beta_against_kernel(j, psi0_); }
  Vector solve(const Vector& rhs) const { return inverse_.apply(rhs, psi0_); }

  double c_floor(double rel, int order) const {
    double top = 0.0;
    for (int j = 0; j <= std::min<int>(moments_.size() - 1, m_ - 2 + order); ++j) {
      top = std::max(top, std::abs(moments_[j]));
    }
    return rel * top;
  }

 private:
  static DeflatedInverse build_inverse(const OpMatrix& b0, const SeriesOptions& options) {
    Eigensystem sys = eigensystem(b0);
    std::vector<double> mags(sys.dim());
    for (int k = 0; k < sys.dim(); ++k) mags[k] = std::abs(sys.values(k));
    std::sort(mags.begin(), mags.end());
    if (mags[0] > options.kernel_tol) {
      std::ostringstream os;
      os << "alpha is not a threshold value for this branch: smallest |eigenvalue| " << mags[0]
         << " exceeds " << options.kernel_tol;
      throw PreconditionError(os.str());
    }
    const double gap_floor = 0.5 * mags[1];
    return DeflatedInverse(std::move(sys), gap_floor);
  }

  int m_;
  Branch branch_;
  ModelAssembler assembler_;
  DeflatedInverse inverse_;
  Vector psi0_;
  std::vector<double> moments_;
  std::vector<double> unit_;
  std::vector<Vector> coupled_kernel_;
};

// Numeric recursion advanced one order at a time, so that a_n may be chosen
// after seeing the part of Lambda_n that does not involve it.
class NumericRecursion {
 public:
  explicit NumericRecursion(const SeriesContext& ctx) : ctx_(ctx) {
    phi_.push_back(ctx.psi0());
    lambda_.push_back(0.0);
  }

  int next_order() const { return static_cast<int>(phi_.size()); }

  /// Lambda_n minus its a_n term, for n = next_order().
  double lower_part() const { return lower_part_with(next_order()); }

  void advance(double a_n) {
    const int n = next_order();
    a_.push_back(a_n);
    lambda_.push_back(lower_part_with(n) + a_n * ctx_.c(n));
    Vector rhs = Vector::Zero(ctx_.basis().dim);
    for (int j = 1; j <= n; ++j) {
      const Vector& prev = phi_[n - j];
      if (a_[j - 1] != 0.0) rhs -= a_[j - 1] * ctx_.apply_unit_beta(j, prev);
      rhs += lambda_[j] * prev;
    }
    phi_.push_back(ctx_.solve(rhs));
  }

  const std::vector<double>& lambdas() const { return lambda_; }
  const std::vector<Vector>& correctors() const { return phi_; }

 private:
  double lower_part_with(int n) const {
    double acc = 0.0;
    for (int j = 1; j < n; ++j) {
      if (a_[j - 1] != 0.0) acc += a_[j - 1] * ctx_.unit_beta_against_kernel(j, phi_[n - j]);
    }
    return acc;
  }

  const SeriesContext& ctx_;
  std::vector<double> a_;  // a_j = a^{(j)}(0)
  std::vector<double> lambda_;
  std::vector<Vector> phi_;
};

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

void require_order(int order) {
  if (order < 1) throw PreconditionError("series order must be at least 1");
}

// Evaluates `at_basis` on doubling bases until two consecutive results agree.
// A kernel that is not yet resolved at a small basis (precondition failure)
// only means the basis is too small; at the cap the failure propagates.
template <class R, class RunAt, class Same>
std::pair<R, int> converge_by_doubling(const SeriesOptions& options, RunAt&& at_basis, Same&& same,
                                       const std::string& what) {
  BasisSpec basis{options.start_dim, options.scale};
  std::optional<R> prev;
  int refinements = 0;
  while (true) {
    const bool last = basis.doubled().dim > options.max_dim;
    try {
      R cur = at_basis(basis);
      if (prev && same(*prev, cur)) return {std::move(cur), refinements};
      prev = std::move(cur);
    } catch (const PreconditionError&) {
      if (last) throw;
      prev.reset();
    }
    if (last) {
      std::ostringstream os;
      os << what << " not converged under basis doubling up to dimension " << basis.dim;
      throw ConvergenceError(os.str());
    }
    basis = basis.doubled();
    ++refinements;
  }
}

}  // namespace

double MomentTable::at(int j) const {
  if (j < 0) return 0.0;
  if (j > j_max()) {
    std::ostringstream os;
    os << "moment index " << j << " beyond the table (j_max = " << j_max() << ")";
    throw PreconditionError(os.str());
  }
  return mu[j];
}

KernelData kernel_and_moments(int m, double alpha, Branch branch, int j_max,
                              const SeriesOptions& options) {
  if (j_max < 0) throw PreconditionError("j_max must be nonnegative");
  const auto at_basis = [&](const BasisSpec& basis) {
    const SeriesContext ctx(m, alpha, branch, 0, j_max, basis, options);
    KernelData out;
    out.psi0 = ctx.psi0();
    out.kernel_value = ctx.kernel_value();
    out.moments.m = m;
    out.moments.alpha = alpha;
    out.moments.branch = branch;
    out.moments.mu.assign(ctx.moments().begin(), ctx.moments().begin() + j_max + 1);
    out.moments.basis = basis;
    return out;
  };
  const auto same = [&](const KernelData& a, const KernelData& b) {
    for (int j = 0; j <= j_max; ++j) {
      if (!close(a.moments.mu[j], b.moments.mu[j], options.moment_convergence_tol)) return false;
    }
    return true;
  };
  return converge_by_doubling<KernelData>(options, at_basis, same, "moments").first;
}

namespace {

struct RecurrenceTerms {
  double high;
  double mid;
  double low;
};

RecurrenceTerms recurrence_terms(const MomentTable& t, int j) {
  if (j < -2) throw PreconditionError("recurrence index must be at least -2");
  const int m = t.m;
  const double g = sign_of(t.branch) * (m - 1) * t.alpha;
  return {(2.0 * m + 2.0 * j + 2.0) * t.at(2 * m + j - 1),
          (m + 2.0 * j + 2.0) * g * t.at(m + j - 1),
          0.5 * j * (j + 1.0) * (j + 2.0) * t.at(j - 1)};
}

}  // namespace

double moment_recurrence_residual(const MomentTable& table, int j) {
  const auto r = recurrence_terms(table, j);
  return r.high + r.mid - r.low;
}

double moment_recurrence_scale(const MomentTable& table, int j) {
  const auto r = recurrence_terms(table, j);
  return std::max({std::abs(r.high), std::abs(r.mid), std::abs(r.low)});
}

PerturbSeries lambda_series_at(const ModelParams& params, int order, const BasisSpec& basis,
                               const SeriesOptions& options) {
  params.validate();
  require_order(order);
  const SeriesContext ctx(params.m, params.alpha, params.branch, order, 0, basis, options);
  NumericRecursion rec(ctx);
  for (int n = 1; n <= order; ++n) rec.advance(params.derivative(n));

  PerturbSeries out;
  out.order = order;
  out.m = params.m;
  out.branch = params.branch;
  out.alpha = params.alpha;
  out.lambdas = rec.lambdas();
  out.correctors = rec.correctors();
  out.moments = ctx.moments();
  out.c_floor = ctx.c_floor(options.c_floor_rel, order);
  out.c.assign(order + 1, 0.0);
  for (int n = 1; n <= order; ++n) {
    out.c[n] = ctx.c(n);
    if (std::abs(out.c[n]) > out.c_floor) {
      out.forced[n] = params.derivative(n) - out.lambdas[n] / out.c[n];
    }
  }
  out.basis = basis;
  return out;
}

PerturbSeries lambda_series(const ModelParams& params, int order, const SeriesOptions& options) {
  params.validate();
  require_order(order);
  const auto at_basis = [&](const BasisSpec& basis) {
    return lambda_series_at(params, order, basis, options);
  };
  const auto same = [&](const PerturbSeries& a, const PerturbSeries& b) {
    for (int n = 1; n <= order; ++n) {
      if (!close(a.lambdas[n], b.lambdas[n], options.convergence_tol)) return false;
    }
    return true;
  };
  auto [out, refinements] =
      converge_by_doubling<PerturbSeries>(options, at_basis, same, "perturbation coefficients");
  out.refinements = refinements;
  return out;
}

double recursion_residual(const ModelParams& params, const PerturbSeries& series, int n) {
  if (n < 1 || n > series.order) throw PreconditionError("order outside the series");
  const ModelAssembler assembler(params.m, series.basis, n);
  const OpMatrix b0 = assembler.unperturbed(params.branch, params.alpha);
  const double s = sign_of(params.branch) * (params.m - 1);
  Vector r = b0.apply(series.correctors[n]);
  for (int j = 1; j <= n; ++j) {
    const Vector& prev = series.correctors[n - j];
    r += s * params.derivative(j) / factorial(j) * assembler.coupling_power(j).apply(prev);
    r -= series.lambdas[j] * prev;
  }
  return r.norm();
}

namespace {

using PolyVector = Polynomial<Vector>;

PolySeries polynomials_from_context(const SeriesContext& ctx, double alpha, int order,
                                    const SeriesOptions& options) {
  std::vector<PolyVector> phi;
  phi.push_back(PolyVector::constant(ctx.psi0()));
  std::vector<MultiPoly> lambdas(1);

  for (int n = 1; n <= order; ++n) {
    MultiPoly lam;
    PolyVector rhs;
    for (int j = 1; j <= n; ++j) {
      const PolyVector& prev = phi[n - j];
      const MultiPoly aj = MultiPoly::variable(j, 1.0);
      const MultiPoly against =
          prev.map([&](const Vector& v) { return ctx.unit_beta_against_kernel(j, v); });
      lam += aj * against;
      rhs -= aj * prev.map([&](const Vector& v) { return Vector(ctx.apply_unit_beta(j, v)); });
    }
    lam.drop_below(1e-12);
    lambdas.push_back(lam);
    for (int j = 1; j <= n; ++j) rhs += lambdas[j] * phi[n - j];
    if (rhs.size() > options.max_monomials || lam.size() > options.max_monomials) {
      throw PreconditionError("monomial count exceeds the polynomial-mode safety cap");
    }
    phi.push_back(rhs.map([&](const Vector& v) { return Vector(ctx.solve(v)); }));
  }

  PolySeries out;
  out.order = order;
  out.m = ctx.m();
  out.branch = ctx.branch();
  out.alpha = alpha;
  out.lambdas = lambdas;
  out.c_floor = ctx.c_floor(options.c_floor_rel, order);
  out.c.assign(order + 1, 0.0);
  out.q.resize(order + 1);
  for (int n = 1; n <= order; ++n) {
    Exponents e(n, 0);
    e[n - 1] = 1;
    out.c[n] = lambdas[n].coefficient(e);
    out.q[n] = MultiPoly::variable(n, out.c[n]) - lambdas[n];
    out.q[n].drop_below(1e-12);
    if (std::abs(out.c[n]) > out.c_floor) {
      const double inv = 1.0 / out.c[n];
      out.forced[n] = out.q[n].map([&](double v) { return v * inv; });
    }
  }
  out.basis = ctx.basis();
  return out;
}

bool same_polynomial(const MultiPoly& a, const MultiPoly& b, double tol) {
  for (const auto& [e, c] : a.terms()) {
    if (!close(c, b.coefficient(e), tol)) return false;
  }
  for (const auto& [e, c] : b.terms()) {
    if (!close(c, a.coefficient(e), tol)) return false;
  }
  return true;
}

}  // namespace

PolySeries lambda_polynomials_at(int m, double alpha, Branch branch, int order,
                                 const BasisSpec& basis, const SeriesOptions& options) {
  require_order(order);
  const SeriesContext ctx(m, alpha, branch, order, 0, basis, options);
  return polynomials_from_context(ctx, alpha, order, options);
}

PolySeries lambda_polynomials(int m, double alpha, Branch branch, int order,
                              const SeriesOptions& options) {
  require_order(order);
  const auto at_basis = [&](const BasisSpec& basis) {
    return lambda_polynomials_at(m, alpha, branch, order, basis, options);
  };
  const auto same = [&](const PolySeries& a, const PolySeries& b) {
    for (int n = 1; n <= order; ++n) {
      if (!same_polynomial(a.lambdas[n], b.lambdas[n], options.convergence_tol)) return false;
    }
    return true;
  };
  auto [out, refinements] =
      converge_by_doubling<PolySeries>(options, at_basis, same, "polynomial coefficients");
  out.refinements = refinements;
  return out;
}

std::string to_string(Decision::Verdict v) {
  switch (v) {
    case Decision::Verdict::NotOnSigmaSolvable:
      return "NotOnSigma_Solvable";
    case Decision::Verdict::Solvable:
      return "Solvable";
    case Decision::Verdict::NonsolvableToOrder:
      return "NonsolvableToOrder";
  }
  return "unknown";
}

Branch applicable_branch(int m, double a0) {
  if (m % 2 == 1) return Branch::Plus;
  return a0 > 0.0 ? Branch::Minus : Branch::Plus;
}

namespace {

struct ThresholdMatch {
  std::optional<double> element;
  std::optional<double> distance;
};

ThresholdMatch match_threshold(int m, Branch branch, double a0, const DecideOptions& options) {
  const double r = options.sigma_search_radius;
  SigmaOptions sopt;
  sopt.convergence.start_dim = options.series.start_dim;
  sopt.convergence.scale = options.series.scale;
  const SigmaSet set = sigma_set(m, branch, a0 - r, a0 + r, options.sigma_root_tol, sopt);
  ThresholdMatch out;
  for (double e : set.elements) {
    const double d = std::abs(e - a0);
    if (!out.distance || d < *out.distance) {
      out.distance = d;
      out.element = e;
    }
  }
  return out;
}

}  // namespace

Decision decide(int m, double a0, const std::vector<double>& taylor, int order,
                const DecideOptions& options) {
  require_order(order);
  if (m < 2) throw PreconditionError("m must be at least 2");
  if (!std::isfinite(a0)) throw PreconditionError("a0 must be finite");
  Decision out;
  out.order = order;
  out.tolerances = options;

  const Branch branch = applicable_branch(m, a0);
  const ThresholdMatch match = match_threshold(m, branch, a0, options);
  out.sigma_distance = match.distance;
  if (!match.distance || *match.distance > options.tol_sigma) {
    out.verdict = Decision::Verdict::NotOnSigmaSolvable;
    return out;
  }
  out.branch = branch;
  out.threshold = match.element;

  const ModelParams params{m, branch, *match.element, taylor};
  PerturbSeries series;
  try {
    series = lambda_series(params, order, options.series);
  } catch (const Error& e) {
    throw Error("diagnostic", std::string("a0 lies on the threshold set but the series failed: ") + e.what());
  }
  out.lambdas = series.lambdas;
  out.basis_dim = series.basis.dim;
  out.refinements = series.refinements;
  if (m % 2 == 1) {
    for (int n = 1; n <= order; ++n) {
      if (std::abs(series.c[n]) <= series.c_floor) out.exceptions.push_back(n);
    }
  }
  for (int n = 1; n <= order; ++n) {
    if (std::abs(series.lambdas[n]) > options.tol_lambda) {
      out.verdict = Decision::Verdict::Solvable;
      out.witness_order = n;
      out.lambda_value = series.lambdas[n];
      return out;
    }
  }
  out.verdict = Decision::Verdict::NonsolvableToOrder;
  return out;
}

namespace {

ForcedResult forced_at(int m, double threshold, Branch branch, const std::vector<double>& partial,
                       int order, const BasisSpec& basis, const DecideOptions& options) {
  const SeriesContext ctx(m, threshold, branch, order, 0, basis, options.series);
  const double c_floor = ctx.c_floor(options.series.c_floor_rel, order);
  NumericRecursion rec(ctx);
  ForcedResult out;
  out.branch = branch;
  out.threshold = threshold;
  out.basis = basis;
  for (int n = 1; n <= order; ++n) {
    ForcedEntry entry;
    entry.order = n;
    entry.c = ctx.c(n);
    const double lower = rec.lower_part();
    if (std::abs(entry.c) > c_floor) {
      entry.forced = true;
      entry.value = -lower / entry.c;
    } else {
      entry.value = (n <= static_cast<int>(partial.size())) ? partial[n - 1] : 0.0;
    }
    rec.advance(entry.value);
    entry.lambda = rec.lambdas()[n];
    if (!entry.forced && std::abs(entry.lambda) > options.tol_lambda) {
      entry.obstruction = true;
      if (!out.obstruction_order) out.obstruction_order = n;
    }
    out.entries.push_back(entry);
  }
  return out;
}

}  // namespace

ForcedResult forced_taylor(int m, double a0, const std::vector<double>& partial_taylor, int order,
                           const DecideOptions& options) {
  require_order(order);
  const Branch branch = applicable_branch(m, a0);
  const ThresholdMatch match = match_threshold(m, branch, a0, options);
  if (!match.distance || *match.distance > options.tol_sigma) {
    throw PreconditionError("a0 is not in the threshold set; no derivative values are forced");
  }
  const SeriesOptions& so = options.series;
  const auto at_basis = [&](const BasisSpec& basis) {
    return forced_at(m, *match.element, branch, partial_taylor, order, basis, options);
  };
  const auto same = [&](const ForcedResult& a, const ForcedResult& b) {
    for (int n = 0; n < order; ++n) {
      if (!close(a.entries[n].value, b.entries[n].value, so.convergence_tol) ||
          !close(a.entries[n].lambda, b.entries[n].lambda, so.convergence_tol)) {
        return false;
      }
    }
    return true;
  };
  return converge_by_doubling<ForcedResult>(so, at_basis, same, "forced values").first;
}

}  // namespace locsolv
