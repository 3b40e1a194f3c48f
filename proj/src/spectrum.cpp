#include "locsolv/spectrum.hpp"

#include <boost/math/tools/toms748_solve.hpp>

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

OpMatrix combine(const OpMatrix& base, const std::vector<std::pair<double, const OpMatrix*>>& terms) {
  DenseMatrix acc = base.dense();
  int band = base.bandwidth();
  for (const auto& [weight, term] : terms) {
    if (weight == 0.0) continue;
    acc += weight * term->dense();
    band = (band < 0 || term->bandwidth() < 0) ? -1 : std::max(band, term->bandwidth());
  }
  return OpMatrix(std::move(acc), band);
}

// Lowest eigenvalue may not drop far below the scale set by the threshold term.
void check_bounded_below(const OpMatrix& matrix, const ModelParams& params, double eps) {
  const double floor = -10.0 * std::max(1.0, (params.m - 1) * std::abs(params.alpha));
  const double lowest = eigenvalues(matrix)(0);
  if (lowest < floor) {
    std::ostringstream os;
    os << "truncated potential is unbounded below at eps=" << eps << " (lowest eigenvalue "
       << lowest << " < " << floor << "); use a smaller eps or a longer Taylor expansion";
    throw Error("instability", os.str());
  }
}

}  // namespace

std::string to_string(Branch b) { return b == Branch::Plus ? "+" : "-"; }

Branch parse_branch(const std::string& text) {
  if (text == "+" || text == "plus") return Branch::Plus;
  if (text == "-" || text == "minus") return Branch::Minus;
  throw PreconditionError("branch must be '+' or '-', got '" + text + "'");
}

void ModelParams::validate() const {
  if (m < 2) throw PreconditionError("m must be at least 2");
  if (!std::isfinite(alpha)) throw PreconditionError("alpha must be finite");
  for (double v : taylor) {
    if (!std::isfinite(v)) throw PreconditionError("Taylor coefficients must be finite");
  }
}

ModelAssembler::ModelAssembler(int m, BasisSpec basis, int max_taylor_order)
    : m_(m), basis_(basis) {
  if (m < 2) throw PreconditionError("m must be at least 2");
  if (max_taylor_order < 0) throw PreconditionError("negative Taylor order");
  basis_.validate();
  const int p_max = std::max(kDefaultMaxPower, 2 * (m - 1) + max_taylor_order);
  kinetic_ = kinetic_matrix(basis_);
  principal_ = kinetic_ + position_matrix(basis_, 2 * (m - 1), p_max);
  coupling_.reserve(max_taylor_order + 1);
  for (int j = 0; j <= max_taylor_order; ++j) {
    coupling_.push_back(position_matrix(basis_, m - 2 + j, p_max));
  }
}

const OpMatrix& ModelAssembler::coupling_power(int j) const {
  if (j < 0 || j >= static_cast<int>(coupling_.size())) {
    throw PreconditionError("coupling power outside the precomputed range");
  }
  return coupling_[j];
}

OpMatrix ModelAssembler::unperturbed(Branch branch, double alpha) const {
  return combine(principal_, {{sign_of(branch) * (m_ - 1) * alpha, &coupling_[0]}});
}

OpMatrix ModelAssembler::operator()(const ModelParams& params, double eps) const {
  if (params.m != m_) throw PreconditionError("assembler built for a different m");
  const double s = sign_of(params.branch) * (m_ - 1);
  std::vector<std::pair<double, const OpMatrix*>> terms;
  terms.emplace_back(s * params.alpha, &coupling_[0]);
  if (eps != 0.0) {
    for (int j = 1; j <= params.taylor_order(); ++j) {
      terms.emplace_back(s * params.derivative(j) / factorial(j) * std::pow(eps, j),
                         &coupling_power(j));
    }
  }
  return combine(principal_, terms);
}

OpMatrix assemble(const ModelParams& params, double eps, const BasisSpec& basis) {
  params.validate();
  if (!std::isfinite(eps)) throw PreconditionError("eps must be finite");
  const ModelAssembler assembler(params.m, basis, eps != 0.0 ? params.taylor_order() : 0);
  OpMatrix out = assembler(params, eps);
  if (eps != 0.0 && params.taylor_order() > 0) check_bounded_below(out, params, eps);
  return out;
}

ConvergedSpectrum eigenpairs_converged(const ModelParams& params, double eps, int n_wanted,
                                       double tol, const ConvergenceOptions& options) {
  if (n_wanted < 1) throw PreconditionError("n_wanted must be at least 1");
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  BasisSpec basis{std::max(options.start_dim, 2 * n_wanted), options.scale};
  std::vector<EigenPair> previous = eigh(assemble(params, eps, basis));
  ConvergedSpectrum out;
  while (true) {
    const BasisSpec next = basis.doubled();
    if (next.dim > options.max_dim) {
      std::ostringstream os;
      os.precision(17);
      os << "eigenvalues not converged at basis cap " << options.max_dim << "; last iterates:";
      for (int k = 0; k < n_wanted; ++k) os << ' ' << previous[k].value;
      throw ConvergenceError(os.str());
    }
    std::vector<EigenPair> current = eigh(assemble(params, eps, next));
    ++out.refinements;
    double change = 0.0;
    for (int k = 0; k < n_wanted; ++k) {
      change = std::max(change, std::abs(current[k].value - previous[k].value));
    }
    basis = next;
    if (change < tol) {
      current.resize(n_wanted);
      out.pairs = std::move(current);
      out.basis = basis;
      return out;
    }
    previous = std::move(current);
  }
}

double refine_threshold(const ModelAssembler& assembler, Branch branch, double guess,
                        double bracket_half_width) {
  // Curve index: the eigenvalue of smallest magnitude at the guess.
  const Vector at_guess = eigenvalues(assembler.unperturbed(branch, guess));
  Eigen::Index k = 0;
  at_guess.cwiseAbs().minCoeff(&k);
  const auto curve = [&](double alpha) {
    return eigenvalues(assembler.unperturbed(branch, alpha))(k);
  };

  const double lo = guess - bracket_half_width;
  const double hi = guess + bracket_half_width;
  const double f_lo = curve(lo);
  const double f_hi = curve(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) throw ConvergenceError("threshold refinement lost its bracket");

  std::uintmax_t max_iter = 80;
  const auto [a, b] = boost::math::tools::toms748_solve(
      curve, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(48), max_iter);
  return 0.5 * (a + b);
}

namespace {

struct Bracket {
  double lo;
  double hi;
  int index;
};

// Scan the window at one basis. Returns false on a near-crossing.
bool scan_window(const ModelAssembler& assembler, Branch branch, double lo, double hi,
                 double step, double tol, std::vector<Bracket>& out) {
  const int points = std::max(2, static_cast<int>(std::ceil((hi - lo) / step)) + 1);
  std::vector<double> alphas(points);
  for (int i = 0; i < points; ++i) {
    alphas[i] = (i == points - 1) ? hi : lo + i * (hi - lo) / (points - 1);
  }
  std::vector<Vector> curves;
  curves.reserve(points);
  int tracked = 1;
  for (double a : alphas) {
    curves.push_back(eigenvalues(assembler.unperturbed(branch, a)));
    const Vector& ev = curves.back();
    int negative = 0;
    while (negative < ev.size() && ev(negative) <= 0.0) ++negative;
    tracked = std::max(tracked, negative + 1);
  }
  const int dim = assembler.basis().dim;
  if (tracked > dim / 2) {
    throw ConvergenceError("search window reaches eigenvalues the basis does not resolve; "
                           "narrow the window or enlarge the basis");
  }
  for (const Vector& ev : curves) {
    for (int k = 0; k + 1 < tracked; ++k) {
      if (ev(k + 1) - ev(k) < 10.0 * tol) return false;
    }
  }
  out.clear();
  for (int i = 0; i + 1 < points; ++i) {
    for (int k = 0; k < tracked; ++k) {
      const double a = curves[i](k);
      const double b = curves[i + 1](k);
      // A root exactly on a scan point belongs to the interval on its right.
      if ((a <= 0.0) != (b <= 0.0)) {
        out.push_back({alphas[i], alphas[i + 1], k});
      }
    }
  }
  return true;
}

double bisect_root(const ModelAssembler& assembler, Branch branch, const Bracket& b) {
  double lo = b.lo;
  double hi = b.hi;
  double f_lo = eigenvalues(assembler.unperturbed(branch, lo))(b.index);
  if (f_lo == 0.0) return lo;
  for (int iter = 0; iter < 8; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = eigenvalues(assembler.unperturbed(branch, mid))(b.index);
    if (f == 0.0) return mid;
    if ((f < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
    }
  }
  return refine_threshold(assembler, branch, 0.5 * (lo + hi), 0.5 * (hi - lo) + 1e-12);
}

}  // namespace

SigmaSet sigma_set(int m, Branch branch, double lo, double hi, double tol,
                   const SigmaOptions& options) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw PreconditionError("search window must be a finite interval lo < hi");
  }
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  if (m < 2) throw PreconditionError("m must be at least 2");

  BasisSpec basis{options.convergence.start_dim, options.convergence.scale};
  const ModelAssembler coarse(m, basis);
  std::vector<Bracket> brackets;
  double step = options.step;
  bool clean = false;
  for (int attempt = 0; attempt <= options.max_step_refinements; ++attempt) {
    if (scan_window(coarse, branch, lo, hi, step, tol, brackets)) {
      clean = true;
      break;
    }
    step *= 0.5;
  }
  if (!clean) throw ConvergenceError("eigenvalue curves remain within tolerance after step refinement");

  SigmaSet out;
  out.m = m;
  out.branch = branch;
  out.lo = lo;
  out.hi = hi;
  out.tol = tol;
  out.basis_used = basis;

  for (const Bracket& b : brackets) {
    double root = bisect_root(coarse, branch, b);
    BasisSpec current = basis;
    while (true) {
      const BasisSpec next = current.doubled();
      if (next.dim > options.convergence.max_dim) {
        std::ostringstream os;
        os.precision(17);
        os << "threshold near " << root << " not converged at basis cap";
        throw ConvergenceError(os.str());
      }
      const ModelAssembler fine(m, next);
      const double width = std::max(10.0 * tol, 0.25 * (b.hi - b.lo));
      const double refined = refine_threshold(fine, branch, root, width);
      const bool done = std::abs(refined - root) < tol;
      root = refined;
      current = next;
      if (done) break;
    }
    if (current.dim > out.basis_used.dim) out.basis_used = current;
    if (root < lo || root > hi) continue;
    out.elements.push_back(root);
    out.crossing_index.push_back(b.index);
  }

  std::vector<std::size_t> order(out.elements.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return out.elements[a] < out.elements[b]; });
  SigmaSet sorted = out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.elements[i] = out.elements[order[i]];
    sorted.crossing_index[i] = out.crossing_index[order[i]];
  }
  for (std::size_t i = 1; i < sorted.elements.size(); ++i) {
    if (sorted.elements[i] - sorted.elements[i - 1] <= 10.0 * tol) {
      throw ConvergenceError("two threshold values closer than 10*tol; refine the scan");
    }
  }
  return sorted;
}

SmallEigenConfig SmallEigenConfig::defaults() {
  SmallEigenConfig cfg;
  for (int k = 3; k <= 10; ++k) cfg.eps_grid.push_back(std::ldexp(1.0, -k));
  cfg.fit_order = 3;
  return cfg;
}

namespace {

std::vector<double> sorted_magnitudes(const Vector& values) {
  std::vector<double> mags(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) mags[i] = std::abs(values(i));
  std::sort(mags.begin(), mags.end());
  return mags;
}

}  // namespace

double default_theta(const ModelParams& params, const ConvergenceOptions& options) {
  ModelParams base = params;
  base.taylor.clear();
  const BasisSpec basis{options.start_dim, options.scale};
  const auto mags = sorted_magnitudes(eigenvalues(assemble(base, 0.0, basis)));
  return 0.5 * mags.at(1);
}

double small_eigenvalue(const ModelParams& params, double eps, const SmallEigenConfig& cfg) {
  params.validate();
  ModelParams base = params;
  base.taylor.clear();
  const BasisSpec start{cfg.convergence.start_dim, cfg.convergence.scale};
  const Vector base_values = eigenvalues(assemble(base, 0.0, start));
  const auto mags = sorted_magnitudes(base_values);
  const double half_gap = 0.5 * mags.at(1);
  const double theta = cfg.theta > 0.0 ? cfg.theta : half_gap;
  if (theta > half_gap) {
    std::ostringstream os;
    os << "theta=" << theta << " exceeds half the spectral gap " << half_gap;
    throw PreconditionError(os.str());
  }
  int index = 0;
  for (Eigen::Index i = 1; i < base_values.size(); ++i) {
    if (std::abs(base_values(i)) < std::abs(base_values(index))) index = static_cast<int>(i);
  }
  const double kernel =
      eigenpairs_converged(base, 0.0, index + 1, cfg.convergence_tol, cfg.convergence).pairs[index].value;
  if (std::abs(kernel) > cfg.kernel_tol || mags.at(0) > theta) {
    std::ostringstream os;
    os << "alpha is not a threshold value for this branch: smallest eigenvalue of the unperturbed "
          "operator is " << kernel;
    throw PreconditionError(os.str());
  }

  const ConvergedSpectrum spec =
      eigenpairs_converged(params, eps, index + 2, cfg.convergence_tol, cfg.convergence);
  int count = 0;
  double found = 0.0;
  for (const EigenPair& p : spec.pairs) {
    if (std::abs(p.value) <= theta) {
      ++count;
      found = p.value;
    }
  }
  if (count != 1) {
    std::ostringstream os;
    os << count << " eigenvalues in [-" << theta << ", " << theta << "] at eps=" << eps
       << "; reduce theta or eps";
    throw Error("window", os.str());
  }
  return found;
}

SweepFit sweep_fit(const ModelParams& params, const SmallEigenConfig& cfg) {
  const auto& grid = cfg.eps_grid;
  if (cfg.fit_order < 0) throw PreconditionError("fit order must be nonnegative");
  if (static_cast<int>(grid.size()) < 2 * (cfg.fit_order + 1)) {
    throw PreconditionError("eps grid needs at least 2*(fit_order+1) points");
  }
  for (double e : grid) {
    if (!(e > 0.0)) throw PreconditionError("eps grid entries must be positive");
  }
  const double ratio = grid[1] / grid[0];
  for (std::size_t i = 2; i < grid.size(); ++i) {
    if (std::abs(grid[i] / grid[i - 1] - ratio) > 1e-6 * std::abs(ratio)) {
      throw PreconditionError("eps grid must be geometrically spaced");
    }
  }

  SweepFit out;
  out.eps = grid;
  DenseMatrix design(grid.size(), cfg.fit_order + 1);
  Vector rhs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lam = small_eigenvalue(params, grid[i], cfg);
    out.values.push_back(lam);
    rhs(i) = lam;
    for (int j = 0; j <= cfg.fit_order; ++j) design(i, j) = std::pow(grid[i], j);
  }
  const LeastSquaresResult fit = least_squares(design, rhs);
  out.coefficients.assign(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
  out.residual = fit.residual_norm;
  return out;
}

}  // namespace locsolv
