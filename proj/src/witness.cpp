#include "locsolv/witness.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace locsolv {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Value, first and second derivative of a smooth scalar function by
// fourth-order central differences.
struct Jet {
  double f = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

Jet jet(const std::function<double(double)>& fn, double u) {
  constexpr double h = 1e-3;
  const double fm2 = fn(u - 2 * h), fm1 = fn(u - h), f0 = fn(u), fp1 = fn(u + h), fp2 = fn(u + 2 * h);
  return {f0, (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h),
          (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)};
}

// Derivative matrix D with (sum c_k phi_k)' = sum (Dc)_k phi_k, rows 0..n.
Vector derivative_coefficients(const Vector& c, double scale) {
  const int n = static_cast<int>(c.size());
  Vector d = Vector::Zero(n + 1);
  for (int k = 0; k < n; ++k) {
    if (k > 0) d(k - 1) += std::sqrt(0.5 * k) * c(k);
    d(k + 1) -= std::sqrt(0.5 * (k + 1)) * c(k);
  }
  return d / scale;
}

}  // namespace

UniformGrid UniformGrid::symmetric(double half_width, double step) {
  if (!(half_width > 0.0) || !(step > 0.0)) throw PreconditionError("grid extents must be positive");
  const int half = static_cast<int>(std::ceil(half_width / step));
  return {-half * step, step, 2 * half + 1};
}

double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

double default_eta(double u) {
  if (u <= 0.25 || u >= 4.0) return 0.0;
  if (u < 0.5) return smooth_step((u - 0.25) / 0.25);
  if (u <= 2.0) return 1.0;
  return 1.0 - smooth_step((u - 2.0) / 2.0);
}

double default_cutoff(double u) {
  const double a = std::abs(u);
  if (a <= 2.0) return 1.0;
  if (a >= 4.0) return 0.0;
  return 1.0 - smooth_step((a - 2.0) / 2.0);
}

void WitnessConfig::validate() const {
  if (A < 0) throw PreconditionError("A must be nonnegative");
  if (B < 0) throw PreconditionError("B must be nonnegative");
  if (lambdas.empty()) throw PreconditionError("lambda list is empty");
  for (double l : lambdas) {
    if (!(l >= 1.0)) throw PreconditionError("frequencies must be at least 1");
  }
  if (!(x_step_factor > 0.0 && x_step_factor <= 0.1) || !(t_step_factor > 0.0 && t_step_factor <= 0.1)) {
    throw PreconditionError("grid does not resolve the oscillation scale: step factors must lie in (0, 0.1]");
  }
  if (!(x_extent_factor > cutoff_support) || !(t_extent_factor > cutoff_support)) {
    throw PreconditionError("grid must extend beyond the cutoff support");
  }
  if (!(period_factor >= 2.0)) throw PreconditionError("period factor must be at least 2");
  if (!eta || !cutoff) throw PreconditionError("eta and cutoff must be set");
}

WitnessModel::WitnessModel(const ModelParams& params, int A, const SeriesOptions& options,
                           double tol_lambda)
    : params_(params), A_(A) {
  if (A < 0) throw PreconditionError("A must be nonnegative");
  series_ = lambda_series(params, std::max(A, 1), options);
  for (int n = 1; n <= A; ++n) {
    if (std::abs(series_.lambdas[n]) > tol_lambda) {
      vanishing_ = false;
      std::ostringstream os;
      os << "Lambda_" << n << " = " << series_.lambdas[n]
         << " is not zero: the truncated formal eigenfunction is not an approximate null solution";
      warnings_.push_back(os.str());
    }
  }

  // B_eps Phi_eps = sum_n eps^n r_n. Up to order A the recursion gives
  // r_n = sum_j Lambda_j phi_{n-j}; beyond A only the beta_j phi_{n-j} with
  // n-j <= A remain.
  const int J = params.taylor_order();
  const ModelAssembler assembler(params.m, series_.basis, J);
  const double s = sign_of(params.branch) * (params.m - 1);
  const auto& phi = series_.correctors;
  const int dim = series_.basis.dim;
  remainder_.assign(A + J + 1, Vector::Zero(dim));
  for (int n = 1; n <= A; ++n) {
    for (int j = 1; j <= n; ++j) remainder_[n] += series_.lambdas[j] * phi[n - j];
  }
  for (int n = A + 1; n <= A + J; ++n) {
    for (int j = n - A; j <= std::min(n, J); ++j) {
      const double coeff = s * params.derivative(j) / factorial(j);
      if (coeff != 0.0) remainder_[n] += coeff * assembler.coupling_power(j).apply(phi[n - j]);
    }
  }
}

SynthValue WitnessModel::profile(double tau, double x) const {
  const int m = params_.m;
  const double eps = std::pow(tau, -1.0 / m);
  Vector combined = Vector::Zero(basis().dim);
  double w = 1.0;
  for (int j = 0; j <= A_; ++j, w *= eps) combined += w * series_.correctors[j];
  SynthValue v = synthesize_with_derivative(basis(), combined, x / eps);
  v.derivative /= eps;
  return v;
}

double WitnessModel::profile_residual(double tau, double x) const {
  const int m = params_.m;
  const double eps = std::pow(tau, -1.0 / m);
  Vector combined = Vector::Zero(basis().dim);
  double w = 1.0;
  for (const Vector& r : remainder_) {
    combined += w * r;
    w *= eps;
  }
  return -std::pow(tau, 2.0 / m) * synthesize(basis(), combined, x / eps);
}

std::vector<double> build_profile(const WitnessModel& model, double tau, const UniformGrid& x_grid) {
  if (!(tau > 0.0)) throw PreconditionError("tau must be positive");
  const double scale = std::pow(tau, -1.0 / model.params().m);
  if (x_grid.step > 0.1 * scale) {
    throw PreconditionError("x grid does not resolve the profile scale tau^{-1/m}");
  }
  std::vector<double> out(x_grid.count);
  for (int i = 0; i < x_grid.count; ++i) out[i] = model.profile(tau, x_grid[i]).value;
  return out;
}

LambdaGrids lambda_grids(int m, double lambda, const WitnessConfig& cfg) {
  cfg.validate();
  LambdaGrids g;
  g.x = UniformGrid::symmetric(cfg.x_extent_factor * std::pow(lambda, -0.5 / m),
                               cfg.x_step_factor * std::pow(lambda, -1.0 / m));
  const double t_half = cfg.t_extent_factor / std::sqrt(lambda);
  const double period = cfg.period_factor * 2.0 * t_half;
  g.tau_step = 2.0 * kPi / period;
  g.tau_start = 0.25 * lambda;
  g.tau_count = static_cast<int>(std::ceil(3.75 * lambda / g.tau_step)) + 1;
  const int needed = std::max(g.tau_count, static_cast<int>(std::ceil(period / (cfg.t_step_factor / lambda))));
  g.fft_size = 1;
  while (g.fft_size < needed) g.fft_size *= 2;
  const double dt = period / g.fft_size;
  const int half = static_cast<int>(std::floor(t_half / dt));
  g.t = {-half * dt, dt, 2 * half + 1};
  return g;
}

PacketFields build_packet(const WitnessModel& model, double lambda, const WitnessConfig& cfg) {
  const LambdaGrids grids = lambda_grids(model.params().m, lambda, cfg);
  const int m = model.params().m;
  const int nx = grids.x.count;
  const int ntau = grids.tau_count;
  const BasisSpec& basis = model.basis();
  const int dim = basis.dim;

  // tau-domain samples per x row.
  ComplexGrid w_g = ComplexGrid::Zero(nx, ntau);
  ComplexGrid w_gx = ComplexGrid::Zero(nx, ntau);
  ComplexGrid w_gt = ComplexGrid::Zero(nx, ntau);
  ComplexGrid w_lg = ComplexGrid::Zero(nx, ntau);

  Vector values;
  BasisSpec extended = basis;
  extended.dim = dim + 1;
  for (int n = 0; n < ntau; ++n) {
    const double tau = grids.tau_start + n * grids.tau_step;
    const double weight = cfg.eta(tau / lambda);
    if (weight == 0.0) continue;
    const double eps = std::pow(tau, -1.0 / m);
    Vector phi = Vector::Zero(dim);
    double p = 1.0;
    for (int j = 0; j <= model.A(); ++j, p *= eps) phi += p * model.series().correctors[j];
    Vector rem = Vector::Zero(dim);
    p = 1.0;
    for (const Vector& r : model.remainder()) {
      rem += p * r;
      p *= eps;
    }
    Vector phi_ext = Vector::Zero(dim + 1);
    phi_ext.head(dim) = phi;
    Vector rem_ext = Vector::Zero(dim + 1);
    rem_ext.head(dim) = rem;
    const Vector dphi = derivative_coefficients(phi, basis.scale) / eps;
    const double residual_factor = -std::pow(tau, 2.0 / m);

    for (int i = 0; i < nx; ++i) {
      basis_values(extended, grids.x[i] / eps, values);
      const double f = phi_ext.dot(values);
      const double fx = dphi.dot(values);
      const double af = residual_factor * rem_ext.dot(values);
      w_g(i, n) = weight * f;
      w_gx(i, n) = weight * fx;
      w_gt(i, n) = Complex(0.0, tau) * (weight * f);
      w_lg(i, n) = weight * af;
    }
  }

  PacketFields out;
  out.G = GridFn2D(grids.x, grids.t);
  out.G_x = GridFn2D(grids.x, grids.t);
  out.G_t = GridFn2D(grids.x, grids.t);
  out.LG = GridFn2D(grids.x, grids.t);

  // G(t_k) = dtau * e^{i t_k tau_0} * sum_n e^{2 pi i k n / M} w_n
  Eigen::FFT<double> fft;
  const int M = grids.fft_size;
  const int half = (grids.t.count - 1) / 2;
  std::vector<Complex> in(M), spectrum(M);
  std::vector<Complex> phase(grids.t.count);
  for (int k = 0; k < grids.t.count; ++k) {
    phase[k] = grids.tau_step * static_cast<double>(M) * std::exp(Complex(0.0, grids.t[k] * grids.tau_start));
  }
  const auto transform = [&](const ComplexGrid& w, GridFn2D& target) {
    for (int i = 0; i < nx; ++i) {
      std::fill(in.begin(), in.end(), Complex(0.0));
      for (int n = 0; n < ntau; ++n) in[n] = w(i, n);
      fft.inv(spectrum, in);
      for (int k = -half; k <= half; ++k) {
        const int idx = k >= 0 ? k : M + k;
        target.values(i, k + half) = phase[k + half] * spectrum[idx];
      }
    }
  };
  transform(w_g, out.G);
  transform(w_gx, out.G_x);
  transform(w_gt, out.G_t);
  transform(w_lg, out.LG);
  return out;
}

GridFn2D build_G(const WitnessModel& model, double lambda, const WitnessConfig& cfg) {
  return build_packet(model, lambda, cfg).G;
}

namespace {

// Fourth-order second derivative along one axis; edges use one-sided
// six-point stencils of the same order.
template <class Get>
Complex second_diff(Get&& v, int i, int n, double h) {
  const double s = 12.0 * h * h;
  if (i >= 2 && i <= n - 3) {
    return (-v(i - 2) + 16.0 * v(i - 1) - 30.0 * v(i) + 16.0 * v(i + 1) - v(i + 2)) / s;
  }
  if (i == 0) return (45.0 * v(0) - 154.0 * v(1) + 214.0 * v(2) - 156.0 * v(3) + 61.0 * v(4) - 10.0 * v(5)) / s;
  if (i == 1) return (10.0 * v(0) - 15.0 * v(1) - 4.0 * v(2) + 14.0 * v(3) - 6.0 * v(4) + v(5)) / s;
  if (i == n - 1) {
    return (45.0 * v(n - 1) - 154.0 * v(n - 2) + 214.0 * v(n - 3) - 156.0 * v(n - 4) + 61.0 * v(n - 5) -
            10.0 * v(n - 6)) / s;
  }
  return (10.0 * v(n - 1) - 15.0 * v(n - 2) - 4.0 * v(n - 3) + 14.0 * v(n - 4) - 6.0 * v(n - 5) + v(n - 6)) / s;
}

template <class Get>
Complex first_diff(Get&& v, int i, int n, double h) {
  const double s = 12.0 * h;
  if (i >= 2 && i <= n - 3) return (v(i - 2) - 8.0 * v(i - 1) + 8.0 * v(i + 1) - v(i + 2)) / s;
  if (i == 0) return (-25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4)) / s;
  if (i == 1) return (-3.0 * v(0) - 10.0 * v(1) + 18.0 * v(2) - 6.0 * v(3) + v(4)) / s;
  if (i == n - 1) return -(-25.0 * v(n - 1) + 48.0 * v(n - 2) - 36.0 * v(n - 3) + 16.0 * v(n - 4) - 3.0 * v(n - 5)) / s;
  return -(-3.0 * v(n - 1) - 10.0 * v(n - 2) + 18.0 * v(n - 3) - 6.0 * v(n - 4) + v(n - 5)) / s;
}

void require_support(const GridFn2D& f) {
  const double peak = f.max_abs();
  if (peak == 0.0) return;
  const auto& v = f.values;
  const int nx = static_cast<int>(v.rows());
  const int nt = static_cast<int>(v.cols());
  double edge = 0.0;
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < nt; ++k) {
      if (i < 3 || i >= nx - 3 || k < 3 || k >= nt - 3) edge = std::max(edge, std::abs(v(i, k)));
    }
  }
  if (edge > 1e-10 * peak) {
    throw PreconditionError("function support touches the grid boundary");
  }
}

// Centered fourth-order first derivative along x (axis 0) or t (axis 1),
// with zero extension outside the grid.
ComplexGrid diff_zero_extended(const ComplexGrid& v, int axis, double h) {
  const int nx = static_cast<int>(v.rows());
  const int nt = static_cast<int>(v.cols());
  ComplexGrid out(nx, nt);
  const auto at = [&](int i, int k) -> Complex {
    if (i < 0 || i >= nx || k < 0 || k >= nt) return Complex(0.0);
    return v(i, k);
  };
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < nt; ++k) {
      const int di = axis == 0 ? 1 : 0;
      const int dk = axis == 1 ? 1 : 0;
      out(i, k) = (at(i - 2 * di, k - 2 * dk) - 8.0 * at(i - di, k - dk) + 8.0 * at(i + di, k + dk) -
                   at(i + 2 * di, k + 2 * dk)) / (12.0 * h);
    }
  }
  return out;
}

}  // namespace

GridFn2D apply_L(const GridFn2D& f, int m, const std::vector<double>& a_values, BoundaryPolicy policy) {
  if (m < 2) throw PreconditionError("m must be at least 2");
  const int nx = f.x.count;
  const int nt = f.t.count;
  if (nx < 6 || nt < 6) throw PreconditionError("grid needs at least 6 points per axis");
  if (static_cast<int>(a_values.size()) != nx) throw PreconditionError("a_values must match the x grid");
  if (policy == BoundaryPolicy::RequireSupport) require_support(f);

  GridFn2D out(f.x, f.t);
  for (int i = 0; i < nx; ++i) {
    const double x = f.x[i];
    const double weight_tt = std::pow(x, 2 * (m - 1));
    const Complex weight_t = Complex(0.0, (m - 1) * std::pow(x, m - 2) * a_values[i]);
    const auto row = [&](int k) { return f.values(i, k); };
    for (int k = 0; k < nt; ++k) {
      const auto col = [&](int j) { return f.values(j, k); };
      const Complex fxx = second_diff(col, i, nx, f.x.step);
      const Complex ftt = second_diff(row, k, nt, f.t.step);
      const Complex ft = first_diff(row, k, nt, f.t.step);
      out.values(i, k) = fxx + weight_tt * ftt + weight_t * ft;
    }
  }
  return out;
}

double c_norm(const GridFn2D& f, int B) {
  if (B < 0) throw PreconditionError("B must be nonnegative");
  double best = f.max_abs();
  // d_x^p d_t^q for p + q <= B, built by repeated differentiation.
  std::vector<ComplexGrid> by_x{f.values};
  for (int p = 1; p <= B; ++p) by_x.push_back(diff_zero_extended(by_x.back(), 0, f.x.step));
  for (int p = 0; p <= B; ++p) {
    ComplexGrid cur = by_x[p];
    best = std::max(best, cur.cwiseAbs().maxCoeff());
    for (int q = 1; p + q <= B; ++q) {
      cur = diff_zero_extended(cur, 1, f.t.step);
      best = std::max(best, cur.cwiseAbs().maxCoeff());
    }
  }
  return best;
}

namespace {

double radial_bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double bump_normalization() {
  static const double value = [] {
    const auto integrand = [](double r) { return 2.0 * kPi * r * radial_bump(r * r); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 10, 1e-14);
  }();
  return value;
}

}  // namespace

double test_bump(double x, double t) { return radial_bump(x * x + t * t) / bump_normalization(); }

double test_bump_norm(int B) {
  const double h = 1.0 / 200.0;
  const UniformGrid g = UniformGrid::symmetric(1.05, h);
  GridFn2D bump(g, g);
  for (int i = 0; i < g.count; ++i) {
    for (int k = 0; k < g.count; ++k) bump.values(i, k) = test_bump(g[i], g[k]);
  }
  return c_norm(bump, B);
}

RatioReport solvability_ratio(const WitnessModel& model, double lambda, const WitnessConfig& cfg) {
  cfg.validate();
  if (!cfg.allow_solvable && !model.vanishing_to_order_A()) {
    throw PreconditionError("the coefficients do not vanish to order A; the instance is not "
                            "nonsolvable to that order");
  }
  if (model.A() != cfg.A) throw PreconditionError("model truncation order differs from the configuration");
  const ModelParams& params = model.params();
  const int m = params.m;
  const PacketFields fields = build_packet(model, lambda, cfg);
  const UniformGrid& xg = fields.G.x;
  const UniformGrid& tg = fields.G.t;
  const int nx = xg.count;
  const int nt = tg.count;

  const double x_scale = std::pow(lambda, 0.5 / m);  // cutoff variable u = x_scale * x
  const double t_scale = std::sqrt(lambda);
  std::vector<Jet> zx(nx), zt(nt);
  for (int i = 0; i < nx; ++i) zx[i] = jet(cfg.cutoff, x_scale * xg[i]);
  for (int k = 0; k < nt; ++k) zt[k] = jet(cfg.cutoff, t_scale * tg[k]);

  std::vector<double> a_values(nx);
  for (int i = 0; i < nx; ++i) {
    double a = params.alpha;
    double p = 1.0;
    for (int j = 1; j <= params.taylor_order(); ++j) {
      p *= xg[i] / j;
      a += params.derivative(j) * p;
    }
    a_values[i] = a;
  }

  RatioReport rep;
  rep.lambda = lambda;
  rep.grid_x = nx;
  rep.grid_t = nt;
  GridFn2D g(xg, tg);
  GridFn2D Lg(xg, tg);
  double support_x = 0.0;
  double support_t = 0.0;
  for (int i = 0; i < nx; ++i) {
    const double x = xg[i];
    const double w_tt = std::pow(x, 2 * (m - 1));
    const double w_t = (m - 1) * std::pow(x, m - 2) * a_values[i];
    const double zeta_x = zx[i].f, zeta_x1 = x_scale * zx[i].d1, zeta_x2 = x_scale * x_scale * zx[i].d2;
    for (int k = 0; k < nt; ++k) {
      const double zeta = zeta_x * zt[k].f;
      const double zeta_dx = zeta_x1 * zt[k].f;
      const double zeta_dxx = zeta_x2 * zt[k].f;
      const double zeta_dt = zeta_x * t_scale * zt[k].d1;
      const double zeta_dtt = zeta_x * t_scale * t_scale * zt[k].d2;
      const Complex G = fields.G.values(i, k);
      const Complex Gx = fields.G_x.values(i, k);
      const Complex Gt = fields.G_t.values(i, k);
      g.values(i, k) = zeta * G;
      if (zeta != 0.0 && G != Complex(0.0)) {
        support_x = std::max(support_x, std::abs(x));
        support_t = std::max(support_t, std::abs(tg[k]));
      }
      // L(zeta G) = zeta LG + 2 zeta_x G_x + zeta_xx G
      //           + x^{2(m-1)} (2 zeta_t G_t + zeta_tt G) + i (m-1) x^{m-2} a zeta_t G
      Lg.values(i, k) = zeta * fields.LG.values(i, k) + 2.0 * zeta_dx * Gx + zeta_dxx * G +
                        w_tt * (2.0 * zeta_dt * Gt + zeta_dtt * G) +
                        Complex(0.0, w_t * zeta_dt) * G;
    }
  }

  // z: peak of |G| on |x| <= lambda^{-1/(2m)}, |t| <= lambda^{-1/2}.
  double peak = -1.0;
  for (int i = 0; i < nx; ++i) {
    if (std::abs(xg[i]) > 1.0 / x_scale) continue;
    for (int k = 0; k < nt; ++k) {
      if (std::abs(tg[k]) > 1.0 / t_scale) continue;
      const double v = std::abs(fields.G.values(i, k));
      if (v > peak) {
        peak = v;
        rep.z_x = xg[i];
        rep.z_t = tg[k];
      }
    }
  }
  if (peak < 1.0) {
    std::ostringstream os;
    os << "construction failure: |G(z)| = " << peak << " < 1 at lambda = " << lambda;
    throw ConvergenceError(os.str());
  }
  rep.G_peak = peak;
  // h_lambda has integral lambda^{-8} and support of radius lambda^{-4},
  // far below the grid step, so the pairing is g(z) lambda^{-8} to leading order.
  rep.pairing = peak * std::pow(lambda, -8.0);
  rep.h_norm = std::pow(lambda, 4.0 * cfg.B) * test_bump_norm(cfg.B);
  rep.Lg_norm = c_norm(Lg, cfg.B);
  rep.Lg_sup = Lg.max_abs();
  rep.ratio = rep.pairing / (rep.h_norm * rep.Lg_norm);
  rep.support_x = support_x;
  rep.support_t = support_t;
  rep.predicted_support_x = cfg.cutoff_support / x_scale;
  rep.predicted_support_t = cfg.cutoff_support / t_scale;
  rep.G_l2_squared = fields.G.values.cwiseAbs2().sum() * xg.step * tg.step;
  return rep;
}

}  // namespace locsolv
