#pragma once

#include "locsolv/perturbation.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace locsolv {

using Complex = std::complex<double>;
using ComplexGrid = Eigen::MatrixXcd;

/// Uniform grid x_0 + i*step, i = 0..count-1.
struct UniformGrid {
  double start = 0.0;
  double step = 1.0;
  int count = 0;

  double operator[](int i) const { return start + i * step; }
  double end() const { return start + (count - 1) * step; }
  /// Symmetric grid covering [-half_width, half_width] with spacing <= step.
  static UniformGrid symmetric(double half_width, double step);
};

/// Complex samples on x_grid x t_grid; rows follow x, columns follow t.
struct GridFn2D {
  UniformGrid x;
  UniformGrid t;
  ComplexGrid values;

  GridFn2D() = default;
  GridFn2D(UniformGrid xg, UniformGrid tg)
      : x(xg), t(tg), values(ComplexGrid::Zero(xg.count, tg.count)) {}
  double max_abs() const { return values.cwiseAbs().maxCoeff(); }
};

/// Smooth cutoffs built from the transition exp(-1/u).
double smooth_step(double u);                     ///< 0 for u <= 0, 1 for u >= 1
double default_eta(double u);                     ///< supported in (1/4, 4), 1 on [1/2, 2]
double default_cutoff(double u);                  ///< even, 1 on [-2, 2], supported in (-4, 4)

struct WitnessConfig {
  int A = 8;                         ///< truncation order of the formal eigenfunction
  std::vector<double> lambdas{128.0, 256.0, 512.0, 1024.0};
  int B = 2;                         ///< derivative order of the C^B norms
  std::function<double(double)> eta = default_eta;
  std::function<double(double)> cutoff = default_cutoff;
  double cutoff_support = 4.0;       ///< cutoff vanishes for |u| >= this
  /// Grid steps relative to the oscillation scales lambda^{-1/m} (x) and 1/lambda (t).
  double x_step_factor = 0.1;
  double t_step_factor = 0.1;
  /// Grid half-widths relative to the cutoff scales lambda^{-1/(2m)} (x) and lambda^{-1/2} (t).
  double x_extent_factor = 4.5;
  double t_extent_factor = 4.5;
  /// tau-quadrature period as a multiple of the t-grid width (controls aliasing).
  double period_factor = 4.0;
  bool allow_solvable = false;       ///< skip the vanishing-coefficient precondition
  double tol_lambda = 1e-7;
  SeriesOptions series;

  /// Throws PreconditionError when a step factor exceeds 0.1 or other fields are invalid.
  void validate() const;
};

/// Formal eigenfunction data shared by all lambdas: the correctors phi_0..phi_A
/// and the coefficient vectors of the remainder B_eps Phi_eps by power of eps.
class WitnessModel {
 public:
  WitnessModel(const ModelParams& params, int A, const SeriesOptions& options = {},
               double tol_lambda = 1e-7);

  const ModelParams& params() const noexcept { return params_; }
  int A() const noexcept { return A_; }
  const PerturbSeries& series() const noexcept { return series_; }
  const BasisSpec& basis() const noexcept { return series_.basis; }
  /// Non-fatal diagnostics (e.g. nonzero Lambda_n for n <= A).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  /// True when every Lambda_n, n <= A, is below tol_lambda.
  bool vanishing_to_order_A() const noexcept { return vanishing_; }

  /// Coefficient vectors r_n of B_eps Phi_eps = sum_n eps^n r_n (exact
  /// algebra of the recursion; index n = 0..A+J).
  const std::vector<Vector>& remainder() const noexcept { return remainder_; }

  /// F_tau(x) = sum_j tau^{-j/m} phi_j(tau^{1/m} x) and its x-derivative.
  SynthValue profile(double tau, double x) const;
  /// (A_tau F_tau)(x) = -tau^{2/m} (B_eps Phi_eps)(tau^{1/m} x).
  double profile_residual(double tau, double x) const;

 private:
  ModelParams params_;
  int A_;
  PerturbSeries series_;
  std::vector<Vector> remainder_;
  std::vector<std::string> warnings_;
  bool vanishing_ = true;
};

/// Samples of F_tau on a grid. Throws PreconditionError if the grid does not
/// resolve the scale tau^{-1/m}.
std::vector<double> build_profile(const WitnessModel& model, double tau, const UniformGrid& x_grid);

/// Grids used at one lambda.
struct LambdaGrids {
  UniformGrid x;
  UniformGrid t;
  double tau_step = 0.0;
  int tau_count = 0;
  double tau_start = 0.0;
  int fft_size = 0;
};
LambdaGrids lambda_grids(int m, double lambda, const WitnessConfig& cfg);

/// G(x,t) = int e^{i t tau} eta(tau/lambda) F_tau(x) dtau and the fields
/// needed to apply the operator to the cut-off version.
struct PacketFields {
  GridFn2D G;
  GridFn2D G_x;
  GridFn2D G_t;
  GridFn2D LG;  ///< tau-quadrature of e^{i t tau} eta (A_tau F_tau)
};
PacketFields build_packet(const WitnessModel& model, double lambda, const WitnessConfig& cfg);

/// The wave packet alone.
GridFn2D build_G(const WitnessModel& model, double lambda, const WitnessConfig& cfg);

enum class BoundaryPolicy {
  RequireSupport,  ///< reject input that does not vanish near the grid edge
  OneSided         ///< use one-sided stencils at the edges
};

/// L f = f_xx + x^{2(m-1)} f_tt + i (m-1) x^{m-2} a(x) f_t by fourth order
/// finite differences; a_values are the samples of a on the x grid.
GridFn2D apply_L(const GridFn2D& f, int m, const std::vector<double>& a_values,
                 BoundaryPolicy policy = BoundaryPolicy::RequireSupport);

/// max over |alpha| <= B of sup |d^alpha f|, by finite differences on the grid.
double c_norm(const GridFn2D& f, int B);

struct RatioReport {
  double lambda = 0.0;
  double ratio = 0.0;               ///< R(lambda)
  double pairing = 0.0;             ///< |int g conj(h_lambda)|
  double h_norm = 0.0;              ///< ||h_lambda||_{C^B}
  double Lg_norm = 0.0;             ///< ||L g_lambda||_{C^B}
  double Lg_sup = 0.0;              ///< sup |L g_lambda|
  double G_peak = 0.0;              ///< |G(z)|
  double z_x = 0.0;
  double z_t = 0.0;
  double support_x = 0.0;           ///< largest |x| with g != 0
  double support_t = 0.0;           ///< largest |t| with g != 0
  double predicted_support_x = 0.0;
  double predicted_support_t = 0.0;
  double G_l2_squared = 0.0;
  int grid_x = 0;
  int grid_t = 0;
};

/// The pairing/norm ratio of the solvability inequality at one lambda.
RatioReport solvability_ratio(const WitnessModel& model, double lambda, const WitnessConfig& cfg);

/// Fixed bump h with integral 1 used for h_lambda(w) = h(lambda^4 (w - z)).
double test_bump(double x, double t);
/// ||h||_{C^B} of the fixed bump (computed once per B).
double test_bump_norm(int B);

}  // namespace locsolv
