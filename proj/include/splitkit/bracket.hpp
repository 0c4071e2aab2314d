// Lie brackets of adapted frames by finite differences, and the bracket
// estimates that compare them with determinant ratios along orbits.
#pragma once

#include <vector>

#include "splitkit/frames.hpp"

namespace splitkit {

/// [X, Y] = c d3 with c = X(b) - Y(a).
struct BracketSample {
  Vec3 x = Vec3::Zero();
  double h = 0.0;
  double c = 0.0;
  /// X(b) = db/dx1 + a db/dx3 and Y(a) = da/dx2 + b da/dx3.
  double xb = 0.0;
  double ya = 0.0;
  /// c at steps h/2 and h/4.
  double c_half = 0.0;
  double c_quarter = 0.0;
  /// Richardson estimate (4/3)|c(h) - c(h/2)| of the error in c.
  double error_estimate = 0.0;
  /// The differences do not shrink like h^2: the field is probably only
  /// Lipschitz here and c is a difference quotient.
  bool weak_derivative = false;
};

/// Centered differences on the stencil x +- h e_i; throws ChartError when
/// the stencil leaves the frame's chart.
BracketSample bracket_coefficient(const AdaptedFrame& frame, const Vec3& x, double h = 1e-4);

/// Bracket coefficient of E^(k), transported exactly from the initial
/// frame: c_k(x) = det(D phi^k_x) c_0(phi^k x) / theta_0(D phi^k_x e3)^2,
/// where theta_0 = dx3 - a_0 dx1 - b_0 dx2 at phi^k x.
double transported_bracket(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x, int k,
                           double h = 1e-4);

enum class PairChoice { Singular, GramSchmidt };

struct ProjectedBracket {
  /// |pi [Z, W]| from finite-difference Jacobians of the orthonormal pair.
  double direct = 0.0;
  /// |c| |pi d3| |det A| with [Z W] = [X Y] A.
  double formula = 0.0;
  double c = 0.0;
  double frame_change_det = 0.0;
  double pi_d3 = 0.0;
  /// |[X, Y]| / |pi [Z, W]|.
  double c1 = 0.0;
  bool isotropic = false;
  Vec3 bracket = Vec3::Zero();
};

/// Projection onto the unit normal of E^(k) (flat metric).
ProjectedBracket projected_bracket_norm(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x, int k,
                                        double h = 1e-4, PairChoice choice = PairChoice::Singular);

struct InvarianceResidual {
  /// |pi D phi^k v - D phi^k pi v| / |D phi^k pi v| for v = [Z, W].
  double residual = 0.0;
  /// Relative error of |D phi^k pi v| = |D phi^k|_F| |pi v|.
  double norm_identity_error = 0.0;
  bool degenerate = false;
};

/// pi is the projection onto F along E of the converged splitting.
InvarianceResidual invariance_identity_residual(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x,
                                                int k, const SplittingOptions& options, double h = 1e-4);

struct BoundRecord {
  int k = 0;
  /// Signed c_k(x) from the transport identity.
  double c = 0.0;
  /// |c_k(x)|.
  double lhs = 0.0;
  /// |c_k(x)| by direct finite differences (NaN beyond fd_k_max).
  double lhs_fd = 0.0;
  /// vol_ratio_k of the converged splitting.
  double rhs = 0.0;
  double quotient = 0.0;
  /// |det D phi^k|_E^(k)| / |det D phi^k|_E|.
  double det_ratio = 0.0;
};

struct BoundCurve {
  Vec3 x = Vec3::Zero();
  std::vector<BoundRecord> records;
  /// Running maximum of the quotient over k.
  std::vector<double> running_max;
  /// Mean log one-step volume ratio along the orbit.
  double mean_step_log_vol = 0.0;
  /// Least-squares slope of log rhs against k.
  double rhs_log_slope = 0.0;
};

struct BoundOptions {
  SplittingOptions splitting;
  double h = 1e-4;
  int fd_k_max = 3;
};

BoundCurve bound_curve(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x, int k_max,
                       const BoundOptions& options = {});

/// Least-squares slope of y against x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace splitkit
