// Adapted frames X = d1 + a d3, Y = d2 + b d3 of a plane field and the
// orthonormal frames aligned with the singular directions of a cocycle.
#pragma once

#include <functional>
#include <limits>
#include <memory>

#include "splitkit/splitting.hpp"

namespace splitkit {

struct Coefficients {
  double a = 0.0;
  double b = 0.0;
};

using CoefficientFn = std::function<Coefficients(const Vec3&)>;

/// Axis-aligned box of chart coordinates.
struct Chart {
  Vec3 lo = Vec3::Constant(-std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::infinity());

  static Chart unbounded() { return Chart{}; }
  static Chart box(const Vec3& center, double half_width) {
    return Chart{center.array() - half_width, center.array() + half_width};
  }
  bool contains(const Vec3& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
  /// Distance from x to the boundary (negative outside).
  double margin(const Vec3& x) const;
};

/// (a, b) with X = d1 + a d3 and Y = d2 + b d3 spanning E.
/// Throws ValidationError("chart unsuitable ...") when |n3| <= 1e-6.
Coefficients adapted_coefficients(const Plane2& e);
Plane2 plane_from_coefficients(const Coefficients& c);

class AdaptedFrame {
 public:
  explicit AdaptedFrame(CoefficientFn fn, Chart chart = Chart::unbounded())
      : fn_(std::move(fn)), chart_(chart) {}

  static AdaptedFrame constant(double a, double b);
  /// a = 0, b = x1: the plane field ker(dx3 - x1 dx2).
  static AdaptedFrame contact();
  /// a = eps cos(2 pi x3), b = eps sin(2 pi x3); bracket coefficient 2 pi eps^2.
  static AdaptedFrame helical(double eps);
  static AdaptedFrame from_plane_field(PlaneField field, Chart chart = Chart::unbounded());

  /// Throws ChartError outside the chart.
  Coefficients coefficients(const Vec3& x) const;
  Vec3 X(const Vec3& x) const;
  Vec3 Y(const Vec3& x) const;
  Plane2 plane(const Vec3& x) const { return plane_from_coefficients(coefficients(x)); }
  PlaneField plane_field() const;

  const Chart& chart() const { return chart_; }
  AdaptedFrame with_chart(const Chart& chart) const { return AdaptedFrame(fn_, chart); }

 private:
  CoefficientFn fn_;
  Chart chart_;
};

/// Frame of E^(k): the pullback of the initial frame's planes by phi^k.
/// k = 0 returns the initial frame itself.
AdaptedFrame pullback_frame(const Diffeo& phi, const AdaptedFrame& initial, int k,
                            Chart chart = Chart::unbounded());

/// Frame of the converged splitting E.
AdaptedFrame limit_frame(const Diffeo& phi, const SplittingOptions& options,
                         Chart chart = Chart::unbounded());

/// Samples a frame on an n^3 grid over a box once and interpolates
/// trilinearly afterwards.
AdaptedFrame cached_frame(const AdaptedFrame& frame, const Chart& box, int n);

struct OrthonormalPair {
  Vec3 z = Vec3::UnitX();
  Vec3 w = Vec3::UnitY();
  /// |M z| and |M w|.
  double image_norm_z = 1.0;
  double image_norm_w = 1.0;
  /// Singular values tied; the pair is Gram-Schmidt of the stored basis.
  bool isotropic = false;
};

/// Right singular vectors of M restricted to E, z for the larger value.
OrthonormalPair svd_orthonormal_pair(const Mat3& m, const Plane2& e);
OrthonormalPair svd_orthonormal_pair(const Diffeo& phi, const Vec3& x, const Plane2& e, int k);

/// (M z / |M z|, M w / |M w|).
std::pair<Vec3, Vec3> normalized_images(const OrthonormalPair& pair, const Mat3& m);
std::pair<Vec3, Vec3> normalized_images(const OrthonormalPair& pair, const Diffeo& phi, const Vec3& x, int k);

/// Determinant of the 2x2 change of basis between two orthonormal pairs of
/// the same plane.
double frame_change_determinant(const Vec3& z1, const Vec3& w1, const Vec3& z2, const Vec3& w2);

/// D phi^k at x; throws NumericalError when the plain product overflows.
Mat3 cocycle_matrix(const Diffeo& phi, const Vec3& x, int k);

}  // namespace splitkit
