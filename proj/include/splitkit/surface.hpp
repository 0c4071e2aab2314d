// Approximate integral surfaces W(t, s) = e^{tX} o e^{sY}(x0) built from
// fixed-step RK4 flows of adapted frames, with tangency and pushforward
// diagnostics.
#pragma once

#include <functional>
#include <vector>

#include "splitkit/frames.hpp"

namespace splitkit {

using VectorField = std::function<Vec3(const Vec3&)>;
using JacobianField = std::function<Mat3(const Vec3&)>;

/// Classical fourth-order Runge-Kutta with ceil(|t| / step) equal steps.
struct FlowSpec {
  double step = 1e-3;
  Chart chart = Chart::unbounded();
};

/// Throws ChartError (with the exit time) when a stage leaves the chart.
Vec3 flow(const VectorField& field, const Vec3& x0, double t, const FlowSpec& spec = {});

struct TangentFlow {
  Vec3 x = Vec3::Zero();
  /// Derivative of the time-t map at x0.
  Mat3 J = Mat3::Identity();
};

/// Flow together with its variational equation J' = DV(x) J.
TangentFlow variational_flow(const VectorField& field, const JacobianField& jacobian, const Vec3& x0, double t,
                             const FlowSpec& spec = {});

/// Central-difference Jacobian of a vector field.
Mat3 fd_jacobian(const VectorField& field, const Vec3& x, double h = 1e-6);

VectorField x_field(const AdaptedFrame& frame);
VectorField y_field(const AdaptedFrame& frame);
/// Jacobians with rows (0, 0, 0), (0, 0, 0), grad a (resp. grad b) by
/// central differences.
JacobianField x_jacobian(const AdaptedFrame& frame, double h = 1e-6);
JacobianField y_jacobian(const AdaptedFrame& frame, double h = 1e-6);

struct SurfacePatch {
  Vec3 x0 = Vec3::Zero();
  int k = 0;
  double eps = 0.05;
  int n = 21;
  /// points[i + n j] = W(t_i, s_j), t_i = s_i = -eps + i * spacing.
  std::vector<Vec3> points;

  double spacing() const { return 2.0 * eps / (n - 1); }
  double coordinate(int i) const { return -eps + i * spacing(); }
  const Vec3& at(int i, int j) const { return points[i + n * j]; }
  /// Central differences at interior nodes.
  Vec3 dt(int i, int j) const;
  Vec3 ds(int i, int j) const;
  Plane2 tangent_plane(int i, int j) const;
};

/// First s along Y, then t along X. Throws ChartError suggesting a smaller
/// eps when a flow leaves the chart.
SurfacePatch build_patch(const AdaptedFrame& frame, const Vec3& x0, double eps, int n, const FlowSpec& spec = {},
                         int k = 0);

/// Largest distance of a node from the least-squares plane of the patch.
double planarity_defect(const SurfacePatch& patch);

/// max |dW/dt - X(W)| over interior nodes.
double dt_defect(const SurfacePatch& patch, const AdaptedFrame& frame);

/// Largest finite-difference tangent vector norm over interior nodes.
double max_tangent_norm(const SurfacePatch& patch);

struct TangencyReport {
  double max_angle = 0.0;
  double mean_angle = 0.0;
  /// Angle per node (0 on boundary nodes), indexed like the patch points.
  std::vector<double> node_angles;
};

TangencyReport tangency_defect(const SurfacePatch& patch, const PlaneField& field);

/// e^{sY} o e^{tX}(x0) - e^{tX} o e^{sY}(x0) on the patch grid.
std::vector<Vec3> order_mismatch(const AdaptedFrame& frame, const Vec3& x0, double eps, int n,
                                 const FlowSpec& spec = {});

struct PushforwardCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
};

/// |(e^{tX})_* d3| at x by the variational equation against
/// exp of the integral of da/dx3 along the backward flow (Simpson).
PushforwardCheck pushforward_norm_check(const AdaptedFrame& frame, const Vec3& x, double t,
                                        const FlowSpec& spec = {}, double h = 1e-5);

struct PushSample {
  int k = 0;
  /// |(e^{tX})_* Y - Y| at x.
  double difference = 0.0;
  /// Relative mismatch between d/dt of the pushforward (central
  /// differences in t) and -(e^{tX})_* [X, Y].
  double derivative_error = 0.0;
};

PushSample push_difference(const AdaptedFrame& frame, const Vec3& x, double t, const FlowSpec& spec = {},
                           double h = 1e-5);

std::vector<PushSample> push_convergence(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x,
                                         const std::vector<int>& ks, double t, const FlowSpec& spec = {},
                                         double h = 1e-5);

}  // namespace splitkit
