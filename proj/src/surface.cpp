#include "splitkit/surface.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "splitkit/bracket.hpp"
#include "splitkit/parallel.hpp"

namespace splitkit {

namespace {

int step_count(double t, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("flow step must be positive");
  return std::max(1, static_cast<int>(std::ceil(std::abs(t) / step - 1e-12)));
}

[[noreturn]] void chart_exit(const Vec3& x, double time) {
  std::ostringstream msg;
  msg << "trajectory left the chart at t = " << time << " near (" << x[0] << ", " << x[1] << ", " << x[2]
      << ")";
  throw ChartError(msg.str(), time);
}

}  // namespace

Vec3 flow(const VectorField& field, const Vec3& x0, double t, const FlowSpec& spec) {
  const int n = step_count(t, spec.step);
  const double dt = t / n;
  Vec3 x = x0;
  auto eval = [&](const Vec3& p, double time) {
    if (!spec.chart.contains(p)) chart_exit(p, time);
    try {
      return field(p);
    } catch (const ChartError&) {
      chart_exit(p, time);
    }
  };
  for (int i = 0; i < n; ++i) {
    const double t0 = i * dt;
    const Vec3 k1 = eval(x, t0);
    const Vec3 k2 = eval(x + 0.5 * dt * k1, t0 + 0.5 * dt);
    const Vec3 k3 = eval(x + 0.5 * dt * k2, t0 + 0.5 * dt);
    const Vec3 k4 = eval(x + dt * k3, t0 + dt);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!spec.chart.contains(x)) chart_exit(x, t);
  return x;
}

TangentFlow variational_flow(const VectorField& field, const JacobianField& jacobian, const Vec3& x0, double t,
                             const FlowSpec& spec) {
  const int n = step_count(t, spec.step);
  const double dt = t / n;
  TangentFlow s{x0, Mat3::Identity()};
  auto eval = [&](const Vec3& p, double time) {
    if (!spec.chart.contains(p)) chart_exit(p, time);
    try {
      return std::make_pair(field(p), jacobian(p));
    } catch (const ChartError&) {
      chart_exit(p, time);
    }
  };
  for (int i = 0; i < n; ++i) {
    const double t0 = i * dt;
    const auto [v1, a1] = eval(s.x, t0);
    const Mat3 j1 = a1 * s.J;
    const auto [v2, a2] = eval(s.x + 0.5 * dt * v1, t0 + 0.5 * dt);
    const Mat3 j2 = a2 * (s.J + 0.5 * dt * j1);
    const auto [v3, a3] = eval(s.x + 0.5 * dt * v2, t0 + 0.5 * dt);
    const Mat3 j3 = a3 * (s.J + 0.5 * dt * j2);
    const auto [v4, a4] = eval(s.x + dt * v3, t0 + dt);
    const Mat3 j4 = a4 * (s.J + dt * j3);
    s.x += dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
    s.J += dt / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
  }
  return s;
}

Mat3 fd_jacobian(const VectorField& field, const Vec3& x, double h) {
  Mat3 j;
  for (int i = 0; i < 3; ++i) {
    Vec3 p = x, m = x;
    p[i] += h;
    m[i] -= h;
    j.col(i) = (field(p) - field(m)) / (2.0 * h);
  }
  return j;
}

VectorField x_field(const AdaptedFrame& frame) {
  return [frame](const Vec3& p) { return frame.X(p); };
}

VectorField y_field(const AdaptedFrame& frame) {
  return [frame](const Vec3& p) { return frame.Y(p); };
}

JacobianField x_jacobian(const AdaptedFrame& frame, double h) {
  return [frame, h](const Vec3& p) { return fd_jacobian(x_field(frame), p, h); };
}

JacobianField y_jacobian(const AdaptedFrame& frame, double h) {
  return [frame, h](const Vec3& p) { return fd_jacobian(y_field(frame), p, h); };
}

Vec3 SurfacePatch::dt(int i, int j) const { return (at(i + 1, j) - at(i - 1, j)) / (2.0 * spacing()); }
Vec3 SurfacePatch::ds(int i, int j) const { return (at(i, j + 1) - at(i, j - 1)) / (2.0 * spacing()); }
Plane2 SurfacePatch::tangent_plane(int i, int j) const { return Plane2(dt(i, j), ds(i, j)); }

SurfacePatch build_patch(const AdaptedFrame& frame, const Vec3& x0, double eps, int n, const FlowSpec& spec,
                         int k) {
  if (!(eps > 0.0)) throw ValidationError("patch half-width must be positive");
  if (n < 3) throw ValidationError("patch grid needs n >= 3");
  SurfacePatch patch;
  patch.x0 = x0;
  patch.k = k;
  patch.eps = eps;
  patch.n = n;
  patch.points.assign(static_cast<size_t>(n) * n, Vec3::Zero());
  const VectorField X = x_field(frame), Y = y_field(frame);
  try {
    std::vector<Vec3> spine(n);
    for (int j = 0; j < n; ++j) spine[j] = flow(Y, x0, patch.coordinate(j), spec);
    parallel_for(n, [&](int j) {
      for (int i = 0; i < n; ++i) patch.points[i + n * j] = flow(X, spine[j], patch.coordinate(i), spec);
    });
  } catch (const ChartError& e) {
    throw ChartError(std::string(e.what()) + "; shrink eps below " + std::to_string(eps), e.time());
  }
  return patch;
}

double planarity_defect(const SurfacePatch& patch) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : patch.points) mean += p;
  mean /= static_cast<double>(patch.points.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : patch.points) scatter += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  const Vec3 normal = es.eigenvectors().col(0);
  double worst = 0.0;
  for (const auto& p : patch.points) worst = std::max(worst, std::abs(normal.dot(p - mean)));
  return worst;
}

double dt_defect(const SurfacePatch& patch, const AdaptedFrame& frame) {
  double worst = 0.0;
  for (int j = 1; j < patch.n - 1; ++j)
    for (int i = 1; i < patch.n - 1; ++i)
      worst = std::max(worst, (patch.dt(i, j) - frame.X(patch.at(i, j))).norm());
  return worst;
}

double max_tangent_norm(const SurfacePatch& patch) {
  double worst = 0.0;
  for (int j = 1; j < patch.n - 1; ++j)
    for (int i = 1; i < patch.n - 1; ++i)
      worst = std::max({worst, patch.dt(i, j).norm(), patch.ds(i, j).norm()});
  return worst;
}

TangencyReport tangency_defect(const SurfacePatch& patch, const PlaneField& field) {
  TangencyReport r;
  r.node_angles.assign(patch.points.size(), 0.0);
  double sum = 0.0;
  int count = 0;
  for (int j = 1; j < patch.n - 1; ++j) {
    for (int i = 1; i < patch.n - 1; ++i) {
      const double angle = principal_angle(patch.tangent_plane(i, j), field(patch.at(i, j)));
      r.node_angles[i + patch.n * j] = angle;
      r.max_angle = std::max(r.max_angle, angle);
      sum += angle;
      ++count;
    }
  }
  r.mean_angle = count ? sum / count : 0.0;
  return r;
}

std::vector<Vec3> order_mismatch(const AdaptedFrame& frame, const Vec3& x0, double eps, int n,
                                 const FlowSpec& spec) {
  const SurfacePatch w = build_patch(frame, x0, eps, n, spec);
  const VectorField X = x_field(frame), Y = y_field(frame);
  std::vector<Vec3> out(static_cast<size_t>(n) * n);
  std::vector<Vec3> spine(n);
  for (int i = 0; i < n; ++i) spine[i] = flow(X, x0, w.coordinate(i), spec);
  parallel_for(n, [&](int j) {
    for (int i = 0; i < n; ++i) out[i + n * j] = flow(Y, spine[i], w.coordinate(j), spec) - w.at(i, j);
  });
  return out;
}

PushforwardCheck pushforward_norm_check(const AdaptedFrame& frame, const Vec3& x, double t, const FlowSpec& spec,
                                        double h) {
  const VectorField X = x_field(frame);
  const Vec3 p = flow(X, x, -t, spec);
  const TangentFlow tf = variational_flow(X, x_jacobian(frame, h), p, t, spec);

  // Simpson nodes along the backward flow from x
  int n = step_count(t, spec.step);
  if (n % 2) ++n;
  const double ds = t / n;
  auto da3 = [&](const Vec3& q) {
    Vec3 up = q, dn = q;
    up[2] += h;
    dn[2] -= h;
    return (frame.coefficients(up).a - frame.coefficients(dn).a) / (2.0 * h);
  };
  Vec3 q = x;
  double integral = da3(q);
  for (int i = 1; i <= n; ++i) {
    q = flow(X, q, -ds, spec);
    const double w = (i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    integral += w * da3(q);
  }
  integral *= ds / 3.0;

  PushforwardCheck out;
  out.lhs = (tf.J * Vec3::UnitZ()).norm();
  out.rhs = std::exp(integral);
  out.rel_err = std::abs(out.lhs - out.rhs) / std::abs(out.rhs);
  return out;
}

namespace {

Vec3 pushed_y(const AdaptedFrame& frame, const Vec3& x, double t, const FlowSpec& spec, double h, Vec3* base,
              Mat3* jac) {
  const VectorField X = x_field(frame);
  const Vec3 p = flow(X, x, -t, spec);
  const TangentFlow tf = variational_flow(X, x_jacobian(frame, h), p, t, spec);
  if (base) *base = p;
  if (jac) *jac = tf.J;
  return tf.J * frame.Y(p);
}

}  // namespace

PushSample push_difference(const AdaptedFrame& frame, const Vec3& x, double t, const FlowSpec& spec, double h) {
  PushSample s;
  Vec3 p;
  Mat3 j;
  const Vec3 q = pushed_y(frame, x, t, spec, h, &p, &j);
  s.difference = (q - frame.Y(x)).norm();

  const double dt = std::max(std::abs(t) * 1e-2, 1e-4);
  const Vec3 dq = (pushed_y(frame, x, t + dt, spec, h, nullptr, nullptr) -
                   pushed_y(frame, x, t - dt, spec, h, nullptr, nullptr)) /
                  (2.0 * dt);
  const double c = bracket_coefficient(frame, p, 1e-4).c;
  const Vec3 expected = -(j * Vec3::UnitZ()) * c;
  const double scale = expected.norm();
  s.derivative_error = scale > 0.0 ? (dq - expected).norm() / scale : dq.norm();
  return s;
}

std::vector<PushSample> push_convergence(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x,
                                         const std::vector<int>& ks, double t, const FlowSpec& spec, double h) {
  std::vector<PushSample> out(ks.size());
  parallel_for(static_cast<int>(ks.size()), [&](int i) {
    out[i] = push_difference(pullback_frame(phi, initial, ks[i]), x, t, spec, h);
    out[i].k = ks[i];
  });
  return out;
}

}  // namespace splitkit
