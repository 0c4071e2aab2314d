#include "splitkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace splitkit {

Vec3 wrap_torus(const Vec3& x) {
  Vec3 y;
  for (int i = 0; i < 3; ++i) {
    double v = x[i] - std::floor(x[i]);
    // floor can round x - floor(x) up to exactly 1 for tiny negative x
    y[i] = v >= 1.0 ? 0.0 : v;
  }
  return y;
}

Vec3 torus_delta(const Vec3& a, const Vec3& b) {
  Vec3 d = b - a;
  for (int i = 0; i < 3; ++i) d[i] -= std::floor(d[i] + 0.5);
  return d;
}

double torus_distance(const Vec3& a, const Vec3& b) { return torus_delta(a, b).norm(); }

Plane2::Plane2(const Vec3& u, const Vec3& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0) || !std::isfinite(nu) || !std::isfinite(nv)) {
    throw ValidationError("degenerate plane");
  }
  const Vec3 a = u / nu;
  const Vec3 b = v / nv;
  const double gram = 1.0 - a.dot(b) * a.dot(b);
  if (!(gram > 1e-12)) throw ValidationError("degenerate plane");
  e1_ = a;
  Vec3 w = b - a.dot(b) * a;
  w -= e1_.dot(w) * e1_;
  e2_ = w.normalized();
  n_ = e1_.cross(e2_).normalized();
}

Plane2 Plane2::from_normal(const Vec3& n) {
  const double len = n.norm();
  if (!(len > 0.0) || !std::isfinite(len)) throw ValidationError("degenerate plane");
  const Vec3 nn = n / len;
  // seed with the coordinate axis least aligned with the normal
  int axis = 0;
  nn.cwiseAbs().minCoeff(&axis);
  Vec3 seed = Vec3::Zero();
  seed[axis] = 1.0;
  Vec3 e1 = (seed - nn.dot(seed) * nn).normalized();
  Vec3 e2 = nn.cross(e1).normalized();
  return Plane2(e1, e2, e1.cross(e2).normalized());
}

Eigen::Matrix<double, 3, 2> Plane2::basis() const {
  Eigen::Matrix<double, 3, 2> b;
  b.col(0) = e1_;
  b.col(1) = e2_;
  return b;
}

Line1::Line1(const Vec3& d) {
  const double len = d.norm();
  if (!(len > 0.0) || !std::isfinite(len)) throw ValidationError("degenerate line");
  d_ = d / len;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d_[i]) > 1e-12) {
      if (d_[i] < 0.0) d_ = -d_;
      break;
    }
  }
}

double line_angle(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
}

double line_angle(const Line1& a, const Line1& b) { return line_angle(a.direction(), b.direction()); }

double principal_angle(const Plane2& p, const Plane2& q) {
  // two planes in R^3 share a line; the other principal angle is the
  // angle between their normals
  return line_angle(p.normal(), q.normal());
}

double line_plane_angle(const Line1& l, const Plane2& p) {
  const double s = std::abs(l.direction().dot(p.normal()));
  const double c = p.project(l.direction()).norm();
  return std::atan2(s, c);
}

Mat3 exterior_square(const Mat3& m) {
  static constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  Mat3 w;
  for (int r = 0; r < 3; ++r) {
    const int i = pairs[r][0], j = pairs[r][1];
    for (int c = 0; c < 3; ++c) {
      const int k = pairs[c][0], l = pairs[c][1];
      w(r, c) = m(i, k) * m(j, l) - m(i, l) * m(j, k);
    }
  }
  return w;
}

double restricted_det(const Mat3& m, const Plane2& p) {
  return (m * p.first()).cross(m * p.second()).norm();
}

SingularPair restricted_singular_values(const Mat3& m, const Plane2& p) {
  const Vec3 u = m * p.first();
  const Vec3 v = m * p.second();
  const double g11 = u.squaredNorm();
  const double g22 = v.squaredNorm();
  const double g12 = u.dot(v);
  const double half_trace = 0.5 * (g11 + g22);
  const double disc = std::hypot(0.5 * (g11 - g22), g12);
  const double s_max = std::sqrt(half_trace + disc);
  const double det = u.cross(v).norm();
  SingularPair sp;
  sp.s_max = s_max;
  sp.s_min = s_max > 0.0 ? det / s_max : 0.0;
  return sp;
}

Vec3 project_along(const Vec3& v, const Plane2& e, const Line1& f) {
  const double angle = line_plane_angle(f, e);
  if (!(angle > 1e-8)) {
    std::ostringstream msg;
    msg << "transversality lost (angle = " << angle << ")";
    throw NumericalError(msg.str());
  }
  const Vec3& d = f.direction();
  return (e.normal().dot(v) / e.normal().dot(d)) * d;
}

double condition_number(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m);
  const auto& s = svd.singularValues();
  return s[2] > 0.0 ? s[0] / s[2] : std::numeric_limits<double>::infinity();
}

Mat3 checked_inverse(const Mat3& m, double tol) {
  const double det = m.determinant();
  if (!(std::abs(det) > tol)) throw NumericalError("singular matrix");
  return m.inverse();
}

}  // namespace splitkit
