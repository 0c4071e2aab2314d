// Chart-level linear algebra on the 3-torus: planes, lines, angles,
// restricted singular values and the exterior-square action.
#pragma once

#include <Eigen/Dense>

#include "splitkit/errors.hpp"

namespace splitkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Reduce each coordinate to [0, 1).
Vec3 wrap_torus(const Vec3& x);

/// Signed per-coordinate displacement of b from a, each in [-1/2, 1/2).
Vec3 torus_delta(const Vec3& a, const Vec3& b);

/// Flat metric on T^3: per-coordinate min(|d|, 1-|d|), combined Euclidean.
double torus_distance(const Vec3& a, const Vec3& b);

/**
 * A 2-plane through the origin of R^3.
 *
 * Stored as a Gram-Schmidt orthonormalized spanning pair plus the cached
 * unit normal (cross product of the pair). Construction rejects spanning
 * pairs whose normalized Gram determinant is at most 1e-12.
 */
class Plane2 {
 public:
  Plane2(const Vec3& u, const Vec3& v);

  /// Plane with the given (not necessarily unit) normal.
  static Plane2 from_normal(const Vec3& n);

  const Vec3& first() const { return e1_; }
  const Vec3& second() const { return e2_; }
  const Vec3& normal() const { return n_; }

  /// Columns are the orthonormal basis vectors.
  Eigen::Matrix<double, 3, 2> basis() const;

  /// Orthogonal projection onto the plane.
  Vec3 project(const Vec3& v) const { return v - n_.dot(v) * n_; }

  /// Image under a linear map (the plane spanned by M e1, M e2).
  Plane2 transformed(const Mat3& m) const { return Plane2(m * e1_, m * e2_); }

 private:
  Plane2(const Vec3& e1, const Vec3& e2, const Vec3& n) : e1_(e1), e2_(e2), n_(n) {}
  Vec3 e1_, e2_, n_;
};

/// A line through the origin, unit direction with its first nonzero
/// component positive.
class Line1 {
 public:
  explicit Line1(const Vec3& d);

  const Vec3& direction() const { return d_; }
  Line1 transformed(const Mat3& m) const { return Line1(m * d_); }

 private:
  Vec3 d_;
};

/// Largest principal angle between two planes, in [0, pi/2].
double principal_angle(const Plane2& p, const Plane2& q);

/// Angle between two lines, in [0, pi/2].
double line_angle(const Line1& a, const Line1& b);
double line_angle(const Vec3& a, const Vec3& b);

/// Angle between a line and a plane, in [0, pi/2].
double line_plane_angle(const Line1& l, const Plane2& p);

/// Induced action on the wedge square in the basis e1^e2, e1^e3, e2^e3.
Mat3 exterior_square(const Mat3& m);

struct SingularPair {
  double s_min = 0.0;
  double s_max = 0.0;
};

/// Singular values of M restricted to P (flat metric on P and on R^3).
SingularPair restricted_singular_values(const Mat3& m, const Plane2& p);

/// |det(M|_P)|: area scaling of P under M.
double restricted_det(const Mat3& m, const Plane2& p);

/// Component of v in F along E (the projection with kernel E, image F).
/// Throws NumericalError("transversality lost ...") when the angle between
/// F and E is at most 1e-8.
Vec3 project_along(const Vec3& v, const Plane2& e, const Line1& f);

/// Ratio of largest to smallest singular value.
double condition_number(const Mat3& m);

/// Inverse, refusing matrices with |det| <= tol.
Mat3 checked_inverse(const Mat3& m, double tol = 1e-14);

}  // namespace splitkit
