// Diffeomorphisms of T^3 with exact differentials: integer toral
// automorphisms, volume-preserving local shears, their compositions and
// inverses, and derivative cocycles along orbits.
#pragma once

#include <array>
#include <cmath>
#include <variant>
#include <vector>

#include "splitkit/geometry.hpp"

namespace splitkit {

using IntMat3 = std::array<std::array<long long, 3>, 3>;

/// Linear map of T^3 induced by an integer matrix with determinant +-1.
class ToralAutomorphism {
 public:
  /// Throws ValidationError unless |det| == 1 (exact integer arithmetic).
  explicit ToralAutomorphism(const IntMat3& entries);

  static ToralAutomorphism identity();

  const IntMat3& entries() const { return entries_; }
  long long determinant() const { return det_; }
  long long trace() const { return entries_[0][0] + entries_[1][1] + entries_[2][2]; }
  const Mat3& matrix() const { return matrix_; }

  /// Integer inverse (adjugate times det, since det = +-1).
  ToralAutomorphism inverse() const;

  Vec3 apply(const Vec3& x) const { return wrap_torus(matrix_ * x); }

 private:
  IntMat3 entries_;
  long long det_ = 1;
  Mat3 matrix_;
};

/// The integer matrix [[-3,0,2],[1,2,-3],[0,-1,1]] (det 1, trace 0).
ToralAutomorphism paper_matrix();

struct BumpValue {
  double value = 0.0;
  /// Gradient with respect to all three coordinates (the shear axis
  /// component is always zero).
  Vec3 gradient = Vec3::Zero();
};

/**
 * Volume-preserving shear x -> x + g(x_j, x_k) e_i supported in a disk.
 *
 * The bump g = amplitude * cos^4(pi r / (2 radius)) for r < radius and 0
 * otherwise, where r is the wrapped distance from the center in the plane
 * of the two coordinates other than the shear axis i. g does not depend on
 * x_i, so the map is inverted exactly by subtracting the same bump, and
 * the Jacobian determinant is identically 1. The support is the disk times
 * the full circle along the shear axis.
 */
class ShearPerturbation {
 public:
  ShearPerturbation(int axis, const Vec3& center, double radius, double amplitude);

  int axis() const { return axis_; }
  const Vec3& center() const { return center_; }
  double radius() const { return radius_; }
  double amplitude() const { return amplitude_; }

  /// Wrapped distance from the support center, ignoring the shear axis.
  double support_distance(const Vec3& x) const;
  bool in_support(const Vec3& x) const { return support_distance(x) < radius_; }

  BumpValue bump(const Vec3& x) const;

  Vec3 apply(const Vec3& x, bool inverse = false) const;

  /// I + e_i grad(g)^T, or I - e_i grad(g)^T for the inverse.
  Mat3 differential(const Vec3& x, bool inverse = false) const;

 private:
  int axis_;
  Vec3 center_;
  double radius_;
  double amplitude_;
};

using Primitive = std::variant<ToralAutomorphism, ShearPerturbation>;

/// A composition of primitive maps; steps are applied first to last.
class Diffeo {
 public:
  struct Step {
    Primitive map;
    bool inverted = false;
  };

  Diffeo() = default;
  explicit Diffeo(std::vector<Step> steps) : steps_(std::move(steps)) {}

  static Diffeo identity() { return Diffeo(); }
  static Diffeo linear(const ToralAutomorphism& a) { return Diffeo({Step{a, false}}); }
  /// a o shear: the shear is applied first.
  static Diffeo perturbed(const ToralAutomorphism& a, const ShearPerturbation& s) {
    return Diffeo({Step{s, false}, Step{a, false}});
  }

  const std::vector<Step>& steps() const { return steps_; }

  /// True when every step is a toral automorphism (constant differential).
  bool is_linear() const;

  /// Applies `this` first, then `next`.
  Diffeo then(const Diffeo& next) const;
  Diffeo inverse() const;

  Vec3 apply(const Vec3& x) const;
  Mat3 differential(const Vec3& x) const;

  /// Image point and differential in one pass.
  std::pair<Vec3, Mat3> apply_with_differential(const Vec3& x) const;

 private:
  std::vector<Step> steps_;
};

/// Matrix times exp(log_scale); products renormalize into the scale.
struct ScaledMat3 {
  Mat3 m = Mat3::Identity();
  double log_scale = 0.0;

  Mat3 value() const { return m * std::exp(log_scale); }
  double log_norm() const;

  /// Left-multiplies by d and renormalizes so that max |entry| of m is 1.
  void left_multiply(const Mat3& d);
  /// Right-multiplies by d and renormalizes.
  void right_multiply(const Mat3& d);
};

enum class Direction { Forward, Inverse };
enum class Scaling { Plain, LogScale };

/**
 * Derivative products along an orbit.
 *
 * Forward: points[j] = phi^j(x), matrices[j] = D(phi^j)_x.
 * Inverse: points[j] = phi^-j(x), matrices[j] = D(phi^-j)_x, built along
 * the backward orbit.
 *
 * In Plain scaling the construction stops (overflow = true) once a product
 * norm exceeds the overflow threshold; LogScale keeps every product
 * renormalized and never overflows.
 */
struct Cocycle {
  Vec3 base = Vec3::Zero();
  int horizon = 0;
  Direction direction = Direction::Forward;
  std::vector<Vec3> points;
  std::vector<ScaledMat3> matrices;
  bool overflow = false;

  int steps_computed() const { return static_cast<int>(matrices.size()) - 1; }
};

Cocycle cocycle(const Diffeo& phi, const Vec3& x, int k, Direction direction = Direction::Forward,
                Scaling scaling = Scaling::Plain, double overflow_norm = 1e12);

}  // namespace splitkit
