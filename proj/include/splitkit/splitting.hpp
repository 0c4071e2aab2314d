// Invariant splitting E + F by pullback / pushforward iteration, and the
// domination ratios along orbits.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "splitkit/dynamics.hpp"

namespace splitkit {

using PlaneField = std::function<Plane2(const Vec3&)>;
using LineField = std::function<Line1(const Vec3&)>;

PlaneField constant_plane_field(const Plane2& p);
LineField constant_line_field(const Line1& l);

/// span(e1, e2) and span(e3).
Plane2 coordinate_plane();
Line1 coordinate_line();

/**
 * E^(k)_x = (D phi^k_x)^-1 E0(phi^k x) for k = 0..horizon.
 *
 * The normal of E^(k)_x is the transpose cocycle applied to the normal of
 * E0 at phi^k x, so the whole sequence comes out of one forward sweep with
 * log-scaled products and no matrix inverses.
 */
struct PullbackSequence {
  Vec3 base = Vec3::Zero();
  std::vector<Plane2> entries;
  /// step_angles[k] = angle(E^(k), E^(k-1)); step_angles[0] = 0.
  std::vector<double> step_angles;
  /// Entries where the initial normal was almost annihilated by the
  /// cocycle (the initial plane nearly contained the fast direction).
  std::vector<bool> flagged;
  bool converged = false;
  /// First k with step angle below the tolerance, -1 if none.
  int k_converged = -1;

  int horizon() const { return static_cast<int>(entries.size()) - 1; }
  const Plane2& last() const { return entries.back(); }
};

struct PullbackOptions {
  double tol = 1e-10;
  bool stop_on_convergence = false;
};

PullbackSequence compute_slow_plane(const Diffeo& phi, const Vec3& x, const PlaneField& e0, int k,
                                    const PullbackOptions& options = {});

/// F_x ~ D phi^k applied to L0 at phi^-k x, pushed along the backward orbit.
Line1 compute_fast_line(const Diffeo& phi, const Vec3& x, const LineField& l0, int k);

struct SplittingOptions {
  PlaneField e0 = constant_plane_field(coordinate_plane());
  LineField f0 = constant_line_field(coordinate_line());
  int k_min = 32;
  int k_max = 2048;
  double step_tol = 1e-10;
  double residual_tol = 1e-6;
};

struct SplittingSample {
  Vec3 x = Vec3::Zero();
  Plane2 E = coordinate_plane();
  Line1 F = coordinate_line();
  int k_used = 0;
  /// angle(D phi E_x, E_phi(x)) + angle(D phi F_x, F_phi(x)), each side
  /// computed at the same depth from its own base point.
  double residual = 0.0;
  double slow_step_angle = 0.0;
  double fast_step_angle = 0.0;
  bool pullback_converged = false;
  bool converged = false;
};

/// Doubles the depth from k_min until both step angles drop below
/// step_tol or k_max is reached.
SplittingSample compute_splitting(const Diffeo& phi, const Vec3& x, const SplittingOptions& options = {});

/**
 * The splitting along the forward orbit y_0 = x, ..., y_m.
 *
 * All planes come from one backward covector sweep starting at y_(m+depth),
 * and all lines from one forward push starting at phi^-depth x, so every
 * entry uses the same numerical orbit and has depth at least `depth`.
 */
struct OrbitSplitting {
  std::vector<Vec3> points;
  /// differentials[j] = D phi at points[j], j < m.
  std::vector<Mat3> differentials;
  std::vector<Plane2> slow;
  std::vector<Line1> fast;
  int depth = 0;

  int length() const { return static_cast<int>(differentials.size()); }
};

OrbitSplitting splitting_along_orbit(const Diffeo& phi, const Vec3& x, int m, int depth,
                                     const PlaneField& e0, const LineField& f0);

/// Log-magnitudes of the cocycle restricted to E and F along an orbit.
struct RestrictedGrowth {
  /// Per k = 0..m: log ||D phi^k|_E||, log |det D phi^k|_E|, log ||D phi^k|_F||.
  std::vector<double> log_norm_e, log_det_e, log_norm_f;
  /// log |det D phi^k| and the defect of the volume identity
  /// |det|_E| ||.|_F|| sin(E,F)_end / sin(E,F)_start = |det| at each k.
  std::vector<double> log_det, volume_identity_defect;
};

/// In the metric |v|_L = |L v| when `metric` is given, else flat.
RestrictedGrowth restricted_growth(const OrbitSplitting& orbit, const std::optional<Mat3>& metric = {});

struct DominationRow {
  int sample = 0;
  Vec3 x = Vec3::Zero();
  int k = 0;
  double dyn_ratio = 0.0;
  double vol_ratio = 0.0;
  double bunch_ratio = 0.0;
  double angle_residual = 0.0;
};

/// ratio_k < 1 for all tested k >= k0; holds requires k0 to exist at
/// every included sample, and k0 is the largest per-sample value.
struct Verdict {
  bool holds = false;
  int k0 = -1;
};

struct DominationReport {
  std::vector<DominationRow> rows;
  Verdict dynamical, volume, bunching;
  std::vector<int> excluded;
  std::vector<std::string> warnings;
  double max_volume_identity_defect = 0.0;
  /// vol_(k+m) <= vol_k * (max one-step ratio on the orbit)^m for all k, m.
  bool submultiplicative = true;
  std::vector<SplittingSample> splittings;
};

struct DominationOptions {
  SplittingOptions splitting;
  std::optional<Mat3> metric;
};

DominationReport domination_report(const Diffeo& phi, const std::vector<Vec3>& samples, int k_max,
                                   const DominationOptions& options = {});

/// Eventual cone check: dyn_ratio at `steps` iterates is below 1 at every
/// sample whose splitting converged; the others are only counted.
struct ConeCheck {
  bool passed = false;
  int steps = 0;
  double max_dyn_ratio = 0.0;
  int unconverged = 0;
};

ConeCheck domination_guard(const Diffeo& phi, const std::vector<Vec3>& samples, int steps,
                           const SplittingOptions& options = {});

/// Real eigenvalues sorted by increasing modulus with matching unit
/// eigenvectors as columns; throws NumericalError for complex spectra.
struct RealEigen {
  Vec3 values = Vec3::Zero();
  Mat3 vectors = Mat3::Identity();
};
RealEigen real_eigen(const Mat3& m);

/// The metric in which the eigenvectors of m are orthonormal (inverse of
/// the eigenvector matrix).
Mat3 eigenbasis_metric(const Mat3& m);

}  // namespace splitkit
