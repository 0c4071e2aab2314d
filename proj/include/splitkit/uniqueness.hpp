// Unique-integrability diagnostics: Hartman's 1-form data on a slice and
// leaf divergence between nearby patches.
#pragma once

#include <functional>
#include <vector>

#include "splitkit/surface.hpp"

namespace splitkit {

/// Grid on the slice x2 = const, covering [lo, hi] in (x1, x3).
struct Slice {
  double x2 = 0.5;
  double x1_lo = 0.3, x1_hi = 0.7;
  double x3_lo = 0.3, x3_hi = 0.7;
  int n = 9;
};

struct HartmanData {
  Slice slice;
  std::vector<int> ks;
  /// sup over the slice of |da_k/dx3|.
  std::vector<double> sup_derivative;
  /// sup over the slice of |a_k - a|.
  std::vector<double> distance;
  bool distance_decreasing = false;
  /// Sup series grows by at most a factor 2 between the first and second
  /// half of the k range and stays finite.
  bool bounded = false;
  bool consistent = false;
};

using FrameSequence = std::function<AdaptedFrame(int k)>;

HartmanData hartman_report(const FrameSequence& frames, const AdaptedFrame& limit, const Slice& slice, int k_max,
                           double h = 1e-4);

/// Frames of E^(k) for phi with the limit taken from the converged splitting.
HartmanData hartman_report(const Diffeo& phi, const AdaptedFrame& initial, const SplittingOptions& options,
                           const Slice& slice, int k_max, double h = 1e-4);

struct LeafComparison {
  /// max |e^{sY} o e^{tX}(x0) - e^{tX} o e^{sY}(x0)| on the grid.
  double order_mismatch = 0.0;
  /// max patch distance / delta for seeds x0 and x0 + delta u, u in E.
  double lipschitz = 0.0;
  /// Same with delta / 2.
  double lipschitz_half = 0.0;
  double max_distance = 0.0;
};

LeafComparison leaf_divergence(const AdaptedFrame& frame, const Vec3& x0, double eps, int n, double delta,
                               const FlowSpec& spec = {});

}  // namespace splitkit
