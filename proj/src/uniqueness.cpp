#include "splitkit/uniqueness.hpp"

#include <algorithm>
#include <cmath>

#include "splitkit/parallel.hpp"

namespace splitkit {

namespace {

std::vector<Vec3> slice_points(const Slice& s) {
  if (s.n < 2) throw ValidationError("slice grid needs n >= 2");
  std::vector<Vec3> pts;
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      pts.emplace_back(s.x1_lo + (s.x1_hi - s.x1_lo) * i / (s.n - 1), s.x2,
                       s.x3_lo + (s.x3_hi - s.x3_lo) * j / (s.n - 1));
  return pts;
}

}  // namespace

HartmanData hartman_report(const FrameSequence& frames, const AdaptedFrame& limit, const Slice& slice, int k_max,
                           double h) {
  if (k_max < 1) throw ValidationError("hartman report needs k_max >= 1");
  HartmanData out;
  out.slice = slice;
  const std::vector<Vec3> pts = slice_points(slice);
  std::vector<double> limit_a(pts.size());
  parallel_for(static_cast<int>(pts.size()), [&](int i) { limit_a[i] = limit.coefficients(pts[i]).a; });

  out.ks.resize(k_max);
  out.sup_derivative.assign(k_max, 0.0);
  out.distance.assign(k_max, 0.0);
  parallel_for(k_max, [&](int idx) {
    const int k = idx + 1;
    const AdaptedFrame f = frames(k);
    double sup_d = 0.0, dist = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      Vec3 up = pts[i], dn = pts[i];
      up[2] += h;
      dn[2] -= h;
      const double d = (f.coefficients(up).a - f.coefficients(dn).a) / (2.0 * h);
      sup_d = std::max(sup_d, std::abs(d));
      dist = std::max(dist, std::abs(f.coefficients(pts[i]).a - limit_a[i]));
    }
    out.ks[idx] = k;
    out.sup_derivative[idx] = sup_d;
    out.distance[idx] = dist;
  });

  out.distance_decreasing = true;
  for (int i = 1; i < k_max; ++i) {
    if (out.distance[i] > out.distance[i - 1] + 1e-12) out.distance_decreasing = false;
  }
  const int half = std::max(1, k_max / 2);
  const double first = *std::max_element(out.sup_derivative.begin(), out.sup_derivative.begin() + half);
  const double second =
      half < k_max ? *std::max_element(out.sup_derivative.begin() + half, out.sup_derivative.end()) : first;
  const bool finite = std::all_of(out.sup_derivative.begin(), out.sup_derivative.end(),
                                  [](double v) { return std::isfinite(v); });
  out.bounded = finite && second <= 2.0 * first + 1e-9;
  out.consistent = out.bounded && out.distance_decreasing;
  return out;
}

HartmanData hartman_report(const Diffeo& phi, const AdaptedFrame& initial, const SplittingOptions& options,
                           const Slice& slice, int k_max, double h) {
  return hartman_report([&](int k) { return pullback_frame(phi, initial, k); }, limit_frame(phi, options), slice,
                        k_max, h);
}

LeafComparison leaf_divergence(const AdaptedFrame& frame, const Vec3& x0, double eps, int n, double delta,
                               const FlowSpec& spec) {
  if (!(delta > 0.0)) throw ValidationError("seed offset must be positive");
  LeafComparison out;
  for (const auto& v : order_mismatch(frame, x0, eps, n, spec)) out.order_mismatch = std::max(out.order_mismatch, v.norm());

  const SurfacePatch base = build_patch(frame, x0, eps, n, spec);
  const Vec3 u = frame.X(x0).normalized();
  auto lipschitz = [&](double d, double* max_dist) {
    const SurfacePatch other = build_patch(frame, x0 + d * u, eps, n, spec);
    double worst = 0.0;
    for (size_t i = 0; i < base.points.size(); ++i) worst = std::max(worst, (other.points[i] - base.points[i]).norm());
    if (max_dist) *max_dist = worst;
    return worst / d;
  };
  out.lipschitz = lipschitz(delta, &out.max_distance);
  out.lipschitz_half = lipschitz(delta / 2.0, nullptr);
  return out;
}

}  // namespace splitkit
