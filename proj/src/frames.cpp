#include "splitkit/frames.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace splitkit {

double Chart::margin(const Vec3& x) const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) m = std::min({m, x[i] - lo[i], hi[i] - x[i]});
  return m;
}

Coefficients adapted_coefficients(const Plane2& e) {
  const Vec3& n = e.normal();
  if (!(std::abs(n[2]) > 1e-6)) {
    std::ostringstream msg;
    msg << "chart unsuitable: plane normal has |n3| = " << std::abs(n[2])
        << "; permute coordinates so that d3 is transverse to the plane";
    throw ValidationError(msg.str());
  }
  return {-n[0] / n[2], -n[1] / n[2]};
}

Plane2 plane_from_coefficients(const Coefficients& c) { return Plane2::from_normal(Vec3(-c.a, -c.b, 1.0)); }

AdaptedFrame AdaptedFrame::constant(double a, double b) {
  return AdaptedFrame([a, b](const Vec3&) { return Coefficients{a, b}; });
}

AdaptedFrame AdaptedFrame::contact() {
  return AdaptedFrame([](const Vec3& x) { return Coefficients{0.0, x[0]}; });
}

AdaptedFrame AdaptedFrame::helical(double eps) {
  return AdaptedFrame([eps](const Vec3& x) {
    const double theta = 2.0 * std::numbers::pi * x[2];
    return Coefficients{eps * std::cos(theta), eps * std::sin(theta)};
  });
}

AdaptedFrame AdaptedFrame::from_plane_field(PlaneField field, Chart chart) {
  return AdaptedFrame([field = std::move(field)](const Vec3& x) { return adapted_coefficients(field(x)); },
                      chart);
}

Coefficients AdaptedFrame::coefficients(const Vec3& x) const {
  if (!chart_.contains(x)) {
    std::ostringstream msg;
    msg << "point (" << x[0] << ", " << x[1] << ", " << x[2] << ") lies outside the chart";
    throw ChartError(msg.str());
  }
  return fn_(x);
}

Vec3 AdaptedFrame::X(const Vec3& x) const { return {1.0, 0.0, coefficients(x).a}; }
Vec3 AdaptedFrame::Y(const Vec3& x) const { return {0.0, 1.0, coefficients(x).b}; }

PlaneField AdaptedFrame::plane_field() const {
  return [frame = *this](const Vec3& x) { return frame.plane(x); };
}

AdaptedFrame pullback_frame(const Diffeo& phi, const AdaptedFrame& initial, int k, Chart chart) {
  if (k < 0) throw ValidationError("frame index must be >= 0");
  if (k == 0) return initial.with_chart(chart);
  return AdaptedFrame(
      [phi, initial, k](const Vec3& x) {
        Vec3 y = x;
        ScaledMat3 prod;
        for (int j = 0; j < k; ++j) {
          auto [next, d] = phi.apply_with_differential(y);
          prod.left_multiply(d);
          y = next;
        }
        const Vec3 n = prod.m.transpose() * initial.plane(y).normal();
        return adapted_coefficients(Plane2::from_normal(n));
      },
      chart);
}

AdaptedFrame limit_frame(const Diffeo& phi, const SplittingOptions& options, Chart chart) {
  return AdaptedFrame(
      [phi, options](const Vec3& x) { return adapted_coefficients(compute_splitting(phi, x, options).E); },
      chart);
}

AdaptedFrame cached_frame(const AdaptedFrame& frame, const Chart& box, int n) {
  if (n < 2) throw ValidationError("cached frame grid needs n >= 2");
  if (!std::isfinite(box.lo.sum()) || !std::isfinite(box.hi.sum())) {
    throw ValidationError("cached frame needs a bounded box");
  }
  auto values = std::make_shared<std::vector<Coefficients>>(static_cast<size_t>(n) * n * n);
  const Vec3 step = (box.hi - box.lo) / (n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const Vec3 p = box.lo + Vec3(i * step[0], j * step[1], l * step[2]);
        (*values)[(static_cast<size_t>(i) * n + j) * n + l] = frame.coefficients(p);
      }
  return AdaptedFrame(
      [values, box, step, n](const Vec3& x) {
        int idx[3];
        double frac[3];
        for (int c = 0; c < 3; ++c) {
          const double u = (x[c] - box.lo[c]) / step[c];
          idx[c] = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
          frac[c] = u - idx[c];
        }
        Coefficients out;
        for (int corner = 0; corner < 8; ++corner) {
          double wgt = 1.0;
          int id[3];
          for (int c = 0; c < 3; ++c) {
            const int bit = (corner >> c) & 1;
            id[c] = idx[c] + bit;
            wgt *= bit ? frac[c] : 1.0 - frac[c];
          }
          const auto& v = (*values)[(static_cast<size_t>(id[0]) * n + id[1]) * n + id[2]];
          out.a += wgt * v.a;
          out.b += wgt * v.b;
        }
        return out;
      },
      box);
}

OrthonormalPair svd_orthonormal_pair(const Mat3& m, const Plane2& e) {
  const Eigen::Matrix<double, 3, 2> basis = e.basis();
  const Eigen::Matrix<double, 3, 2> image = m * basis;
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>> svd(image, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  OrthonormalPair pair;
  if (s[0] - s[1] <= 1e-12 * std::max(1.0, s[0])) {
    pair.isotropic = true;
    pair.z = e.first();
    pair.w = e.second();
  } else {
    pair.z = basis * svd.matrixV().col(0);
    pair.w = basis * svd.matrixV().col(1);
    // re-orthonormalize against rounding in the basis product
    pair.z.normalize();
    pair.w = (pair.w - pair.z.dot(pair.w) * pair.z).normalized();
  }
  pair.image_norm_z = (m * pair.z).norm();
  pair.image_norm_w = (m * pair.w).norm();
  return pair;
}

Mat3 cocycle_matrix(const Diffeo& phi, const Vec3& x, int k) {
  const Cocycle c = cocycle(phi, x, k);
  if (c.overflow) throw NumericalError("cocycle overflow at depth " + std::to_string(c.steps_computed() + 1));
  return c.matrices.back().m;
}

OrthonormalPair svd_orthonormal_pair(const Diffeo& phi, const Vec3& x, const Plane2& e, int k) {
  return svd_orthonormal_pair(cocycle_matrix(phi, x, k), e);
}

std::pair<Vec3, Vec3> normalized_images(const OrthonormalPair& pair, const Mat3& m) {
  return {(m * pair.z).normalized(), (m * pair.w).normalized()};
}

std::pair<Vec3, Vec3> normalized_images(const OrthonormalPair& pair, const Diffeo& phi, const Vec3& x, int k) {
  return normalized_images(pair, cocycle_matrix(phi, x, k));
}

double frame_change_determinant(const Vec3& z1, const Vec3& w1, const Vec3& z2, const Vec3& w2) {
  Eigen::Matrix2d c;
  c << z2.dot(z1), z2.dot(w1), w2.dot(z1), w2.dot(w1);
  return c.determinant();
}

}  // namespace splitkit
