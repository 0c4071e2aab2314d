#include "splitkit/bracket.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace splitkit {

namespace {

double centered_c(const AdaptedFrame& frame, const Vec3& x, double h, double* xb, double* ya) {
  auto diff = [&](int axis) {
    Vec3 p = x, m = x;
    p[axis] += h;
    m[axis] -= h;
    const Coefficients cp = frame.coefficients(p);
    const Coefficients cm = frame.coefficients(m);
    return Coefficients{(cp.a - cm.a) / (2.0 * h), (cp.b - cm.b) / (2.0 * h)};
  };
  const Coefficients c0 = frame.coefficients(x);
  const Coefficients d1 = diff(0), d2 = diff(1), d3 = diff(2);
  const double x_b = d1.b + c0.a * d3.b;
  const double y_a = d2.a + c0.b * d3.a;
  if (xb) *xb = x_b;
  if (ya) *ya = y_a;
  return x_b - y_a;
}

// Unit vector field of an orthonormal pair of E^(k), sign-aligned with a reference.
struct PairField {
  const Diffeo& phi;
  const AdaptedFrame& frame;
  int k;
  PairChoice choice;

  OrthonormalPair at(const Vec3& p) const {
    const Coefficients c = frame.coefficients(p);
    if (choice == PairChoice::GramSchmidt) {
      OrthonormalPair pair;
      pair.z = Vec3(1.0, 0.0, c.a).normalized();
      const Vec3 y(0.0, 1.0, c.b);
      pair.w = (y - pair.z.dot(y) * pair.z).normalized();
      return pair;
    }
    return svd_orthonormal_pair(phi, p, plane_from_coefficients(c), k);
  }
};

}  // namespace

BracketSample bracket_coefficient(const AdaptedFrame& frame, const Vec3& x, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("finite-difference step must be positive");
  const double margin = frame.chart().margin(x);
  if (!(margin >= h)) {
    std::ostringstream msg;
    msg << "finite-difference stencil leaves the chart; use h < " << std::max(margin, 0.0);
    throw ChartError(msg.str());
  }
  BracketSample s;
  s.x = x;
  s.h = h;
  s.c = centered_c(frame, x, h, &s.xb, &s.ya);
  s.c_half = centered_c(frame, x, h / 2.0, nullptr, nullptr);
  s.c_quarter = centered_c(frame, x, h / 4.0, nullptr, nullptr);
  const double d1 = s.c - s.c_half;
  const double d2 = s.c_half - s.c_quarter;
  s.error_estimate = 4.0 / 3.0 * std::abs(d1);
  s.weak_derivative = std::abs(d2) > 0.5 * std::abs(d1) + 1e-9 * std::max(1.0, std::abs(s.c));
  return s;
}

double transported_bracket(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x, int k, double h) {
  if (k < 0) throw ValidationError("frame index must be >= 0");
  Vec3 y = wrap_torus(x);
  ScaledMat3 prod;
  double log_det = 0.0;
  double det_sign = 1.0;
  for (int j = 0; j < k; ++j) {
    auto [next, d] = phi.apply_with_differential(y);
    const double dj = d.determinant();
    log_det += std::log(std::abs(dj));
    if (dj < 0.0) det_sign = -det_sign;
    prod.left_multiply(d);
    y = next;
  }
  const Coefficients c = initial.coefficients(y);
  const double c0 = bracket_coefficient(initial, y, h).c;
  const double lambda = Vec3(-c.a, -c.b, 1.0).dot(prod.m.col(2));
  if (lambda == 0.0) throw NumericalError("pulled-back plane contains d3");
  const double log_mag = log_det - 2.0 * (prod.log_scale + std::log(std::abs(lambda)));
  return det_sign * c0 * std::exp(log_mag);
}

ProjectedBracket projected_bracket_norm(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x, int k,
                                        double h, PairChoice choice) {
  const AdaptedFrame frame = pullback_frame(phi, initial, k);
  const PairField field{phi, frame, k, choice};
  const OrthonormalPair center = field.at(x);

  Mat3 dz, dw;
  for (int i = 0; i < 3; ++i) {
    Vec3 p = x, m = x;
    p[i] += h;
    m[i] -= h;
    OrthonormalPair fp = field.at(p), fm = field.at(m);
    for (auto* f : {&fp, &fm}) {
      if (f->z.dot(center.z) < 0.0) f->z = -f->z;
      if (f->w.dot(center.w) < 0.0) f->w = -f->w;
    }
    dz.col(i) = (fp.z - fm.z) / (2.0 * h);
    dw.col(i) = (fp.w - fm.w) / (2.0 * h);
  }

  ProjectedBracket out;
  out.isotropic = center.isotropic;
  out.bracket = dw * center.z - dz * center.w;
  const Coefficients c = frame.coefficients(x);
  const Plane2 plane = plane_from_coefficients(c);
  out.direct = std::abs(plane.normal().dot(out.bracket));

  Eigen::Matrix<double, 3, 2> xy;
  xy.col(0) = Vec3(1.0, 0.0, c.a);
  xy.col(1) = Vec3(0.0, 1.0, c.b);
  Eigen::Matrix<double, 3, 2> zw;
  zw.col(0) = center.z;
  zw.col(1) = center.w;
  const Eigen::Matrix2d a = xy.colPivHouseholderQr().solve(zw);
  out.frame_change_det = a.determinant();
  out.pi_d3 = std::abs(plane.normal()[2]);
  out.c = bracket_coefficient(frame, x, h).c;
  out.formula = std::abs(out.c) * out.pi_d3 * std::abs(out.frame_change_det);
  out.c1 = out.direct > 0.0 ? std::abs(out.c) / out.direct : std::numeric_limits<double>::infinity();
  return out;
}

InvarianceResidual invariance_identity_residual(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x,
                                                int k, const SplittingOptions& options, double h) {
  InvarianceResidual out;
  const SplittingSample s = compute_splitting(phi, x, options);
  if (!s.converged) throw NumericalError("splitting did not converge at the sample point");
  const OrbitSplitting orbit = splitting_along_orbit(phi, s.x, k, s.k_used, options.e0, options.f0);
  Mat3 m = Mat3::Identity();
  for (const auto& d : orbit.differentials) m = d * m;

  const Vec3 v = projected_bracket_norm(phi, initial, s.x, k, h).bracket;
  const Vec3 pv = project_along(v, orbit.slow.front(), orbit.fast.front());
  if (!(pv.norm() > 1e-10)) {
    out.degenerate = true;
    return out;
  }
  const Vec3 rhs = m * pv;
  const Vec3 lhs = project_along(m * v, orbit.slow.back(), orbit.fast.back());
  out.residual = (lhs - rhs).norm() / rhs.norm();
  const RestrictedGrowth g = restricted_growth(orbit);
  const double predicted = std::exp(g.log_norm_f[k]) * pv.norm();
  out.norm_identity_error = std::abs(rhs.norm() - predicted) / predicted;
  return out;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2 || y.size() != n) throw ValidationError("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

BoundCurve bound_curve(const Diffeo& phi, const AdaptedFrame& initial, const Vec3& x, int k_max,
                       const BoundOptions& options) {
  if (k_max < 1) throw ValidationError("bound curve needs k_max >= 1");
  BoundCurve curve;
  const SplittingSample s = compute_splitting(phi, x, options.splitting);
  if (!s.converged) throw NumericalError("splitting did not converge at the sample point");
  curve.x = s.x;
  const OrbitSplitting orbit =
      splitting_along_orbit(phi, s.x, k_max, s.k_used, options.splitting.e0, options.splitting.f0);
  const RestrictedGrowth g = restricted_growth(orbit);

  ScaledMat3 prod;
  std::vector<double> ks, log_rhs;
  double running = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    prod.left_multiply(orbit.differentials[k - 1]);
    BoundRecord r;
    r.k = k;
    r.c = transported_bracket(phi, initial, s.x, k, options.h);
    r.lhs = std::abs(r.c);
    r.lhs_fd = k <= options.fd_k_max ? std::abs(bracket_coefficient(pullback_frame(phi, initial, k), s.x, options.h).c)
                                     : std::numeric_limits<double>::quiet_NaN();
    r.rhs = std::exp(g.log_det_e[k] - g.log_norm_f[k]);
    r.quotient = r.lhs / r.rhs;
    // |det D phi^k|_E^(k)| = |det D phi^k| / |(D phi^k)^T n_0|
    const Vec3 n0 = initial.plane(orbit.points[k]).normal();
    const double log_det_ek = g.log_det[k] - (prod.log_scale + std::log((prod.m.transpose() * n0).norm()));
    r.det_ratio = std::exp(log_det_ek - g.log_det_e[k]);
    running = std::max(running, r.quotient);
    curve.running_max.push_back(running);
    curve.records.push_back(r);
    ks.push_back(k);
    log_rhs.push_back(std::log(r.rhs));
  }
  curve.mean_step_log_vol = (g.log_det_e[k_max] - g.log_norm_f[k_max]) / k_max;
  curve.rhs_log_slope = k_max >= 2 ? fitted_slope(ks, log_rhs) : log_rhs[0];
  return curve;
}

}  // namespace splitkit
