#include "splitkit/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>

namespace splitkit {

namespace {

Vec3 normalized_or_throw(const Vec3& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError(std::string(what) + ": vanishing vector");
  return v / n;
}

// Angle between the line and the plane as sin(angle) = |n . d|.
double sine_line_plane(const Line1& f, const Plane2& e) { return std::abs(e.normal().dot(f.direction())); }

}  // namespace

PlaneField constant_plane_field(const Plane2& p) {
  return [p](const Vec3&) { return p; };
}

LineField constant_line_field(const Line1& l) {
  return [l](const Vec3&) { return l; };
}

Plane2 coordinate_plane() { return Plane2(Vec3::UnitX(), Vec3::UnitY()); }
Line1 coordinate_line() { return Line1(Vec3::UnitZ()); }

PullbackSequence compute_slow_plane(const Diffeo& phi, const Vec3& x, const PlaneField& e0, int k,
                                    const PullbackOptions& options) {
  if (k < 1) throw ValidationError("pullback depth must be >= 1");
  PullbackSequence seq;
  seq.base = wrap_torus(x);
  seq.entries.push_back(e0(seq.base));
  seq.step_angles.push_back(0.0);
  seq.flagged.push_back(false);

  Vec3 y = seq.base;
  ScaledMat3 prod;
  for (int j = 1; j <= k; ++j) {
    auto [next, d] = phi.apply_with_differential(y);
    prod.left_multiply(d);
    y = next;
    const Vec3 n0 = e0(y).normal();
    const Vec3 n = prod.m.transpose() * n0;
    const double scale = prod.m.norm();
    seq.flagged.push_back(!(n.norm() > 1e-8 * scale));
    seq.entries.push_back(Plane2::from_normal(normalized_or_throw(n, "pullback")));
    const double step = principal_angle(seq.entries[j], seq.entries[j - 1]);
    seq.step_angles.push_back(step);
    if (!seq.converged && step < options.tol) {
      seq.converged = true;
      seq.k_converged = j;
      if (options.stop_on_convergence) break;
    }
  }
  return seq;
}

Line1 compute_fast_line(const Diffeo& phi, const Vec3& x, const LineField& l0, int k) {
  if (k < 0) throw ValidationError("push depth must be >= 0");
  const Diffeo inv = phi.inverse();
  std::vector<Vec3> back{wrap_torus(x)};
  for (int j = 0; j < k; ++j) back.push_back(inv.apply(back.back()));
  Vec3 v = l0(back[k]).direction();
  for (int j = k; j >= 1; --j) v = normalized_or_throw(phi.differential(back[j]) * v, "push");
  return Line1(v);
}

namespace {

// Forward points y_0..y_n with differentials, backward points z_0..z_b with
// differentials D phi(z_i).
struct Segment {
  std::vector<Vec3> fwd;
  std::vector<Mat3> fwd_d;
  std::vector<Vec3> back;
  std::vector<Mat3> back_d;
};

Segment build_segment(const Diffeo& phi, const Vec3& x, int n_fwd, int n_back) {
  Segment s;
  s.fwd.push_back(wrap_torus(x));
  for (int j = 0; j < n_fwd; ++j) {
    auto [next, d] = phi.apply_with_differential(s.fwd.back());
    s.fwd_d.push_back(d);
    s.fwd.push_back(next);
  }
  const Diffeo inv = phi.inverse();
  s.back.push_back(s.fwd[0]);
  s.back_d.push_back(s.fwd_d.empty() ? phi.differential(s.fwd[0]) : s.fwd_d[0]);
  for (int i = 0; i < n_back; ++i) {
    const Vec3 z = inv.apply(s.back.back());
    s.back.push_back(z);
    s.back_d.push_back(phi.differential(z));
  }
  return s;
}

// Normal at y_j from the covector at y_(j+h).
Vec3 slow_normal(const Segment& s, const PlaneField& e0, int j, int h) {
  Vec3 nu = e0(s.fwd[j + h]).normal();
  for (int i = j + h - 1; i >= j; --i) nu = normalized_or_throw(s.fwd_d[i].transpose() * nu, "pullback");
  return nu;
}

// Direction at y_j (j = 0 or 1) pushed from phi^-(h-j) x.
Vec3 fast_direction(const Segment& s, const LineField& f0, int j, int h) {
  const int start = h - j;
  Vec3 v = f0(s.back[start]).direction();
  for (int i = start; i >= 1; --i) v = normalized_or_throw(s.back_d[i] * v, "push");
  for (int i = 0; i < j; ++i) v = normalized_or_throw(s.fwd_d[i] * v, "push");
  return v;
}

}  // namespace

SplittingSample compute_splitting(const Diffeo& phi, const Vec3& x, const SplittingOptions& options) {
  if (options.k_min < 2 || options.k_max < options.k_min) {
    throw ValidationError("splitting needs 2 <= k_min <= k_max");
  }
  SplittingSample out;
  out.x = wrap_torus(x);
  int depth = options.k_min;
  while (true) {
    const Segment seg = build_segment(phi, out.x, depth + 1, depth);
    const Vec3 n0 = slow_normal(seg, options.e0, 0, depth);
    const Vec3 n0_prev = slow_normal(seg, options.e0, 0, depth - 1);
    const Vec3 n1 = slow_normal(seg, options.e0, 1, depth);
    const Vec3 f0 = fast_direction(seg, options.f0, 0, depth);
    const Vec3 f0_prev = fast_direction(seg, options.f0, 0, depth - 1);
    const Vec3 f1 = fast_direction(seg, options.f0, 1, depth);

    out.E = Plane2::from_normal(n0);
    out.F = Line1(f0);
    out.k_used = depth;
    out.slow_step_angle = line_angle(n0, n0_prev);
    out.fast_step_angle = line_angle(f0, f0_prev);
    const Mat3& d = seg.fwd_d[0];
    out.residual = principal_angle(out.E.transformed(d), Plane2::from_normal(n1)) + line_angle(d * f0, f1);
    out.pullback_converged = out.slow_step_angle < options.step_tol && out.fast_step_angle < options.step_tol;
    if (out.pullback_converged || 2 * depth > options.k_max) break;
    depth *= 2;
  }
  out.converged = out.residual < options.residual_tol;
  return out;
}

OrbitSplitting splitting_along_orbit(const Diffeo& phi, const Vec3& x, int m, int depth,
                                     const PlaneField& e0, const LineField& f0) {
  if (m < 0 || depth < 0) throw ValidationError("orbit length and depth must be >= 0");
  const Segment seg = build_segment(phi, x, m + depth, depth);
  OrbitSplitting out;
  out.depth = depth;
  out.points.assign(seg.fwd.begin(), seg.fwd.begin() + m + 1);
  out.differentials.assign(seg.fwd_d.begin(), seg.fwd_d.begin() + m);

  std::vector<Vec3> normals(m + 1);
  Vec3 nu = e0(seg.fwd[m + depth]).normal();
  if (depth == 0) normals[m] = nu;
  for (int i = m + depth - 1; i >= 0; --i) {
    nu = normalized_or_throw(seg.fwd_d[i].transpose() * nu, "pullback");
    if (i <= m) normals[i] = nu;
  }
  for (const auto& n : normals) out.slow.push_back(Plane2::from_normal(n));

  Vec3 v = f0(seg.back[depth]).direction();
  for (int i = depth; i >= 1; --i) v = normalized_or_throw(seg.back_d[i] * v, "push");
  out.fast.push_back(Line1(v));
  for (int j = 0; j < m; ++j) {
    v = normalized_or_throw(seg.fwd_d[j] * v, "push");
    out.fast.push_back(Line1(v));
  }
  return out;
}

RestrictedGrowth restricted_growth(const OrbitSplitting& orbit, const std::optional<Mat3>& metric) {
  const int m = orbit.length();
  const Mat3 L = metric.value_or(Mat3::Identity());
  const Mat3 L_inv = checked_inverse(L);

  std::vector<Plane2> E;
  std::vector<Vec3> F;
  for (int j = 0; j <= m; ++j) {
    E.push_back(orbit.slow[j].transformed(L));
    F.push_back((L * orbit.fast[j].direction()).normalized());
  }

  RestrictedGrowth g;
  g.log_norm_e.push_back(0.0);
  g.log_det_e.push_back(0.0);
  g.log_norm_f.push_back(0.0);
  g.log_det.push_back(0.0);
  g.volume_identity_defect.push_back(0.0);

  Eigen::Matrix2d p = Eigen::Matrix2d::Identity();
  double p_log = 0.0;
  double f_log = 0.0;
  double det_log = 0.0;
  double det_e_log = 0.0;
  const double sin0 = sine_line_plane(Line1(F[0]), E[0]);
  for (int j = 0; j < m; ++j) {
    const Mat3 d = L * orbit.differentials[j] * L_inv;
    const Eigen::Matrix2d step = E[j + 1].basis().transpose() * d * E[j].basis();
    p = step * p;
    // the product becomes rank-one numerically, so the determinant is
    // accumulated step by step
    det_e_log += std::log(std::abs(step.determinant()));
    const double mx = p.cwiseAbs().maxCoeff();
    if (mx > 0.0) {
      p /= mx;
      p_log += std::log(mx);
    }
    f_log += std::log((d * F[j]).norm());
    det_log += std::log(std::abs(d.determinant()));

    Eigen::JacobiSVD<Eigen::Matrix2d> svd(p);
    g.log_norm_e.push_back(std::log(svd.singularValues()[0]) + p_log);
    const double log_det_e = det_e_log;
    g.log_det_e.push_back(log_det_e);
    g.log_norm_f.push_back(f_log);
    g.log_det.push_back(det_log);
    const double sin_k = sine_line_plane(Line1(F[j + 1]), E[j + 1]);
    const double lhs = log_det_e + f_log + std::log(sin_k) - std::log(sin0);
    g.volume_identity_defect.push_back(std::abs(std::expm1(lhs - det_log)));
  }
  return g;
}

DominationReport domination_report(const Diffeo& phi, const std::vector<Vec3>& samples, int k_max,
                                   const DominationOptions& options) {
  if (k_max < 1) throw ValidationError("domination report needs k_max >= 1");
  DominationReport report;
  std::vector<int> k0_dyn, k0_vol, k0_bunch;

  auto first_stable = [k_max](const std::vector<double>& r) {
    // smallest k with r_k' < 1 for all k' in [k, k_max]; -1 if r_kmax >= 1
    int k0 = -1;
    for (int k = k_max; k >= 1; --k) {
      if (r[k] < 1.0) k0 = k;
      else break;
    }
    return k0;
  };

  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    const SplittingSample s = compute_splitting(phi, samples[i], options.splitting);
    report.splittings.push_back(s);
    if (!s.converged) {
      report.excluded.push_back(i);
      report.warnings.push_back("sample " + std::to_string(i) + " excluded: splitting residual " +
                                std::to_string(s.residual) + " above tolerance");
      continue;
    }
    const OrbitSplitting orbit =
        splitting_along_orbit(phi, s.x, k_max, s.k_used, options.splitting.e0, options.splitting.f0);
    const RestrictedGrowth g = restricted_growth(orbit, options.metric);

    std::vector<double> dyn(k_max + 1), vol(k_max + 1), bunch(k_max + 1);
    std::vector<double> step_vol;
    for (int k = 1; k <= k_max; ++k) {
      dyn[k] = std::exp(g.log_norm_e[k] - g.log_norm_f[k]);
      vol[k] = std::exp(g.log_det_e[k] - g.log_norm_f[k]);
      bunch[k] = std::exp(2.0 * g.log_norm_e[k] - g.log_norm_f[k]);
      step_vol.push_back((g.log_det_e[k] - g.log_det_e[k - 1]) - (g.log_norm_f[k] - g.log_norm_f[k - 1]));
      report.max_volume_identity_defect =
          std::max(report.max_volume_identity_defect, g.volume_identity_defect[k]);
      report.rows.push_back({i, s.x, k, dyn[k], vol[k], bunch[k], s.residual});
    }
    const double max_step = *std::max_element(step_vol.begin(), step_vol.end());
    for (int k = 1; k <= k_max; ++k) {
      for (int q = k + 1; q <= k_max; ++q) {
        const double bound = std::log(vol[k]) + (q - k) * max_step;
        if (std::log(vol[q]) > bound + 1e-9 * std::max(1.0, std::abs(bound))) report.submultiplicative = false;
      }
    }
    k0_dyn.push_back(first_stable(dyn));
    k0_vol.push_back(first_stable(vol));
    k0_bunch.push_back(first_stable(bunch));
  }

  auto combine = [](const std::vector<int>& k0s) {
    Verdict v;
    if (k0s.empty()) return v;
    v.holds = std::none_of(k0s.begin(), k0s.end(), [](int k) { return k < 0; });
    if (v.holds) v.k0 = *std::max_element(k0s.begin(), k0s.end());
    return v;
  };
  report.dynamical = combine(k0_dyn);
  report.volume = combine(k0_vol);
  report.bunching = combine(k0_bunch);
  return report;
}

ConeCheck domination_guard(const Diffeo& phi, const std::vector<Vec3>& samples, int steps,
                           const SplittingOptions& options) {
  if (steps < 1) throw ValidationError("cone check needs at least one step");
  ConeCheck check;
  check.steps = steps;
  check.passed = true;
  for (const auto& x : samples) {
    const SplittingSample s = compute_splitting(phi, x, options);
    if (!s.converged) {
      ++check.unconverged;
      continue;
    }
    const OrbitSplitting orbit = splitting_along_orbit(phi, s.x, steps, s.k_used, options.e0, options.f0);
    const RestrictedGrowth g = restricted_growth(orbit);
    const double dyn = std::exp(g.log_norm_e[steps] - g.log_norm_f[steps]);
    check.max_dyn_ratio = std::max(check.max_dyn_ratio, dyn);
    if (!(dyn < 1.0)) check.passed = false;
  }
  return check;
}

RealEigen real_eigen(const Mat3& m) {
  Eigen::EigenSolver<Mat3> es(m);
  const auto vals = es.eigenvalues();
  const auto vecs = es.eigenvectors();
  std::array<int, 3> order{0, 1, 2};
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (int i = 0; i < 3; ++i) {
    if (std::abs(vals[i].imag()) > 1e-12 * scale) throw NumericalError("complex eigenvalues");
  }
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(vals[a].real()) < std::abs(vals[b].real()); });
  RealEigen out;
  for (int c = 0; c < 3; ++c) {
    out.values[c] = vals[order[c]].real();
    Vec3 v = vecs.col(order[c]).real();
    out.vectors.col(c) = Line1(v).direction();
  }
  return out;
}

Mat3 eigenbasis_metric(const Mat3& m) { return checked_inverse(real_eigen(m).vectors, 1e-12); }

}  // namespace splitkit
