#include "splitkit/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace splitkit {

namespace {

long long det3(const IntMat3& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec3 step_apply(const Diffeo::Step& s, const Vec3& x) {
  return std::visit(Overloaded{[&](const ToralAutomorphism& a) {
                                 return s.inverted ? a.inverse().apply(x) : a.apply(x);
                               },
                               [&](const ShearPerturbation& sh) { return sh.apply(x, s.inverted); }},
                    s.map);
}

Mat3 step_differential(const Diffeo::Step& s, const Vec3& x) {
  return std::visit(Overloaded{[&](const ToralAutomorphism& a) -> Mat3 {
                                 return s.inverted ? a.inverse().matrix() : a.matrix();
                               },
                               [&](const ShearPerturbation& sh) -> Mat3 {
                                 return sh.differential(x, s.inverted);
                               }},
                    s.map);
}

}  // namespace

ToralAutomorphism::ToralAutomorphism(const IntMat3& entries) : entries_(entries) {
  det_ = det3(entries_);
  if (det_ != 1 && det_ != -1) {
    throw ValidationError("toral automorphism needs |det| = 1, got det = " + std::to_string(det_));
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) matrix_(i, j) = static_cast<double>(entries_[i][j]);
}

ToralAutomorphism ToralAutomorphism::identity() {
  return ToralAutomorphism(IntMat3{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
}

ToralAutomorphism ToralAutomorphism::inverse() const {
  const auto& a = entries_;
  IntMat3 adj{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      // cofactor C_ji goes to adj(i, j)
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj[i][j] = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
    }
  }
  for (auto& row : adj)
    for (auto& v : row) v *= det_;
  return ToralAutomorphism(adj);
}

ToralAutomorphism paper_matrix() {
  return ToralAutomorphism(IntMat3{{{-3, 0, 2}, {1, 2, -3}, {0, -1, 1}}});
}

ShearPerturbation::ShearPerturbation(int axis, const Vec3& center, double radius, double amplitude)
    : axis_(axis), center_(wrap_torus(center)), radius_(radius), amplitude_(amplitude) {
  if (axis < 0 || axis > 2) throw ValidationError("shear axis must be 0, 1 or 2");
  if (!(radius > 0.0) || !(radius <= 0.5)) {
    throw ValidationError("shear radius must lie in (0, 0.5]");
  }
  if (!std::isfinite(amplitude)) throw ValidationError("shear amplitude must be finite");
  if (!center.allFinite()) throw ValidationError("shear center must be finite");
}

double ShearPerturbation::support_distance(const Vec3& x) const {
  Vec3 d = torus_delta(center_, x);
  d[axis_] = 0.0;
  return d.norm();
}

BumpValue ShearPerturbation::bump(const Vec3& x) const {
  using std::numbers::pi;
  BumpValue out;
  Vec3 d = torus_delta(center_, x);
  d[axis_] = 0.0;
  const double r = d.norm();
  if (!(r < radius_)) return out;
  const double theta = pi * r / (2.0 * radius_);
  const double c = std::cos(theta);
  const double c2 = c * c;
  out.value = amplitude_ * c2 * c2;
  // dg/dr / r = -amplitude (pi/R)^2 cos^3(theta) sinc(theta), regular at r = 0
  const double sinc = theta < 1e-4 ? 1.0 - theta * theta / 6.0 : std::sin(theta) / theta;
  const double q = -amplitude_ * (pi / radius_) * (pi / radius_) * c2 * c * sinc;
  out.gradient = q * d;
  return out;
}

Vec3 ShearPerturbation::apply(const Vec3& x, bool inverse) const {
  const double g = bump(x).value;
  if (g == 0.0) return wrap_torus(x);
  Vec3 y = x;
  y[axis_] += inverse ? -g : g;
  return wrap_torus(y);
}

Mat3 ShearPerturbation::differential(const Vec3& x, bool inverse) const {
  Mat3 d = Mat3::Identity();
  const Vec3 grad = bump(x).gradient;
  d.row(axis_) += (inverse ? -1.0 : 1.0) * grad.transpose();
  return d;
}

bool Diffeo::is_linear() const {
  for (const auto& s : steps_) {
    if (!std::holds_alternative<ToralAutomorphism>(s.map)) return false;
  }
  return true;
}

Diffeo Diffeo::then(const Diffeo& next) const {
  std::vector<Step> all = steps_;
  all.insert(all.end(), next.steps_.begin(), next.steps_.end());
  return Diffeo(std::move(all));
}

Diffeo Diffeo::inverse() const {
  std::vector<Step> inv(steps_.rbegin(), steps_.rend());
  for (auto& s : inv) {
    if (const auto* a = std::get_if<ToralAutomorphism>(&s.map)) {
      // store the integer inverse directly
      if (!s.inverted) s.map = a->inverse();
      s.inverted = false;
    } else {
      s.inverted = !s.inverted;
    }
  }
  return Diffeo(std::move(inv));
}

Vec3 Diffeo::apply(const Vec3& x) const {
  Vec3 y = wrap_torus(x);
  for (const auto& s : steps_) y = step_apply(s, y);
  return y;
}

Mat3 Diffeo::differential(const Vec3& x) const { return apply_with_differential(x).second; }

std::pair<Vec3, Mat3> Diffeo::apply_with_differential(const Vec3& x) const {
  Vec3 y = wrap_torus(x);
  Mat3 d = Mat3::Identity();
  for (const auto& s : steps_) {
    d = step_differential(s, y) * d;
    y = step_apply(s, y);
  }
  return {y, d};
}

double ScaledMat3::log_norm() const {
  Eigen::JacobiSVD<Mat3> svd(m);
  return std::log(svd.singularValues()[0]) + log_scale;
}

namespace {
void renormalize(ScaledMat3& s) {
  const double mx = s.m.cwiseAbs().maxCoeff();
  if (mx > 0.0 && std::isfinite(mx)) {
    s.m /= mx;
    s.log_scale += std::log(mx);
  }
}
}  // namespace

void ScaledMat3::left_multiply(const Mat3& d) {
  m = d * m;
  renormalize(*this);
}

void ScaledMat3::right_multiply(const Mat3& d) {
  m = m * d;
  renormalize(*this);
}

Cocycle cocycle(const Diffeo& phi, const Vec3& x, int k, Direction direction, Scaling scaling,
                double overflow_norm) {
  if (k < 0) throw ValidationError("cocycle horizon must be >= 0");
  Cocycle c;
  c.base = wrap_torus(x);
  c.horizon = k;
  c.direction = direction;
  c.points.reserve(k + 1);
  c.matrices.reserve(k + 1);
  c.points.push_back(c.base);
  c.matrices.push_back(ScaledMat3{});

  const Diffeo map = direction == Direction::Forward ? phi : phi.inverse();
  Vec3 y = c.base;
  ScaledMat3 prod;
  for (int j = 0; j < k; ++j) {
    auto [next, d] = map.apply_with_differential(y);
    if (scaling == Scaling::LogScale) {
      prod.left_multiply(d);
    } else {
      prod.m = d * prod.m;
      if (prod.m.norm() > overflow_norm || !prod.m.allFinite()) {
        c.overflow = true;
        break;
      }
    }
    y = next;
    c.points.push_back(y);
    c.matrices.push_back(prod);
  }
  return c;
}

}  // namespace splitkit
