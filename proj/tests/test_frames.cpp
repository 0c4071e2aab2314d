#include <doctest.h>

#include <cmath>
#include <random>

#include "splitkit/frames.hpp"
#include "splitkit/map_spec.hpp"

using namespace splitkit;

namespace {

const Vec3 e1(1, 0, 0), e2(0, 1, 0), e3(0, 0, 1);

Plane2 slow_eigenplane() {
  const RealEigen r = real_eigen(paper_matrix().matrix());
  return Plane2(r.vectors.col(0), r.vectors.col(1));
}

}  // namespace

TEST_CASE("adapted coefficients") {
  const Coefficients c = adapted_coefficients(Plane2(e1, e2));
  CHECK(c.a == 0.0);
  CHECK(c.b == 0.0);
  // ker(dx3 - x1 dx2) at x1 = 0.7 has normal (0, -0.7, 1)
  const Coefficients k = adapted_coefficients(Plane2::from_normal(Vec3(0, -0.7, 1)));
  CHECK(std::abs(k.a) < 1e-15);
  CHECK(k.b == doctest::Approx(0.7).epsilon(1e-14));

  // slow eigenplane: the normal is the cross product of the eigenvectors,
  // and X, Y must lie in the plane
  const Plane2 slow = slow_eigenplane();
  const Coefficients s = adapted_coefficients(slow);
  const Vec3 n = slow.normal();
  CHECK(s.a == doctest::Approx(-n[0] / n[2]).epsilon(1e-12));
  CHECK(s.b == doctest::Approx(-n[1] / n[2]).epsilon(1e-12));
  CHECK(std::abs(Vec3(1, 0, s.a).dot(n)) < 1e-14);
  CHECK(std::abs(Vec3(0, 1, s.b).dot(n)) < 1e-14);

  CHECK_THROWS_AS(adapted_coefficients(Plane2(e1, e3)), ValidationError);
}

TEST_CASE("coefficients round trip") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 500; ++i) {
    const Coefficients c{u(rng), u(rng)};
    const Coefficients back = adapted_coefficients(plane_from_coefficients(c));
    CHECK(std::abs(back.a - c.a) < 1e-12 * std::max(1.0, std::abs(c.a)));
    CHECK(std::abs(back.b - c.b) < 1e-12 * std::max(1.0, std::abs(c.b)));
  }
}

TEST_CASE("frames and charts") {
  const AdaptedFrame contact = AdaptedFrame::contact();
  const Vec3 x(0.25, 0.5, 0.75);
  CHECK((contact.X(x) - e1).norm() == 0.0);
  CHECK((contact.Y(x) - Vec3(0, 1, 0.25)).norm() == 0.0);
  const AdaptedFrame boxed = contact.with_chart(Chart::box(x, 0.1));
  CHECK_NOTHROW(boxed.coefficients(x + Vec3(0.05, 0, 0)));
  CHECK_THROWS_AS(boxed.coefficients(x + Vec3(0.2, 0, 0)), ChartError);
  CHECK(Chart::box(x, 0.1).margin(x) == doctest::Approx(0.1));

  const AdaptedFrame h = AdaptedFrame::helical(0.2);
  const Coefficients c = h.coefficients(Vec3(0, 0, 0.125));
  CHECK(c.a == doctest::Approx(0.2 * std::cos(2 * M_PI * 0.125)));
  CHECK(c.b == doctest::Approx(0.2 * std::sin(2 * M_PI * 0.125)));
}

TEST_CASE("pullback frames of the linear map") {
  const Diffeo a = Diffeo::linear(paper_matrix());
  const AdaptedFrame initial = AdaptedFrame::constant(0.0, 0.0);
  const AdaptedFrame f0 = pullback_frame(a, initial, 0);
  CHECK(f0.coefficients(Vec3(0.3, 0.1, 0.2)).a == 0.0);

  // E^(1) = A^-1 span(e1, e2) everywhere
  const Plane2 expected = Plane2(e1, e2).transformed(paper_matrix().inverse().matrix());
  const AdaptedFrame f1 = pullback_frame(a, initial, 1);
  CHECK(principal_angle(f1.plane(Vec3(0.3, 0.1, 0.2)), expected) < 1e-14);

  // constant in x, so the coefficient difference quotient along d3 vanishes
  for (int k : {1, 5, 12}) {
    const AdaptedFrame f = pullback_frame(a, initial, k);
    const Vec3 x(0.4, 0.4, 0.4);
    const double h = 1e-4;
    CHECK(std::abs(f.coefficients(x + h * e3).a - f.coefficients(x).a) / h < 1e-8);
  }

  const AdaptedFrame lim = limit_frame(a, SplittingOptions{});
  CHECK(principal_angle(lim.plane(Vec3(0.7, 0.2, 0.9)), slow_eigenplane()) < 1e-10);
}

TEST_CASE("cached frames interpolate smooth frames") {
  const AdaptedFrame h = AdaptedFrame::helical(0.1);
  const Chart box = Chart::box(Vec3(0.5, 0.5, 0.5), 0.1);
  const AdaptedFrame cached = cached_frame(h, box, 41);
  const Vec3 x(0.52, 0.47, 0.513);
  CHECK(std::abs(cached.coefficients(x).a - h.coefficients(x).a) < 1e-4);
  CHECK_THROWS_AS(cached.coefficients(Vec3(0.8, 0.5, 0.5)), ChartError);
}

TEST_CASE("orthonormal pairs aligned with singular directions") {
  const Plane2 slow = slow_eigenplane();
  const OrthonormalPair id = svd_orthonormal_pair(Mat3::Identity(), slow);
  CHECK(id.image_norm_z * id.image_norm_w == doctest::Approx(1.0));
  CHECK(std::abs(id.z.dot(id.w)) < 1e-14);

  const Diffeo a = Diffeo::linear(paper_matrix());
  const RealEigen r = real_eigen(paper_matrix().matrix());
  const OrthonormalPair p = svd_orthonormal_pair(a, Vec3(0.1, 0.2, 0.3), slow, 1);
  CHECK(p.image_norm_z * p.image_norm_w == doctest::Approx(std::abs(r.values[0] * r.values[1])).epsilon(1e-12));
  CHECK(std::abs(r.values[0] * r.values[1]) == doctest::Approx(0.3114).epsilon(1e-3));

  // support-interior point of the perturbed map
  const Diffeo phi = MapSpec::paper_perturbed().build();
  const Vec3 x(0.3, 0.05, 0.02);
  REQUIRE(first_support_visit(MapSpec::paper_perturbed(), x, 0) == 0);
  const Plane2 e(Vec3(1, 0.2, 0.1), Vec3(0.3, 1, -0.4));
  const OrthonormalPair q = svd_orthonormal_pair(phi, x, e, 3);
  const Mat3 m = cocycle_matrix(phi, x, 3);
  const double det = restricted_det(m, e);
  CHECK(std::abs(q.image_norm_z * q.image_norm_w / det - 1.0) < 1e-8);
  CHECK(std::abs((m * q.z).dot(m * q.w)) < 1e-10 * det);
  CHECK(q.image_norm_z >= q.image_norm_w);
}

TEST_CASE("normalized images") {
  const Plane2 e(e1, e2);
  const OrthonormalPair p = svd_orthonormal_pair(Mat3::Identity(), e);
  const auto [z, w] = normalized_images(p, Diffeo::identity(), Vec3(0.1, 0.1, 0.1), 3);
  CHECK((z - p.z).norm() < 1e-15);
  CHECK((w - p.w).norm() < 1e-15);

  const RealEigen r = real_eigen(paper_matrix().matrix());
  OrthonormalPair eig;
  eig.z = r.vectors.col(1);
  eig.w = r.vectors.col(0);
  const auto [ez, ew] = normalized_images(eig, Diffeo::linear(paper_matrix()), Vec3::Zero(), 1);
  CHECK(line_angle(ez, eig.z) < 1e-12);

  const Diffeo phi = MapSpec::paper_perturbed().build();
  SplittingOptions opts;
  const Vec3 x(0.37, 0.61, 0.83);
  const OrbitSplitting orbit = splitting_along_orbit(phi, x, 4, 1024, opts.e0, opts.f0);
  const OrthonormalPair q = svd_orthonormal_pair(phi, x, orbit.slow[0], 4);
  const auto [qz, qw] = normalized_images(q, phi, x, 4);
  CHECK(principal_angle(Plane2(qz, qw), orbit.slow[4]) < 1e-8);
}

TEST_CASE("frame change determinant of orthonormal pairs is a unit") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) {
    const Plane2 p(Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)));
    const double th = 10 * u(rng);
    const Vec3 a = std::cos(th) * p.first() + std::sin(th) * p.second();
    const Vec3 b = (i % 2 ? -1.0 : 1.0) * (-std::sin(th) * p.first() + std::cos(th) * p.second());
    CHECK(std::abs(std::abs(frame_change_determinant(p.first(), p.second(), a, b)) - 1.0) < 1e-12);
  }
}

TEST_CASE("plain cocycle matrix overflows loudly") {
  CHECK_THROWS_AS(cocycle_matrix(Diffeo::linear(paper_matrix()), Vec3::Zero(), 60), NumericalError);
}
