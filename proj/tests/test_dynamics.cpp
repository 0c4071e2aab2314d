#include <doctest.h>

#include <cmath>
#include <random>

#include "splitkit/map_spec.hpp"

using namespace splitkit;

namespace {

Vec3 random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return Vec3(u(rng), u(rng), u(rng));
}

Mat3 fd_differential(const Diffeo& phi, const Vec3& x, double h) {
  Mat3 d;
  for (int j = 0; j < 3; ++j) {
    Vec3 dx = Vec3::Zero();
    dx[j] = h;
    d.col(j) = torus_delta(phi.apply(x - dx), phi.apply(x + dx)) / (2 * h);
  }
  return d;
}

}  // namespace

TEST_CASE("automorphisms need unit determinant") {
  CHECK_THROWS_AS(ToralAutomorphism(IntMat3{{{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}}), ValidationError);
  const ToralAutomorphism a = paper_matrix();
  CHECK(a.determinant() == 1);
  CHECK(a.trace() == 0);
  CHECK((a.inverse().matrix() * a.matrix() - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("apply examples") {
  const Vec3 x(0.3, 0.4, 0.5);
  CHECK((Diffeo::identity().apply(x) - x).norm() == 0.0);
  const Diffeo a = Diffeo::linear(paper_matrix());
  CHECK(a.apply(Vec3::Zero()).norm() == 0.0);
  CHECK((a.apply(Vec3(0.5, 0.5, 0.5)) - Vec3(0.5, 0, 0)).norm() < 1e-15);
}

TEST_CASE("differential examples") {
  const Diffeo a = Diffeo::linear(paper_matrix());
  CHECK((a.differential(Vec3(0.7, 0.1, 0.2)) - paper_matrix().matrix()).norm() == 0.0);

  const ShearPerturbation s(0, Vec3(0.5, 0.5, 0.5), 0.2, 0.05);
  CHECK((s.differential(Vec3(0.5, 0.1, 0.1)) - Mat3::Identity()).norm() == 0.0);
  const Vec3 x(0.2, 0.55, 0.45);
  const Diffeo shear({Diffeo::Step{s, false}});
  const Mat3 d = shear.differential(x);
  const Mat3 fd = fd_differential(shear, x, 1e-5);
  CHECK((d - fd).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(d(0, 0) == 1.0);
  CHECK((d.bottomRows(2) - Mat3::Identity().bottomRows(2)).norm() == 0.0);
}

TEST_CASE("shear is inverted exactly and fixes points outside its support") {
  const ShearPerturbation s(1, Vec3(0.2, 0.3, 0.4), 0.25, 0.07);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x = random_point(rng);
    CHECK(torus_distance(s.apply(s.apply(x), true), x) < 1e-15);
    if (!s.in_support(x)) CHECK((s.apply(x) - x).norm() == 0.0);
  }
}

TEST_CASE("built-in maps preserve volume and match finite differences") {
  std::mt19937_64 rng(4);
  for (const Diffeo& phi : {MapSpec::paper_linear().build(), MapSpec::paper_perturbed().build()}) {
    for (int i = 0; i < 1000; ++i) {
      const Vec3 x = random_point(rng);
      CHECK(std::abs(std::abs(phi.differential(x).determinant()) - 1.0) < 1e-12);
      if (i % 10 == 0) CHECK((phi.differential(x) - fd_differential(phi, x, 1e-5)).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
  // the inverse expands by up to 1/0.1 per step, so its third derivatives
  // are about 10^3 times larger and the stencil must shrink accordingly
  const Diffeo inv = MapSpec::paper_perturbed().build().inverse();
  for (int i = 0; i < 100; ++i) {
    const Vec3 x = random_point(rng);
    CHECK(std::abs(std::abs(inv.differential(x).determinant()) - 1.0) < 1e-12);
    CHECK((inv.differential(x) - fd_differential(inv, x, 1e-6)).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("inverse map") {
  const Diffeo phi = MapSpec::paper_perturbed().build();
  const Diffeo inv = phi.inverse();
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = random_point(rng);
    CHECK(torus_distance(inv.apply(phi.apply(x)), x) < 1e-13);
    CHECK((inv.differential(phi.apply(x)) * phi.differential(x) - Mat3::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("cocycle") {
  const Diffeo a = Diffeo::linear(paper_matrix());
  const Vec3 x(0.1, 0.2, 0.3);
  const Cocycle c0 = cocycle(a, x, 0);
  CHECK(c0.points.size() == 1);
  CHECK((c0.matrices[0].value() - Mat3::Identity()).norm() == 0.0);

  const Mat3 m = paper_matrix().matrix();
  CHECK((cocycle(a, x, 2).matrices[2].value() - m * m).norm() == 0.0);

  const Diffeo phi = MapSpec::paper_perturbed().build();
  for (int k = 1; k <= 10; ++k) {
    const Cocycle fwd = cocycle(phi, x, k);
    const Cocycle back = cocycle(phi, fwd.points.back(), k, Direction::Inverse);
    const Mat3 prod = back.matrices.back().value() * fwd.matrices.back().value();
    CHECK((prod - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-8);
    // round-off on the forward orbit is re-expanded by up to 10 per backward step
    CHECK(torus_distance(back.points.back(), x) < 1e-15 * std::pow(10.0, k));
  }
}

TEST_CASE("cocycle multiplicativity and scaling") {
  const Diffeo phi = MapSpec::paper_perturbed().build();
  const Vec3 x(0.05, 0.02, 0.9);
  const Cocycle c = cocycle(phi, x, 12);
  const Cocycle tail = cocycle(phi, c.points[5], 7);
  const Mat3 joined = tail.matrices[7].value() * c.matrices[5].value();
  CHECK((joined - c.matrices[12].value()).cwiseAbs().maxCoeff() < 1e-9 * c.matrices[12].value().norm());

  const Cocycle plain = cocycle(phi, x, 60);
  CHECK(plain.overflow);
  CHECK(plain.steps_computed() < 60);
  const Cocycle scaled = cocycle(phi, x, 60, Direction::Forward, Scaling::LogScale);
  CHECK_FALSE(scaled.overflow);
  CHECK(scaled.steps_computed() == 60);
  CHECK(scaled.matrices[60].log_norm() == doctest::Approx(60 * std::log(3.2111)).epsilon(0.02));
}

TEST_CASE("map spec JSON round trip and validation") {
  const MapSpec spec = MapSpec::paper_perturbed(0.03, 0.15);
  const auto j = spec.to_json();
  const MapSpec back = MapSpec::from_json(j);
  CHECK(back.to_json().dump() == j.dump());
  auto bad = j;
  bad["matrix"][0][0] = 5;
  CHECK_THROWS_AS(MapSpec::from_json(bad), ValidationError);
  bad = j;
  bad["shears"][0]["radius"] = 0.9;
  CHECK_THROWS_AS(MapSpec::from_json(bad), ValidationError);
}

TEST_CASE("support visits") {
  const MapSpec spec = MapSpec::paper_perturbed();
  CHECK(first_support_visit(spec, Vec3(0.0, 0.0, 0.0), 5) == 0);
  CHECK(first_support_visit(MapSpec::paper_linear(), Vec3(0.0, 0.0, 0.0), 5) == -1);
}
