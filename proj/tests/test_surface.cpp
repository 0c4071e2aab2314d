#include <doctest.h>

#include <cmath>

#include "splitkit/bracket.hpp"
#include "splitkit/map_spec.hpp"
#include "splitkit/surface.hpp"

using namespace splitkit;

namespace {

const AdaptedFrame kExpFrame([](const Vec3& x) { return Coefficients{x[2], 0.0}; });

}  // namespace

TEST_CASE("flow examples") {
  CHECK((flow(x_field(AdaptedFrame::constant(0, 0)), Vec3::Zero(), 0.3) - Vec3(0.3, 0, 0)).norm() < 1e-15);
  CHECK((flow(x_field(AdaptedFrame::constant(0.5, 0)), Vec3::Zero(), 0.4) - Vec3(0.4, 0, 0.2)).norm() < 1e-15);
  const double x1 = 0.35, s = 0.27;
  CHECK((flow(y_field(AdaptedFrame::contact()), Vec3(x1, 0, 0), s) - Vec3(x1, s, x1 * s)).norm() < 1e-15);
  CHECK((flow(x_field(kExpFrame), Vec3(0, 0, 1), -0.5) - Vec3(-0.5, 0, std::exp(-0.5))).norm() < 1e-12);
}

TEST_CASE("flows stop at the chart boundary") {
  FlowSpec spec;
  spec.chart = Chart::box(Vec3::Zero(), 0.1);
  try {
    flow(x_field(AdaptedFrame::constant(0, 0)), Vec3::Zero(), 0.3, spec);
    FAIL("expected a chart exit");
  } catch (const ChartError& e) {
    CHECK(e.time() == doctest::Approx(0.1).epsilon(0.02));
  }
}

TEST_CASE("integrator has global order four") {
  // contact flows are polynomial of degree one and integrated exactly, so the
  // order is measured on x3' = x3
  std::vector<double> errs;
  for (double step : {1e-2, 5e-3, 2.5e-3}) {
    FlowSpec spec;
    spec.step = step;
    const Vec3 y = flow(x_field(kExpFrame), Vec3(0.1, 0.2, 0.3), 1.0, spec);
    errs.push_back(std::abs(y[2] - 0.3 * std::exp(1.0)));
  }
  for (int i = 0; i < 2; ++i) CHECK(std::abs(std::log2(errs[i] / errs[i + 1]) / 4.0 - 1.0) <= 0.2);
}

TEST_CASE("variational flow") {
  const TangentFlow tf = variational_flow(x_field(kExpFrame), x_jacobian(kExpFrame), Vec3(0, 0, 0.4), 0.7);
  CHECK(tf.J(2, 2) == doctest::Approx(std::exp(0.7)).epsilon(1e-10));
  CHECK(tf.J(0, 0) == doctest::Approx(1.0));
  const Mat3 fd = fd_jacobian(x_field(AdaptedFrame::contact()), Vec3(0.2, 0.3, 0.4));
  CHECK(fd.norm() < 1e-9);
}

TEST_CASE("patches") {
  const Vec3 x0(0.3, 0.1, 0.2);
  const SurfacePatch flat = build_patch(AdaptedFrame::constant(0.4, -0.3), x0, 0.05, 21);
  CHECK(planarity_defect(flat) < 1e-9);
  CHECK(tangency_defect(flat, constant_plane_field(plane_from_coefficients({0.4, -0.3}))).max_angle < 1e-8);

  const SurfacePatch contact = build_patch(AdaptedFrame::contact(), x0, 0.05, 11);
  double err = 0.0;
  for (int j = 0; j < 11; ++j)
    for (int i = 0; i < 11; ++i) {
      const double t = contact.coordinate(i), s = contact.coordinate(j);
      err = std::max(err, (contact.at(i, j) - Vec3(x0[0] + t, x0[1] + s, x0[2] + x0[0] * s)).norm());
    }
  CHECK(err < 1e-12);
  CHECK(dt_defect(contact, AdaptedFrame::contact()) < 1e-9);
  CHECK(max_tangent_norm(contact) <= std::sqrt(1.0 + 0.36 * 0.36) + 1e-9);

  FlowSpec tight;
  tight.chart = Chart::box(x0, 0.03);
  CHECK_THROWS_AS(build_patch(AdaptedFrame::contact(), x0, 0.05, 11, tight), ChartError);
}

TEST_CASE("patches of the linear map are tangent to the eigenplane") {
  const Diffeo lin = Diffeo::linear(paper_matrix());
  const AdaptedFrame lim = limit_frame(lin, SplittingOptions{});
  const Vec3 x0(0.4, 0.5, 0.6);
  const SurfacePatch p = build_patch(lim, x0, 0.05, 11);
  const RealEigen r = real_eigen(paper_matrix().matrix());
  const Plane2 slow(r.vectors.col(0), r.vectors.col(1));
  CHECK(tangency_defect(p, constant_plane_field(slow)).max_angle < 1e-8);
  CHECK(planarity_defect(p) < 1e-9);
}

TEST_CASE("perturbed patches") {
  const Diffeo phi = MapSpec::paper_perturbed().build();
  const AdaptedFrame initial = AdaptedFrame::constant(0, 0);
  const Vec3 x0(0.1, 0.2, 0.3);
  FlowSpec coarse, fine;
  coarse.step = 1e-3;
  fine.step = 5e-4;

  // integrable pulled-back planes: the patch is tangent to its own field
  const AdaptedFrame f3 = pullback_frame(phi, initial, 3);
  const SurfacePatch p3 = build_patch(f3, x0, 0.05, 21, coarse, 3);
  CHECK(tangency_defect(p3, f3.plane_field()).max_angle < 1e-8);

  const AdaptedFrame f6 = pullback_frame(phi, initial, 6);
  const SurfacePatch a = build_patch(f6, x0, 0.05, 21, coarse, 6);
  const SurfacePatch b = build_patch(f6, x0, 0.05, 21, fine, 6);
  const TangencyReport ta = tangency_defect(a, f6.plane_field());
  const TangencyReport tb = tangency_defect(b, f6.plane_field());
  CHECK(std::isfinite(ta.max_angle));
  CHECK(std::isfinite(tb.max_angle));
  double moved = 0.0;
  for (size_t i = 0; i < a.points.size(); ++i) moved = std::max(moved, (a.points[i] - b.points[i]).norm());
  MESSAGE("k = 6 tangency " << ta.max_angle << " (step 1e-3), " << tb.max_angle << " (step 5e-4); node shift "
                            << moved);

  // the defect against the invariant plane field shrinks with k
  SplittingOptions opts;
  std::vector<double> ks, means;
  for (int k = 1; k <= 6; ++k) {
    const SurfacePatch p = build_patch(pullback_frame(phi, initial, k), x0, 0.05, 7, coarse, k);
    const TangencyReport t = tangency_defect(p, [&](const Vec3& y) { return compute_splitting(phi, y, opts).E; });
    ks.push_back(k);
    means.push_back(std::log(t.mean_angle));
  }
  CHECK(fitted_slope(ks, means) < 0.0);
}

TEST_CASE("order mismatch") {
  const std::vector<Vec3> flat = order_mismatch(AdaptedFrame::constant(0.3, 0.7), Vec3(0.1, 0.2, 0.3), 0.05, 7);
  for (const Vec3& d : flat) CHECK(d.norm() < 1e-14);
  const std::vector<Vec3> c = order_mismatch(AdaptedFrame::contact(), Vec3::Zero(), 0.05, 5);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) {
      const double t = -0.05 + i * 0.025, s = -0.05 + j * 0.025;
      CHECK((c[i + 5 * j] - Vec3(0, 0, t * s)).norm() < 1e-8);
    }
}

TEST_CASE("pushforward norm identity") {
  const Vec3 x(0.2, 0.3, 0.4);
  const PushforwardCheck constant = pushforward_norm_check(AdaptedFrame::constant(0.3, 0.1), x, 0.2);
  CHECK(constant.lhs == doctest::Approx(1.0));
  CHECK(constant.rhs == doctest::Approx(1.0));
  const PushforwardCheck contact = pushforward_norm_check(AdaptedFrame::contact(), x, 0.7);
  CHECK(contact.lhs == doctest::Approx(1.0));
  CHECK(contact.rhs == doctest::Approx(1.0));
  FlowSpec spec;
  spec.step = 1e-3;
  const PushforwardCheck e = pushforward_norm_check(kExpFrame, x, 0.2, spec);
  CHECK(std::abs(e.lhs - 1.2214) <= 1e-5 + 3e-6);
  CHECK(std::abs(e.lhs - std::exp(0.2)) <= 1e-10);
  CHECK(std::abs(e.rhs - std::exp(0.2)) <= 1e-8);
  CHECK(e.rel_err <= 1e-4);
}

TEST_CASE("pushforward of Y along X") {
  const Vec3 x(0.3, 0.2, 0.1);
  for (double t : {0.05, -0.1}) {
    const PushSample s = push_difference(AdaptedFrame::contact(), x, t);
    CHECK(s.difference == doctest::Approx(std::abs(t)).epsilon(1e-9));
    CHECK(s.derivative_error < 1e-6);
  }
  const std::vector<PushSample> frozen =
      push_convergence(Diffeo::identity(), AdaptedFrame::contact(), x, {1, 2, 3}, 0.05);
  for (const auto& s : frozen) CHECK(s.difference == doctest::Approx(0.05).epsilon(1e-9));
  const std::vector<PushSample> lin =
      push_convergence(Diffeo::linear(paper_matrix()), AdaptedFrame::constant(0.1, 0.2), x, {1, 4, 8}, 0.05);
  for (const auto& s : lin) CHECK(s.difference < 1e-12);
}
