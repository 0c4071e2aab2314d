#include <doctest.h>

#include <cmath>

#include "splitkit/bracket.hpp"
#include "splitkit/map_spec.hpp"
#include "splitkit/uniqueness.hpp"

using namespace splitkit;

TEST_CASE("Hartman data for the linear map") {
  const Diffeo lin = Diffeo::linear(paper_matrix());
  const RealEigen r = real_eigen(paper_matrix().matrix());
  const Coefficients c = adapted_coefficients(Plane2(r.vectors.col(0), r.vectors.col(1)));
  const HartmanData h = hartman_report(lin, AdaptedFrame::constant(c.a, c.b), SplittingOptions{}, Slice{}, 6);
  REQUIRE(h.sup_derivative.size() == 6);
  for (double v : h.sup_derivative) CHECK(v < 1e-9);
  for (double v : h.distance) CHECK(v < 1e-9);
  CHECK(h.bounded);

  // from the coordinate plane the frames converge at the rate 0.969^k
  const HartmanData g = hartman_report(lin, AdaptedFrame::constant(0, 0), SplittingOptions{}, Slice{}, 6);
  for (double v : g.sup_derivative) CHECK(v < 1e-9);
  CHECK(g.distance.back() < g.distance.front());
}

TEST_CASE("Hartman data for a synthetic sequence") {
  // a_k = a + sin(2 pi x3) / k with a = 0.2 x3
  const auto frames = [](int k) {
    return AdaptedFrame([k](const Vec3& x) { return Coefficients{0.2 * x[2] + std::sin(2 * M_PI * x[2]) / k, 0.0}; });
  };
  const AdaptedFrame limit([](const Vec3& x) { return Coefficients{0.2 * x[2], 0.0}; });
  Slice slice;
  slice.x3_lo = 0.0;
  slice.x3_hi = 1.0;
  slice.n = 9;
  const HartmanData h = hartman_report(frames, limit, slice, 10);
  for (size_t i = 0; i < h.ks.size(); ++i) {
    const int k = h.ks[i];
    CHECK(h.distance[i] == doctest::Approx(1.0 / k).epsilon(1e-9));
    CHECK(h.sup_derivative[i] <= 2 * M_PI / k + 0.2 + 1e-6);
  }
  CHECK(h.distance_decreasing);
  CHECK(h.bounded);
  CHECK(h.consistent);
}

TEST_CASE("Hartman data for the perturbed map is finite") {
  const Diffeo phi = MapSpec::paper_perturbed().build();
  const HartmanData h = hartman_report(phi, AdaptedFrame::constant(0, 0), SplittingOptions{}, Slice{}, 15);
  REQUIRE(h.sup_derivative.size() == 15);
  for (double v : h.sup_derivative) CHECK(std::isfinite(v));
  for (double v : h.distance) CHECK(std::isfinite(v));
}

TEST_CASE("leaves of the linear map") {
  const Diffeo lin = Diffeo::linear(paper_matrix());
  const Vec3 x0(0.1, 0.2, 0.3);
  const AdaptedFrame frame = AdaptedFrame::from_plane_field(constant_plane_field(compute_splitting(lin, x0).E));
  const LeafComparison leaf = leaf_divergence(frame, x0, 0.05, 21, 1e-4);
  CHECK(leaf.order_mismatch < 1e-9);
  CHECK(std::abs(leaf.lipschitz - 1.0) < 1e-6);
  CHECK(std::abs(leaf.lipschitz_half / leaf.lipschitz - 1.0) < 0.1);
}

TEST_CASE("order mismatch is controlled by the bracket") {
  const double eps = 0.05;
  const Vec3 x0(0.3, 0.4, 0.5);
  // calibrate on the contact field, where |c| = 1
  const double k_const = leaf_divergence(AdaptedFrame::contact(), Vec3::Zero(), eps, 11, 1e-4).order_mismatch / (eps * eps);
  CHECK(k_const == doctest::Approx(1.0).epsilon(1e-6));
  for (double amp : {0.05, 0.1, 0.2}) {
    const AdaptedFrame f = AdaptedFrame::helical(amp);
    double eta = 0.0;
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j)
        for (int l = -2; l <= 2; ++l)
          eta = std::max(eta, std::abs(bracket_coefficient(f, x0 + Vec3(i, j, l) * (2 * eps / 4)).c));
    const double mism = leaf_divergence(f, x0, eps, 11, 1e-4).order_mismatch;
    // transporting d3 along flows of length eps scales it by at most
    // exp(eps L) per flow, L bounding the d3-derivatives of a and b
    const double lip = 2 * M_PI * amp * std::sqrt(2.0);
    CHECK(mism <= k_const * eta * eps * eps * std::exp(2 * eps * lip) + 1e-9);
    MESSAGE("amplitude " << amp << ": mismatch / (K eta eps^2) = " << mism / (k_const * eta * eps * eps));
  }
}

TEST_CASE("leaf estimate stable under halving the seed offset on the perturbed map") {
  const Diffeo phi = MapSpec::paper_perturbed().build();
  const Vec3 x0(0.1, 0.2, 0.3);
  const Chart box = Chart::box(x0, 0.15);
  const AdaptedFrame frame = cached_frame(limit_frame(phi, SplittingOptions{}), box, 9);
  FlowSpec spec;
  spec.chart = box;
  const LeafComparison leaf = leaf_divergence(frame, x0, 0.05, 11, 1e-4, spec);
  CHECK(std::isfinite(leaf.lipschitz));
  CHECK(std::abs(leaf.lipschitz_half / leaf.lipschitz - 1.0) < 0.1);
}
