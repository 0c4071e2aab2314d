// Experiment configuration (JSON) and its canonical serialization.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitkit/frames.hpp"
#include "splitkit/map_spec.hpp"
#include "splitkit/uniqueness.hpp"

namespace splitkit {

/// Initial plane field: "coordinate" (span(e1, e2)), "helical" (rotating
/// with x3, amplitude epsilon) or "contact" (ker(dx3 - x1 dx2)).
struct InitialPlaneSpec {
  std::string kind = "coordinate";
  double epsilon = 0.1;

  AdaptedFrame frame() const;
};

struct ExperimentConfig {
  MapSpec map = MapSpec::paper_perturbed();
  InitialPlaneSpec initial_plane;
  std::vector<Vec3> points{Vec3(0.1, 0.2, 0.3), Vec3(0.37, 0.61, 0.83), Vec3(0.9, 0.05, 0.45)};
  int random_points = 0;
  std::uint64_t seed = 1;

  // splitting
  int k_max = 20;
  int pullback_k_min = 32;
  int pullback_k_max = 2048;
  double step_tol = 1e-10;
  double residual_tol = 1e-6;
  int pullback_steps = 60;
  int cone_steps = 10;

  // bracket
  double h = 1e-4;
  int fd_k_max = 3;
  int projected_k = 5;
  int invariance_k = 3;

  // surface
  double eps = 0.05;
  int n = 21;
  double step = 1e-3;
  double t = 0.05;
  std::vector<int> surface_ks{1, 2, 3, 4, 5, 6};

  // uniqueness
  Slice slice;
  int hartman_k_max = 15;
  double delta = 1e-4;

  std::string output_dir = "splitkit_out";

  nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::ordered_json& j);

  /// Canonical text: two-space indented JSON plus a trailing newline.
  std::string dump() const;
  static ExperimentConfig parse(const std::string& text);

  /// Explicit points followed by random_points uniform points from seed.
  std::vector<Vec3> sample_points() const;
  SplittingOptions splitting_options() const;
};

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

std::string read_file(const std::string& path);

}  // namespace splitkit
