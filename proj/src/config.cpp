#include "splitkit/config.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace splitkit {

namespace {

using Json = nlohmann::ordered_json;

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ValidationError(where + "." + key + " must be a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ValidationError(where + "." + key + " must be an integer");
  } else {
    if (!v.is_number()) throw ValidationError(where + "." + key + " must be a number");
  }
  out = v.get<T>();
}

Vec3 read_point(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw ValidationError(where + " must be an array of 3 numbers");
  Vec3 p;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw ValidationError(where + " must hold numbers");
    p[i] = v[i].get<double>();
  }
  if (!p.allFinite()) throw ValidationError(where + " must be finite");
  return p;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

AdaptedFrame InitialPlaneSpec::frame() const {
  if (kind == "coordinate") return AdaptedFrame::constant(0.0, 0.0);
  if (kind == "helical") return AdaptedFrame::helical(epsilon);
  if (kind == "contact") return AdaptedFrame::contact();
  throw ValidationError("initial_plane.kind must be coordinate, helical or contact");
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["map"] = map.to_json();
  j["initial_plane"] = {{"kind", initial_plane.kind}, {"epsilon", initial_plane.epsilon}};
  j["points"] = Json::array();
  for (const auto& p : points) j["points"].push_back({p[0], p[1], p[2]});
  j["random_points"] = random_points;
  j["seed"] = seed;
  j["splitting"] = {{"k_max", k_max},
                    {"pullback_k_min", pullback_k_min},
                    {"pullback_k_max", pullback_k_max},
                    {"step_tol", step_tol},
                    {"residual_tol", residual_tol},
                    {"pullback_steps", pullback_steps},
                    {"cone_steps", cone_steps}};
  j["bracket"] = {{"h", h}, {"fd_k_max", fd_k_max}, {"projected_k", projected_k}, {"invariance_k", invariance_k}};
  j["surface"] = {{"eps", eps}, {"n", n}, {"step", step}, {"t", t}, {"ks", surface_ks}};
  j["uniqueness"] = {{"slice",
                      {{"x2", slice.x2},
                       {"x1_lo", slice.x1_lo},
                       {"x1_hi", slice.x1_hi},
                       {"x3_lo", slice.x3_lo},
                       {"x3_hi", slice.x3_hi},
                       {"n", slice.n}}},
                     {"k_max", hartman_k_max},
                     {"delta", delta}};
  j["output_dir"] = output_dir;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  ExperimentConfig c;
  check_keys(j,
             {"map", "initial_plane", "points", "random_points", "seed", "splitting", "bracket", "surface",
              "uniqueness", "output_dir"},
             "config");
  if (j.contains("map")) c.map = MapSpec::from_json(j.at("map"));
  if (j.contains("initial_plane")) {
    const Json& ip = j.at("initial_plane");
    check_keys(ip, {"kind", "epsilon"}, "initial_plane");
    read(ip, "kind", c.initial_plane.kind, "initial_plane");
    read(ip, "epsilon", c.initial_plane.epsilon, "initial_plane");
    c.initial_plane.frame();
  }
  if (j.contains("points")) {
    require(j.at("points").is_array(), "points must be an array of [x1, x2, x3]");
    c.points.clear();
    for (const auto& p : j.at("points")) c.points.push_back(read_point(p, "points entry"));
  }
  read(j, "random_points", c.random_points, "config");
  if (j.contains("seed")) {
    require(j.at("seed").is_number_unsigned(), "seed must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("splitting")) {
    const Json& s = j.at("splitting");
    check_keys(s,
               {"k_max", "pullback_k_min", "pullback_k_max", "step_tol", "residual_tol", "pullback_steps",
                "cone_steps"},
               "splitting");
    read(s, "k_max", c.k_max, "splitting");
    read(s, "pullback_k_min", c.pullback_k_min, "splitting");
    read(s, "pullback_k_max", c.pullback_k_max, "splitting");
    read(s, "step_tol", c.step_tol, "splitting");
    read(s, "residual_tol", c.residual_tol, "splitting");
    read(s, "pullback_steps", c.pullback_steps, "splitting");
    read(s, "cone_steps", c.cone_steps, "splitting");
  }
  if (j.contains("bracket")) {
    const Json& b = j.at("bracket");
    check_keys(b, {"h", "fd_k_max", "projected_k", "invariance_k"}, "bracket");
    read(b, "h", c.h, "bracket");
    read(b, "fd_k_max", c.fd_k_max, "bracket");
    read(b, "projected_k", c.projected_k, "bracket");
    read(b, "invariance_k", c.invariance_k, "bracket");
  }
  if (j.contains("surface")) {
    const Json& s = j.at("surface");
    check_keys(s, {"eps", "n", "step", "t", "ks"}, "surface");
    read(s, "eps", c.eps, "surface");
    read(s, "n", c.n, "surface");
    read(s, "step", c.step, "surface");
    read(s, "t", c.t, "surface");
    if (s.contains("ks")) {
      require(s.at("ks").is_array(), "surface.ks must be an array of integers");
      c.surface_ks.clear();
      for (const auto& k : s.at("ks")) {
        require(k.is_number_integer() && k.get<int>() >= 0, "surface.ks must hold integers >= 0");
        c.surface_ks.push_back(k.get<int>());
      }
    }
  }
  if (j.contains("uniqueness")) {
    const Json& u = j.at("uniqueness");
    check_keys(u, {"slice", "k_max", "delta"}, "uniqueness");
    if (u.contains("slice")) {
      const Json& sl = u.at("slice");
      check_keys(sl, {"x2", "x1_lo", "x1_hi", "x3_lo", "x3_hi", "n"}, "uniqueness.slice");
      read(sl, "x2", c.slice.x2, "uniqueness.slice");
      read(sl, "x1_lo", c.slice.x1_lo, "uniqueness.slice");
      read(sl, "x1_hi", c.slice.x1_hi, "uniqueness.slice");
      read(sl, "x3_lo", c.slice.x3_lo, "uniqueness.slice");
      read(sl, "x3_hi", c.slice.x3_hi, "uniqueness.slice");
      read(sl, "n", c.slice.n, "uniqueness.slice");
    }
    read(u, "k_max", c.hartman_k_max, "uniqueness");
    read(u, "delta", c.delta, "uniqueness");
  }
  read(j, "output_dir", c.output_dir, "config");

  require(c.random_points >= 0, "random_points must be >= 0");
  require(!c.points.empty() || c.random_points > 0, "at least one sample point is required");
  require(c.k_max >= 1, "splitting.k_max must be >= 1");
  require(c.pullback_k_min >= 2 && c.pullback_k_max >= c.pullback_k_min,
          "splitting needs 2 <= pullback_k_min <= pullback_k_max");
  require(c.step_tol > 0.0 && c.residual_tol > 0.0, "splitting tolerances must be positive");
  require(c.pullback_steps >= 1, "splitting.pullback_steps must be >= 1");
  require(c.cone_steps >= 1, "splitting.cone_steps must be >= 1");
  require(c.h > 0.0, "bracket.h must be positive");
  require(c.fd_k_max >= 0 && c.projected_k >= 0 && c.invariance_k >= 1, "bracket frame indices out of range");
  require(c.eps > 0.0 && c.eps < 0.25, "surface.eps must lie in (0, 0.25)");
  require(c.n >= 3, "surface.n must be >= 3");
  require(c.step > 0.0, "surface.step must be positive");
  require(!c.surface_ks.empty(), "surface.ks must not be empty");
  require(c.slice.n >= 2, "uniqueness.slice.n must be >= 2");
  require(c.hartman_k_max >= 1, "uniqueness.k_max must be >= 1");
  require(c.delta > 0.0, "uniqueness.delta must be positive");
  require(!c.output_dir.empty(), "output_dir must not be empty");
  return c;
}

std::string ExperimentConfig::dump() const { return to_json().dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

std::vector<Vec3> ExperimentConfig::sample_points() const {
  std::vector<Vec3> out;
  for (const auto& p : points) out.push_back(wrap_torus(p));
  std::mt19937_64 rng(seed);
  // bit-level uniform in [0, 1) so results do not depend on the library's
  // distribution implementation
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < random_points; ++i) {
    const double a = uniform(), b = uniform(), c = uniform();
    out.emplace_back(a, b, c);
  }
  return out;
}

SplittingOptions ExperimentConfig::splitting_options() const {
  SplittingOptions o;
  o.e0 = initial_plane.frame().plane_field();
  o.k_min = pullback_k_min;
  o.k_max = pullback_k_max;
  o.step_tol = step_tol;
  o.residual_tol = residual_tol;
  return o;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace splitkit
