#include "splitkit/map_spec.hpp"

namespace splitkit {

namespace {

double number(const nlohmann::ordered_json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ValidationError(std::string("map spec: '") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

Vec3 vec3(const nlohmann::ordered_json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 3) {
    throw ValidationError(std::string("map spec: '") + key + "' must be an array of 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j.at(key)[i].is_number()) {
      throw ValidationError(std::string("map spec: '") + key + "' must hold numbers");
    }
    v[i] = j.at(key)[i].get<double>();
  }
  return v;
}

}  // namespace

Diffeo MapSpec::build() const {
  std::vector<Diffeo::Step> steps;
  for (const auto& s : shears) {
    steps.push_back({ShearPerturbation(s.axis, s.center, s.radius, s.amplitude), false});
  }
  steps.push_back({ToralAutomorphism(matrix), false});
  return Diffeo(std::move(steps));
}

nlohmann::ordered_json MapSpec::to_json() const {
  nlohmann::ordered_json j;
  j["matrix"] = nlohmann::ordered_json::array();
  for (const auto& row : matrix) j["matrix"].push_back({row[0], row[1], row[2]});
  j["shears"] = nlohmann::ordered_json::array();
  for (const auto& s : shears) {
    nlohmann::ordered_json e;
    e["axis"] = s.axis;
    e["center"] = {s.center[0], s.center[1], s.center[2]};
    e["radius"] = s.radius;
    e["amplitude"] = s.amplitude;
    j["shears"].push_back(e);
  }
  return j;
}

MapSpec MapSpec::from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ValidationError("map spec must be a JSON object");
  MapSpec spec;
  if (!j.contains("matrix") || !j.at("matrix").is_array() || j.at("matrix").size() != 3) {
    throw ValidationError("map spec: 'matrix' must be a 3x3 array of integers");
  }
  for (int r = 0; r < 3; ++r) {
    const auto& row = j.at("matrix")[r];
    if (!row.is_array() || row.size() != 3) {
      throw ValidationError("map spec: 'matrix' must be a 3x3 array of integers");
    }
    for (int c = 0; c < 3; ++c) {
      if (!row[c].is_number_integer()) throw ValidationError("map spec: matrix entries must be integers");
      spec.matrix[r][c] = row[c].get<long long>();
    }
  }
  // validates the determinant
  ToralAutomorphism check(spec.matrix);
  (void)check;

  if (j.contains("shears")) {
    if (!j.at("shears").is_array()) throw ValidationError("map spec: 'shears' must be an array");
    for (const auto& e : j.at("shears")) {
      if (!e.is_object() || !e.contains("axis") || !e.at("axis").is_number_integer()) {
        throw ValidationError("map spec: shear 'axis' must be an integer");
      }
      ShearSpec s;
      s.axis = e.at("axis").get<int>();
      s.center = vec3(e, "center");
      s.radius = number(e, "radius");
      s.amplitude = number(e, "amplitude");
      ShearPerturbation validate(s.axis, s.center, s.radius, s.amplitude);
      (void)validate;
      spec.shears.push_back(s);
    }
  }
  return spec;
}

MapSpec MapSpec::paper_linear() {
  MapSpec spec;
  spec.matrix = paper_matrix().entries();
  return spec;
}

MapSpec MapSpec::paper_perturbed(double amplitude, double radius) {
  MapSpec spec = paper_linear();
  spec.shears.push_back(ShearSpec{0, Vec3::Zero(), radius, amplitude});
  return spec;
}

int first_support_visit(const MapSpec& spec, const Vec3& x, int steps) {
  const Diffeo phi = spec.build();
  std::vector<ShearPerturbation> shears;
  for (const auto& s : spec.shears) shears.emplace_back(s.axis, s.center, s.radius, s.amplitude);
  Vec3 y = wrap_torus(x);
  for (int j = 0; j <= steps; ++j) {
    for (const auto& s : shears) {
      if (s.in_support(y)) return j;
    }
    y = phi.apply(y);
  }
  return -1;
}

}  // namespace splitkit
