// Copyright 2026 The octoarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment configuration: JSON schema (SI units, unit-suffixed keys),
// strict parsing with field-level errors, and canonical serialization.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "octoarm/dynamics.hpp"
#include "octoarm/energy_shaping.hpp"
#include "octoarm/muscles.hpp"
#include "octoarm/tasks.hpp"

namespace octoarm {

inline constexpr int kSchemaVersion = 1;

enum class TaskKind { kReach, kGrasp };
enum class SweepKind { kNone, kReachGrid, kRadius, kRotationE1, kRotationE2 };

struct SweepConfig {
  SweepKind kind = SweepKind::kNone;
  std::size_t grid_per_axis = 3;
  Vec3 cube_min{0.0, -0.10, -0.10};
  Vec3 cube_max{0.20, 0.10, 0.10};
  std::vector<double> radii{0.01, 0.02, 0.03, 0.04};
  std::vector<double> angles_deg{-60.0, -30.0, 0.0, 30.0, 60.0};
};

struct ExperimentConfig {
  RodParameters arm;
  Pose base = default_base_pose();
  MuscleTable muscles;

  TaskKind task = TaskKind::kReach;
  Vec3 target{0.01, 0.15, 0.06};
  double weight_position = 1.0e6;
  double weight_direction = 1.0e3;
  Cylinder cylinder{Vec3{0.06, -0.05, 0.02}, Vec3::UnitZ(), 0.02, 0.15};
  double wrap_start = 0.06;
  double obstacle_weight = 1.0e7;

  FbOptions solver;
  std::size_t sweep_max_iterations = 20000;
  StaticsOptions statics;

  bool dynamics_enabled = false;
  SimConfig dynamics;

  std::string output_dir = "out";
  bool write_trajectory = true;

  SweepConfig sweep;

  GraspTask grasp_task() const {
    return {cylinder, target, wrap_start, weight_position, weight_direction,
            obstacle_weight};
  }
};

namespace config_detail {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, consuming known keys and rejecting the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(join(path_, key), "must be finite");
    return d;
  }
  double positive(const std::string& key, double fallback) {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(join(path_, key), "must be positive");
    return d;
  }
  double non_negative(const std::string& key, double fallback) {
    const double d = number(key, fallback);
    if (!(d >= 0.0)) throw ConfigError(join(path_, key), "must be non-negative");
    return d;
  }
  // Numbers that may also be the string "inf".
  double extended(const std::string& key, double fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_string() && v.get<std::string>() == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    if (!v.is_number() || !(v.get<double>() > 0.0)) {
      throw ConfigError(join(path_, key), "expected a positive number or \"inf\"");
    }
    return v.get<double>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw ConfigError(join(path_, key), "expected a positive integer");
    }
    return static_cast<std::size_t>(v.get<long long>());
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
    return v.get<std::string>();
  }
  Vec3 vec3(const std::string& key, const Vec3& fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 3) {
      throw ConfigError(join(path_, key), "expected an array of 3 numbers");
    }
    Vec3 out;
    for (int k = 0; k < 3; ++k) {
      if (!v[k].is_number()) {
        throw ConfigError(join(path_, key), "expected an array of 3 numbers");
      }
      out[k] = v[k].get<double>();
    }
    if (!out.allFinite()) throw ConfigError(join(path_, key), "must be finite");
    return out;
  }
  std::vector<double> list(const std::string& key,
                           const std::vector<double>& fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) {
      throw ConfigError(join(path_, key), "expected a non-empty array of numbers");
    }
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) {
        throw ConfigError(join(path_, key), "expected a non-empty array of numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }
  Reader child(const std::string& key) {
    take(key);
    return Reader(j_.contains(key) ? j_.at(key) : empty_object(), join(path_, key));
  }
  const std::string& path() const { return path_; }

  // Any key not consumed is a typo or an unsupported option.
  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(join(path_, item.key()), "unknown key");
      }
    }
  }

 private:
  static const json& empty_object() {
    static const json e = json::object();
    return e;
  }
  bool take(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

inline json extended_to_json(double d) {
  if (std::isinf(d)) return "inf";
  return d;
}

inline const char* sweep_name(SweepKind k) {
  switch (k) {
    case SweepKind::kReachGrid: return "reach_grid";
    case SweepKind::kRadius: return "radius";
    case SweepKind::kRotationE1: return "rotation_e1";
    case SweepKind::kRotationE2: return "rotation_e2";
    case SweepKind::kNone: break;
  }
  return "none";
}

inline MuscleGroupSpec read_group(Reader r, const MuscleGroupSpec& d) {
  MuscleGroupSpec g;
  g.max_stress = r.non_negative("max_stress_Pa", d.max_stress);
  g.area_ratio = r.positive("area_ratio", d.area_ratio);
  g.offset = r.non_negative("offset_ratio", d.offset);
  if (g.offset >= 1.0) throw ConfigError(join(r.path(), "offset_ratio"), "must be below 1");
  r.finish();
  return g;
}

inline json group_to_json(const MuscleGroupSpec& g) {
  return {{"max_stress_Pa", g.max_stress},
          {"area_ratio", g.area_ratio},
          {"offset_ratio", g.offset}};
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using config_detail::Reader;
  ExperimentConfig c;
  Reader root(j, "");
  if (!root.has("schema_version")) {
    throw ConfigError("schema_version", "missing");
  }
  if (root.count("schema_version", 1) != static_cast<std::size_t>(kSchemaVersion)) {
    throw ConfigError("schema_version", "unsupported version");
  }

  {
    Reader a = root.child("arm");
    const RodParameters d;
    c.arm.length = a.positive("length_m", d.length);
    c.arm.radius_base = a.positive("radius_base_m", d.radius_base);
    c.arm.radius_tip = a.positive("radius_tip_m", d.radius_tip);
    if (c.arm.radius_tip > c.arm.radius_base) {
      throw ConfigError("arm.radius_tip_m", "must not exceed radius_base_m");
    }
    c.arm.youngs_modulus = a.positive("youngs_modulus_Pa", d.youngs_modulus);
    c.arm.shear_modulus = a.positive("shear_modulus_Pa", d.shear_modulus);
    c.arm.density = a.positive("density_kg_per_m3", d.density);
    c.arm.damping_linear = a.positive("damping_linear_per_s", d.damping_linear);
    c.arm.damping_angular = a.positive("damping_angular_per_s", d.damping_angular);
    c.arm.elements = a.count("elements", d.elements);
    c.arm.rest_nu = a.vec3("rest_shear_stretch", d.rest_nu);
    if (!(c.arm.rest_nu.z() > 0.0)) {
      throw ConfigError("arm.rest_shear_stretch", "axial component must be positive");
    }
    c.arm.rest_kappa = a.vec3("rest_curvature_per_m", d.rest_kappa);
    c.base.x = a.vec3("base_position_m", c.base.x);
    const Vec3 d1 = a.vec3("base_d1", c.base.d1());
    const Vec3 d3 = a.vec3("base_d3", c.base.d3());
    if (std::abs(d1.norm() - 1.0) > 1e-9 || std::abs(d3.norm() - 1.0) > 1e-9 ||
        std::abs(d1.dot(d3)) > 1e-9) {
      throw ConfigError("arm.base_d1", "base_d1 and base_d3 must be orthonormal");
    }
    c.base.Q.col(0) = d1;
    c.base.Q.col(1) = d3.cross(d1);
    c.base.Q.col(2) = d3;
    a.finish();
  }
  {
    Reader m = root.child("muscles");
    const MuscleTable d;
    c.muscles.transverse = config_detail::read_group(m.child("transverse"), d.transverse);
    c.muscles.longitudinal =
        config_detail::read_group(m.child("longitudinal"), d.longitudinal);
    c.muscles.oblique = config_detail::read_group(m.child("oblique"), d.oblique);
    c.muscles.oblique_cycles = m.non_negative("oblique_cycles", d.oblique_cycles);
    m.finish();
  }
  {
    Reader t = root.child("task");
    const std::string type = t.string("type", "reach");
    if (type == "reach") {
      c.task = TaskKind::kReach;
    } else if (type == "grasp") {
      c.task = TaskKind::kGrasp;
    } else {
      throw ConfigError("task.type", "expected \"reach\" or \"grasp\"");
    }
    c.weight_position = t.non_negative("weight_position", c.weight_position);
    c.weight_direction = t.non_negative("weight_direction", c.weight_direction);
    // Grasp keys are accepted for either type so one file can drive both.
    Reader cyl = t.child("cylinder");
    c.cylinder.center = cyl.vec3("center_m", c.cylinder.center);
    c.cylinder.axis = cyl.vec3("axis", c.cylinder.axis);
    if (!(c.cylinder.axis.norm() > 0.0)) {
      throw ConfigError("task.cylinder.axis", "must be non-zero");
    }
    c.cylinder.axis.normalize();
    c.cylinder.radius = cyl.positive("radius_m", c.cylinder.radius);
    c.cylinder.height = cyl.extended("height_m", c.cylinder.height);
    cyl.finish();
    c.target = t.vec3("target_m", c.task == TaskKind::kGrasp ? c.cylinder.center : c.target);
    if (c.task == TaskKind::kGrasp && !(cylinder_distance(c.cylinder, c.target).value < 0.0)) {
      throw ConfigError("task.target_m", "grasp target must lie inside the cylinder");
    }
    c.wrap_start = t.non_negative("wrap_start_m", 0.3 * c.arm.length);
    if (c.wrap_start > c.arm.length) {
      throw ConfigError("task.wrap_start_m", "must not exceed the arm length");
    }
    c.obstacle_weight = t.non_negative("obstacle_weight", c.obstacle_weight);
    t.finish();
  }
  {
    Reader s = root.child("solver");
    c.solver.step = s.positive("step_size", c.solver.step);
    c.solver.max_iterations = s.count("max_iterations", c.solver.max_iterations);
    c.sweep_max_iterations = s.count("sweep_max_iterations", c.sweep_max_iterations);
    c.solver.tolerance = s.positive("tolerance", c.solver.tolerance);
    c.solver.window = s.count("window", c.solver.window);
    c.solver.growth = s.positive("step_growth", c.solver.growth);
    c.solver.growth_after = s.count("step_growth_after", c.solver.growth_after);
    c.statics.max_newton = s.count("statics_max_newton", c.statics.max_newton);
    c.statics.converged_tolerance =
        s.positive("statics_tolerance", c.statics.converged_tolerance);
    s.finish();
  }
  {
    Reader d = root.child("dynamics");
    c.dynamics_enabled = d.boolean("enabled", c.dynamics_enabled);
    c.dynamics.time_step = d.positive("time_step_s", c.dynamics.time_step);
    c.dynamics.duration = d.non_negative("duration_s", c.dynamics.duration);
    c.dynamics.ramp_time = d.non_negative("ramp_time_s", c.dynamics.ramp_time);
    const std::string shape = d.string("ramp_shape", "linear");
    if (shape == "linear") {
      c.dynamics.ramp = RampShape::kLinear;
    } else if (shape == "smooth") {
      c.dynamics.ramp = RampShape::kSmooth;
    } else {
      throw ConfigError("dynamics.ramp_shape", "expected \"linear\" or \"smooth\"");
    }
    c.dynamics.record_stride = d.count("record_stride", 1000);
    d.finish();
  }
  {
    Reader o = root.child("output");
    c.output_dir = o.string("directory", c.output_dir);
    c.write_trajectory = o.boolean("trajectory", c.write_trajectory);
    o.finish();
  }
  {
    Reader s = root.child("sweep");
    const std::string kind = s.string("kind", "none");
    if (kind == "none") {
      c.sweep.kind = SweepKind::kNone;
    } else if (kind == "reach_grid") {
      c.sweep.kind = SweepKind::kReachGrid;
    } else if (kind == "radius") {
      c.sweep.kind = SweepKind::kRadius;
    } else if (kind == "rotation_e1") {
      c.sweep.kind = SweepKind::kRotationE1;
    } else if (kind == "rotation_e2") {
      c.sweep.kind = SweepKind::kRotationE2;
    } else {
      throw ConfigError("sweep.kind",
                        "expected none, reach_grid, radius, rotation_e1 or rotation_e2");
    }
    c.sweep.grid_per_axis = s.count("grid_per_axis", c.sweep.grid_per_axis);
    c.sweep.cube_min = s.vec3("cube_min_m", c.sweep.cube_min);
    c.sweep.cube_max = s.vec3("cube_max_m", c.sweep.cube_max);
    c.sweep.radii = s.list("radii_m", c.sweep.radii);
    for (double r : c.sweep.radii) {
      if (!(r > 0.0)) throw ConfigError("sweep.radii_m", "radii must be positive");
    }
    c.sweep.angles_deg = s.list("angles_deg", c.sweep.angles_deg);
    s.finish();
  }
  root.finish();
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Full, canonical form of the configuration (every key written).
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using config_detail::to_json;
  using nlohmann::json;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["arm"] = {{"length_m", c.arm.length},
              {"radius_base_m", c.arm.radius_base},
              {"radius_tip_m", c.arm.radius_tip},
              {"youngs_modulus_Pa", c.arm.youngs_modulus},
              {"shear_modulus_Pa", c.arm.shear_modulus},
              {"density_kg_per_m3", c.arm.density},
              {"damping_linear_per_s", c.arm.damping_linear},
              {"damping_angular_per_s", c.arm.damping_angular},
              {"elements", c.arm.elements},
              {"rest_shear_stretch", to_json(c.arm.rest_nu)},
              {"rest_curvature_per_m", to_json(c.arm.rest_kappa)},
              {"base_position_m", to_json(c.base.x)},
              {"base_d1", to_json(c.base.d1())},
              {"base_d3", to_json(c.base.d3())}};
  j["muscles"] = {{"transverse", config_detail::group_to_json(c.muscles.transverse)},
                  {"longitudinal", config_detail::group_to_json(c.muscles.longitudinal)},
                  {"oblique", config_detail::group_to_json(c.muscles.oblique)},
                  {"oblique_cycles", c.muscles.oblique_cycles}};
  j["task"] = {{"type", c.task == TaskKind::kReach ? "reach" : "grasp"},
               {"target_m", to_json(c.target)},
               {"weight_position", c.weight_position},
               {"weight_direction", c.weight_direction},
               {"cylinder",
                {{"center_m", to_json(c.cylinder.center)},
                 {"axis", to_json(c.cylinder.axis)},
                 {"radius_m", c.cylinder.radius},
                 {"height_m", config_detail::extended_to_json(c.cylinder.height)}}},
               {"wrap_start_m", c.wrap_start},
               {"obstacle_weight", c.obstacle_weight}};
  j["solver"] = {{"step_size", c.solver.step},
                 {"max_iterations", c.solver.max_iterations},
                 {"sweep_max_iterations", c.sweep_max_iterations},
                 {"tolerance", c.solver.tolerance},
                 {"window", c.solver.window},
                 {"step_growth", c.solver.growth},
                 {"step_growth_after", c.solver.growth_after},
                 {"statics_max_newton", c.statics.max_newton},
                 {"statics_tolerance", c.statics.converged_tolerance}};
  j["dynamics"] = {{"enabled", c.dynamics_enabled},
                   {"time_step_s", c.dynamics.time_step},
                   {"duration_s", c.dynamics.duration},
                   {"ramp_time_s", c.dynamics.ramp_time},
                   {"ramp_shape", c.dynamics.ramp == RampShape::kLinear ? "linear" : "smooth"},
                   {"record_stride", c.dynamics.record_stride}};
  j["output"] = {{"directory", c.output_dir}, {"trajectory", c.write_trajectory}};
  j["sweep"] = {{"kind", config_detail::sweep_name(c.sweep.kind)},
                {"grid_per_axis", c.sweep.grid_per_axis},
                {"cube_min_m", to_json(c.sweep.cube_min)},
                {"cube_max_m", to_json(c.sweep.cube_max)},
                {"radii_m", c.sweep.radii},
                {"angles_deg", c.sweep.angles_deg}};
  return j;
}

// FNV-1a 64 of the canonical serialization, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace octoarm
