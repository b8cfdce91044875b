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

// Task objectives for the static control design: reaching a tip pose and
// wrapping around a cylinder, plus the error metrics reported for each.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "octoarm/rod.hpp"

namespace octoarm {

// Cost value with its gradients in the position and in the rotation matrix
// entries (dQ(i, j) = d cost / d Q(i, j)).
struct PoseCost {
  double value = 0.0;
  Vec3 dx{Vec3::Zero()};
  Mat3 dQ{Mat3::Zero()};

  PoseCost& operator+=(const PoseCost& o) {
    value += o.value;
    dx += o.dx;
    dQ += o.dQ;
    return *this;
  }
  PoseCost operator*(double w) const { return {w * value, w * dx, w * dQ}; }
};

// Running task cost on nodes and terminal cost on the tip. Node costs come
// back already multiplied by their quadrature weight.
class TaskObjective {
 public:
  virtual ~TaskObjective() = default;
  virtual std::string_view kind() const = 0;
  virtual PoseCost node_cost(std::size_t /*node*/, const Pose& /*q*/) const {
    return {};
  }
  virtual PoseCost terminal_cost(const Pose& /*tip*/) const { return {}; }
};

// Base pose of the arm: at the origin, pointing along e1, suckers (d1)
// facing -e2.
inline Pose default_base_pose() {
  Pose q;
  q.Q.col(0) = -Vec3::UnitY();
  q.Q.col(1) = -Vec3::UnitZ();
  q.Q.col(2) = Vec3::UnitX();
  return q;
}

inline std::vector<Pose> straight_pose(const RodProperties& rod,
                                       const Pose& base) {
  const std::vector<Strain> rest(rod.elements(), rod.rest_strain());
  return reconstruct_pose(base, rest, rod.grid());
}

// ---------------------------------------------------------------- reaching

struct ReachTask {
  Vec3 target{Vec3::Zero()};
  Mat3 target_frame{Mat3::Identity()};
  double weight_position = 1.0e6;
  double weight_direction = 1.0e3;
};

// Target frame: d3 along the bearing from the tip, d2 normal to the plane
// spanned by the bearings from base and tip.
inline Mat3 reach_frame(const Vec3& target, std::span<const Pose> pose) {
  if (pose.size() < 2) throw InvalidArgument("reach_frame: empty pose field");
  const Vec3 to_base = target - pose.front().x;
  const Vec3 to_tip = target - pose.back().x;
  if (to_base.norm() == 0.0 || to_tip.norm() == 0.0) {
    throw InvalidArgument("reach_frame: target coincides with the arm end");
  }
  const Vec3 b0 = to_base.normalized();
  const Vec3 bl = to_tip.normalized();
  const Vec3 normal = b0.cross(bl);
  if (normal.norm() < 1e-8) {
    throw DegenerateFrame("reach_frame: target colinear with the arm");
  }
  Mat3 q;
  q.col(2) = bl;
  q.col(1) = normal.normalized();
  q.col(0) = q.col(1).cross(q.col(2));
  return q;
}

// Builds the task from the initial pose, falling back to the initial d2 at
// the tip when the bearing plane is undefined.
inline ReachTask make_reach_task(const Vec3& target,
                                 std::span<const Pose> initial_pose,
                                 double weight_position = 1.0e6,
                                 double weight_direction = 1.0e3) {
  ReachTask task{target, Mat3::Identity(), weight_position, weight_direction};
  try {
    task.target_frame = reach_frame(target, initial_pose);
  } catch (const DegenerateFrame&) {
    const Vec3 d3 = (target - initial_pose.back().x).normalized();
    Vec3 d2 = initial_pose.back().d2();
    d2 = (d2 - d2.dot(d3) * d3).normalized();
    task.target_frame.col(2) = d3;
    task.target_frame.col(1) = d2;
    task.target_frame.col(0) = d2.cross(d3);
  }
  return task;
}

inline PoseCost terminal_cost_reach(const Pose& tip, const ReachTask& task) {
  const Vec3 dx = tip.x - task.target;
  const Mat3 dq = tip.Q - task.target_frame;
  return {0.5 * task.weight_position * dx.squaredNorm() +
              0.5 * task.weight_direction * dq.squaredNorm(),
          task.weight_position * dx, task.weight_direction * dq};
}

class ReachObjective final : public TaskObjective {
 public:
  explicit ReachObjective(ReachTask task) : task_(std::move(task)) {}
  std::string_view kind() const override { return "reach"; }
  PoseCost terminal_cost(const Pose& tip) const override {
    return terminal_cost_reach(tip, task_);
  }
  const ReachTask& task() const { return task_; }

 private:
  ReachTask task_;
};

struct ReachErrors {
  double position = 0.0;
  double direction = 0.0;
};

inline ReachErrors reach_errors(const Pose& tip, const ReachTask& task,
                                double length) {
  return {(task.target - tip.x).norm() / length,
          (task.target_frame - tip.Q).squaredNorm() / 8.0};
}

// ---------------------------------------------------------------- grasping

// Solid cylinder; height may be infinite.
struct Cylinder {
  Vec3 center{Vec3::Zero()};
  Vec3 axis{Vec3::UnitZ()};
  double radius = 0.02;
  double height = std::numeric_limits<double>::infinity();
};

struct SignedDistance {
  double value = 0.0;
  Vec3 gradient{Vec3::Zero()};
};

// Signed distance from x to the cylinder surface (negative inside).
inline SignedDistance cylinder_distance(const Cylinder& c, const Vec3& x) {
  const Vec3 a = c.axis.normalized();
  const Vec3 p = x - c.center;
  const double z = p.dot(a);
  const Vec3 radial = p - z * a;
  const double rho = radial.norm();
  Vec3 radial_dir;
  if (rho > 0.0) {
    radial_dir = radial / rho;
  } else {
    // On the axis: any direction normal to it.
    radial_dir = a.unitOrthogonal();
  }
  const double dr = rho - c.radius;
  const double half = 0.5 * c.height;
  const Vec3 axial_dir = (z >= 0.0 ? 1.0 : -1.0) * a;
  if (!std::isfinite(half)) return {dr, radial_dir};
  const double dz = std::abs(z) - half;
  if (dr > 0.0 && dz > 0.0) {
    const double d = std::hypot(dr, dz);
    return {d, (dr * radial_dir + dz * axial_dir) / d};
  }
  if (dr >= dz) return {dr, radial_dir};
  return {dz, axial_dir};
}

struct GraspTask {
  Cylinder cylinder;
  Vec3 target{Vec3::Zero()};  // interior point the arm wraps around
  double wrap_start = 0.06;   // s' in meters
  double weight_position = 1.0e6;
  double weight_direction = 1.0e3;
  double obstacle_weight = 1.0e7;
};

// Wrap terms of the running cost: surface gap to the target sphere and
// sucker alignment with the bearing b = (x* - x) / |x* - x|.
inline PoseCost grasp_wrap_density(const Pose& q, double radius,
                                   const GraspTask& task) {
  PoseCost out;
  const Vec3 to_target = task.target - q.x;
  const double dist = to_target.norm();
  if (!(dist > 0.0)) {
    out.value = 0.5 * task.weight_position * radius * radius +
                0.5 * task.weight_direction;
    return out;
  }
  const Vec3 b = to_target / dist;
  const Vec3 d1 = q.d1();
  const double gap = dist - radius;
  out.value = 0.5 * task.weight_position * gap * gap +
              0.5 * task.weight_direction * (1.0 - b.dot(d1));
  out.dx = -task.weight_position * gap * b +
           0.5 * task.weight_direction * (d1 - b.dot(d1) * b) / dist;
  out.dQ.col(0) = -0.5 * task.weight_direction * b;
  return out;
}

// Quadratic hinge on the penetration r - dist(x, C).
inline PoseCost obstacle_penalty(const Pose& q, double radius,
                                 const GraspTask& task) {
  PoseCost out;
  const SignedDistance sd = cylinder_distance(task.cylinder, q.x);
  const double violation = radius - sd.value;
  if (violation > 0.0) {
    out.value = task.obstacle_weight * violation * violation;
    out.dx = -2.0 * task.obstacle_weight * violation * sd.gradient;
  }
  return out;
}

inline PoseCost grasp_lagrangian(double s, double radius, const Pose& q,
                                 const GraspTask& task) {
  PoseCost out = obstacle_penalty(q, radius, task);
  if (s >= task.wrap_start) out += grasp_wrap_density(q, radius, task);
  return out;
}

// First node index inside the wrap region.
inline std::size_t wrap_start_node(const Grid& grid, double wrap_start) {
  const double k = std::ceil(wrap_start / grid.ds() - 1e-9);
  if (k <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(k), grid.elements());
}

// Trapezoid weight of node i over [s_{first}, L].
inline double wrap_weight(const Grid& grid, std::size_t first, std::size_t i) {
  if (i < first || first >= grid.elements()) return 0.0;
  return (i == first || i == grid.elements()) ? 0.5 * grid.ds() : grid.ds();
}

class GraspObjective final : public TaskObjective {
 public:
  GraspObjective(GraspTask task, const RodProperties& rod)
      : task_(std::move(task)), grid_(rod.grid()),
        first_(wrap_start_node(rod.grid(), task_.wrap_start)) {
    if (!(task_.cylinder.radius > 0.0)) {
      throw InvalidArgument("grasp: cylinder radius must be positive");
    }
    if (!(cylinder_distance(task_.cylinder, task_.target).value < 0.0)) {
      throw InvalidArgument("grasp: target must lie inside the cylinder");
    }
    radius_.reserve(grid_.nodes());
    for (std::size_t i = 0; i < grid_.nodes(); ++i) {
      radius_.push_back(rod.radius_at(grid_.node(i)));
    }
  }
  std::string_view kind() const override { return "grasp"; }

  PoseCost node_cost(std::size_t i, const Pose& q) const override {
    PoseCost out = obstacle_penalty(q, radius_[i], task_) * grid_.node_weight(i);
    const double wt = wrap_weight(grid_, first_, i);
    if (wt > 0.0) out += grasp_wrap_density(q, radius_[i], task_) * wt;
    return out;
  }

  const GraspTask& task() const { return task_; }
  std::size_t first_wrap_node() const { return first_; }

 private:
  GraspTask task_;
  Grid grid_;
  std::size_t first_;
  std::vector<double> radius_;
};

struct GraspErrors {
  double position = 0.0;
  double direction = 0.0;
  double max_penetration = 0.0;  // max over nodes of r(s) - dist(x, C)
};

inline GraspErrors grasp_errors(std::span<const Pose> pose,
                                const RodProperties& rod,
                                const GraspTask& task) {
  const Grid& grid = rod.grid();
  if (pose.size() != grid.nodes()) {
    throw InvalidArgument("grasp_errors: pose size mismatch");
  }
  const std::size_t first = wrap_start_node(grid, task.wrap_start);
  const double big_r = task.cylinder.radius;
  GraspErrors out;
  out.max_penetration = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const double r = rod.radius_at(grid.node(i));
    const double w = wrap_weight(grid, first, i);
    if (w > 0.0) {
      const Vec3 to_target = task.target - pose[i].x;
      const double dist = to_target.norm();
      const double gap = (dist - r) / big_r;
      const double align = dist > 0.0 ? to_target.dot(pose[i].d1()) / dist : 0.0;
      out.position += w * 0.5 * gap * gap;
      out.direction += w * 0.5 * (1.0 - align);
    }
    out.max_penetration = std::max(
        out.max_penetration, r - cylinder_distance(task.cylinder, pose[i].x).value);
  }
  return out;
}

}  // namespace octoarm
