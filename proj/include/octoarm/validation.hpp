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

// Self-checks run by `octoarm_cli validate`: finite-difference and
// quadrature cross-checks of the muscle model, the costate and the cost
// gradient, plus a short dynamics energy check on a coarse arm.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "octoarm/config.hpp"
#include "octoarm/dynamics.hpp"
#include "octoarm/energy_shaping.hpp"

namespace octoarm {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass() const { return std::isfinite(value) && value <= tolerance; }
};

namespace validation_detail {

inline Strain random_strain(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Strain eps;
  eps.nu = Vec3{0.05 * u(rng), 0.05 * u(rng), 1.0 + 0.1 * u(rng)};
  eps.kappa = Vec3{5.0 * u(rng), 5.0 * u(rng), 5.0 * u(rng)};
  return eps;
}

inline ChannelVector random_activation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ChannelVector a;
  for (auto& v : a) v = u(rng);
  return a;
}

inline double muscle_energy(const MuscleSet& set, std::size_t e,
                            const Strain& eps, const ChannelVector& a) {
  double w = 0.0;
  for (const MuscleFiber& f : set) {
    w += a[static_cast<Eigen::Index>(f.channel)] *
         muscle_stored_energy(f, muscle_strain(eps, f, e), e);
  }
  return w;
}

// Matrix-gradient of a pose cost, embedded as a 4x4 matrix.
inline Mat4 embed(const PoseCost& c) {
  Mat4 out = Mat4::Zero();
  out.topLeftCorner<3, 3>() = c.dQ;
  out.topRightCorner<3, 1>() = c.dx;
  return out;
}

}  // namespace validation_detail

// Muscle loads against central differences of the stored energy.
inline CheckResult check_muscle_gradient(const RodProperties& rod,
                                         const MuscleSet& set,
                                         std::mt19937_64& rng,
                                         int samples = 20) {
  using validation_detail::muscle_energy;
  std::uniform_int_distribution<std::size_t> pick(0, rod.elements() - 1);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const std::size_t e = pick(rng);
    const Strain eps = validation_detail::random_strain(rng);
    const ChannelVector a = validation_detail::random_activation(rng);
    const Vec6 loads = muscle_loads(eps, a, set, e).vector();
    Vec6 fd;
    for (int j = 0; j < 6; ++j) {
      const double h = 1e-6;
      Vec6 p = eps.vector(), m = eps.vector();
      p[j] += h;
      m[j] -= h;
      fd[j] = (muscle_energy(set, e, Strain::from_vector(p), a) -
               muscle_energy(set, e, Strain::from_vector(m), a)) /
              (2.0 * h);
    }
    const double scale = std::max(loads.norm(), 1e-12);
    worst = std::max(worst, (fd - loads).norm() / scale);
  }
  return {"muscle_load_gradient", worst, 1e-6};
}

// Loop integral of the muscle loads around random triangles in strain space
// (Gauss-Legendre per edge), relative to the integral of |loads|.
inline CheckResult check_path_independence(const RodProperties& rod,
                                           const MuscleSet& set,
                                           std::mt19937_64& rng,
                                           int loops = 10) {
  static constexpr double kNodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                       0.5384693101056831, 0.9061798459386640};
  static constexpr double kWeights[5] = {0.2369268850561891, 0.4786286704993665,
                                         0.5688888888888889, 0.4786286704993665,
                                         0.2369268850561891};
  std::uniform_int_distribution<std::size_t> pick(0, rod.elements() - 1);
  double worst = 0.0;
  for (int k = 0; k < loops; ++k) {
    const std::size_t e = pick(rng);
    const ChannelVector a = validation_detail::random_activation(rng);
    const Vec6 v[3] = {validation_detail::random_strain(rng).vector(),
                       validation_detail::random_strain(rng).vector(),
                       validation_detail::random_strain(rng).vector()};
    double loop = 0.0, mag = 0.0;
    for (int side = 0; side < 3; ++side) {
      const Vec6 from = v[side], to = v[(side + 1) % 3];
      const Vec6 d = to - from;
      // 40 panels per edge keeps the kinks of the clamp well resolved.
      const int panels = 40;
      for (int p = 0; p < panels; ++p) {
        for (int g = 0; g < 5; ++g) {
          const double t = (p + 0.5 * (kNodes[g] + 1.0)) / panels;
          const Vec6 f =
              muscle_loads(Strain::from_vector(from + t * d), a, set, e).vector();
          loop += kWeights[g] * 0.5 / panels * f.dot(d);
          mag += kWeights[g] * 0.5 / panels * f.norm() * d.norm();
        }
      }
    }
    worst = std::max(worst, std::abs(loop) / std::max(mag, 1e-300));
  }
  return {"muscle_path_independence", worst, 1e-6};
}

// Full 4x4 costate by the matrix recursion lambda_i = (lambda_{i+1} -
// C'_{i+1}) E_i^T, lambda_N = -Phi', compared with the reduced costate.
inline double costate_mismatch(std::span<const Pose> pose,
                               const TaskObjective& objective,
                               const Costate& reduced) {
  const std::size_t n = pose.size() - 1;
  Mat4 lambda = -validation_detail::embed(objective.terminal_cost(pose[n]));
  double worst = 0.0;
  double scale = 0.0;
  const auto compare = [&](std::size_t i) {
    worst = std::max(worst, (lambda - reduced.lambda(i, pose[i])).cwiseAbs().maxCoeff());
    scale = std::max(scale, lambda.cwiseAbs().maxCoeff());
  };
  compare(n);
  for (std::size_t i = n; i-- > 0;) {
    const Mat4 rel = pose[i].inverse().matrix() * pose[i + 1].matrix();
    lambda = (lambda - validation_detail::embed(objective.node_cost(i + 1, pose[i + 1]))) *
             rel.transpose();
    compare(i);
  }
  return worst / std::max(scale, 1e-300);
}

// Adjoint cost gradient against central differences on random entries.
inline CheckResult check_cost_gradient(const ShapingProblem& problem,
                                       const ActivationProfile& alpha,
                                       std::mt19937_64& rng, int entries = 6) {
  const ForwardState st = problem.forward(alpha);
  const Costate c = backward_costate(st.pose, problem.objective());
  const ActivationGradient g = hamiltonian_gradient(problem, st, c);
  const double ds = problem.grid().ds();
  std::uniform_int_distribution<std::size_t> pe(0, problem.rod().elements() - 1);
  std::uniform_int_distribution<std::size_t> pc(0, kChannels - 1);
  double worst = 0.0;
  const double gscale = ds * g.cwiseAbs().maxCoeff();
  for (int k = 0; k < entries; ++k) {
    const std::size_t e = pe(rng), ch = pc(rng);
    const double h = 1e-5;
    ActivationProfile ap = alpha, am = alpha;
    ap.set(e, ch, alpha(e, ch) + h);
    am.set(e, ch, alpha(e, ch) - h);
    const double fd = (problem.forward(ap, st.equilibrium.strain).cost.total() -
                       problem.forward(am, st.equilibrium.strain).cost.total()) /
                      (2.0 * h);
    const double adj = -ds * g(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(ch));
    worst = std::max(worst, std::abs(fd - adj) / std::max(gscale, 1e-300));
  }
  return {"cost_gradient", worst, 1e-5};
}

// Runs every self-check on a coarse copy of the configured arm.
inline std::vector<CheckResult> run_self_checks(const ExperimentConfig& cfg,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;

  RodParameters coarse = cfg.arm;
  coarse.elements = 20;
  const RodProperties rod(coarse);
  const MuscleSet set(rod, cfg.muscles);
  out.push_back(check_muscle_gradient(rod, set, rng));
  out.push_back(check_path_independence(rod, set, rng));

  ActivationProfile alpha(rod.elements());
  std::uniform_real_distribution<double> u(0.0, 0.3);
  for (std::size_t e = 0; e < rod.elements(); ++e) {
    for (std::size_t ch = 0; ch < kChannels; ++ch) alpha.set(e, ch, u(rng));
  }

  const std::vector<Pose> straight = straight_pose(rod, cfg.base);
  const ReachObjective reach(make_reach_task(cfg.target, straight,
                                             cfg.weight_position,
                                             cfg.weight_direction));
  GraspTask grasp = cfg.grasp_task();
  // A reach configuration still carries a cylinder; grasp its center.
  if (cfg.task == TaskKind::kReach) grasp.target = grasp.cylinder.center;
  const GraspObjective wrap(grasp, rod);
  for (const TaskObjective* obj : {static_cast<const TaskObjective*>(&reach),
                                   static_cast<const TaskObjective*>(&wrap)}) {
    const ShapingProblem problem(rod, set, *obj, cfg.base, cfg.statics);
    const ForwardState st = problem.forward(alpha);
    const std::string tag(obj->kind());
    double residual = 0.0;
    for (std::size_t e = 0; e < rod.elements(); ++e) {
      residual = std::max(residual, st.equilibrium.status[e].residual /
                                        rod.axial_stiffness(e));
    }
    out.push_back({"equilibrium_residual_" + tag, residual,
                   cfg.statics.converged_tolerance});
    out.push_back({"costate_" + tag,
                   costate_mismatch(st.pose, *obj, backward_costate(st.pose, *obj)),
                   1e-10});
    CheckResult g = check_cost_gradient(problem, alpha, rng);
    g.name += "_" + tag;
    out.push_back(g);
  }

  // Energy must not grow once the activation is held constant.
  SimConfig sim_cfg = cfg.dynamics;
  sim_cfg.duration = 0.05;
  sim_cfg.ramp_time = 0.01;
  sim_cfg.record_stride = 10;
  Simulator sim(rod, set, alpha, sim_cfg);
  DynamicState state = sim.rest_state(cfg.base);
  const std::vector<EnergySample> samples = sim.simulate(state);
  double growth = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    scale = std::max(scale, std::abs(samples[k].hamiltonian));
    if (k > 0 && samples[k - 1].time >= sim_cfg.ramp_time) {
      growth = std::max(growth, samples[k].hamiltonian - samples[k - 1].hamiltonian);
    }
  }
  out.push_back({"energy_growth", growth / std::max(scale, 1e-300), 1e-6});
  return out;
}

inline nlohmann::json checks_to_json(const std::vector<CheckResult>& checks) {
  nlohmann::json list = nlohmann::json::array();
  bool all = true;
  for (const auto& c : checks) {
    list.push_back({{"name", c.name},
                    {"value", c.value},
                    {"tolerance", c.tolerance},
                    {"pass", c.pass()}});
    all = all && c.pass();
  }
  return {{"checks", list}, {"pass", all}};
}

}  // namespace octoarm
