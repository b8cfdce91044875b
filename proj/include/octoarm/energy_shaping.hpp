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

// Static control design: activations are shaped by projected gradient ascent
// on the Hamiltonian, with the gradient obtained from a backward sweep of the
// reduced costate (static internal force and couple) along the arm.
//
// The sweeps are the exact adjoint of the discrete forward map
// q_{i+1} = q_i exp(ds eps_i^), so the gradient is that of the discrete cost
//   J = ds sum_e |alpha_e|^2 / 2 + sum_i C_i(q_i) + Phi(q_N).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "octoarm/statics.hpp"
#include "octoarm/tasks.hpp"

namespace octoarm {

using ActivationGradient = ActivationProfile::Matrix;

struct CostBreakdown {
  double muscle = 0.0;
  double task = 0.0;
  double total() const { return muscle + task; }
};

// Equilibrium, pose and cost for one activation profile.
struct ForwardState {
  ActivationProfile alpha;
  EquilibriumField equilibrium;
  std::vector<Pose> pose;
  CostBreakdown cost;
};

// Non-owning bundle of the arm model and the task. The referenced objects
// must outlive the problem.
class ShapingProblem {
 public:
  ShapingProblem(const RodProperties& rod, const MuscleSet& muscles,
                 const TaskObjective& objective, Pose base = default_base_pose(),
                 StaticsOptions statics = {})
      : rod_(rod), muscles_(muscles), objective_(objective), base_(base),
        statics_(statics) {
    if (muscles.elements() != rod.elements()) {
      throw InvalidArgument("muscle set does not match the rod grid");
    }
    if (!base.valid()) throw InvalidArgument("base pose is not a valid rigid pose");
  }

  const RodProperties& rod() const { return rod_; }
  const MuscleSet& muscles() const { return muscles_; }
  const TaskObjective& objective() const { return objective_; }
  const Pose& base() const { return base_; }
  const Grid& grid() const { return rod_.grid(); }
  const StaticsOptions& statics() const { return statics_; }

  CostBreakdown evaluate_cost(const ActivationProfile& alpha,
                              std::span<const Pose> pose) const {
    CostBreakdown c;
    c.muscle = 0.5 * grid().ds() * alpha.squared_norm();
    for (std::size_t i = 0; i < pose.size(); ++i) {
      c.task += objective_.node_cost(i, pose[i]).value;
    }
    c.task += objective_.terminal_cost(pose.back()).value;
    return c;
  }

  ForwardState forward(const ActivationProfile& alpha,
                       std::span<const Strain> guess = {}) const {
    ForwardState st;
    st.alpha = alpha;
    st.equilibrium = solve_equilibrium(rod_, muscles_, alpha, guess, statics_);
    st.pose = reconstruct_pose(base_, st.equilibrium.strain, grid());
    st.cost = evaluate_cost(alpha, st.pose);
    return st;
  }

 private:
  const RodProperties& rod_;
  const MuscleSet& muscles_;
  const TaskObjective& objective_;
  Pose base_;
  StaticsOptions statics_;
};

// Reduced costate per node: internal force n and couple m in the material
// frame plus the accumulated symmetric matrix Lambda.
struct Costate {
  std::vector<Vec3> force;
  std::vector<Vec3> couple;
  std::vector<Mat3> accumulated;

  std::size_t nodes() const { return force.size(); }

  // Symmetric block M = Q^T (Lambda + b x^T + x b^T) Q with b = Q n.
  Mat3 symmetric_block(std::size_t i, const Pose& q) const {
    const Vec3 b = q.Q * force[i];
    return q.Q.transpose() *
           (accumulated[i] + b * q.x.transpose() + q.x * b.transpose()) * q.Q;
  }

  // Full 4x4 costate [Q ([m]x - M) / 2, Q n; 0, 0].
  Mat4 lambda(std::size_t i, const Pose& q) const {
    Mat4 out = Mat4::Zero();
    out.topLeftCorner<3, 3>() =
        0.5 * q.Q * (hat(couple[i]) - symmetric_block(i, q));
    out.topRightCorner<3, 1>() = q.Q * force[i];
    return out;
  }
};

// Backward sweep from the tip. pose must come from reconstruct_pose.
inline Costate backward_costate(std::span<const Pose> pose,
                                const TaskObjective& objective) {
  if (pose.size() < 2) throw InvalidArgument("backward_costate: empty pose field");
  const std::size_t n = pose.size() - 1;
  Costate c;
  c.force.resize(n + 1);
  c.couple.resize(n + 1);
  c.accumulated.resize(n + 1);

  const auto sym = [](const Vec3& dx, const Mat3& dq, const Pose& q) {
    const Mat3 a = dx * q.x.transpose() + dq * q.Q.transpose();
    return Mat3(a + a.transpose());
  };
  const auto skew = [](const Mat3& dq, const Pose& q) {
    return vee_skew_part(q.Q.transpose() * dq - dq.transpose() * q.Q);
  };

  const Pose& tip = pose[n];
  const PoseCost phi = objective.terminal_cost(tip);
  c.force[n] = -(tip.Q.transpose() * phi.dx);
  c.couple[n] = -skew(phi.dQ, tip);
  c.accumulated[n] = sym(phi.dx, phi.dQ, tip);

  for (std::size_t i = n; i-- > 0;) {
    const Pose& next = pose[i + 1];
    const Pose& here = pose[i];
    const PoseCost src = objective.node_cost(i + 1, next);
    // Relative transform E_i = q_i^{-1} q_{i+1}.
    const Mat3 rot = here.Q.transpose() * next.Q;
    const Vec3 shift = here.Q.transpose() * (next.x - here.x);
    c.force[i] = rot * (c.force[i + 1] - next.Q.transpose() * src.dx);
    c.couple[i] = rot * (c.couple[i + 1] - skew(src.dQ, next)) +
                  shift.cross(c.force[i]);
    c.accumulated[i] = c.accumulated[i + 1] + sym(src.dx, src.dQ, next);
  }
  return c;
}

// dJ/d(strain of element e) = -ds J_l(ds eps_e)^T (n_e, m_e).
inline Vec6 strain_gradient(const Costate& c, std::span<const Strain> strain,
                            double ds, std::size_t e) {
  Vec6 nm;
  nm << c.force[e], c.couple[e];
  return -ds * se3_left_jacobian_transpose_apply(ds * strain[e].vector(), nm);
}

// dH/dalpha per element and channel, H the Hamiltonian density:
//   -(dP/dalpha)^T (dP/deps)^{-1} J_l^T (n, m) - alpha.
// The cost gradient is dJ/dalpha = -ds dH/dalpha.
inline ActivationGradient hamiltonian_gradient(const ShapingProblem& problem,
                                               const ForwardState& state,
                                               const Costate& costate) {
  const std::size_t n = problem.rod().elements();
  const double ds = problem.grid().ds();
  ActivationGradient grad(static_cast<Eigen::Index>(n), kChannels);
  for (std::size_t e = 0; e < n; ++e) {
    const Strain& eps = state.equilibrium.strain[e];
    const ChannelVector a = state.alpha.at(e);
    const ElementResponse r =
        evaluate_element(problem.rod(), problem.muscles(), e, eps, a,
                         {.jacobian = true, .sensitivity = true});
    Vec6 nm;
    nm << costate.force[e], costate.couple[e];
    const Vec6 y = se3_left_jacobian_transpose_apply(ds * eps.vector(), nm);
    // Same row/column scaling as the statics solve before the rank check.
    Vec6 d;
    d << Vec3::Ones(), Vec3::Constant(1.0 / problem.rod().radius(e));
    const Eigen::PartialPivLU<Mat6> lu(d.asDiagonal() * r.jacobian *
                                       d.asDiagonal());
    if (!(lu.rcond() >= problem.statics().singular_rcond)) {
      throw SingularJacobian(e);
    }
    const Vec6 z = d.cwiseProduct(lu.solve(d.cwiseProduct(y)));
    grad.row(static_cast<Eigen::Index>(e)) =
        (-(r.sensitivity.transpose() * z) - a).transpose();
  }
  return grad;
}

struct FbOptions {
  double step = 1.0e-8;
  std::size_t max_iterations = 100000;
  double tolerance = 1.0e-10;
  std::size_t window = 100;
  double growth = 1.2;
  std::size_t growth_after = 500;
  double min_step_ratio = 1.0e-12;
  std::size_t max_failed_trials = 60;
};

struct FbHistoryRow {
  std::size_t iteration = 0;
  double cost = 0.0;
  double muscle = 0.0;
  double task = 0.0;
  double max_gradient = 0.0;
  double step = 0.0;
};

// Passed to the observer once per iteration, before the update.
struct FbSnapshot {
  std::size_t iteration;
  const ForwardState& state;
  const Costate& costate;
  const ActivationGradient& gradient;
  double step;
};
using FbObserver = std::function<void(const FbSnapshot&)>;

struct FbResult {
  ForwardState state;
  std::vector<FbHistoryRow> history;
  std::size_t iterations = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool basin_jump = false;
  std::string stop_reason;
};

// Projected gradient ascent alpha <- clip(alpha + eta dH/dalpha). A trial is
// accepted only if the cost does not increase; otherwise eta is halved.
inline FbResult fb_solve(const ShapingProblem& problem,
                         const ActivationProfile& alpha0,
                         const FbOptions& opt = {},
                         const FbObserver& observer = {}) {
  if (!(opt.step > 0.0)) throw InvalidArgument("fb_solve: step must be positive");
  if (alpha0.elements() != problem.rod().elements() || !alpha0.within_bounds()) {
    throw InvalidArgument("fb_solve: invalid initial activation");
  }
  FbResult res;
  try {
    res.state = problem.forward(alpha0);
  } catch (const Error& err) {
    throw SolverFailure(0, err.what());
  }
  res.basin_jump = res.state.equilibrium.any_basin_jump();

  double eta = opt.step;
  std::size_t streak = 0;
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    Costate costate;
    ActivationGradient grad;
    try {
      costate = backward_costate(res.state.pose, problem.objective());
      grad = hamiltonian_gradient(problem, res.state, costate);
    } catch (const Error& err) {
      throw SolverFailure(it, err.what());
    }
    if (res.history.empty()) {
      res.history.push_back({0, res.state.cost.total(), res.state.cost.muscle,
                             res.state.cost.task, grad.cwiseAbs().maxCoeff(),
                             eta});
    }
    if (observer) observer({it, res.state, costate, grad, eta});

    bool accepted = false;
    std::size_t failures = 0;
    std::size_t trials = 0;
    std::string last_error;
    while (!accepted) {
      if (eta < opt.step * opt.min_step_ratio) break;
      ForwardState trial;
      bool ok = true;
      ++trials;
      try {
        trial = problem.forward(res.state.alpha.projected_step(grad, eta),
                                res.state.equilibrium.strain);
      } catch (const NonConvergence& err) {
        ok = false;
        last_error = err.what();
        ++failures;
      } catch (const SingularJacobian& err) {
        ok = false;
        last_error = err.what();
        ++failures;
      }
      if (ok && trial.cost.total() <= res.state.cost.total()) {
        res.state = std::move(trial);
        accepted = true;
      } else {
        eta *= 0.5;
        streak = 0;
        ++res.rejected;
        if (failures > opt.max_failed_trials) throw SolverFailure(it, last_error);
      }
    }
    res.iterations = it;
    if (!accepted) {
      if (failures > 0 && failures == trials) throw SolverFailure(it, last_error);
      res.stop_reason = "step underflow";
      break;
    }
    ++res.accepted;
    res.basin_jump = res.basin_jump || res.state.equilibrium.any_basin_jump();
    res.history.push_back({it, res.state.cost.total(), res.state.cost.muscle,
                           res.state.cost.task, grad.cwiseAbs().maxCoeff(), eta});
    if (++streak >= opt.growth_after) {
      eta = std::min(opt.step, eta * opt.growth);
      streak = 0;
    }
    if (it >= opt.window) {
      const double past = res.history[res.history.size() - 1 - opt.window].cost;
      const double now = res.state.cost.total();
      if (std::abs(past - now) < opt.tolerance * (1.0 + std::abs(now))) {
        res.stop_reason = "converged";
        break;
      }
    }
  }
  if (res.stop_reason.empty()) res.stop_reason = "iteration limit";
  return res;
}

}  // namespace octoarm
