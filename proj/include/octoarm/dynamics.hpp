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

// Time-domain simulation of the clamped-free arm under static muscle
// activations.
//
// Nodes carry lumped rigid bodies (trapezoid share of rho A and rho J).
// Element strains are read off neighbouring node poses,
// eps_e = log(q_e^{-1} q_{e+1}) / ds, and the potential is
// V = ds sum_e W(eps_e; alpha_e), so static equilibria of the simulation are
// exactly the statics solutions on the same grid. Internal loads reach the
// nodes through the SE(3) log Jacobians; damping -zeta p is applied as an
// exact exponential decay.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "octoarm/statics.hpp"

namespace octoarm {

enum class RampShape { kLinear, kSmooth };

struct SimConfig {
  double time_step = 1.0e-5;
  double duration = 5.0;
  double ramp_time = 0.1;
  RampShape ramp = RampShape::kLinear;
  std::size_t record_stride = 1000;  // steps between recorded samples
  double blowup_factor = 1.0e6;
  // Uniform external body force and couple per unit length, material frame.
  Vec3 body_force{Vec3::Zero()};
  Vec3 body_couple{Vec3::Zero()};

  void validate() const {
    if (!(time_step > 0.0) || !std::isfinite(time_step)) {
      throw InvalidArgument("time step must be positive");
    }
    if (!(duration >= 0.0)) throw InvalidArgument("duration must be non-negative");
    if (!(ramp_time >= 0.0)) throw InvalidArgument("ramp time must be non-negative");
    if (record_stride == 0) throw InvalidArgument("record stride must be positive");
  }

  // Fraction of the target activation applied at time t.
  double ramp_factor(double t) const {
    if (ramp_time <= 0.0 || t >= ramp_time) return 1.0;
    const double u = std::max(t, 0.0) / ramp_time;
    if (ramp == RampShape::kLinear) return u;
    // C3 polynomial step.
    return u * u * u * u * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u * u * u);
  }
};

struct DynamicState {
  double time = 0.0;
  std::vector<Pose> pose;       // nodes 0..N, node 0 clamped
  std::vector<Vec3> velocity;   // v, material frame
  std::vector<Vec3> spin;       // omega, material frame
};

struct EnergySample {
  double time = 0.0;
  double hamiltonian = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double rate = 0.0;       // -sum |p|^2_{zeta M^-1} at this instant
  double mean_rate = 0.0;  // rate averaged over the steps since the last sample
  double max_momentum = 0.0;
};

// Element strains read from node poses.
inline std::vector<Strain> strains_from_pose(std::span<const Pose> pose,
                                             double ds) {
  std::vector<Strain> out;
  out.reserve(pose.size() - 1);
  for (std::size_t e = 0; e + 1 < pose.size(); ++e) {
    out.push_back(Strain::from_vector(se3_log(pose[e].inverse() * pose[e + 1]) / ds));
  }
  return out;
}

class Simulator {
 public:
  Simulator(const RodProperties& rod, const MuscleSet& muscles,
            ActivationProfile target, SimConfig cfg = {})
      : rod_(rod), muscles_(muscles), target_(std::move(target)), cfg_(cfg) {
    cfg_.validate();
    if (target_.elements() != rod.elements() || !target_.within_bounds()) {
      throw InvalidArgument("simulator: activation profile does not fit the rod");
    }
    const Grid& g = rod.grid();
    mass_.resize(g.nodes());
    inertia_.resize(g.nodes());
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      const Vec6 m = rod.mass_at(g.node(i)) * g.node_weight(i);
      mass_[i] = m[0];
      inertia_[i] = m.tail<3>();
    }
    momentum_scale_ = rod.params().density * rod.area_at(0.0) * 1.0;
  }

  // Straight rest configuration at the given base, at rest.
  DynamicState rest_state(const Pose& base) const {
    DynamicState st;
    const std::vector<Strain> rest(rod_.elements(), rod_.rest_strain());
    st.pose = reconstruct_pose(base, rest, rod_.grid());
    st.velocity.assign(st.pose.size(), Vec3::Zero());
    st.spin.assign(st.pose.size(), Vec3::Zero());
    return st;
  }

  const SimConfig& config() const { return cfg_; }
  double node_mass(std::size_t i) const { return mass_[i]; }
  const Vec3& node_inertia(std::size_t i) const { return inertia_[i]; }

  // Per-node momentum density p = M V (material frame).
  Vec6 momentum_density(const DynamicState& st, std::size_t i) const {
    const Vec6 m = rod_.mass_at(rod_.grid().node(i));
    Vec6 p;
    p << m[0] * st.velocity[i], m.tail<3>().cwiseProduct(st.spin[i]);
    return p;
  }

  ChannelVector activation_at(double t, std::size_t e) const {
    return cfg_.ramp_factor(t) * target_.at(e);
  }

  // Instantaneous dissipation rate -sum |p|^2_{zeta M^-1} (lumped nodes).
  double dissipation_rate(const DynamicState& st) const {
    const Vec6 zeta = rod_.damping();
    double rate = 0.0;
    for (std::size_t i = 1; i < st.pose.size(); ++i) {
      rate -= mass_[i] * zeta[0] * st.velocity[i].squaredNorm() +
              zeta[3] * st.spin[i].dot(inertia_[i].cwiseProduct(st.spin[i]));
    }
    return rate;
  }

  EnergySample energy(const DynamicState& st) const {
    EnergySample out;
    out.time = st.time;
    out.rate = dissipation_rate(st);
    out.mean_rate = out.rate;
    for (std::size_t i = 1; i < st.pose.size(); ++i) {
      const Vec3 iw = inertia_[i].cwiseProduct(st.spin[i]);
      out.kinetic += 0.5 * (mass_[i] * st.velocity[i].squaredNorm() +
                            st.spin[i].dot(iw));
      out.max_momentum =
          std::max(out.max_momentum, momentum_density(st, i).norm());
    }
    const double ds = rod_.grid().ds();
    for (std::size_t e = 0; e + 1 < st.pose.size(); ++e) {
      const Vec6 xi = se3_log(st.pose[e].inverse() * st.pose[e + 1]);
      out.potential += ds * total_energy_density(rod_, muscles_, e,
                                                 Strain::from_vector(xi / ds),
                                                 activation_at(st.time, e));
    }
    out.hamiltonian = out.kinetic + out.potential;
    return out;
  }

  // Body-frame generalized forces (force, torque) on every node.
  std::vector<Vec6> node_loads(const DynamicState& st) const {
    const std::size_t nodes = st.pose.size();
    const double ds = rod_.grid().ds();
    std::vector<Vec6> load(nodes, Vec6::Zero());
    for (std::size_t e = 0; e + 1 < nodes; ++e) {
      const Vec6 xi = se3_log(st.pose[e].inverse() * st.pose[e + 1]);
      const Vec6 p = equilibrium_residual(rod_, muscles_, e,
                                          Strain::from_vector(xi / ds),
                                          activation_at(st.time, e));
      load[e] += se3_left_jacobian_inverse_transpose_apply(xi, p);
      load[e + 1] -= se3_right_jacobian_inverse_transpose_apply(xi, p);
    }
    if (!cfg_.body_force.isZero() || !cfg_.body_couple.isZero()) {
      for (std::size_t i = 1; i < nodes; ++i) {
        const double w = rod_.grid().node_weight(i);
        load[i].head<3>() += w * cfg_.body_force;
        load[i].tail<3>() += w * cfg_.body_couple;
      }
    }
    return load;
  }

  // One Strang-split step: damping, kick, precession, drift, and the mirror.
  void step(DynamicState& st) {
    if (cached_time_ != st.time || cache_.size() != st.pose.size()) {
      cache_ = node_loads(st);
    }
    const double h = cfg_.time_step;
    const Vec6 zeta = rod_.damping();
    const double decay_v = std::exp(-0.5 * zeta[0] * h);
    const double decay_w = std::exp(-0.5 * zeta[3] * h);
    const std::size_t nodes = st.pose.size();

    // Torque kick on the node momenta.
    const auto kick = [&](DynamicState& s) {
      for (std::size_t i = 1; i < nodes; ++i) {
        s.velocity[i] += (0.5 * h / mass_[i]) * cache_[i].head<3>();
        s.spin[i] += (0.5 * h) * cache_[i].tail<3>().cwiseQuotient(inertia_[i]);
      }
    };
    // Exact gyroscopic flow I w' = I w x w for an axisymmetric section: the
    // transverse spin precesses about d3 at rate (I3 - I1) w3 / I1.
    const auto precess = [&](DynamicState& s) {
      for (std::size_t i = 1; i < nodes; ++i) {
        const Vec3& in = inertia_[i];
        const double angle = 0.5 * h * (in.z() - in.x()) / in.x() * s.spin[i].z();
        const double c = std::cos(angle), sn = std::sin(angle);
        const double w1 = s.spin[i].x(), w2 = s.spin[i].y();
        s.spin[i].x() = c * w1 - sn * w2;
        s.spin[i].y() = sn * w1 + c * w2;
      }
    };
    const auto damp = [&](DynamicState& s) {
      for (std::size_t i = 1; i < nodes; ++i) {
        s.velocity[i] *= decay_v;
        s.spin[i] *= decay_w;
      }
    };

    damp(st);
    kick(st);
    precess(st);
    const bool renormalize = ++step_counter_ % kRenormalizeEvery == 0;
    for (std::size_t i = 1; i < nodes; ++i) {
      Pose& q = st.pose[i];
      const Vec3 u = q.Q * st.velocity[i];
      q.x += h * u;
      q.Q = q.Q * so3_exp(h * st.spin[i]);
      if (renormalize) q.Q = orthonormalize(q.Q);
      st.velocity[i] = q.Q.transpose() * u;
    }
    st.time += h;
    cache_ = node_loads(st);
    cached_time_ = st.time;
    precess(st);
    kick(st);
    damp(st);
    check(st);
  }

  using Recorder = std::function<void(const DynamicState&, const EnergySample&)>;

  // Runs to cfg.duration, calling recorder at t = 0 and every stride steps.
  // Each sample's mean_rate is the trapezoid average of the per-step rate
  // over the interval since the previous sample.
  std::vector<EnergySample> simulate(DynamicState& st,
                                     const Recorder& recorder = {}) {
    std::vector<EnergySample> samples;
    double previous_rate = dissipation_rate(st);
    double accumulated = 0.0;
    std::size_t since = 0;
    const auto record = [&] {
      EnergySample e = energy(st);
      if (since > 0) e.mean_rate = accumulated / static_cast<double>(since);
      accumulated = 0.0;
      since = 0;
      samples.push_back(e);
      if (recorder) recorder(st, e);
    };
    record();
    const auto steps = static_cast<std::size_t>(
        std::llround(cfg_.duration / cfg_.time_step));
    const double t0 = st.time;
    for (std::size_t k = 1; k <= steps; ++k) {
      step(st);
      // Keep the clock free of accumulated rounding.
      st.time = t0 + static_cast<double>(k) * cfg_.time_step;
      cached_time_ = st.time;
      const double rate = dissipation_rate(st);
      accumulated += 0.5 * (previous_rate + rate);
      previous_rate = rate;
      ++since;
      if (k % cfg_.record_stride == 0 || k == steps) record();
    }
    return samples;
  }

 private:
  void check(const DynamicState& st) const {
    const double limit = cfg_.blowup_factor * momentum_scale_;
    for (std::size_t i = 1; i < st.pose.size(); ++i) {
      const double p = momentum_density(st, i).norm();
      if (!std::isfinite(p) || p > limit || !st.pose[i].x.allFinite()) {
        throw Instability(st.time, "momentum exceeded the blow-up bound at node " +
                                       std::to_string(i));
      }
    }
  }

  const RodProperties& rod_;
  const MuscleSet& muscles_;
  ActivationProfile target_;
  SimConfig cfg_;
  std::vector<double> mass_;
  std::vector<Vec3> inertia_;
  double momentum_scale_ = 1.0;
  std::vector<Vec6> cache_;
  double cached_time_ = -1.0;
  std::size_t step_counter_ = 0;
};

// H and its dissipation rate for a state under the simulator's activation.
inline EnergySample hamiltonian(const Simulator& sim, const DynamicState& st) {
  return sim.energy(st);
}

}  // namespace octoarm
