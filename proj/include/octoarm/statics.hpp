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

// Total stored energy of an element (passive + activated muscles), the
// equilibrium residual P = dW/d(strain), its Jacobian, and the pointwise
// Newton solve of P = 0.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "octoarm/muscles.hpp"

namespace octoarm {

using ChannelMatrix = Eigen::Matrix<double, 6, kChannels>;

struct ElementResponse {
  double energy = 0.0;
  Vec6 residual{Vec6::Zero()};
  Mat6 jacobian{Mat6::Zero()};
  // dP/dalpha, one column per channel.
  ChannelMatrix sensitivity{ChannelMatrix::Zero()};
};

struct ElementRequest {
  bool jacobian = false;
  bool sensitivity = false;
};

inline ElementResponse evaluate_element(const RodProperties& rod,
                                        const MuscleSet& muscles,
                                        std::size_t e, const Strain& eps,
                                        const ChannelVector& alpha,
                                        ElementRequest want = {}) {
  ElementResponse out;
  out.energy = elastic_energy_density(rod, e, eps);
  out.residual = elastic_loads(rod, e, eps).vector();
  if (want.jacobian) {
    out.jacobian.diagonal() << rod.shear_stiffness(e), rod.bend_stiffness(e);
  }
  for (const MuscleFiber& f : muscles) {
    const auto c = static_cast<Eigen::Index>(f.channel);
    const double a = alpha[c];
    if (a == 0.0 && !want.sensitivity) continue;
    const Vec3& r = f.position[e];
    const FiberResponse fr =
        fiber_response(f, muscle_strain(eps, f, e), e, want.jacobian && a != 0.0);
    Vec6 load;
    load << fr.gradient, r.cross(fr.gradient);
    out.energy += a * fr.energy;
    out.residual += a * load;
    if (want.sensitivity) out.sensitivity.col(c) += load;
    if (want.jacobian && a != 0.0) {
      // G = [I, -[r]x] maps strain variations to fiber strain variations.
      Eigen::Matrix<double, 3, 6> g;
      g << Mat3::Identity(), -hat(r);
      out.jacobian.noalias() += a * g.transpose() * fr.hessian * g;
    }
  }
  return out;
}

// W = W^e + sum over fibers of alpha W^m.
inline double total_energy_density(const RodProperties& rod,
                                   const MuscleSet& muscles, std::size_t e,
                                   const Strain& eps,
                                   const ChannelVector& alpha) {
  return evaluate_element(rod, muscles, e, eps, alpha).energy;
}

inline Vec6 equilibrium_residual(const RodProperties& rod,
                                 const MuscleSet& muscles, std::size_t e,
                                 const Strain& eps, const ChannelVector& alpha) {
  return evaluate_element(rod, muscles, e, eps, alpha).residual;
}

inline Mat6 equilibrium_jacobian(const RodProperties& rod,
                                 const MuscleSet& muscles, std::size_t e,
                                 const Strain& eps, const ChannelVector& alpha) {
  return evaluate_element(rod, muscles, e, eps, alpha, {.jacobian = true})
      .jacobian;
}

inline ChannelMatrix activation_sensitivity(const RodProperties& rod,
                                            const MuscleSet& muscles,
                                            std::size_t e, const Strain& eps,
                                            const ChannelVector& alpha) {
  return evaluate_element(rod, muscles, e, eps, alpha, {.sensitivity = true})
      .sensitivity;
}

struct StaticsOptions {
  std::size_t max_newton = 50;
  std::size_t descent_iterations = 200;
  double converged_tolerance = 1e-9;   // |P| < tol * EA
  double target_tolerance = 1e-14;     // keep iterating down to this
  double singular_rcond = 1e-14;
  double basin_jump_step = 0.5;
};

struct ElementStatus {
  bool converged = false;
  bool basin_jump = false;
  double residual = 0.0;
  std::size_t iterations = 0;
};

struct EquilibriumField {
  std::vector<Strain> strain;
  std::vector<ElementStatus> status;

  std::size_t elements() const { return strain.size(); }
  bool all_converged() const {
    for (const auto& s : status) {
      if (!s.converged) return false;
    }
    return true;
  }
  bool any_basin_jump() const {
    for (const auto& s : status) {
      if (s.basin_jump) return true;
    }
    return false;
  }
  double max_residual() const {
    double m = 0.0;
    for (const auto& s : status) m = std::max(m, s.residual);
    return m;
  }
};

namespace detail {

// Newton runs on u = (nu, r kappa) and on the residual (P_f, P_m / r) / EA,
// which makes both blocks dimensionless and of comparable size.
class ElementSolver {
 public:
  ElementSolver(const RodProperties& rod, const MuscleSet& muscles,
                std::size_t e, const ChannelVector& alpha,
                const StaticsOptions& opt)
      : rod_(rod), muscles_(muscles), e_(e), alpha_(alpha), opt_(opt),
        radius_(rod.radius(e)), axial_(rod.axial_stiffness(e)) {
    scale_ << Vec3::Ones(), Vec3::Constant(1.0 / radius_);
  }

  ElementStatus solve(Strain& eps) {
    ElementStatus st;
    Vec6 x = eps.vector();
    double merit = merit_at(x);
    if (!std::isfinite(merit)) {
      x = rod_.rest_strain().vector();
      merit = merit_at(x);
    }
    newton(x, merit, st);
    if (!converged(x)) {
      descent(x, merit);
      newton(x, merit, st);
    }
    eps = Strain::from_vector(x);
    st.residual = residual_norm(x);
    st.converged = converged(x);
    if (!st.converged) throw NonConvergence(e_, st.residual);
    return st;
  }

 private:
  double residual_norm(const Vec6& x) const {
    return equilibrium_residual(rod_, muscles_, e_, Strain::from_vector(x),
                                alpha_)
        .norm();
  }
  bool converged(const Vec6& x) const {
    return residual_norm(x) < opt_.converged_tolerance * axial_;
  }
  static bool admissible(const Vec6& x) {
    return x.allFinite() && x[2] > 0.0;
  }
  // Scaled residual norm; +inf when the strain is not admissible.
  double merit_at(const Vec6& x) const {
    if (!admissible(x)) return std::numeric_limits<double>::infinity();
    try {
      const Vec6 p = equilibrium_residual(rod_, muscles_, e_,
                                          Strain::from_vector(x), alpha_);
      return (scale_.cwiseProduct(p) / axial_).norm();
    } catch (const InvalidArgument&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  double energy_at(const Vec6& x) const {
    if (!admissible(x)) return std::numeric_limits<double>::infinity();
    try {
      return total_energy_density(rod_, muscles_, e_, Strain::from_vector(x),
                                  alpha_);
    } catch (const InvalidArgument&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  void newton(Vec6& x, double& merit, ElementStatus& st) {
    for (std::size_t it = 0; it < opt_.max_newton; ++it) {
      if (merit <= opt_.target_tolerance) return;
      const ElementResponse r = evaluate_element(
          rod_, muscles_, e_, Strain::from_vector(x), alpha_, {.jacobian = true});
      const Mat6 js =
          scale_.asDiagonal() * r.jacobian * scale_.asDiagonal() / axial_;
      const Eigen::PartialPivLU<Mat6> lu(js);
      if (!(lu.rcond() >= opt_.singular_rcond)) throw SingularJacobian(e_);
      const Vec6 du = -lu.solve(scale_.cwiseProduct(r.residual) / axial_);
      if (du.norm() > opt_.basin_jump_step) st.basin_jump = true;
      ++st.iterations;
      double step = 1.0;
      bool accepted = false;
      for (int k = 0; k < 40; ++k) {
        const Vec6 trial = x + step * scale_.cwiseProduct(du);
        const double m = merit_at(trial);
        if (m < merit) {
          x = trial;
          merit = m;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted || step * du.norm() < 1e-16) return;
    }
  }

  // Scaled gradient descent on W with backtracking.
  void descent(Vec6& x, double& merit) {
    double w = energy_at(x);
    double step = 1.0;
    for (std::size_t it = 0; it < opt_.descent_iterations; ++it) {
      const Vec6 p = equilibrium_residual(rod_, muscles_, e_,
                                          Strain::from_vector(x), alpha_);
      const Vec6 dir = -scale_.cwiseProduct(scale_.cwiseProduct(p)) / axial_;
      const double slope = p.dot(dir);
      if (!(slope < 0.0)) break;
      step = std::min(1.0, 2.0 * step);
      bool moved = false;
      for (int k = 0; k < 60; ++k) {
        const Vec6 trial = x + step * dir;
        const double wt = energy_at(trial);
        if (wt <= w + 1e-4 * step * slope) {
          x = trial;
          w = wt;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    merit = merit_at(x);
  }

  const RodProperties& rod_;
  const MuscleSet& muscles_;
  std::size_t e_;
  ChannelVector alpha_;
  StaticsOptions opt_;
  double radius_;
  double axial_;
  Vec6 scale_;
};

}  // namespace detail

// Solves P(s, eps; alpha) = 0 on a single element starting from guess.
inline ElementStatus solve_element(const RodProperties& rod,
                                   const MuscleSet& muscles, std::size_t e,
                                   const ChannelVector& alpha, Strain& eps,
                                   const StaticsOptions& opt = {}) {
  return detail::ElementSolver(rod, muscles, e, alpha, opt).solve(eps);
}

// Pointwise equilibrium over the grid. An empty guess starts from the rest
// strain; otherwise each element is warm-started from its guess.
inline EquilibriumField solve_equilibrium(const RodProperties& rod,
                                          const MuscleSet& muscles,
                                          const ActivationProfile& alpha,
                                          std::span<const Strain> guess = {},
                                          const StaticsOptions& opt = {}) {
  const std::size_t n = rod.elements();
  if (alpha.elements() != n || muscles.elements() != n) {
    throw InvalidArgument("solve_equilibrium: grid size mismatch");
  }
  if (!guess.empty() && guess.size() != n) {
    throw InvalidArgument("solve_equilibrium: guess size mismatch");
  }
  if (!alpha.within_bounds()) {
    throw InvalidArgument("solve_equilibrium: activation outside [0, 1]");
  }
  EquilibriumField field;
  field.strain.resize(n);
  field.status.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    Strain eps = guess.empty() ? rod.rest_strain() : guess[e];
    field.status[e] = solve_element(rod, muscles, e, alpha.at(e), eps, opt);
    field.strain[e] = eps;
  }
  return field;
}

}  // namespace octoarm
