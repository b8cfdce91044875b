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

// Tapered arm geometry, material matrices and the quadratic passive
// elasticity of the rod.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "octoarm/se3.hpp"

namespace octoarm {

// Scalar arm inputs in SI units. Defaults are the reference octopus arm.
struct RodParameters {
  double length = 0.20;
  double radius_base = 0.012;
  double radius_tip = 0.0012;
  double youngs_modulus = 1.0e4;
  double shear_modulus = 4.0e4 / 9.0;
  double density = 1050.0;
  double damping_linear = 0.02;
  double damping_angular = 0.02;
  std::size_t elements = 100;
  Vec3 rest_nu{0.0, 0.0, 1.0};
  Vec3 rest_kappa{Vec3::Zero()};
};

// Force and couple pair in the material frame.
struct Wrench {
  Vec3 force{Vec3::Zero()};
  Vec3 couple{Vec3::Zero()};

  Vec6 vector() const {
    Vec6 v;
    v << force, couple;
    return v;
  }
  Wrench& operator+=(const Wrench& o) {
    force += o.force;
    couple += o.couple;
    return *this;
  }
};

// Per-element material description, evaluated at element midpoints.
class RodProperties {
 public:
  RodProperties(const RodParameters& params)
      : params_(params), grid_(params.elements, params.length) {
    validate();
    const std::size_t n = grid_.elements();
    radius_.resize(n);
    area_.resize(n);
    inertia_.resize(n);
    shear_stiffness_.resize(n);
    bend_stiffness_.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
      const double s = grid_.element(e);
      radius_[e] = radius_at(s);
      area_[e] = area_at(s);
      inertia_[e] = second_moment_at(s);
      shear_stiffness_[e] = {params_.shear_modulus * area_[e],
                             params_.shear_modulus * area_[e],
                             params_.youngs_modulus * area_[e]};
      bend_stiffness_[e] = {params_.youngs_modulus * inertia_[e].x(),
                            params_.youngs_modulus * inertia_[e].y(),
                            params_.shear_modulus * inertia_[e].z()};
    }
  }

  const RodParameters& params() const { return params_; }
  const Grid& grid() const { return grid_; }
  std::size_t elements() const { return grid_.elements(); }

  // Linear taper r(s) = r_tip s/L + r_base (L - s)/L.
  double radius_at(double s) const {
    const double l = params_.length;
    return params_.radius_tip * s / l + params_.radius_base * (l - s) / l;
  }
  double radius_slope() const {
    return (params_.radius_tip - params_.radius_base) / params_.length;
  }
  double area_at(double s) const {
    const double r = radius_at(s);
    return std::numbers::pi * r * r;
  }
  // J = A^2 / (4 pi) diag(1, 1, 2).
  Vec3 second_moment_at(double s) const {
    const double a = area_at(s);
    const double j = a * a / (4.0 * std::numbers::pi);
    return {j, j, 2.0 * j};
  }
  // Diagonal of blockdiag(rho A I, rho J) at s.
  Vec6 mass_at(double s) const {
    Vec6 m;
    m << Vec3::Constant(params_.density * area_at(s)),
        params_.density * second_moment_at(s);
    return m;
  }
  Vec6 damping() const {
    Vec6 z;
    z << Vec3::Constant(params_.damping_linear),
        Vec3::Constant(params_.damping_angular);
    return z;
  }

  double radius(std::size_t e) const { return radius_[e]; }
  double area(std::size_t e) const { return area_[e]; }
  const Vec3& second_moment(std::size_t e) const { return inertia_[e]; }
  // Diagonals of S = diag(GA, GA, EA) and B = diag(EJ11, EJ22, GJ33).
  const Vec3& shear_stiffness(std::size_t e) const { return shear_stiffness_[e]; }
  const Vec3& bend_stiffness(std::size_t e) const { return bend_stiffness_[e]; }
  Mat3 S(std::size_t e) const { return shear_stiffness_[e].asDiagonal(); }
  Mat3 B(std::size_t e) const { return bend_stiffness_[e].asDiagonal(); }
  Mat6 M(std::size_t e) const {
    return mass_at(grid_.element(e)).asDiagonal();
  }
  double axial_stiffness(std::size_t e) const { return shear_stiffness_[e].z(); }

  Strain rest_strain() const { return {params_.rest_nu, params_.rest_kappa}; }

 private:
  void validate() const {
    const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(params_.length) || !positive(params_.radius_base) ||
        !positive(params_.radius_tip) || !positive(params_.youngs_modulus) ||
        !positive(params_.shear_modulus) || !positive(params_.density) ||
        !positive(params_.damping_linear) ||
        !positive(params_.damping_angular)) {
      throw InvalidArgument("rod parameters must be positive and finite");
    }
    if (params_.radius_tip > params_.radius_base) {
      throw InvalidArgument("rod tip radius exceeds base radius");
    }
    if (!(params_.rest_nu.z() > 0.0)) {
      throw InvalidArgument("rest stretch must be positive");
    }
  }

  RodParameters params_;
  Grid grid_;
  std::vector<double> radius_;
  std::vector<double> area_;
  std::vector<Vec3> inertia_;
  std::vector<Vec3> shear_stiffness_;
  std::vector<Vec3> bend_stiffness_;
};

inline RodProperties build_properties(const RodParameters& params) {
  return RodProperties(params);
}

// W^e = 1/2 |nu - nu0|_S^2 + 1/2 |kappa - kappa0|_B^2, per unit length.
inline double elastic_energy_density(const RodProperties& rod, std::size_t e,
                                     const Strain& eps) {
  const Vec3 dn = eps.nu - rod.params().rest_nu;
  const Vec3 dk = eps.kappa - rod.params().rest_kappa;
  return 0.5 * (dn.cwiseProduct(rod.shear_stiffness(e)).dot(dn) +
                dk.cwiseProduct(rod.bend_stiffness(e)).dot(dk));
}

inline Wrench elastic_loads(const RodProperties& rod, std::size_t e,
                            const Strain& eps) {
  return {rod.shear_stiffness(e).cwiseProduct(eps.nu - rod.params().rest_nu),
          rod.bend_stiffness(e).cwiseProduct(eps.kappa - rod.params().rest_kappa)};
}

}  // namespace octoarm
