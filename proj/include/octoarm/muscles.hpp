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

// Muscle fibers of the arm: placement inside the cross section, fiber
// strain and length, the Hill-type force-length curve, the loads a fiber
// transmits to the rod and the stored-energy function they derive from.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "octoarm/rod.hpp"

namespace octoarm {

inline constexpr std::size_t kChannels = 7;
using ChannelVector = Eigen::Matrix<double, kChannels, 1>;

// Control channels. The oblique fibers of one handedness share a channel.
enum Channel : std::size_t {
  kTransverse = 0,
  kLongitudinal0 = 1,
  kLongitudinal1 = 2,
  kLongitudinal2 = 3,
  kLongitudinal3 = 4,
  kObliquePlus = 5,
  kObliqueMinus = 6,
};

inline const std::array<const char*, kChannels>& channel_names() {
  static const std::array<const char*, kChannels> names{
      "TM", "LM0", "LM1", "LM2", "LM3", "OMp", "OMm"};
  return names;
}

enum class MuscleKind { kTransverse, kLongitudinal, kOblique };

struct MuscleGroupSpec {
  double max_stress;  // Pa
  double area_ratio;  // fiber area over cross-section area
  double offset;      // distance from the center line over r(s)
};

// Defaults are the reference octopus musculature.
struct MuscleTable {
  MuscleGroupSpec transverse{15.0e3, 1.0 / 8.0, 0.0};
  MuscleGroupSpec longitudinal{10.0e3, 1.0 / 16.0, 5.0 / 8.0};
  MuscleGroupSpec oblique{100.0e3, 1.0 / 256.0, 15.0 / 16.0};
  double oblique_cycles = 6.0;
};

// Normalized active tension h(l): the cubic fit on its positive lobe
// [lower(), upper()] and zero elsewhere, capped at one.
namespace force_length {

inline constexpr double kC3 = 3.06;
inline constexpr double kC2 = -13.64;
inline constexpr double kC1 = 18.01;
inline constexpr double kC0 = -6.44;

inline double cubic(double l) { return ((kC3 * l + kC2) * l + kC1) * l + kC0; }
inline double cubic_slope(double l) {
  return (3.0 * kC3 * l + 2.0 * kC2) * l + kC1;
}

namespace detail {
inline double bisect_root(double lo, double hi) {
  double flo = cubic(lo);
  for (int k = 0; k < 200 && hi - lo > 1e-16; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double fm = cubic(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

inline double lower() {
  static const double root = detail::bisect_root(0.5, 0.7);
  return root;
}
inline double upper() {
  static const double root = detail::bisect_root(1.5, 1.7);
  return root;
}

inline double value(double l) {
  if (!(l > lower() && l < upper())) return 0.0;
  return std::min(cubic(l), 1.0);
}

// dh/dl; zero outside the support and wherever the cap is active.
inline double slope(double l) {
  if (!(l > lower() && l < upper())) return 0.0;
  if (cubic(l) >= 1.0) return 0.0;
  return cubic_slope(l);
}

// Antiderivatives of the cubic and of cubic / l^3.
inline double primitive(double l) {
  return (((kC3 / 4.0 * l + kC2 / 3.0) * l + kC1 / 2.0) * l + kC0) * l;
}
inline double primitive_inverse_cube(double l) {
  return kC3 * l + kC2 * std::log(l) - kC1 / l - kC0 / (2.0 * l * l);
}

// int_1^l h(t) dt.
inline double integral(double l) {
  const double c = std::clamp(l, lower(), upper());
  return primitive(c) - primitive(1.0);
}
// int_1^l h(t) / t^3 dt.
inline double integral_inverse_cube(double l) {
  const double c = std::clamp(l, lower(), upper());
  return primitive_inverse_cube(c) - primitive_inverse_cube(1.0);
}

}  // namespace force_length

struct MuscleFiber {
  std::string name;
  MuscleKind kind = MuscleKind::kTransverse;
  std::size_t channel = kTransverse;
  int index = 0;        // k = 0..3 around the section
  int handedness = 0;   // +1 / -1 for oblique fibers
  double max_stress = 0.0;
  double area_ratio = 0.0;
  double offset = 0.0;
  double cycles = 0.0;
  // Per element, material frame.
  std::vector<Vec3> position;
  std::vector<Vec3> position_rate;
  std::vector<Vec3> rest_strain;
  std::vector<double> rest_stretch;  // |rest_strain|
  std::vector<double> area;

  // Angle of the fiber in the d1-d2 plane at arc length s.
  double angle(double s, double length) const {
    return static_cast<double>(index) * std::numbers::pi / 2.0 +
           handedness * 2.0 * std::numbers::pi * cycles * s / length;
  }
};

class MuscleSet {
 public:
  MuscleSet(const RodProperties& rod, const MuscleTable& table = {})
      : table_(table), elements_(rod.elements()) {
    validate(table);
    const auto add = [&](std::string name, MuscleKind kind, std::size_t channel,
                         int index, int hand, const MuscleGroupSpec& spec,
                         double cycles) {
      MuscleFiber f;
      f.name = std::move(name);
      f.kind = kind;
      f.channel = channel;
      f.index = index;
      f.handedness = hand;
      f.max_stress = spec.max_stress;
      f.area_ratio = spec.area_ratio;
      f.offset = spec.offset;
      f.cycles = cycles;
      populate(rod, f);
      fibers_.push_back(std::move(f));
    };
    add("TM", MuscleKind::kTransverse, kTransverse, 0, 0, table.transverse, 0.0);
    for (int k = 0; k < 4; ++k) {
      add("LM" + std::to_string(k), MuscleKind::kLongitudinal,
          kLongitudinal0 + static_cast<std::size_t>(k), k, 0, table.longitudinal,
          0.0);
    }
    for (int k = 0; k < 4; ++k) {
      add("OM+" + std::to_string(k), MuscleKind::kOblique, kObliquePlus, k, +1,
          table.oblique, table.oblique_cycles);
    }
    for (int k = 0; k < 4; ++k) {
      add("OM-" + std::to_string(k), MuscleKind::kOblique, kObliqueMinus, k, -1,
          table.oblique, table.oblique_cycles);
    }
  }

  const MuscleTable& table() const { return table_; }
  std::size_t elements() const { return elements_; }
  std::size_t size() const { return fibers_.size(); }
  const std::vector<MuscleFiber>& fibers() const { return fibers_; }
  const MuscleFiber& operator[](std::size_t i) const { return fibers_[i]; }
  auto begin() const { return fibers_.begin(); }
  auto end() const { return fibers_.end(); }

  // Position relative to the center line and its arc-length derivative at
  // an arbitrary s, using the same closed forms as the per-element tables.
  static Vec3 position_at(const RodProperties& rod, const MuscleFiber& f,
                          double s) {
    if (f.kind == MuscleKind::kTransverse) return Vec3::Zero();
    const double th = f.angle(s, rod.params().length);
    return f.offset * rod.radius_at(s) * Vec3{std::cos(th), std::sin(th), 0.0};
  }
  static Vec3 position_rate_at(const RodProperties& rod, const MuscleFiber& f,
                               double s) {
    if (f.kind == MuscleKind::kTransverse) return Vec3::Zero();
    const double l = rod.params().length;
    const double th = f.angle(s, l);
    const double dth = f.handedness * 2.0 * std::numbers::pi * f.cycles / l;
    const Vec3 radial{std::cos(th), std::sin(th), 0.0};
    const Vec3 tangential{-std::sin(th), std::cos(th), 0.0};
    return f.offset *
           (rod.radius_slope() * radial + rod.radius_at(s) * dth * tangential);
  }

 private:
  static void validate(const MuscleTable& t) {
    for (const auto* g : {&t.transverse, &t.longitudinal, &t.oblique}) {
      if (!(g->max_stress >= 0.0) || !(g->area_ratio > 0.0) ||
          !(g->offset >= 0.0) || g->offset >= 1.0) {
        throw InvalidArgument("muscle table entries out of range");
      }
    }
    if (!(t.oblique_cycles >= 0.0)) {
      throw InvalidArgument("oblique winding count must be non-negative");
    }
  }

  void populate(const RodProperties& rod, MuscleFiber& f) const {
    const std::size_t n = rod.elements();
    f.position.resize(n);
    f.position_rate.resize(n);
    f.rest_strain.resize(n);
    f.rest_stretch.resize(n);
    f.area.resize(n);
    const Vec3 nu0 = rod.params().rest_nu;
    const Vec3 kappa0 = rod.params().rest_kappa;
    for (std::size_t e = 0; e < n; ++e) {
      const double s = rod.grid().element(e);
      f.position[e] = position_at(rod, f, s);
      f.position_rate[e] = position_rate_at(rod, f, s);
      f.rest_strain[e] = nu0 + kappa0.cross(f.position[e]) + f.position_rate[e];
      f.rest_stretch[e] = f.rest_strain[e].norm();
      f.area[e] = f.area_ratio * rod.area(e);
    }
  }

  MuscleTable table_;
  std::size_t elements_;
  std::vector<MuscleFiber> fibers_;
};

inline MuscleSet build_muscles(const RodProperties& rod,
                               const MuscleTable& table = {}) {
  return MuscleSet(rod, table);
}

// Per-element, per-channel activation field with entries in [0, 1].
class ActivationProfile {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, kChannels>;

  ActivationProfile() = default;
  explicit ActivationProfile(std::size_t elements)
      : values_(Matrix::Zero(static_cast<Eigen::Index>(elements), kChannels)) {}
  explicit ActivationProfile(Matrix values) : values_(std::move(values)) {
    if (!within_bounds()) {
      throw InvalidArgument("activation outside [0, 1]");
    }
  }

  std::size_t elements() const { return static_cast<std::size_t>(values_.rows()); }
  double operator()(std::size_t e, std::size_t c) const {
    return values_(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(c));
  }
  void set(std::size_t e, std::size_t c, double a) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("activation outside [0, 1]");
    values_(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(c)) = a;
  }
  ChannelVector at(std::size_t e) const {
    return values_.row(static_cast<Eigen::Index>(e)).transpose();
  }
  void set_channel(std::size_t c, double a) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("activation outside [0, 1]");
    values_.col(static_cast<Eigen::Index>(c)).setConstant(a);
  }
  const Matrix& values() const { return values_; }

  // alpha + step * direction, projected onto [0, 1].
  ActivationProfile projected_step(const Matrix& direction, double step) const {
    ActivationProfile out;
    out.values_ = (values_ + step * direction).cwiseMax(0.0).cwiseMin(1.0);
    return out;
  }
  ActivationProfile scaled(double factor) const {
    ActivationProfile out;
    out.values_ = (factor * values_).cwiseMax(0.0).cwiseMin(1.0);
    return out;
  }
  bool within_bounds() const {
    return values_.allFinite() && (values_.array() >= 0.0).all() &&
           (values_.array() <= 1.0).all();
  }
  double squared_norm() const { return values_.squaredNorm(); }

 private:
  Matrix values_;
};

// nu^m = nu + kappa x r^m + d r^m / ds.
inline Vec3 muscle_strain(const Strain& eps, const MuscleFiber& f,
                          std::size_t e) {
  return eps.nu + eps.kappa.cross(f.position[e]) + f.position_rate[e];
}

// Local length ratio; transverse fibers shorten as the arm stretches.
inline double muscle_length(const MuscleFiber& f, const Vec3& nu_m,
                            std::size_t e) {
  const double stretch = nu_m.norm();
  if (!(stretch > 0.0)) throw InvalidArgument("muscle strain has zero length");
  const double rest = f.rest_stretch[e];
  if (f.kind == MuscleKind::kTransverse) return std::sqrt(rest / stretch);
  return stretch / rest;
}

inline double fiber_force(const MuscleFiber& f, const Vec3& nu_m,
                          std::size_t e) {
  return f.max_stress * f.area[e] *
         force_length::value(muscle_length(f, nu_m, e));
}

// Energy per unit reference length stored in one fiber at full activation.
inline double muscle_stored_energy(const MuscleFiber& f, const Vec3& nu_m,
                                   std::size_t e) {
  const double l = muscle_length(f, nu_m, e);
  const double scale = f.max_stress * f.area[e] * f.rest_stretch[e];
  if (f.kind == MuscleKind::kTransverse) {
    return 2.0 * scale * force_length::integral_inverse_cube(l);
  }
  return scale * force_length::integral(l);
}

// Value, gradient and Hessian of the stored energy with respect to nu^m.
struct FiberResponse {
  double energy = 0.0;
  Vec3 gradient{Vec3::Zero()};
  Mat3 hessian{Mat3::Zero()};
};

inline FiberResponse fiber_response(const MuscleFiber& f, const Vec3& nu_m,
                                    std::size_t e, bool with_hessian) {
  FiberResponse out;
  const double stretch = nu_m.norm();
  const double l = muscle_length(f, nu_m, e);
  const double sa = f.max_stress * f.area[e];
  const double h = force_length::value(l);
  const double force = sa * h;
  const Vec3 t = nu_m / stretch;
  const bool transverse = f.kind == MuscleKind::kTransverse;
  const double sign = transverse ? -1.0 : 1.0;
  out.energy = transverse
                   ? 2.0 * sa * f.rest_stretch[e] *
                         force_length::integral_inverse_cube(l)
                   : sa * f.rest_stretch[e] * force_length::integral(l);
  out.gradient = sign * force * t;
  if (with_hessian) {
    const double dl = transverse ? -l / (2.0 * stretch) : 1.0 / f.rest_stretch[e];
    const double dforce = sa * force_length::slope(l) * dl;
    const Mat3 tt = t * t.transpose();
    out.hessian = sign * (dforce * tt + (force / stretch) * (Mat3::Identity() - tt));
  }
  return out;
}

// Loads of one fiber at activation a: n = +-a f t (minus for TM), m = r x n.
inline Wrench fiber_loads(const Strain& eps, const MuscleFiber& f,
                          std::size_t e, double activation) {
  const Vec3 nu_m = muscle_strain(eps, f, e);
  const double sign = f.kind == MuscleKind::kTransverse ? -1.0 : 1.0;
  const Vec3 n = sign * activation * fiber_force(f, nu_m, e) * nu_m.normalized();
  return {n, f.position[e].cross(n)};
}

// Channel-summed muscle loads on element e, material frame.
inline Wrench muscle_loads(const Strain& eps, const ChannelVector& alpha,
                           const MuscleSet& set, std::size_t e) {
  Wrench total;
  for (const MuscleFiber& f : set) {
    const double a = alpha[static_cast<Eigen::Index>(f.channel)];
    if (a == 0.0) continue;
    total += fiber_loads(eps, f, e, a);
  }
  return total;
}

inline Wrench muscle_loads(const Strain& eps, const ActivationProfile& alpha,
                           const MuscleSet& set, std::size_t e) {
  return muscle_loads(eps, alpha.at(e), set, e);
}

}  // namespace octoarm
