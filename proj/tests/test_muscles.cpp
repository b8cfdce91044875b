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

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "octoarm/muscles.hpp"
#include "support/oracles.hpp"

namespace octoarm {
namespace {

constexpr double kPi = std::numbers::pi;

RodParameters untapered() {
  RodParameters p;
  p.radius_tip = p.radius_base;
  return p;
}

const MuscleFiber& fiber(const MuscleSet& set, const std::string& name) {
  for (const auto& f : set) {
    if (f.name == name) return f;
  }
  throw std::out_of_range(name);
}

TEST(ForceLength, ReferenceValues) {
  EXPECT_NEAR(force_length::value(1.0), 0.99, 1e-12);
  EXPECT_EQ(force_length::value(0.4), 0.0);
  EXPECT_NEAR(force_length::value(1.5), 0.2125, 1e-12);
}

TEST(ForceLength, MatchesBruteForceDefinition) {
  for (double l = 0.01; l <= 3.0; l += 0.0037) {
    const double h = force_length::value(l);
    EXPECT_NEAR(h, oracle::force_length(l), 1e-12) << "l = " << l;
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
  }
  EXPECT_NEAR(force_length::lower(), oracle::bisect(oracle::cubic, 0.3, 0.8), 1e-12);
  EXPECT_NEAR(force_length::upper(), oracle::bisect(oracle::cubic, 1.2, 1.8), 1e-12);
}

TEST(ForceLength, IntegralsMatchQuadrature) {
  for (double l : {0.5, 0.7, 0.95, 1.0, 1.2, 1.55, 1.7, 2.5}) {
    const double ref = oracle::integrate(oracle::force_length, 1.0, l);
    EXPECT_NEAR(force_length::integral(l), ref, 1e-12) << "l = " << l;
    const double ref3 = oracle::integrate(
        [](double x) { return oracle::force_length(x) / (x * x * x); }, 1.0, l);
    EXPECT_NEAR(force_length::integral_inverse_cube(l), ref3, 1e-12) << "l = " << l;
  }
}

TEST(MuscleGeometry, TableOffsets) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  ASSERT_EQ(set.size(), 13u);
  for (std::size_t e : {0UL, 50UL, 99UL}) {
    const double r = rod.radius(e);
    EXPECT_LT((fiber(set, "LM0").position[e] - 5.0 / 8.0 * r * Vec3::UnitX()).norm(), 1e-16);
    EXPECT_TRUE(fiber(set, "TM").position[e].isZero());
    for (const auto& f : set) {
      if (f.kind == MuscleKind::kTransverse) continue;
      EXPECT_NEAR(f.position[e].norm(), f.offset * r, 1e-16) << f.name;
    }
  }
  const MuscleFiber& om = fiber(set, "OM+0");
  EXPECT_EQ(om.cycles, 6.0);
  EXPECT_LT((MuscleSet::position_at(rod, om, 0.0) - 15.0 / 16.0 * 0.012 * Vec3::UnitX()).norm(),
            1e-16);
}

TEST(MuscleGeometry, PositionRateMatchesFiniteDifference) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  const double h = 1e-7;
  for (const auto& f : set) {
    for (double s : {0.013, 0.1, 0.187}) {
      const Vec3 fd = (MuscleSet::position_at(rod, f, s + h) -
                       MuscleSet::position_at(rod, f, s - h)) /
                      (2.0 * h);
      EXPECT_LT((fd - MuscleSet::position_rate_at(rod, f, s)).norm(), 1e-7) << f.name;
    }
  }
}

TEST(MuscleGeometry, ObliqueGroupsAreMirrorImages) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  const Mat3 mirror = Vec3{1.0, -1.0, 1.0}.asDiagonal();
  for (int k = 0; k < 4; ++k) {
    const MuscleFiber& plus = fiber(set, "OM+" + std::to_string(k));
    const MuscleFiber& minus = fiber(set, "OM-" + std::to_string((4 - k) % 4));
    for (std::size_t e = 0; e < rod.elements(); e += 7) {
      EXPECT_LT((mirror * plus.position[e] - minus.position[e]).norm(), 1e-15);
    }
  }
}

TEST(MuscleGeometry, RestStretchOfObliqueFibers) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  const MuscleFiber& om = fiber(set, "OM+0");
  const double s = rod.grid().element(0);
  const double r = rod.radius_at(s);
  const double twist = 2.0 * kPi * 6.0 / 0.2 * 15.0 / 16.0 * r;
  const double taper = 15.0 / 16.0 * (0.0012 - 0.012) / 0.2;
  EXPECT_NEAR(om.rest_stretch[0], std::sqrt(1.0 + twist * twist + taper * taper), 1e-14);
  EXPECT_GT(om.rest_stretch[0], 1.0);
  EXPECT_EQ(fiber(set, "TM").rest_stretch[0], 1.0);
}

TEST(MuscleStrain, Examples) {
  const RodProperties rod{untapered()};
  const MuscleSet set(rod);
  const MuscleFiber& lm0 = fiber(set, "LM0");
  EXPECT_LT((muscle_strain(Strain{}, lm0, 3) - Vec3::UnitZ()).norm(), 1e-16);

  std::mt19937_64 rng(1);
  const Strain eps = oracle::random_strain(rng);
  EXPECT_EQ(muscle_strain(eps, fiber(set, "TM"), 3), eps.nu);

  // kappa = (0, 0, 2) with |r| = 7.5 mm along d1.
  const Strain twist{Vec3::UnitZ(), Vec3{0, 0, 2}};
  EXPECT_LT((muscle_strain(twist, lm0, 3) - Vec3{0, 1.5e-2, 1}).norm(), 1e-15);
}

// The fiber tangent is d/ds (x + Q r); compare with finite differences
// along a reconstructed constant-strain pose.
TEST(MuscleStrain, MatchesFiberCurveDerivative) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(13);
  for (const auto& f : set) {
    const Strain eps = oracle::random_strain(rng);
    const double s = rod.grid().element(40), h = 1e-6;
    const auto fiber_point = [&](double t) {
      const Pose q = se3_exp(t * eps.vector());
      return Vec3(q.x + q.Q * MuscleSet::position_at(rod, f, s + t));
    };
    const Vec3 world = (fiber_point(h) - fiber_point(-h)) / (2.0 * h);
    const Vec3 expected = eps.nu + eps.kappa.cross(MuscleSet::position_at(rod, f, s)) +
                          MuscleSet::position_rate_at(rod, f, s);
    EXPECT_LT((world - expected).norm(), 1e-8) << f.name;
    EXPECT_LT((muscle_strain(eps, f, 40) - expected).norm(), 1e-15) << f.name;
  }
}

TEST(MuscleLength, Examples) {
  const RodProperties rod{untapered()};
  const MuscleSet set(rod);
  for (const auto& f : set) {
    EXPECT_NEAR(muscle_length(f, f.rest_strain[5], 5), 1.0, 1e-15) << f.name;
  }
  const MuscleFiber& tm = fiber(set, "TM");
  EXPECT_NEAR(muscle_length(tm, 4.0 * tm.rest_strain[0], 0), 0.5, 1e-15);
  const MuscleFiber& lm = fiber(set, "LM2");
  EXPECT_NEAR(muscle_length(lm, 1.2 * lm.rest_strain[0], 0), 1.2, 1e-15);
  EXPECT_THROW(muscle_length(lm, Vec3::Zero(), 0), InvalidArgument);
}

TEST(MuscleLoads, ZeroActivation) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(3);
  const Wrench w = muscle_loads(oracle::random_strain(rng), ChannelVector::Zero(), set, 10);
  EXPECT_TRUE(w.force.isZero());
  EXPECT_TRUE(w.couple.isZero());
}

TEST(MuscleLoads, LongitudinalOnStraightRod) {
  const RodProperties rod{untapered()};
  const MuscleSet set(rod);
  ChannelVector a = ChannelVector::Zero();
  a[kLongitudinal0] = 1.0;
  const Wrench w = muscle_loads(Strain{}, a, set, 7);
  const double area = kPi * 0.012 * 0.012;
  const double magnitude = 10.0e3 * area / 16.0 * 0.99;
  EXPECT_LT((w.force - magnitude * Vec3::UnitZ()).norm(), 1e-15);
  EXPECT_LT((w.couple - 5.0 / 8.0 * 0.012 * magnitude * Vec3{0, -1, 0}).norm(), 1e-16);
}

TEST(MuscleLoads, TransverseOnStraightRod) {
  const RodProperties rod{untapered()};
  const MuscleSet set(rod);
  ChannelVector a = ChannelVector::Zero();
  a[kTransverse] = 1.0;
  const Wrench w = muscle_loads(Strain{}, a, set, 7);
  const double area = kPi * 0.012 * 0.012;
  EXPECT_LT((w.force + 15.0e3 * area / 8.0 * 0.99 * Vec3::UnitZ()).norm(), 1e-14);
  EXPECT_TRUE(w.couple.isZero());
}

TEST(MuscleLoads, CoupleIsPositionCrossForce) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const Strain eps = oracle::random_strain(rng);
    for (const auto& f : set) {
      const Wrench w = fiber_loads(eps, f, 12, 0.7);
      EXPECT_LT((w.couple - f.position[12].cross(w.force)).norm(), 1e-18) << f.name;
      if (f.kind == MuscleKind::kTransverse) {
        EXPECT_TRUE(w.couple.isZero());
      }
    }
  }
}

TEST(MuscleLoads, ObliqueMirrorSymmetry) {
  const RodProperties rod{untapered()};
  const MuscleSet set(rod);
  for (double a : {0.2, 0.6, 1.0}) {
    ChannelVector plus = ChannelVector::Zero(), minus = ChannelVector::Zero();
    plus[kObliquePlus] = a;
    minus[kObliqueMinus] = a;
    for (std::size_t e : {0UL, 33UL, 99UL}) {
      const double m3p = muscle_loads(Strain{}, plus, set, e).couple.z();
      const double m3m = muscle_loads(Strain{}, minus, set, e).couple.z();
      EXPECT_NE(m3p, 0.0);
      EXPECT_LT(std::abs(m3p + m3m), 1e-12 * std::abs(m3p));
    }
  }
}

TEST(StoredEnergy, ZeroAtRest) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  for (const auto& f : set) {
    EXPECT_EQ(muscle_stored_energy(f, f.rest_strain[20], 20), 0.0) << f.name;
  }
}

TEST(StoredEnergy, GradientIsFiberForce) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& f : set) {
    for (int k = 0; k < 10; ++k) {
      const Vec3 nu_m = f.rest_strain[30] * (1.0 + 0.3 * u(rng)) +
                        0.1 * Vec3{u(rng), u(rng), u(rng)};
      const auto energy = [&](const Eigen::VectorXd& v) {
        return muscle_stored_energy(f, Vec3(v), 30);
      };
      const Eigen::VectorXd fd = oracle::central_gradient(energy, nu_m, 1e-7);
      const double sign = f.kind == MuscleKind::kTransverse ? -1.0 : 1.0;
      const Vec3 expected = sign * fiber_force(f, nu_m, 30) * nu_m.normalized();
      EXPECT_LT((fd - expected).norm(), 1e-6 * std::max(expected.norm(), 1e-6)) << f.name;
    }
  }
}

TEST(StoredEnergy, AnalyticHessianMatchesFiniteDifference) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& f : set) {
    const Vec3 nu_m = f.rest_strain[30] * (1.0 + 0.2 * u(rng)) + 0.05 * Vec3{u(rng), u(rng), u(rng)};
    const FiberResponse r = fiber_response(f, nu_m, 30, true);
    Mat3 fd;
    const double h = 1e-7;
    for (int c = 0; c < 3; ++c) {
      fd.col(c) = (fiber_response(f, nu_m + h * Vec3::Unit(c), 30, false).gradient -
                   fiber_response(f, nu_m - h * Vec3::Unit(c), 30, false).gradient) /
                  (2.0 * h);
    }
    EXPECT_LT((fd - r.hessian).norm(), 1e-5 * std::max(r.hessian.norm(), 1e-3)) << f.name;
  }
}

TEST(ActivationProfileType, BoundsAndProjection) {
  ActivationProfile a(4);
  EXPECT_THROW(a.set(0, 0, 1.5), InvalidArgument);
  EXPECT_THROW(a.set(0, 0, -0.1), InvalidArgument);
  EXPECT_THROW(a.set_channel(2, std::nan("")), InvalidArgument);
  ActivationProfile::Matrix dir = ActivationProfile::Matrix::Constant(4, kChannels, 1.0);
  dir(1, 3) = -1.0;
  const ActivationProfile b = a.projected_step(dir, 10.0);
  EXPECT_TRUE(b.within_bounds());
  EXPECT_EQ(b(0, 0), 1.0);
  EXPECT_EQ(b(1, 3), 0.0);
}

}  // namespace
}  // namespace octoarm
