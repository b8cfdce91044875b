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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "octoarm/statics.hpp"
#include "support/oracles.hpp"

namespace octoarm {
namespace {

constexpr double kPi = std::numbers::pi;

RodParameters untapered(std::size_t elements = 100) {
  RodParameters p;
  p.radius_tip = p.radius_base;
  p.elements = elements;
  return p;
}

ActivationProfile uniform(std::size_t n, std::size_t channel, double a) {
  ActivationProfile p(n);
  p.set_channel(channel, a);
  return p;
}

TEST(TotalEnergy, ReducesToElasticWithoutActivation) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const Strain eps = oracle::random_strain(rng);
    EXPECT_EQ(total_energy_density(rod, set, 4, eps, ChannelVector::Zero()),
              elastic_energy_density(rod, 4, eps));
  }
}

TEST(TotalEnergy, ZeroAtRestForAnyActivation) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(2);
  EXPECT_EQ(total_energy_density(rod, set, 4, rod.rest_strain(),
                                 oracle::random_activation(rng)),
            0.0);
}

TEST(TotalEnergy, SumDecomposition) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Strain eps = oracle::random_strain(rng);
    const ChannelVector a = oracle::random_activation(rng);
    double expected = elastic_energy_density(rod, 9, eps);
    for (const auto& f : set) {
      expected += a[static_cast<Eigen::Index>(f.channel)] *
                  muscle_stored_energy(f, muscle_strain(eps, f, 9), 9);
    }
    EXPECT_NEAR(total_energy_density(rod, set, 9, eps, a), expected,
                1e-14 * std::abs(expected));
  }
}

TEST(Residual, ZeroAtRestWithoutActivation) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  EXPECT_TRUE(equilibrium_residual(rod, set, 0, rod.rest_strain(), ChannelVector::Zero())
                  .isZero());
}

TEST(Residual, IsEnergyGradient) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, rod.elements() - 1);
  for (int k = 0; k < 100; ++k) {
    const std::size_t e = pick(rng);
    const Strain eps = oracle::random_strain(rng);
    const ChannelVector a = oracle::random_activation(rng);
    const auto w = [&](const Eigen::VectorXd& v) {
      return total_energy_density(rod, set, e, Strain::from_vector(v), a);
    };
    const Eigen::VectorXd fd = oracle::central_gradient(w, eps.vector(), 1e-7);
    const Vec6 p = equilibrium_residual(rod, set, e, eps, a);
    EXPECT_LT((fd - p).norm(), 1e-5 * p.norm()) << "sample " << k;
  }
}

TEST(Jacobian, ElasticBlockWithoutActivation) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(5);
  const Mat6 jac = equilibrium_jacobian(rod, set, 11, oracle::random_strain(rng),
                                        ChannelVector::Zero());
  Mat6 expected = Mat6::Zero();
  expected.topLeftCorner<3, 3>() = rod.S(11);
  expected.bottomRightCorner<3, 3>() = rod.B(11);
  EXPECT_EQ(jac, expected);
}

TEST(Jacobian, SymmetricAndMatchesFiniteDifference) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> pick(0, rod.elements() - 1);
  for (int k = 0; k < 50; ++k) {
    const std::size_t e = pick(rng);
    const Strain eps = oracle::random_strain(rng);
    const ChannelVector a = oracle::random_activation(rng);
    const Mat6 jac = equilibrium_jacobian(rod, set, e, eps, a);
    EXPECT_LT((jac - jac.transpose()).norm(), 1e-8 * jac.norm());
    Mat6 fd;
    const double h = 1e-7;
    for (int c = 0; c < 6; ++c) {
      Vec6 p = eps.vector(), m = eps.vector();
      p[c] += h;
      m[c] -= h;
      fd.col(c) = (equilibrium_residual(rod, set, e, Strain::from_vector(p), a) -
                   equilibrium_residual(rod, set, e, Strain::from_vector(m), a)) /
                  (2.0 * h);
    }
    EXPECT_LT((fd - jac).norm(), 1e-4 * jac.norm()) << "sample " << k;
  }
}

TEST(Sensitivity, ColumnsAreChannelLoads) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(7);
  const Strain eps = oracle::random_strain(rng);
  const ChannelVector a = oracle::random_activation(rng);
  const ChannelMatrix sens = activation_sensitivity(rod, set, 20, eps, a);
  for (std::size_t c = 0; c < kChannels; ++c) {
    const Vec6 fd = (equilibrium_residual(rod, set, 20, eps, a + 1e-6 * ChannelVector::Unit(c)) -
                     equilibrium_residual(rod, set, 20, eps, a - 1e-6 * ChannelVector::Unit(c))) /
                    2e-6;
    EXPECT_LT((fd - sens.col(static_cast<Eigen::Index>(c))).norm(),
              1e-6 * std::max(1e-9, fd.norm()));
  }
}

TEST(Solve, ZeroActivationGivesRestStrain) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  const EquilibriumField f = solve_equilibrium(rod, set, ActivationProfile(rod.elements()));
  for (const Strain& s : f.strain) {
    EXPECT_LT((s.vector() - rod.rest_strain().vector()).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_TRUE(f.all_converged());
}

// EA (nu3 - 1) = alpha sigma (A / 8) h(1 / sqrt(nu3)) on a straight section.
double transverse_oracle(double alpha) {
  const double area = kPi * 0.012 * 0.012;
  const auto p3 = [&](double nu3) {
    return 1.0e4 * area * (nu3 - 1.0) -
           alpha * 15.0e3 * area / 8.0 * oracle::force_length(std::sqrt(1.0 / nu3));
  };
  return oracle::bisect(p3, 1.0, 2.0);
}

TEST(Solve, UniformTransverseMatchesBisection) {
  const RodProperties rod{untapered(20)};
  const MuscleSet set(rod);
  for (double a : {0.25, 0.5, 1.0}) {
    const EquilibriumField f = solve_equilibrium(rod, set, uniform(20, kTransverse, a));
    const double nu3 = transverse_oracle(a);
    EXPECT_GT(nu3, 1.0);
    for (const Strain& s : f.strain) {
      EXPECT_NEAR(s.nu.z(), nu3, 1e-8);
      EXPECT_LT(s.kappa.norm(), 1e-10);
      EXPECT_LT(s.nu.head<2>().norm(), 1e-10);
    }
  }
}

// A single longitudinal fiber at (beta r, 0, 0) on a straight section only
// sees its length l = nu3 - beta r kappa2. Balance gives
//   nu3 = 1 - a f(l) / EA,  kappa2 = beta r a f(l) / EJ,
// a scalar equation in l.
struct ReducedBend {
  double nu3;
  double kappa2;
};

ReducedBend longitudinal_oracle(double alpha) {
  const double r = 0.012, beta = 5.0 / 8.0;
  const double area = kPi * r * r;
  const double ea = 1.0e4 * area;
  const double ej = 1.0e4 * area * area / (4.0 * kPi);
  const auto force = [&](double l) {
    return alpha * 10.0e3 * area / 16.0 * oracle::force_length(l);
  };
  const auto g = [&](double l) {
    return l - (1.0 - force(l) / ea - beta * r * beta * r * force(l) / ej);
  };
  const double l = oracle::bisect(g, 0.5, 1.0);
  return {1.0 - force(l) / ea, beta * r * force(l) / ej};
}

TEST(Solve, LongitudinalMatchesReducedRootFind) {
  const RodProperties rod{untapered(10)};
  const MuscleSet set(rod);
  for (double a : {0.1, 0.4, 1.0}) {
    const EquilibriumField f =
        solve_equilibrium(rod, set, uniform(10, kLongitudinal0, a));
    const ReducedBend ref = longitudinal_oracle(a);
    for (const Strain& s : f.strain) {
      EXPECT_NEAR(s.nu.z(), ref.nu3, 1e-6);
      EXPECT_NEAR(s.kappa.y(), ref.kappa2, 1e-6);
      EXPECT_LT(std::abs(s.kappa.x()) + std::abs(s.kappa.z()), 1e-10);
      // Bends toward the contracting fiber.
      EXPECT_GT(s.kappa.y(), 0.0);
    }
    const std::vector<Pose> q = reconstruct_pose(Pose{}, f.strain, rod.grid());
    EXPECT_GT(q.back().x.x(), 0.0);
  }
}

TEST(Solve, ConvergedResidualBound) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(8);
  ActivationProfile a(rod.elements());
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (std::size_t e = 0; e < rod.elements(); ++e) {
    for (std::size_t c = 0; c < kChannels; ++c) a.set(e, c, u(rng));
  }
  const EquilibriumField f = solve_equilibrium(rod, set, a);
  ASSERT_TRUE(f.all_converged());
  for (std::size_t e = 0; e < rod.elements(); ++e) {
    EXPECT_LT(equilibrium_residual(rod, set, e, f.strain[e], a.at(e)).norm(),
              1e-9 * rod.axial_stiffness(e));
  }
}

TEST(Solve, ElementOrderDoesNotMatter) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(9);
  ActivationProfile a(rod.elements());
  std::uniform_real_distribution<double> u(0.0, 0.6);
  for (std::size_t e = 0; e < rod.elements(); ++e) {
    for (std::size_t c = 0; c < kChannels; ++c) a.set(e, c, u(rng));
  }
  const EquilibriumField forward = solve_equilibrium(rod, set, a);
  std::vector<std::size_t> order(rod.elements());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t e : order) {
    Strain eps = rod.rest_strain();
    solve_element(rod, set, e, a.at(e), eps);
    EXPECT_EQ(eps.vector(), forward.strain[e].vector());
  }
}

TEST(Solve, EquilibriumIsLocalEnergyMinimum) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n;
  const ChannelVector a = oracle::random_activation(rng) * 0.5;
  for (std::size_t e : {5UL, 50UL, 95UL}) {
    Strain eps = rod.rest_strain();
    solve_element(rod, set, e, a, eps);
    const double w0 = total_energy_density(rod, set, e, eps, a);
    for (int k = 0; k < 100; ++k) {
      Vec6 d;
      for (auto& v : d) v = n(rng);
      d *= 1e-4 / d.norm();
      EXPECT_GE(total_energy_density(rod, set, e, Strain::from_vector(eps.vector() + d), a),
                w0 - 1e-12);
    }
  }
}

TEST(Solve, ImplicitSensitivityMatchesFiniteDifference) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  std::mt19937_64 rng(11);
  const ChannelVector a = 0.2 + 0.5 * oracle::random_activation(rng).array();
  const std::size_t e = 30;
  Strain eps = rod.rest_strain();
  solve_element(rod, set, e, a, eps);
  const ElementResponse r =
      evaluate_element(rod, set, e, eps, a, {.jacobian = true, .sensitivity = true});
  const Eigen::Matrix<double, 6, kChannels> implicit =
      -r.jacobian.partialPivLu().solve(r.sensitivity);
  const double h = 1e-6;
  for (std::size_t c = 0; c < kChannels; ++c) {
    Strain p = eps, m = eps;
    solve_element(rod, set, e, a + h * ChannelVector::Unit(c), p);
    solve_element(rod, set, e, a - h * ChannelVector::Unit(c), m);
    const Vec6 fd = (p.vector() - m.vector()) / (2.0 * h);
    const Vec6 col = implicit.col(static_cast<Eigen::Index>(c));
    EXPECT_LT((fd - col).norm(), 1e-3 * std::max(col.norm(), 1e-12)) << "channel " << c;
  }
}

TEST(Solve, RejectsMismatchedInput) {
  const RodProperties rod{RodParameters{}};
  const MuscleSet set(rod);
  EXPECT_THROW(solve_equilibrium(rod, set, ActivationProfile(3)), InvalidArgument);
  const std::vector<Strain> guess(4);
  EXPECT_THROW(solve_equilibrium(rod, set, ActivationProfile(rod.elements()), guess),
               InvalidArgument);
}

}  // namespace
}  // namespace octoarm
