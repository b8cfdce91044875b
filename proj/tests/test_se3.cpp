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
#include <vector>

#include <gtest/gtest.h>

#include "octoarm/se3.hpp"
#include "support/oracles.hpp"

namespace octoarm {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Hat, MatchesDefinition) {
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(hat(Vec3{1, 2, 3}), expected);
  EXPECT_EQ(hat(Vec3::UnitX()) * Vec3::UnitY(), Vec3::UnitZ());
}

TEST(Hat, VeeInvertsHat) {
  const Vec3 z{0.3, -1.0, 2.0};
  EXPECT_TRUE(vee(hat(z)).isApprox(z, 1e-15));
}

TEST(Hat, CrossProductForRandomVectors) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int k = 0; k < 50; ++k) {
    const Vec3 z{n(rng), n(rng), n(rng)}, y{n(rng), n(rng), n(rng)};
    EXPECT_LT((hat(z) * y - z.cross(y)).norm(), 1e-14);
  }
}

TEST(Hat, VeeRejectsNonSkew) {
  Mat3 a = hat(Vec3{1, 2, 3});
  a(0, 1) += 1e-6;
  EXPECT_THROW(vee(a), InvalidArgument);
}

TEST(So3, ExpLogRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    Vec3 phi{u(rng), u(rng), u(rng)};
    phi *= 3.0 * std::abs(u(rng)) / std::max(phi.norm(), 1e-12);
    const Mat3 r = so3_exp(phi);
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-14);
    EXPECT_LT((so3_log(r) - phi).norm(), 1e-10);
  }
}

TEST(So3, ExpMatchesMatrixExponential) {
  const Vec3 phi{0.4, -1.2, 2.0};
  Vec6 xi = Vec6::Zero();
  xi.tail<3>() = phi;
  const Mat4 ref = oracle::expm(oracle::twist_matrix(xi));
  EXPECT_LT((so3_exp(phi) - ref.topLeftCorner<3, 3>()).norm(), 1e-13);
}

TEST(So3, LogNearPi) {
  const Vec3 axis = Vec3{1, 2, -1}.normalized();
  const Mat3 r = so3_exp((kPi - 1e-9) * axis);
  const Vec3 phi = so3_log(r);
  EXPECT_NEAR(phi.norm(), kPi - 1e-9, 1e-6);
  EXPECT_LT((so3_exp(phi) - r).norm(), 1e-8);
}

TEST(Se3, ExpMatchesMatrixExponential) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 50; ++k) {
    Vec6 xi;
    for (auto& v : xi) v = u(rng);
    ASSERT_LT(xi.tail<3>().norm(), kPi);
    const Mat4 ref = oracle::expm(oracle::twist_matrix(xi));
    EXPECT_LT((se3_exp(xi).matrix() - ref).norm(), 1e-12);
    EXPECT_LT((se3_log(se3_exp(xi)) - xi).norm(), 1e-9);
  }
}

// exp(xi + h d) = exp(h J_l(xi) d) exp(xi) + O(h^2).
TEST(Se3, LeftJacobianMatchesFiniteDifference) {
  const Vec6 xi{0.3, -0.2, 1.1, 0.7, -0.4, 0.9};
  const Mat6 jl = se3_left_jacobian(xi);
  const double h = 1e-6;
  for (int c = 0; c < 6; ++c) {
    const Vec6 d = Vec6::Unit(c);
    const Pose p = se3_exp(xi + h * d), m = se3_exp(xi - h * d);
    const Vec6 fd = (se3_log(p * se3_exp(xi).inverse()) -
                     se3_log(m * se3_exp(xi).inverse())) /
                    (2.0 * h);
    EXPECT_LT((fd - jl.col(c)).norm(), 1e-7) << "column " << c;
  }
}

TEST(Se3, InverseJacobianApplications) {
  const Vec6 xi{0.05, 0.01, 0.02, 0.3, -0.2, 0.1};
  const Vec6 y{1.0, -2.0, 0.5, 0.3, 0.2, -0.7};
  const Mat6 jl = se3_left_jacobian(xi);
  const Mat6 jr = se3_left_jacobian(-xi);
  EXPECT_LT((se3_left_jacobian_transpose_apply(xi, y) - jl.transpose() * y).norm(),
            1e-13);
  EXPECT_LT((jl.transpose() * se3_left_jacobian_inverse_transpose_apply(xi, y) - y)
                .norm(),
            1e-12);
  EXPECT_LT((jr.transpose() * se3_right_jacobian_inverse_transpose_apply(xi, y) - y)
                .norm(),
            1e-12);
}

TEST(PoseType, ComposeAndInverse) {
  std::mt19937_64 rng(5);
  const Pose a{Vec3{1, 2, 3}, oracle::random_rotation(rng)};
  const Pose b{Vec3{-1, 0.5, 2}, oracle::random_rotation(rng)};
  EXPECT_LT(((a * b).matrix() - a.matrix() * b.matrix()).norm(), 1e-14);
  EXPECT_LT(((a * a.inverse()).matrix() - Mat4::Identity()).norm(), 1e-14);
  EXPECT_TRUE(a.valid());
  Pose bad = a;
  bad.Q(0, 0) += 1e-6;
  EXPECT_FALSE(bad.valid());
}

TEST(GridType, NodesAndWeights) {
  const Grid g(100, 0.2);
  EXPECT_DOUBLE_EQ(g.ds(), 0.002);
  EXPECT_EQ(g.node(0), 0.0);
  EXPECT_EQ(g.node(100), 0.2);
  double sum = 0.0;
  for (std::size_t i = 0; i < g.nodes(); ++i) {
    sum += g.node_weight(i);
    if (i > 0) {
      EXPECT_GT(g.node(i), g.node(i - 1));
    }
  }
  EXPECT_NEAR(sum, 0.2, 1e-15);
  EXPECT_THROW(Grid(0, 0.2), InvalidArgument);
  EXPECT_THROW(Grid(10, -1.0), InvalidArgument);
}

std::vector<Pose> uniform(const Strain& eps, std::size_t n, double length) {
  const Grid g(n, length);
  const std::vector<Strain> field(n, eps);
  return reconstruct_pose(Pose{}, field, g);
}

TEST(Reconstruct, StraightRod) {
  const auto q = uniform(Strain{}, 50, 0.2);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_LT((q[i].x - (0.2 * i / 50.0) * Vec3::UnitZ()).norm(), 1e-15);
    EXPECT_LT((q[i].Q - Mat3::Identity()).norm(), 1e-15);
  }
}

TEST(Reconstruct, PureTwist) {
  const double length = 0.2;
  const auto q = uniform(Strain{Vec3::UnitZ(), Vec3{0, 0, kPi / length}}, 40, length);
  EXPECT_LT((q.back().x - length * Vec3::UnitZ()).norm(), 1e-14);
  const Mat3 expected = Vec3{-1, -1, 1}.asDiagonal();
  EXPECT_LT((q.back().Q - expected).norm(), 1e-12);
}

TEST(Reconstruct, CircularArc) {
  const double radius = 0.05, length = 0.2;
  const auto q = uniform(Strain{Vec3::UnitZ(), Vec3{1.0 / radius, 0, 0}}, 64, length);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double s = length * i / 64.0;
    const Vec3 arc{0.0, -radius * (1.0 - std::cos(s / radius)), radius * std::sin(s / radius)};
    EXPECT_LT((q[i].x - arc).norm(), 1e-13) << "node " << i;
  }
}

TEST(Reconstruct, ConstantStrainMatchesMatrixExponential) {
  std::mt19937_64 rng(21);
  const double length = 0.2;
  for (int k = 0; k < 20; ++k) {
    Strain eps = oracle::random_strain(rng, 1.0);
    eps.kappa *= (10.0 / length) / std::max(eps.kappa.norm(), 1e-12) *
                 std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto q = uniform(eps, 100, length);
    for (std::size_t i = 0; i < q.size(); i += 10) {
      const Mat4 ref = oracle::expm(oracle::twist_matrix(length * i / 100.0 * eps.vector()));
      EXPECT_LT((q[i].matrix() - ref).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Reconstruct, RejectsBadInput) {
  const Grid g(4, 0.2);
  EXPECT_THROW(reconstruct_pose(Pose{}, std::vector<Strain>{}, g), InvalidArgument);
  std::vector<Strain> field(4);
  field[2].kappa[0] = std::nan("");
  EXPECT_THROW(reconstruct_pose(Pose{}, field, g), InvalidArgument);
  EXPECT_THROW(reconstruct_pose(Pose{}, std::vector<Strain>(3), g), InvalidArgument);
}

TEST(Reconstruct, OrthonormalityAfterRepeatedCalls) {
  std::mt19937_64 rng(4);
  const Grid g(100, 0.2);
  std::vector<Strain> field(100);
  for (auto& e : field) e = oracle::random_strain(rng, 20.0);
  Pose base;
  for (int k = 0; k < 10000; ++k) base = reconstruct_pose(base, field, g).back();
  EXPECT_LT(base.orthonormality_error(), 1e-8);
  EXPECT_NEAR(base.Q.determinant(), 1.0, 1e-10);
}

// x(L) for a smooth, non-constant strain field converges at second order
// when the field is sampled at element midpoints.
TEST(Reconstruct, RefinementOrder) {
  const double length = 0.2;
  const auto tip = [&](std::size_t n) {
    const Grid g(n, length);
    std::vector<Strain> field(n);
    for (std::size_t e = 0; e < n; ++e) {
      const double s = g.element(e);
      field[e].nu = Vec3{0.02 * std::sin(20 * s), 0.0, 1.0 + 0.1 * s};
      field[e].kappa = Vec3{10.0 * std::cos(15 * s), 5.0 + 30 * s, 8.0 * s};
    }
    return reconstruct_pose(Pose{}, field, g).back().x;
  };
  const Vec3 fine = tip(3200);
  std::vector<double> logn, loge;
  for (std::size_t n : {25, 50, 100, 200}) {
    logn.push_back(std::log(static_cast<double>(n)));
    loge.push_back(std::log((tip(n) - fine).norm()));
  }
  const double mx = (logn[0] + logn[1] + logn[2] + logn[3]) / 4.0;
  const double my = (loge[0] + loge[1] + loge[2] + loge[3]) / 4.0;
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 4; ++k) {
    num += (logn[k] - mx) * (loge[k] - my);
    den += (logn[k] - mx) * (logn[k] - mx);
  }
  EXPECT_GE(-num / den, 1.9);
}

TEST(Orthonormalize, RestoresRotation) {
  std::mt19937_64 rng(9);
  Mat3 q = oracle::random_rotation(rng);
  q += 1e-6 * Mat3::Random();
  const Mat3 r = orthonormalize(q);
  EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-14);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-14);
  EXPECT_LT((r - q).norm(), 1e-5);
}

}  // namespace
}  // namespace octoarm
