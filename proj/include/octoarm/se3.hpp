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

// Rigid-body algebra on SO(3)/SE(3) and pose reconstruction of a rod from
// its strain field.
//
// Conventions: a twist / strain 6-vector is ordered (linear, angular), i.e.
// (nu, kappa) for strains and (v, omega) for velocities. Rotation matrices
// carry the directors d1, d2, d3 as columns.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "octoarm/errors.hpp"

namespace octoarm {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// [z]x, the skew matrix with hat(z) * y == z.cross(y).
inline Mat3 hat(const Vec3& z) {
  Mat3 m;
  m << 0.0, -z.z(), z.y(),
       z.z(), 0.0, -z.x(),
      -z.y(), z.x(), 0.0;
  return m;
}

// Inverse of hat. Rejects matrices that are not skew-symmetric.
inline Vec3 vee(const Mat3& a, double tol = 1e-12) {
  const double asym = (a + a.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= tol * std::max(1.0, a.cwiseAbs().maxCoeff()))) {
    throw InvalidArgument("vee: matrix is not skew-symmetric");
  }
  return {0.5 * (a(2, 1) - a(1, 2)), 0.5 * (a(0, 2) - a(2, 0)),
          0.5 * (a(1, 0) - a(0, 1))};
}

// vee of the skew part, for matrices built as X - X^T.
inline Vec3 vee_skew_part(const Mat3& a) {
  return {0.5 * (a(2, 1) - a(1, 2)), 0.5 * (a(0, 2) - a(2, 0)),
          0.5 * (a(1, 0) - a(0, 1))};
}

struct Strain {
  Vec3 nu{0.0, 0.0, 1.0};
  Vec3 kappa{Vec3::Zero()};

  Vec6 vector() const {
    Vec6 v;
    v << nu, kappa;
    return v;
  }
  static Strain from_vector(const Vec6& v) {
    return {v.head<3>(), v.tail<3>()};
  }
  bool finite() const { return nu.allFinite() && kappa.allFinite(); }
};

// Element of SE(3): x is the center line position, Q the director frame.
struct Pose {
  Vec3 x{Vec3::Zero()};
  Mat3 Q{Mat3::Identity()};

  static Pose identity() { return {}; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = Q;
    m.topRightCorner<3, 1>() = x;
    return m;
  }
  static Pose from_matrix(const Mat4& m) {
    return {m.topRightCorner<3, 1>(), m.topLeftCorner<3, 3>()};
  }

  Pose operator*(const Pose& rhs) const { return {x + Q * rhs.x, Q * rhs.Q}; }
  Pose inverse() const { return {-(Q.transpose() * x), Q.transpose()}; }

  Vec3 d1() const { return Q.col(0); }
  Vec3 d2() const { return Q.col(1); }
  Vec3 d3() const { return Q.col(2); }

  double orthonormality_error() const {
    return (Q.transpose() * Q - Mat3::Identity()).norm();
  }
  bool valid(double tol = 1e-10) const {
    return x.allFinite() && Q.allFinite() && orthonormality_error() <= tol &&
           std::abs(Q.determinant() - 1.0) <= tol;
  }
};

// Uniform discretization of [0, L]: N elements, N + 1 nodes.
class Grid {
 public:
  Grid(std::size_t elements, double length) : n_(elements), length_(length) {
    if (elements == 0) throw InvalidArgument("grid: zero elements");
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw InvalidArgument("grid: length must be positive");
    }
  }

  std::size_t elements() const { return n_; }
  std::size_t nodes() const { return n_ + 1; }
  double length() const { return length_; }
  double ds() const { return length_ / static_cast<double>(n_); }
  double node(std::size_t i) const {
    return length_ * static_cast<double>(i) / static_cast<double>(n_);
  }
  double element(std::size_t e) const {
    return length_ * (static_cast<double>(e) + 0.5) / static_cast<double>(n_);
  }
  // Trapezoid weight of node i over [0, L].
  double node_weight(std::size_t i) const {
    return (i == 0 || i == n_) ? 0.5 * ds() : ds();
  }

 private:
  std::size_t n_;
  double length_;
};

// Rodrigues formula.
inline Mat3 so3_exp(const Vec3& phi) {
  const double th2 = phi.squaredNorm();
  const Mat3 k = hat(phi);
  double a, b;
  if (th2 < 1e-8) {
    a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0;
    b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0;
  } else {
    const double th = std::sqrt(th2);
    a = std::sin(th) / th;
    b = (1.0 - std::cos(th)) / th2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

inline Vec3 so3_log(const Mat3& r) {
  const double c = 0.5 * (r.trace() - 1.0);
  const Vec3 w{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  // atan2 keeps full precision near 0 and pi where acos does not.
  const double th = std::atan2(0.5 * w.norm(), c);
  if (th < 1e-4) {
    // th / (2 sin th) ~ 1/2 + th^2/12
    return (0.5 + th * th / 12.0) * w;
  }
  if (M_PI - th < 1e-6) {
    // Near pi: axis from the symmetric part.
    const Mat3 s = 0.5 * (r + Mat3::Identity());
    int k = 0;
    s.diagonal().maxCoeff(&k);
    Vec3 axis = s.col(k) / std::sqrt(std::max(s(k, k), 1e-300));
    if (axis.dot(w) < 0.0) axis = -axis;
    return th * axis.normalized();
  }
  return (th / w.norm()) * w;
}

// Left Jacobian of SO(3) (the V matrix of the SE(3) exponential).
inline Mat3 so3_left_jacobian(const Vec3& phi) {
  const double th2 = phi.squaredNorm();
  const Mat3 k = hat(phi);
  double b, c;
  if (th2 < 1e-6) {
    b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0;
    c = 1.0 / 6.0 - th2 / 120.0 + th2 * th2 / 5040.0;
  } else {
    const double th = std::sqrt(th2);
    b = (1.0 - std::cos(th)) / th2;
    c = (th - std::sin(th)) / (th2 * th);
  }
  return Mat3::Identity() + b * k + c * k * k;
}

// exp of the twist (rho, phi) in se(3).
inline Pose se3_exp(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  return {so3_left_jacobian(phi) * rho, so3_exp(phi)};
}

inline Vec6 se3_log(const Pose& g) {
  const Vec3 phi = so3_log(g.Q);
  Vec6 xi;
  xi << so3_left_jacobian(phi).inverse() * g.x, phi;
  return xi;
}

// Adjoint action ad_xi as a 6x6 matrix in (linear, angular) ordering.
inline Mat6 se3_ad(const Vec6& xi) {
  Mat6 a = Mat6::Zero();
  const Mat3 w = hat(xi.tail<3>());
  a.topLeftCorner<3, 3>() = w;
  a.topRightCorner<3, 3>() = hat(xi.head<3>());
  a.bottomRightCorner<3, 3>() = w;
  return a;
}

namespace detail {

// ad_xi^T y with y = (a, b).
inline Vec6 ad_transpose_apply(const Vec6& xi, const Vec6& y) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const Vec3 a = y.head<3>();
  const Vec3 b = y.tail<3>();
  Vec6 out;
  out << -phi.cross(a), -rho.cross(a) - phi.cross(b);
  return out;
}

// B_k / k! for k = 0..kMaxBernoulli (B_1 = -1/2 convention).
inline constexpr int kMaxBernoulli = 40;
inline const std::array<double, kMaxBernoulli + 1>& bernoulli_over_factorial() {
  static const std::array<double, kMaxBernoulli + 1> table = [] {
    std::array<double, kMaxBernoulli + 1> b{};
    // Recurrence: sum_{j=0}^{k} C(k+1, j) B_j = 0.
    std::array<long double, kMaxBernoulli + 1> bern{};
    bern[0] = 1.0L;
    for (int k = 1; k <= kMaxBernoulli; ++k) {
      long double s = 0.0L;
      long double binom = 1.0L;  // C(k+1, 0)
      for (int j = 0; j < k; ++j) {
        s += binom * bern[j];
        binom = binom * static_cast<long double>(k + 1 - j) /
                static_cast<long double>(j + 1);
      }
      bern[k] = -s / static_cast<long double>(k + 1);
    }
    for (int k = 3; k <= kMaxBernoulli; k += 2) bern[k] = 0.0L;
    long double fact = 1.0L;
    for (int k = 0; k <= kMaxBernoulli; ++k) {
      if (k > 0) fact *= static_cast<long double>(k);
      b[k] = static_cast<double>(bern[k] / fact);
    }
    return b;
  }();
  return table;
}

}  // namespace detail

// J_l(xi)^T y where exp(xi + d) ~ exp(J_l(xi) d) exp(xi).
// J_l = sum_k ad^k / (k+1)!; summed on vectors until the terms vanish.
inline Vec6 se3_left_jacobian_transpose_apply(const Vec6& xi, const Vec6& y) {
  Vec6 term = y;
  Vec6 sum = y;
  for (int k = 1; k < 60; ++k) {
    term = detail::ad_transpose_apply(xi, term) / static_cast<double>(k + 1);
    sum += term;
    if (term.lpNorm<Eigen::Infinity>() <=
        1e-18 * sum.lpNorm<Eigen::Infinity>()) {
      break;
    }
  }
  return sum;
}

// J_l(xi)^{-T} y via the Bernoulli series; valid for |phi| < 2 pi.
inline Vec6 se3_left_jacobian_inverse_transpose_apply(const Vec6& xi,
                                                      const Vec6& y) {
  const auto& bk = detail::bernoulli_over_factorial();
  Vec6 power = y;
  Vec6 sum = y;
  for (int k = 1; k <= detail::kMaxBernoulli; ++k) {
    power = detail::ad_transpose_apply(xi, power);
    if (bk[k] == 0.0) continue;
    const Vec6 term = bk[k] * power;
    sum += term;
    if (k > 2 && term.lpNorm<Eigen::Infinity>() <=
                     1e-18 * sum.lpNorm<Eigen::Infinity>()) {
      break;
    }
  }
  return sum;
}

// J_r(xi) = J_l(-xi).
inline Vec6 se3_right_jacobian_inverse_transpose_apply(const Vec6& xi,
                                                       const Vec6& y) {
  return se3_left_jacobian_inverse_transpose_apply(-xi, y);
}

// Dense 6x6 left Jacobian, for tests and diagnostics.
inline Mat6 se3_left_jacobian(const Vec6& xi) {
  Mat6 jt;
  for (int c = 0; c < 6; ++c) {
    jt.col(c) = se3_left_jacobian_transpose_apply(xi, Vec6::Unit(c));
  }
  return jt.transpose();
}

// Gram-Schmidt on the columns, keeping d3 first (it carries the tangent).
inline Mat3 orthonormalize(const Mat3& q) {
  Vec3 d3 = q.col(2).normalized();
  Vec3 d1 = q.col(0) - d3.dot(q.col(0)) * d3;
  d1.normalize();
  Mat3 out;
  out.col(0) = d1;
  out.col(1) = d3.cross(d1);
  out.col(2) = d3;
  return out;
}

inline constexpr std::size_t kRenormalizeEvery = 100;

// Forward pose reconstruction q_{i+1} = q_i exp(ds * eps_i^).
inline std::vector<Pose> reconstruct_pose(const Pose& base,
                                          std::span<const Strain> strains,
                                          const Grid& grid) {
  if (strains.empty()) throw InvalidArgument("reconstruct_pose: empty grid");
  if (strains.size() != grid.elements()) {
    throw InvalidArgument("reconstruct_pose: strain count != grid elements");
  }
  const double ds = grid.ds();
  std::vector<Pose> poses;
  poses.reserve(strains.size() + 1);
  poses.push_back(base);
  for (std::size_t e = 0; e < strains.size(); ++e) {
    const Strain& eps = strains[e];
    if (!eps.finite()) {
      throw InvalidArgument("reconstruct_pose: non-finite strain");
    }
    Pose next = poses.back() * se3_exp(ds * eps.vector());
    if ((e + 1) % kRenormalizeEvery == 0) next.Q = orthonormalize(next.Q);
    poses.push_back(next);
  }
  return poses;
}

}  // namespace octoarm
