// Control-barrier velocity filter for single-integrator robots.
//
// Each robot minimizes ||v - v_desired||^2 subject to
//   pairwise separation   (p_i - p_j)^T v >= -(gamma/4) (||p_i - p_j||^2 - (2R)^2)
//   keep-in               p_i^T v <= (gamma/2) (r_keep^2 - ||p_i||^2)
//   speed                 ||v|| <= v_max
// The pairwise barrier h = ||p_i - p_j||^2 - (2R)^2 is split evenly between the
// two robots. The program is two-dimensional, so its optimum has at most two
// active constraints and is found exactly by enumerating active sets.
#ifndef COLONY_SAFETY_HPP
#define COLONY_SAFETY_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace colony {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
using Vec2 = Vec2T<double>;

template <typename Scalar>
struct SafetyConfigT {
  Scalar collision_radius{0.25};  // R, per robot
  Scalar keep_in_radius{30};
  Scalar gamma{1};  // barrier gain, 1/s
  Scalar v_max{1};
};
using SafetyConfig = SafetyConfigT<double>;

/// Linear velocity constraint normal^T v <= bound.
template <typename Scalar>
struct HalfPlaneT {
  Vec2T<Scalar> normal;
  Scalar bound;

  Scalar slack(const Vec2T<Scalar>& v) const { return bound - normal.dot(v); }
};
using HalfPlane = HalfPlaneT<double>;

template <typename Scalar>
struct FilterResultT {
  Vec2T<Scalar> velocity = Vec2T<Scalar>::Zero();
  bool feasible = true;
};
using FilterResult = FilterResultT<double>;

/// Barrier constraints on robot `index` from its neighbors and the keep-in
/// disk. Constraints that no velocity inside the speed disk can violate are
/// omitted.
template <typename Scalar>
std::vector<HalfPlaneT<Scalar>> barrier_constraints(std::size_t index, std::span<const Vec2T<Scalar>> positions,
                                                    const SafetyConfigT<Scalar>& config) {
  std::vector<HalfPlaneT<Scalar>> out;
  const Vec2T<Scalar>& self = positions[index];
  const Scalar min_sep2 = Scalar(4) * config.collision_radius * config.collision_radius;
  auto keep = [&](const Vec2T<Scalar>& normal, Scalar bound) {
    if (bound >= normal.norm() * config.v_max) return;  // redundant inside the speed disk
    out.push_back({normal, bound});
  };
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (j == index) continue;
    const Vec2T<Scalar> rel = self - positions[j];
    keep(-rel, config.gamma / Scalar(4) * (rel.squaredNorm() - min_sep2));
  }
  keep(self, config.gamma / Scalar(2) * (config.keep_in_radius * config.keep_in_radius - self.squaredNorm()));
  return out;
}

/// Exact minimizer of ||v - desired|| over the half-planes and the disk
/// ||v|| <= v_max. Infeasible programs return the zero vector.
template <typename Scalar>
FilterResultT<Scalar> solve_min_deviation(const Vec2T<Scalar>& desired, std::span<const HalfPlaneT<Scalar>> planes,
                                          Scalar v_max) {
  using V = Vec2T<Scalar>;
  const Scalar tol = Scalar(1e-9);
  auto feasible = [&](const V& v) {
    if (v.norm() > v_max * (Scalar(1) + tol) + tol) return false;
    for (const auto& h : planes)
      if (h.slack(v) < -tol * (Scalar(1) + std::abs(h.bound))) return false;
    return true;
  };

  V desired_in_disk = desired;
  if (desired.norm() > v_max) desired_in_disk = desired * (v_max / desired.norm());
  if (feasible(desired_in_disk)) return {desired_in_disk, true};

  bool found = false;
  V best = V::Zero();
  Scalar best_cost = std::numeric_limits<Scalar>::infinity();
  auto consider = [&](const V& v) {
    const Scalar cost = (v - desired).squaredNorm();
    if (cost < best_cost && feasible(v)) {
      best = v;
      best_cost = cost;
      found = true;
    }
  };

  for (std::size_t k = 0; k < planes.size(); ++k) {
    const auto& a = planes[k];
    const Scalar nn = a.normal.squaredNorm();
    if (nn <= Scalar(0)) continue;
    // Projection onto the boundary line.
    const V foot = desired - ((a.normal.dot(desired) - a.bound) / nn) * a.normal;
    consider(foot);
    // Line meets the speed circle.
    const V base = (a.bound / nn) * a.normal;
    const Scalar chord2 = v_max * v_max - base.squaredNorm();
    if (chord2 >= Scalar(0)) {
      const V dir = V(-a.normal.y(), a.normal.x()) / std::sqrt(nn);
      const Scalar half = std::sqrt(chord2);
      consider(base + half * dir);
      consider(base - half * dir);
    }
    for (std::size_t l = k + 1; l < planes.size(); ++l) {
      const auto& b = planes[l];
      const Scalar det = a.normal.x() * b.normal.y() - a.normal.y() * b.normal.x();
      if (std::abs(det) <= Scalar(1e-14) * std::sqrt(nn * b.normal.squaredNorm())) continue;
      const V corner((a.bound * b.normal.y() - b.bound * a.normal.y()) / det,
                     (a.normal.x() * b.bound - b.normal.x() * a.bound) / det);
      consider(corner);
    }
  }
  if (desired.norm() > Scalar(0)) consider(desired * (v_max / desired.norm()));

  if (!found) return {V::Zero(), false};
  if (best.norm() > v_max) best *= v_max / best.norm();
  return {best, true};
}

/// Safe velocity for robot `index` given every active robot's position.
template <typename Scalar>
FilterResultT<Scalar> filter_velocity(std::size_t index, const Vec2T<Scalar>& desired,
                                      std::span<const Vec2T<Scalar>> positions, const SafetyConfigT<Scalar>& config) {
  const auto planes = barrier_constraints(index, positions, config);
  return solve_min_deviation<Scalar>(desired, planes, config.v_max);
}

}  // namespace colony

#endif  // COLONY_SAFETY_HPP
