#pragma once

#include <array>
#include <span>
#include <variant>

#include <Eigen/Core>

#include "pose_adapt/pose.hpp"

namespace pose_adapt {

struct Direct {
  int index;
};
struct Midpoint {
  int a;
  int b;
};
struct Absent {};

using JointRule = std::variant<Direct, Midpoint, Absent>;

// One rule per canonical joint describing how to obtain it from a foreign
// skeleton's joints.
struct JointMap {
  std::array<JointRule, kJointCount> rules;

  static JointMap identity();
};

// Direct copies, Midpoint averages, Absent marks the joint invalid at (0,0,0).
// Throws IndexOutOfRange for rules that reference joints the foreign pose lacks.
Pose3D map_joints(std::span<const Eigen::Vector3d> foreign_pose, const JointMap& map,
                  const SkeletonSpec& spec = SkeletonSpec::canonical());

}  // namespace pose_adapt
