#pragma once

#include <Eigen/Core>

#include "pose_adapt/pose.hpp"

namespace pose_adapt {

// Norms below this (mm) are treated as degenerate.
inline constexpr double kNormEpsilon = 1e-9;

using DescriptorVector = Eigen::Matrix<double, kBoneCount, 1>;
using DescriptorJacobian = Eigen::Matrix<double, kBoneCount, kPoseDim>;

// Bone lengths divided by shoulder width, in the skeleton's bone order.
// Invariant under translation, rotation and uniform scaling of the pose.
struct SkeletalDescriptor {
  DescriptorVector values = DescriptorVector::Zero();
};

double shoulder_width(const Pose3D& pose, const SkeletonSpec& spec);

// Throws ZeroShoulderWidth when the shoulders coincide.
SkeletalDescriptor skeletal_descriptor(const Pose3D& pose,
                                       const SkeletonSpec& spec = SkeletonSpec::canonical());

// d values[k] / d coords[j][a] at column 3j + a. Throws DegenerateBone when any
// bone has zero length, ZeroShoulderWidth as above.
DescriptorJacobian descriptor_jacobian(const Pose3D& pose,
                                       const SkeletonSpec& spec = SkeletonSpec::canonical());

}  // namespace pose_adapt
