#include "pose_adapt/descriptor.hpp"

#include <string>

#include "pose_adapt/error.hpp"

namespace pose_adapt {

namespace {

void require_valid(const Pose3D& pose) {
  if (!pose.all_valid()) {
    throw Error(ErrorCode::InvalidArgument, "skeletal descriptor needs every joint present");
  }
}

Eigen::Vector3d shoulder_axis(const Pose3D& pose, const SkeletonSpec& spec) {
  const auto [l, r] = spec.shoulder_pair;
  return pose.coords.col(l) - pose.coords.col(r);
}

}  // namespace

double shoulder_width(const Pose3D& pose, const SkeletonSpec& spec) {
  return shoulder_axis(pose, spec).norm();
}

SkeletalDescriptor skeletal_descriptor(const Pose3D& pose, const SkeletonSpec& spec) {
  require_valid(pose);
  const double width = shoulder_width(pose, spec);
  if (!(width >= kNormEpsilon)) {
    throw Error(ErrorCode::ZeroShoulderWidth, "shoulder width is zero");
  }
  SkeletalDescriptor out;
  for (int k = 0; k < kBoneCount; ++k) {
    const Bone& b = spec.bones[k];
    out.values[k] = (pose.coords.col(b.child) - pose.coords.col(b.parent)).norm() / width;
  }
  return out;
}

DescriptorJacobian descriptor_jacobian(const Pose3D& pose, const SkeletonSpec& spec) {
  require_valid(pose);
  const Eigen::Vector3d axis = shoulder_axis(pose, spec);
  const double width = axis.norm();
  if (!(width >= kNormEpsilon)) {
    throw Error(ErrorCode::ZeroShoulderWidth, "shoulder width is zero");
  }
  const Eigen::Vector3d axis_unit = axis / width;
  const auto [l, r] = spec.shoulder_pair;

  DescriptorJacobian jac = DescriptorJacobian::Zero();
  for (int k = 0; k < kBoneCount; ++k) {
    const Bone& b = spec.bones[k];
    const Eigen::Vector3d bone = pose.coords.col(b.child) - pose.coords.col(b.parent);
    const double length = bone.norm();
    if (!(length >= kNormEpsilon)) {
      throw Error(ErrorCode::DegenerateBone, "bone " + std::to_string(k) + " has zero length");
    }
    // d(L/W) = dL/W - L dW/W^2
    const Eigen::Vector3d d_length = bone / (length * width);
    const Eigen::Vector3d d_width = axis_unit * (length / (width * width));
    jac.block<1, 3>(k, 3 * b.child) += d_length.transpose();
    jac.block<1, 3>(k, 3 * b.parent) -= d_length.transpose();
    jac.block<1, 3>(k, 3 * l) -= d_width.transpose();
    jac.block<1, 3>(k, 3 * r) += d_width.transpose();
  }
  return jac;
}

}  // namespace pose_adapt
