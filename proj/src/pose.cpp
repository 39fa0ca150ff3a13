#include "pose_adapt/pose.hpp"

#include <string>
#include <vector>

#include "pose_adapt/error.hpp"

namespace pose_adapt {

const SkeletonSpec& SkeletonSpec::canonical() {
  using namespace joint;
  static const SkeletonSpec spec{
      {"pelvis", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle", "spine", "thorax",
       "neck", "head", "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist"},
      {{{kPelvis, kRHip},
        {kRHip, kRKnee},
        {kRKnee, kRAnkle},
        {kPelvis, kLHip},
        {kLHip, kLKnee},
        {kLKnee, kLAnkle},
        {kPelvis, kSpine},
        {kSpine, kThorax},
        {kThorax, kNeck},
        {kNeck, kHead},
        {kThorax, kLShoulder},
        {kLShoulder, kLElbow},
        {kLElbow, kLWrist},
        {kThorax, kRShoulder},
        {kRShoulder, kRElbow},
        {kRElbow, kRWrist}}},
      {kLShoulder, kRShoulder}};
  return spec;
}

void SkeletonSpec::validate() const {
  auto in_range = [](int i) { return i >= 0 && i < kJointCount; };
  std::array<int, kJointCount> parent_of{};
  parent_of.fill(-1);
  for (const Bone& b : bones) {
    if (!in_range(b.parent) || !in_range(b.child)) {
      throw Error(ErrorCode::InvalidArgument, "bone index out of range");
    }
    if (b.child == 0) throw Error(ErrorCode::InvalidArgument, "pelvis cannot be a child");
    if (parent_of[b.child] != -1) {
      throw Error(ErrorCode::InvalidArgument, "joint has two parents");
    }
    parent_of[b.child] = b.parent;
  }
  // Every non-root joint must reach the pelvis without revisiting a node.
  for (int j = 1; j < kJointCount; ++j) {
    int cur = j;
    int steps = 0;
    while (cur != 0) {
      cur = parent_of[cur];
      if (cur < 0 || ++steps > kJointCount) {
        throw Error(ErrorCode::InvalidArgument, "bones do not form a tree rooted at the pelvis");
      }
    }
  }
  const auto [l, r] = shoulder_pair;
  if (!in_range(l) || !in_range(r) || l == r) {
    throw Error(ErrorCode::InvalidArgument, "invalid shoulder pair");
  }
}

int SkeletonSpec::index_of(std::string_view name) const {
  for (int j = 0; j < kJointCount; ++j) {
    if (joint_names[j] == name) return j;
  }
  throw Error(ErrorCode::IndexOutOfRange, "unknown joint name: " + std::string(name));
}

std::uint64_t SkeletonSpec::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (auto name : joint_names) {
    for (char c : name) mix(static_cast<unsigned char>(c));
    mix(0);
  }
  for (const Bone& b : bones) {
    mix(static_cast<unsigned char>(b.parent));
    mix(static_cast<unsigned char>(b.child));
  }
  mix(static_cast<unsigned char>(shoulder_pair.first));
  mix(static_cast<unsigned char>(shoulder_pair.second));
  return h;
}

std::string_view to_string(Frame frame) {
  return frame == Frame::Camera ? "camera" : "pelvis_rooted";
}

Frame frame_from_string(std::string_view text) {
  if (text == "camera") return Frame::Camera;
  if (text == "pelvis_rooted") return Frame::PelvisRooted;
  throw Error(ErrorCode::ParseError, "unknown frame: " + std::string(text));
}

Pose3D Pose3D::from_flat(const PoseVector& flat, Frame frame) {
  Pose3D pose;
  pose.coords = Eigen::Map<const JointCoords>(flat.data());
  pose.frame = frame;
  return pose;
}

PoseVector Pose3D::flat() const { return Eigen::Map<const PoseVector>(coords.data()); }

bool Pose3D::all_valid() const {
  for (bool v : valid) {
    if (!v) return false;
  }
  return true;
}

bool Pose3D::all_finite() const { return coords.allFinite(); }

bool Pose3D::operator==(const Pose3D& other) const {
  return frame == other.frame && valid == other.valid && coords == other.coords;
}

Pose3D pelvis_root(const Pose3D& pose) {
  Pose3D out = pose;
  const Eigen::Vector3d pelvis = pose.coords.col(joint::kPelvis);
  out.coords.colwise() -= pelvis;
  out.coords.col(joint::kPelvis).setZero();
  out.frame = Frame::PelvisRooted;
  return out;
}

}  // namespace pose_adapt
