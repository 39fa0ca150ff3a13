#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>

#include <Eigen/Core>

namespace pose_adapt {

inline constexpr int kJointCount = 17;
inline constexpr int kBoneCount = 16;
inline constexpr int kPoseDim = 3 * kJointCount;

// Column j holds joint j. Flattened column-major this is (x0, y0, z0, x1, ...),
// so joint j axis a lives at flat index 3j + a.
using JointCoords = Eigen::Matrix<double, 3, kJointCount>;
using PoseVector = Eigen::Matrix<double, kPoseDim, 1>;

struct Bone {
  int parent;
  int child;
};

// Canonical 17-joint skeleton (Human3.6M ordering). Bones form a tree rooted at
// the pelvis; bone k always has child joint k + 1.
struct SkeletonSpec {
  std::array<std::string_view, kJointCount> joint_names;
  std::array<Bone, kBoneCount> bones;
  std::pair<int, int> shoulder_pair;  // (left, right)

  static const SkeletonSpec& canonical();

  // Throws InvalidArgument when the tree/shoulder invariants do not hold.
  void validate() const;
  int index_of(std::string_view name) const;
  // FNV-1a over names, bones and shoulder pair; stamped into checkpoints.
  std::uint64_t hash() const;
};

namespace joint {
inline constexpr int kPelvis = 0;
inline constexpr int kRHip = 1;
inline constexpr int kRKnee = 2;
inline constexpr int kRAnkle = 3;
inline constexpr int kLHip = 4;
inline constexpr int kLKnee = 5;
inline constexpr int kLAnkle = 6;
inline constexpr int kSpine = 7;
inline constexpr int kThorax = 8;
inline constexpr int kNeck = 9;
inline constexpr int kHead = 10;
inline constexpr int kLShoulder = 11;
inline constexpr int kLElbow = 12;
inline constexpr int kLWrist = 13;
inline constexpr int kRShoulder = 14;
inline constexpr int kRElbow = 15;
inline constexpr int kRWrist = 16;
}  // namespace joint

enum class Frame { Camera, PelvisRooted };

std::string_view to_string(Frame frame);
Frame frame_from_string(std::string_view text);

struct Pose3D {
  JointCoords coords = JointCoords::Zero();
  Frame frame = Frame::Camera;
  std::array<bool, kJointCount> valid = make_all_valid();

  static Pose3D from_coords(const JointCoords& coords, Frame frame = Frame::Camera) {
    return Pose3D{coords, frame, make_all_valid()};
  }
  static Pose3D from_flat(const PoseVector& flat, Frame frame);

  PoseVector flat() const;
  bool all_valid() const;
  bool all_finite() const;
  Eigen::Vector3d joint(int j) const { return coords.col(j); }

  bool operator==(const Pose3D& other) const;

 private:
  static constexpr std::array<bool, kJointCount> make_all_valid() {
    std::array<bool, kJointCount> v{};
    v.fill(true);
    return v;
  }
};

// Subtracts the pelvis from every joint. Idempotent.
Pose3D pelvis_root(const Pose3D& pose);

}  // namespace pose_adapt
