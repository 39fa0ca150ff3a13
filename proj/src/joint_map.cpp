#include "pose_adapt/joint_map.hpp"

#include <string>

#include "pose_adapt/error.hpp"

namespace pose_adapt {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

JointMap JointMap::identity() {
  JointMap map;
  for (int j = 0; j < kJointCount; ++j) map.rules[j] = Direct{j};
  return map;
}

Pose3D map_joints(std::span<const Eigen::Vector3d> foreign_pose, const JointMap& map,
                  [[maybe_unused]] const SkeletonSpec& spec) {
  const int foreign_count = static_cast<int>(foreign_pose.size());
  auto fetch = [&](int index) -> const Eigen::Vector3d& {
    if (index < 0 || index >= foreign_count) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "joint map references foreign joint " + std::to_string(index) + " of " +
                      std::to_string(foreign_count));
    }
    const Eigen::Vector3d& p = foreign_pose[static_cast<std::size_t>(index)];
    if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "foreign joint not finite");
    return p;
  };

  Pose3D out;
  out.frame = Frame::Camera;
  for (int j = 0; j < kJointCount; ++j) {
    std::visit(Overloaded{
                   [&](const Direct& d) { out.coords.col(j) = fetch(d.index); },
                   [&](const Midpoint& m) {
                     out.coords.col(j) = 0.5 * (fetch(m.a) + fetch(m.b));
                   },
                   [&](const Absent&) {
                     out.coords.col(j).setZero();
                     out.valid[j] = false;
                   },
               },
               map.rules[j]);
  }
  return out;
}

}  // namespace pose_adapt
