#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "pose_adapt/pose.hpp"
#include "pose_adapt/rng.hpp"

namespace pose_adapt::testing {

// Arbitrary pelvis-rooted pose with joints scattered around the origin.
inline Pose3D random_rooted_pose(Rng& rng, double spread_mm = 300.0) {
  JointCoords c;
  for (int j = 0; j < kJointCount; ++j) {
    for (int a = 0; a < 3; ++a) c(a, j) = rng.normal(0.0, spread_mm);
  }
  return pelvis_root(Pose3D::from_coords(c));
}

inline Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

inline Eigen::Vector3d random_vector(Rng& rng, double scale) {
  return {rng.normal(0.0, scale), rng.normal(0.0, scale), rng.normal(0.0, scale)};
}

// Same pose with gaussian noise added to every joint, re-rooted.
inline Pose3D perturbed(const Pose3D& pose, Rng& rng, double sigma_mm) {
  JointCoords c = pose.coords;
  for (int j = 0; j < kJointCount; ++j) {
    for (int a = 0; a < 3; ++a) c(a, j) += rng.normal(0.0, sigma_mm);
  }
  return pelvis_root(Pose3D::from_coords(c));
}

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Fresh, empty directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pose_adapt_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pose_adapt::testing
