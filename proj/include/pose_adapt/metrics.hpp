#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pose_adapt/pose.hpp"

namespace pose_adapt::metrics {

inline constexpr double kPckThresholdMm = 150.0;
inline constexpr int kAucPoints = 31;  // 0, 5, ..., 150 mm

std::array<double, kAucPoints> auc_thresholds();

struct SimilarityTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double scale = 1.0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  JointCoords apply(const JointCoords& coords) const;
};

struct Alignment {
  SimilarityTransform transform;
  Pose3D aligned_pred;
};

struct PosePair {
  Pose3D pred;
  Pose3D gt;
};

struct MetricsReport {
  double mpjpe_mm = 0.0;
  double pa_mpjpe_mm = 0.0;
  double pck3d_150 = 0.0;
  double auc = 0.0;
  std::array<double, kJointCount> per_joint_error_mm{};
  std::array<double, kAucPoints> pck_curve{};
  std::size_t sample_count = 0;
};

// Euclidean error per joint after pelvis-rooting both poses.
std::array<double, kJointCount> per_joint_error(const Pose3D& pred, const Pose3D& gt);

double mpjpe(const Pose3D& pred, const Pose3D& gt);

// Similarity transform (no reflection) minimizing sum_j |s R pred_j + t - gt_j|^2.
// Throws DegeneratePose when pred has no spread.
Alignment procrustes_align(const Pose3D& pred, const Pose3D& gt);

double pa_mpjpe(const Pose3D& pred, const Pose3D& gt);

// Fraction of all (sample, joint) errors <= threshold_mm. Throws EmptyInput.
double pck3d(std::span<const PosePair> pairs, double threshold_mm = kPckThresholdMm);

// Mean of pck3d over the 31-point threshold grid. Throws EmptyInput.
double auc_pck(std::span<const PosePair> pairs);

MetricsReport evaluate(std::span<const PosePair> pairs);

}  // namespace pose_adapt::metrics
