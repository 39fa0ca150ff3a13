#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "pose_adapt/descriptor.hpp"
#include "pose_adapt/io.hpp"
#include "pose_adapt/pose.hpp"
#include "pose_adapt/rng.hpp"

namespace pose_adapt::synth {

inline constexpr int kMaxResampleAttempts = 100;

using BoneLengths = std::array<double, kBoneCount>;

// Rotation of a bone relative to its parent bone's frame:
// Rz(azimuth) * Ry(elevation) applied to the bone's rest direction.
struct AngleRange {
  double azimuth_lo = 0.0;
  double azimuth_hi = 0.0;
  double elevation_lo = 0.0;
  double elevation_hi = 0.0;
};

struct DomainConfig {
  BoneLengths bone_length_mean{};
  BoneLengths bone_length_std{};
  std::array<AngleRange, kBoneCount> joint_angle_ranges{};
  std::uint64_t seed = 0;

  void validate() const;

  // Adult proportions (mm) with moderate joint articulation.
  static DomainConfig standard();
  // Same lengths, zero spread, every angle collapsed to the rest T-pose.
  static DomainConfig t_pose();
};

struct EstimatorNoise {
  std::array<double, kJointCount> per_joint_sigma_mm{};
  std::array<double, kBoneCount> limb_bias{};

  void validate() const;

  static EstimatorNoise identity();
  // Leg and arm bones scaled by `factor`, isotropic noise `sigma_mm` on every joint.
  static EstimatorNoise limb_mismatch(double factor, double sigma_mm);
};

// Unit bone direction in the rest T-pose (z up, subject's left along +x).
Eigen::Vector3d rest_direction(int bone);

// Leg (hip-knee, knee-ankle) and arm (shoulder-elbow, elbow-wrist) bone indices.
std::vector<int> leg_bones();
std::vector<int> arm_bones();

// Per-bone Gaussian lengths, redrawn while below 0.1 * mean.
BoneLengths sample_skeleton(const DomainConfig& config, Rng& rng);

// Forward kinematics from the pelvis at the origin.
Pose3D pose_from_lengths_and_angles(const BoneLengths& lengths,
                                    const std::array<std::pair<double, double>, kBoneCount>& angles);

Pose3D sample_pose(const DomainConfig& config, Rng& rng);

// Scales every bone vector by its bias along the tree, adds per-joint noise,
// re-roots at the pelvis.
Pose3D simulate_prediction(const Pose3D& gt, const EstimatorNoise& noise, Rng& rng);

struct Dataset {
  std::vector<PoseRecord> records;
  SkeletalDescriptor mean_descriptor;  // over gt poses
};

// Sample i draws from Rng(mix_seed(seed, i)), so output does not depend on
// how generation is sharded.
Dataset gen_dataset(const DomainConfig& domain, const EstimatorNoise& noise, std::size_t n,
                    std::uint64_t seed);

nlohmann::json to_json(const DomainConfig& config);
nlohmann::json to_json(const EstimatorNoise& noise);
DomainConfig domain_from_json(const nlohmann::json& doc, const DomainConfig& defaults);
EstimatorNoise noise_from_json(const nlohmann::json& doc, const EstimatorNoise& defaults);

nlohmann::json dataset_metadata(const DomainConfig& domain, const EstimatorNoise& noise,
                                std::size_t n, std::uint64_t seed,
                                const SkeletalDescriptor& mean_descriptor);

}  // namespace pose_adapt::synth
