#include "pose_adapt/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "pose_adapt/error.hpp"

namespace pose_adapt::synth {

namespace {

using std::numbers::pi;

Eigen::Matrix3d local_rotation(double azimuth, double elevation) {
  return (Eigen::AngleAxisd(azimuth, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(elevation, Eigen::Vector3d::UnitY()))
      .toRotationMatrix();
}

// Parent bone of bone k, or -1 when the bone hangs off the pelvis.
int parent_bone(int k) {
  const int parent_joint = SkeletonSpec::canonical().bones[k].parent;
  return parent_joint == joint::kPelvis ? -1 : parent_joint - 1;
}

template <std::size_t N>
nlohmann::json array_json(const std::array<double, N>& values) {
  return nlohmann::json(std::vector<double>(values.begin(), values.end()));
}

template <std::size_t N>
void read_array(const nlohmann::json& doc, const char* key, std::array<double, N>& out) {
  if (!doc.contains(key)) return;
  const auto& arr = doc[key];
  if (!arr.is_array() || arr.size() != N) {
    throw Error(ErrorCode::ParseError,
                std::string(key) + " must have " + std::to_string(N) + " entries");
  }
  for (std::size_t i = 0; i < N; ++i) out[i] = arr[i].get<double>();
}

}  // namespace

Eigen::Vector3d rest_direction(int bone) {
  using namespace joint;
  const Bone& b = SkeletonSpec::canonical().bones[bone];
  switch (b.child) {
    case kRHip: return -Eigen::Vector3d::UnitX();
    case kLHip: return Eigen::Vector3d::UnitX();
    case kRKnee:
    case kRAnkle:
    case kLKnee:
    case kLAnkle: return -Eigen::Vector3d::UnitZ();
    case kSpine:
    case kThorax:
    case kNeck:
    case kHead: return Eigen::Vector3d::UnitZ();
    case kLShoulder:
    case kLElbow:
    case kLWrist: return Eigen::Vector3d::UnitX();
    default: return -Eigen::Vector3d::UnitX();  // right arm chain
  }
}

std::vector<int> leg_bones() { return {1, 2, 4, 5}; }
std::vector<int> arm_bones() { return {11, 12, 14, 15}; }

void DomainConfig::validate() const {
  for (int k = 0; k < kBoneCount; ++k) {
    if (!(bone_length_mean[k] > 0.0) || !std::isfinite(bone_length_mean[k])) {
      throw Error(ErrorCode::InvalidArgument, "bone length means must be positive");
    }
    if (!(bone_length_std[k] >= 0.0) || !std::isfinite(bone_length_std[k])) {
      throw Error(ErrorCode::InvalidArgument, "bone length stds must be non-negative");
    }
    const AngleRange& r = joint_angle_ranges[k];
    for (double v : {r.azimuth_lo, r.azimuth_hi, r.elevation_lo, r.elevation_hi}) {
      if (!(v >= -pi && v <= pi)) {
        throw Error(ErrorCode::InvalidArgument, "angle ranges must lie within [-pi, pi]");
      }
    }
    if (r.azimuth_lo > r.azimuth_hi || r.elevation_lo > r.elevation_hi) {
      throw Error(ErrorCode::InvalidArgument, "angle range has lo > hi");
    }
  }
}

DomainConfig DomainConfig::standard() {
  DomainConfig c;
  c.bone_length_mean = {130, 440, 430, 130, 440, 430, 230, 250,
                        115, 115, 145, 280, 250, 145, 280, 250};
  for (int k = 0; k < kBoneCount; ++k) c.bone_length_std[k] = 0.02 * c.bone_length_mean[k];

  auto range = [](double az, double el) { return AngleRange{-az, az, -el, el}; };
  const AngleRange hip = range(0.1, 0.1);
  const AngleRange thigh = range(0.3, 0.4);
  const AngleRange shin = range(0.2, 0.5);
  const AngleRange shoulder = range(0.15, 0.15);
  const AngleRange upper_arm = range(0.8, 0.9);
  const AngleRange forearm = range(0.8, 0.8);
  c.joint_angle_ranges = {hip,           thigh,           shin,     hip,
                          thigh,         shin,            range(0.3, 0.2), range(0.3, 0.15),
                          range(0.3, 0.2), range(0.3, 0.2), shoulder, upper_arm,
                          forearm,       shoulder,        upper_arm, forearm};
  c.seed = 7;
  return c;
}

DomainConfig DomainConfig::t_pose() {
  DomainConfig c = standard();
  c.bone_length_std.fill(0.0);
  c.joint_angle_ranges.fill(AngleRange{});
  return c;
}

void EstimatorNoise::validate() const {
  for (double s : per_joint_sigma_mm) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::InvalidArgument, "noise sigmas must be non-negative");
    }
  }
  for (double b : limb_bias) {
    if (!(b > 0.0) || !std::isfinite(b)) {
      throw Error(ErrorCode::InvalidArgument, "limb bias factors must be positive");
    }
  }
}

EstimatorNoise EstimatorNoise::identity() {
  EstimatorNoise n;
  n.per_joint_sigma_mm.fill(0.0);
  n.limb_bias.fill(1.0);
  return n;
}

EstimatorNoise EstimatorNoise::limb_mismatch(double factor, double sigma_mm) {
  EstimatorNoise n = identity();
  for (int k : leg_bones()) n.limb_bias[k] = factor;
  for (int k : arm_bones()) n.limb_bias[k] = factor;
  n.per_joint_sigma_mm.fill(sigma_mm);
  return n;
}

BoneLengths sample_skeleton(const DomainConfig& config, Rng& rng) {
  BoneLengths lengths{};
  for (int k = 0; k < kBoneCount; ++k) {
    const double mean = config.bone_length_mean[k];
    const double floor = 0.1 * mean;
    int attempt = 0;
    double len = 0.0;
    do {
      if (++attempt > kMaxResampleAttempts) {
        throw Error(ErrorCode::ResampleExhausted,
                    "bone " + std::to_string(k) + " length resampling exhausted");
      }
      len = config.bone_length_std[k] > 0.0 ? rng.normal(mean, config.bone_length_std[k]) : mean;
    } while (len < floor);
    lengths[k] = len;
  }
  return lengths;
}

Pose3D pose_from_lengths_and_angles(
    const BoneLengths& lengths, const std::array<std::pair<double, double>, kBoneCount>& angles) {
  const SkeletonSpec& spec = SkeletonSpec::canonical();
  std::array<Eigen::Matrix3d, kBoneCount> frames;
  Pose3D pose;
  pose.frame = Frame::PelvisRooted;
  // Bones are stored parent-first, so every parent frame exists when needed.
  for (int k = 0; k < kBoneCount; ++k) {
    const int pb = parent_bone(k);
    const Eigen::Matrix3d parent = pb < 0 ? Eigen::Matrix3d::Identity() : frames[pb];
    frames[k] = parent * local_rotation(angles[k].first, angles[k].second);
    const Bone& b = spec.bones[k];
    pose.coords.col(b.child) = pose.coords.col(b.parent) + lengths[k] * (frames[k] * rest_direction(k));
  }
  return pose;
}

Pose3D sample_pose(const DomainConfig& config, Rng& rng) {
  for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
    const BoneLengths lengths = sample_skeleton(config, rng);
    std::array<std::pair<double, double>, kBoneCount> angles;
    for (int k = 0; k < kBoneCount; ++k) {
      const AngleRange& r = config.joint_angle_ranges[k];
      angles[k].first = rng.uniform(r.azimuth_lo, r.azimuth_hi);
      angles[k].second = rng.uniform(r.elevation_lo, r.elevation_hi);
    }
    Pose3D pose = pose_from_lengths_and_angles(lengths, angles);
    if (shoulder_width(pose, SkeletonSpec::canonical()) >= kNormEpsilon) return pose;
  }
  throw Error(ErrorCode::ResampleExhausted, "could not sample a pose with nonzero shoulder width");
}

Pose3D simulate_prediction(const Pose3D& gt, const EstimatorNoise& noise, Rng& rng) {
  const SkeletonSpec& spec = SkeletonSpec::canonical();
  Pose3D pred = gt;
  pred.frame = Frame::PelvisRooted;
  pred.coords.col(joint::kPelvis) = gt.coords.col(joint::kPelvis);
  for (int k = 0; k < kBoneCount; ++k) {
    const Bone& b = spec.bones[k];
    const Eigen::Vector3d bone = gt.coords.col(b.child) - gt.coords.col(b.parent);
    pred.coords.col(b.child) = pred.coords.col(b.parent) + noise.limb_bias[k] * bone;
  }
  for (int j = 0; j < kJointCount; ++j) {
    const double sigma = noise.per_joint_sigma_mm[j];
    for (int a = 0; a < 3; ++a) {
      const double z = rng.normal();
      pred.coords(a, j) += sigma * z;
    }
  }
  return pelvis_root(pred);
}

Dataset gen_dataset(const DomainConfig& domain, const EstimatorNoise& noise, std::size_t n,
                    std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "dataset size must be at least 1");
  domain.validate();
  noise.validate();
  Dataset out;
  out.records.reserve(n);
  DescriptorVector sum = DescriptorVector::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, i));
    Pose3D gt = sample_pose(domain, rng);
    Pose3D pred = simulate_prediction(gt, noise, rng);
    sum += skeletal_descriptor(gt).values;
    out.records.push_back(PoseRecord{std::move(pred), std::move(gt)});
  }
  out.mean_descriptor.values = sum / static_cast<double>(n);
  return out;
}

nlohmann::json to_json(const DomainConfig& config) {
  nlohmann::json ranges = nlohmann::json::array();
  for (const AngleRange& r : config.joint_angle_ranges) {
    ranges.push_back({{"azimuth", {r.azimuth_lo, r.azimuth_hi}},
                      {"elevation", {r.elevation_lo, r.elevation_hi}}});
  }
  return {{"bone_length_mean", array_json(config.bone_length_mean)},
          {"bone_length_std", array_json(config.bone_length_std)},
          {"joint_angle_ranges", ranges},
          {"seed", config.seed}};
}

nlohmann::json to_json(const EstimatorNoise& noise) {
  return {{"per_joint_sigma_mm", array_json(noise.per_joint_sigma_mm)},
          {"limb_bias", array_json(noise.limb_bias)}};
}

DomainConfig domain_from_json(const nlohmann::json& doc, const DomainConfig& defaults) {
  DomainConfig c = defaults;
  try {
    read_array(doc, "bone_length_mean", c.bone_length_mean);
    read_array(doc, "bone_length_std", c.bone_length_std);
    if (doc.contains("joint_angle_ranges")) {
      const auto& arr = doc["joint_angle_ranges"];
      if (!arr.is_array() || arr.size() != kBoneCount) {
        throw Error(ErrorCode::ParseError, "joint_angle_ranges must have 16 entries");
      }
      for (int k = 0; k < kBoneCount; ++k) {
        const auto& r = arr[static_cast<std::size_t>(k)];
        c.joint_angle_ranges[k] = AngleRange{r.at("azimuth").at(0).get<double>(),
                                             r.at("azimuth").at(1).get<double>(),
                                             r.at("elevation").at(0).get<double>(),
                                             r.at("elevation").at(1).get<double>()};
      }
    }
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("domain config: ") + e.what());
  }
  c.validate();
  return c;
}

EstimatorNoise noise_from_json(const nlohmann::json& doc, const EstimatorNoise& defaults) {
  EstimatorNoise n = defaults;
  try {
    read_array(doc, "per_joint_sigma_mm", n.per_joint_sigma_mm);
    read_array(doc, "limb_bias", n.limb_bias);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("noise config: ") + e.what());
  }
  n.validate();
  return n;
}

nlohmann::json dataset_metadata(const DomainConfig& domain, const EstimatorNoise& noise,
                                std::size_t n, std::uint64_t seed,
                                const SkeletalDescriptor& mean_descriptor) {
  std::vector<double> mean(mean_descriptor.values.data(),
                           mean_descriptor.values.data() + kBoneCount);
  return {{"domain", to_json(domain)},
          {"noise", to_json(noise)},
          {"n", n},
          {"seed", seed},
          {"mean_descriptor", mean}};
}

}  // namespace pose_adapt::synth
