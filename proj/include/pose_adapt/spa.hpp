#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "pose_adapt/adam.hpp"
#include "pose_adapt/descriptor.hpp"
#include "pose_adapt/pose.hpp"
#include "pose_adapt/rng.hpp"

// Skeletal pose adaptation: a residual MLP head f with y_spa = y + f(y),
// trained to keep y_spa near y (L1) while pulling its skeletal descriptor
// toward a target descriptor (smoothed L2).
namespace pose_adapt::spa {

struct Architecture {
  int hidden = 1024;
  int blocks = 2;  // residual blocks, two hidden x hidden layers each
};

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  Layer() = default;
  Layer(int out, int in)
      : weight(Eigen::MatrixXd::Zero(out, in)), bias(Eigen::VectorXd::Zero(out)) {}
  std::size_t size() const { return static_cast<std::size_t>(weight.size() + bias.size()); }
};

// Weights of f. The same shape doubles as the gradient container.
struct HeadWeights {
  Layer input;
  std::vector<Layer> block_layers;  // 2 per block: [b0.first, b0.second, b1.first, ...]
  Layer output;

  static HeadWeights zeros(const Architecture& arch);
  Architecture architecture() const;

  // Fixed traversal order: input, blocks in order, output; weight then bias.
  std::vector<Eigen::Map<Eigen::VectorXd>> views();
  std::vector<Eigen::Map<const Eigen::VectorXd>> views() const;
  std::vector<std::size_t> tensor_sizes() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

struct InputStats {
  PoseVector mean = PoseVector::Zero();
  PoseVector stddev = PoseVector::Ones();

  // Per-coordinate statistics of pelvis-rooted poses. Coordinates with
  // (near) zero spread, e.g. the pelvis itself, get stddev 1.
  static InputStats from_poses(std::span<const Pose3D> poses);
};

struct SpaHeadParams {
  HeadWeights weights;
  InputStats input_stats;

  // Xavier-uniform weights, zero biases.
  static SpaHeadParams xavier(Rng& rng, const Architecture& arch = {});
  // All-zero weights: f(y) = 0.
  static SpaHeadParams zero_head(const Architecture& arch = {});

  std::size_t parameter_count() const { return weights.parameter_count(); }
  bool operator==(const SpaHeadParams& other) const;
};

// 51*h + h + 2*blocks*(h*h + h) + h*51 + 51
std::size_t closed_form_parameter_count(const Architecture& arch = {});

struct TargetDescriptor {
  DescriptorVector values = DescriptorVector::Zero();
};

enum class OutputInit { Xavier, Zero };

struct SpaTrainConfig {
  double learning_rate = 1e-4;
  double lr_decay_per_epoch = 0.95;
  int epochs = 70;
  int batch_size = 256;
  std::uint64_t seed = 0;
  double pivot_weight_pose = 1.0;
  double pivot_weight_skeleton = 1.0;
  double norm_epsilon = 1e-8;
  Architecture architecture{};
  // Zero makes the untrained head the identity map.
  OutputInit output_init = OutputInit::Xavier;

  void validate() const;
};

struct LossWeights {
  double pose = 1.0;
  double skeleton = 1.0;
  double norm_epsilon = 1e-8;

  static LossWeights from(const SpaTrainConfig& config) {
    return {config.pivot_weight_pose, config.pivot_weight_skeleton, config.norm_epsilon};
  }
};

// Activations of one forward pass over a batch (one pose per column).
struct ForwardCache {
  Eigen::MatrixXd input;                   // standardized y, 51 x B
  Eigen::MatrixXd input_pre;               // W0 x + b0
  std::vector<Eigen::MatrixXd> block_in;   // activation entering each block
  std::vector<Eigen::MatrixXd> block_pre;  // pre-rectifier of each block's first layer
  std::vector<Eigen::MatrixXd> block_mid;  // rectified first-layer output
  Eigen::MatrixXd head_in;                 // activation entering the output layer
};

struct BatchForward {
  Eigen::MatrixXd residual;  // pelvis-rerooted f(y), mm
  Eigen::MatrixXd y_spa;     // y + residual
  ForwardCache cache;
};

// Columns of `y` are flattened pelvis-rooted poses.
BatchForward forward_batch(const SpaHeadParams& params, const Eigen::MatrixXd& y);

struct SpaForward {
  Pose3D y_spa;
  PoseVector residual;
  ForwardCache cache;
};

// Throws NonFiniteActivation when the output blows up.
SpaForward spa_forward(const SpaHeadParams& params, const Pose3D& y);

struct SpaLoss {
  double total = 0.0;
  double pose_pivot = 0.0;  // sum |y_spa - y|, mm
  double skel_pivot = 0.0;  // sqrt(|s(y_spa) - s_tar|^2 + eps)
};

SpaLoss spa_loss(const Pose3D& y, const Pose3D& y_spa, const TargetDescriptor& s_tar,
                 const SkeletonSpec& spec = SkeletonSpec::canonical(),
                 const LossWeights& weights = {});

// d total / d y_spa for one sample; the pose pivot uses sign() with sign(0) = 0.
PoseVector loss_gradient_wrt_output(const Pose3D& y, const Pose3D& y_spa,
                                    const TargetDescriptor& s_tar, const SkeletonSpec& spec,
                                    const LossWeights& weights);

// Chains per-sample d loss / d y_spa (51 x B) back through the head. Returns
// the sum of per-sample parameter gradients scaled by `scale`.
HeadWeights backward_batch(const SpaHeadParams& params, const ForwardCache& cache,
                           const Eigen::MatrixXd& grad_y_spa, double scale);

// Gradient of spa_loss(y, spa_forward(params, y).y_spa, ...) w.r.t. all weights.
HeadWeights spa_backward(const SpaHeadParams& params, const ForwardCache& cache, const Pose3D& y,
                         const TargetDescriptor& s_tar, const SkeletonSpec& spec,
                         const SpaTrainConfig& config);

struct EpochLosses {
  int epoch = 0;
  double learning_rate = 0.0;
  double total = 0.0;
  double pose_pivot = 0.0;
  double skel_pivot = 0.0;
};

struct TrainResult {
  SpaHeadParams params;
  std::vector<EpochLosses> history;
};

// Only the poses are consumed; ground truth never enters training.
TrainResult train_spa(std::span<const Pose3D> poses, const TargetDescriptor& s_tar,
                      const SpaTrainConfig& config,
                      const SkeletonSpec& spec = SkeletonSpec::canonical());

std::vector<Pose3D> adapt(const SpaHeadParams& params, std::span<const Pose3D> poses);

// Checkpoint: JSON with format_version, spec_hash, dims, input_stats and
// row-major layer weights written as shortest round-trip decimals.
inline constexpr int kCheckpointFormatVersion = 1;
std::string checkpoint_to_string(const SpaHeadParams& params,
                                 const SkeletonSpec& spec = SkeletonSpec::canonical());
SpaHeadParams checkpoint_from_string(std::string_view text,
                                     const SkeletonSpec& spec = SkeletonSpec::canonical());
void save_checkpoint(const std::filesystem::path& path, const SpaHeadParams& params);
SpaHeadParams load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const SpaTrainConfig& config);
SpaTrainConfig train_config_from_json(const nlohmann::json& doc, const SpaTrainConfig& defaults);

}  // namespace pose_adapt::spa
