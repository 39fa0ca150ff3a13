#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "pose_adapt/rng.hpp"

// Semantic-aware adversarial adaptation on toy feature grids: a per-joint,
// per-cell (kernel-size-one) discriminator evaluated only at each joint's own
// channel and location, trained against a per-cell feature map G and a
// per-joint readout T.
namespace pose_adapt::saa {

struct FeatureGrid {
  int height = 8;
  int width = 8;
  int channels = 32;
  Eigen::MatrixXd data;  // channels x (height * width), cell = row * width + col

  FeatureGrid() = default;
  FeatureGrid(int h, int w, int c);

  int cell_index(int row, int col) const { return row * width + col; }
  int cell_count() const { return height * width; }
};

struct GridLoc {
  int row = 0;
  int col = 0;
};

enum class Domain : int { Real = 0, Synthetic = 1 };

struct DomainSample {
  FeatureGrid features;
  std::vector<GridLoc> joint_locs;  // one per joint
  Domain domain_flag = Domain::Real;
  Eigen::MatrixXd task_target;      // 3 x N; empty for real-analog samples

  int joint_count() const { return static_cast<int>(joint_locs.size()); }
  void validate() const;
};

struct Dense {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  static Dense zeros(int out, int in);
  static Dense xavier(int out, int in, Rng& rng);
};

// C -> hidden -> hidden -> N at every cell, rectified hidden layers, sigmoid output.
struct DiscriminatorParams {
  Dense layer1;
  Dense layer2;
  Dense layer3;

  static DiscriminatorParams zeros(int channels, int hidden, int joints);
  static DiscriminatorParams xavier(int channels, int hidden, int joints, Rng& rng);
  int channels() const { return static_cast<int>(layer1.weight.cols()); }
  int joints() const { return static_cast<int>(layer3.weight.rows()); }
};

// Per-cell affine map C -> C.
struct GeneratorParams {
  Dense map;
  static GeneratorParams xavier(int channels, Rng& rng);
};

// Per-joint linear readout of the feature at the joint's location: 3 x C each.
struct TaskHeadParams {
  std::vector<Dense> readouts;
  static TaskHeadParams xavier(int channels, int joints, Rng& rng);
};

// probs(i, cell) for joint channel i.
struct ProbabilityGrid {
  int height = 0;
  int width = 0;
  Eigen::MatrixXd probs;  // N x (height * width)

  double at(int row, int col, int joint) const { return probs(joint, row * width + col); }
};

enum class ConfusionForm { SymmetricUniformCe, LiteralEq2 };

const char* to_string(ConfusionForm form);
ConfusionForm confusion_form_from_string(std::string_view text);

struct SaaTrainConfig {
  double lambda_conf = 0.1;
  int d_steps = 1;
  int gt_steps = 1;
  double learning_rate = 1e-3;
  int epochs = 15;
  std::vector<int> lr_drop_epochs{11, 13};
  double lr_drop_factor = 0.1;
  int batch_size = 32;
  double prob_clamp = 1e-7;
  ConfusionForm confusion_form = ConfusionForm::SymmetricUniformCe;
  int disc_hidden = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

// Throws DimensionMismatch when the grid's channel count differs from D's input.
ProbabilityGrid disc_forward(const DiscriminatorParams& d, const FeatureGrid& grid,
                             double prob_clamp = 1e-7);

// -sum_i [d log p_i + (1 - d) log(1 - p_i)], p_i = channel i at joint i's cell.
double saa_d_loss(const ProbabilityGrid& probs, std::span<const GridLoc> joint_locs,
                  Domain domain_flag);

// Symmetric: -sum_i 0.5 [log p_i + log(1 - p_i)]. Literal: -sum_i 0.5 log p_i.
double confusion_loss(const ProbabilityGrid& probs, std::span<const GridLoc> joint_locs,
                      ConfusionForm form);

// L1 over all task components plus lambda * conf.
double saa_gt_loss(const Eigen::MatrixXd& task_pred, const Eigen::MatrixXd& task_target,
                   double conf, double lambda);

FeatureGrid apply_generator(const GeneratorParams& g, const FeatureGrid& grid);
Eigen::MatrixXd task_predict(const TaskHeadParams& t, const FeatureGrid& features,
                             std::span<const GridLoc> joint_locs);

struct SaaEpoch {
  int epoch = 0;
  double d_accuracy = 0.0;      // held-out, at joint locations
  double task_loss = 0.0;       // held-out mean L1 per synthetic sample
  double confusion_loss = 0.0;  // held-out mean per sample, configured form
};

struct SaaModel {
  GeneratorParams g;
  TaskHeadParams t;
  DiscriminatorParams d;
};

struct SaaResult {
  SaaModel model;
  std::vector<SaaEpoch> history;
};

struct EvalSets {
  std::span<const DomainSample> real;
  std::span<const DomainSample> synth;
};

// Fraction of (sample, joint) pairs where D's channel at the joint location
// lands on the correct side of 0.5.
double disc_accuracy(const SaaModel& model, std::span<const DomainSample> samples,
                     double prob_clamp);
double mean_task_loss(const SaaModel& model, std::span<const DomainSample> synth);
double mean_confusion_loss(const SaaModel& model, std::span<const DomainSample> samples,
                           ConfusionForm form, double prob_clamp);

// Alternating D / GT phases over balanced batches from both domains. Held-out
// sets drive the per-epoch history; when empty the training sets are used.
SaaResult adversarial_train(std::span<const DomainSample> real_set,
                            std::span<const DomainSample> synth_set, const SaaTrainConfig& config,
                            EvalSets held_out = {});

// Phase updates exposed for testing; each touches only its own networks.
struct PhaseState;
class SaaTrainer {
 public:
  SaaTrainer(const SaaTrainConfig& config, int channels, int joints);
  ~SaaTrainer();

  const SaaModel& model() const { return model_; }
  SaaModel& model() { return model_; }

  // Returns the mean Eq. (1) loss of the step.
  double d_step(std::span<const DomainSample* const> real_batch,
                std::span<const DomainSample* const> synth_batch);
  // Returns the mean GT loss of the step.
  double gt_step(std::span<const DomainSample* const> real_batch,
                 std::span<const DomainSample* const> synth_batch);
  void set_learning_rate(double lr);

 private:
  SaaTrainConfig config_;
  SaaModel model_;
  std::unique_ptr<PhaseState> state_;
};

// Toy two-domain generator. Joint features carry a shared per-joint content
// embedding of the task target plus a domain offset confined to the last
// `domain_dims` channels (linearly separable by construction).
struct ToyDomainConfig {
  int height = 8;
  int width = 8;
  int channels = 32;
  int joints = 17;
  int domain_dims = 4;
  double domain_margin = 2.0;
  double noise_sigma = 0.5;
  std::uint64_t world_seed = 11;
};

std::vector<DomainSample> make_toy_domain(const ToyDomainConfig& config, Domain domain,
                                          std::size_t n, std::uint64_t seed);

nlohmann::json to_json(const SaaTrainConfig& config);
SaaTrainConfig train_config_from_json(const nlohmann::json& doc, const SaaTrainConfig& defaults);

}  // namespace pose_adapt::saa
