#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pose_adapt/metrics.hpp"
#include "pose_adapt/spa.hpp"
#include "pose_adapt/synth.hpp"

namespace pose_adapt::experiment {

// Source-trained estimator evaluated on a target domain whose leg and arm
// bones are shorter; SPA is trained on the estimator's training-split
// predictions and the target's mean descriptor only.
struct AblationConfig {
  synth::DomainConfig target_domain = synth::DomainConfig::standard();
  synth::EstimatorNoise noise = synth::EstimatorNoise::limb_mismatch(1.15, 20.0);
  std::size_t n_train = 5000;
  std::size_t n_test = 1000;
  std::uint64_t seed = 2024;
  spa::SpaTrainConfig spa = default_spa_config();

  static spa::SpaTrainConfig default_spa_config();
};

struct AblationRow {
  std::string method;
  metrics::MetricsReport report;
  double descriptor_error = 0.0;  // mean |s(y) - s_tar|_2 on the test split
};

struct AblationResult {
  AblationRow without_spa;
  AblationRow with_spa;
  spa::TargetDescriptor s_tar;
  spa::TrainResult training;
};

double mean_descriptor_error(std::span<const Pose3D> poses, const spa::TargetDescriptor& s_tar);

std::vector<metrics::PosePair> to_pairs(std::span<const PoseRecord> records);
std::vector<Pose3D> predictions(std::span<const PoseRecord> records);

AblationResult run_ablation(const AblationConfig& config);

std::string ablation_table_csv(const AblationResult& result);
nlohmann::json to_json(const AblationConfig& config);
nlohmann::json to_json(const metrics::MetricsReport& report);
std::string metrics_csv(const metrics::MetricsReport& report);
std::string pck_curve_csv(const metrics::MetricsReport& report);
std::string spa_history_csv(std::span<const spa::EpochLosses> history);

}  // namespace pose_adapt::experiment
