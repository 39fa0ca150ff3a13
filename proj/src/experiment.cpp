#include "pose_adapt/experiment.hpp"

#include "pose_adapt/error.hpp"
#include "pose_adapt/io.hpp"

namespace pose_adapt::experiment {

spa::SpaTrainConfig AblationConfig::default_spa_config() {
  spa::SpaTrainConfig c;
  c.seed = 2024;
  // A descriptor unit is roughly one shoulder width (~300 mm), so the
  // skeleton pivot needs a large weight to compete with an L1 term in mm.
  c.pivot_weight_skeleton = 3000.0;
  c.output_init = spa::OutputInit::Zero;
  return c;
}

double mean_descriptor_error(std::span<const Pose3D> poses, const spa::TargetDescriptor& s_tar) {
  if (poses.empty()) throw Error(ErrorCode::EmptyInput, "no poses");
  double sum = 0.0;
  for (const Pose3D& p : poses) sum += (skeletal_descriptor(p).values - s_tar.values).norm();
  return sum / static_cast<double>(poses.size());
}

std::vector<metrics::PosePair> to_pairs(std::span<const PoseRecord> records) {
  std::vector<metrics::PosePair> pairs;
  pairs.reserve(records.size());
  for (const PoseRecord& r : records) {
    if (!r.gt) throw Error(ErrorCode::InvalidArgument, "record has no ground truth");
    pairs.push_back({r.pred, *r.gt});
  }
  return pairs;
}

std::vector<Pose3D> predictions(std::span<const PoseRecord> records) {
  std::vector<Pose3D> poses;
  poses.reserve(records.size());
  for (const PoseRecord& r : records) poses.push_back(pelvis_root(r.pred));
  return poses;
}

AblationResult run_ablation(const AblationConfig& config) {
  const synth::Dataset train =
      synth::gen_dataset(config.target_domain, config.noise, config.n_train, mix_seed(config.seed, 0));
  const synth::Dataset test =
      synth::gen_dataset(config.target_domain, config.noise, config.n_test, mix_seed(config.seed, 1));

  AblationResult result;
  result.s_tar.values = train.mean_descriptor.values;
  const std::vector<Pose3D> train_preds = predictions(train.records);
  result.training = spa::train_spa(train_preds, result.s_tar, config.spa);

  const std::vector<Pose3D> test_preds = predictions(test.records);
  const std::vector<Pose3D> adapted = spa::adapt(result.training.params, test_preds);

  std::vector<metrics::PosePair> before = to_pairs(test.records);
  std::vector<metrics::PosePair> after = before;
  for (std::size_t i = 0; i < after.size(); ++i) after[i].pred = adapted[i];

  result.without_spa = {"without_spa", metrics::evaluate(before),
                        mean_descriptor_error(test_preds, result.s_tar)};
  result.with_spa = {"with_spa", metrics::evaluate(after),
                     mean_descriptor_error(adapted, result.s_tar)};
  return result;
}

std::string ablation_table_csv(const AblationResult& result) {
  std::string out = "method,mpjpe_mm,pa_mpjpe_mm,pck3d_150,auc,descriptor_error,sample_count\n";
  for (const AblationRow* row : {&result.without_spa, &result.with_spa}) {
    const auto& r = row->report;
    out += row->method + "," + format_double(r.mpjpe_mm) + "," + format_double(r.pa_mpjpe_mm) +
           "," + format_double(r.pck3d_150) + "," + format_double(r.auc) + "," +
           format_double(row->descriptor_error) + "," + std::to_string(r.sample_count) + "\n";
  }
  return out;
}

nlohmann::json to_json(const AblationConfig& config) {
  return {{"target_domain", synth::to_json(config.target_domain)},
          {"noise", synth::to_json(config.noise)},
          {"n_train", config.n_train},
          {"n_test", config.n_test},
          {"seed", config.seed},
          {"spa", spa::to_json(config.spa)}};
}

nlohmann::json to_json(const metrics::MetricsReport& report) {
  return {{"mpjpe_mm", report.mpjpe_mm},
          {"pa_mpjpe_mm", report.pa_mpjpe_mm},
          {"pck3d_150", report.pck3d_150},
          {"auc", report.auc},
          {"per_joint_error_mm", report.per_joint_error_mm},
          {"pck_curve", report.pck_curve},
          {"sample_count", report.sample_count}};
}

std::string metrics_csv(const metrics::MetricsReport& report) {
  std::string out = "metric,value\n";
  out += "mpjpe_mm," + format_double(report.mpjpe_mm) + "\n";
  out += "pa_mpjpe_mm," + format_double(report.pa_mpjpe_mm) + "\n";
  out += "pck3d_150," + format_double(report.pck3d_150) + "\n";
  out += "auc," + format_double(report.auc) + "\n";
  out += "sample_count," + std::to_string(report.sample_count) + "\n";
  const auto& names = SkeletonSpec::canonical().joint_names;
  for (int j = 0; j < kJointCount; ++j) {
    out += "joint_error_mm." + std::string(names[j]) + "," +
           format_double(report.per_joint_error_mm[j]) + "\n";
  }
  return out;
}

std::string pck_curve_csv(const metrics::MetricsReport& report) {
  std::string out = "threshold_mm,pck\n";
  const auto thresholds = metrics::auc_thresholds();
  for (int i = 0; i < metrics::kAucPoints; ++i) {
    out += format_double(thresholds[i]) + "," + format_double(report.pck_curve[i]) + "\n";
  }
  return out;
}

std::string spa_history_csv(std::span<const spa::EpochLosses> history) {
  std::string out = "epoch,learning_rate,total,pose_pivot,skel_pivot\n";
  for (const auto& e : history) {
    out += std::to_string(e.epoch) + "," + format_double(e.learning_rate) + "," +
           format_double(e.total) + "," + format_double(e.pose_pivot) + "," +
           format_double(e.skel_pivot) + "\n";
  }
  return out;
}

}  // namespace pose_adapt::experiment
