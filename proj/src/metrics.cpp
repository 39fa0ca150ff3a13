#include "pose_adapt/metrics.hpp"

#include <algorithm>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "pose_adapt/error.hpp"

namespace pose_adapt::metrics {

namespace {

// Squared centered norm (mm^2) below which a pose counts as collapsed.
constexpr double kDegenerateVariance = 1e-18;

void require_valid(const Pose3D& pred, const Pose3D& gt) {
  if (!pred.all_valid() || !gt.all_valid()) {
    throw Error(ErrorCode::InvalidArgument, "metrics need every joint present in pred and gt");
  }
}

void require_nonempty(std::span<const PosePair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no pose pairs");
}

// Joint errors of every pair, pairs in order, joints in order.
std::vector<double> all_joint_errors(std::span<const PosePair> pairs) {
  std::vector<double> errors;
  errors.reserve(pairs.size() * kJointCount);
  for (const auto& p : pairs) {
    const auto e = per_joint_error(p.pred, p.gt);
    errors.insert(errors.end(), e.begin(), e.end());
  }
  return errors;
}

double fraction_within(const std::vector<double>& errors, double threshold_mm) {
  std::size_t hits = 0;
  for (double e : errors) hits += e <= threshold_mm ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

}  // namespace

std::array<double, kAucPoints> auc_thresholds() {
  std::array<double, kAucPoints> t{};
  for (int i = 0; i < kAucPoints; ++i) t[i] = 5.0 * i;
  return t;
}

JointCoords SimilarityTransform::apply(const JointCoords& coords) const {
  JointCoords out = scale * (rotation * coords);
  out.colwise() += translation;
  return out;
}

std::array<double, kJointCount> per_joint_error(const Pose3D& pred, const Pose3D& gt) {
  require_valid(pred, gt);
  const JointCoords diff = pelvis_root(pred).coords - pelvis_root(gt).coords;
  std::array<double, kJointCount> out{};
  for (int j = 0; j < kJointCount; ++j) out[j] = diff.col(j).norm();
  return out;
}

double mpjpe(const Pose3D& pred, const Pose3D& gt) {
  const auto e = per_joint_error(pred, gt);
  double sum = 0.0;
  for (double v : e) sum += v;
  return sum / kJointCount;
}

Alignment procrustes_align(const Pose3D& pred, const Pose3D& gt) {
  require_valid(pred, gt);
  const Eigen::Vector3d mu_pred = pred.coords.rowwise().mean();
  const Eigen::Vector3d mu_gt = gt.coords.rowwise().mean();
  const JointCoords x = pred.coords.colwise() - mu_pred;
  const JointCoords y = gt.coords.colwise() - mu_gt;

  const double var_pred = x.squaredNorm();
  if (!(var_pred > kDegenerateVariance)) {
    throw Error(ErrorCode::DegeneratePose, "prediction has zero spread; alignment undefined");
  }

  // Cross-covariance gt * pred^T; R = U diag(1, 1, sign) V^T.
  const Eigen::Matrix3d cov = y * x.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Vector3d signs(1.0, 1.0, 1.0);
  if ((u * v.transpose()).determinant() < 0.0) signs(2) = -1.0;

  SimilarityTransform t;
  t.rotation = u * signs.asDiagonal() * v.transpose();
  t.scale = svd.singularValues().dot(signs) / var_pred;
  t.translation = mu_gt - t.scale * t.rotation * mu_pred;

  Alignment out{t, pred};
  out.aligned_pred.coords = t.apply(pred.coords);
  return out;
}

double pa_mpjpe(const Pose3D& pred, const Pose3D& gt) {
  const Alignment a = procrustes_align(pred, gt);
  double sum = 0.0;
  for (int j = 0; j < kJointCount; ++j) {
    sum += (a.aligned_pred.coords.col(j) - gt.coords.col(j)).norm();
  }
  return sum / kJointCount;
}

double pck3d(std::span<const PosePair> pairs, double threshold_mm) {
  require_nonempty(pairs);
  if (!(threshold_mm >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative PCK threshold");
  return fraction_within(all_joint_errors(pairs), threshold_mm);
}

double auc_pck(std::span<const PosePair> pairs) {
  require_nonempty(pairs);
  const auto errors = all_joint_errors(pairs);
  double sum = 0.0;
  for (double t : auc_thresholds()) sum += fraction_within(errors, t);
  return sum / kAucPoints;
}

MetricsReport evaluate(std::span<const PosePair> pairs) {
  require_nonempty(pairs);
  MetricsReport report;
  report.sample_count = pairs.size();
  std::vector<double> errors;
  errors.reserve(pairs.size() * kJointCount);
  double mpjpe_sum = 0.0;
  double pa_sum = 0.0;
  for (const auto& p : pairs) {
    const auto e = per_joint_error(p.pred, p.gt);
    double sample_sum = 0.0;
    for (int j = 0; j < kJointCount; ++j) {
      report.per_joint_error_mm[j] += e[j];
      sample_sum += e[j];
    }
    errors.insert(errors.end(), e.begin(), e.end());
    mpjpe_sum += sample_sum / kJointCount;
    pa_sum += pa_mpjpe(p.pred, p.gt);
  }
  const double n = static_cast<double>(pairs.size());
  for (double& v : report.per_joint_error_mm) v /= n;
  report.mpjpe_mm = mpjpe_sum / n;
  report.pa_mpjpe_mm = pa_sum / n;
  report.pck3d_150 = fraction_within(errors, kPckThresholdMm);
  const auto thresholds = auc_thresholds();
  double auc_sum = 0.0;
  for (int i = 0; i < kAucPoints; ++i) {
    report.pck_curve[i] = fraction_within(errors, thresholds[i]);
    auc_sum += report.pck_curve[i];
  }
  report.auc = auc_sum / kAucPoints;
  return report;
}

}  // namespace pose_adapt::metrics
