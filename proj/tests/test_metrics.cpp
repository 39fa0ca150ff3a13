#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "pose_adapt/error.hpp"
#include "pose_adapt/metrics.hpp"
#include "test_support.hpp"

using namespace pose_adapt;
using namespace pose_adapt::metrics;
using pose_adapt::testing::perturbed;
using pose_adapt::testing::random_rooted_pose;
using pose_adapt::testing::random_rotation;
using pose_adapt::testing::random_vector;

namespace {

// Scalar-loop oracles, written without Eigen expressions.
double joint_error_oracle(const Pose3D& pred, const Pose3D& gt, int j) {
  double sq = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double p = pred.coords(a, j) - pred.coords(a, 0);
    const double g = gt.coords(a, j) - gt.coords(a, 0);
    sq += (p - g) * (p - g);
  }
  return std::sqrt(sq);
}

double mpjpe_oracle(const Pose3D& pred, const Pose3D& gt) {
  double sum = 0.0;
  for (int j = 0; j < kJointCount; ++j) sum += joint_error_oracle(pred, gt, j);
  return sum / kJointCount;
}

double pck_oracle(const std::vector<PosePair>& pairs, double threshold) {
  long hits = 0;
  long total = 0;
  for (const auto& p : pairs) {
    for (int j = 0; j < kJointCount; ++j) {
      if (joint_error_oracle(p.pred, p.gt, j) <= threshold) ++hits;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<PosePair> noisy_pairs(std::uint64_t seed, int n, double sigma) {
  Rng rng(seed);
  std::vector<PosePair> pairs;
  for (int i = 0; i < n; ++i) {
    const Pose3D gt = random_rooted_pose(rng);
    pairs.push_back({perturbed(gt, rng, sigma), gt});
  }
  return pairs;
}

JointCoords similarity(const JointCoords& c, double s, const Eigen::Matrix3d& r,
                       const Eigen::Vector3d& t) {
  return (s * r * c).colwise() + t;
}

}  // namespace

TEST_CASE("mpjpe examples") {
  Rng rng(1);
  const Pose3D gt = random_rooted_pose(rng);
  CHECK(mpjpe(gt, gt) == 0.0);

  Pose3D moved = gt;
  moved.coords.col(joint::kLWrist) += Eigen::Vector3d(0, 170, 0);
  CHECK(mpjpe(moved, gt) == doctest::Approx(10.0).epsilon(1e-12));

  // Common translation of both poses leaves the error unchanged.
  const Eigen::Vector3d t(40, -30, 900);
  const Pose3D a = Pose3D::from_coords(moved.coords.colwise() + t);
  const Pose3D b = Pose3D::from_coords(gt.coords.colwise() + t);
  CHECK(std::abs(mpjpe(a, b) - mpjpe(moved, gt)) < 1e-9);
}

TEST_CASE("mpjpe and per-joint error match the scalar-loop oracle") {
  for (const auto& p : noisy_pairs(2, 200, 40.0)) {
    CHECK(std::abs(mpjpe(p.pred, p.gt) - mpjpe_oracle(p.pred, p.gt)) < 1e-10);
    const auto per = per_joint_error(p.pred, p.gt);
    for (int j = 0; j < kJointCount; ++j) {
      CHECK(std::abs(per[j] - joint_error_oracle(p.pred, p.gt, j)) < 1e-10);
    }
  }
}

TEST_CASE("procrustes: identity") {
  Rng rng(3);
  const Pose3D gt = random_rooted_pose(rng);
  const Alignment al = procrustes_align(gt, gt);
  CHECK((al.transform.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(al.transform.scale - 1.0) < 1e-9);
  CHECK(al.transform.translation.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(pa_mpjpe(gt, gt) < 1e-9);
}

TEST_CASE("procrustes recovers a known similarity transform") {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const Pose3D gt = random_rooted_pose(rng);
    const Eigen::Matrix3d r0 = random_rotation(rng);
    const Eigen::Vector3d t0 = random_vector(rng, 500.0);
    const Pose3D pred = Pose3D::from_coords(similarity(gt.coords, 0.7, r0, t0));
    const Alignment al = procrustes_align(pred, gt);
    CHECK((al.aligned_pred.coords - gt.coords).colwise().norm().maxCoeff() < 1e-6);
    CHECK(std::abs(al.transform.scale - 1.0 / 0.7) < 1e-9);
    CHECK((al.transform.rotation - r0.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((al.transform.apply(pred.coords) - al.aligned_pred.coords).cwiseAbs().maxCoeff() <
          1e-9);
  }
}

TEST_CASE("procrustes never returns a reflection") {
  Rng rng(5);
  const Pose3D gt = random_rooted_pose(rng);
  JointCoords mirrored = gt.coords;
  mirrored.row(0) *= -1.0;
  const Alignment al = procrustes_align(Pose3D::from_coords(mirrored), gt);
  CHECK(std::abs(al.transform.rotation.determinant() - 1.0) < 1e-9);
  CHECK(pa_mpjpe(Pose3D::from_coords(mirrored), gt) > 1.0);
}

TEST_CASE("procrustes rejects a collapsed prediction") {
  Rng rng(6);
  const Pose3D gt = random_rooted_pose(rng);
  JointCoords collapsed = JointCoords::Zero();
  collapsed.colwise() = Eigen::Vector3d(1, 2, 3);
  try {
    procrustes_align(Pose3D::from_coords(collapsed), gt);
    FAIL("expected DegeneratePose");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneratePose);
  }
}

TEST_CASE("pa_mpjpe is bounded by mpjpe and similarity invariant") {
  Rng rng(7);
  for (const auto& p : noisy_pairs(8, 200, 60.0)) {
    const double pa = pa_mpjpe(p.pred, p.gt);
    CHECK(pa <= mpjpe(p.pred, p.gt) + 1e-6);
    const JointCoords moved = similarity(p.pred.coords, rng.uniform(0.3, 3.0),
                                         random_rotation(rng), random_vector(rng, 300.0));
    CHECK(std::abs(pa_mpjpe(Pose3D::from_coords(moved), p.gt) - pa) < 1e-6);
  }
}

TEST_CASE("pck examples") {
  Rng rng(9);
  const Pose3D gt = random_rooted_pose(rng);
  std::vector<PosePair> same{{gt, gt}};
  CHECK(pck3d(same) == 1.0);
  CHECK(auc_pck(same) == 1.0);

  Pose3D off = gt;
  off.coords.col(joint::kHead) += Eigen::Vector3d(200, 0, 0);
  std::vector<PosePair> one{{off, gt}};
  CHECK(pck3d(one, 150.0) == doctest::Approx(16.0 / 17.0));

  // Inclusive comparison at exactly the threshold.
  Pose3D edge = gt;
  edge.coords.col(joint::kHead) += Eigen::Vector3d(0, 0, 150);
  std::vector<PosePair> edge_pair{{edge, gt}};
  CHECK(pck3d(edge_pair, 150.0) == 1.0);

  // Every joint except the pelvis 1000 mm off; the pelvis is rooted so rigid
  // shifts cannot produce that, hence move all non-pelvis joints.
  Pose3D far = gt;
  for (int j = 1; j < kJointCount; ++j) far.coords.col(j) += Eigen::Vector3d(1000, 0, 0);
  std::vector<PosePair> far_pair{{far, gt}};
  CHECK(auc_pck(far_pair) == doctest::Approx(1.0 / 17.0));
}

TEST_CASE("pck and auc match the brute-force oracle") {
  const auto pairs = noisy_pairs(10, 300, 70.0);
  CHECK(pck3d(pairs) == pck_oracle(pairs, 150.0));
  double mean = 0.0;
  double prev = -1.0;
  for (double t : auc_thresholds()) {
    const double v = pck3d(pairs, t);
    CHECK(v == pck_oracle(pairs, t));
    CHECK(v >= prev);
    prev = v;
    mean += v;
  }
  mean /= kAucPoints;
  CHECK(std::abs(auc_pck(pairs) - mean) < 1e-12);
}

TEST_CASE("auc thresholds span 0..150 in steps of 5") {
  const auto t = auc_thresholds();
  CHECK(t.front() == 0.0);
  CHECK(t.back() == 150.0);
  for (int i = 1; i < kAucPoints; ++i) CHECK(t[i] - t[i - 1] == 5.0);
}

TEST_CASE("empty inputs are rejected") {
  std::vector<PosePair> none;
  CHECK_THROWS_AS(pck3d(none), Error);
  CHECK_THROWS_AS(auc_pck(none), Error);
  CHECK_THROWS_AS(evaluate(none), Error);
}

TEST_CASE("evaluate aggregates all metrics") {
  const auto pairs = noisy_pairs(11, 50, 30.0);
  const MetricsReport r = evaluate(pairs);
  double m = 0.0;
  double pa = 0.0;
  for (const auto& p : pairs) {
    m += mpjpe_oracle(p.pred, p.gt);
    pa += pa_mpjpe(p.pred, p.gt);
  }
  CHECK(r.sample_count == 50);
  CHECK(std::abs(r.mpjpe_mm - m / 50) < 1e-10);
  CHECK(std::abs(r.pa_mpjpe_mm - pa / 50) < 1e-10);
  CHECK(r.pck3d_150 == pck_oracle(pairs, 150.0));
  CHECK(std::abs(r.auc - auc_pck(pairs)) < 1e-12);
  CHECK(r.pck_curve.back() == r.pck3d_150);
  double per_mean = 0.0;
  for (double e : r.per_joint_error_mm) per_mean += e;
  CHECK(std::abs(per_mean / kJointCount - r.mpjpe_mm) < 1e-10);
}
