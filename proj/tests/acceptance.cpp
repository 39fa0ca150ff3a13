// Acceptance checks: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset; exit status is non-zero if any check fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "pose_adapt/cli.hpp"
#include "pose_adapt/descriptor.hpp"
#include "pose_adapt/experiment.hpp"
#include "pose_adapt/io.hpp"
#include "pose_adapt/metrics.hpp"
#include "pose_adapt/saa.hpp"
#include "pose_adapt/spa.hpp"
#include "pose_adapt/synth.hpp"
#include "spa_gradcheck.hpp"
#include "test_support.hpp"

using namespace pose_adapt;
using pose_adapt::testing::perturbed;
using pose_adapt::testing::random_rooted_pose;
using pose_adapt::testing::random_rotation;
using pose_adapt::testing::random_vector;
using pose_adapt::testing::relative_error;
using pose_adapt::testing::TempDir;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------

void descriptor_correctness(Outcome& o) {
  Rng rng(1001);
  double worst_invariance = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Pose3D p = random_rooted_pose(rng);
    const JointCoords moved = (rng.uniform(0.1, 10.0) * random_rotation(rng) * p.coords).colwise() +
                              random_vector(rng, 2000.0);
    const auto d = skeletal_descriptor(Pose3D::from_coords(moved)).values -
                   skeletal_descriptor(p).values;
    worst_invariance = std::max(worst_invariance, d.cwiseAbs().maxCoeff());
  }
  double worst_jacobian = 0.0;
  const double h = 1e-3;
  for (int i = 0; i < 20; ++i) {
    const Pose3D p = random_rooted_pose(rng);
    const DescriptorJacobian jac = descriptor_jacobian(p);
    for (int col = 0; col < kPoseDim; ++col) {
      PoseVector plus = p.flat();
      PoseVector minus = p.flat();
      plus(col) += h;
      minus(col) -= h;
      const DescriptorVector fd =
          (skeletal_descriptor(Pose3D::from_flat(plus, Frame::Camera)).values -
           skeletal_descriptor(Pose3D::from_flat(minus, Frame::Camera)).values) /
          (2.0 * h);
      for (int k = 0; k < kBoneCount; ++k) {
        worst_jacobian = std::max(worst_jacobian, relative_error(jac(k, col), fd(k), 1e-6));
      }
    }
  }
  o.detail << "similarity invariance max |d| " << sci(worst_invariance)
           << ", jacobian vs central FD max rel " << sci(worst_jacobian) << "; ";
  o.require(worst_invariance < 1e-8, "invariance < 1e-8");
  o.require(worst_jacobian < 1e-5, "jacobian rel < 1e-5");
}

void spa_gradient_fidelity(Outcome& o) {
  Rng rng(2002);
  const spa::Architecture full{};
  double worst = 0.0;
  double worst_dir = 0.0;
  int checked = 0;
  int skipped = 0;
  int skipped_rectifier = 0;
  int points = 0;
  while (points < 20) {
    spa::SpaHeadParams p = spa::SpaHeadParams::xavier(rng, full);
    for (auto& v : p.weights.views()) {
      if (v.size() <= full.hidden) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal(0.0, 0.05);
      }
    }
    for (int i = 3; i < kPoseDim; ++i) {
      p.input_stats.mean[i] = rng.normal(0.0, 50.0);
      p.input_stats.stddev[i] = rng.uniform(80.0, 300.0);
    }
    const Pose3D y = random_rooted_pose(rng);
    if (!pose_adapt::testing::residual_clear_of_kinks(p, y)) continue;
    spa::TargetDescriptor t;
    for (int k = 0; k < kBoneCount; ++k) t.values[k] = rng.uniform(0.3, 2.0);
    spa::SpaTrainConfig cfg;
    cfg.pivot_weight_skeleton = points % 2 == 0 ? 1.0 : 3000.0;
    const auto s = pose_adapt::testing::check_spa_gradient(p, y, t, cfg, rng, 12);
    worst = std::max(worst, s.max_rel_error);
    worst_dir = std::max(worst_dir, s.directional_rel);
    checked += s.checked;
    skipped += s.skipped_kinks;
    skipped_rectifier += s.skipped_rectifier;
    ++points;
  }
  o.detail << "20 points on the " << full.hidden << "-wide head: " << checked
           << " coordinates, max rel " << sci(worst) << ", directional max rel " << sci(worst_dir)
           << ", stencils skipped at kinks: " << skipped << " L1, " << skipped_rectifier
           << " rectifier; ";
  o.require(worst < 1e-4 && worst_dir < 1e-4, "rel error < 1e-4");
}

void procrustes_suite(Outcome& o) {
  Rng rng(3003);
  double worst_recovery = 0.0;
  double worst_orth = 0.0;
  double worst_det = 0.0;
  auto track_rotation = [&](const Eigen::Matrix3d& r) {
    worst_orth = std::max(worst_orth,
                          (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
    worst_det = std::max(worst_det, std::abs(r.determinant() - 1.0));
  };
  for (int i = 0; i < 100; ++i) {
    const Pose3D gt = random_rooted_pose(rng);
    const JointCoords moved =
        (rng.uniform(0.2, 5.0) * random_rotation(rng) * gt.coords).colwise() +
        random_vector(rng, 1000.0);
    const Pose3D pred = Pose3D::from_coords(moved);
    worst_recovery = std::max(worst_recovery, metrics::pa_mpjpe(pred, gt));
    track_rotation(metrics::procrustes_align(pred, gt).transform.rotation);
  }
  double worst_gap = -1e300;
  for (int i = 0; i < 1000; ++i) {
    const Pose3D gt = random_rooted_pose(rng);
    Pose3D pred = perturbed(gt, rng, rng.uniform(5.0, 150.0));
    if (i % 10 == 0) pred.coords.row(0) *= -1.0;  // include reflections
    worst_gap = std::max(worst_gap, metrics::pa_mpjpe(pred, gt) - metrics::mpjpe(pred, gt));
    track_rotation(metrics::procrustes_align(pred, gt).transform.rotation);
  }
  o.detail << "transformed-gt pa_mpjpe max " << sci(worst_recovery)
           << " mm, max(pa - mpjpe) " << sci(worst_gap) << " mm, |R^T R - I| max "
           << sci(worst_orth) << ", |det - 1| max " << sci(worst_det) << "; ";
  o.require(worst_recovery < 1e-6, "recovery < 1e-6 mm");
  o.require(worst_gap <= 1e-6, "pa <= mpjpe + 1e-6");
  o.require(worst_orth < 1e-9 && worst_det < 1e-9, "rotation orthonormal, det +1");
}

void metric_oracles(Outcome& o) {
  Rng rng(4004);
  std::vector<metrics::PosePair> pairs;
  for (int i = 0; i < 1000; ++i) {
    const Pose3D gt = random_rooted_pose(rng);
    JointCoords c = perturbed(gt, rng, rng.uniform(10.0, 120.0)).coords;
    c.colwise() += random_vector(rng, 500.0);  // unrooted prediction
    pairs.push_back({Pose3D::from_coords(c), gt});
  }
  // Scalar loops, independent of the library's Eigen expressions.
  std::vector<std::array<double, kJointCount>> errors;
  double mpjpe_worst = 0.0;
  for (const auto& p : pairs) {
    std::array<double, kJointCount> e{};
    double sum = 0.0;
    for (int j = 0; j < kJointCount; ++j) {
      double sq = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double d = (p.pred.coords(a, j) - p.pred.coords(a, 0)) -
                         (p.gt.coords(a, j) - p.gt.coords(a, 0));
        sq += d * d;
      }
      e[j] = std::sqrt(sq);
      sum += e[j];
    }
    errors.push_back(e);
    mpjpe_worst = std::max(mpjpe_worst, std::abs(metrics::mpjpe(p.pred, p.gt) - sum / kJointCount));
  }
  auto pck_oracle = [&](double threshold) {
    long hits = 0;
    for (const auto& e : errors) {
      for (double v : e) hits += v <= threshold ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(errors.size() * kJointCount);
  };
  double pck_worst = 0.0;
  double auc_oracle = 0.0;
  bool monotone = true;
  double prev = -1.0;
  for (double t : metrics::auc_thresholds()) {
    const double v = metrics::pck3d(pairs, t);
    pck_worst = std::max(pck_worst, std::abs(v - pck_oracle(t)));
    auc_oracle += pck_oracle(t);
    monotone = monotone && v >= prev;
    prev = v;
  }
  auc_oracle /= metrics::kAucPoints;
  const double auc_err = std::abs(metrics::auc_pck(pairs) - auc_oracle);
  o.detail << "1000 pairs: mpjpe max |d| " << sci(mpjpe_worst) << ", pck max |d| "
           << sci(pck_worst) << ", auc |d| " << sci(auc_err) << ", pck monotone "
           << (monotone ? "yes" : "no") << "; ";
  o.require(mpjpe_worst < 1e-10 && pck_worst < 1e-10 && auc_err < 1e-10, "oracle agreement");
  o.require(monotone, "pck monotone");
}

void ablation_analog(Outcome& o) {
  const experiment::AblationConfig config;
  const auto r = experiment::run_ablation(config);
  const double reduction = 1.0 - r.with_spa.descriptor_error / r.without_spa.descriptor_error;
  o.detail << config.n_train << "/" << config.n_test << " pairs, " << config.spa.epochs
           << " epochs: descriptor error " << sci(r.without_spa.descriptor_error) << " -> "
           << sci(r.with_spa.descriptor_error) << " (" << sci(100.0 * reduction)
           << "% lower), PA-MPJPE " << sci(r.without_spa.report.pa_mpjpe_mm) << " -> "
           << sci(r.with_spa.report.pa_mpjpe_mm) << " mm, 3DPCK@150 "
           << sci(r.without_spa.report.pck3d_150) << " -> " << sci(r.with_spa.report.pck3d_150)
           << "; ";
  o.require(reduction >= 0.5, "descriptor error reduced >= 50%");
  o.require(r.with_spa.report.pa_mpjpe_mm < r.without_spa.report.pa_mpjpe_mm,
            "PA-MPJPE strictly improved");
  o.require(r.with_spa.report.pck3d_150 >= r.without_spa.report.pck3d_150,
            "3DPCK not decreased");
}

void saa_behavior(Outcome& o) {
  const saa::ToyDomainConfig toy;
  const std::size_t n = 4096;
  const std::size_t n_test = 512;
  const std::uint64_t data_seed = 100;
  const auto real = saa::make_toy_domain(toy, saa::Domain::Real, n, mix_seed(data_seed, 0));
  const auto synth = saa::make_toy_domain(toy, saa::Domain::Synthetic, n, mix_seed(data_seed, 1));
  const auto real_test = saa::make_toy_domain(toy, saa::Domain::Real, n_test, mix_seed(data_seed, 2));
  const auto synth_test =
      saa::make_toy_domain(toy, saa::Domain::Synthetic, n_test, mix_seed(data_seed, 3));

  saa::SaaTrainConfig baseline_cfg;
  baseline_cfg.lambda_conf = 0.0;
  const auto baseline = saa::adversarial_train(real, synth, baseline_cfg, {real_test, synth_test});
  const saa::SaaTrainConfig adapt_cfg;  // lambda 0.1, symmetric confusion, 15 epochs
  const auto adapted = saa::adversarial_train(real, synth, adapt_cfg, {real_test, synth_test});
  const auto& b = baseline.history.back();
  const auto& a = adapted.history.back();

  std::vector<saa::GridLoc> locs;
  for (int i = 0; i < toy.joints; ++i) locs.push_back({i / toy.width, i % toy.width});
  const saa::ProbabilityGrid half{toy.height, toy.width,
                                  Eigen::MatrixXd::Constant(toy.joints, toy.height * toy.width, 0.5)};
  const double uniform_loss = saa::saa_d_loss(half, locs, saa::Domain::Real);
  const double expected = toy.joints * std::numbers::ln2;

  o.detail << "lambda 0: held-out D acc " << sci(b.d_accuracy) << ", task " << sci(b.task_loss)
           << "; lambda " << adapt_cfg.lambda_conf << " at epoch " << a.epoch << ": D acc "
           << sci(a.d_accuracy) << ", task " << sci(a.task_loss) << " ("
           << sci(a.task_loss / b.task_loss) << "x); uniform loss |d| "
           << sci(std::abs(uniform_loss - expected)) << "; ";
  o.require(b.d_accuracy > 0.9, "baseline D accuracy > 0.9");
  o.require(a.epoch == 15 && a.d_accuracy >= 0.4 && a.d_accuracy <= 0.7,
            "adapted D accuracy in [0.4, 0.7] at epoch 15");
  o.require(a.task_loss <= 1.5 * b.task_loss, "task loss <= 1.5x baseline");
  o.require(std::abs(uniform_loss - expected) < 1e-9, "N ln 2 at uniform predictions");
}

void switchable_head(Outcome& o) {
  Rng rng(7007);
  const spa::Architecture arch{};
  spa::SpaHeadParams p = spa::SpaHeadParams::xavier(rng, arch);
  const std::size_t count = p.parameter_count();
  const std::size_t closed = spa::closed_form_parameter_count(arch);
  const double backbone = 25e6;
  const double fraction = static_cast<double>(count) / backbone;

  const auto data = synth::gen_dataset(synth::DomainConfig::standard(),
                                       synth::EstimatorNoise::limb_mismatch(1.15, 20.0), 2048, 7);
  const auto poses = experiment::predictions(data.records);
  p.input_stats = spa::InputStats::from_poses(poses);
  spa::adapt(p, std::span(poses).first(256));  // warm up
  auto start = Clock::now();
  const auto adapted = spa::adapt(p, poses);
  const double batched_ms = 1e3 * seconds_since(start) / static_cast<double>(poses.size());
  start = Clock::now();
  const int singles = 100;
  for (int i = 0; i < singles; ++i) spa::adapt(p, std::span(poses).subspan(i, 1));
  const double single_ms = 1e3 * seconds_since(start) / singles;

  const std::string text = spa::checkpoint_to_string(p);
  const spa::SpaHeadParams back = spa::checkpoint_from_string(text);
  const bool round_trip = back == p && spa::checkpoint_to_string(back) == text &&
                          spa::adapt(back, std::span(poses).first(64)) ==
                              std::vector<Pose3D>(adapted.begin(), adapted.begin() + 64);

  o.detail << "head parameters " << count << " (closed form " << closed << ") = "
           << sci(100.0 * fraction) << "% of a 25M backbone; adapt " << sci(batched_ms)
           << " ms/pose batched (" << sci(single_ms) << " ms for a lone pose); checkpoint "
           << (round_trip ? "bit-exact" : "MISMATCH") << "; ";
  o.require(count == closed, "count equals closed form");
  o.require(fraction < 0.05, "head < 5% of 25M");
  o.require(batched_ms < 1.0, "adapt < 1 ms per pose");
  o.require(round_trip, "checkpoint round-trip");
}

// -- determinism helpers ----------------------------------------------------

std::string saa_history_text(const saa::SaaResult& r) {
  std::string out;
  for (const auto& e : r.history) {
    out += std::to_string(e.epoch) + "," + format_double(e.d_accuracy) + "," +
           format_double(e.task_loss) + "," + format_double(e.confusion_loss) + "\n";
  }
  return out;
}

std::string dir_digest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + read_file(f) + "\n";
  return all;
}

void determinism(Outcome& o) {
  std::vector<std::string> failures;
  int pipelines = 0;
  auto same_twice = [&](const std::string& name, const std::function<std::string()>& fn) {
    ++pipelines;
    if (fn() != fn()) failures.push_back(name);
  };

  same_twice("gen_dataset", [] {
    const auto d = synth::gen_dataset(synth::DomainConfig::standard(),
                                      synth::EstimatorNoise::limb_mismatch(1.15, 20.0), 500, 9);
    return format_pose_records(d.records);
  });
  same_twice("train_spa", [] {
    const auto d = synth::gen_dataset(synth::DomainConfig::standard(),
                                      synth::EstimatorNoise::limb_mismatch(1.15, 20.0), 512, 10);
    spa::SpaTrainConfig cfg = experiment::AblationConfig::default_spa_config();
    cfg.architecture.hidden = 64;
    cfg.epochs = 3;
    const auto r = spa::train_spa(experiment::predictions(d.records),
                                  {d.mean_descriptor.values}, cfg);
    return spa::checkpoint_to_string(r.params) + experiment::spa_history_csv(r.history);
  });
  same_twice("run_ablation", [] {
    experiment::AblationConfig cfg;
    cfg.n_train = 512;
    cfg.n_test = 128;
    cfg.spa.architecture.hidden = 64;
    cfg.spa.epochs = 3;
    const auto r = experiment::run_ablation(cfg);
    return experiment::ablation_table_csv(r) + spa::checkpoint_to_string(r.training.params);
  });
  same_twice("adversarial_train", [] {
    const saa::ToyDomainConfig toy;
    const auto real = saa::make_toy_domain(toy, saa::Domain::Real, 512, 1);
    const auto synth = saa::make_toy_domain(toy, saa::Domain::Synthetic, 512, 2);
    saa::SaaTrainConfig cfg;
    cfg.epochs = 3;
    return saa_history_text(saa::adversarial_train(real, synth, cfg, {real, synth}));
  });

  // Every CLI subcommand, run twice into separate directories.
  TempDir tmp("acceptance_cli");
  auto cli_twice = [&](const std::string& name, std::vector<std::string> args) {
    ++pipelines;
    std::string digests[2];
    for (int i = 0; i < 2; ++i) {
      const fs::path out = tmp.path() / (name + "_" + std::to_string(i));
      auto full = args;
      full.insert(full.end(), {"--out", out.string()});
      std::ostringstream sink;
      if (cli::run(full, sink, sink) != cli::kExitOk) {
        failures.push_back(name + " (exit)");
        return;
      }
      digests[i] = dir_digest(out) + sink.str();
    }
    if (digests[0] != digests[1]) failures.push_back(name);
  };
  const fs::path g = tmp.path() / "gen-data_0";
  cli_twice("gen-data", {"gen-data", "--n", "200", "--seed", "3"});
  cli_twice("train-spa", {"train-spa", "--data", (g / "dataset.jsonl").string(), "--target",
                          (g / "metadata.json").string(), "--hidden", "32", "--epochs", "2"});
  cli_twice("adapt", {"adapt", "--checkpoint", (tmp.path() / "train-spa_0" / "checkpoint.json").string(),
                      "--data", (g / "dataset.jsonl").string()});
  cli_twice("eval", {"eval", "--data", (tmp.path() / "adapt_0" / "adapted.jsonl").string()});
  cli_twice("saa-demo", {"saa-demo", "--n", "256", "--n-test", "64", "--epochs", "2"});
  cli_twice("ablate", {"ablate", "--n", "256", "--n-test", "64", "--epochs", "2", "--hidden",
                       "32", "--save-checkpoint"});

  o.detail << pipelines << " pipelines rerun with identical seeds, "
           << pipelines - static_cast<int>(failures.size()) << " byte-identical";
  for (const auto& f : failures) o.detail << ", differs: " << f;
  o.detail << "; ";
  o.require(failures.empty(), "byte-identical reruns");
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;  // 0: no runtime requirement
  void (*run)(Outcome&);
};

}  // namespace

int main(int argc, char** argv) {
  setenv("POSE_ADAPT_LOG", "quiet", 1);
  const std::vector<Criterion> criteria{
      {1, "descriptor correctness", 5.0, descriptor_correctness},
      {2, "SPA gradient fidelity", 60.0, spa_gradient_fidelity},
      {3, "Procrustes suite", 10.0, procrustes_suite},
      {4, "metric oracles", 10.0, metric_oracles},
      {5, "SPA ablation analog", 300.0, ablation_analog},
      {6, "SAA adversarial behavior", 180.0, saa_behavior},
      {7, "SPA switchable-head properties", 0.0, switchable_head},
      {8, "determinism", 0.0, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  bool all_pass = true;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    const auto start = Clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "] ";
    }
    const double elapsed = seconds_since(start);
    if (c.budget_s > 0.0) o.require(elapsed < c.budget_s, "runtime < " + sci(c.budget_s) + " s");
    all_pass = all_pass && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.title
              << "): " << o.detail.str() << "runtime " << sci(elapsed) << " s" << std::endl;
  }
  return all_pass ? 0 : 1;
}
