#include "pose_adapt/saa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pose_adapt/adam.hpp"
#include "pose_adapt/error.hpp"

namespace pose_adapt::saa {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ClampedProb {
  double p;
  bool clamped;
};

ClampedProb clamp_prob(double z, double clamp) {
  const double raw = sigmoid(z);
  if (raw < clamp) return {clamp, true};
  if (raw > 1.0 - clamp) return {1.0 - clamp, true};
  return {raw, false};
}

void require_finite(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "SAA activation became non-finite");
  }
}

// Activations of D over a set of feature columns.
struct DiscPass {
  Eigen::MatrixXd pre1, act1, pre2, act2, logits;
};

DiscPass disc_pass(const DiscriminatorParams& d, const Eigen::MatrixXd& features) {
  DiscPass p;
  p.pre1 = (d.layer1.weight * features).colwise() + d.layer1.bias;
  p.act1 = p.pre1.cwiseMax(0.0);
  p.pre2 = (d.layer2.weight * p.act1).colwise() + d.layer2.bias;
  p.act2 = p.pre2.cwiseMax(0.0);
  p.logits = (d.layer3.weight * p.act2).colwise() + d.layer3.bias;
  return p;
}

// Backprop d loss / d logits. Fills parameter grads when `grad` is non-null and
// returns d loss / d features.
Eigen::MatrixXd disc_backward(const DiscriminatorParams& d, const DiscPass& pass,
                              const Eigen::MatrixXd& features, const Eigen::MatrixXd& g_logits,
                              DiscriminatorParams* grad) {
  Eigen::MatrixXd g2 = d.layer3.weight.transpose() * g_logits;
  g2.array() *= (pass.pre2.array() > 0.0).cast<double>();
  Eigen::MatrixXd g1 = d.layer2.weight.transpose() * g2;
  g1.array() *= (pass.pre1.array() > 0.0).cast<double>();
  if (grad) {
    grad->layer3.weight = g_logits * pass.act2.transpose();
    grad->layer3.bias = g_logits.rowwise().sum();
    grad->layer2.weight = g2 * pass.act1.transpose();
    grad->layer2.bias = g2.rowwise().sum();
    grad->layer1.weight = g1 * features.transpose();
    grad->layer1.bias = g1.rowwise().sum();
  }
  return d.layer1.weight.transpose() * g1;
}

// Raw features at each joint location: C x (N * batch), column = s * N + i.
Eigen::MatrixXd gather_joint_features(std::span<const DomainSample* const> batch) {
  if (batch.empty()) return {};
  const int n = batch.front()->joint_count();
  const int c = batch.front()->features.channels;
  Eigen::MatrixXd x(c, static_cast<Eigen::Index>(n * batch.size()));
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const DomainSample& sample = *batch[s];
    for (int i = 0; i < n; ++i) {
      const GridLoc loc = sample.joint_locs[static_cast<std::size_t>(i)];
      x.col(static_cast<Eigen::Index>(s * n + i)) =
          sample.features.data.col(sample.features.cell_index(loc.row, loc.col));
    }
  }
  return x;
}

Eigen::MatrixXd generator_columns(const GeneratorParams& g, const Eigen::MatrixXd& x) {
  return (g.map.weight * x).colwise() + g.map.bias;
}

// Probability of channel i at the joint-i column.
std::vector<ClampedProb> joint_probs(const Eigen::MatrixXd& logits, int joints, double clamp) {
  std::vector<ClampedProb> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index k = 0; k < logits.cols(); ++k) {
    out[static_cast<std::size_t>(k)] = clamp_prob(logits(k % joints, k), clamp);
  }
  return out;
}

double confusion_term(double p, ConfusionForm form) {
  return form == ConfusionForm::SymmetricUniformCe ? -0.5 * (std::log(p) + std::log(1.0 - p))
                                                   : -0.5 * std::log(p);
}

// d confusion_term / d logit for an unclamped sigmoid output p.
double confusion_logit_grad(double p, ConfusionForm form) {
  return form == ConfusionForm::SymmetricUniformCe ? p - 0.5 : -0.5 * (1.0 - p);
}

template <class Fn>
void for_each_dense(DiscriminatorParams& d, Fn&& fn) {
  fn(d.layer1);
  fn(d.layer2);
  fn(d.layer3);
}

template <class Fn>
void for_each_dense(GeneratorParams& g, TaskHeadParams& t, Fn&& fn) {
  fn(g.map);
  for (Dense& r : t.readouts) fn(r);
}

void add_views(Dense& l, std::vector<Adam::View>& out) {
  out.emplace_back(l.weight.data(), l.weight.size());
  out.emplace_back(l.bias.data(), l.bias.size());
}

void add_const_views(const Dense& l, std::vector<Adam::ConstView>& out) {
  out.emplace_back(l.weight.data(), l.weight.size());
  out.emplace_back(l.bias.data(), l.bias.size());
}

std::vector<std::size_t> sizes_of(const std::vector<Adam::View>& views) {
  std::vector<std::size_t> s;
  for (const auto& v : views) s.push_back(static_cast<std::size_t>(v.size()));
  return s;
}

std::vector<const DomainSample*> pointers(std::span<const DomainSample> samples) {
  std::vector<const DomainSample*> out;
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Types

FeatureGrid::FeatureGrid(int h, int w, int c)
    : height(h), width(w), channels(c), data(Eigen::MatrixXd::Zero(c, h * w)) {
  if (h <= 0 || w <= 0 || c <= 0) {
    throw Error(ErrorCode::InvalidArgument, "feature grid dimensions must be positive");
  }
}

void DomainSample::validate() const {
  for (const GridLoc& loc : joint_locs) {
    if (loc.row < 0 || loc.row >= features.height || loc.col < 0 || loc.col >= features.width) {
      throw Error(ErrorCode::IndexOutOfRange, "joint location outside the feature grid");
    }
  }
  if (domain_flag != Domain::Real && domain_flag != Domain::Synthetic) {
    throw Error(ErrorCode::InvalidArgument, "domain flag must be 0 or 1");
  }
  if (!features.data.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite features");
  if (task_target.size() != 0 &&
      (task_target.rows() != 3 || task_target.cols() != joint_count())) {
    throw Error(ErrorCode::DimensionMismatch, "task target must be 3 x joints");
  }
}

Dense Dense::zeros(int out, int in) {
  return Dense{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

Dense Dense::xavier(int out, int in, Rng& rng) {
  Dense d = zeros(out, in);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) d.weight(r, c) = rng.uniform(-bound, bound);
  }
  return d;
}

DiscriminatorParams DiscriminatorParams::zeros(int channels, int hidden, int joints) {
  return {Dense::zeros(hidden, channels), Dense::zeros(hidden, hidden),
          Dense::zeros(joints, hidden)};
}

DiscriminatorParams DiscriminatorParams::xavier(int channels, int hidden, int joints, Rng& rng) {
  DiscriminatorParams d;
  d.layer1 = Dense::xavier(hidden, channels, rng);
  d.layer2 = Dense::xavier(hidden, hidden, rng);
  d.layer3 = Dense::xavier(joints, hidden, rng);
  return d;
}

GeneratorParams GeneratorParams::xavier(int channels, Rng& rng) {
  return {Dense::xavier(channels, channels, rng)};
}

TaskHeadParams TaskHeadParams::xavier(int channels, int joints, Rng& rng) {
  TaskHeadParams t;
  for (int i = 0; i < joints; ++i) t.readouts.push_back(Dense::xavier(3, channels, rng));
  return t;
}

const char* to_string(ConfusionForm form) {
  return form == ConfusionForm::SymmetricUniformCe ? "symmetric_uniform_ce" : "literal_eq2";
}

ConfusionForm confusion_form_from_string(std::string_view text) {
  if (text == "symmetric_uniform_ce") return ConfusionForm::SymmetricUniformCe;
  if (text == "literal_eq2") return ConfusionForm::LiteralEq2;
  throw Error(ErrorCode::InvalidArgument, "unknown confusion form: " + std::string(text));
}

void SaaTrainConfig::validate() const {
  if (!(lambda_conf >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (!(prob_clamp > 0.0 && prob_clamp < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "prob_clamp must be in (0, 0.5)");
  }
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (epochs < 1 || batch_size < 1 || d_steps < 0 || gt_steps < 0 || disc_hidden < 1) {
    throw Error(ErrorCode::InvalidArgument, "invalid SAA schedule");
  }
}

// ---------------------------------------------------------------------------
// Losses

ProbabilityGrid disc_forward(const DiscriminatorParams& d, const FeatureGrid& grid,
                             double prob_clamp) {
  if (grid.channels != d.channels() || grid.data.rows() != d.channels()) {
    throw Error(ErrorCode::DimensionMismatch, "feature channels do not match the discriminator");
  }
  const DiscPass pass = disc_pass(d, grid.data);
  require_finite(pass.logits);
  ProbabilityGrid out{grid.height, grid.width, pass.logits};
  out.probs = out.probs.unaryExpr([prob_clamp](double z) { return clamp_prob(z, prob_clamp).p; });
  return out;
}

double saa_d_loss(const ProbabilityGrid& probs, std::span<const GridLoc> joint_locs,
                  Domain domain_flag) {
  const double d = domain_flag == Domain::Synthetic ? 1.0 : 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < joint_locs.size(); ++i) {
    const double p = probs.at(joint_locs[i].row, joint_locs[i].col, static_cast<int>(i));
    loss -= d * std::log(p) + (1.0 - d) * std::log(1.0 - p);
  }
  return loss;
}

double confusion_loss(const ProbabilityGrid& probs, std::span<const GridLoc> joint_locs,
                      ConfusionForm form) {
  double loss = 0.0;
  for (std::size_t i = 0; i < joint_locs.size(); ++i) {
    loss += confusion_term(probs.at(joint_locs[i].row, joint_locs[i].col, static_cast<int>(i)),
                           form);
  }
  return loss;
}

double saa_gt_loss(const Eigen::MatrixXd& task_pred, const Eigen::MatrixXd& task_target,
                   double conf, double lambda) {
  if (task_pred.rows() != task_target.rows() || task_pred.cols() != task_target.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "task prediction and target differ in shape");
  }
  return (task_pred - task_target).cwiseAbs().sum() + lambda * conf;
}

FeatureGrid apply_generator(const GeneratorParams& g, const FeatureGrid& grid) {
  FeatureGrid out = grid;
  out.data = generator_columns(g, grid.data);
  return out;
}

Eigen::MatrixXd task_predict(const TaskHeadParams& t, const FeatureGrid& features,
                             std::span<const GridLoc> joint_locs) {
  Eigen::MatrixXd pred(3, static_cast<Eigen::Index>(joint_locs.size()));
  for (std::size_t i = 0; i < joint_locs.size(); ++i) {
    const Dense& r = t.readouts[i];
    pred.col(static_cast<Eigen::Index>(i)) =
        r.weight * features.data.col(features.cell_index(joint_locs[i].row, joint_locs[i].col)) +
        r.bias;
  }
  return pred;
}

// ---------------------------------------------------------------------------
// Evaluation

double disc_accuracy(const SaaModel& model, std::span<const DomainSample> samples,
                     double prob_clamp) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples to evaluate");
  const auto ptrs = pointers(samples);
  const int n = samples.front().joint_count();
  const Eigen::MatrixXd z = generator_columns(model.g, gather_joint_features(ptrs));
  const auto probs = joint_probs(disc_pass(model.d, z).logits, n, prob_clamp);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const bool synthetic = samples[k / static_cast<std::size_t>(n)].domain_flag == Domain::Synthetic;
    correct += (probs[k].p > 0.5) == synthetic ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.size());
}

double mean_task_loss(const SaaModel& model, std::span<const DomainSample> synth) {
  if (synth.empty()) throw Error(ErrorCode::EmptyInput, "no samples to evaluate");
  double sum = 0.0;
  for (const DomainSample& s : synth) {
    const FeatureGrid z = apply_generator(model.g, s.features);
    sum += (task_predict(model.t, z, s.joint_locs) - s.task_target).cwiseAbs().sum();
  }
  return sum / static_cast<double>(synth.size());
}

double mean_confusion_loss(const SaaModel& model, std::span<const DomainSample> samples,
                           ConfusionForm form, double prob_clamp) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples to evaluate");
  const auto ptrs = pointers(samples);
  const int n = samples.front().joint_count();
  const Eigen::MatrixXd z = generator_columns(model.g, gather_joint_features(ptrs));
  const auto probs = joint_probs(disc_pass(model.d, z).logits, n, prob_clamp);
  double sum = 0.0;
  for (const ClampedProb& p : probs) sum += confusion_term(p.p, form);
  return sum / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Training

struct PhaseState {
  Adam d_opt;
  Adam gt_opt;
};

SaaTrainer::SaaTrainer(const SaaTrainConfig& config, int channels, int joints)
    : config_(config) {
  config_.validate();
  Rng init_rng(mix_seed(config_.seed, 0));
  model_.g = GeneratorParams::xavier(channels, init_rng);
  model_.t = TaskHeadParams::xavier(channels, joints, init_rng);
  model_.d = DiscriminatorParams::xavier(channels, config_.disc_hidden, joints, init_rng);

  std::vector<Adam::View> d_views;
  for_each_dense(model_.d, [&](Dense& l) { add_views(l, d_views); });
  std::vector<Adam::View> gt_views;
  for_each_dense(model_.g, model_.t, [&](Dense& l) { add_views(l, gt_views); });
  const Adam::Options opts{config_.learning_rate};
  state_ = std::make_unique<PhaseState>(
      PhaseState{Adam(sizes_of(d_views), opts), Adam(sizes_of(gt_views), opts)});
}

SaaTrainer::~SaaTrainer() = default;

void SaaTrainer::set_learning_rate(double lr) {
  state_->d_opt.set_learning_rate(lr);
  state_->gt_opt.set_learning_rate(lr);
}

double SaaTrainer::d_step(std::span<const DomainSample* const> real_batch,
                          std::span<const DomainSample* const> synth_batch) {
  std::vector<const DomainSample*> batch(real_batch.begin(), real_batch.end());
  batch.insert(batch.end(), synth_batch.begin(), synth_batch.end());
  if (batch.empty()) throw Error(ErrorCode::EmptyInput, "empty SAA batch");
  const int n = batch.front()->joint_count();

  const Eigen::MatrixXd z = generator_columns(model_.g, gather_joint_features(batch));
  const DiscPass pass = disc_pass(model_.d, z);
  require_finite(pass.logits);
  const auto probs = joint_probs(pass.logits, n, config_.prob_clamp);

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd g_logits = Eigen::MatrixXd::Zero(pass.logits.rows(), pass.logits.cols());
  double loss = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double d =
        batch[k / static_cast<std::size_t>(n)]->domain_flag == Domain::Synthetic ? 1.0 : 0.0;
    const ClampedProb p = probs[k];
    loss -= d * std::log(p.p) + (1.0 - d) * std::log(1.0 - p.p);
    if (!p.clamped) {
      g_logits(static_cast<Eigen::Index>(k) % n, static_cast<Eigen::Index>(k)) = (p.p - d) * inv_b;
    }
  }

  DiscriminatorParams grad = model_.d;
  disc_backward(model_.d, pass, z, g_logits, &grad);
  std::vector<Adam::View> params;
  for_each_dense(model_.d, [&](Dense& l) { add_views(l, params); });
  std::vector<Adam::ConstView> grads;
  for_each_dense(grad, [&](Dense& l) { add_const_views(l, grads); });
  state_->d_opt.step(params, grads);
  return loss * inv_b;
}

double SaaTrainer::gt_step(std::span<const DomainSample* const> real_batch,
                           std::span<const DomainSample* const> synth_batch) {
  std::vector<const DomainSample*> batch(real_batch.begin(), real_batch.end());
  batch.insert(batch.end(), synth_batch.begin(), synth_batch.end());
  if (batch.empty()) throw Error(ErrorCode::EmptyInput, "empty SAA batch");
  const int n = batch.front()->joint_count();
  const double inv_real = real_batch.empty() ? 0.0 : 1.0 / static_cast<double>(real_batch.size());
  const double inv_synth =
      synth_batch.empty() ? 0.0 : 1.0 / static_cast<double>(synth_batch.size());

  const Eigen::MatrixXd x = gather_joint_features(batch);
  const Eigen::MatrixXd z = generator_columns(model_.g, x);
  Eigen::MatrixXd g_z = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  GeneratorParams g_grad{Dense::zeros(static_cast<int>(z.rows()), static_cast<int>(x.rows()))};
  TaskHeadParams t_grad;
  for (const Dense& r : model_.t.readouts) {
    t_grad.readouts.push_back(
        Dense::zeros(static_cast<int>(r.weight.rows()), static_cast<int>(r.weight.cols())));
  }
  double loss = 0.0;

  // Regression on synthetic samples, the only ones with task targets.
  for (std::size_t s = real_batch.size(); s < batch.size(); ++s) {
    const DomainSample& sample = *batch[s];
    if (sample.task_target.size() == 0) {
      throw Error(ErrorCode::InvalidArgument, "synthetic sample lacks a task target");
    }
    for (int i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(s * n + i);
      Dense& rg = t_grad.readouts[static_cast<std::size_t>(i)];
      const Dense& r = model_.t.readouts[static_cast<std::size_t>(i)];
      const Eigen::Vector3d diff = r.weight * z.col(col) + r.bias - sample.task_target.col(i);
      loss += diff.cwiseAbs().sum() * inv_synth;
      const Eigen::Vector3d sign = diff.unaryExpr([](double v) {
        return static_cast<double>((v > 0.0) - (v < 0.0));
      }) * inv_synth;
      rg.weight.noalias() += sign * z.col(col).transpose();
      rg.bias += sign;
      g_z.col(col).noalias() += r.weight.transpose() * sign;
    }
  }

  // Confusion on both domains through the frozen discriminator.
  if (config_.lambda_conf > 0.0) {
    const DiscPass pass = disc_pass(model_.d, z);
    require_finite(pass.logits);
    const auto probs = joint_probs(pass.logits, n, config_.prob_clamp);
    Eigen::MatrixXd g_logits = Eigen::MatrixXd::Zero(pass.logits.rows(), pass.logits.cols());
    for (std::size_t k = 0; k < probs.size(); ++k) {
      const std::size_t s = k / static_cast<std::size_t>(n);
      const double w = config_.lambda_conf * (s < real_batch.size() ? inv_real : inv_synth);
      loss += w * confusion_term(probs[k].p, config_.confusion_form);
      if (!probs[k].clamped) {
        g_logits(static_cast<Eigen::Index>(k) % n, static_cast<Eigen::Index>(k)) =
            w * confusion_logit_grad(probs[k].p, config_.confusion_form);
      }
    }
    g_z += disc_backward(model_.d, pass, z, g_logits, nullptr);
  }

  g_grad.map.weight.noalias() = g_z * x.transpose();
  g_grad.map.bias = g_z.rowwise().sum();

  std::vector<Adam::View> params;
  for_each_dense(model_.g, model_.t, [&](Dense& l) { add_views(l, params); });
  std::vector<Adam::ConstView> grads;
  for_each_dense(g_grad, t_grad, [&](Dense& l) { add_const_views(l, grads); });
  state_->gt_opt.step(params, grads);
  return loss;
}

SaaResult adversarial_train(std::span<const DomainSample> real_set,
                            std::span<const DomainSample> synth_set, const SaaTrainConfig& config,
                            EvalSets held_out) {
  config.validate();
  if (real_set.empty() || synth_set.empty()) {
    throw Error(ErrorCode::EmptyInput, "adversarial training needs samples from both domains");
  }
  const int joints = real_set.front().joint_count();
  const int channels = real_set.front().features.channels;
  for (auto set : {real_set, synth_set}) {
    for (const DomainSample& s : set) {
      s.validate();
      if (s.joint_count() != joints || s.features.channels != channels) {
        throw Error(ErrorCode::DimensionMismatch, "samples disagree on joints or channels");
      }
    }
  }
  const EvalSets eval{held_out.real.empty() ? real_set : held_out.real,
                      held_out.synth.empty() ? synth_set : held_out.synth};
  std::vector<DomainSample> eval_all(eval.real.begin(), eval.real.end());
  eval_all.insert(eval_all.end(), eval.synth.begin(), eval.synth.end());

  SaaTrainer trainer(config, channels, joints);
  Rng order_rng(mix_seed(config.seed, 1));
  std::vector<std::size_t> real_order(real_set.size());
  std::vector<std::size_t> synth_order(synth_set.size());
  std::iota(real_order.begin(), real_order.end(), std::size_t{0});
  std::iota(synth_order.begin(), synth_order.end(), std::size_t{0});

  SaaResult result;
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  std::size_t real_cursor = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double lr = config.learning_rate;
    for (int drop : config.lr_drop_epochs) {
      if (epoch >= drop) lr *= config.lr_drop_factor;
    }
    trainer.set_learning_rate(lr);
    order_rng.shuffle(std::span<std::size_t>(synth_order));
    order_rng.shuffle(std::span<std::size_t>(real_order));

    // Synthetic (task-labelled) data leads; real batches follow in step,
    // cycling when exhausted.
    for (std::size_t start = 0; start < synth_order.size(); start += batch_size) {
      const std::size_t count = std::min(batch_size, synth_order.size() - start);
      std::vector<const DomainSample*> synth_batch;
      std::vector<const DomainSample*> real_batch;
      for (std::size_t i = 0; i < count; ++i) {
        synth_batch.push_back(&synth_set[synth_order[start + i]]);
        real_batch.push_back(&real_set[real_order[real_cursor]]);
        real_cursor = (real_cursor + 1) % real_order.size();
      }
      for (int k = 0; k < config.d_steps; ++k) trainer.d_step(real_batch, synth_batch);
      for (int k = 0; k < config.gt_steps; ++k) trainer.gt_step(real_batch, synth_batch);
    }

    SaaEpoch e;
    e.epoch = epoch;
    e.d_accuracy = disc_accuracy(trainer.model(), eval_all, config.prob_clamp);
    e.task_loss = mean_task_loss(trainer.model(), eval.synth);
    e.confusion_loss =
        mean_confusion_loss(trainer.model(), eval_all, config.confusion_form, config.prob_clamp);
    if (!std::isfinite(e.task_loss) || !std::isfinite(e.confusion_loss)) {
      throw Error(ErrorCode::NonFiniteActivation,
                  "SAA training diverged at epoch " + std::to_string(epoch));
    }
    result.history.push_back(e);
  }
  result.model = trainer.model();
  return result;
}

// ---------------------------------------------------------------------------
// Toy domains

std::vector<DomainSample> make_toy_domain(const ToyDomainConfig& config, Domain domain,
                                          std::size_t n, std::uint64_t seed) {
  if (config.domain_dims < 1 || config.domain_dims >= config.channels) {
    throw Error(ErrorCode::InvalidArgument, "domain_dims must be in [1, channels)");
  }
  if (config.joints > config.height * config.width) {
    throw Error(ErrorCode::InvalidArgument, "more joints than grid cells");
  }
  const int content = config.channels - config.domain_dims;

  // Shared world: per-joint content embeddings and domain directions.
  Rng world(config.world_seed);
  std::vector<Eigen::MatrixXd> embed;
  std::vector<Eigen::VectorXd> domain_dir;
  for (int i = 0; i < config.joints; ++i) {
    Eigen::MatrixXd e(content, 3);
    for (Eigen::Index k = 0; k < e.size(); ++k) e.data()[k] = world.normal();
    embed.push_back(e / std::sqrt(3.0));
    Eigen::VectorXd u(config.domain_dims);
    for (int k = 0; k < config.domain_dims; ++k) u[k] = world.normal();
    domain_dir.push_back(u.normalized());
  }
  Eigen::VectorXd background_dir(config.domain_dims);
  for (int k = 0; k < config.domain_dims; ++k) background_dir[k] = world.normal();
  background_dir.normalize();

  const double sign = domain == Domain::Synthetic ? 1.0 : -1.0;
  std::vector<DomainSample> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    Rng rng(mix_seed(seed, s));
    DomainSample sample;
    sample.domain_flag = domain;
    sample.features = FeatureGrid(config.height, config.width, config.channels);
    Eigen::MatrixXd& data = sample.features.data;
    for (Eigen::Index k = 0; k < data.size(); ++k) data.data()[k] = config.noise_sigma * rng.normal();
    for (int c = 0; c < data.cols(); ++c) {
      data.col(c).tail(config.domain_dims) += sign * config.domain_margin * background_dir;
    }

    std::vector<int> cells(static_cast<std::size_t>(sample.features.cell_count()));
    std::iota(cells.begin(), cells.end(), 0);
    rng.shuffle(std::span<int>(cells));

    Eigen::MatrixXd target(3, config.joints);
    for (int i = 0; i < config.joints; ++i) {
      const int cell = cells[static_cast<std::size_t>(i)];
      sample.joint_locs.push_back(GridLoc{cell / config.width, cell % config.width});
      Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
      target.col(i) = z;
      data.col(cell).head(content) += embed[static_cast<std::size_t>(i)] * z;
      data.col(cell).tail(config.domain_dims) +=
          sign * config.domain_margin *
          (domain_dir[static_cast<std::size_t>(i)] - background_dir);
    }
    if (domain == Domain::Synthetic) sample.task_target = target;
    out.push_back(std::move(sample));
  }
  return out;
}

nlohmann::json to_json(const SaaTrainConfig& c) {
  return {{"lambda_conf", c.lambda_conf},
          {"d_steps", c.d_steps},
          {"gt_steps", c.gt_steps},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"lr_drop_epochs", c.lr_drop_epochs},
          {"lr_drop_factor", c.lr_drop_factor},
          {"batch_size", c.batch_size},
          {"prob_clamp", c.prob_clamp},
          {"confusion_form", to_string(c.confusion_form)},
          {"disc_hidden", c.disc_hidden},
          {"seed", c.seed}};
}

SaaTrainConfig train_config_from_json(const nlohmann::json& doc, const SaaTrainConfig& defaults) {
  SaaTrainConfig c = defaults;
  try {
    c.lambda_conf = doc.value("lambda_conf", c.lambda_conf);
    c.d_steps = doc.value("d_steps", c.d_steps);
    c.gt_steps = doc.value("gt_steps", c.gt_steps);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.epochs = doc.value("epochs", c.epochs);
    c.lr_drop_epochs = doc.value("lr_drop_epochs", c.lr_drop_epochs);
    c.lr_drop_factor = doc.value("lr_drop_factor", c.lr_drop_factor);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.prob_clamp = doc.value("prob_clamp", c.prob_clamp);
    if (doc.contains("confusion_form")) {
      c.confusion_form = confusion_form_from_string(doc["confusion_form"].get<std::string>());
    }
    c.disc_hidden = doc.value("disc_hidden", c.disc_hidden);
    c.seed = doc.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("saa config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace pose_adapt::saa
