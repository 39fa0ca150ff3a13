#include "pose_adapt/spa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "pose_adapt/error.hpp"
#include "pose_adapt/io.hpp"

namespace pose_adapt::spa {

namespace {

// Coordinates whose training spread is below this (mm) are not rescaled.
constexpr double kMinStddev = 1e-6;

Eigen::MatrixXd relu(const Eigen::MatrixXd& m) { return m.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

void affine_into(const Layer& layer, const Eigen::MatrixXd& in, Eigen::MatrixXd& out) {
  out.noalias() = layer.weight * in;
  out.colwise() += layer.bias;
}

// out = W * in + b with a per-element summation order that does not depend on
// how many columns are processed together: every column runs through the
// same 4-column register block (short groups are padded with a zero column),
// accumulating over the input dimension in index order. Inference uses this so
// adapting a batch gives bit-identical results to adapting one pose at a time.
void stable_affine_into(const Layer& layer, const Eigen::MatrixXd& in, Eigen::MatrixXd& out) {
  constexpr Eigen::Index kRows = 16;
  constexpr Eigen::Index kCols = 4;
  constexpr Eigen::Index kColChunk = 32;  // columns sharing one pass over W
  using Block = Eigen::Matrix<double, kRows, 1>;

  const Eigen::Index m = layer.weight.rows();
  const Eigen::Index k = layer.weight.cols();
  const Eigen::Index n = in.cols();
  out.resize(m, n);
  const double* w = layer.weight.data();
  const Eigen::VectorXd zero_col = Eigen::VectorXd::Zero(k);
  const Eigen::Index full_rows = m - m % kRows;

  for (Eigen::Index chunk = 0; chunk < n; chunk += kColChunk) {
    const Eigen::Index chunk_end = std::min(n, chunk + kColChunk);
    for (Eigen::Index r = 0; r < full_rows; r += kRows) {
      for (Eigen::Index c = chunk; c < chunk_end; c += kCols) {
        const double* x[kCols];
        for (Eigen::Index j = 0; j < kCols; ++j) {
          x[j] = c + j < chunk_end ? in.col(c + j).data() : zero_col.data();
        }
        Block acc[kCols];
        for (auto& a : acc) a.setZero();
        for (Eigen::Index i = 0; i < k; ++i) {
          const Block wi = Eigen::Map<const Block>(w + i * m + r);
          for (Eigen::Index j = 0; j < kCols; ++j) acc[j] += wi * x[j][i];
        }
        for (Eigen::Index j = 0; j < kCols && c + j < chunk_end; ++j) {
          out.col(c + j).segment<kRows>(r) = acc[j] + layer.bias.segment<kRows>(r);
        }
      }
    }
    // Remaining rows: one scalar accumulator per (row, column), same order.
    for (Eigen::Index row = full_rows; row < m; ++row) {
      for (Eigen::Index c = chunk; c < chunk_end; ++c) {
        const double* x = in.col(c).data();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) acc += w[i * m + row] * x[i];
        out(row, c) = acc + layer.bias[row];
      }
    }
  }
}

void accumulate_layer_grad(Layer& grad, const Eigen::MatrixXd& upstream,
                           const Eigen::MatrixXd& in) {
  grad.weight.noalias() = upstream * in.transpose();
  grad.bias = upstream.rowwise().sum();
}

void xavier_fill(Layer& layer, Rng& rng) {
  const double fan_in = static_cast<double>(layer.weight.cols());
  const double fan_out = static_cast<double>(layer.weight.rows());
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  // Row-major draw order, matching the checkpoint layout.
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      layer.weight(r, c) = rng.uniform(-bound, bound);
    }
  }
  layer.bias.setZero();
}

Eigen::MatrixXd poses_to_columns(std::span<const Pose3D> poses) {
  Eigen::MatrixXd y(kPoseDim, static_cast<Eigen::Index>(poses.size()));
  for (std::size_t i = 0; i < poses.size(); ++i) {
    y.col(static_cast<Eigen::Index>(i)) = poses[i].flat();
  }
  return y;
}

void require_rooted_valid(const Pose3D& pose) {
  if (!pose.all_valid() || !pose.all_finite()) {
    throw Error(ErrorCode::InvalidArgument, "SPA needs complete, finite poses");
  }
  if (!pose.coords.col(joint::kPelvis).isZero(0.0)) {
    throw Error(ErrorCode::InvalidArgument, "SPA input must be pelvis-rooted");
  }
}

std::string layer_name(std::size_t index, std::size_t block_layer_count) {
  if (index == 0) return "input";
  if (index == block_layer_count + 1) return "output";
  const std::size_t k = index - 1;
  return "block" + std::to_string(k / 2) + (k % 2 == 0 ? ".first" : ".second");
}

void append_array(std::string& out, const double* data, std::size_t n) {
  out += '[';
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ',';
    out += format_double(data[i]);
  }
  out += ']';
}

void read_doubles(const nlohmann::json& arr, std::size_t expected, double* out,
                  const std::string& what) {
  if (!arr.is_array() || arr.size() != expected) {
    throw Error(ErrorCode::ParseError, "checkpoint " + what + " has wrong length");
  }
  for (std::size_t i = 0; i < expected; ++i) out[i] = arr[i].get<double>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

HeadWeights HeadWeights::zeros(const Architecture& arch) {
  if (arch.hidden < 1 || arch.blocks < 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid SPA architecture");
  }
  HeadWeights w;
  w.input = Layer(arch.hidden, kPoseDim);
  for (int i = 0; i < 2 * arch.blocks; ++i) w.block_layers.emplace_back(arch.hidden, arch.hidden);
  w.output = Layer(kPoseDim, arch.hidden);
  return w;
}

Architecture HeadWeights::architecture() const {
  return {static_cast<int>(input.weight.rows()), static_cast<int>(block_layers.size() / 2)};
}

std::vector<Eigen::Map<Eigen::VectorXd>> HeadWeights::views() {
  std::vector<Eigen::Map<Eigen::VectorXd>> out;
  auto add = [&out](Layer& l) {
    out.emplace_back(l.weight.data(), l.weight.size());
    out.emplace_back(l.bias.data(), l.bias.size());
  };
  add(input);
  for (Layer& l : block_layers) add(l);
  add(output);
  return out;
}

std::vector<Eigen::Map<const Eigen::VectorXd>> HeadWeights::views() const {
  std::vector<Eigen::Map<const Eigen::VectorXd>> out;
  auto add = [&out](const Layer& l) {
    out.emplace_back(l.weight.data(), l.weight.size());
    out.emplace_back(l.bias.data(), l.bias.size());
  };
  add(input);
  for (const Layer& l : block_layers) add(l);
  add(output);
  return out;
}

std::vector<std::size_t> HeadWeights::tensor_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& v : views()) sizes.push_back(static_cast<std::size_t>(v.size()));
  return sizes;
}

std::size_t HeadWeights::parameter_count() const {
  const auto sizes = tensor_sizes();
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

bool HeadWeights::all_finite() const {
  for (const auto& v : views()) {
    if (!v.allFinite()) return false;
  }
  return true;
}

InputStats InputStats::from_poses(std::span<const Pose3D> poses) {
  if (poses.empty()) throw Error(ErrorCode::EmptyInput, "no poses for input statistics");
  const Eigen::MatrixXd y = poses_to_columns(poses);
  InputStats stats;
  stats.mean = y.rowwise().mean();
  const Eigen::MatrixXd centered = y.colwise() - stats.mean;
  const double n = static_cast<double>(poses.size());
  for (int i = 0; i < kPoseDim; ++i) {
    const double sd = std::sqrt(centered.row(i).squaredNorm() / n);
    stats.stddev[i] = sd > kMinStddev ? sd : 1.0;
  }
  return stats;
}

SpaHeadParams SpaHeadParams::xavier(Rng& rng, const Architecture& arch) {
  SpaHeadParams p;
  p.weights = HeadWeights::zeros(arch);
  xavier_fill(p.weights.input, rng);
  for (Layer& l : p.weights.block_layers) xavier_fill(l, rng);
  xavier_fill(p.weights.output, rng);
  return p;
}

SpaHeadParams SpaHeadParams::zero_head(const Architecture& arch) {
  SpaHeadParams p;
  p.weights = HeadWeights::zeros(arch);
  return p;
}

bool SpaHeadParams::operator==(const SpaHeadParams& other) const {
  if (input_stats.mean != other.input_stats.mean ||
      input_stats.stddev != other.input_stats.stddev) {
    return false;
  }
  const auto a = weights.views();
  const auto b = other.weights.views();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() || a[i] != b[i]) return false;
  }
  return true;
}

std::size_t closed_form_parameter_count(const Architecture& arch) {
  const std::size_t h = static_cast<std::size_t>(arch.hidden);
  const std::size_t d = kPoseDim;
  return d * h + h + 2 * static_cast<std::size_t>(arch.blocks) * (h * h + h) + h * d + d;
}

void SpaTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (!(lr_decay_per_epoch > 0.0 && lr_decay_per_epoch <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "lr_decay_per_epoch must be in (0, 1]");
  }
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(pivot_weight_pose >= 0.0) || !(pivot_weight_skeleton >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "pivot weights must be non-negative");
  }
  if (!(norm_epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "norm_epsilon must be > 0");
  if (architecture.hidden < 1 || architecture.blocks < 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid SPA architecture");
  }
}

// ---------------------------------------------------------------------------
// Forward

namespace {

enum class Product { Blocked, ColumnStable };

BatchForward forward_impl(const SpaHeadParams& params, const Eigen::MatrixXd& y,
                          Product product) {
  const auto affine = product == Product::Blocked ? affine_into : stable_affine_into;
  const HeadWeights& w = params.weights;
  const Eigen::Index batch = y.cols();
  const std::size_t blocks = w.block_layers.size() / 2;

  BatchForward out;
  ForwardCache& c = out.cache;
  c.input = (y.colwise() - params.input_stats.mean).array().colwise() /
            params.input_stats.stddev.array();
  affine(w.input, c.input, c.input_pre);
  Eigen::MatrixXd act = relu(c.input_pre);

  c.block_in.resize(blocks);
  c.block_pre.resize(blocks);
  c.block_mid.resize(blocks);
  Eigen::MatrixXd tmp;
  for (std::size_t b = 0; b < blocks; ++b) {
    c.block_in[b] = act;
    affine(w.block_layers[2 * b], act, c.block_pre[b]);
    c.block_mid[b] = relu(c.block_pre[b]);
    affine(w.block_layers[2 * b + 1], c.block_mid[b], tmp);
    act += tmp;
  }
  c.head_in = std::move(act);

  Eigen::MatrixXd raw;
  affine(w.output, c.head_in, raw);
  raw.array().colwise() *= params.input_stats.stddev.array();
  // Re-root so the adapted pose keeps its pelvis at the origin.
  for (Eigen::Index i = 0; i < batch; ++i) {
    const Eigen::Vector3d pelvis = raw.col(i).head<3>();
    for (int j = 0; j < kJointCount; ++j) raw.col(i).segment<3>(3 * j) -= pelvis;
  }
  out.residual = std::move(raw);
  out.y_spa = y + out.residual;
  if (!out.y_spa.allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "SPA head produced a non-finite output");
  }
  return out;
}

}  // namespace

BatchForward forward_batch(const SpaHeadParams& params, const Eigen::MatrixXd& y) {
  return forward_impl(params, y, Product::Blocked);
}

SpaForward spa_forward(const SpaHeadParams& params, const Pose3D& y) {
  require_rooted_valid(y);
  Eigen::MatrixXd col = y.flat();
  BatchForward f = forward_impl(params, col, Product::ColumnStable);
  SpaForward out;
  out.residual = f.residual.col(0);
  out.y_spa = Pose3D::from_flat(f.y_spa.col(0), Frame::PelvisRooted);
  out.cache = std::move(f.cache);
  return out;
}

// ---------------------------------------------------------------------------
// Loss

SpaLoss spa_loss(const Pose3D& y, const Pose3D& y_spa, const TargetDescriptor& s_tar,
                 const SkeletonSpec& spec, const LossWeights& weights) {
  SpaLoss loss;
  loss.pose_pivot = (y_spa.coords - y.coords).cwiseAbs().sum();
  const DescriptorVector diff = skeletal_descriptor(y_spa, spec).values - s_tar.values;
  loss.skel_pivot = std::sqrt(diff.squaredNorm() + weights.norm_epsilon);
  loss.total = weights.pose * loss.pose_pivot + weights.skeleton * loss.skel_pivot;
  return loss;
}

PoseVector loss_gradient_wrt_output(const Pose3D& y, const Pose3D& y_spa,
                                    const TargetDescriptor& s_tar, const SkeletonSpec& spec,
                                    const LossWeights& weights) {
  const PoseVector delta = y_spa.flat() - y.flat();
  PoseVector grad;
  for (int i = 0; i < kPoseDim; ++i) {
    grad[i] = weights.pose * static_cast<double>((delta[i] > 0.0) - (delta[i] < 0.0));
  }
  if (weights.skeleton != 0.0) {
    const DescriptorVector diff = skeletal_descriptor(y_spa, spec).values - s_tar.values;
    const double norm = std::sqrt(diff.squaredNorm() + weights.norm_epsilon);
    grad.noalias() += (weights.skeleton / norm) * descriptor_jacobian(y_spa, spec).transpose() * diff;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Backward

HeadWeights backward_batch(const SpaHeadParams& params, const ForwardCache& cache,
                           const Eigen::MatrixXd& grad_y_spa, double scale) {
  const HeadWeights& w = params.weights;
  const std::size_t blocks = w.block_layers.size() / 2;
  HeadWeights grad = HeadWeights::zeros(w.architecture());

  // Undo the re-rooting: the pelvis output feeds every joint with sign -1.
  Eigen::MatrixXd g_out = scale * grad_y_spa;
  for (Eigen::Index i = 0; i < g_out.cols(); ++i) {
    Eigen::Vector3d others = Eigen::Vector3d::Zero();
    for (int j = 1; j < kJointCount; ++j) others += g_out.col(i).segment<3>(3 * j);
    g_out.col(i).head<3>() = -others;
  }
  g_out.array().colwise() *= params.input_stats.stddev.array();

  accumulate_layer_grad(grad.output, g_out, cache.head_in);
  Eigen::MatrixXd g_act = w.output.weight.transpose() * g_out;

  Eigen::MatrixXd g_mid;
  for (std::size_t b = blocks; b-- > 0;) {
    const Layer& first = w.block_layers[2 * b];
    const Layer& second = w.block_layers[2 * b + 1];
    accumulate_layer_grad(grad.block_layers[2 * b + 1], g_act, cache.block_mid[b]);
    g_mid.noalias() = second.weight.transpose() * g_act;
    g_mid.array() *= relu_mask(cache.block_pre[b]).array();
    accumulate_layer_grad(grad.block_layers[2 * b], g_mid, cache.block_in[b]);
    g_act.noalias() += first.weight.transpose() * g_mid;
  }

  g_act.array() *= relu_mask(cache.input_pre).array();
  accumulate_layer_grad(grad.input, g_act, cache.input);
  return grad;
}

HeadWeights spa_backward(const SpaHeadParams& params, const ForwardCache& cache, const Pose3D& y,
                         const TargetDescriptor& s_tar, const SkeletonSpec& spec,
                         const SpaTrainConfig& config) {
  // Recover y_spa from the cached activations rather than trusting the caller.
  const PoseVector y_flat = y.flat();
  Eigen::MatrixXd raw = params.weights.output.weight * cache.head_in;
  raw.colwise() += params.weights.output.bias;
  raw.array().colwise() *= params.input_stats.stddev.array();
  PoseVector residual = raw.col(0);
  const Eigen::Vector3d pelvis = residual.head<3>();
  for (int j = 0; j < kJointCount; ++j) residual.segment<3>(3 * j) -= pelvis;
  const Pose3D y_spa = Pose3D::from_flat(y_flat + residual, Frame::PelvisRooted);

  const Eigen::MatrixXd g = loss_gradient_wrt_output(y, y_spa, s_tar, spec, LossWeights::from(config));
  return backward_batch(params, cache, g, 1.0);
}

// ---------------------------------------------------------------------------
// Training

TrainResult train_spa(std::span<const Pose3D> poses, const TargetDescriptor& s_tar,
                      const SpaTrainConfig& config, const SkeletonSpec& spec) {
  config.validate();
  if (poses.empty()) throw Error(ErrorCode::EmptyInput, "no training poses");
  for (const Pose3D& p : poses) require_rooted_valid(p);

  TrainResult result;
  Rng init_rng(mix_seed(config.seed, 0));
  Rng shuffle_rng(mix_seed(config.seed, 1));
  result.params = SpaHeadParams::xavier(init_rng, config.architecture);
  if (config.output_init == OutputInit::Zero) result.params.weights.output.weight.setZero();
  result.params.input_stats = InputStats::from_poses(poses);
  SpaHeadParams& params = result.params;

  const Eigen::MatrixXd all_y = poses_to_columns(poses);
  const LossWeights weights = LossWeights::from(config);
  std::vector<std::size_t> order(poses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Adam adam(params.weights.tensor_sizes(), Adam::Options{config.learning_rate});
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    EpochLosses losses;
    losses.epoch = epoch;
    losses.learning_rate = adam.learning_rate();

    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t count = std::min(batch_size, order.size() - start);
      Eigen::MatrixXd y(kPoseDim, static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) {
        y.col(static_cast<Eigen::Index>(i)) = all_y.col(static_cast<Eigen::Index>(order[start + i]));
      }

      BatchForward fwd;
      try {
        fwd = forward_batch(params, y);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteActivation) throw;
        throw Error(ErrorCode::NonFiniteActivation,
                    "SPA training diverged at epoch " + std::to_string(epoch));
      }

      Eigen::MatrixXd grad_out(kPoseDim, static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        const Pose3D yi = Pose3D::from_flat(y.col(col), Frame::PelvisRooted);
        const Pose3D si = Pose3D::from_flat(fwd.y_spa.col(col), Frame::PelvisRooted);
        const SpaLoss l = spa_loss(yi, si, s_tar, spec, weights);
        losses.total += l.total;
        losses.pose_pivot += l.pose_pivot;
        losses.skel_pivot += l.skel_pivot;
        grad_out.col(col) = loss_gradient_wrt_output(yi, si, s_tar, spec, weights);
      }

      const HeadWeights grad =
          backward_batch(params, fwd.cache, grad_out, 1.0 / static_cast<double>(count));
      auto param_views = params.weights.views();
      const auto grad_views = grad.views();
      adam.step(param_views, grad_views);
    }

    const double n = static_cast<double>(poses.size());
    losses.total /= n;
    losses.pose_pivot /= n;
    losses.skel_pivot /= n;
    if (!std::isfinite(losses.total) || !params.weights.all_finite()) {
      throw Error(ErrorCode::NonFiniteActivation,
                  "SPA training diverged at epoch " + std::to_string(epoch));
    }
    result.history.push_back(losses);
    adam.set_learning_rate(adam.learning_rate() * config.lr_decay_per_epoch);
  }
  return result;
}

std::vector<Pose3D> adapt(const SpaHeadParams& params, std::span<const Pose3D> poses) {
  std::vector<Pose3D> out;
  out.reserve(poses.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < poses.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, poses.size() - start);
    const auto chunk = poses.subspan(start, count);
    for (const Pose3D& p : chunk) require_rooted_valid(p);
    const BatchForward f = forward_impl(params, poses_to_columns(chunk), Product::ColumnStable);
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(Pose3D::from_flat(f.y_spa.col(static_cast<Eigen::Index>(i)),
                                      Frame::PelvisRooted));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint

std::string checkpoint_to_string(const SpaHeadParams& params, const SkeletonSpec& spec) {
  const Architecture arch = params.weights.architecture();
  std::ostringstream hash;
  hash << std::hex << spec.hash();

  std::string out;
  out.reserve(params.parameter_count() * 24);
  out += "{\"format_version\":" + std::to_string(kCheckpointFormatVersion);
  out += ",\"spec_hash\":\"" + hash.str() + "\"";
  out += ",\"dims\":{\"input\":" + std::to_string(kPoseDim) +
         ",\"hidden\":" + std::to_string(arch.hidden) +
         ",\"blocks\":" + std::to_string(arch.blocks) +
         ",\"output\":" + std::to_string(kPoseDim) + "}";
  out += ",\"input_stats\":{\"mean\":";
  append_array(out, params.input_stats.mean.data(), kPoseDim);
  out += ",\"std\":";
  append_array(out, params.input_stats.stddev.data(), kPoseDim);
  out += "},\"layers\":[";

  std::vector<const Layer*> layers{&params.weights.input};
  for (const Layer& l : params.weights.block_layers) layers.push_back(&l);
  layers.push_back(&params.weights.output);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = *layers[i];
    if (i) out += ',';
    out += "{\"name\":\"" + layer_name(i, params.weights.block_layers.size()) + "\"";
    out += ",\"rows\":" + std::to_string(l.weight.rows());
    out += ",\"cols\":" + std::to_string(l.weight.cols());
    out += ",\"weight\":";
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major =
        l.weight;
    append_array(out, row_major.data(), static_cast<std::size_t>(row_major.size()));
    out += ",\"bias\":";
    append_array(out, l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    out += '}';
  }
  out += "]}\n";
  return out;
}

SpaHeadParams checkpoint_from_string(std::string_view text, const SkeletonSpec& spec) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw Error(ErrorCode::ParseError, "unsupported checkpoint format_version");
    }
    std::ostringstream hash;
    hash << std::hex << spec.hash();
    if (doc.at("spec_hash").get<std::string>() != hash.str()) {
      throw Error(ErrorCode::ParseError, "checkpoint was trained for a different skeleton");
    }
    const auto& dims = doc.at("dims");
    if (dims.at("input").get<int>() != kPoseDim || dims.at("output").get<int>() != kPoseDim) {
      throw Error(ErrorCode::DimensionMismatch, "checkpoint input/output dims must be 51");
    }
    const Architecture arch{dims.at("hidden").get<int>(), dims.at("blocks").get<int>()};
    SpaHeadParams params = SpaHeadParams::zero_head(arch);
    read_doubles(doc.at("input_stats").at("mean"), kPoseDim, params.input_stats.mean.data(),
                 "input mean");
    read_doubles(doc.at("input_stats").at("std"), kPoseDim, params.input_stats.stddev.data(),
                 "input std");
    if (!(params.input_stats.stddev.array() > 0.0).all()) {
      throw Error(ErrorCode::ParseError, "checkpoint input std must be positive");
    }

    std::vector<Layer*> layers{&params.weights.input};
    for (Layer& l : params.weights.block_layers) layers.push_back(&l);
    layers.push_back(&params.weights.output);
    const auto& doc_layers = doc.at("layers");
    if (!doc_layers.is_array() || doc_layers.size() != layers.size()) {
      throw Error(ErrorCode::DimensionMismatch, "checkpoint layer count mismatch");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      Layer& l = *layers[i];
      const auto& dl = doc_layers[i];
      if (dl.at("rows").get<Eigen::Index>() != l.weight.rows() ||
          dl.at("cols").get<Eigen::Index>() != l.weight.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "checkpoint layer shape mismatch");
      }
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major(
          l.weight.rows(), l.weight.cols());
      read_doubles(dl.at("weight"), static_cast<std::size_t>(row_major.size()), row_major.data(),
                   "weight");
      l.weight = row_major;
      read_doubles(dl.at("bias"), static_cast<std::size_t>(l.bias.size()), l.bias.data(), "bias");
    }
    if (!params.weights.all_finite()) throw Error(ErrorCode::ParseError, "non-finite weight");
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const SpaHeadParams& params) {
  write_file_atomic(path, checkpoint_to_string(params));
}

SpaHeadParams load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_string(read_file(path));
}

nlohmann::json to_json(const SpaTrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"lr_decay_per_epoch", c.lr_decay_per_epoch},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"pivot_weight_pose", c.pivot_weight_pose},
          {"pivot_weight_skeleton", c.pivot_weight_skeleton},
          {"norm_epsilon", c.norm_epsilon},
          {"hidden", c.architecture.hidden},
          {"blocks", c.architecture.blocks},
          {"output_init", c.output_init == OutputInit::Zero ? "zero" : "xavier"}};
}

SpaTrainConfig train_config_from_json(const nlohmann::json& doc, const SpaTrainConfig& defaults) {
  SpaTrainConfig c = defaults;
  try {
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.lr_decay_per_epoch = doc.value("lr_decay_per_epoch", c.lr_decay_per_epoch);
    c.epochs = doc.value("epochs", c.epochs);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.seed = doc.value("seed", c.seed);
    c.pivot_weight_pose = doc.value("pivot_weight_pose", c.pivot_weight_pose);
    c.pivot_weight_skeleton = doc.value("pivot_weight_skeleton", c.pivot_weight_skeleton);
    c.norm_epsilon = doc.value("norm_epsilon", c.norm_epsilon);
    c.architecture.hidden = doc.value("hidden", c.architecture.hidden);
    c.architecture.blocks = doc.value("blocks", c.architecture.blocks);
    if (doc.contains("output_init")) {
      const std::string init = doc["output_init"].get<std::string>();
      if (init != "zero" && init != "xavier") {
        throw Error(ErrorCode::InvalidArgument, "output_init must be \"zero\" or \"xavier\"");
      }
      c.output_init = init == "zero" ? OutputInit::Zero : OutputInit::Xavier;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("spa config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace pose_adapt::spa
