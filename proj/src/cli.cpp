#include "pose_adapt/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pose_adapt/experiment.hpp"
#include "pose_adapt/io.hpp"
#include "pose_adapt/metrics.hpp"
#include "pose_adapt/saa.hpp"
#include "pose_adapt/spa.hpp"
#include "pose_adapt/synth.hpp"

namespace pose_adapt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// POSE_ADAPT_LOG = quiet | info | debug (default info).
LogLevel log_level() {
  const char* env = std::getenv("POSE_ADAPT_LOG");
  if (!env) return LogLevel::Info;
  const std::string v(env);
  if (v == "quiet") return LogLevel::Quiet;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err), level_(log_level()) {}
  void info(const std::string& msg) const {
    if (level_ >= LogLevel::Info) err_ << "[pose-adapt] " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ >= LogLevel::Debug) err_ << "[pose-adapt] " << msg << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    json doc = json::parse(read_file(path));
    if (!doc.is_object()) throw Error(ErrorCode::ParseError, path + ": config must be an object");
    return doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::size_t> n;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_epochs, bool with_n) {
  cmd->add_option("--config", f.config, "JSON config file; flags override its fields")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory")->required();
  cmd->add_option("--seed", f.seed, "Random seed");
  if (with_epochs) cmd->add_option("--epochs", f.epochs, "Training epochs");
  if (with_n) cmd->add_option("--n", f.n, "Number of samples");
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const CommonFlags& f, const Logger& log) {
  const json cfg = load_config(f.config);
  const synth::DomainConfig domain =
      synth::domain_from_json(cfg.value("domain", json::object()), synth::DomainConfig::standard());
  const synth::EstimatorNoise noise = synth::noise_from_json(
      cfg.value("noise", json::object()), synth::EstimatorNoise::limb_mismatch(1.15, 20.0));
  const std::size_t n = f.n.value_or(cfg.value("n", std::size_t{1000}));
  const std::uint64_t seed = f.seed.value_or(cfg.value("seed", domain.seed));

  const synth::Dataset data = synth::gen_dataset(domain, noise, n, seed);
  const fs::path out(f.out);
  write_pose_file(out / "dataset.jsonl", data.records);
  write_json(out / "metadata.json",
             synth::dataset_metadata(domain, noise, n, seed, data.mean_descriptor));
  write_json(out / "config.json", {{"command", "gen-data"},
                                   {"domain", synth::to_json(domain)},
                                   {"noise", synth::to_json(noise)},
                                   {"n", n},
                                   {"seed", seed}});
  log.info("wrote " + std::to_string(n) + " samples to " + (out / "dataset.jsonl").string());
  return kExitOk;
}

spa::TargetDescriptor read_target(const std::string& path) {
  const json doc = load_config(path);
  if (!doc.contains("mean_descriptor")) {
    throw Error(ErrorCode::ParseError, path + ": missing mean_descriptor");
  }
  const auto& arr = doc["mean_descriptor"];
  if (!arr.is_array() || arr.size() != kBoneCount) {
    throw Error(ErrorCode::ParseError, path + ": mean_descriptor must have 16 entries");
  }
  spa::TargetDescriptor t;
  for (int k = 0; k < kBoneCount; ++k) {
    t.values[k] = arr[static_cast<std::size_t>(k)].get<double>();
    if (!std::isfinite(t.values[k]) || t.values[k] < 0.0) {
      throw Error(ErrorCode::ParseError, path + ": mean_descriptor entries must be finite, >= 0");
    }
  }
  return t;
}

struct SpaFlags {
  std::string data;
  std::string target;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<double> pose_weight;
  std::optional<double> skeleton_weight;
  std::optional<int> hidden;
  std::optional<std::string> output_init;
};

spa::SpaTrainConfig resolve_spa_config(const json& doc, const SpaFlags& s, const CommonFlags& f,
                                       const spa::SpaTrainConfig& defaults) {
  json merged = doc;
  if (f.seed) merged["seed"] = *f.seed;
  if (f.epochs) merged["epochs"] = *f.epochs;
  if (s.learning_rate) merged["learning_rate"] = *s.learning_rate;
  if (s.batch_size) merged["batch_size"] = *s.batch_size;
  if (s.pose_weight) merged["pivot_weight_pose"] = *s.pose_weight;
  if (s.skeleton_weight) merged["pivot_weight_skeleton"] = *s.skeleton_weight;
  if (s.hidden) merged["hidden"] = *s.hidden;
  if (s.output_init) merged["output_init"] = *s.output_init;
  return spa::train_config_from_json(merged, defaults);
}

int cmd_train_spa(const CommonFlags& f, const SpaFlags& s, const Logger& log) {
  const spa::SpaTrainConfig config =
      resolve_spa_config(load_config(f.config), s, f, spa::SpaTrainConfig{});
  const spa::TargetDescriptor s_tar = read_target(s.target);
  const auto records = read_pose_file(s.data);
  const auto poses = experiment::predictions(records);
  log.info("training SPA on " + std::to_string(poses.size()) + " poses for " +
           std::to_string(config.epochs) + " epochs");

  const spa::TrainResult result = spa::train_spa(poses, s_tar, config);
  const fs::path out(f.out);
  spa::save_checkpoint(out / "checkpoint.json", result.params);
  write_file_atomic(out / "history.csv", experiment::spa_history_csv(result.history));
  write_json(out / "config.json", {{"command", "train-spa"},
                                   {"data", s.data},
                                   {"target", s.target},
                                   {"spa", spa::to_json(config)},
                                   {"target_descriptor", std::vector<double>(
                                                             s_tar.values.data(),
                                                             s_tar.values.data() + kBoneCount)}});
  log.info("wrote " + (out / "checkpoint.json").string());
  return kExitOk;
}

int cmd_adapt(const CommonFlags& f, const std::string& checkpoint, const std::string& data,
              const Logger& log) {
  const spa::SpaHeadParams params = spa::load_checkpoint(checkpoint);
  const auto records = read_pose_file(data);
  const auto poses = experiment::predictions(records);
  const auto adapted = spa::adapt(params, poses);

  std::vector<PoseRecord> out_records;
  out_records.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    PoseRecord r{adapted[i], std::nullopt};
    if (records[i].gt) r.gt = pelvis_root(*records[i].gt);
    out_records.push_back(std::move(r));
  }
  const fs::path out(f.out);
  write_pose_file(out / "adapted.jsonl", out_records);
  write_json(out / "config.json",
             {{"command", "adapt"}, {"checkpoint", checkpoint}, {"data", data}});
  log.info("adapted " + std::to_string(out_records.size()) + " poses");
  return kExitOk;
}

int cmd_eval(const CommonFlags& f, const std::vector<std::string>& data, const Logger& log) {
  std::vector<metrics::PosePair> pairs;
  for (const auto& path : data) {
    const auto records = read_pose_file(path);
    const auto p = experiment::to_pairs(records);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  const metrics::MetricsReport report = metrics::evaluate(pairs);
  const fs::path out(f.out);
  write_json(out / "report.json", experiment::to_json(report));
  write_file_atomic(out / "metrics.csv", experiment::metrics_csv(report));
  write_file_atomic(out / "pck_curve.csv", experiment::pck_curve_csv(report));
  write_json(out / "config.json", {{"command", "eval"}, {"data", data}});
  log.info("MPJPE " + format_double(report.mpjpe_mm) + " mm, PA-MPJPE " +
           format_double(report.pa_mpjpe_mm) + " mm, 3DPCK " + format_double(report.pck3d_150));
  return kExitOk;
}

struct SaaFlags {
  std::optional<double> lambda;
  std::optional<std::string> confusion_form;
  std::optional<int> grid;
  std::optional<int> channels;
  std::optional<std::size_t> n_test;
};

int cmd_saa_demo(const CommonFlags& f, const SaaFlags& s, const Logger& log) {
  const json cfg = load_config(f.config);
  json train_doc = cfg.value("train", json::object());
  if (f.seed) train_doc["seed"] = *f.seed;
  if (f.epochs) train_doc["epochs"] = *f.epochs;
  if (s.lambda) train_doc["lambda_conf"] = *s.lambda;
  if (s.confusion_form) train_doc["confusion_form"] = *s.confusion_form;
  const saa::SaaTrainConfig config = saa::train_config_from_json(train_doc, {});

  const json toy_doc = cfg.value("toy", json::object());
  saa::ToyDomainConfig toy;
  try {
    toy.height = toy_doc.value("height", toy.height);
    toy.width = toy_doc.value("width", toy.width);
    toy.channels = toy_doc.value("channels", toy.channels);
    toy.domain_dims = toy_doc.value("domain_dims", toy.domain_dims);
    toy.domain_margin = toy_doc.value("domain_margin", toy.domain_margin);
    toy.noise_sigma = toy_doc.value("noise_sigma", toy.noise_sigma);
    toy.world_seed = toy_doc.value("world_seed", toy.world_seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("toy config: ") + e.what());
  }
  if (s.grid) toy.height = toy.width = *s.grid;
  if (s.channels) toy.channels = *s.channels;
  if (toy.height < 1 || toy.width < 1 || toy.channels < 1) {
    throw Error(ErrorCode::InvalidArgument, "grid dimensions must be positive");
  }
  const std::size_t n = f.n.value_or(cfg.value("n", std::size_t{4096}));
  const std::size_t n_test = s.n_test.value_or(cfg.value("n_test", std::size_t{512}));
  const std::uint64_t data_seed = cfg.value("data_seed", std::uint64_t{100});

  const auto real = saa::make_toy_domain(toy, saa::Domain::Real, n, mix_seed(data_seed, 0));
  const auto synth = saa::make_toy_domain(toy, saa::Domain::Synthetic, n, mix_seed(data_seed, 1));
  const auto real_test = saa::make_toy_domain(toy, saa::Domain::Real, n_test, mix_seed(data_seed, 2));
  const auto synth_test =
      saa::make_toy_domain(toy, saa::Domain::Synthetic, n_test, mix_seed(data_seed, 3));
  const saa::SaaResult result =
      saa::adversarial_train(real, synth, config, {real_test, synth_test});

  std::string csv = "epoch,d_accuracy,task_loss,confusion_loss\n";
  for (const auto& e : result.history) {
    csv += std::to_string(e.epoch) + "," + format_double(e.d_accuracy) + "," +
           format_double(e.task_loss) + "," + format_double(e.confusion_loss) + "\n";
  }
  const fs::path out(f.out);
  write_file_atomic(out / "history.csv", csv);
  write_json(out / "config.json", {{"command", "saa-demo"},
                                   {"train", saa::to_json(config)},
                                   {"toy",
                                    {{"height", toy.height},
                                     {"width", toy.width},
                                     {"channels", toy.channels},
                                     {"joints", toy.joints},
                                     {"domain_dims", toy.domain_dims},
                                     {"domain_margin", toy.domain_margin},
                                     {"noise_sigma", toy.noise_sigma},
                                     {"world_seed", toy.world_seed}}},
                                   {"n", n},
                                   {"n_test", n_test},
                                   {"data_seed", data_seed}});
  const auto& last = result.history.back();
  log.info("final D accuracy " + format_double(last.d_accuracy) + ", task loss " +
           format_double(last.task_loss));
  return kExitOk;
}

int cmd_ablate(const CommonFlags& f, const SpaFlags& s, std::optional<std::size_t> n_test,
               bool save_checkpoint, std::ostream& out_stream, const Logger& log) {
  const json cfg = load_config(f.config);
  experiment::AblationConfig config;
  config.target_domain = synth::domain_from_json(cfg.value("target_domain", json::object()),
                                                 config.target_domain);
  config.noise = synth::noise_from_json(cfg.value("noise", json::object()), config.noise);
  config.n_train = f.n.value_or(cfg.value("n_train", config.n_train));
  config.n_test = n_test.value_or(cfg.value("n_test", config.n_test));
  config.seed = f.seed.value_or(cfg.value("seed", config.seed));
  CommonFlags spa_flags = f;
  spa_flags.seed = std::nullopt;  // --seed drives the data; spa.seed stays in the config
  config.spa = resolve_spa_config(cfg.value("spa", json::object()), s, spa_flags, config.spa);
  if (config.n_train < 1 || config.n_test < 1) {
    throw Error(ErrorCode::InvalidArgument, "dataset sizes must be at least 1");
  }

  log.info("ablation: " + std::to_string(config.n_train) + " train / " +
           std::to_string(config.n_test) + " test pairs, " + std::to_string(config.spa.epochs) +
           " SPA epochs");
  const experiment::AblationResult result = experiment::run_ablation(config);

  const fs::path out(f.out);
  const std::string table = experiment::ablation_table_csv(result);
  write_file_atomic(out / "summary.csv", table);
  write_json(out / "summary.json",
             {{"without_spa",
               {{"metrics", experiment::to_json(result.without_spa.report)},
                {"descriptor_error", result.without_spa.descriptor_error}}},
              {"with_spa",
               {{"metrics", experiment::to_json(result.with_spa.report)},
                {"descriptor_error", result.with_spa.descriptor_error}}}});
  write_file_atomic(out / "history.csv", experiment::spa_history_csv(result.training.history));
  write_json(out / "config.json",
             {{"command", "ablate"}, {"ablation", experiment::to_json(config)}});
  if (save_checkpoint) spa::save_checkpoint(out / "checkpoint.json", result.training.params);
  out_stream << table;
  return kExitOk;
}

void print_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return kExitUsage;
    case ErrorCode::NonFiniteActivation: return kExitDivergence;
    default: return kExitData;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skeletal pose adaptation and semantic-aware adversarial adaptation toolkit",
               "pose-adapt"};
  app.require_subcommand(1);

  CommonFlags common;
  SpaFlags spa_flags;
  SaaFlags saa_flags;
  std::string checkpoint;
  std::string adapt_data;
  std::vector<std::string> eval_data;
  std::optional<std::size_t> ablate_n_test;
  bool save_checkpoint = false;

  auto add_spa_flags = [&](CLI::App* cmd) {
    cmd->add_option("--lr", spa_flags.learning_rate, "Initial learning rate");
    cmd->add_option("--batch-size", spa_flags.batch_size, "Mini-batch size");
    cmd->add_option("--pose-weight", spa_flags.pose_weight, "Weight of the L1 pose pivot");
    cmd->add_option("--skeleton-weight", spa_flags.skeleton_weight,
                    "Weight of the skeletal descriptor pivot");
    cmd->add_option("--hidden", spa_flags.hidden, "Hidden width of the SPA head");
    cmd->add_option("--output-init", spa_flags.output_init, "xavier or zero")
        ->check(CLI::IsMember({"xavier", "zero"}));
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic (pred, gt) dataset");
  add_common(gen, common, false, true);

  auto* train = app.add_subcommand("train-spa", "Train an SPA head on predicted poses");
  add_common(train, common, true, false);
  train->add_option("--data", spa_flags.data, "Pose file (JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--target", spa_flags.target, "JSON document with mean_descriptor")
      ->required()
      ->check(CLI::ExistingFile);
  add_spa_flags(train);

  auto* adapt_cmd = app.add_subcommand("adapt", "Apply an SPA checkpoint to a pose file");
  add_common(adapt_cmd, common, false, false);
  adapt_cmd->add_option("--checkpoint", checkpoint, "SPA checkpoint (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  adapt_cmd->add_option("--data", adapt_data, "Pose file (JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Compute MPJPE, PA-MPJPE, 3DPCK and AUC");
  add_common(eval, common, false, false);
  eval->add_option("--data", eval_data, "Pose file(s)")->required()->check(CLI::ExistingFile);

  auto* saa_cmd = app.add_subcommand("saa-demo", "Adversarial per-joint adaptation on toy grids");
  add_common(saa_cmd, common, true, true);
  saa_cmd->add_option("--lambda", saa_flags.lambda, "Confusion loss coefficient");
  saa_cmd->add_option("--confusion-form", saa_flags.confusion_form)
      ->check(CLI::IsMember({"symmetric_uniform_ce", "literal_eq2"}));
  saa_cmd->add_option("--grid", saa_flags.grid, "Grid height and width");
  saa_cmd->add_option("--channels", saa_flags.channels, "Feature channels");
  saa_cmd->add_option("--n-test", saa_flags.n_test, "Held-out samples per domain");

  auto* ablate = app.add_subcommand("ablate", "Compare no-SPA vs SPA on the limb-mismatch task");
  add_common(ablate, common, true, true);
  add_spa_flags(ablate);
  ablate->add_option("--n-test", ablate_n_test, "Test pairs");
  ablate->add_flag("--save-checkpoint", save_checkpoint, "Also write the trained head");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    print_error(err, "Usage", e.what());
    return kExitUsage;
  }

  const Logger log(err);
  try {
    if (gen->parsed()) return cmd_gen_data(common, log);
    if (train->parsed()) return cmd_train_spa(common, spa_flags, log);
    if (adapt_cmd->parsed()) return cmd_adapt(common, checkpoint, adapt_data, log);
    if (eval->parsed()) return cmd_eval(common, eval_data, log);
    if (saa_cmd->parsed()) return cmd_saa_demo(common, saa_flags, log);
    if (ablate->parsed()) {
      return cmd_ablate(common, spa_flags, ablate_n_test, save_checkpoint, out, log);
    }
  } catch (const Error& e) {
    print_error(err, to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    print_error(err, "Internal", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace pose_adapt::cli
