// Command-line front end: simulate / train / eval / explain / metrics.
// Exit codes: 0 success, 1 usage, 2 I/O or missing data, 3 state mismatch.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gazex/attribution.hpp"
#include "gazex/behavior.hpp"
#include "gazex/checkpoint.hpp"
#include "gazex/csv.hpp"
#include "gazex/dataset.hpp"
#include "gazex/eval.hpp"
#include "gazex/net.hpp"
#include "gazex/synth.hpp"
#include "gazex/train.hpp"
#include "gazex/trial.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitStateMismatch = 3;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_manifest(const fs::path& dir, const json& j) {
  std::ofstream os(dir / "manifest.json", std::ios::binary);
  if (!os) throw std::runtime_error((dir / "manifest.json").string() + ": cannot write");
  os << j.dump(2) << "\n";
}

struct SplitSamples {
  std::vector<gazex::Sample> train, val, test;
};

SplitSamples build_split_samples(const std::vector<gazex::Trial>& trials, gazex::GazeMode mode,
                                 std::uint64_t split_seed) {
  const auto split = gazex::split_by_participant(trials, {6, 1, 3}, split_seed);
  SplitSamples out;
  out.train = gazex::build_samples(trials, split[0], mode);
  out.val = gazex::build_samples(trials, split[1], mode);
  out.test = gazex::build_samples(trials, split[2], mode);
  return out;
}

std::vector<gazex::Sample> normalize_all(const gazex::Normalizer& norm,
                                         const std::vector<gazex::Sample>& samples) {
  std::vector<gazex::Sample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(gazex::apply_normalizer(norm, s));
  return out;
}

void write_history_csv(const std::string& path, const std::vector<gazex::EpochStats>& history) {
  gazex::CsvWriter w(path);
  w.row({"epoch", "lr", "train_nll", "val_nll"});
  for (const auto& e : history) {
    w.row({std::to_string(e.epoch), gazex::format_double(e.lr),
           gazex::format_double(e.train_nll), gazex::format_double(e.val_nll)});
  }
}

int run_simulate(const std::string& out_dir, int participants, std::uint64_t seed,
                 const std::string& cmdline) {
  auto data = gazex::generate_dataset(participants, seed);
  gazex::write_dataset(out_dir, data);
  json manifest = {
      {"command", "simulate"},       {"version", kVersion},
      {"seed", seed},
      {"participants", participants}, {"trials", data.trials.size()},
      {"timeouts", data.n_timeouts}, {"config_hash", fnv1a(cmdline)},
  };
  write_manifest(out_dir, manifest);
  std::cout << "wrote " << data.trials.size() << " trials (" << data.n_timeouts
            << " timeouts dropped) to " << out_dir << "\n";
  return kExitOk;
}

int run_train(const std::string& data_dir, const std::string& out_dir, gazex::GazeMode mode,
              bool include_context, const gazex::TrainConfig& tcfg, std::uint64_t split_seed,
              const std::string& cmdline) {
  const auto trials = gazex::load_dataset(data_dir);
  if (trials.empty()) throw std::runtime_error(data_dir + ": dataset is empty");

  SplitSamples split = build_split_samples(trials, mode, split_seed);
  const gazex::Normalizer norm = gazex::fit_normalizer(split.train, mode);
  const auto train_n = normalize_all(norm, split.train);
  const auto val_n = normalize_all(norm, split.val);

  const gazex::ModelConfig mcfg = gazex::make_model_config(tcfg, mode, include_context);
  gazex::TrainResult result = gazex::train(mcfg, tcfg, train_n, val_n);

  fs::create_directories(out_dir);
  gazex::Checkpoint ckpt{std::move(result.params), norm, split_seed};
  gazex::save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), ckpt);
  write_history_csv((fs::path(out_dir) / "history.csv").string(), result.history);

  json manifest = {
      {"command", "train"},
      {"version", kVersion},
      {"gaze", gazex::to_string(mode)},
      {"context", include_context},
      {"seed", tcfg.seed},
      {"split_seed", split_seed},
      {"epochs", tcfg.epochs},
      {"train_windows", split.train.size()},
      {"val_windows", split.val.size()},
      {"test_windows", split.test.size()},
      {"best_epoch", result.best_epoch},
      {"best_val_nll", result.best_val_nll},
      {"config_hash", fnv1a(cmdline)},
  };
  write_manifest(out_dir, manifest);
  std::cout << "checkpoint written to " << out_dir << " (best epoch " << result.best_epoch
            << ", val NLL " << result.best_val_nll << ")\n";
  return kExitOk;
}

int run_eval(const std::string& data_dir, const std::string& ckpt_path, const std::string& out_dir,
             const std::string& mode_str, int k, std::uint64_t seed,
             const std::string& expect_gaze, const std::string& cmdline) {
  const gazex::Checkpoint ckpt = gazex::load_checkpoint(ckpt_path);
  if (!expect_gaze.empty() &&
      gazex::parse_gaze_mode(expect_gaze) != ckpt.params.config.gaze_mode) {
    std::cerr << "error: checkpoint was trained with gaze mode '"
              << gazex::to_string(ckpt.params.config.gaze_mode) << "', not '" << expect_gaze
              << "'\n";
    return kExitStateMismatch;
  }

  const auto trials = gazex::load_dataset(data_dir);
  SplitSamples split = build_split_samples(trials, ckpt.params.config.gaze_mode, ckpt.split_seed);
  if (split.test.empty()) throw std::runtime_error("eval: test split is empty");

  std::vector<gazex::HorizonReport> reports;
  if (mode_str == "mean" || mode_str == "both") {
    auto r = gazex::horizon_report(ckpt.params, ckpt.normalizer, split.test,
                                   gazex::EvalMode::mean());
    r.label = "mean";
    reports.push_back(r);
  }
  if (mode_str == "min20" || mode_str == "both") {
    auto r = gazex::min_k_eval(ckpt.params, ckpt.normalizer, split.test, k, seed);
    r.label = "min" + std::to_string(k);
    reports.push_back(r);
  }

  fs::create_directories(out_dir);
  gazex::write_horizon_csv((fs::path(out_dir) / "horizons.csv").string(), reports);
  json manifest = {
      {"command", "eval"},         {"version", kVersion},
      {"mode", mode_str},
      {"k", k},                    {"seed", seed},
      {"checkpoint", ckpt_path},   {"test_windows", split.test.size()},
      {"config_hash", fnv1a(cmdline)},
  };
  write_manifest(out_dir, manifest);
  for (const auto& r : reports) {
    std::cout << r.label << ": ADE " << r.ade_cm << " cm, FDE " << r.fde_cm << " cm\n";
  }
  return kExitOk;
}

int run_explain(const std::string& data_dir, const std::string& ckpt_path,
                const std::string& out_dir, const std::string& axis_str, int n_background,
                int n_explained, int n_alpha, std::uint64_t seed, const std::string& cmdline) {
  const gazex::Checkpoint ckpt = gazex::load_checkpoint(ckpt_path);
  const auto trials = gazex::load_dataset(data_dir);
  SplitSamples split = build_split_samples(trials, ckpt.params.config.gaze_mode, ckpt.split_seed);
  if (split.train.empty() || split.test.empty()) {
    throw std::runtime_error("explain: empty split");
  }

  fs::create_directories(out_dir);
  std::vector<int> axes;
  if (axis_str == "x" || axis_str == "both") axes.push_back(0);
  if (axis_str == "y" || axis_str == "both") axes.push_back(1);
  for (int axis : axes) {
    const auto result =
        gazex::explain_samples(ckpt.params, ckpt.normalizer, split.train, split.test, axis,
                               n_background, n_explained, n_alpha, seed);
    if (result.used_all_samples &&
        split.test.size() < static_cast<std::size_t>(n_explained)) {
      std::cerr << "warning: only " << split.test.size() << " samples available for plotting; "
                << "requested " << n_explained << "\n";
    }
    const std::string tag = axis == 0 ? "x" : "y";
    gazex::write_attribution_csv((fs::path(out_dir) / ("attributions_" + tag + ".csv")).string(),
                                 result);
    gazex::write_context_summary_csv(
        (fs::path(out_dir) / ("context_summary_" + tag + ".csv")).string(),
        gazex::summarize_context(result));
  }
  json manifest = {
      {"command", "explain"},   {"version", kVersion},
      {"axis", axis_str},       {"backgrounds", n_background},
      {"explained", n_explained}, {"alpha", n_alpha},    {"seed", seed},
      {"checkpoint", ckpt_path},  {"config_hash", fnv1a(cmdline)},
  };
  write_manifest(out_dir, manifest);
  return kExitOk;
}

int run_metrics(const std::string& data_dir, const std::string& out_dir,
                const std::string& cmdline) {
  const auto trials = gazex::load_dataset(data_dir);
  if (trials.empty()) throw std::runtime_error(data_dir + ": dataset is empty");

  const gazex::SpeedThresholds thresholds = gazex::estimate_thresholds(trials);
  std::vector<gazex::TrialMetrics> metrics;
  std::vector<gazex::ScenarioContext> contexts;
  for (const auto& t : trials) {
    metrics.push_back(gazex::compute_trial_metrics(t, thresholds));
    contexts.push_back(t.ctx);
  }

  std::vector<gazex::DescriptiveTable> tables;
  for (auto f : {gazex::Factor::Yielding, gazex::Factor::Ehmi, gazex::Factor::Angle,
                 gazex::Factor::Traffic}) {
    tables.push_back(gazex::descriptive_table(metrics, contexts, f));
  }
  fs::create_directories(out_dir);
  gazex::write_descriptive_csv((fs::path(out_dir) / "metrics.csv").string(), tables);

  json manifest = {
      {"command", "metrics"},
      {"version", kVersion},
      {"trials", trials.size()},
      {"initiation_threshold", thresholds.initiation_threshold},
      {"backward_threshold", thresholds.backward_threshold},
      {"config_hash", fnv1a(cmdline)},
  };
  write_manifest(out_dir, manifest);
  std::cout << "metrics for " << trials.size() << " trials written to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian trajectory prediction pipeline"};
  app.require_subcommand(1);
  // global key=value config file with one [subcommand] section per command;
  // explicit flags win
  app.set_config("--config");

  std::string cmdline;
  for (int i = 1; i < argc; ++i) {
    cmdline += argv[i];
    cmdline += ' ';
  }

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string sim_out = "dataset";
  int sim_participants = 50;
  std::uint64_t sim_seed = 0;
  sim->add_option("--out", sim_out, "Output dataset directory");
  sim->add_option("--participants", sim_participants, "Number of participants")
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Random seed");

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a dataset");
  std::string tr_data = "dataset", tr_out = "model", tr_gaze = "none", tr_context = "off";
  gazex::TrainConfig tcfg;
  std::uint64_t tr_split_seed = 0;
  bool tr_split_seed_set = false;
  tr->add_option("--data", tr_data, "Dataset directory");
  tr->add_option("--out", tr_out, "Output directory (checkpoint + history)");
  tr->add_option("--gaze", tr_gaze, "Gaze representation mode");
  tr->add_option("--context", tr_context, "Include context features: on|off")
      ->check(CLI::IsMember({"on", "off"}));
  tr->add_option("--epochs", tcfg.epochs)->check(CLI::PositiveNumber);
  tr->add_option("--batch", tcfg.batch_size)->check(CLI::PositiveNumber);
  tr->add_option("--lr", tcfg.learning_rate)->check(CLI::PositiveNumber);
  tr->add_option("--hidden-motion", tcfg.hidden_motion)->check(CLI::PositiveNumber);
  tr->add_option("--hidden-dist", tcfg.hidden_dist)->check(CLI::PositiveNumber);
  tr->add_option("--hidden-gaze", tcfg.hidden_gaze)->check(CLI::PositiveNumber);
  tr->add_option("--hidden-dense", tcfg.hidden_dense)->check(CLI::PositiveNumber);
  tr->add_option("--seed", tcfg.seed, "Training seed");
  tr->add_option("--split-seed", tr_split_seed, "Participant split seed (defaults to --seed)")
      ->each([&](const std::string&) { tr_split_seed_set = true; });

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  std::string ev_data = "dataset", ev_ckpt = "model/checkpoint.bin", ev_out = "eval";
  std::string ev_mode = "both", ev_gaze;
  int ev_k = 20;
  std::uint64_t ev_seed = 0;
  ev->add_option("--data", ev_data, "Dataset directory");
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file");
  ev->add_option("--out", ev_out, "Output directory");
  ev->add_option("--mode", ev_mode, "mean|min20|both")
      ->check(CLI::IsMember({"mean", "min20", "both"}));
  ev->add_option("--k", ev_k)->check(CLI::PositiveNumber);
  ev->add_option("--seed", ev_seed, "Sampling seed");
  ev->add_option("--gaze", ev_gaze, "Expected gaze mode (mismatch fails with exit 3)");

  // explain
  auto* ex = app.add_subcommand("explain", "Expected-gradients attribution");
  std::string ex_data = "dataset", ex_ckpt = "model/checkpoint.bin", ex_out = "explain";
  std::string ex_axis = "both";
  int ex_bg = 100, ex_n = 50, ex_alpha = 1;
  std::uint64_t ex_seed = 0;
  ex->add_option("--data", ex_data, "Dataset directory");
  ex->add_option("--checkpoint", ex_ckpt, "Checkpoint file");
  ex->add_option("--out", ex_out, "Output directory");
  ex->add_option("--axis", ex_axis, "x|y|both")->check(CLI::IsMember({"x", "y", "both"}));
  ex->add_option("--backgrounds", ex_bg)->check(CLI::PositiveNumber);
  ex->add_option("--explained", ex_n)->check(CLI::PositiveNumber);
  ex->add_option("--alpha", ex_alpha, "Interpolation draws per background")
      ->check(CLI::PositiveNumber);
  ex->add_option("--seed", ex_seed);

  // metrics
  auto* me = app.add_subcommand("metrics", "Trial-level behavioral metrics table");
  std::string me_data = "dataset", me_out = "metrics";
  me->add_option("--data", me_data, "Dataset directory");
  me->add_option("--out", me_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_out, sim_participants, sim_seed, cmdline);
    if (tr->parsed()) {
      const gazex::GazeMode mode = gazex::parse_gaze_mode(tr_gaze);
      if (!tr_split_seed_set) tr_split_seed = tcfg.seed;
      return run_train(tr_data, tr_out, mode, tr_context == "on", tcfg, tr_split_seed, cmdline);
    }
    if (ev->parsed()) return run_eval(ev_data, ev_ckpt, ev_out, ev_mode, ev_k, ev_seed, ev_gaze,
                                      cmdline);
    if (ex->parsed()) return run_explain(ex_data, ex_ckpt, ex_out, ex_axis, ex_bg, ex_n, ex_alpha,
                                         ex_seed, cmdline);
    if (me->parsed()) return run_metrics(me_data, me_out, cmdline);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
