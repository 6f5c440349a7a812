// Acceptance suite: runs every criterion end to end and prints one
// pass/fail line each. Exits nonzero if any criterion fails.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gazex/attribution.hpp"
#include "gazex/behavior.hpp"
#include "gazex/checkpoint.hpp"
#include "gazex/dataset.hpp"
#include "gazex/eval.hpp"
#include "gazex/net.hpp"
#include "gazex/preproc.hpp"
#include "gazex/synth.hpp"
#include "gazex/train.hpp"

namespace fs = std::filesystem;
using namespace gazex;
using clk = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& o, double seconds) {
  std::printf("[%s] criterion %2d: %-30s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id,
              name.c_str(), o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

void run(int id, const std::string& name, const std::function<Outcome()>& fn) {
  const auto t0 = clk::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  report(id, name, o, std::chrono::duration<double>(clk::now() - t0).count());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Sample random_sample(const ModelConfig& cfg, Rng& rng) {
  Sample s;
  s.motion = Eigen::MatrixXd::NullaryExpr(cfg.t_past, kMotionDim, [&] { return rng.normal(); });
  s.dist = Eigen::MatrixXd::NullaryExpr(cfg.t_past, kDistanceDim, [&] { return rng.normal(); });
  s.gaze = Eigen::MatrixXd::NullaryExpr(cfg.t_past, cfg.gaze_in(), [&] { return rng.normal(); });
  s.ctx = Eigen::VectorXd::NullaryExpr(kContextDim, [&] { return rng.uniform() < 0.5 ? 0.0 : 1.0; });
  s.future = Eigen::MatrixXd::NullaryExpr(cfg.t_future, 2, [&] { return rng.normal(); });
  s.anchor = {0.0, 0.0};
  return s;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness across all gaze modes

Outcome criterion_gradients() {
  const auto t0 = clk::now();
  double worst = 0.0;
  long max_params = 0;
  for (GazeMode mode : all_gaze_modes()) {
    ModelConfig cfg;
    cfg.gaze_mode = mode;
    cfg.include_context = true;
    cfg.t_past = 4;
    cfg.t_future = 2;
    cfg.hidden_motion = 4;
    cfg.hidden_dist = 3;
    cfg.hidden_gaze = 3;
    cfg.hidden_dense = 4;
    ModelParams params = init_params(cfg, 99);
    Rng rng(123);
    std::vector<Sample> samples{random_sample(cfg, rng), random_sample(cfg, rng),
                                random_sample(cfg, rng)};
    std::vector<std::size_t> order{0, 1, 2};
    BatchData batch = assemble_batch(samples, order, 0, 3, cfg);
    ForwardTrace tr;
    ModelParams grads = make_zero_like(params);
    net_forward(params, batch, tr);
    net_backward(params, batch, tr, grads);

    auto pt = collect_tensors(params);
    auto gt = collect_tensors(grads);
    long n_params = 0;
    for (auto& t : pt) n_params += t.size;
    max_params = std::max(max_params, n_params);
    const double h = 1e-4;
    for (std::size_t k = 0; k < pt.size(); ++k) {
      for (Eigen::Index i = 0; i < pt[k].size; ++i) {
        const double orig = pt[k].data[i];
        pt[k].data[i] = orig + h;
        ForwardTrace t1;
        const double lp = net_forward(params, batch, t1).mean();
        pt[k].data[i] = orig - h;
        ForwardTrace t2;
        const double lm = net_forward(params, batch, t2).mean();
        pt[k].data[i] = orig;
        const double fd = (lp - lm) / (2.0 * h);
        worst = std::max(worst, std::abs(gt[k].data[i] - fd) / std::max(std::abs(fd), 1e-3));
      }
    }
  }
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  Outcome o;
  o.pass = worst < 1e-4 && max_params <= 500 && secs < 30.0;
  o.detail = "max rel err " + fmt(worst) + ", max params " + std::to_string(max_params);
  return o;
}

// ---------------------------------------------------------------------------
// 2. NLL closed forms

Outcome criterion_nll() {
  const int tf = 7;
  GaussianTraj traj;
  traj.mu = Eigen::MatrixXd::Zero(tf, 2);
  traj.u11 = Eigen::VectorXd::Ones(tf);
  traj.u12 = Eigen::VectorXd::Zero(tf);
  traj.u22 = Eigen::VectorXd::Ones(tf);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Zero(tf, 2);

  const double base = nll_loss(traj, y);
  const double err_base = std::abs(base - kLogTwoPi);

  double err_scale = 0.0;
  for (double c : {0.3, 2.0, 9.5}) {
    GaussianTraj scaled = traj;
    scaled.u11 *= c;
    scaled.u22 *= c;
    err_scale =
        std::max(err_scale, std::abs((nll_loss(scaled, y) - base) - 2.0 * std::log(c)));
  }
  Outcome o;
  o.pass = err_base < 1e-9 && err_scale < 1e-9;
  o.detail = "log2pi err " + fmt(err_base) + ", logdet err " + fmt(err_scale);
  return o;
}

// ---------------------------------------------------------------------------
// 3. Sampling law

Outcome criterion_sampling() {
  Rng urng(31415);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    GaussianTraj traj;
    traj.mu = Eigen::MatrixXd::Zero(1, 2);
    traj.u11 = Eigen::VectorXd::Constant(1, urng.uniform(0.1, 2.0));
    traj.u12 = Eigen::VectorXd::Constant(1, urng.uniform(-1.0, 1.0));
    traj.u22 = Eigen::VectorXd::Constant(1, urng.uniform(0.1, 2.0));
    Eigen::Matrix2d u;
    u << traj.u11(0), traj.u12(0), 0.0, traj.u22(0);
    const Eigen::Matrix2d sigma = u.transpose() * u;

    Rng rng(derive_seed(271828, rep));
    const int n = 100000;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> draws(n);
    for (int i = 0; i < n; ++i) {
      draws[i] = sample_delta(traj, 0, rng);
      mean += draws[i];
    }
    mean /= double(n);
    Eigen::Matrix2d emp = Eigen::Matrix2d::Zero();
    for (const auto& d : draws) emp += (d - mean) * (d - mean).transpose();
    emp /= double(n);
    worst = std::max(worst, (emp - sigma).norm() / sigma.norm());
  }
  Outcome o;
  o.pass = worst < 0.05;
  o.detail = "worst rel Frobenius " + fmt(worst) + " over 10 random U";
  return o;
}

// ---------------------------------------------------------------------------
// 4. Metric oracles

Outcome criterion_metric_oracles() {
  Rng rng(2718);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Trajectory> pred, gt;
    const int n = 1 + int(rng.below(8));
    const int steps = 2 + int(rng.below(40));
    for (int i = 0; i < n; ++i) {
      pred.push_back(Trajectory::NullaryExpr(steps, 2, [&] { return rng.normal(); }));
      gt.push_back(Trajectory::NullaryExpr(steps, 2, [&] { return rng.normal(); }));
    }
    // independent double-loop oracle
    double total = 0.0, last = 0.0;
    long cnt = 0;
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < steps; ++t) {
        const double dx = pred[i](t, 0) - gt[i](t, 0);
        const double dy = pred[i](t, 1) - gt[i](t, 1);
        const double d = std::sqrt(dx * dx + dy * dy);
        total += d;
        ++cnt;
        if (t == steps - 1) last += d;
      }
    }
    worst = std::max(worst, std::abs(ade(pred, gt) - total / cnt * 100.0));
    worst = std::max(worst, std::abs(fde(pred, gt) - last / n * 100.0));
  }

  bool windows_ok = true;
  for (int L = 80; L <= 400; ++L) {
    Trial t;
    t.shuttles.resize(2);
    for (int i = 0; i < L; ++i) {
      t.t.push_back(i * kFrameDt);
      t.ped.push_back({0.05 * i, 0.0});
      t.head_yaw_deg.push_back(0.0);
      t.eye_yaw_deg.push_back(0.0);
      t.eye_valid.push_back(1);
      t.fixation.push_back(SemanticLabel::Goal);
      for (int s = 0; s < 2; ++s) {
        t.shuttles[s].positions.push_back({0.0, 0.0});
        t.shuttles[s].present.push_back(0);
      }
    }
    t.ctx = {0, 0, 90, Traffic::Single};
    std::size_t brute = 0;
    for (int s = 0; s + kPastSteps + kFutureSteps <= L; s += kWindowStride) ++brute;
    const auto windows = make_windows(preprocess_trial(t), GazeMode::None);
    if (windows.size() != brute) windows_ok = false;
    if (windows.size() != std::size_t((L - 80) / 4 + 1)) windows_ok = false;
  }

  Outcome o;
  o.pass = worst < 1e-9 && windows_ok;
  o.detail = "ade/fde err " + fmt(worst) + "; window formula " + (windows_ok ? "ok" : "BAD");
  return o;
}

// ---------------------------------------------------------------------------
// 5. Preprocessing fidelity

Outcome criterion_preproc() {
  bool ok = true;
  std::string why;

  {  // I-VT at 80 vs 120 deg/s
    std::vector<double> slow(40), fast(40);
    for (int i = 0; i < 40; ++i) {
      slow[i] = 4.0 * i;
      fast[i] = 6.0 * i;
    }
    const auto s1 = detect_saccades(TimeSeries(slow));
    const auto s2 = detect_saccades(TimeSeries(fast));
    if (std::count(s1.begin(), s1.end(), 1) != 0) {
      ok = false;
      why += " ivt80";
    }
    if (std::count(s2.begin(), s2.end(), 1) != 39 || s2[0] != 0) {
      ok = false;
      why += " ivt120";
    }
  }

  {  // semantic cleaning examples
    using L = SemanticLabel;
    const auto none5 = std::vector<std::uint8_t>(5, 0);
    auto out = clean_semantic_targets(
        {{L::Leader, L::Leader, L::Goal, L::Leader, L::Leader}, kFrameDt}, none5);
    for (auto l : out.labels) {
      if (l != L::Leader) {
        ok = false;
        why += " isolated";
        break;
      }
    }
    std::vector<L> gap(14, L::Leader);
    for (int i = 4; i < 10; ++i) gap[i] = L::Noise;
    out = clean_semantic_targets({gap, kFrameDt}, std::vector<std::uint8_t>(14, 0));
    for (auto l : out.labels) {
      if (l != L::Leader) {
        ok = false;
        why += " gapfill";
        break;
      }
    }
    out = clean_semantic_targets(
        {{L::Leader, L::Leader, L::Goal, L::Environment, L::Environment}, kFrameDt}, none5);
    if (out.labels[2] != L::Noise) {
      ok = false;
      why += " shortrun";
    }
  }

  {  // interpolation + trim example
    TimeSeries s({0.0, 9.0, 9.0, 9.0, 4.0}, {1, 0, 0, 0, 1});
    const TimeSeries out = interpolate_gaps(s);
    const std::vector<double> want = {0.0, 1.0, 2.0, 3.0, 4.0};
    for (int i = 0; i < 5; ++i) {
      if (std::abs(out.values[i] - want[i]) > 1e-12) {
        ok = false;
        why += " interp";
        break;
      }
    }
    if (out.valid_mask != std::vector<std::uint8_t>{0, 1, 1, 1, 0}) {
      ok = false;
      why += " trim";
    }
  }

  {  // smoothing preserves constants
    const TimeSeries out = gaussian_smooth(TimeSeries(std::vector<double>(60, 2.5)), 4.0);
    for (double v : out.values) {
      if (std::abs(v - 2.5) > 1e-6) {
        ok = false;
        why += " smooth";
        break;
      }
    }
  }

  Outcome o;
  o.pass = ok;
  o.detail = ok ? "all pinned examples exact" : ("failing:" + why);
  return o;
}

// ---------------------------------------------------------------------------
// 6. End-to-end learnability (artifacts shared with criteria 8 and 10)

struct Trained {
  Checkpoint ckpt;
  std::vector<Sample> test_raw;
  std::vector<Sample> train_raw;
};

DatasetSummary g_dataset50;  // criterion 6/10 dataset
Trained g_ctx_model;         // small context model reused by criterion 8

Trained train_on(const DatasetSummary& ds, GazeMode mode, bool ctx, const TrainConfig& tcfg,
                 std::uint64_t split_seed) {
  const auto split = split_by_participant(ds.trials, {6, 1, 3}, split_seed);
  Trained out;
  out.train_raw = build_samples(ds.trials, split[0], mode);
  auto val_raw = build_samples(ds.trials, split[1], mode);
  out.test_raw = build_samples(ds.trials, split[2], mode);

  const Normalizer norm = fit_normalizer(out.train_raw, mode);
  std::vector<Sample> train_n, val_n;
  train_n.reserve(out.train_raw.size());
  for (const auto& s : out.train_raw) train_n.push_back(apply_normalizer(norm, s));
  for (const auto& s : val_raw) val_n.push_back(apply_normalizer(norm, s));

  const ModelConfig mcfg = make_model_config(tcfg, mode, ctx);
  TrainResult r = train(mcfg, tcfg, train_n, val_n);
  out.ckpt = Checkpoint{std::move(r.params), norm, split_seed};
  return out;
}

bool straight_walk(const Sample& s) {
  for (Eigen::Index t = 0; t < s.motion.rows(); ++t) {
    if (std::hypot(s.motion(t, 2), s.motion(t, 3)) < 0.8) return false;
  }
  for (Eigen::Index t = 0; t < s.future.rows(); ++t) {
    if (std::hypot(s.future(t, 0), s.future(t, 1)) < 0.8 * kFrameDt) return false;
  }
  const double first = std::atan2(s.future(0, 1), s.future(0, 0));
  const Eigen::Index last_row = s.future.rows() - 1;
  const double last = std::atan2(s.future(last_row, 1), s.future(last_row, 0));
  return std::abs(wrap_angle(rad2deg(last - first)).deg()) < 15.0;
}

Outcome criterion_learnability() {
  const auto t0 = clk::now();
  g_dataset50 = generate_dataset(50, 2026);

  TrainConfig tcfg;  // defaults: 100 epochs, milestones {15,35,60}, Adam, batch 64
  tcfg.seed = 7;
  const Trained model = train_on(g_dataset50, GazeMode::None, false, tcfg, 7);

  std::vector<Trajectory> pred_mean, pred_const, gt;
  std::vector<Trajectory> pred_mean_st, pred_cv_st, gt_st;
  for (const auto& raw : model.test_raw) {
    const Sample n = apply_normalizer(model.ckpt.normalizer, raw);
    const Trajectory truth = sample_future_positions(raw);
    const Trajectory mean_traj = predict_mean(model.ckpt.params, model.ckpt.normalizer, n);

    Trajectory const_pos(raw.future.rows(), 2);
    for (Eigen::Index t = 0; t < const_pos.rows(); ++t) {
      const_pos(t, 0) = raw.anchor.x;
      const_pos(t, 1) = raw.anchor.y;
    }
    pred_mean.push_back(mean_traj);
    pred_const.push_back(const_pos);
    gt.push_back(truth);

    if (straight_walk(raw)) {
      Trajectory cv(raw.future.rows(), 2);
      const double dx = raw.motion(raw.motion.rows() - 1, 0);
      const double dy = raw.motion(raw.motion.rows() - 1, 1);
      for (Eigen::Index t = 0; t < cv.rows(); ++t) {
        cv(t, 0) = raw.anchor.x + dx * double(t + 1);
        cv(t, 1) = raw.anchor.y + dy * double(t + 1);
      }
      pred_mean_st.push_back(mean_traj);
      pred_cv_st.push_back(cv);
      gt_st.push_back(truth);
    }
  }

  const double ade_model = ade(pred_mean, gt);
  const double ade_const = ade(pred_const, gt);
  const double ade_model_st = ade(pred_mean_st, gt_st);
  const double ade_cv_st = ade(pred_cv_st, gt_st);
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();

  Outcome o;
  o.pass = ade_model < ade_const && ade_model_st <= 1.25 * ade_cv_st && secs < 900.0 &&
           !pred_mean_st.empty();
  o.detail = "ADE " + fmt(ade_model) + " vs const-pos " + fmt(ade_const) + " cm; straight " +
             fmt(ade_model_st) + " vs 1.25*CV " + fmt(1.25 * ade_cv_st) + " cm (" +
             std::to_string(pred_mean_st.size()) + " windows)";
  return o;
}

// ---------------------------------------------------------------------------
// 7. Directional reproduction over 3 seeds

Outcome criterion_directions() {
  int ctx_wins = 0, mink_wins = 0;
  std::string detail;
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const DatasetSummary ds = generate_dataset(16, seed);
    TrainConfig tcfg;
    tcfg.epochs = 40;
    tcfg.milestones = {15, 30};
    tcfg.seed = seed;

    const Trained base = train_on(ds, GazeMode::None, false, tcfg, seed);
    const Trained with_ctx = train_on(ds, GazeMode::None, true, tcfg, seed);

    const HorizonReport r_base =
        horizon_report(base.ckpt.params, base.ckpt.normalizer, base.test_raw, EvalMode::mean());
    const HorizonReport r_ctx = horizon_report(with_ctx.ckpt.params, with_ctx.ckpt.normalizer,
                                               with_ctx.test_raw, EvalMode::mean());
    const HorizonReport r_mink =
        min_k_eval(base.ckpt.params, base.ckpt.normalizer, base.test_raw, 20, seed);

    if (r_ctx.fde_cm < r_base.fde_cm) ++ctx_wins;
    if (r_mink.fde_cm < r_base.fde_cm) ++mink_wins;
    detail += " [s" + std::to_string(seed) + " fde " + fmt(r_base.fde_cm) + "->" +
              fmt(r_ctx.fde_cm) + " min20 " + fmt(r_mink.fde_cm) + "]";

    g_ctx_model = with_ctx;  // reused by criterion 8
  }
  Outcome o;
  o.pass = ctx_wins >= 2 && mink_wins >= 2;
  o.detail = "ctx wins " + std::to_string(ctx_wins) + "/3, min-20 wins " +
             std::to_string(mink_wins) + "/3;" + detail;
  return o;
}

// ---------------------------------------------------------------------------
// 8. Attribution correctness

Outcome criterion_attribution() {
  bool linear_ok = true;
  {
    Rng rng(7);
    const int dim = 12, n_bg = 25;
    const Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(dim, [&] { return rng.normal(); });
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(dim, [&] { return rng.normal(); });
    const Eigen::MatrixXd bg =
        Eigen::MatrixXd::NullaryExpr(n_bg, dim, [&] { return rng.normal(); });
    auto f = [&w](const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
      if (grad) *grad = w;
      return w.dot(v);
    };
    const Eigen::VectorXd attr = expected_gradients(f, x, bg, 1, 5);
    const Eigen::VectorXd expected = w.cwiseProduct(x - bg.colwise().mean().transpose());
    if ((attr - expected).cwiseAbs().maxCoeff() > 1e-6) linear_ok = false;
    const double fx = w.dot(x);
    double fb = 0.0;
    for (int i = 0; i < n_bg; ++i) fb += w.dot(bg.row(i).transpose());
    fb /= n_bg;
    if (std::abs(attr.sum() - (fx - fb)) > 1e-6) linear_ok = false;
  }

  // Monte-Carlo completeness on the trained network from criterion 7
  const ModelParams& params = g_ctx_model.ckpt.params;
  const Normalizer& norm = g_ctx_model.ckpt.normalizer;
  const InputLayout lay = input_layout(params.config);
  const ScalarFn f = make_final_axis_fn(params, norm, 0);

  const int n_bg = 50, n_explained = 5;
  Eigen::MatrixXd bg(n_bg, lay.total());
  double f_bg_mean = 0.0;
  for (int i = 0; i < n_bg; ++i) {
    bg.row(i) =
        flatten_input(apply_normalizer(norm, g_ctx_model.train_raw[i * 7]), lay).transpose();
    f_bg_mean += f(bg.row(i).transpose(), nullptr);
  }
  f_bg_mean /= n_bg;

  std::vector<double> errs;
  for (int n_alpha : {1, 8, 64}) {
    double err = 0.0;
    for (int e = 0; e < n_explained; ++e) {
      const Eigen::VectorXd x =
          flatten_input(apply_normalizer(norm, g_ctx_model.test_raw[e * 11]), lay);
      const Eigen::VectorXd attr = expected_gradients(f, x, bg, n_alpha, 97);
      err += std::abs(attr.sum() - (f(x, nullptr) - f_bg_mean));
    }
    errs.push_back(err / n_explained);
  }

  Outcome o;
  o.pass = linear_ok && errs[0] > errs[1] && errs[1] > errs[2];
  o.detail = std::string("linear ") + (linear_ok ? "exact" : "BAD") + "; completeness err " +
             fmt(errs[0]) + " > " + fmt(errs[1]) + " > " + fmt(errs[2]);
  return o;
}

// ---------------------------------------------------------------------------
// 9. LHS stratification

Outcome criterion_lhs() {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto ctxs = lhs_sample(12, seed);
    int angle[3] = {0, 0, 0}, traffic[3] = {0, 0, 0}, yield[2] = {0, 0}, ehmi[2] = {0, 0};
    for (const auto& c : ctxs) {
      ++angle[c.angle_deg == 45 ? 0 : (c.angle_deg == 90 ? 1 : 2)];
      ++traffic[int(c.traffic)];
      ++yield[c.yielding];
      ++ehmi[c.ehmi];
    }
    for (int i = 0; i < 3; ++i) {
      if (angle[i] != 4 || traffic[i] != 4) {
        return {false, "failed at seed " + std::to_string(seed)};
      }
    }
    for (int i = 0; i < 2; ++i) {
      if (yield[i] != 6 || ehmi[i] != 6) {
        return {false, "failed at seed " + std::to_string(seed)};
      }
    }
  }
  return {true, "1000 seeded draws exactly stratified"};
}

// ---------------------------------------------------------------------------
// 10. Behavioral directions on the synthetic dataset

Outcome criterion_behavior() {
  const auto& ds = g_dataset50;
  const SpeedThresholds th = estimate_thresholds(ds.trials);
  double wait_yield = 0.0, wait_non = 0.0;
  int n_yield = 0, n_non = 0, min_init = 1 << 30;
  for (const auto& trial : ds.trials) {
    const TrialMetrics m = compute_trial_metrics(trial, th);
    min_init = std::min(min_init, m.initiation_count);
    if (trial.ctx.yielding) {
      wait_yield += m.waiting_time;
      ++n_yield;
    } else {
      wait_non += m.waiting_time;
      ++n_non;
    }
  }
  wait_yield /= n_yield;
  wait_non /= n_non;
  Outcome o;
  o.pass = wait_yield < wait_non && min_init >= 1;
  o.detail = "waiting yield " + fmt(wait_yield) + " s < non-yield " + fmt(wait_non) +
             " s; min initiations " + std::to_string(min_init);
  return o;
}

// ---------------------------------------------------------------------------
// 11. Bit-reproducibility of simulate -> train -> eval

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_determinism() {
  const std::string cli = GAZEX_CLI_PATH;
  const fs::path root = fs::temp_directory_path() / "gazex_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path work = root / "work";

  // identical command lines both times; run 1 is snapshotted before rerunning
  auto pipeline = [&] {
    const std::string base = work.string();
    const std::string quiet = " > /dev/null 2>&1";
    std::string cmd =
        cli + " simulate --participants 10 --seed 5 --out " + base + "/data" + quiet;
    if (std::system(cmd.c_str()) != 0) throw std::runtime_error("simulate failed");
    cmd = cli + " train --data " + base + "/data --out " + base +
          "/model --gaze eye-vislet --context on --epochs 3 --batch 64 --hidden-motion 16"
          " --hidden-dist 8 --hidden-gaze 8 --hidden-dense 16 --seed 9" + quiet;
    if (std::system(cmd.c_str()) != 0) throw std::runtime_error("train failed");
    cmd = cli + " eval --data " + base + "/data --checkpoint " + base +
          "/model/checkpoint.bin --mode both --k 5 --seed 3 --out " + base + "/eval" + quiet;
    if (std::system(cmd.c_str()) != 0) throw std::runtime_error("eval failed");
  };
  pipeline();
  fs::copy(work, root / "run1", fs::copy_options::recursive);
  fs::remove_all(work);
  pipeline();

  std::vector<std::string> mismatches;
  std::size_t n_files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "run1")) {
    if (!e.is_regular_file()) continue;
    ++n_files;
    const auto rel = fs::relative(e.path(), root / "run1");
    if (!fs::exists(work / rel) || slurp(e.path()) != slurp(work / rel)) {
      mismatches.push_back(rel.string());
    }
  }

  fs::remove_all(root);
  Outcome o;
  o.pass = mismatches.empty() && n_files > 100;
  o.detail = mismatches.empty()
                 ? "all " + std::to_string(n_files) + " artifacts byte-identical across two runs"
                 : ("differs: " + mismatches.front());
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  run(1, "gradient correctness", criterion_gradients);
  run(2, "NLL closed form", criterion_nll);
  run(3, "sampling law", criterion_sampling);
  run(4, "metric oracles", criterion_metric_oracles);
  run(5, "preprocessing fidelity", criterion_preproc);
  run(6, "end-to-end learnability", criterion_learnability);
  run(7, "directional reproduction", criterion_directions);
  run(8, "attribution correctness", criterion_attribution);
  run(9, "LHS stratification", criterion_lhs);
  run(10, "behavioral-metric directions", criterion_behavior);
  run(11, "pipeline determinism", criterion_determinism);

  if (g_failures == 0) {
    std::printf("all 11 criteria passed\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", g_failures);
  return 1;
}
