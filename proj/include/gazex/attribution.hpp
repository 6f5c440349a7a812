#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/csv.hpp"
#include "gazex/dataset.hpp"
#include "gazex/net.hpp"
#include "gazex/rng.hpp"

namespace gazex {

// Differentiable scalar function of a flat input vector. Returns f(x) and,
// when grad is non-null, fills df/dx.
using ScalarFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

// Expected gradients: attribution_i = E_{b, alpha} [(x_i - b_i) *
// df/dx_i(b + alpha (x - b))], alpha ~ U(0,1). Draws are stratified per
// background ((j + u)/n_alpha), which keeps the uniform marginal but makes
// the Monte-Carlo path integral converge like a quadrature in n_alpha.
inline Eigen::VectorXd expected_gradients(const ScalarFn& f, const Eigen::VectorXd& x,
                                          const Eigen::MatrixXd& backgrounds, int n_alpha,
                                          std::uint64_t seed) {
  if (backgrounds.rows() == 0) throw std::invalid_argument("expected_gradients: empty background");
  if (backgrounds.cols() != x.size()) {
    throw std::invalid_argument("expected_gradients: background width mismatch");
  }
  if (n_alpha < 1) throw std::invalid_argument("expected_gradients: n_alpha must be >= 1");

  Eigen::VectorXd total = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd grad(x.size());
  for (Eigen::Index bi = 0; bi < backgrounds.rows(); ++bi) {
    const Eigen::VectorXd b = backgrounds.row(bi).transpose();
    const Eigen::VectorXd diff = x - b;
    Rng rng(derive_seed(seed, 0xA77B, static_cast<std::uint64_t>(bi)));
    for (int j = 0; j < n_alpha; ++j) {
      const double alpha = (j + rng.uniform()) / double(n_alpha);
      const Eigen::VectorXd point = b + alpha * diff;
      f(point, &grad);
      total += diff.cwiseProduct(grad);
    }
  }
  return total / (double(backgrounds.rows()) * double(n_alpha));
}

// ---------------------------------------------------------------------------
// Flat input layout for the network: motion | dist | gaze | ctx, each block
// time-major. The context block is always present; for context-free models
// its gradient is zero.

struct InputLayout {
  int t_past = 0;
  int gaze_width = 0;

  int motion_size() const { return t_past * kMotionDim; }
  int dist_size() const { return t_past * kDistanceDim; }
  int gaze_size() const { return t_past * gaze_width; }
  int total() const { return motion_size() + dist_size() + gaze_size() + kContextDim; }
};

inline InputLayout input_layout(const ModelConfig& cfg) {
  return {cfg.t_past, cfg.gaze_in()};
}

inline Eigen::VectorXd flatten_input(const Sample& s, const InputLayout& lay) {
  Eigen::VectorXd x(lay.total());
  Eigen::Index k = 0;
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < kMotionDim; ++c) x(k++) = s.motion(t, c);
  }
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < kDistanceDim; ++c) x(k++) = s.dist(t, c);
  }
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < lay.gaze_width; ++c) x(k++) = s.gaze(t, c);
  }
  for (int c = 0; c < kContextDim; ++c) x(k++) = s.ctx(c);
  return x;
}

inline Sample unflatten_input(const Eigen::VectorXd& x, const InputLayout& lay, int t_future) {
  Sample s;
  s.motion.resize(lay.t_past, kMotionDim);
  s.dist.resize(lay.t_past, kDistanceDim);
  s.gaze.resize(lay.t_past, lay.gaze_width);
  s.ctx.resize(kContextDim);
  s.future = Eigen::MatrixXd::Zero(t_future, 2);
  Eigen::Index k = 0;
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < kMotionDim; ++c) s.motion(t, c) = x(k++);
  }
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < kDistanceDim; ++c) s.dist(t, c) = x(k++);
  }
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < lay.gaze_width; ++c) s.gaze(t, c) = x(k++);
  }
  for (int c = 0; c < kContextDim; ++c) s.ctx(c) = x(k++);
  return s;
}

// Scalar functional explained per the interpretation setup: the predicted
// final-step displacement along one axis (mean prediction, denormalized).
// Gradients flow through every future step's mean.
inline ScalarFn make_final_axis_fn(const ModelParams& params, const Normalizer& norm, int axis) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("make_final_axis_fn: axis must be 0/1");
  const InputLayout lay = input_layout(params.config);
  const double dstd = norm.delta_std(axis);
  const double dmean = norm.delta_mean(axis);

  return [&params, lay, axis, dstd, dmean](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const ModelConfig& cfg = params.config;
    const Sample s = unflatten_input(x, lay, cfg.t_future);
    const BatchData batch = batch_of_one(s, cfg);
    ForwardTrace tr;
    net_forward(params, batch, tr);

    double value = cfg.t_future * dmean;
    const auto& mu = axis == 0 ? tr.head.mu_x : tr.head.mu_y;
    for (int t = 0; t < cfg.t_future; ++t) value += dstd * mu(0, t);

    if (grad) {
      Eigen::MatrixXd dout = Eigen::MatrixXd::Zero(1, cfg.out_width());
      for (int t = 0; t < cfg.t_future; ++t) dout(0, 5 * t + axis) = dstd;
      ModelParams scratch = make_zero_like(params);
      InputGrads ig;
      net_backward(params, batch, tr, scratch, &ig, &dout);

      grad->resize(lay.total());
      Eigen::Index k = 0;
      for (int t = 0; t < lay.t_past; ++t) {
        for (int c = 0; c < kMotionDim; ++c) (*grad)(k++) = ig.motion[t](0, c);
      }
      for (int t = 0; t < lay.t_past; ++t) {
        for (int c = 0; c < kDistanceDim; ++c) (*grad)(k++) = ig.dist[t](0, c);
      }
      for (int t = 0; t < lay.t_past; ++t) {
        for (int c = 0; c < lay.gaze_width; ++c) (*grad)(k++) = ig.gaze[t](0, c);
      }
      for (int c = 0; c < kContextDim; ++c) (*grad)(k++) = ig.ctx(0, c);
    }
    return value;
  };
}

// Channel names matching aggregate_channels().
inline std::vector<std::string> attribution_channel_names(const ModelConfig& cfg) {
  std::vector<std::string> names = {"motion_dx", "motion_dy", "motion_vx", "motion_vy",
                                    "dist_d1",   "dist_p1",   "dist_d2",   "dist_p2"};
  for (int c = 0; c < cfg.gaze_in(); ++c) {
    names.push_back("gaze_" + to_string(cfg.gaze_mode) + "_" + std::to_string(c));
  }
  for (const auto& n : context_channel_names()) names.push_back("ctx_" + std::string(n));
  return names;
}

// Sums per-(step, channel) attributions over time, keeping context entries.
inline Eigen::VectorXd aggregate_channels(const Eigen::VectorXd& flat, const InputLayout& lay) {
  const int n_channels = kMotionDim + kDistanceDim + lay.gaze_width + kContextDim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_channels);
  Eigen::Index k = 0;
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < kMotionDim; ++c) out(c) += flat(k++);
  }
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < kDistanceDim; ++c) out(kMotionDim + c) += flat(k++);
  }
  for (int t = 0; t < lay.t_past; ++t) {
    for (int c = 0; c < lay.gaze_width; ++c) out(kMotionDim + kDistanceDim + c) += flat(k++);
  }
  for (int c = 0; c < kContextDim; ++c) {
    out(kMotionDim + kDistanceDim + lay.gaze_width + c) = flat(k++);
  }
  return out;
}

struct AttributionResult {
  std::vector<std::string> channel_names;
  std::vector<std::string> sample_ids;
  Eigen::MatrixXd values;  // n_explained x n_channels
  bool used_all_samples = false;
};

struct ContextSummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double mean_abs = 0.0;
};

// Explains up to n_explained samples against n_background backgrounds drawn
// from the pools (seeded). Axis 0 = x, 1 = y of the final predicted step.
inline AttributionResult explain_samples(const ModelParams& params, const Normalizer& norm,
                                         const std::vector<Sample>& background_pool,
                                         const std::vector<Sample>& explained_pool, int axis,
                                         int n_background = 100, int n_explained = 50,
                                         int n_alpha = 1, std::uint64_t seed = 0) {
  if (background_pool.empty() || explained_pool.empty()) {
    throw std::invalid_argument("explain_samples: empty sample pool");
  }
  const InputLayout lay = input_layout(params.config);
  const ScalarFn f = make_final_axis_fn(params, norm, axis);

  std::vector<std::size_t> bg_idx(background_pool.size()), ex_idx(explained_pool.size());
  for (std::size_t i = 0; i < bg_idx.size(); ++i) bg_idx[i] = i;
  for (std::size_t i = 0; i < ex_idx.size(); ++i) ex_idx[i] = i;
  Rng bg_rng(derive_seed(seed, 0xB6, 1));
  Rng ex_rng(derive_seed(seed, 0xB6, 2));
  bg_rng.shuffle(bg_idx);
  ex_rng.shuffle(ex_idx);

  AttributionResult result;
  if (static_cast<std::size_t>(n_background) < bg_idx.size()) bg_idx.resize(n_background);
  if (static_cast<std::size_t>(n_explained) < ex_idx.size()) {
    ex_idx.resize(n_explained);
  } else {
    result.used_all_samples = true;
  }

  Eigen::MatrixXd backgrounds(bg_idx.size(), lay.total());
  for (std::size_t i = 0; i < bg_idx.size(); ++i) {
    backgrounds.row(i) =
        flatten_input(apply_normalizer(norm, background_pool[bg_idx[i]]), lay).transpose();
  }

  result.channel_names = attribution_channel_names(params.config);
  result.values.resize(ex_idx.size(), result.channel_names.size());
  for (std::size_t i = 0; i < ex_idx.size(); ++i) {
    const Sample& raw = explained_pool[ex_idx[i]];
    const Eigen::VectorXd x = flatten_input(apply_normalizer(norm, raw), lay);
    const Eigen::VectorXd flat =
        expected_gradients(f, x, backgrounds, n_alpha, derive_seed(seed, 0xE6, i));
    result.values.row(i) = aggregate_channels(flat, lay).transpose();
    result.sample_ids.push_back(raw.trial_id + ":" + std::to_string(raw.window_start));
  }
  return result;
}

// Distribution summary of the eight context channels over the explained set.
inline std::vector<ContextSummaryRow> summarize_context(const AttributionResult& r) {
  std::vector<ContextSummaryRow> rows;
  const Eigen::Index n_channels = r.values.cols();
  const Eigen::Index first_ctx = n_channels - kContextDim;
  for (Eigen::Index c = first_ctx; c < n_channels; ++c) {
    ContextSummaryRow row;
    row.name = r.channel_names[c];
    const Eigen::VectorXd col = r.values.col(c);
    row.mean = col.mean();
    row.sd = std::sqrt((col.array() - row.mean).square().mean());
    row.mean_abs = col.array().abs().mean();
    rows.push_back(row);
  }
  return rows;
}

inline void write_attribution_csv(const std::string& path, const AttributionResult& r) {
  CsvWriter w(path);
  std::vector<std::string> header{"sample"};
  header.insert(header.end(), r.channel_names.begin(), r.channel_names.end());
  w.row(header);
  for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
    std::vector<std::string> row{r.sample_ids[i]};
    for (Eigen::Index c = 0; c < r.values.cols(); ++c) {
      row.push_back(format_double(r.values(i, c)));
    }
    w.row(row);
  }
}

inline void write_context_summary_csv(const std::string& path,
                                      const std::vector<ContextSummaryRow>& rows) {
  CsvWriter w(path);
  w.row({"channel", "mean", "sd", "mean_abs"});
  for (const auto& r : rows) {
    w.row({r.name, format_double(r.mean), format_double(r.sd), format_double(r.mean_abs)});
  }
}

}  // namespace gazex
