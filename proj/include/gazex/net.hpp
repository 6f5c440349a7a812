#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/dataset.hpp"
#include "gazex/features.hpp"
#include "gazex/rng.hpp"

namespace gazex {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kScaleFloor = 1e-4;  // added to softplus'd diagonal entries

struct ModelConfig {
  GazeMode gaze_mode = GazeMode::None;
  bool include_context = false;
  int t_past = kPastSteps;
  int t_future = kFutureSteps;
  int hidden_motion = 64;
  int hidden_dist = 32;
  int hidden_gaze = 32;
  int hidden_dense = 128;

  bool has_gaze() const { return gaze_mode != GazeMode::None; }
  int motion_in() const { return kMotionDim; }
  int dist_in() const { return kDistanceDim; }
  int gaze_in() const { return gaze_input_dim(gaze_mode); }
  int fused_width() const {
    return hidden_motion + hidden_dist + (has_gaze() ? hidden_gaze : 0) +
           (include_context ? kContextDim : 0);
  }
  int out_width() const { return 5 * t_future; }

  void validate() const {
    if (t_past <= 0 || t_future <= 0 || hidden_motion <= 0 || hidden_dist <= 0 ||
        hidden_dense <= 0 || (has_gaze() && hidden_gaze <= 0)) {
      throw std::invalid_argument("ModelConfig: sizes must be positive");
    }
  }
};

// One LSTM layer, gate order [input, forget, cell, output].
struct LstmWeights {
  Eigen::MatrixXd wx;     // in x 4H
  Eigen::MatrixXd wh;     // H x 4H
  Eigen::RowVectorXd b;   // 4H

  int hidden() const { return static_cast<int>(wh.rows()); }
};

struct ModelParams {
  ModelConfig config;
  LstmWeights motion_enc, dist_enc, gaze_enc;
  Eigen::MatrixXd w1, w2, wo;
  Eigen::RowVectorXd b1, b2, bo;
};

struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index size;
};

inline void collect_lstm(std::vector<TensorRef>& out, LstmWeights& w, const std::string& prefix) {
  out.push_back({prefix + ".wx", w.wx.data(), w.wx.size()});
  out.push_back({prefix + ".wh", w.wh.data(), w.wh.size()});
  out.push_back({prefix + ".b", w.b.data(), w.b.size()});
}

inline std::vector<TensorRef> collect_tensors(ModelParams& p) {
  std::vector<TensorRef> out;
  collect_lstm(out, p.motion_enc, "motion");
  collect_lstm(out, p.dist_enc, "dist");
  if (p.config.has_gaze()) collect_lstm(out, p.gaze_enc, "gaze");
  out.push_back({"w1", p.w1.data(), p.w1.size()});
  out.push_back({"b1", p.b1.data(), p.b1.size()});
  out.push_back({"w2", p.w2.data(), p.w2.size()});
  out.push_back({"b2", p.b2.data(), p.b2.size()});
  out.push_back({"wo", p.wo.data(), p.wo.size()});
  out.push_back({"bo", p.bo.data(), p.bo.size()});
  return out;
}

namespace detail {

inline void init_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

inline void init_uniform(Eigen::RowVectorXd& v, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-bound, bound);
}

inline LstmWeights init_lstm(int in, int hidden, Rng& rng) {
  LstmWeights w;
  w.wx.resize(in, 4 * hidden);
  w.wh.resize(hidden, 4 * hidden);
  w.b.resize(4 * hidden);
  const double k = 1.0 / std::sqrt(double(hidden));
  init_uniform(w.wx, k, rng);
  init_uniform(w.wh, k, rng);
  init_uniform(w.b, k, rng);
  return w;
}

// Vectorized activations; Eigen's pexp keeps these fast in double.
inline void sigmoid_inplace(Eigen::MatrixXd& m) {
  m = (1.0 / (1.0 + (-m.array()).exp())).matrix();
}

inline void tanh_inplace(Eigen::MatrixXd& m) {
  m = (2.0 / (1.0 + (-2.0 * m.array()).exp()) - 1.0).matrix();
}

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  Rng rng(derive_seed(seed, 0x1417));
  p.motion_enc = detail::init_lstm(cfg.motion_in(), cfg.hidden_motion, rng);
  p.dist_enc = detail::init_lstm(cfg.dist_in(), cfg.hidden_dist, rng);
  if (cfg.has_gaze()) p.gaze_enc = detail::init_lstm(cfg.gaze_in(), cfg.hidden_gaze, rng);

  const int fw = cfg.fused_width();
  p.w1.resize(fw, cfg.hidden_dense);
  p.b1.resize(cfg.hidden_dense);
  p.w2.resize(cfg.hidden_dense, cfg.hidden_dense);
  p.b2.resize(cfg.hidden_dense);
  p.wo.resize(cfg.hidden_dense, cfg.out_width());
  p.bo.resize(cfg.out_width());
  detail::init_uniform(p.w1, 1.0 / std::sqrt(double(fw)), rng);
  detail::init_uniform(p.b1, 1.0 / std::sqrt(double(fw)), rng);
  detail::init_uniform(p.w2, 1.0 / std::sqrt(double(cfg.hidden_dense)), rng);
  detail::init_uniform(p.b2, 1.0 / std::sqrt(double(cfg.hidden_dense)), rng);
  detail::init_uniform(p.wo, 1.0 / std::sqrt(double(cfg.hidden_dense)), rng);
  detail::init_uniform(p.bo, 1.0 / std::sqrt(double(cfg.hidden_dense)), rng);
  return p;
}

inline ModelParams make_zero_like(const ModelParams& p) {
  ModelParams g = p;
  auto tensors = collect_tensors(g);
  for (auto& t : tensors) {
    for (Eigen::Index i = 0; i < t.size; ++i) t.data[i] = 0.0;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batched sequence containers

struct SeqBatch {
  std::vector<Eigen::MatrixXd> x;  // t_past entries, each B x in
};

struct BatchData {
  SeqBatch motion, dist, gaze;
  Eigen::MatrixXd ctx;  // B x 8
  Eigen::MatrixXd y1, y2;  // B x t_future target deltas (normalized)
  Eigen::Index rows = 0;
};

// Gathers normalized samples [first, last) into batch-major matrices.
inline BatchData assemble_batch(const std::vector<Sample>& samples,
                                const std::vector<std::size_t>& order, std::size_t first,
                                std::size_t last, const ModelConfig& cfg) {
  const auto b = static_cast<Eigen::Index>(last - first);
  BatchData out;
  out.rows = b;
  out.motion.x.assign(cfg.t_past, Eigen::MatrixXd(b, cfg.motion_in()));
  out.dist.x.assign(cfg.t_past, Eigen::MatrixXd(b, cfg.dist_in()));
  if (cfg.has_gaze()) out.gaze.x.assign(cfg.t_past, Eigen::MatrixXd(b, cfg.gaze_in()));
  out.ctx.resize(b, kContextDim);
  out.y1.resize(b, cfg.t_future);
  out.y2.resize(b, cfg.t_future);

  for (Eigen::Index r = 0; r < b; ++r) {
    const Sample& s = samples[order[first + r]];
    if (s.motion.rows() != cfg.t_past || s.future.rows() != cfg.t_future ||
        s.gaze.cols() != (cfg.has_gaze() ? cfg.gaze_in() : 0)) {
      throw std::invalid_argument("assemble_batch: sample shape mismatch");
    }
    for (int t = 0; t < cfg.t_past; ++t) {
      out.motion.x[t].row(r) = s.motion.row(t);
      out.dist.x[t].row(r) = s.dist.row(t);
      if (cfg.has_gaze()) out.gaze.x[t].row(r) = s.gaze.row(t);
    }
    out.ctx.row(r) = s.ctx.transpose();
    out.y1.row(r) = s.future.col(0).transpose();
    out.y2.row(r) = s.future.col(1).transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward

struct LstmTrace {
  std::vector<Eigen::MatrixXd> i, f, g, o, c, tc, h;  // per step, B x H
};

// Standard LSTM recurrence with zero initial state; returns the last hidden
// state and fills the trace when requested.
inline Eigen::MatrixXd lstm_forward_batch(const LstmWeights& w,
                                          const std::vector<Eigen::MatrixXd>& xs,
                                          LstmTrace* trace) {
  const int steps = static_cast<int>(xs.size());
  const Eigen::Index b = xs.empty() ? 0 : xs[0].rows();
  const int hidden = w.hidden();
  if (steps == 0) throw std::invalid_argument("lstm_forward: empty sequence");
  if (xs[0].cols() != w.wx.rows()) {
    throw std::invalid_argument("lstm_forward: input width does not match weights");
  }
  if (trace) {
    trace->i.resize(steps);
    trace->f.resize(steps);
    trace->g.resize(steps);
    trace->o.resize(steps);
    trace->c.resize(steps);
    trace->tc.resize(steps);
    trace->h.resize(steps);
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(b, hidden);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(b, hidden);
  Eigen::MatrixXd gates(b, 4 * hidden);
  Eigen::MatrixXd si, sf, sg, so, sc, stc;  // scratch when no trace is kept
  for (int t = 0; t < steps; ++t) {
    gates.noalias() = xs[t] * w.wx;
    gates.noalias() += h * w.wh;
    gates.rowwise() += w.b;
    Eigen::MatrixXd& gi = trace ? trace->i[t] : si;
    Eigen::MatrixXd& gf = trace ? trace->f[t] : sf;
    Eigen::MatrixXd& gg = trace ? trace->g[t] : sg;
    Eigen::MatrixXd& go = trace ? trace->o[t] : so;
    Eigen::MatrixXd& tc = trace ? trace->tc[t] : stc;
    gi = gates.middleCols(0, hidden);
    gf = gates.middleCols(hidden, hidden);
    gg = gates.middleCols(2 * hidden, hidden);
    go = gates.middleCols(3 * hidden, hidden);
    detail::sigmoid_inplace(gi);
    detail::sigmoid_inplace(gf);
    detail::tanh_inplace(gg);
    detail::sigmoid_inplace(go);
    c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
    tc = c;
    detail::tanh_inplace(tc);
    h = go.cwiseProduct(tc);
    if (trace) {
      trace->c[t] = c;
      trace->h[t] = h;
    }
  }
  return h;
}

// Single-sequence convenience wrapper; returns all hidden states.
inline std::vector<Eigen::VectorXd> lstm_forward(const std::vector<Eigen::VectorXd>& seq,
                                                 const LstmWeights& w) {
  std::vector<Eigen::MatrixXd> xs(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) xs[t] = seq[t].transpose();
  LstmTrace trace;
  lstm_forward_batch(w, xs, &trace);
  std::vector<Eigen::VectorXd> out(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) out[t] = trace.h[t].row(0).transpose();
  return out;
}

// Per-step Gaussian over the delta movement: Sigma_t = U_t^T U_t with the
// diagonal of U_t kept positive by softplus + floor.
struct GaussBatch {
  Eigen::MatrixXd mu_x, mu_y, u11, u12, u22;  // B x t_future
  Eigen::MatrixXd sig_a, sig_c;               // softplus derivatives, for backward
};

struct ForwardTrace {
  LstmTrace motion, dist, gaze;
  Eigen::MatrixXd fused, z1, z2, out;
  GaussBatch head;
};

inline void gaussian_head(const Eigen::MatrixXd& out, int t_future, GaussBatch& head) {
  const Eigen::Index b = out.rows();
  head.mu_x.resize(b, t_future);
  head.mu_y.resize(b, t_future);
  head.u11.resize(b, t_future);
  head.u12.resize(b, t_future);
  head.u22.resize(b, t_future);
  head.sig_a.resize(b, t_future);
  head.sig_c.resize(b, t_future);
  for (int t = 0; t < t_future; ++t) {
    for (Eigen::Index r = 0; r < b; ++r) {
      const double a = out(r, 5 * t + 2);
      const double cc = out(r, 5 * t + 4);
      head.mu_x(r, t) = out(r, 5 * t + 0);
      head.mu_y(r, t) = out(r, 5 * t + 1);
      head.u11(r, t) = detail::softplus(a) + kScaleFloor;
      head.u12(r, t) = out(r, 5 * t + 3);
      head.u22(r, t) = detail::softplus(cc) + kScaleFloor;
      head.sig_a(r, t) = detail::sigmoid(a);
      head.sig_c(r, t) = detail::sigmoid(cc);
    }
  }
}

// Full forward pass; returns per-sample NLL (mean over future steps).
inline Eigen::VectorXd net_forward(const ModelParams& p, const BatchData& batch,
                                   ForwardTrace& tr) {
  const ModelConfig& cfg = p.config;
  const Eigen::Index b = batch.rows;

  const Eigen::MatrixXd hm = lstm_forward_batch(p.motion_enc, batch.motion.x, &tr.motion);
  const Eigen::MatrixXd hd = lstm_forward_batch(p.dist_enc, batch.dist.x, &tr.dist);
  Eigen::MatrixXd he;
  if (cfg.has_gaze()) he = lstm_forward_batch(p.gaze_enc, batch.gaze.x, &tr.gaze);

  tr.fused.resize(b, cfg.fused_width());
  Eigen::Index col = 0;
  tr.fused.middleCols(col, cfg.hidden_motion) = hm;
  col += cfg.hidden_motion;
  tr.fused.middleCols(col, cfg.hidden_dist) = hd;
  col += cfg.hidden_dist;
  if (cfg.has_gaze()) {
    tr.fused.middleCols(col, cfg.hidden_gaze) = he;
    col += cfg.hidden_gaze;
  }
  if (cfg.include_context) {
    tr.fused.middleCols(col, kContextDim) = batch.ctx;
    col += kContextDim;
  }

  tr.z1.noalias() = tr.fused * p.w1;
  tr.z1.rowwise() += p.b1;
  tr.z1 = tr.z1.cwiseMax(0.0);
  tr.z2.noalias() = tr.z1 * p.w2;
  tr.z2.rowwise() += p.b2;
  tr.z2 = tr.z2.cwiseMax(0.0);
  tr.out.noalias() = tr.z2 * p.wo;
  tr.out.rowwise() += p.bo;

  gaussian_head(tr.out, cfg.t_future, tr.head);

  Eigen::VectorXd nll = Eigen::VectorXd::Zero(b);
  for (int t = 0; t < cfg.t_future; ++t) {
    for (Eigen::Index r = 0; r < b; ++r) {
      const double e1 = batch.y1(r, t) - tr.head.mu_x(r, t);
      const double e2 = batch.y2(r, t) - tr.head.mu_y(r, t);
      const double z1 = e1 / tr.head.u11(r, t);
      const double z2 = (e2 - tr.head.u12(r, t) * z1) / tr.head.u22(r, t);
      nll(r) += kLogTwoPi + std::log(tr.head.u11(r, t) * tr.head.u22(r, t)) +
                0.5 * (z1 * z1 + z2 * z2);
    }
  }
  nll /= double(cfg.t_future);
  return nll;
}

// ---------------------------------------------------------------------------
// Backward

struct InputGrads {
  std::vector<Eigen::MatrixXd> motion, dist, gaze;  // per step, B x in
  Eigen::MatrixXd ctx;                              // B x 8
};

namespace detail {

// BPTT from the gradient of the last hidden state.
inline void lstm_backward(const LstmWeights& w, const std::vector<Eigen::MatrixXd>& xs,
                          const LstmTrace& tr, const Eigen::MatrixXd& dh_last, LstmWeights& grad,
                          std::vector<Eigen::MatrixXd>* dx) {
  const int steps = static_cast<int>(xs.size());
  const Eigen::Index b = dh_last.rows();
  const int hidden = w.hidden();
  if (dx) dx->assign(steps, Eigen::MatrixXd(b, xs[0].cols()));

  Eigen::MatrixXd dh = dh_last;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(b, hidden);
  Eigen::MatrixXd dgates(b, 4 * hidden);
  for (int t = steps - 1; t >= 0; --t) {
    dc.array() += dh.array() * tr.o[t].array() * (1.0 - tr.tc[t].array().square());
    const auto di = (dc.array() * tr.g[t].array()).eval();
    const auto dg = (dc.array() * tr.i[t].array()).eval();
    const auto do_ = (dh.array() * tr.tc[t].array()).eval();

    dgates.middleCols(0, hidden) =
        (di * tr.i[t].array() * (1.0 - tr.i[t].array())).matrix();
    if (t > 0) {
      dgates.middleCols(hidden, hidden) =
          (dc.array() * tr.c[t - 1].array() * tr.f[t].array() * (1.0 - tr.f[t].array())).matrix();
    } else {
      dgates.middleCols(hidden, hidden).setZero();  // c_{-1} = 0
    }
    dgates.middleCols(2 * hidden, hidden) = (dg * (1.0 - tr.g[t].array().square())).matrix();
    dgates.middleCols(3 * hidden, hidden) =
        (do_ * tr.o[t].array() * (1.0 - tr.o[t].array())).matrix();

    grad.wx.noalias() += xs[t].transpose() * dgates;
    grad.b += dgates.colwise().sum();
    if (t > 0) {
      grad.wh.noalias() += tr.h[t - 1].transpose() * dgates;
      dh.noalias() = dgates * w.wh.transpose();
    }
    if (dx) (*dx)[t].noalias() = dgates * w.wx.transpose();
    dc = dc.cwiseProduct(tr.f[t]);
  }
}

}  // namespace detail

// Reverse-mode gradients of the mean batch NLL with respect to every
// parameter and, when `input_grads` is non-null, the inputs. `dout_override`
// substitutes a custom gradient of a scalar output functional w.r.t. the raw
// network outputs (used by the attribution path). `loss_scale` is the weight
// of each sample's NLL in the objective; the default is the batch mean.
inline void net_backward(const ModelParams& p, const BatchData& batch, const ForwardTrace& tr,
                         ModelParams& grads, InputGrads* input_grads = nullptr,
                         const Eigen::MatrixXd* dout_override = nullptr,
                         double loss_scale = -1.0) {
  const ModelConfig& cfg = p.config;
  const Eigen::Index b = batch.rows;

  Eigen::MatrixXd dout(b, cfg.out_width());
  if (dout_override) {
    dout = *dout_override;
  } else {
    const double scale =
        (loss_scale > 0.0 ? loss_scale : 1.0 / double(b)) / double(cfg.t_future);
    for (int t = 0; t < cfg.t_future; ++t) {
      for (Eigen::Index r = 0; r < b; ++r) {
        const double u11 = tr.head.u11(r, t);
        const double u12 = tr.head.u12(r, t);
        const double u22 = tr.head.u22(r, t);
        const double e1 = batch.y1(r, t) - tr.head.mu_x(r, t);
        const double e2 = batch.y2(r, t) - tr.head.mu_y(r, t);
        const double z1 = e1 / u11;
        const double z2 = (e2 - u12 * z1) / u22;

        const double dl_de1 = z1 / u11 - z2 * u12 / (u11 * u22);
        const double dl_de2 = z2 / u22;
        const double dl_du11 = (1.0 - z1 * z1) / u11 + z1 * z2 * u12 / (u11 * u22);
        const double dl_du12 = -z1 * z2 / u22;
        const double dl_du22 = (1.0 - z2 * z2) / u22;

        dout(r, 5 * t + 0) = -dl_de1 * scale;
        dout(r, 5 * t + 1) = -dl_de2 * scale;
        dout(r, 5 * t + 2) = dl_du11 * tr.head.sig_a(r, t) * scale;
        dout(r, 5 * t + 3) = dl_du12 * scale;
        dout(r, 5 * t + 4) = dl_du22 * tr.head.sig_c(r, t) * scale;
      }
    }
  }

  grads.wo.noalias() += tr.z2.transpose() * dout;
  grads.bo += dout.colwise().sum();
  Eigen::MatrixXd dz2 = dout * p.wo.transpose();
  dz2 = (dz2.array() * (tr.z2.array() > 0.0).cast<double>()).matrix();

  grads.w2.noalias() += tr.z1.transpose() * dz2;
  grads.b2 += dz2.colwise().sum();
  Eigen::MatrixXd dz1 = dz2 * p.w2.transpose();
  dz1 = (dz1.array() * (tr.z1.array() > 0.0).cast<double>()).matrix();

  grads.w1.noalias() += tr.fused.transpose() * dz1;
  grads.b1 += dz1.colwise().sum();
  Eigen::MatrixXd dfused = dz1 * p.w1.transpose();

  Eigen::Index col = 0;
  const Eigen::MatrixXd dhm = dfused.middleCols(col, cfg.hidden_motion);
  col += cfg.hidden_motion;
  const Eigen::MatrixXd dhd = dfused.middleCols(col, cfg.hidden_dist);
  col += cfg.hidden_dist;
  Eigen::MatrixXd dhe;
  if (cfg.has_gaze()) {
    dhe = dfused.middleCols(col, cfg.hidden_gaze);
    col += cfg.hidden_gaze;
  }
  if (input_grads) {
    input_grads->ctx = cfg.include_context ? dfused.middleCols(col, kContextDim).eval()
                                           : Eigen::MatrixXd::Zero(b, kContextDim).eval();
  }

  detail::lstm_backward(p.motion_enc, batch.motion.x, tr.motion, dhm, grads.motion_enc,
                        input_grads ? &input_grads->motion : nullptr);
  detail::lstm_backward(p.dist_enc, batch.dist.x, tr.dist, dhd, grads.dist_enc,
                        input_grads ? &input_grads->dist : nullptr);
  if (cfg.has_gaze()) {
    detail::lstm_backward(p.gaze_enc, batch.gaze.x, tr.gaze, dhe, grads.gaze_enc,
                          input_grads ? &input_grads->gaze : nullptr);
  }
}

// ---------------------------------------------------------------------------
// Single-sample interface

// Predicted displacement distribution for one sample.
struct GaussianTraj {
  Eigen::MatrixXd mu;            // t_future x 2
  Eigen::VectorXd u11, u12, u22; // t_future
};

inline BatchData batch_of_one(const Sample& s, const ModelConfig& cfg) {
  std::vector<std::size_t> order{0};
  std::vector<Sample> tmp{s};
  return assemble_batch(tmp, order, 0, 1, cfg);
}

inline GaussianTraj forward(const ModelParams& p, const Sample& normalized_sample) {
  const BatchData batch = batch_of_one(normalized_sample, p.config);
  ForwardTrace tr;
  net_forward(p, batch, tr);
  GaussianTraj out;
  const int tf = p.config.t_future;
  out.mu.resize(tf, 2);
  out.u11.resize(tf);
  out.u12.resize(tf);
  out.u22.resize(tf);
  for (int t = 0; t < tf; ++t) {
    out.mu(t, 0) = tr.head.mu_x(0, t);
    out.mu(t, 1) = tr.head.mu_y(0, t);
    out.u11(t) = tr.head.u11(0, t);
    out.u12(t) = tr.head.u12(0, t);
    out.u22(t) = tr.head.u22(0, t);
  }
  return out;
}

// Mean over steps of the 2-D Gaussian negative log-likelihood with
// Sigma = U^T U.
inline double nll_loss(const GaussianTraj& pred, const Eigen::MatrixXd& target_deltas) {
  if (pred.mu.rows() != target_deltas.rows() || target_deltas.cols() != 2) {
    throw std::invalid_argument("nll_loss: shape mismatch");
  }
  double total = 0.0;
  for (Eigen::Index t = 0; t < pred.mu.rows(); ++t) {
    const double u11 = pred.u11(t), u12 = pred.u12(t), u22 = pred.u22(t);
    if (!(u11 > 0.0) || !(u22 > 0.0)) {
      throw std::invalid_argument("nll_loss: non-positive diagonal in U");
    }
    const double e1 = target_deltas(t, 0) - pred.mu(t, 0);
    const double e2 = target_deltas(t, 1) - pred.mu(t, 1);
    const double z1 = e1 / u11;
    const double z2 = (e2 - u12 * z1) / u22;
    total += kLogTwoPi + std::log(u11 * u22) + 0.5 * (z1 * z1 + z2 * z2);
  }
  return total / double(pred.mu.rows());
}

// Draws one delta as mu + U^T z with z standard normal, so the sampled
// covariance is U^T U.
inline Eigen::Vector2d sample_delta(const GaussianTraj& traj, int t, Rng& rng) {
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  return {traj.mu(t, 0) + traj.u11(t) * z1,
          traj.mu(t, 1) + traj.u12(t) * z1 + traj.u22(t) * z2};
}

// Mean prediction: anchor + cumulative sum of denormalized mean deltas.
inline Eigen::MatrixXd predict_mean(const ModelParams& p, const Normalizer& norm,
                                    const Sample& normalized_sample) {
  const GaussianTraj traj = forward(p, normalized_sample);
  const int tf = p.config.t_future;
  Eigen::MatrixXd out(tf, 2);
  double x = normalized_sample.anchor.x, y = normalized_sample.anchor.y;
  for (int t = 0; t < tf; ++t) {
    const Eigen::Vector2d d = denormalize_delta(norm, traj.mu.row(t).transpose());
    x += d(0);
    y += d(1);
    out(t, 0) = x;
    out(t, 1) = y;
  }
  return out;
}

// k stochastic trajectories, each step drawn independently from the
// per-step Gaussian, then accumulated from the anchor.
inline std::vector<Eigen::MatrixXd> predict_samples(const ModelParams& p, const Normalizer& norm,
                                                    const Sample& normalized_sample, int k,
                                                    Rng& rng) {
  const GaussianTraj traj = forward(p, normalized_sample);
  const int tf = p.config.t_future;
  std::vector<Eigen::MatrixXd> out(k, Eigen::MatrixXd(tf, 2));
  for (int j = 0; j < k; ++j) {
    double x = normalized_sample.anchor.x, y = normalized_sample.anchor.y;
    for (int t = 0; t < tf; ++t) {
      const Eigen::Vector2d d = denormalize_delta(norm, sample_delta(traj, t, rng));
      x += d(0);
      y += d(1);
      out[j](t, 0) = x;
      out[j](t, 1) = y;
    }
  }
  return out;
}

}  // namespace gazex
