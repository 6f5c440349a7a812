#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gazex/net.hpp"

namespace gazex {

struct TrainConfig {
  int hidden_motion = 64;
  int hidden_dist = 32;
  int hidden_gaze = 32;
  int hidden_dense = 128;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 100;
  std::vector<int> milestones = {15, 35, 60};
  double decay = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden_motion <= 0 || hidden_dist <= 0 || hidden_gaze <= 0 || hidden_dense <= 0 ||
        batch_size <= 0 || epochs <= 0 || !(learning_rate > 0.0) || !(decay > 0.0)) {
      throw std::invalid_argument("TrainConfig: sizes, batch, epochs, lr, decay must be positive");
    }
    for (std::size_t i = 1; i < milestones.size(); ++i) {
      if (milestones[i] <= milestones[i - 1]) {
        throw std::invalid_argument("TrainConfig: milestones must be strictly increasing");
      }
    }
  }
};

inline ModelConfig make_model_config(const TrainConfig& tc, GazeMode mode, bool include_context,
                                     int t_past = kPastSteps, int t_future = kFutureSteps) {
  ModelConfig mc;
  mc.gaze_mode = mode;
  mc.include_context = include_context;
  mc.t_past = t_past;
  mc.t_future = t_future;
  mc.hidden_motion = tc.hidden_motion;
  mc.hidden_dist = tc.hidden_dist;
  mc.hidden_gaze = tc.hidden_gaze;
  mc.hidden_dense = tc.hidden_dense;
  return mc;
}

// Step decay: base * decay^(number of milestones <= epoch).
inline double lr_schedule(int epoch, const TrainConfig& cfg) {
  int passed = 0;
  for (int m : cfg.milestones) {
    if (m <= epoch) ++passed;
  }
  return cfg.learning_rate * std::pow(cfg.decay, passed);
}

struct AdamState {
  std::vector<Eigen::VectorXd> m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

inline AdamState make_adam_state(ModelParams& params) {
  AdamState s;
  for (const auto& t : collect_tensors(params)) {
    s.m.emplace_back(Eigen::VectorXd::Zero(t.size));
    s.v.emplace_back(Eigen::VectorXd::Zero(t.size));
  }
  return s;
}

// Bias-corrected Adam update, in place.
inline void adam_step(AdamState& state, ModelParams& params, ModelParams& grads, double lr) {
  const auto pt = collect_tensors(params);
  auto gt = collect_tensors(grads);
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (std::size_t k = 0; k < pt.size(); ++k) {
    Eigen::Map<Eigen::ArrayXd> p(pt[k].data, pt[k].size);
    Eigen::Map<const Eigen::ArrayXd> g(gt[k].data, gt[k].size);
    auto& m = state.m[k];
    auto& v = state.v[k];
    m.array() = state.beta1 * m.array() + (1.0 - state.beta1) * g;
    v.array() = state.beta2 * v.array() + (1.0 - state.beta2) * g.square();
    p -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
  }
}

namespace detail {

inline void zero_params(ModelParams& p) {
  for (auto& t : collect_tensors(p)) {
    Eigen::Map<Eigen::VectorXd>(t.data, t.size).setZero();
  }
}

inline void add_params(ModelParams& dst, ModelParams& src) {
  auto dt = collect_tensors(dst);
  auto st = collect_tensors(src);
  for (std::size_t k = 0; k < dt.size(); ++k) {
    Eigen::Map<Eigen::VectorXd>(dt[k].data, dt[k].size) +=
        Eigen::Map<const Eigen::VectorXd>(st[k].data, st[k].size);
  }
}

}  // namespace detail

// Runs batches split into a fixed number of chunks. Workers process chunks
// independently and the reduction happens on the main thread in chunk order,
// so the summed gradient is bitwise identical for any worker count.
class ChunkRunner {
 public:
  static constexpr int kChunks = 2;

  explicit ChunkRunner(const ModelParams& params)
      : n_workers_(std::max(1u, std::min(std::thread::hardware_concurrency(), 4u))) {
    for (int c = 0; c < kChunks; ++c) grads_[c] = make_zero_like(params);
  }

  // Forward (and optionally backward) over order[first, last). Returns the
  // sum of per-sample NLLs; accumulates gradients scaled by `loss_scale`
  // per sample into `total_grads` when non-null.
  double run(const ModelParams& params, const std::vector<Sample>& samples,
             const std::vector<std::size_t>& order, std::size_t first, std::size_t last,
             ModelParams* total_grads, double loss_scale) {
    const std::size_t n = last - first;
    std::array<std::pair<std::size_t, std::size_t>, kChunks> ranges;
    for (int c = 0; c < kChunks; ++c) {
      ranges[c] = {first + n * c / kChunks, first + n * (c + 1) / kChunks};
    }

    auto work = [&](int worker) {
      for (int c = worker; c < kChunks; c += n_workers_) {
        const auto [lo, hi] = ranges[c];
        loss_[c] = 0.0;
        if (lo >= hi) continue;
        BatchData batch = assemble_batch(samples, order, lo, hi, params.config);
        ForwardTrace& tr = traces_[c];
        const Eigen::VectorXd nll = net_forward(params, batch, tr);
        loss_[c] = nll.sum();
        if (total_grads) {
          detail::zero_params(grads_[c]);
          net_backward(params, batch, tr, grads_[c], nullptr, nullptr, loss_scale);
        }
      }
    };

    if (n_workers_ == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(n_workers_);
      for (int w = 0; w < n_workers_; ++w) threads.emplace_back(work, w);
      for (auto& t : threads) t.join();
    }

    double loss_sum = 0.0;
    for (int c = 0; c < kChunks; ++c) {
      loss_sum += loss_[c];
      if (total_grads && ranges[c].first < ranges[c].second) {
        detail::add_params(*total_grads, grads_[c]);
      }
    }
    return loss_sum;
  }

 private:
  int n_workers_;
  std::array<ModelParams, kChunks> grads_;
  std::array<ForwardTrace, kChunks> traces_;
  std::array<double, kChunks> loss_{};
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double train_nll = 0.0;
  double val_nll = 0.0;
};

struct TrainResult {
  ModelParams params;  // best validation checkpoint
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_nll = 0.0;
};

// Seeded mini-batch training; keeps the parameters with the best validation
// NLL. Samples must already be normalized.
inline TrainResult train(const ModelConfig& mcfg, const TrainConfig& tcfg,
                         const std::vector<Sample>& train_set, const std::vector<Sample>& val_set) {
  tcfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (val_set.empty()) throw std::invalid_argument("train: empty validation set");

  TrainResult result;
  ModelParams params = init_params(mcfg, tcfg.seed);
  ModelParams grads = make_zero_like(params);
  AdamState adam = make_adam_state(params);
  ChunkRunner runner(params);

  std::vector<std::size_t> train_order(train_set.size());
  std::vector<std::size_t> val_order(val_set.size());
  for (std::size_t i = 0; i < train_order.size(); ++i) train_order[i] = i;
  for (std::size_t i = 0; i < val_order.size(); ++i) val_order[i] = i;

  const std::size_t bs = static_cast<std::size_t>(tcfg.batch_size);
  bool have_best = false;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, tcfg);
    Rng shuffle_rng(derive_seed(tcfg.seed, 0xE70C, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(train_order);

    double train_loss_sum = 0.0;
    for (std::size_t first = 0; first < train_set.size(); first += bs) {
      const std::size_t last = std::min(first + bs, train_set.size());
      detail::zero_params(grads);
      const double batch_sum =
          runner.run(params, train_set, train_order, first, last, &grads, 1.0 / double(last - first));
      const double batch_mean = batch_sum / double(last - first);
      if (!std::isfinite(batch_mean)) {
        throw std::runtime_error("train: diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch));
      }
      train_loss_sum += batch_sum;
      adam_step(adam, params, grads, lr);
    }

    double val_loss_sum = 0.0;
    for (std::size_t first = 0; first < val_set.size(); first += bs) {
      const std::size_t last = std::min(first + bs, val_set.size());
      val_loss_sum += runner.run(params, val_set, val_order, first, last, nullptr, 0.0);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    stats.train_nll = train_loss_sum / double(train_set.size());
    stats.val_nll = val_loss_sum / double(val_set.size());
    result.history.push_back(stats);

    if (!have_best || stats.val_nll < result.best_val_nll) {
      have_best = true;
      result.best_val_nll = stats.val_nll;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

}  // namespace gazex
