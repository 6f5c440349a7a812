#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/features.hpp"
#include "gazex/preproc.hpp"
#include "gazex/rng.hpp"
#include "gazex/trial.hpp"

namespace gazex {

constexpr int kPastSteps = 40;
constexpr int kFutureSteps = 40;
constexpr int kWindowStride = 4;
constexpr int kMotionDim = 4;    // dx, dy, vx, vy
constexpr int kDistanceDim = 4;  // d1, present1, d2, present2

// Signal-conditioned view of a trial; positions smoothed for features,
// raw positions kept for targets.
struct ProcessedTrial {
  std::string trial_id;
  std::string participant_id;
  ScenarioContext ctx;
  Point2 start, goal;
  double dt = kFrameDt;

  std::vector<Point2> raw_pos;
  std::vector<Point2> smooth_pos;
  std::vector<Point2> velocity;      // finite difference of smooth_pos / dt
  std::vector<Point2> displacement;  // per-step smooth_pos delta
  OrientationStreams orient;
  std::vector<std::uint8_t> gaze_valid;  // after interpolation + trim
  std::vector<std::uint8_t> saccades;
  SemanticLabelSeries labels;  // cleaned
  std::vector<DistanceFrame> dist;

  std::size_t size() const { return raw_pos.size(); }
};

inline ProcessedTrial preprocess_trial(const Trial& trial, double smooth_sigma = 4.0,
                                       double saccade_threshold = 100.0) {
  if (trial.size() == 0) throw std::invalid_argument("preprocess_trial: empty trial");
  ProcessedTrial p;
  p.trial_id = trial.trial_id;
  p.participant_id = trial.participant_id;
  p.ctx = trial.ctx;
  p.start = trial.start;
  p.goal = trial.goal;

  const std::size_t n = trial.size();
  p.raw_pos = trial.ped;
  p.smooth_pos = gaussian_smooth(trial.ped, smooth_sigma);

  p.velocity.resize(n);
  p.displacement.resize(n);
  for (std::size_t t = 1; t < n; ++t) {
    p.displacement[t] = p.smooth_pos[t] - p.smooth_pos[t - 1];
    p.velocity[t] = p.displacement[t] * (1.0 / p.dt);
  }
  if (n > 1) {
    p.displacement[0] = p.displacement[1];
    p.velocity[0] = p.velocity[1];
  }

  // Eye gaps are interpolated on the unit circle to avoid wrap artifacts.
  TimeSeries cos_s, sin_s;
  cos_s.dt = sin_s.dt = p.dt;
  cos_s.valid_mask = sin_s.valid_mask = trial.eye_valid;
  cos_s.values.resize(n);
  sin_s.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    cos_s.values[t] = std::cos(deg2rad(trial.eye_yaw_deg[t]));
    sin_s.values[t] = std::sin(deg2rad(trial.eye_yaw_deg[t]));
  }
  cos_s = interpolate_gaps(cos_s);
  sin_s = interpolate_gaps(sin_s);

  p.orient.eye_yaw_deg.resize(n);
  p.orient.head_yaw_deg = trial.head_yaw_deg;
  p.orient.walking_dir_deg.resize(n);
  p.gaze_valid = cos_s.valid_mask;
  TimeSeries eye_angle;
  eye_angle.dt = p.dt;
  eye_angle.values.resize(n);
  eye_angle.valid_mask.assign(n, 1);
  for (std::size_t t = 0; t < n; ++t) {
    const double a = rad2deg(std::atan2(sin_s.values[t], cos_s.values[t]));
    p.orient.eye_yaw_deg[t] = a;
    eye_angle.values[t] = a;
  }

  AngleDeg heading = (trial.goal - trial.start).norm() > 1e-9
                         ? heading_from_velocity(trial.goal - trial.start, AngleDeg(0))
                         : AngleDeg(0);
  for (std::size_t t = 0; t < n; ++t) {
    heading = heading_from_velocity(p.velocity[t], heading);
    p.orient.walking_dir_deg[t] = heading.deg();
  }

  p.saccades = detect_saccades(eye_angle, saccade_threshold);
  SemanticLabelSeries raw_labels{trial.fixation, p.dt};
  p.labels = clean_semantic_targets(raw_labels, p.saccades);

  p.dist = distance_features(p.smooth_pos, trial.shuttles);
  return p;
}

// One training/evaluation window.
struct Sample {
  Eigen::MatrixXd motion;  // T_p x 4
  Eigen::MatrixXd dist;    // T_p x 4
  Eigen::MatrixXd gaze;    // T_p x (gaze_dim + 1), or T_p x 0 for GazeMode::None
  Eigen::VectorXd ctx;     // 8
  Eigen::MatrixXd future;  // T_f x 2 position deltas (raw positions)
  Point2 anchor;           // last observed raw position
  std::string trial_id;
  std::string participant_id;
  int window_start = 0;
};

inline int gaze_input_dim(GazeMode mode) {
  return mode == GazeMode::None ? 0 : gaze_dim(mode) + 1;
}

namespace detail {

// Per-frame gaze rows for a whole trial, with invalid frames filled
// (orientation modes) and the validity flag appended.
inline Eigen::MatrixXd build_gaze_table(const ProcessedTrial& p, GazeMode mode) {
  const auto n = static_cast<Eigen::Index>(p.size());
  const int width = gaze_input_dim(mode);
  Eigen::MatrixXd table(n, width);
  if (mode == GazeMode::None) return table;

  const bool head_only = mode == GazeMode::HeadInSpace || mode == GazeMode::HeadInWalking ||
                         mode == GazeMode::HeadVislet;
  std::vector<std::vector<double>> rows;
  if (is_orientation_mode(mode)) {
    rows = eye_representation(p.orient, mode);
  } else {
    rows = semantic_encoding(p.labels, mode);
  }
  for (Eigen::Index t = 0; t < n; ++t) {
    for (int c = 0; c < width - 1; ++c) table(t, c) = rows[t][c];
    table(t, width - 1) = head_only ? 1.0 : double(p.gaze_valid[t]);
  }

  if (is_orientation_mode(mode) && !head_only) {
    Eigen::Index last_valid = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (p.gaze_valid[t]) {
        last_valid = t;
      } else if (last_valid >= 0) {
        table.block(t, 0, 1, width - 1) = table.block(last_valid, 0, 1, width - 1);
      }
    }
    Eigen::Index first_valid = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (p.gaze_valid[t]) {
        first_valid = t;
        break;
      }
    }
    if (first_valid > 0) {
      for (Eigen::Index t = 0; t < first_valid; ++t) {
        table.block(t, 0, 1, width - 1) = table.block(first_valid, 0, 1, width - 1);
      }
    }
  }
  return table;
}

}  // namespace detail

inline std::vector<Sample> make_windows(const ProcessedTrial& p, GazeMode mode,
                                        int t_past = kPastSteps, int t_future = kFutureSteps,
                                        int stride = kWindowStride) {
  if (t_past <= 0 || t_future <= 0 || stride <= 0) {
    throw std::invalid_argument("make_windows: sizes and stride must be positive");
  }
  const auto n = static_cast<long>(p.size());
  std::vector<Sample> out;
  if (n < t_past + t_future) return out;

  const Eigen::MatrixXd gaze_table = detail::build_gaze_table(p, mode);
  Eigen::MatrixXd motion_table(n, kMotionDim), dist_table(n, kDistanceDim);
  for (long t = 0; t < n; ++t) {
    motion_table(t, 0) = p.displacement[t].x;
    motion_table(t, 1) = p.displacement[t].y;
    motion_table(t, 2) = p.velocity[t].x;
    motion_table(t, 3) = p.velocity[t].y;
    dist_table(t, 0) = p.dist[t].d1;
    dist_table(t, 1) = p.dist[t].present1;
    dist_table(t, 2) = p.dist[t].d2;
    dist_table(t, 3) = p.dist[t].present2;
  }
  const auto ctx_vec = context_vector(p.ctx);

  const long count = (n - t_past - t_future) / stride + 1;
  out.reserve(count);
  for (long w = 0; w < count; ++w) {
    const long s = w * stride;
    Sample sample;
    sample.motion = motion_table.block(s, 0, t_past, kMotionDim);
    sample.dist = dist_table.block(s, 0, t_past, kDistanceDim);
    sample.gaze = gaze_table.block(s, 0, t_past, gaze_table.cols());
    sample.ctx = Eigen::Map<const Eigen::VectorXd>(ctx_vec.data(), kContextDim);
    sample.future.resize(t_future, 2);
    for (int k = 0; k < t_future; ++k) {
      const Point2 prev = p.raw_pos[s + t_past + k - 1];
      const Point2 cur = p.raw_pos[s + t_past + k];
      sample.future(k, 0) = cur.x - prev.x;
      sample.future(k, 1) = cur.y - prev.y;
    }
    sample.anchor = p.raw_pos[s + t_past - 1];
    sample.trial_id = p.trial_id;
    sample.participant_id = p.participant_id;
    sample.window_start = static_cast<int>(s);
    out.push_back(std::move(sample));
  }
  return out;
}

// Ground-truth absolute future positions of a sample (anchor + cumulative
// sum of the stored deltas).
inline Eigen::MatrixXd sample_future_positions(const Sample& s) {
  Eigen::MatrixXd out(s.future.rows(), 2);
  double x = s.anchor.x, y = s.anchor.y;
  for (Eigen::Index k = 0; k < s.future.rows(); ++k) {
    x += s.future(k, 0);
    y += s.future(k, 1);
    out(k, 0) = x;
    out(k, 1) = y;
  }
  return out;
}

// Participant-level split; trials of one participant never span splits.
// Returns indices into `trials` for train/val/test.
inline std::array<std::vector<std::size_t>, 3> split_by_participant(
    const std::vector<Trial>& trials, std::array<int, 3> ratio, std::uint64_t seed) {
  std::set<std::string> id_set;
  for (const auto& t : trials) id_set.insert(t.participant_id);
  std::vector<std::string> ids(id_set.begin(), id_set.end());
  if (ids.size() < 3) {
    throw std::invalid_argument("split_by_participant: fewer participants than split parts");
  }

  Rng rng(derive_seed(seed, 0x5117));
  rng.shuffle(ids);

  const double total = ratio[0] + ratio[1] + ratio[2];
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double quota = ids.size() * ratio[i] / total;
    counts[i] = static_cast<std::size_t>(quota);
    frac[i] = quota - counts[i];
    assigned += counts[i];
  }
  while (assigned < ids.size()) {  // largest remainder
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (frac[i] > frac[best]) best = i;
    }
    ++counts[best];
    frac[best] = -1.0;
    ++assigned;
  }

  std::map<std::string, int> part_of;
  std::size_t k = 0;
  for (int split = 0; split < 3; ++split) {
    for (std::size_t i = 0; i < counts[split]; ++i) part_of[ids[k++]] = split;
  }

  std::array<std::vector<std::size_t>, 3> out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    out[part_of.at(trials[i].participant_id)].push_back(i);
  }
  return out;
}

// Per-channel z-score statistics fitted on training windows. One-hot gaze
// channels, the validity flag, and the context vector stay untouched
// (their entries hold mean 0 / std 1).
struct Normalizer {
  Eigen::VectorXd motion_mean, motion_std;  // 4
  Eigen::VectorXd dist_mean, dist_std;      // 4
  Eigen::VectorXd gaze_mean, gaze_std;      // gaze_input_dim
  Eigen::Vector2d delta_mean, delta_std;    // future deltas
};

namespace detail {

struct ChannelAccum {
  Eigen::VectorXd sum, sumsq;
  long n = 0;
  explicit ChannelAccum(Eigen::Index width) : sum(width), sumsq(width) {
    sum.setZero();
    sumsq.setZero();
  }
  void add(const Eigen::MatrixXd& m) {
    sum += m.colwise().sum().transpose();
    sumsq += m.array().square().matrix().colwise().sum().transpose();
    n += m.rows();
  }
  void finish(Eigen::VectorXd& mean, Eigen::VectorXd& std) const {
    mean = sum / double(n);
    Eigen::VectorXd var = sumsq / double(n) - mean.array().square().matrix();
    std = var.array().max(0.0).sqrt().max(1e-6);
  }
};

}  // namespace detail

inline Normalizer fit_normalizer(const std::vector<Sample>& train, GazeMode mode) {
  if (train.empty()) throw std::invalid_argument("fit_normalizer: empty training set");
  const int g = gaze_input_dim(mode);
  detail::ChannelAccum motion(kMotionDim), dist(kDistanceDim), gaze(g), delta(2);
  for (const auto& s : train) {
    motion.add(s.motion);
    dist.add(s.dist);
    if (g > 0) gaze.add(s.gaze);
    delta.add(s.future);
  }
  Normalizer n;
  motion.finish(n.motion_mean, n.motion_std);
  dist.finish(n.dist_mean, n.dist_std);
  if (g > 0) {
    gaze.finish(n.gaze_mean, n.gaze_std);
    for (int c = 0; c < g; ++c) {
      const bool normalized = is_orientation_mode(mode) && c < gaze_dim(mode);
      if (!normalized) {
        n.gaze_mean(c) = 0.0;
        n.gaze_std(c) = 1.0;
      }
    }
  } else {
    n.gaze_mean.resize(0);
    n.gaze_std.resize(0);
  }
  Eigen::VectorXd dm, ds;
  delta.finish(dm, ds);
  n.delta_mean = dm;
  n.delta_std = ds;
  return n;
}

namespace detail {

inline void zscore(Eigen::MatrixXd& m, const Eigen::VectorXd& mean, const Eigen::VectorXd& std) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) = (m.col(c).array() - mean(c)) / std(c);
}

inline void unzscore(Eigen::MatrixXd& m, const Eigen::VectorXd& mean, const Eigen::VectorXd& std) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) = m.col(c).array() * std(c) + mean(c);
}

}  // namespace detail

inline Sample apply_normalizer(const Normalizer& n, const Sample& s) {
  Sample out = s;
  detail::zscore(out.motion, n.motion_mean, n.motion_std);
  detail::zscore(out.dist, n.dist_mean, n.dist_std);
  if (out.gaze.cols() > 0) detail::zscore(out.gaze, n.gaze_mean, n.gaze_std);
  Eigen::VectorXd dm = n.delta_mean, ds = n.delta_std;
  detail::zscore(out.future, dm, ds);
  return out;
}

inline Sample invert_normalizer(const Normalizer& n, const Sample& s) {
  Sample out = s;
  detail::unzscore(out.motion, n.motion_mean, n.motion_std);
  detail::unzscore(out.dist, n.dist_mean, n.dist_std);
  if (out.gaze.cols() > 0) detail::unzscore(out.gaze, n.gaze_mean, n.gaze_std);
  Eigen::VectorXd dm = n.delta_mean, ds = n.delta_std;
  detail::unzscore(out.future, dm, ds);
  return out;
}

inline Eigen::Vector2d denormalize_delta(const Normalizer& n, const Eigen::Vector2d& d) {
  return (d.array() * n.delta_std.array() + n.delta_mean.array()).matrix();
}

// Full ingestion pipeline: preprocess all trials and window them.
inline std::vector<Sample> build_samples(const std::vector<Trial>& trials,
                                         const std::vector<std::size_t>& indices, GazeMode mode,
                                         int t_past = kPastSteps, int t_future = kFutureSteps,
                                         int stride = kWindowStride) {
  std::vector<Sample> out;
  for (std::size_t idx : indices) {
    const ProcessedTrial p = preprocess_trial(trials[idx]);
    auto windows = make_windows(p, mode, t_past, t_future, stride);
    for (auto& w : windows) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace gazex
