#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/csv.hpp"
#include "gazex/dataset.hpp"
#include "gazex/geometry.hpp"
#include "gazex/preproc.hpp"
#include "gazex/trial.hpp"

namespace gazex {

constexpr double kShuttleLength = 3.0;  // m
constexpr double kShuttleWidth = 1.6;   // m
constexpr double kGoalRadius = 0.5;     // m, completion test

enum class GapSelection { BeforeFirst, Between, AfterLast };

inline const char* to_string(GapSelection g) {
  switch (g) {
    case GapSelection::BeforeFirst: return "before_first";
    case GapSelection::Between: return "between";
    case GapSelection::AfterLast: return "after_last";
  }
  return "before_first";
}

struct TrialMetrics {
  GapSelection gap_selection = GapSelection::BeforeFirst;
  double waiting_time = 0.0;  // s, trial start to last initiation
  int initiation_count = 0;
  int backward_count = 0;
  double mean_deviation = 0.0;  // cm
  double max_deviation = 0.0;   // cm
  double pre_gaze_time = 0.0;   // s on shuttles before the crossing stage
  double during_gaze_time = 0.0;
  std::optional<double> lateral_clearance;  // cm; empty when no shuttle passed
};

namespace detail {

struct ShuttlePath {
  Point2 anchor;
  Point2 dir;  // unit travel direction
  std::vector<double> along;         // per frame, shuttle center coordinate
  std::vector<std::uint8_t> present;
};

inline std::optional<ShuttlePath> infer_path(const ShuttleTrack& track) {
  const Point2* first = nullptr;
  const Point2* last = nullptr;
  for (std::size_t t = 0; t < track.positions.size(); ++t) {
    if (!track.present.empty() && !track.present[t]) continue;
    if (!first) first = &track.positions[t];
    last = &track.positions[t];
  }
  if (!first || !last) return std::nullopt;
  const Point2 disp = *last - *first;
  if (disp.norm() < 0.1) return std::nullopt;  // never moved; no usable path

  ShuttlePath path;
  path.anchor = *first;
  path.dir = disp * (1.0 / disp.norm());
  path.along.resize(track.positions.size());
  path.present = track.present;
  for (std::size_t t = 0; t < track.positions.size(); ++t) {
    path.along[t] = (track.positions[t] - path.anchor).dot(path.dir);
  }
  return path;
}

}  // namespace detail

inline TrialMetrics compute_trial_metrics(const Trial& trial, const SpeedThresholds& thresholds) {
  if (trial.size() < 2) throw std::invalid_argument("compute_trial_metrics: trial too short");
  if ((trial.ped.back() - trial.goal).norm() > kGoalRadius) {
    throw std::runtime_error("compute_trial_metrics: incomplete trial (goal not reached)");
  }
  const Point2 task = trial.goal - trial.start;
  if (task.norm() < 1e-6) {
    throw std::invalid_argument("compute_trial_metrics: degenerate start/goal");
  }
  const Point2 axis = task * (1.0 / task.norm());

  const ProcessedTrial p = preprocess_trial(trial);
  const std::size_t n = p.size();
  const double dt = p.dt;

  TrialMetrics m;

  TimeSeries speed_along;
  speed_along.dt = dt;
  speed_along.values.resize(n);
  speed_along.valid_mask.assign(n, 1);
  for (std::size_t t = 0; t < n; ++t) speed_along.values[t] = p.velocity[t].dot(axis);
  const InitiationEvents events = detect_initiations(speed_along, thresholds);
  m.initiation_count = static_cast<int>(events.initiation_times.size());
  m.backward_count = static_cast<int>(events.backward_times.size());
  m.waiting_time = events.initiation_times.empty() ? 0.0 : events.initiation_times.back();

  double dev_sum = 0.0, dev_max = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double off = std::abs(lateral_offset(p.smooth_pos[t], trial.start, trial.goal));
    dev_sum += off;
    dev_max = std::max(dev_max, off);
  }
  m.mean_deviation = dev_sum / double(n) * 100.0;
  m.max_deviation = dev_max * 100.0;

  std::vector<detail::ShuttlePath> paths;
  for (const auto& track : trial.shuttles) {
    if (auto path = detail::infer_path(track)) paths.push_back(*path);
  }

  // First frame where the pedestrian is inside any shuttle corridor.
  std::size_t entry_frame = n;
  for (const auto& path : paths) {
    for (std::size_t t = 0; t < n; ++t) {
      if (std::abs(lateral_offset(p.smooth_pos[t], path.anchor, path.anchor + path.dir)) <=
          kShuttleWidth / 2.0) {
        entry_frame = std::min(entry_frame, t);
        break;
      }
    }
  }
  const double entry_time = entry_frame < n ? entry_frame * dt
                                            : std::numeric_limits<double>::infinity();

  // Crossing stage starts at the last initiation before stepping onto a path.
  double boundary = 0.0;
  for (double t : events.initiation_times) {
    if (t <= entry_time) boundary = t;
  }
  if (boundary == 0.0 && !events.initiation_times.empty()) {
    boundary = events.initiation_times.front();
  }
  const auto boundary_frame = static_cast<std::size_t>(std::lround(boundary / dt));
  for (std::size_t t = 0; t < n; ++t) {
    const SemanticLabel l = p.labels.labels[t];
    if (l == SemanticLabel::Leader || l == SemanticLabel::Follower) {
      (t < boundary_frame ? m.pre_gaze_time : m.during_gaze_time) += dt;
    }
  }

  // Gap selection: when the pedestrian crossed the leader's path relative to
  // each shuttle's passage of the conflict point.
  if (!paths.empty()) {
    const auto& lead = paths.front();
    const Point2 b = lead.anchor + lead.dir;
    const double off0 = lateral_offset(p.smooth_pos[0], lead.anchor, b);
    std::size_t cross_frame = n;
    for (std::size_t t = 1; t < n; ++t) {
      const double off = lateral_offset(p.smooth_pos[t], lead.anchor, b);
      if (off == 0.0 || (off > 0.0) != (off0 > 0.0)) {
        cross_frame = t;
        break;
      }
    }

    auto pass_frame = [&](const detail::ShuttlePath& path) -> std::size_t {
      // conflict = intersection of the task line and the shuttle line
      const double denom = path.dir.cross(axis);
      if (std::abs(denom) < 1e-9) return n;  // parallel; never passes the task line
      const Point2 rel = trial.start - path.anchor;
      const double s_along = rel.cross(axis) / path.dir.cross(axis);
      for (std::size_t t = 0; t < path.along.size(); ++t) {
        if ((path.present.empty() || path.present[t]) && path.along[t] >= s_along) return t;
      }
      return n;
    };

    const std::size_t lead_pass = pass_frame(lead);
    if (cross_frame < lead_pass) {
      m.gap_selection = GapSelection::BeforeFirst;
    } else if (paths.size() > 1 && cross_frame < pass_frame(paths[1])) {
      m.gap_selection = GapSelection::Between;
    } else {
      m.gap_selection = GapSelection::AfterLast;
    }
  }

  // Lateral clearance at the instant a (moving) shuttle's front passes the
  // pedestrian's projection onto that shuttle's path.
  double best_clearance = std::numeric_limits<double>::infinity();
  for (const auto& path : paths) {
    const Point2 b = path.anchor + path.dir;
    for (std::size_t t = 1; t < n; ++t) {
      if (!path.present.empty() && (!path.present[t] || !path.present[t - 1])) continue;
      const double front_prev = path.along[t - 1] + kShuttleLength / 2.0;
      const double front = path.along[t] + kShuttleLength / 2.0;
      const double proj_prev = (p.smooth_pos[t - 1] - path.anchor).dot(path.dir);
      const double proj = (p.smooth_pos[t] - path.anchor).dot(path.dir);
      const bool moving = (path.along[t] - path.along[t - 1]) / dt > 0.05;
      if (front_prev < proj_prev && front >= proj && moving) {
        best_clearance = std::min(best_clearance,
                                  std::abs(lateral_offset(p.smooth_pos[t], path.anchor, b)));
        break;
      }
    }
  }
  if (std::isfinite(best_clearance)) m.lateral_clearance = best_clearance * 100.0;

  return m;
}

// Pooled-speed threshold estimation. The initiation threshold comes from the
// histogram valley of the along-axis speed; the backward threshold mirrors
// the procedure on backward motion and falls back to -0.1 m/s when that
// histogram has no valley.
inline SpeedThresholds estimate_thresholds(const std::vector<Trial>& trials) {
  std::vector<double> speeds, backward;
  for (const auto& trial : trials) {
    const Point2 task = trial.goal - trial.start;
    if (task.norm() < 1e-6) continue;
    const Point2 axis = task * (1.0 / task.norm());
    const ProcessedTrial p = preprocess_trial(trial);
    for (const auto& v : p.velocity) {
      const double s = v.dot(axis);
      speeds.push_back(s);
      if (s < 0.0) backward.push_back(-s);
    }
  }
  SpeedThresholds th;
  th.initiation_threshold = histogram_threshold(speeds);
  th.backward_threshold = -0.1;
  if (backward.size() >= 100) {
    try {
      th.backward_threshold = -histogram_threshold(backward);
    } catch (const std::runtime_error&) {
      // unimodal backward histogram; keep the default
    }
  }
  th.validate();
  return th;
}

// ---------------------------------------------------------------------------
// Grouped descriptive statistics

enum class Factor { Yielding, Ehmi, Angle, Traffic };

inline Factor parse_factor(const std::string& s) {
  if (s == "yielding") return Factor::Yielding;
  if (s == "ehmi") return Factor::Ehmi;
  if (s == "angle") return Factor::Angle;
  if (s == "traffic") return Factor::Traffic;
  throw std::invalid_argument("unknown grouping factor: " + s);
}

inline std::vector<std::string> factor_level_names(Factor f) {
  switch (f) {
    case Factor::Yielding: return {"non_yielding", "yielding"};
    case Factor::Ehmi: return {"ehmi_absent", "ehmi_present"};
    case Factor::Angle: return {"angle_45", "angle_90", "angle_135"};
    case Factor::Traffic: return {"traffic_single", "traffic_two_gap3", "traffic_two_gap5"};
  }
  return {};
}

inline int factor_level(Factor f, const ScenarioContext& ctx) {
  switch (f) {
    case Factor::Yielding: return ctx.yielding;
    case Factor::Ehmi: return ctx.ehmi;
    case Factor::Angle: return ctx.angle_deg == 45 ? 0 : (ctx.angle_deg == 90 ? 1 : 2);
    case Factor::Traffic: return static_cast<int>(ctx.traffic);
  }
  return 0;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  long n = 0;

  void add_all(const std::vector<double>& xs) {
    n = static_cast<long>(xs.size());
    if (n == 0) return;
    double s = 0.0;
    for (double x : xs) s += x;
    mean = s / double(n);
    double q = 0.0;
    for (double x : xs) q += (x - mean) * (x - mean);
    sd = std::sqrt(q / double(n));
  }
};

struct LevelStats {
  std::string level;
  long n_trials = 0;
  std::array<long, 3> gap_counts{};  // before / between / after
  MeanSd waiting, initiation, backward, mean_dev, max_dev, pre_gaze, during_gaze, clearance;
};

struct DescriptiveTable {
  Factor factor = Factor::Yielding;
  std::vector<LevelStats> levels;
};

inline DescriptiveTable descriptive_table(const std::vector<TrialMetrics>& metrics,
                                          const std::vector<ScenarioContext>& contexts,
                                          Factor factor) {
  if (metrics.empty() || metrics.size() != contexts.size()) {
    throw std::invalid_argument("descriptive_table: empty or mismatched inputs");
  }
  const auto names = factor_level_names(factor);
  DescriptiveTable table;
  table.factor = factor;
  for (std::size_t lvl = 0; lvl < names.size(); ++lvl) {
    LevelStats stats;
    stats.level = names[lvl];
    std::vector<double> waiting, initiation, backward, mean_dev, max_dev, pre, during, clearance;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      if (factor_level(factor, contexts[i]) != static_cast<int>(lvl)) continue;
      const auto& m = metrics[i];
      ++stats.n_trials;
      ++stats.gap_counts[static_cast<int>(m.gap_selection)];
      waiting.push_back(m.waiting_time);
      initiation.push_back(m.initiation_count);
      backward.push_back(m.backward_count);
      mean_dev.push_back(m.mean_deviation);
      max_dev.push_back(m.max_deviation);
      pre.push_back(m.pre_gaze_time);
      during.push_back(m.during_gaze_time);
      if (m.lateral_clearance) clearance.push_back(*m.lateral_clearance);
    }
    stats.waiting.add_all(waiting);
    stats.initiation.add_all(initiation);
    stats.backward.add_all(backward);
    stats.mean_dev.add_all(mean_dev);
    stats.max_dev.add_all(max_dev);
    stats.pre_gaze.add_all(pre);
    stats.during_gaze.add_all(during);
    stats.clearance.add_all(clearance);
    table.levels.push_back(std::move(stats));
  }
  return table;
}

// One CSV mirroring the descriptive-statistics table: measures as rows,
// factor levels (across all groupings) as columns.
inline void write_descriptive_csv(const std::string& path,
                                  const std::vector<DescriptiveTable>& tables) {
  CsvWriter w(path);
  std::vector<std::string> header{"measure"};
  for (const auto& t : tables) {
    for (const auto& lvl : t.levels) header.push_back(lvl.level);
  }
  w.row(header);

  auto emit = [&](const std::string& name, auto getter) {
    std::vector<std::string> row{name};
    for (const auto& t : tables) {
      for (const auto& lvl : t.levels) row.push_back(getter(lvl));
    }
    w.row(row);
  };

  for (int g = 0; g < 3; ++g) {
    const std::string name = std::string("gap_") + to_string(static_cast<GapSelection>(g)) +
                             "_count";
    emit(name, [g](const LevelStats& s) { return std::to_string(s.gap_counts[g]); });
  }
  auto stat_rows = [&](const std::string& name, MeanSd LevelStats::*field) {
    emit(name + "_mean", [field](const LevelStats& s) { return format_double((s.*field).mean); });
    emit(name + "_sd", [field](const LevelStats& s) { return format_double((s.*field).sd); });
  };
  stat_rows("waiting_time_s", &LevelStats::waiting);
  stat_rows("initiation_count", &LevelStats::initiation);
  stat_rows("backward_count", &LevelStats::backward);
  stat_rows("mean_deviation_cm", &LevelStats::mean_dev);
  stat_rows("max_deviation_cm", &LevelStats::max_dev);
  stat_rows("pre_gaze_time_s", &LevelStats::pre_gaze);
  stat_rows("during_gaze_time_s", &LevelStats::during_gaze);
  stat_rows("lateral_clearance_cm", &LevelStats::clearance);
  emit("lateral_clearance_n",
       [](const LevelStats& s) { return std::to_string(s.clearance.n); });
  emit("n_trials", [](const LevelStats& s) { return std::to_string(s.n_trials); });
}

}  // namespace gazex
