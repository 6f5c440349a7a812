#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/geometry.hpp"

namespace gazex {

constexpr double kFrameDt = 0.05;  // 20 Hz

// Uniformly sampled scalar signal with a per-frame validity mask.
struct TimeSeries {
  std::vector<double> values;
  double dt = kFrameDt;
  std::vector<std::uint8_t> valid_mask;  // 1 = valid

  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> v, double dt_ = kFrameDt)
      : values(std::move(v)), dt(dt_), valid_mask(values.size(), 1) {}
  TimeSeries(std::vector<double> v, std::vector<std::uint8_t> mask, double dt_ = kFrameDt)
      : values(std::move(v)), dt(dt_), valid_mask(std::move(mask)) {
    if (values.size() != valid_mask.size()) {
      throw std::invalid_argument("TimeSeries: values/mask length mismatch");
    }
  }
  std::size_t size() const { return values.size(); }
};

enum class SemanticLabel : std::uint8_t { Leader, Follower, Goal, Environment, Saccade, Noise };

inline bool is_fixation(SemanticLabel l) {
  return l == SemanticLabel::Leader || l == SemanticLabel::Follower ||
         l == SemanticLabel::Goal || l == SemanticLabel::Environment;
}

struct SemanticLabelSeries {
  std::vector<SemanticLabel> labels;
  double dt = kFrameDt;
};

struct SpeedThresholds {
  double initiation_threshold = 0.5;  // m/s, > 0
  double backward_threshold = -0.1;   // m/s, < 0

  void validate() const {
    if (!(initiation_threshold > 0.0) || !(backward_threshold < 0.0)) {
      throw std::invalid_argument("SpeedThresholds: initiation must be > 0, backward < 0");
    }
  }
};

namespace detail {

// Symmetric (half-sample) reflection: ... s1 s0 | s0 s1 ... sn-1 | sn-1 sn-2 ...
// Keeps the smoothing matrix symmetric, so constants and the series mean
// are preserved by a normalized kernel.
inline std::size_t reflect_index(long idx, std::size_t n) {
  const long m = static_cast<long>(n);
  while (idx < 0 || idx >= m) {
    if (idx < 0) idx = -idx - 1;
    if (idx >= m) idx = 2 * m - 1 - idx;
  }
  return static_cast<std::size_t>(idx);
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const long radius = static_cast<long>(std::floor(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

inline std::vector<double> smooth_values(const std::vector<double>& v, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const long radius = (static_cast<long>(k.size()) - 1) / 2;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double acc = 0.0;
    for (long j = -radius; j <= radius; ++j) {
      acc += k[j + radius] * v[reflect_index(static_cast<long>(i) + j, v.size())];
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace detail

// Truncated (4 sigma), renormalized Gaussian filter with reflect boundaries.
inline TimeSeries gaussian_smooth(const TimeSeries& s, double sigma = 4.0) {
  if (s.values.empty()) throw std::invalid_argument("gaussian_smooth: empty series");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_smooth: sigma must be > 0");
  TimeSeries out = s;
  out.values = detail::smooth_values(s.values, sigma);
  return out;
}

inline std::vector<Point2> gaussian_smooth(const std::vector<Point2>& pts, double sigma = 4.0) {
  if (pts.empty()) throw std::invalid_argument("gaussian_smooth: empty series");
  std::vector<double> xs(pts.size()), ys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    xs[i] = pts[i].x;
    ys[i] = pts[i].y;
  }
  xs = detail::smooth_values(xs, sigma);
  ys = detail::smooth_values(ys, sigma);
  std::vector<Point2> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = {xs[i], ys[i]};
  return out;
}

// Fills interior invalid runs by linear interpolation, then re-masks `trim`
// seconds on each side of every original gap. Gaps missing an anchor on
// either side stay invalid.
inline TimeSeries interpolate_gaps(const TimeSeries& s, double trim = 0.1) {
  TimeSeries out = s;
  const std::size_t n = s.size();
  if (n == 0) return out;
  const long n_trim = std::lround(trim / s.dt);

  std::size_t i = 0;
  while (i < n) {
    if (s.valid_mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !s.valid_mask[j]) ++j;  // original gap = [i, j)
    const bool has_left = i > 0;
    const bool has_right = j < n;
    if (has_left && has_right) {
      const double a = s.values[i - 1];
      const double b = s.values[j];
      const double span = static_cast<double>(j - (i - 1));
      for (std::size_t t = i; t < j; ++t) {
        const double f = static_cast<double>(t - (i - 1)) / span;
        out.values[t] = a + f * (b - a);
        out.valid_mask[t] = 1;
      }
    }
    // trim around the original gap, regardless of whether it was filled
    for (long t = static_cast<long>(i) - n_trim; t < static_cast<long>(i); ++t) {
      if (t >= 0) out.valid_mask[t] = 0;
    }
    for (long t = static_cast<long>(j); t < static_cast<long>(j) + n_trim; ++t) {
      if (t < static_cast<long>(n)) out.valid_mask[t] = 0;
    }
    i = j;
  }
  return out;
}

// I-VT: flags frame t when the wrapped angular step from t-1 exceeds the
// threshold rate. Frame 0 is never flagged.
inline std::vector<std::uint8_t> detect_saccades(const TimeSeries& eye_dir_deg,
                                                 double threshold_deg_per_s = 100.0) {
  const std::size_t n = eye_dir_deg.size();
  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t t = 1; t < n; ++t) {
    const double step = wrap_angle(eye_dir_deg.values[t] - eye_dir_deg.values[t - 1]).deg();
    if (std::abs(step) / eye_dir_deg.dt > threshold_deg_per_s) out[t] = 1;
  }
  return out;
}

// Fixation-label cleanup, in order: saccade overwrite, isolated-label repair,
// short-gap fill (< 0.4 s), then 1-frame fixation runs to Noise.
inline SemanticLabelSeries clean_semantic_targets(const SemanticLabelSeries& raw,
                                                  const std::vector<std::uint8_t>& saccades) {
  if (raw.labels.size() != saccades.size()) {
    throw std::invalid_argument("clean_semantic_targets: label/saccade length mismatch");
  }
  SemanticLabelSeries out = raw;
  auto& l = out.labels;
  const std::size_t n = l.size();

  for (std::size_t t = 0; t < n; ++t) {
    if (saccades[t]) l[t] = SemanticLabel::Saccade;
  }

  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (is_fixation(l[t]) && is_fixation(l[t - 1]) && l[t - 1] == l[t + 1] && l[t - 1] != l[t]) {
      l[t] = l[t - 1];
    }
  }

  const std::size_t max_gap = static_cast<std::size_t>(std::lround(0.4 / raw.dt));
  std::size_t i = 0;
  while (i < n) {
    if (l[i] != SemanticLabel::Noise) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && l[j] == SemanticLabel::Noise) ++j;
    if (i > 0 && j < n && j - i < max_gap && l[i - 1] == l[j] && is_fixation(l[i - 1])) {
      for (std::size_t t = i; t < j; ++t) l[t] = l[i - 1];
    }
    i = j;
  }

  const std::size_t min_run = static_cast<std::size_t>(std::lround(0.1 / raw.dt));
  i = 0;
  while (i < n) {
    if (!is_fixation(l[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && l[j] == l[i]) ++j;
    if (j - i < min_run) {
      for (std::size_t t = i; t < j; ++t) l[t] = SemanticLabel::Noise;
    }
    i = j;
  }
  return out;
}

// Fixed-bin histogram (0.05 m/s bins over [min, max]); returns the center of
// the deepest valley strictly between the two highest non-adjacent bins.
inline double histogram_threshold(const std::vector<double>& speeds) {
  if (speeds.empty()) throw std::invalid_argument("histogram_threshold: empty input");
  const auto [mn_it, mx_it] = std::minmax_element(speeds.begin(), speeds.end());
  const double mn = *mn_it, mx = *mx_it;
  constexpr double kBinWidth = 0.05;
  const int n_bins = std::max(1, static_cast<int>(std::ceil((mx - mn) / kBinWidth)));
  if (n_bins < 3) throw std::runtime_error("histogram_threshold: no valley (degenerate histogram)");

  std::vector<long> count(n_bins, 0);
  for (double v : speeds) {
    int idx = static_cast<int>((v - mn) / kBinWidth);
    idx = std::clamp(idx, 0, n_bins - 1);
    ++count[idx];
  }

  // Modes are local maxima of the histogram; stray near-empty bins in the
  // tails do not qualify.
  const long max_count = *std::max_element(count.begin(), count.end());
  const long min_peak = std::max<long>(2, max_count / 20);
  std::vector<int> peaks;
  for (int b = 0; b < n_bins; ++b) {
    if (count[b] < min_peak) continue;
    const bool left_ok = b == 0 || count[b] >= count[b - 1];
    const bool right_ok = b == n_bins - 1 || count[b] >= count[b + 1];
    if (left_ok && right_ok) peaks.push_back(b);
  }
  int mode1 = -1, mode2 = -1;
  for (int b : peaks) {
    if (mode1 < 0 || count[b] > count[mode1]) mode1 = b;
  }
  for (int b : peaks) {
    if (std::abs(b - mode1) <= 1) continue;
    if (mode2 < 0 || count[b] > count[mode2]) mode2 = b;
  }
  if (mode1 < 0 || mode2 < 0) {
    throw std::runtime_error("histogram_threshold: no valley (single mode)");
  }

  const int lo = std::min(mode1, mode2) + 1;
  const int hi = std::max(mode1, mode2) - 1;
  int valley = lo;
  for (int b = lo + 1; b <= hi; ++b) {
    if (count[b] < count[valley]) valley = b;
  }
  if (count[valley] >= std::min(count[mode1], count[mode2])) {
    throw std::runtime_error("histogram_threshold: no valley between modes");
  }
  return mn + (valley + 0.5) * kBinWidth;
}

struct InitiationEvents {
  std::vector<double> initiation_times;  // s
  std::vector<double> backward_times;    // s
};

// Initiations are upward crossings of the initiation threshold; backward
// events are entries into runs below the backward threshold.
inline InitiationEvents detect_initiations(const TimeSeries& speed_toward_goal,
                                           const SpeedThresholds& th) {
  th.validate();
  InitiationEvents out;
  const auto& v = speed_toward_goal.values;
  for (std::size_t t = 1; t < v.size(); ++t) {
    if (v[t - 1] <= th.initiation_threshold && v[t] > th.initiation_threshold) {
      out.initiation_times.push_back(t * speed_toward_goal.dt);
    }
  }
  for (std::size_t t = 0; t < v.size(); ++t) {
    if (v[t] < th.backward_threshold && (t == 0 || v[t - 1] >= th.backward_threshold)) {
      out.backward_times.push_back(t * speed_toward_goal.dt);
    }
  }
  return out;
}

}  // namespace gazex
