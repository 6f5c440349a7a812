#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/geometry.hpp"
#include "gazex/preproc.hpp"

namespace gazex {

// Distance reported for a shuttle that is absent or out of range.
constexpr double kAbsentDistance = 30.0;  // m

enum class GazeMode : int {
  EyeInSpace = 0,
  EyeInWalking,
  EyeVislet,
  EyePlusHead,
  HeadInSpace,
  HeadInWalking,
  HeadVislet,
  GazeEvents,
  AttentionPresence,
  AttentionOnTraffic,
  AttentionDistribution,
  None,
};

inline bool is_orientation_mode(GazeMode m) {
  switch (m) {
    case GazeMode::EyeInSpace:
    case GazeMode::EyeInWalking:
    case GazeMode::EyeVislet:
    case GazeMode::EyePlusHead:
    case GazeMode::HeadInSpace:
    case GazeMode::HeadInWalking:
    case GazeMode::HeadVislet:
      return true;
    default:
      return false;
  }
}

inline bool is_semantic_mode(GazeMode m) {
  switch (m) {
    case GazeMode::GazeEvents:
    case GazeMode::AttentionPresence:
    case GazeMode::AttentionOnTraffic:
    case GazeMode::AttentionDistribution:
      return true;
    default:
      return false;
  }
}

// Width of the gaze representation, excluding the appended validity flag.
inline int gaze_dim(GazeMode m) {
  switch (m) {
    case GazeMode::EyeInSpace:
    case GazeMode::EyeInWalking:
    case GazeMode::HeadInSpace:
    case GazeMode::HeadInWalking:
    case GazeMode::AttentionPresence:
      return 1;
    case GazeMode::EyeVislet:
    case GazeMode::EyePlusHead:
    case GazeMode::HeadVislet:
    case GazeMode::AttentionOnTraffic:
      return 2;
    case GazeMode::GazeEvents:
      return 3;
    case GazeMode::AttentionDistribution:
      return 4;
    case GazeMode::None:
      return 0;
  }
  return 0;
}

inline std::string to_string(GazeMode m) {
  switch (m) {
    case GazeMode::EyeInSpace: return "eye-in-space";
    case GazeMode::EyeInWalking: return "eye-in-walking";
    case GazeMode::EyeVislet: return "eye-vislet";
    case GazeMode::EyePlusHead: return "eye-plus-head";
    case GazeMode::HeadInSpace: return "head-in-space";
    case GazeMode::HeadInWalking: return "head-in-walking";
    case GazeMode::HeadVislet: return "head-vislet";
    case GazeMode::GazeEvents: return "gaze-events";
    case GazeMode::AttentionPresence: return "attention-presence";
    case GazeMode::AttentionOnTraffic: return "attention-on-traffic";
    case GazeMode::AttentionDistribution: return "attention-distribution";
    case GazeMode::None: return "none";
  }
  return "none";
}

inline GazeMode parse_gaze_mode(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(GazeMode::None); ++i) {
    const auto m = static_cast<GazeMode>(i);
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown gaze mode: " + s);
}

inline std::vector<GazeMode> all_gaze_modes() {
  std::vector<GazeMode> out;
  for (int i = 0; i <= static_cast<int>(GazeMode::None); ++i) {
    out.push_back(static_cast<GazeMode>(i));
  }
  return out;
}

enum class Traffic : int { Single = 0, TwoGap3, TwoGap5 };

inline double traffic_gap_seconds(Traffic t) {
  switch (t) {
    case Traffic::Single: return 0.0;
    case Traffic::TwoGap3: return 3.0;
    case Traffic::TwoGap5: return 5.0;
  }
  return 0.0;
}

inline std::string to_string(Traffic t) {
  switch (t) {
    case Traffic::Single: return "single";
    case Traffic::TwoGap3: return "two_gap3";
    case Traffic::TwoGap5: return "two_gap5";
  }
  return "single";
}

inline Traffic parse_traffic(const std::string& s) {
  if (s == "single") return Traffic::Single;
  if (s == "two_gap3") return Traffic::TwoGap3;
  if (s == "two_gap5") return Traffic::TwoGap5;
  throw std::invalid_argument("unknown traffic token: " + s);
}

// Static experimental variables of one scenario.
struct ScenarioContext {
  int yielding = 0;     // {0, 1}
  int ehmi = 0;         // {0, 1}
  int angle_deg = 90;   // {45, 90, 135}
  Traffic traffic = Traffic::Single;

  void validate() const {
    if (yielding != 0 && yielding != 1) throw std::invalid_argument("ScenarioContext: yielding");
    if (ehmi != 0 && ehmi != 1) throw std::invalid_argument("ScenarioContext: ehmi");
    if (angle_deg != 45 && angle_deg != 90 && angle_deg != 135) {
      throw std::invalid_argument("ScenarioContext: angle must be 45/90/135");
    }
  }
};

constexpr int kContextDim = 8;

// [yielding, ehmi, onehot(angle), onehot(traffic)]
inline std::array<double, kContextDim> context_vector(const ScenarioContext& ctx) {
  ctx.validate();
  std::array<double, kContextDim> v{};
  v[0] = ctx.yielding;
  v[1] = ctx.ehmi;
  v[2] = ctx.angle_deg == 45 ? 1.0 : 0.0;
  v[3] = ctx.angle_deg == 90 ? 1.0 : 0.0;
  v[4] = ctx.angle_deg == 135 ? 1.0 : 0.0;
  v[5] = ctx.traffic == Traffic::Single ? 1.0 : 0.0;
  v[6] = ctx.traffic == Traffic::TwoGap3 ? 1.0 : 0.0;
  v[7] = ctx.traffic == Traffic::TwoGap5 ? 1.0 : 0.0;
  return v;
}

inline std::array<std::string, kContextDim> context_channel_names() {
  return {"yielding", "ehmi", "angle_45", "angle_90", "angle_135",
          "traffic_single", "traffic_gap3", "traffic_gap5"};
}

// Per-frame orientation streams after preprocessing.
struct OrientationStreams {
  std::vector<double> eye_yaw_deg;      // eye-in-space
  std::vector<double> head_yaw_deg;     // head-in-space
  std::vector<double> walking_dir_deg;  // heading of the smoothed velocity
};

// Builds the per-frame gaze vector for an orientation mode (angles in
// degrees, vislets unitless). GazeMode::None yields empty rows.
inline std::vector<std::vector<double>> eye_representation(const OrientationStreams& s,
                                                           GazeMode mode) {
  if (is_semantic_mode(mode)) {
    throw std::invalid_argument("eye_representation: semantic mode passed");
  }
  const std::size_t n = s.eye_yaw_deg.size();
  if (s.head_yaw_deg.size() != n || s.walking_dir_deg.size() != n) {
    throw std::invalid_argument("eye_representation: stream length mismatch");
  }
  std::vector<std::vector<double>> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    switch (mode) {
      case GazeMode::EyeInSpace:
        out[t] = {wrap_angle(s.eye_yaw_deg[t]).deg()};
        break;
      case GazeMode::EyeInWalking:
        out[t] = {wrap_angle(s.eye_yaw_deg[t] - s.walking_dir_deg[t]).deg()};
        break;
      case GazeMode::EyeVislet: {
        const Vislet v = vislet_of(wrap_angle(s.eye_yaw_deg[t]));
        out[t] = {v.cos_component, v.sin_component};
        break;
      }
      case GazeMode::EyePlusHead:
        out[t] = {wrap_angle(s.head_yaw_deg[t]).deg(),
                  wrap_angle(s.eye_yaw_deg[t] - s.head_yaw_deg[t]).deg()};
        break;
      case GazeMode::HeadInSpace:
        out[t] = {wrap_angle(s.head_yaw_deg[t]).deg()};
        break;
      case GazeMode::HeadInWalking:
        out[t] = {wrap_angle(s.head_yaw_deg[t] - s.walking_dir_deg[t]).deg()};
        break;
      case GazeMode::HeadVislet: {
        const Vislet v = vislet_of(wrap_angle(s.head_yaw_deg[t]));
        out[t] = {v.cos_component, v.sin_component};
        break;
      }
      case GazeMode::None:
        out[t] = {};
        break;
      default:
        break;
    }
  }
  return out;
}

// One-hot style encodings of cleaned fixation labels. Saccade/noise frames
// encode all-zeros except in GazeEvents, which partitions every frame.
inline std::vector<std::vector<double>> semantic_encoding(const SemanticLabelSeries& series,
                                                          GazeMode mode) {
  if (!is_semantic_mode(mode)) {
    throw std::invalid_argument("semantic_encoding: orientation mode passed");
  }
  std::vector<std::vector<double>> out(series.labels.size());
  for (std::size_t t = 0; t < series.labels.size(); ++t) {
    const SemanticLabel l = series.labels[t];
    switch (mode) {
      case GazeMode::GazeEvents:
        out[t] = {is_fixation(l) ? 1.0 : 0.0, l == SemanticLabel::Saccade ? 1.0 : 0.0,
                  l == SemanticLabel::Noise ? 1.0 : 0.0};
        break;
      case GazeMode::AttentionPresence:
        out[t] = {l == SemanticLabel::Leader || l == SemanticLabel::Follower ||
                          l == SemanticLabel::Goal
                      ? 1.0
                      : 0.0};
        break;
      case GazeMode::AttentionOnTraffic:
        out[t] = {l == SemanticLabel::Leader || l == SemanticLabel::Follower ? 1.0 : 0.0,
                  l == SemanticLabel::Goal || l == SemanticLabel::Environment ? 1.0 : 0.0};
        break;
      case GazeMode::AttentionDistribution:
        out[t] = {l == SemanticLabel::Leader ? 1.0 : 0.0, l == SemanticLabel::Follower ? 1.0 : 0.0,
                  l == SemanticLabel::Goal ? 1.0 : 0.0,
                  l == SemanticLabel::Environment ? 1.0 : 0.0};
        break;
      default:
        break;
    }
  }
  return out;
}

struct ShuttleTrack {
  std::vector<Point2> positions;
  std::vector<std::uint8_t> present;  // per frame
};

struct DistanceFrame {
  double d1 = kAbsentDistance;
  double present1 = 0.0;
  double d2 = kAbsentDistance;
  double present2 = 0.0;
};

// Euclidean pedestrian-to-shuttle distances, leader in slot 1; absent
// shuttles report (30, 0) and distances clamp at 30 m.
inline std::vector<DistanceFrame> distance_features(const std::vector<Point2>& ped,
                                                    const std::vector<ShuttleTrack>& shuttles) {
  std::vector<DistanceFrame> out(ped.size());
  for (std::size_t t = 0; t < ped.size(); ++t) {
    DistanceFrame f;
    for (std::size_t s = 0; s < shuttles.size() && s < 2; ++s) {
      const auto& track = shuttles[s];
      double d = kAbsentDistance;
      double present = 0.0;
      if (t < track.positions.size() && t < track.present.size() && track.present[t]) {
        d = std::min((track.positions[t] - ped[t]).norm(), kAbsentDistance);
        present = 1.0;
      }
      if (s == 0) {
        f.d1 = d;
        f.present1 = present;
      } else {
        f.d2 = d;
        f.present2 = present;
      }
    }
    out[t] = f;
  }
  return out;
}

}  // namespace gazex
