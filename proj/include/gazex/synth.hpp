#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gazex/features.hpp"
#include "gazex/geometry.hpp"
#include "gazex/rng.hpp"
#include "gazex/trial.hpp"

namespace gazex {

// Stage geometry and shuttle program constants.
struct ScenarioGeometry {
  Point2 ped_start{-5.0, 0.0};
  Point2 ped_goal{5.0, 0.0};
  Point2 conflict{0.0, 0.0};
  double shuttle_start_dist = 17.3;     // m from conflict at t = 0
  double shuttle_speed = 15.0 / 3.6;    // 15 km/h
  double detect_dist = 12.0;            // yield deceleration onset
  double stop_clearance = 3.0;          // yield stop distance from conflict
  double red_ehmi_dist = 10.42;
  double green_ehmi_dist = 7.96;
  double shuttle_length = 3.0;
  double shuttle_width = 1.6;
  double goal_radius = 0.3;
  double wait_setback = 1.5;  // wait point distance from the path edge

  // Shuttle travel direction for an approach angle; the shuttle approaches
  // from the pedestrian's left (+y) and crosses the task axis at the origin.
  Point2 shuttle_dir(int angle_deg) const {
    const double a = deg2rad(double(angle_deg));
    return {std::cos(a), -std::sin(a)};
  }
};

enum class EhmiState : int { Off = 0, Red, Green };

struct ShuttleState {
  bool exists = false;
  Point2 pos{0.0, 0.0};
  double speed = 0.0;
  EhmiState ehmi = EhmiState::Off;
  double dist_to_conflict = 0.0;  // signed; negative once past the conflict
};

namespace detail {

// Signed distance-to-conflict and speed of the leader profile at time t
// (linear extrapolation for t < 0 so a delayed copy yields the follower).
inline std::pair<double, double> leader_profile(bool yielding, const ScenarioGeometry& g,
                                                double t) {
  const double v = g.shuttle_speed;
  if (!yielding) return {g.shuttle_start_dist - v * t, v};
  const double t1 = (g.shuttle_start_dist - g.detect_dist) / v;
  if (t <= t1) return {g.shuttle_start_dist - v * t, v};
  const double brake_run = g.detect_dist - g.stop_clearance;
  const double a = v * v / (2.0 * brake_run);
  const double tau = t - t1;
  const double tau_stop = v / a;
  if (tau >= tau_stop) return {g.stop_clearance, 0.0};
  return {g.detect_dist - (v * tau - 0.5 * a * tau * tau), v - a * tau};
}

inline EhmiState ehmi_state(const ScenarioContext& ctx, const ScenarioGeometry& g, double dist) {
  if (!ctx.ehmi) return EhmiState::Off;
  if (ctx.yielding) return dist <= g.green_ehmi_dist ? EhmiState::Green : EhmiState::Off;
  return dist <= g.red_ehmi_dist ? EhmiState::Red : EhmiState::Off;
}

}  // namespace detail

// Positions, speeds and eHMI states of both shuttle slots at time t. The
// follower repeats the leader's profile delayed by the traffic headway.
inline std::array<ShuttleState, 2> shuttle_kinematics(const ScenarioContext& ctx,
                                                      const ScenarioGeometry& g, double t) {
  if (t < 0.0) throw std::invalid_argument("shuttle_kinematics: t must be >= 0");
  std::array<ShuttleState, 2> out;
  const Point2 dir = g.shuttle_dir(ctx.angle_deg);
  const double gap = traffic_gap_seconds(ctx.traffic);
  for (int s = 0; s < 2; ++s) {
    if (s == 1 && ctx.traffic == Traffic::Single) break;
    const auto [dist, speed] = detail::leader_profile(ctx.yielding != 0, g, s == 0 ? t : t - gap);
    out[s].exists = true;
    out[s].dist_to_conflict = dist;
    out[s].speed = speed;
    out[s].pos = g.conflict - dir * dist;
    out[s].ehmi = detail::ehmi_state(ctx, g, dist);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Latin hypercube scenario sampling: every factor level appears as evenly as
// possible across the n draws; the pairing is randomized by the seed.

inline std::vector<ScenarioContext> lhs_sample(int n, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("lhs_sample: n must be positive");

  auto stratified = [n](int levels, Rng& rng) {
    std::vector<int> order(levels);
    for (int l = 0; l < levels; ++l) order[l] = l;
    rng.shuffle(order);  // unbias which levels receive the remainder
    std::vector<int> column;
    column.reserve(n);
    for (int i = 0; i < levels; ++i) {
      const int count = n / levels + (i < n % levels ? 1 : 0);
      for (int k = 0; k < count; ++k) column.push_back(order[i]);
    }
    rng.shuffle(column);
    return column;
  };

  Rng rng_y(derive_seed(seed, 0x1b5, 0));
  Rng rng_e(derive_seed(seed, 0x1b5, 1));
  Rng rng_a(derive_seed(seed, 0x1b5, 2));
  Rng rng_t(derive_seed(seed, 0x1b5, 3));
  const auto ys = stratified(2, rng_y);
  const auto es = stratified(2, rng_e);
  const auto as = stratified(3, rng_a);
  const auto ts = stratified(3, rng_t);

  static constexpr std::array<int, 3> kAngles = {45, 90, 135};
  std::vector<ScenarioContext> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].yielding = ys[i];
    out[i].ehmi = es[i];
    out[i].angle_deg = kAngles[as[i]];
    out[i].traffic = static_cast<Traffic>(ts[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gap-acceptance pedestrian agent

struct AgentParams {
  double preferred_speed = 1.3;  // m/s, +/- 0.2 per participant
  double critical_gap = 2.5;     // s, +/- 0.5 per participant
  double accel_limit = 1.0;      // m/s^2
  double max_speed = 2.0;        // m/s
  bool retreat_prone = false;    // occasional step-back under pressure
};

inline AgentParams draw_agent_params(Rng& rng) {
  AgentParams p;
  p.preferred_speed = 1.3 + rng.uniform(-0.2, 0.2);
  p.critical_gap = 2.5 + rng.uniform(-0.5, 0.5);
  p.retreat_prone = rng.uniform() < 0.35;
  return p;
}

enum class AgentPhase : int { Approach = 0, Wait, Retreat, Cross, Done };

struct PedestrianAgentState {
  Point2 pos{0.0, 0.0};
  Point2 vel{0.0, 0.0};
  AgentPhase phase = AgentPhase::Approach;
  double speed_wobble = 0.0;  // OU perturbation of the target speed
  double lat_target = 0.0;    // OU lateral drift target
  bool retreated = false;
};

namespace detail {

struct CorridorX {
  double entry;  // x where the walking line enters the shuttle corridor
  double exit;
  double wait;   // wait point (entry minus the setback)
};

inline CorridorX corridor_x(const ScenarioContext& ctx, const ScenarioGeometry& g) {
  const double sin_a = std::abs(g.shuttle_dir(ctx.angle_deg).y);
  const double half = (g.shuttle_width / 2.0) / std::max(sin_a, 1e-6);
  return {-half, half, -half - g.wait_setback};
}

}  // namespace detail

// One 20 Hz step of the crossing agent. Walks toward the goal, commits to
// crossing only when every approaching shuttle is either committed to yield
// (near-stopped or green eHMI) or beyond the critical time gap; otherwise
// brakes to a wait point short of the path.
inline void pedestrian_agent_step(PedestrianAgentState& s,
                                  const std::array<ShuttleState, 2>& shuttles,
                                  const ScenarioContext& ctx, const ScenarioGeometry& g,
                                  const AgentParams& params, Rng& rng, double dt = kFrameDt) {
  if (s.phase == AgentPhase::Done) return;
  const detail::CorridorX cx = detail::corridor_x(ctx, g);

  bool can_cross = true;
  double min_ttc = std::numeric_limits<double>::infinity();
  for (const auto& sh : shuttles) {
    if (!sh.exists) continue;
    if (sh.dist_to_conflict < -(g.shuttle_length / 2.0 + 0.5)) continue;  // already passed
    if (sh.speed < 0.5 || sh.ehmi == EhmiState::Green) continue;          // committed to yield
    const double ttc = sh.dist_to_conflict > 0.0 ? sh.dist_to_conflict / sh.speed : 0.0;
    min_ttc = std::min(min_ttc, ttc);
    if (ttc <= params.critical_gap) can_cross = false;
  }

  const double x = s.pos.x;
  const double speed_along = s.vel.x;

  // phase bookkeeping
  if (x >= cx.entry) {
    s.phase = AgentPhase::Cross;
  } else if (s.phase == AgentPhase::Retreat) {
    if (x <= cx.wait - 0.6 || min_ttc >= 0.9) {
      s.phase = AgentPhase::Wait;
      s.retreated = true;
    }
  } else if (!can_cross && x >= cx.wait - 0.3 && std::abs(speed_along) < 0.1) {
    s.phase = AgentPhase::Wait;
    if (params.retreat_prone && !s.retreated && min_ttc < 0.9) s.phase = AgentPhase::Retreat;
  } else if (can_cross || x < cx.wait - 0.3) {
    s.phase = AgentPhase::Approach;
  }

  double target = params.preferred_speed + s.speed_wobble;
  if (s.phase == AgentPhase::Retreat) {
    target = -0.35;
  } else if (!can_cross && x < cx.entry) {
    // brake to stop at the wait point
    const double run = cx.wait - x;
    const double allow = run > 0.0 ? std::sqrt(2.0 * params.accel_limit * run) : 0.0;
    target = std::min(target, allow);
  }

  const double dv = std::clamp(target - s.vel.x, -params.accel_limit * dt, params.accel_limit * dt);
  s.vel.x += dv;
  s.vel.y = std::clamp(0.8 * (s.lat_target - s.pos.y), -0.3, 0.3);
  const double speed = s.vel.norm();
  if (speed > params.max_speed) s.vel = s.vel * (params.max_speed / speed);
  s.pos = s.pos + s.vel * dt;

  // gait variability (OU processes): keeps straight walking from being
  // exactly constant-velocity
  const double tau_w = 0.8, sigma_w = 0.06;
  s.speed_wobble += -s.speed_wobble * (dt / tau_w) +
                    sigma_w * std::sqrt(2.0 * dt / tau_w) * rng.normal();
  const double tau_l = 2.0, sigma_l = 0.10;
  s.lat_target += -s.lat_target * (dt / tau_l) + sigma_l * std::sqrt(2.0 * dt / tau_l) * rng.normal();

  if ((s.pos - g.ped_goal).norm() <= g.goal_radius) s.phase = AgentPhase::Done;
}

// ---------------------------------------------------------------------------
// Synthetic gaze

struct GazeSimState {
  SemanticLabel target = SemanticLabel::Goal;
  int dwell_left = 0;
  double eye_yaw = 0.0;
  double head_yaw = 0.0;
  double noise = 0.0;  // OU angular noise, degrees
  Point2 env_point{0.0, 8.0};
  int blink_left = 0;
  double next_blink_t = 0.0;
  bool prev_blinking = false;
  bool switched = false;  // target changed on this frame
};

struct GazeFrame {
  double head_yaw_deg = 0.0;
  double eye_yaw_deg = 0.0;
  bool eye_valid = true;
  SemanticLabel fixation = SemanticLabel::Noise;  // written as 'none' when invalid
};

namespace detail {

inline double bearing_deg(const Point2& from, const Point2& to) {
  return rad2deg(std::atan2(to.y - from.y, to.x - from.x));
}

// Smooth pursuit saturates below the saccade threshold, so detected
// saccades can only occur at fixation-target switches.
constexpr double kPursuitMaxStepDeg = 4.5;  // per frame = 90 deg/s

inline int draw_dwell_frames(Rng& rng) {
  const double p = 0.1;  // mean dwell 0.5 s at 20 Hz
  const double u = rng.uniform();
  const int k = 1 + static_cast<int>(std::floor(std::log(1.0 - u) / std::log(1.0 - p)));
  return std::clamp(k, 1, 60);
}

}  // namespace detail

inline GazeFrame synth_gaze_step(GazeSimState& gs, const Point2& ped_pos,
                                 const std::array<ShuttleState, 2>& shuttles, AgentPhase phase,
                                 const ScenarioGeometry& g, Rng& rng, double t,
                                 double dt = kFrameDt) {
  // blink process; fixation resampling is deferred while the eye is closed
  if (gs.blink_left > 0) {
    --gs.blink_left;
  } else if (t >= gs.next_blink_t) {
    gs.blink_left = 2 + static_cast<int>(rng.below(4));
    gs.next_blink_t = t + 2.0 - std::log(1.0 - rng.uniform()) * 4.0;
  }
  const bool blinking = gs.blink_left > 0;

  gs.switched = false;
  // Switching right at a gap edge would smear the jump across the
  // interpolated gap, so resampling waits for one fully valid frame.
  if (gs.dwell_left <= 0 && !blinking && !gs.prev_blinking) {
    const bool leader_near =
        shuttles[0].exists && (shuttles[0].pos - ped_pos).norm() <= kAbsentDistance;
    const bool follower_near =
        shuttles[1].exists && (shuttles[1].pos - ped_pos).norm() <= kAbsentDistance;
    double w_leader, w_follower, w_goal, w_env;
    if (phase == AgentPhase::Cross || phase == AgentPhase::Done) {
      w_goal = 0.5; w_leader = 0.3; w_follower = 0.1; w_env = 0.1;
    } else {
      w_leader = 0.6; w_follower = 0.15; w_goal = 0.15; w_env = 0.1;
    }
    if (!leader_near) w_leader = 0.0;
    if (!follower_near) w_follower = 0.0;
    const double total = w_leader + w_follower + w_goal + w_env;
    double u = rng.uniform() * total;
    SemanticLabel next = SemanticLabel::Environment;
    if ((u -= w_leader) < 0.0) {
      next = SemanticLabel::Leader;
    } else if ((u -= w_follower) < 0.0) {
      next = SemanticLabel::Follower;
    } else if ((u -= w_goal) < 0.0) {
      next = SemanticLabel::Goal;
    } else {
      next = SemanticLabel::Environment;
      const double psi = rng.uniform(0.0, 360.0);
      gs.env_point = ped_pos + Point2{8.0 * std::cos(deg2rad(psi)), 8.0 * std::sin(deg2rad(psi))};
    }
    gs.switched = next != gs.target;
    gs.target = next;
    gs.dwell_left = detail::draw_dwell_frames(rng);
  }
  --gs.dwell_left;

  Point2 look_at = g.ped_goal;
  switch (gs.target) {
    case SemanticLabel::Leader: look_at = shuttles[0].pos; break;
    case SemanticLabel::Follower: look_at = shuttles[1].pos; break;
    case SemanticLabel::Goal: look_at = g.ped_goal; break;
    default: look_at = gs.env_point; break;
  }

  const double tau_n = 0.3, sigma_n = 1.0;
  gs.noise += -gs.noise * (dt / tau_n) + sigma_n * std::sqrt(2.0 * dt / tau_n) * rng.normal();
  const double desired = detail::bearing_deg(ped_pos, look_at) + gs.noise;
  if (gs.switched) {
    gs.eye_yaw = wrap_angle(desired).deg();
  } else {
    const double step = std::clamp(wrap_angle(desired - gs.eye_yaw).deg(),
                                   -detail::kPursuitMaxStepDeg, detail::kPursuitMaxStepDeg);
    gs.eye_yaw = wrap_angle(gs.eye_yaw + step).deg();
  }
  gs.head_yaw = wrap_angle(gs.head_yaw + wrap_angle(gs.eye_yaw - gs.head_yaw).deg() * (dt / 0.2)).deg();
  gs.prev_blinking = blinking;

  GazeFrame frame;
  frame.head_yaw_deg = gs.head_yaw;
  frame.eye_yaw_deg = gs.eye_yaw;
  frame.eye_valid = !blinking;
  frame.fixation = blinking ? SemanticLabel::Noise : gs.target;
  return frame;
}

// ---------------------------------------------------------------------------
// Trial simulation and dataset generation

struct SimResult {
  Trial trial;
  bool timeout = false;
};

inline SimResult simulate_trial(const ScenarioContext& ctx, const ScenarioGeometry& g,
                                const std::string& trial_id, const std::string& participant_id,
                                const AgentParams& agent, std::uint64_t seed,
                                double max_seconds = 30.0) {
  ctx.validate();
  Rng rng(seed);
  SimResult result;
  Trial& trial = result.trial;
  trial.trial_id = trial_id;
  trial.participant_id = participant_id;
  trial.ctx = ctx;
  trial.start = g.ped_start;
  trial.goal = g.ped_goal;
  trial.shuttles.resize(2);

  PedestrianAgentState state;
  state.pos = g.ped_start;
  GazeSimState gaze;
  gaze.head_yaw = detail::bearing_deg(g.ped_start, g.ped_goal);
  gaze.eye_yaw = gaze.head_yaw;
  gaze.next_blink_t = 2.0 - std::log(1.0 - rng.uniform()) * 4.0;

  const int max_frames = static_cast<int>(std::lround(max_seconds / kFrameDt));
  for (int k = 0; k <= max_frames; ++k) {
    const double t = k * kFrameDt;
    const auto shuttles = shuttle_kinematics(ctx, g, t);
    const GazeFrame gf = synth_gaze_step(gaze, state.pos, shuttles, state.phase, g, rng, t);

    trial.t.push_back(t);
    trial.ped.push_back(state.pos);
    trial.head_yaw_deg.push_back(gf.head_yaw_deg);
    trial.eye_yaw_deg.push_back(gf.eye_yaw_deg);
    trial.eye_valid.push_back(gf.eye_valid ? 1 : 0);
    trial.fixation.push_back(gf.eye_valid ? gf.fixation : SemanticLabel::Noise);
    for (int s = 0; s < 2; ++s) {
      trial.shuttles[s].positions.push_back(shuttles[s].exists ? shuttles[s].pos : Point2{0, 0});
      trial.shuttles[s].present.push_back(shuttles[s].exists ? 1 : 0);
    }

    if (state.phase == AgentPhase::Done) return result;
    pedestrian_agent_step(state, shuttles, ctx, g, agent, rng);
  }
  result.timeout = true;
  return result;
}

struct DatasetSummary {
  std::vector<Trial> trials;
  int n_participants = 0;
  int n_timeouts = 0;
};

// Simulates n_participants x 12 LHS scenarios; timeout trials are dropped.
inline DatasetSummary generate_dataset(int n_participants, std::uint64_t seed,
                                       const ScenarioGeometry& g = {}) {
  if (n_participants < 1) throw std::invalid_argument("generate_dataset: need >= 1 participant");
  DatasetSummary out;
  out.n_participants = n_participants;
  char buf[64];
  for (int p = 0; p < n_participants; ++p) {
    Rng agent_rng(derive_seed(seed, 0xA6E2, p));
    const AgentParams agent = draw_agent_params(agent_rng);
    const auto scenarios = lhs_sample(12, derive_seed(seed, 0x157A, p));
    std::snprintf(buf, sizeof(buf), "p%03d", p);
    const std::string pid = buf;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s_t%02d", pid.c_str(), static_cast<int>(i));
      SimResult sim = simulate_trial(scenarios[i], g, buf, pid, agent,
                                     derive_seed(seed, 0x731A1, p, i));
      if (sim.timeout) {
        ++out.n_timeouts;
      } else {
        out.trials.push_back(std::move(sim.trial));
      }
    }
  }
  return out;
}

// Writes dir/trials/<trial_id>.csv plus dir/scenarios.csv.
inline void write_dataset(const std::string& dir, const DatasetSummary& data) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "trials");
  std::vector<std::pair<std::string, ScenarioContext>> rows;
  for (const auto& trial : data.trials) {
    write_trial_csv((fs::path(dir) / "trials" / (trial.trial_id + ".csv")).string(), trial);
    rows.emplace_back(trial.trial_id, trial.ctx);
  }
  write_scenarios_csv((fs::path(dir) / "scenarios.csv").string(), rows);
}

}  // namespace gazex
