#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "gazex/dataset.hpp"
#include "gazex/synth.hpp"

using namespace gazex;

TEST_CASE("lhs_sample stratifies every factor") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ctxs = lhs_sample(12, seed);
    REQUIRE(ctxs.size() == 12);
    std::map<int, int> angles, yields, ehmis, traffics;
    for (const auto& c : ctxs) {
      ++angles[c.angle_deg];
      ++yields[c.yielding];
      ++ehmis[c.ehmi];
      ++traffics[int(c.traffic)];
    }
    CHECK(angles[45] == 4);
    CHECK(angles[90] == 4);
    CHECK(angles[135] == 4);
    CHECK(yields[0] == 6);
    CHECK(yields[1] == 6);
    CHECK(ehmis[0] == 6);
    CHECK(ehmis[1] == 6);
    CHECK(traffics[0] == 4);
    CHECK(traffics[1] == 4);
    CHECK(traffics[2] == 4);
  }
  CHECK_THROWS_AS(lhs_sample(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(lhs_sample(-3, 1), std::invalid_argument);
}

TEST_CASE("the full factor space has 36 scenarios") {
  std::set<std::tuple<int, int, int, int>> combos;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    for (const auto& c : lhs_sample(12, seed)) {
      combos.insert({c.yielding, c.ehmi, c.angle_deg, int(c.traffic)});
    }
  }
  CHECK(combos.size() == 36);
}

TEST_CASE("shuttle kinematics") {
  const ScenarioGeometry g;

  SECTION("leader starts 17.3 m out at 15 km/h") {
    const auto sh = shuttle_kinematics({0, 0, 90, Traffic::Single}, g, 0.0);
    CHECK(sh[0].exists);
    CHECK(sh[0].dist_to_conflict == Catch::Approx(17.3));
    CHECK(sh[0].speed == Catch::Approx(15.0 / 3.6));
    CHECK_FALSE(sh[1].exists);
  }

  SECTION("non-yielding keeps constant speed") {
    const auto sh = shuttle_kinematics({0, 0, 90, Traffic::Single}, g, 1.0);
    CHECK(sh[0].dist_to_conflict == Catch::Approx(17.3 - 15.0 / 3.6).margin(1e-9));
  }

  SECTION("yielding stops exactly at 3 m clearance") {
    const ScenarioContext ctx{1, 0, 90, Traffic::Single};
    const auto late = shuttle_kinematics(ctx, g, 20.0);
    CHECK(late[0].dist_to_conflict == Catch::Approx(3.0));
    CHECK(late[0].speed == 0.0);
    // deceleration magnitude v^2 / (2 * 9)
    const double v = 15.0 / 3.6;
    const double t1 = (17.3 - 12.0) / v;
    const auto a0 = shuttle_kinematics(ctx, g, t1);
    const auto a1 = shuttle_kinematics(ctx, g, t1 + 0.1);
    CHECK((a0[0].speed - a1[0].speed) / 0.1 == Catch::Approx(v * v / 18.0).margin(1e-6));
  }

  SECTION("eHMI states switch on the pinned distances") {
    const ScenarioContext red_ctx{0, 1, 90, Traffic::Single};
    const ScenarioContext green_ctx{1, 1, 90, Traffic::Single};
    const double v = 15.0 / 3.6;
    auto dist_at = [&](const ScenarioContext& c, double t) {
      return shuttle_kinematics(c, g, t)[0];
    };
    // just before/after 10.42 m for the red sign
    const double t_red = (17.3 - 10.42) / v;
    CHECK(dist_at(red_ctx, t_red - 0.05).ehmi == EhmiState::Off);
    CHECK(dist_at(red_ctx, t_red + 0.05).ehmi == EhmiState::Red);
    // green fires once the decelerating shuttle is within 7.96 m
    bool saw_green_transition = false;
    EhmiState prev = EhmiState::Off;
    for (double t = 0.0; t < 10.0; t += 0.05) {
      const auto s = dist_at(green_ctx, t);
      if (prev == EhmiState::Off && s.ehmi == EhmiState::Green) {
        CHECK(s.dist_to_conflict <= 7.96);
        saw_green_transition = true;
      }
      prev = s.ehmi;
    }
    CHECK(saw_green_transition);
    // no eHMI configured: always off
    CHECK(dist_at({0, 0, 90, Traffic::Single}, 3.0).ehmi == EhmiState::Off);
  }

  SECTION("follower trails by exactly the headway") {
    const ScenarioContext ctx{0, 0, 45, Traffic::TwoGap3};
    for (double t : {0.0, 1.0, 2.35, 6.0}) {
      const auto now = shuttle_kinematics(ctx, g, t);
      const auto later = shuttle_kinematics(ctx, g, t + 3.0);
      REQUIRE(now[1].exists);
      CHECK(later[1].pos.x == Catch::Approx(now[0].pos.x).margin(1e-9));
      CHECK(later[1].pos.y == Catch::Approx(now[0].pos.y).margin(1e-9));
    }
  }

  SECTION("position differences match reported speed on constant segments") {
    const ScenarioContext ctx{0, 0, 135, Traffic::Single};
    for (double t = 0.05; t < 8.0; t += 0.05) {
      const auto a = shuttle_kinematics(ctx, g, t - 0.05);
      const auto b = shuttle_kinematics(ctx, g, t);
      const double v_fd = (b[0].pos - a[0].pos).norm() / 0.05;
      CHECK(v_fd == Catch::Approx(b[0].speed).margin(1e-6));
    }
  }

  SECTION("negative time rejected") {
    CHECK_THROWS_AS(shuttle_kinematics({0, 0, 90, Traffic::Single}, g, -0.1),
                    std::invalid_argument);
  }
}

TEST_CASE("agent walks straight to the goal without shuttles") {
  const ScenarioGeometry g;
  const ScenarioContext ctx{0, 0, 90, Traffic::Single};
  AgentParams params;  // defaults: 1.3 m/s
  PedestrianAgentState state;
  state.pos = g.ped_start;
  Rng rng(8);
  std::array<ShuttleState, 2> none{};  // exists = false

  int frames = 0;
  while (state.phase != AgentPhase::Done && frames < 600) {
    pedestrian_agent_step(state, none, ctx, g, params, rng);
    CHECK(state.vel.norm() <= 2.0 + 1e-9);
    ++frames;
  }
  REQUIRE(state.phase == AgentPhase::Done);
  const double seconds = frames * kFrameDt;
  CHECK(seconds > 6.5);  // 10 m at 1.3 m/s plus the acceleration phase
  CHECK(seconds < 10.0);
}

TEST_CASE("agent waits for a threatening shuttle and resumes after it passes") {
  const ScenarioGeometry g;
  const ScenarioContext ctx{0, 0, 90, Traffic::Single};  // non-yielding
  AgentParams params;
  params.critical_gap = 2.5;
  PedestrianAgentState state;
  state.pos = g.ped_start;
  Rng rng(9);

  bool waited = false;
  int frames = 0;
  double t = 0.0;
  while (state.phase != AgentPhase::Done && frames < 600) {
    const auto sh = shuttle_kinematics(ctx, g, t);
    pedestrian_agent_step(state, sh, ctx, g, params, rng);
    if (state.phase == AgentPhase::Wait) waited = true;
    t += kFrameDt;
    ++frames;
  }
  CHECK(waited);
  CHECK(state.phase == AgentPhase::Done);
}

TEST_CASE("synthetic gaze looks only at goal/environment without shuttles") {
  const ScenarioGeometry g;
  GazeSimState gs;
  Rng rng(10);
  std::array<ShuttleState, 2> none{};
  for (int i = 0; i < 400; ++i) {
    const GazeFrame f = synth_gaze_step(gs, {0.0, 0.0}, none, AgentPhase::Approach, g, rng,
                                        i * kFrameDt);
    if (f.eye_valid) {
      CHECK((f.fixation == SemanticLabel::Goal || f.fixation == SemanticLabel::Environment));
    }
  }
}

TEST_CASE("fixed seed reproduces gaze streams") {
  const ScenarioGeometry g;
  const ScenarioContext ctx{1, 1, 90, Traffic::TwoGap5};
  auto run = [&] {
    GazeSimState gs;
    Rng rng(77);
    std::vector<double> eye;
    for (int i = 0; i < 200; ++i) {
      const auto sh = shuttle_kinematics(ctx, g, i * kFrameDt);
      eye.push_back(synth_gaze_step(gs, {-2.0, 0.0}, sh, AgentPhase::Approach, g, rng,
                                    i * kFrameDt)
                        .eye_yaw_deg);
    }
    return eye;
  };
  CHECK(run() == run());
}

TEST_CASE("detected saccades only occur at fixation switches") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto sim = simulate_trial({0, 0, 90, Traffic::TwoGap5}, {}, "t", "p", AgentParams{},
                                    seed);
    REQUIRE(!sim.timeout);
    const ProcessedTrial p = preprocess_trial(sim.trial);
    for (std::size_t t = 1; t < p.size(); ++t) {
      if (p.saccades[t]) {
        // a switch shows up as a change in the recorded fixation stream
        CHECK(sim.trial.fixation[t] != sim.trial.fixation[t - 1]);
      }
    }
  }
}

TEST_CASE("two-shuttle trials carry a follower offset of exactly 60 frames") {
  const auto sim = simulate_trial({0, 0, 90, Traffic::TwoGap3}, {}, "t", "p", AgentParams{}, 5);
  REQUIRE(!sim.timeout);
  const auto& sh = sim.trial.shuttles;
  REQUIRE(sim.trial.size() > 80);
  for (std::size_t k = 60; k < sim.trial.size(); ++k) {
    CHECK(sh[1].positions[k].x == Catch::Approx(sh[0].positions[k - 60].x).margin(1e-9));
    CHECK(sh[1].positions[k].y == Catch::Approx(sh[0].positions[k - 60].y).margin(1e-9));
  }
}

TEST_CASE("generate_dataset is deterministic and sized correctly") {
  const auto a = generate_dataset(2, 123);
  const auto b = generate_dataset(2, 123);
  CHECK(int(a.trials.size()) + a.n_timeouts == 24);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].trial_id == b.trials[i].trial_id);
    CHECK(a.trials[i].ped == b.trials[i].ped);
    CHECK(a.trials[i].eye_yaw_deg == b.trials[i].eye_yaw_deg);
  }
  const auto c = generate_dataset(2, 124);
  bool differs = c.trials.size() != a.trials.size();
  if (!differs) {
    for (std::size_t i = 0; i < a.trials.size() && !differs; ++i) {
      differs = a.trials[i].ped != c.trials[i].ped;
    }
  }
  CHECK(differs);
  CHECK_THROWS_AS(generate_dataset(0, 1), std::invalid_argument);
}

TEST_CASE("yielding shuttles never collide with a compliant agent") {
  // yielding shuttles stop 3 m short of the conflict point; the agent only
  // shares the corridor with shuttles that are stopped or far
  const auto data = generate_dataset(4, 9);
  for (const auto& trial : data.trials) {
    if (!trial.ctx.yielding) continue;
    for (std::size_t i = 0; i < trial.size(); ++i) {
      for (const auto& sh : trial.shuttles) {
        if (!sh.present[i]) continue;
        CHECK((sh.positions[i] - trial.ped[i]).norm() > 0.8);
      }
    }
  }
}
