#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/csv.hpp"
#include "gazex/features.hpp"
#include "gazex/geometry.hpp"
#include "gazex/preproc.hpp"

namespace gazex {

// One pedestrian-shuttle encounter, column oriented, sampled at 20 Hz.
struct Trial {
  std::string trial_id;
  std::string participant_id;
  ScenarioContext ctx;

  std::vector<double> t;  // s, strictly increasing at kFrameDt
  std::vector<Point2> ped;
  std::vector<double> head_yaw_deg;
  std::vector<double> eye_yaw_deg;
  std::vector<std::uint8_t> eye_valid;
  std::vector<SemanticLabel> fixation;  // raw labels; 'none' ingested as Noise
  std::vector<ShuttleTrack> shuttles;   // [leader, follower]

  Point2 start;  // first recorded position unless set explicitly
  Point2 goal;   // last recorded position unless set explicitly

  std::size_t size() const { return t.size(); }
};

inline const char* fixation_token(SemanticLabel l) {
  switch (l) {
    case SemanticLabel::Leader: return "leader";
    case SemanticLabel::Follower: return "follower";
    case SemanticLabel::Goal: return "goal";
    case SemanticLabel::Environment: return "environment";
    default: return "none";
  }
}

inline const std::vector<std::string>& trial_csv_header() {
  static const std::vector<std::string> h = {
      "trial_id", "participant_id", "t", "ped_x", "ped_y", "head_yaw_deg", "eye_yaw_deg",
      "eye_valid", "fixation_target", "s1_x", "s1_y", "s1_present", "s2_x", "s2_y", "s2_present"};
  return h;
}

inline Trial parse_trial_csv(const std::string& path) {
  CsvReader reader(path);
  std::vector<std::string> fields;
  if (!reader.next(fields)) reader.fail("missing header");
  if (fields != trial_csv_header()) reader.fail("unexpected header");

  Trial trial;
  trial.shuttles.resize(2);
  while (reader.next(fields)) {
    if (fields.size() != trial_csv_header().size()) {
      reader.fail("expected " + std::to_string(trial_csv_header().size()) + " columns, got " +
                  std::to_string(fields.size()));
    }
    if (trial.t.empty()) {
      trial.trial_id = fields[0];
      trial.participant_id = fields[1];
    } else if (fields[0] != trial.trial_id || fields[1] != trial.participant_id) {
      reader.fail("trial/participant id changed mid-file");
    }

    const double ts = reader.to_double(fields[2]);
    if (!trial.t.empty()) {
      const double dt = ts - trial.t.back();
      if (dt <= 0.0) reader.fail("timestamps not strictly increasing");
      if (std::abs(dt - kFrameDt) > 1e-6) reader.fail("timestamp step is not 0.05 s");
    }
    trial.t.push_back(ts);
    trial.ped.push_back({reader.to_double(fields[3]), reader.to_double(fields[4])});
    trial.head_yaw_deg.push_back(reader.to_double(fields[5]));
    trial.eye_yaw_deg.push_back(reader.to_double(fields[6]));

    const int valid = reader.to_int(fields[7]);
    if (valid != 0 && valid != 1) reader.fail("eye_valid must be 0 or 1");
    trial.eye_valid.push_back(static_cast<std::uint8_t>(valid));

    const std::string& tok = fields[8];
    if (tok == "leader") trial.fixation.push_back(SemanticLabel::Leader);
    else if (tok == "follower") trial.fixation.push_back(SemanticLabel::Follower);
    else if (tok == "goal") trial.fixation.push_back(SemanticLabel::Goal);
    else if (tok == "environment") trial.fixation.push_back(SemanticLabel::Environment);
    else if (tok == "none") trial.fixation.push_back(SemanticLabel::Noise);
    else reader.fail("unknown fixation_target token '" + tok + "'");

    for (int s = 0; s < 2; ++s) {
      const int base = 9 + 3 * s;
      const Point2 pos{reader.to_double(fields[base]), reader.to_double(fields[base + 1])};
      const int present = reader.to_int(fields[base + 2]);
      if (present != 0 && present != 1) reader.fail("present flag must be 0 or 1");
      trial.shuttles[s].positions.push_back(pos);
      trial.shuttles[s].present.push_back(static_cast<std::uint8_t>(present));
    }
  }
  if (trial.t.empty()) reader.fail("no data rows");
  trial.start = trial.ped.front();
  trial.goal = trial.ped.back();
  return trial;
}

inline void write_trial_csv(const std::string& path, const Trial& trial) {
  CsvWriter w(path);
  w.row(trial_csv_header());
  for (std::size_t i = 0; i < trial.size(); ++i) {
    w.row({trial.trial_id, trial.participant_id, format_double(trial.t[i]),
           format_double(trial.ped[i].x), format_double(trial.ped[i].y),
           format_double(trial.head_yaw_deg[i]), format_double(trial.eye_yaw_deg[i]),
           std::to_string(int(trial.eye_valid[i])), fixation_token(trial.fixation[i]),
           format_double(trial.shuttles[0].positions[i].x),
           format_double(trial.shuttles[0].positions[i].y),
           std::to_string(int(trial.shuttles[0].present[i])),
           format_double(trial.shuttles[1].positions[i].x),
           format_double(trial.shuttles[1].positions[i].y),
           std::to_string(int(trial.shuttles[1].present[i]))});
  }
  if (!w.good()) throw std::runtime_error(path + ": write failed");
}

inline std::map<std::string, ScenarioContext> load_scenarios_csv(const std::string& path) {
  CsvReader reader(path);
  std::vector<std::string> fields;
  const std::vector<std::string> header = {"trial_id", "yielding", "ehmi", "angle_deg", "traffic"};
  if (!reader.next(fields)) reader.fail("missing header");
  if (fields != header) reader.fail("unexpected header");

  std::map<std::string, ScenarioContext> out;
  while (reader.next(fields)) {
    if (fields.size() != header.size()) reader.fail("expected 5 columns");
    ScenarioContext ctx;
    ctx.yielding = reader.to_int(fields[1]);
    ctx.ehmi = reader.to_int(fields[2]);
    ctx.angle_deg = reader.to_int(fields[3]);
    try {
      ctx.traffic = parse_traffic(fields[4]);
      ctx.validate();
    } catch (const std::invalid_argument& e) {
      reader.fail(e.what());
    }
    if (!out.emplace(fields[0], ctx).second) reader.fail("duplicate trial_id " + fields[0]);
  }
  return out;
}

inline void write_scenarios_csv(const std::string& path,
                                const std::vector<std::pair<std::string, ScenarioContext>>& rows) {
  CsvWriter w(path);
  w.row({"trial_id", "yielding", "ehmi", "angle_deg", "traffic"});
  for (const auto& [id, ctx] : rows) {
    w.row({id, std::to_string(ctx.yielding), std::to_string(ctx.ehmi),
           std::to_string(ctx.angle_deg), to_string(ctx.traffic)});
  }
  if (!w.good()) throw std::runtime_error(path + ": write failed");
}

// Loads every trial under dir/trials/*.csv (sorted by filename) and joins
// the scenario table from dir/scenarios.csv.
inline std::vector<Trial> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path trials_dir = fs::path(dir) / "trials";
  if (!fs::is_directory(trials_dir)) {
    throw std::runtime_error(trials_dir.string() + ": not a directory");
  }
  const auto scenarios = load_scenarios_csv((fs::path(dir) / "scenarios.csv").string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(trials_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<Trial> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    Trial trial = parse_trial_csv(f.string());
    const auto it = scenarios.find(trial.trial_id);
    if (it == scenarios.end()) {
      throw std::runtime_error(f.string() + ": trial_id '" + trial.trial_id +
                               "' missing from scenarios.csv");
    }
    trial.ctx = it->second;
    out.push_back(std::move(trial));
  }
  return out;
}

}  // namespace gazex
