#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/csv.hpp"
#include "gazex/dataset.hpp"
#include "gazex/net.hpp"
#include "gazex/rng.hpp"

namespace gazex {

using Trajectory = Eigen::MatrixXd;  // t_future x 2 absolute positions

// Mean Euclidean error over all samples and future steps, in centimeters.
inline double ade(const std::vector<Trajectory>& pred, const std::vector<Trajectory>& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw std::invalid_argument("ade: size mismatch or empty input");
  }
  double total = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].rows() != gt[i].rows()) throw std::invalid_argument("ade: length mismatch");
    total += (pred[i] - gt[i]).rowwise().norm().sum();
    count += pred[i].rows();
  }
  return total / double(count) * 100.0;
}

// Mean Euclidean error of the final step only, in centimeters.
inline double fde(const std::vector<Trajectory>& pred, const std::vector<Trajectory>& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw std::invalid_argument("fde: size mismatch or empty input");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].rows() != gt[i].rows()) throw std::invalid_argument("fde: length mismatch");
    total += (pred[i].bottomRows(1) - gt[i].bottomRows(1)).norm();
  }
  return total / double(pred.size()) * 100.0;
}

constexpr std::array<int, 8> kReportHorizons = {5, 10, 15, 20, 25, 30, 35, 40};

struct HorizonReport {
  std::array<double, kReportHorizons.size()> horizon_cm{};
  double ade_cm = 0.0;
  double fde_cm = 0.0;  // equals the horizon-40 entry
  std::string label;
};

struct EvalMode {
  bool stochastic = false;
  int k = 20;
  std::uint64_t seed = 0;

  static EvalMode mean() { return {}; }
  static EvalMode min_k(int k, std::uint64_t seed) { return {true, k, seed}; }
};

namespace detail {

inline void accumulate_report(HorizonReport& r, const Trajectory& pred, const Trajectory& gt) {
  for (std::size_t h = 0; h < kReportHorizons.size(); ++h) {
    const int step = kReportHorizons[h] - 1;
    r.horizon_cm[h] += (pred.row(step) - gt.row(step)).norm();
  }
  r.ade_cm += (pred - gt).rowwise().norm().mean();
}

}  // namespace detail

// Displacement error at each horizon over the dataset, for mean prediction
// or for the best-of-k sampled trajectory (selected by per-sample ADE,
// with per-sample RNG streams derived from the seed and sample index).
inline HorizonReport horizon_report(const ModelParams& params, const Normalizer& norm,
                                    const std::vector<Sample>& raw_samples, const EvalMode& mode) {
  if (raw_samples.empty()) throw std::invalid_argument("horizon_report: empty dataset");
  HorizonReport report;
  for (std::size_t idx = 0; idx < raw_samples.size(); ++idx) {
    const Sample& raw = raw_samples[idx];
    const Sample normalized = apply_normalizer(norm, raw);
    const Trajectory gt = sample_future_positions(raw);

    if (!mode.stochastic) {
      detail::accumulate_report(report, predict_mean(params, norm, normalized), gt);
    } else {
      Rng rng(derive_seed(mode.seed, 0xE7A1, idx));
      const auto draws = predict_samples(params, norm, normalized, mode.k, rng);
      std::size_t best = 0;
      double best_ade = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < draws.size(); ++j) {
        const double a = (draws[j] - gt).rowwise().norm().mean();
        if (a < best_ade) {
          best_ade = a;
          best = j;
        }
      }
      detail::accumulate_report(report, draws[best], gt);
    }
  }
  const double n = double(raw_samples.size());
  for (auto& h : report.horizon_cm) h = h / n * 100.0;
  report.ade_cm = report.ade_cm / n * 100.0;
  report.fde_cm = report.horizon_cm.back();
  return report;
}

inline HorizonReport min_k_eval(const ModelParams& params, const Normalizer& norm,
                                const std::vector<Sample>& raw_samples, int k = 20,
                                std::uint64_t seed = 0) {
  if (k < 1) throw std::invalid_argument("min_k_eval: k must be >= 1");
  return horizon_report(params, norm, raw_samples, EvalMode::min_k(k, seed));
}

// Table layout: one row per horizon plus FDE and ADE, one column per report.
inline void write_horizon_csv(const std::string& path, const std::vector<HorizonReport>& reports) {
  CsvWriter w(path);
  std::vector<std::string> header{"horizon"};
  for (const auto& r : reports) header.push_back(r.label.empty() ? "error_cm" : r.label);
  w.row(header);
  for (std::size_t h = 0; h < kReportHorizons.size(); ++h) {
    std::vector<std::string> row{std::to_string(kReportHorizons[h])};
    for (const auto& r : reports) row.push_back(format_double(r.horizon_cm[h]));
    w.row(row);
  }
  std::vector<std::string> fde_row{"FDE"}, ade_row{"ADE"};
  for (const auto& r : reports) {
    fde_row.push_back(format_double(r.fde_cm));
    ade_row.push_back(format_double(r.ade_cm));
  }
  w.row(fde_row);
  w.row(ade_row);
}

}  // namespace gazex
