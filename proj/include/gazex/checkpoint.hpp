#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazex/dataset.hpp"
#include "gazex/net.hpp"

namespace gazex {

// Little-endian binary checkpoint: magic, version, model config, split seed,
// normalizer statistics, then every parameter tensor as raw IEEE-754 bytes.
// Round-trips bit-exactly.
constexpr char kCheckpointMagic[8] = {'G', 'Z', 'X', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  Normalizer normalizer;
  std::uint64_t split_seed = 0;
};

namespace detail {

inline void write_raw(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  write_raw(os, &v, sizeof(T));
}

inline void write_vec(std::ostream& os, const Eigen::VectorXd& v) {
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  write_raw(os, v.data(), sizeof(double) * v.size());
}

inline void read_raw(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  read_raw(is, &v, sizeof(T));
  return v;
}

inline Eigen::VectorXd read_vec(std::istream& is) {
  const auto n = read_pod<std::uint64_t>(is);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  read_raw(is, v.data(), sizeof(double) * n);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  detail::write_raw(os, kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod<std::uint32_t>(os, kCheckpointVersion);

  const ModelConfig& cfg = ckpt.params.config;
  detail::write_pod<std::int32_t>(os, static_cast<std::int32_t>(cfg.gaze_mode));
  detail::write_pod<std::uint8_t>(os, cfg.include_context ? 1 : 0);
  detail::write_pod<std::int32_t>(os, cfg.t_past);
  detail::write_pod<std::int32_t>(os, cfg.t_future);
  detail::write_pod<std::int32_t>(os, cfg.hidden_motion);
  detail::write_pod<std::int32_t>(os, cfg.hidden_dist);
  detail::write_pod<std::int32_t>(os, cfg.hidden_gaze);
  detail::write_pod<std::int32_t>(os, cfg.hidden_dense);
  detail::write_pod<std::uint64_t>(os, ckpt.split_seed);

  const Normalizer& n = ckpt.normalizer;
  detail::write_vec(os, n.motion_mean);
  detail::write_vec(os, n.motion_std);
  detail::write_vec(os, n.dist_mean);
  detail::write_vec(os, n.dist_std);
  detail::write_vec(os, n.gaze_mean);
  detail::write_vec(os, n.gaze_std);
  detail::write_vec(os, n.delta_mean);
  detail::write_vec(os, n.delta_std);

  auto tensors = collect_tensors(const_cast<ModelParams&>(ckpt.params));
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(t.size));
    detail::write_raw(os, t.data, sizeof(double) * t.size);
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  char magic[8];
  detail::read_raw(is, magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path + ": not a checkpoint file");
  }
  const auto version = detail::read_pod<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version");
  }

  ModelConfig cfg;
  cfg.gaze_mode = static_cast<GazeMode>(detail::read_pod<std::int32_t>(is));
  cfg.include_context = detail::read_pod<std::uint8_t>(is) != 0;
  cfg.t_past = detail::read_pod<std::int32_t>(is);
  cfg.t_future = detail::read_pod<std::int32_t>(is);
  cfg.hidden_motion = detail::read_pod<std::int32_t>(is);
  cfg.hidden_dist = detail::read_pod<std::int32_t>(is);
  cfg.hidden_gaze = detail::read_pod<std::int32_t>(is);
  cfg.hidden_dense = detail::read_pod<std::int32_t>(is);
  cfg.validate();

  Checkpoint ckpt;
  ckpt.split_seed = detail::read_pod<std::uint64_t>(is);
  ckpt.normalizer.motion_mean = detail::read_vec(is);
  ckpt.normalizer.motion_std = detail::read_vec(is);
  ckpt.normalizer.dist_mean = detail::read_vec(is);
  ckpt.normalizer.dist_std = detail::read_vec(is);
  ckpt.normalizer.gaze_mean = detail::read_vec(is);
  ckpt.normalizer.gaze_std = detail::read_vec(is);
  ckpt.normalizer.delta_mean = detail::read_vec(is);
  ckpt.normalizer.delta_std = detail::read_vec(is);

  ckpt.params = init_params(cfg, 0);  // shapes only; data overwritten below
  auto tensors = collect_tensors(ckpt.params);
  const auto count = detail::read_pod<std::uint32_t>(is);
  if (count != tensors.size()) throw std::runtime_error(path + ": tensor count mismatch");
  for (auto& t : tensors) {
    const auto n = detail::read_pod<std::uint64_t>(is);
    if (static_cast<Eigen::Index>(n) != t.size) {
      throw std::runtime_error(path + ": tensor size mismatch for " + t.name);
    }
    detail::read_raw(is, t.data, sizeof(double) * t.size);
  }
  return ckpt;
}

}  // namespace gazex
