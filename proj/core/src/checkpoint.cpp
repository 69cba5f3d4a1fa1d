// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "mds/config.hpp"
#include "mds/error.hpp"

namespace fs = std::filesystem;

namespace mds {

namespace {
constexpr char kMagic[8] = {'M', 'D', 'S', 'C', 'K', 'P', 'T', '\x01'};
constexpr std::uint32_t kVersionTag = 1;

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::string get_str(std::istream& is) {
  const std::uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}
}  // namespace

void save_checkpoint(const CheckpointData& ckpt, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  check_data(os.good(), "checkpoint: cannot write " + path.string());

  os.write(kMagic, 8);
  put_u32(os, kVersionTag);
  put_u64(os, ckpt.config_hash);
  put_str(os, ckpt.config_json);
  put_u64(os, static_cast<std::uint64_t>(ckpt.epoch));
  put_u64(os, static_cast<std::uint64_t>(ckpt.step));
  put_u64(os, static_cast<std::uint64_t>(ckpt.adam_t));
  os.write(reinterpret_cast<const char*>(&ckpt.best_val_auc), 8);
  put_str(os, ckpt.rng_state);
  put_u32(os, ckpt.has_visual_stats ? 1 : 0);
  if (ckpt.has_visual_stats) {
    os.write(reinterpret_cast<const char*>(ckpt.visual_stats.mean), 24);
    os.write(reinterpret_cast<const char*>(ckpt.visual_stats.stddev), 24);
  }
  put_u32(os, static_cast<std::uint32_t>(ckpt.blobs.size()));
  for (const auto& [name, blob] : ckpt.blobs) {
    put_str(os, name);
    put_u64(os, blob.size());
    os.write(reinterpret_cast<const char*>(blob.data()),
             static_cast<std::streamsize>(blob.size() * 8));
  }
  check_data(os.good(), "checkpoint: short write to " + path.string());
}

CheckpointData load_checkpoint(const fs::path& path) {
  check_data(fs::exists(path), "checkpoint: file not found: " + path.string());
  std::ifstream is(path, std::ios::binary);
  check_data(is.good(), "checkpoint: cannot open " + path.string());

  char magic[8];
  is.read(magic, 8);
  check_data(is.good() && std::memcmp(magic, kMagic, 8) == 0,
             "checkpoint: bad magic in " + path.string());
  check_data(get_u32(is) == kVersionTag, "checkpoint: unsupported container version");

  CheckpointData ckpt;
  ckpt.config_hash = get_u64(is);
  ckpt.config_json = get_str(is);
  ckpt.epoch = static_cast<int>(get_u64(is));
  ckpt.step = static_cast<std::int64_t>(get_u64(is));
  ckpt.adam_t = static_cast<std::int64_t>(get_u64(is));
  is.read(reinterpret_cast<char*>(&ckpt.best_val_auc), 8);
  ckpt.rng_state = get_str(is);
  if (get_u32(is) != 0) {
    ckpt.has_visual_stats = true;
    is.read(reinterpret_cast<char*>(ckpt.visual_stats.mean), 24);
    is.read(reinterpret_cast<char*>(ckpt.visual_stats.stddev), 24);
  }
  const std::uint32_t n_blobs = get_u32(is);
  for (std::uint32_t i = 0; i < n_blobs; ++i) {
    const std::string name = get_str(is);
    const std::uint64_t count = get_u64(is);
    std::vector<double> blob(count);
    is.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(count * 8));
    ckpt.blobs[name] = std::move(blob);
  }
  check_data(is.good(), "checkpoint: truncated file " + path.string());

  // Hash integrity: the stored configs must hash to the stored value.
  cfg::json j;
  try {
    j = cfg::json::parse(ckpt.config_json);
  } catch (const std::exception& e) {
    throw DataError("checkpoint: corrupt config snapshot: " + std::string(e.what()));
  }
  const auto recomputed =
      cfg::model_config_hash(cfg::feature_from_json(j.at("features")),
                             cfg::stream_from_json(j.at("visual")),
                             cfg::stream_from_json(j.at("audio")),
                             cfg::objective_from_json(j.at("objective")));
  check_data(recomputed == ckpt.config_hash,
             "checkpoint: config-hash mismatch in " + path.string() +
                 " (stored config does not match stored hash)");
  return ckpt;
}

void store_stream_blobs(Stream& stream, CheckpointData& ckpt) {
  for (auto* p : stream.params())
    ckpt.blobs["param/" + p->name] = p->value.storage();
  for (auto* b : stream.buffers())
    ckpt.blobs["buffer/" + b->name] = b->value.storage();
}

void restore_stream_blobs(Stream& stream, const CheckpointData& ckpt) {
  for (auto* p : stream.params()) {
    const auto it = ckpt.blobs.find("param/" + p->name);
    check_data(it != ckpt.blobs.end(), "checkpoint: missing blob for " + p->name);
    check_data(it->second.size() == p->value.storage().size(),
               "checkpoint: blob size mismatch for " + p->name);
    p->value.storage() = it->second;
  }
  for (auto* b : stream.buffers()) {
    const auto it = ckpt.blobs.find("buffer/" + b->name);
    check_data(it != ckpt.blobs.end(), "checkpoint: missing buffer " + b->name);
    check_data(it->second.size() == b->value.storage().size(),
               "checkpoint: buffer size mismatch for " + b->name);
    b->value.storage() = it->second;
  }
}

ModelBundle load_model(const fs::path& checkpoint_path) {
  const CheckpointData ckpt = load_checkpoint(checkpoint_path);
  const cfg::json j = cfg::json::parse(ckpt.config_json);

  ModelBundle bundle;
  bundle.features = cfg::feature_from_json(j.at("features"));
  bundle.visual_cfg = cfg::stream_from_json(j.at("visual"));
  bundle.audio_cfg = cfg::stream_from_json(j.at("audio"));
  bundle.objective = cfg::objective_from_json(j.at("objective"));
  if (j.contains("train")) bundle.train = cfg::train_from_json(j.at("train"));
  bundle.config_hash = ckpt.config_hash;
  bundle.has_visual_stats = ckpt.has_visual_stats;
  bundle.visual_stats = ckpt.visual_stats;

  bundle.visual = build_stream(bundle.visual_cfg, bundle.train.seed);
  bundle.audio = build_stream(bundle.audio_cfg, bundle.train.seed);
  restore_stream_blobs(*bundle.visual, ckpt);
  restore_stream_blobs(*bundle.audio, ckpt);
  return bundle;
}

}  // namespace mds
