// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/config.hpp"

#include "mds/error.hpp"
#include "mds/io.hpp"

namespace mds::cfg {

namespace {

json arr3(const std::array<int, 3>& a) { return json::array({a[0], a[1], a[2]}); }

std::array<int, 3> arr3_from(const json& j, const char* what) {
  check_data(j.is_array() && j.size() == 3, std::string("config: ") + what + " must be [t,h,w]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

json to_json(const FeatureConfig& c) {
  return json{{"segment_s", c.segment_s},
              {"n_mfcc", c.n_mfcc},
              {"win_len_s", c.win_len_s},
              {"hop_s", c.hop_s},
              {"n_fft", c.n_fft},
              {"fmin", c.fmin},
              {"fmax", c.fmax},
              {"normalize_visual",
               c.normalize_visual == FeatureConfig::VisualNorm::none ? "none"
                                                                     : "per_channel_standardize"}};
}

FeatureConfig feature_from_json(const json& j) {
  FeatureConfig c;
  c.segment_s = get_or(j, "segment_s", c.segment_s);
  c.n_mfcc = get_or(j, "n_mfcc", c.n_mfcc);
  c.win_len_s = get_or(j, "win_len_s", c.win_len_s);
  c.hop_s = get_or(j, "hop_s", c.hop_s);
  c.n_fft = get_or(j, "n_fft", c.n_fft);
  c.fmin = get_or(j, "fmin", c.fmin);
  c.fmax = get_or(j, "fmax", c.fmax);
  const std::string norm = get_or<std::string>(j, "normalize_visual", "none");
  if (norm == "none")
    c.normalize_visual = FeatureConfig::VisualNorm::none;
  else if (norm == "per_channel_standardize")
    c.normalize_visual = FeatureConfig::VisualNorm::per_channel_standardize;
  else
    throw DataError("config: unknown normalize_visual '" + norm + "'");
  return c;
}

json to_json(const StreamConfig& c) {
  json blocks = json::array();
  for (const auto& b : c.conv_spec)
    blocks.push_back(json{{"out_channels", b.out_channels},
                          {"kernel", arr3(b.kernel)},
                          {"stride", arr3(b.stride)},
                          {"pad", arr3(b.pad)},
                          {"pool", arr3(b.pool)},
                          {"pool_stride", arr3(b.pool_stride)}});
  const char* tail = c.tail == StreamTail::global_avg_pool        ? "global_avg_pool"
                     : c.tail == StreamTail::temporal_avg_flatten ? "temporal_avg_flatten"
                                                                  : "flatten";
  return json{{"kind", c.kind == StreamKind::visual ? "visual" : "audio"},
              {"conv_spec", blocks},
              {"tail", tail},
              {"fc_hidden", c.fc_hidden},
              {"embed_dim", c.embed_dim},
              {"dropout_p", c.dropout_p},
              {"input_shape", c.input_shape}};
}

StreamConfig stream_from_json(const json& j) {
  StreamConfig c;
  const std::string kind = get_or<std::string>(j, "kind", "visual");
  check_data(kind == "visual" || kind == "audio", "config: stream kind must be visual|audio");
  c.kind = kind == "visual" ? StreamKind::visual : StreamKind::audio;
  check_data(j.contains("conv_spec") && j["conv_spec"].is_array(),
             "config: stream needs a conv_spec array");
  for (const auto& bj : j["conv_spec"]) {
    ConvBlockSpec b;
    b.out_channels = bj.at("out_channels").get<std::int64_t>();
    b.kernel = arr3_from(bj.at("kernel"), "kernel");
    if (bj.contains("stride")) b.stride = arr3_from(bj["stride"], "stride");
    if (bj.contains("pad")) b.pad = arr3_from(bj["pad"], "pad");
    if (bj.contains("pool")) b.pool = arr3_from(bj["pool"], "pool");
    if (bj.contains("pool_stride")) b.pool_stride = arr3_from(bj["pool_stride"], "pool_stride");
    c.conv_spec.push_back(b);
  }
  const std::string tail = get_or<std::string>(j, "tail", "global_avg_pool");
  if (tail == "global_avg_pool")
    c.tail = StreamTail::global_avg_pool;
  else if (tail == "temporal_avg_flatten")
    c.tail = StreamTail::temporal_avg_flatten;
  else if (tail == "flatten")
    c.tail = StreamTail::flatten;
  else
    throw DataError("config: unknown stream tail '" + tail + "'");
  c.fc_hidden = get_or<std::int64_t>(j, "fc_hidden", c.fc_hidden);
  c.embed_dim = get_or<std::int64_t>(j, "embed_dim", c.embed_dim);
  c.dropout_p = get_or(j, "dropout_p", c.dropout_p);
  check_data(j.contains("input_shape"), "config: stream needs input_shape");
  c.input_shape = j["input_shape"].get<std::vector<std::int64_t>>();
  return c;
}

json to_json(const ObjectiveConfig& c) {
  return json{{"margin", c.margin},
              {"lambda1", c.lambda1},
              {"lambda2", c.lambda2},
              {"lambda3", c.lambda3}};
}

ObjectiveConfig objective_from_json(const json& j) {
  ObjectiveConfig c;
  c.margin = get_or(j, "margin", c.margin);
  c.lambda1 = get_or(j, "lambda1", c.lambda1);
  c.lambda2 = get_or(j, "lambda2", c.lambda2);
  c.lambda3 = get_or(j, "lambda3", c.lambda3);
  return c;
}

json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"seed", c.seed},
              {"objective", to_json(c.objective)},
              {"eval_every", c.eval_every},
              {"early_stop_patience", c.early_stop_patience},
              {"class_weighting", c.class_weighting}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.beta1 = get_or(j, "beta1", c.beta1);
  c.beta2 = get_or(j, "beta2", c.beta2);
  c.adam_eps = get_or(j, "adam_eps", c.adam_eps);
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("objective")) c.objective = objective_from_json(j["objective"]);
  c.eval_every = get_or(j, "eval_every", c.eval_every);
  c.early_stop_patience = get_or(j, "early_stop_patience", c.early_stop_patience);
  c.class_weighting = get_or(j, "class_weighting", c.class_weighting);
  return c;
}

json to_json(const SynthConfig& c) {
  json modes = json::array();
  for (auto m : c.fake_modes) modes.push_back(to_string(m));
  return json{{"n_real", c.n_real},
              {"n_fake", c.n_fake},
              {"duration_s", c.duration_s},
              {"fps", c.fps},
              {"sample_rate", c.sample_rate},
              {"frame_h", c.frame_h},
              {"frame_w", c.frame_w},
              {"fake_modes", modes},
              {"shift_min_s", c.shift_min_s},
              {"noise_level", c.noise_level},
              {"artifact_level", c.artifact_level},
              {"seed", c.seed}};
}

SynthConfig synth_from_json(const json& j) {
  SynthConfig c;
  c.n_real = get_or(j, "n_real", c.n_real);
  c.n_fake = get_or(j, "n_fake", c.n_fake);
  c.duration_s = get_or(j, "duration_s", c.duration_s);
  c.fps = get_or(j, "fps", c.fps);
  c.sample_rate = get_or(j, "sample_rate", c.sample_rate);
  c.frame_h = get_or(j, "frame_h", c.frame_h);
  c.frame_w = get_or(j, "frame_w", c.frame_w);
  if (j.contains("fake_modes")) {
    c.fake_modes.clear();
    for (const auto& m : j["fake_modes"]) c.fake_modes.push_back(parse_fake_mode(m.get<std::string>()));
  }
  c.shift_min_s = get_or(j, "shift_min_s", c.shift_min_s);
  c.noise_level = get_or(j, "noise_level", c.noise_level);
  c.artifact_level = get_or(j, "artifact_level", c.artifact_level);
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

std::uint64_t model_config_hash(const FeatureConfig& f, const StreamConfig& v,
                                const StreamConfig& a, const ObjectiveConfig& o) {
  json j{{"features", to_json(f)}, {"visual", to_json(v)}, {"audio", to_json(a)},
         {"objective", to_json(o)}};
  return fnv1a(canonical(j));
}

std::string canonical(const json& j) { return j.dump(); }

void apply_dotted_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  check_usage(eq != std::string::npos && eq > 0, "override must look like key.path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    check_usage(!key.empty(), "override has an empty path segment: " + assignment);
    if (dot == std::string::npos) {
      json value;
      try {
        value = json::parse(raw);
      } catch (const json::exception&) {
        value = raw;  // unquoted strings pass through
      }
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json load_config_file(const std::filesystem::path& path) {
  check_data(std::filesystem::exists(path), "config: file not found: " + path.string());
  try {
    return json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError("config: parse error in " + path.string() + ": " + e.what());
  }
}

}  // namespace mds::cfg
