// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "mds/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mds {

namespace {
constexpr double kSpanEps = 1e-6;

// Renderer palette. aperture_series() depends on the mouth color staying
// separable from face, eyes and background.
constexpr double kBg[3] = {0.10, 0.11, 0.14};
constexpr double kFace[3] = {0.78, 0.64, 0.52};
constexpr double kEye[3] = {0.10, 0.09, 0.09};
constexpr double kMouth[3] = {0.35, 0.06, 0.10};

double ellipse_alpha(double px, double py, double cx, double cy, double rx, double ry) {
  const double qx = (px - cx) / rx;
  const double qy = (py - cy) / ry;
  const double q = qx * qx + qy * qy;
  // Approximate signed distance, ~1px soft edge.
  const double d = (q - 1.0) * 0.5 * std::min(rx, ry);
  return std::clamp(0.5 - d, 0.0, 1.0);
}

void blend(double* rgb, const double* color, double alpha) {
  for (int c = 0; c < 3; ++c) rgb[c] = rgb[c] * (1.0 - alpha) + color[c] * alpha;
}

// Per-clip latent driving signal: three band-limited sinusoids plus slow
// interpolated noise, normalized to [0,1] over the clip.
struct Latent {
  double freq[3], amp[3], phase[3];
  std::vector<double> knots;  // noise knots at kKnotRate Hz
  double noise_amp = 0.0;
  double lo = 0.0, hi = 1.0;

  static constexpr double kKnotRate = 25.0;

  static Latent draw(Rng& rng, double duration_s, double noise_level) {
    Latent l;
    double amp_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      l.freq[k] = rng.uniform(0.5, 3.0);
      l.amp[k] = rng.uniform(0.5, 1.0);
      l.phase[k] = rng.uniform(0.0, 6.283185307179586);
      amp_sum += l.amp[k];
    }
    const int n_knots = static_cast<int>(std::ceil(duration_s * kKnotRate)) + 2;
    l.knots.resize(n_knots);
    for (auto& k : l.knots) k = rng.normal();
    l.noise_amp = noise_level * amp_sum;
    return l;
  }

  double raw(double t) const {
    double z = 0.0;
    for (int k = 0; k < 3; ++k) z += amp[k] * std::sin(6.283185307179586 * freq[k] * t + phase[k]);
    const double u = t * kKnotRate;
    const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(u)));
    const std::size_t j = std::min(i + 1, knots.size() - 1);
    const double w = u - std::floor(u);
    z += noise_amp * (knots[std::min(i, knots.size() - 1)] * (1.0 - w) + knots[j] * w);
    return z;
  }

  /// Calibrate [lo,hi] over the clip so value() lands in [0,1].
  void normalize(double duration_s, int sample_rate) {
    lo = 1e300;
    hi = -1e300;
    const auto n = static_cast<std::int64_t>(duration_s * sample_rate);
    for (std::int64_t i = 0; i < n; ++i) {
      const double z = raw(static_cast<double>(i) / sample_rate);
      lo = std::min(lo, z);
      hi = std::max(hi, z);
    }
    if (hi - lo < 1e-6) hi = lo + 1e-6;
  }

  double value(double t) const { return std::clamp((raw(t) - lo) / (hi - lo), 0.0, 1.0); }
};

struct FaceGeometry {
  double mouth_cx, mouth_cy, mouth_rx, ap_min, ap_max;
};

FaceGeometry face_geometry(int h, int w) {
  FaceGeometry g;
  g.mouth_cx = 0.50 * w;
  g.mouth_cy = 0.70 * h;
  g.mouth_rx = 0.20 * w;
  g.ap_min = 0.015 * h;
  g.ap_max = 0.16 * h;
  return g;
}

/// Renders one frame. aperture is the mouth's vertical semi-axis in pixels.
/// artifact_level > 0 stamps a checkerboard fingerprint over the mouth box.
void render_frame(Tensor& frames, std::int64_t f, double aperture, int h, int w,
                  double artifact_level) {
  const FaceGeometry g = face_geometry(h, w);
  const double face_cx = 0.50 * w, face_cy = 0.45 * h;
  const double face_rx = 0.36 * w, face_ry = 0.40 * h;
  const double eye_y = 0.34 * h, eye_r = 0.05 * std::min(h, w);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double rgb[3];
      const double grad = 0.04 * py / h;
      for (int c = 0; c < 3; ++c) rgb[c] = kBg[c] + grad;

      blend(rgb, kFace, ellipse_alpha(px, py, face_cx, face_cy, face_rx, face_ry));
      blend(rgb, kEye, ellipse_alpha(px, py, 0.36 * w, eye_y, eye_r, eye_r));
      blend(rgb, kEye, ellipse_alpha(px, py, 0.64 * w, eye_y, eye_r, eye_r));
      blend(rgb, kMouth, ellipse_alpha(px, py, g.mouth_cx, g.mouth_cy, g.mouth_rx, aperture));

      if (artifact_level > 0.0 && std::abs(px - g.mouth_cx) < g.mouth_rx + 2.0 &&
          std::abs(py - g.mouth_cy) < g.ap_max + 2.0) {
        const double sign = ((x + y) & 1) ? 1.0 : -1.0;
        for (int c = 0; c < 3; ++c) rgb[c] += sign * artifact_level;
      }

      for (int c = 0; c < 3; ++c) frames.at4(c, f, y, x) = std::clamp(rgb[c], 0.0, 1.0);
    }
  }
}

std::vector<double> render_audio(const Latent& latent, double carrier_hz, std::int64_t n,
                                 int sample_rate, double noise_level, Rng& rng) {
  std::vector<double> wav(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double env = 0.15 + 0.80 * latent.value(t);
    double s = 0.9 * env * std::sin(6.283185307179586 * carrier_hz * t);
    if (noise_level > 0.0) s += 0.5 * noise_level * rng.normal();
    wav[i] = std::clamp(s, -1.0, 1.0);
  }
  return wav;
}

Tensor render_frames(const Latent& latent, std::int64_t f_count, int fps, int h, int w,
                     double artifact_level) {
  Tensor frames({3, f_count, h, w});
  for (std::int64_t f = 0; f < f_count; ++f) {
    const double t = (static_cast<double>(f) + 0.5) / fps;
    const FaceGeometry g = face_geometry(h, w);
    const double ap = g.ap_min + (g.ap_max - g.ap_min) * latent.value(t);
    render_frame(frames, f, ap, h, w, artifact_level);
  }
  return frames;
}

json span_to_json(const SpanLabel& s) { return json::array({s.start_s, s.end_s, s.label}); }

SpanLabel span_from_json(const json& j) {
  check_data(j.is_array() && j.size() == 3, "manifest: span_truth entries must be [start,end,label]");
  return SpanLabel{j[0].get<double>(), j[1].get<double>(), j[2].get<int>()};
}

}  // namespace

void validate_clip(const ClipRecord& clip) {
  check_data(clip.frames.rank() == 4 && clip.frames.dim(0) == 3,
             "clip '" + clip.clip_id + "': frames must be (3,F,H,W), got " + clip.frames.shape_str());
  check_data(clip.fps > 0, "clip '" + clip.clip_id + "': fps must be positive");
  check_data(clip.sample_rate > 0, "clip '" + clip.clip_id + "': sample_rate must be positive");
  check_data(clip.label == 0 || clip.label == 1, "clip '" + clip.clip_id + "': label must be 0 or 1");

  const double video_s = static_cast<double>(clip.frame_count()) / clip.fps;
  const double audio_s = static_cast<double>(clip.waveform.size()) / clip.sample_rate;
  check_data(std::abs(video_s - audio_s) <= 1.0 / clip.fps + 1e-9,
             "clip '" + clip.clip_id + "': audio/video duration mismatch: " +
                 std::to_string(video_s) + "s video vs " + std::to_string(audio_s) + "s audio");

  for (std::int64_t i = 0; i < clip.frames.size(); ++i)
    check_data(clip.frames[i] >= -1e-9 && clip.frames[i] <= 1.0 + 1e-9,
               "clip '" + clip.clip_id + "': frame value outside [0,1]");
  for (double s : clip.waveform)
    check_data(s >= -1.0 - 1e-9 && s <= 1.0 + 1e-9,
               "clip '" + clip.clip_id + "': waveform sample outside [-1,1]");

  if (!clip.span_truth.empty()) {
    check_data(std::abs(clip.span_truth.front().start_s) < kSpanEps,
               "clip '" + clip.clip_id + "': span_truth must start at 0");
    for (std::size_t i = 0; i < clip.span_truth.size(); ++i) {
      const auto& s = clip.span_truth[i];
      check_data(s.end_s > s.start_s, "clip '" + clip.clip_id + "': empty span_truth interval");
      check_data(s.label == 0 || s.label == 1, "clip '" + clip.clip_id + "': bad span label");
      if (i > 0)
        check_data(std::abs(s.start_s - clip.span_truth[i - 1].end_s) < kSpanEps,
                   "clip '" + clip.clip_id + "': span_truth has gaps or overlaps");
    }
    check_data(std::abs(clip.span_truth.back().end_s - video_s) < kSpanEps,
               "clip '" + clip.clip_id + "': span_truth does not cover the clip");
  }
}

const ManifestEntry& CorpusManifest::entry(const std::string& clip_id) const {
  for (const auto& e : clips)
    if (e.clip_id == clip_id) return e;
  throw DataError("manifest: unknown clip_id '" + clip_id + "'");
}

std::vector<std::string> CorpusManifest::ids_in_split(const std::string& split_name) const {
  std::vector<std::string> out;
  for (const auto& e : clips) {
    auto it = split.find(e.clip_id);
    if (it != split.end() && it->second == split_name) out.push_back(e.clip_id);
  }
  return out;
}

CorpusManifest load_manifest(const fs::path& path) {
  check_data(fs::exists(path), "manifest: file not found: " + path.string());
  json j;
  try {
    j = json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError("manifest: parse error in " + path.string() + ": " + e.what());
  }

  CorpusManifest m;
  m.root = path.has_parent_path() ? path.parent_path() : fs::path(".");
  check_data(j.contains("version") && j["version"].is_number_integer(),
             "manifest: missing integer field 'version'");
  m.version = j["version"].get<int>();
  check_data(m.version == 1, "manifest: unsupported version " + std::to_string(m.version));
  check_data(j.contains("clips") && j["clips"].is_array(), "manifest: missing array field 'clips'");

  std::set<std::string> seen;
  for (const auto& cj : j["clips"]) {
    ManifestEntry e;
    for (const char* field : {"clip_id", "frames_path", "audio_path", "fps", "sample_rate", "label"})
      check_data(cj.contains(field), "manifest: clip entry missing field '" + std::string(field) + "'");
    e.clip_id = cj["clip_id"].get<std::string>();
    check_data(seen.insert(e.clip_id).second, "manifest: duplicate clip_id '" + e.clip_id + "'");
    e.frames_path = cj["frames_path"].get<std::string>();
    e.audio_path = cj["audio_path"].get<std::string>();
    e.fps = cj["fps"].get<int>();
    e.sample_rate = cj["sample_rate"].get<int>();
    e.label = cj["label"].get<int>();
    check_data(e.fps > 0, "manifest: clip '" + e.clip_id + "': fps must be positive");
    check_data(e.sample_rate > 0, "manifest: clip '" + e.clip_id + "': sample_rate must be positive");
    check_data(e.label == 0 || e.label == 1, "manifest: clip '" + e.clip_id + "': label must be 0 or 1");
    if (cj.contains("span_truth"))
      for (const auto& sj : cj["span_truth"]) e.span_truth.push_back(span_from_json(sj));
    check_data(fs::exists(m.root / e.frames_path),
               "manifest: clip '" + e.clip_id + "': frames path missing: " + e.frames_path);
    check_data(fs::exists(m.root / e.audio_path),
               "manifest: clip '" + e.clip_id + "': audio file missing: " + e.audio_path);
    m.clips.push_back(std::move(e));
  }

  if (j.contains("split")) {
    check_data(j["split"].is_object(), "manifest: 'split' must be an object");
    for (const auto& [id, sv] : j["split"].items()) {
      check_data(seen.count(id) > 0, "manifest: split references unknown clip_id '" + id + "'");
      const std::string s = sv.get<std::string>();
      check_data(s == "train" || s == "val" || s == "test",
                 "manifest: clip '" + id + "': unknown split '" + s + "'");
      m.split[id] = s;
    }
  }
  return m;
}

void save_manifest(const CorpusManifest& manifest, const fs::path& path) {
  json j;
  j["version"] = manifest.version;
  j["clips"] = json::array();
  for (const auto& e : manifest.clips) {
    json cj;
    cj["clip_id"] = e.clip_id;
    cj["frames_path"] = e.frames_path;
    cj["audio_path"] = e.audio_path;
    cj["fps"] = e.fps;
    cj["sample_rate"] = e.sample_rate;
    cj["label"] = e.label;
    if (!e.span_truth.empty()) {
      cj["span_truth"] = json::array();
      for (const auto& s : e.span_truth) cj["span_truth"].push_back(span_to_json(s));
    }
    j["clips"].push_back(cj);
  }
  if (!manifest.split.empty()) {
    json sj = json::object();
    for (const auto& [id, s] : manifest.split) sj[id] = s;
    j["split"] = sj;
  }
  io::write_text_file(path, j.dump(2) + "\n");
}

ClipRecord load_clip(const CorpusManifest& manifest, const std::string& clip_id) {
  const ManifestEntry& e = manifest.entry(clip_id);
  ClipRecord clip;
  clip.clip_id = e.clip_id;
  clip.fps = e.fps;
  clip.label = e.label;
  clip.span_truth = e.span_truth;

  const fs::path fpath = manifest.root / e.frames_path;
  if (fpath.extension() == ".npy") {
    clip.frames = io::read_npy(fpath);
    check_data(clip.frames.rank() == 4 && clip.frames.dim(0) == 3,
               "clip '" + clip_id + "': packed frames must be (3,F,H,W), got " +
                   clip.frames.shape_str());
  } else {
    check_data(fs::is_directory(fpath),
               "clip '" + clip_id + "': frames path is neither .npy nor a directory");
    std::vector<fs::path> files;
    for (const auto& de : fs::directory_iterator(fpath))
      if (de.path().extension() == ".ppm") files.push_back(de.path());
    check_data(!files.empty(), "clip '" + clip_id + "': no .ppm frames in " + fpath.string());
    std::sort(files.begin(), files.end());
    Tensor first = io::read_ppm(files[0]);
    const std::int64_t h = first.dim(1), w = first.dim(2);
    const auto f_count = static_cast<std::int64_t>(files.size());
    clip.frames = Tensor({3, f_count, h, w});
    for (std::int64_t f = 0; f < f_count; ++f) {
      Tensor img = f == 0 ? std::move(first) : io::read_ppm(files[static_cast<std::size_t>(f)]);
      check_data(img.dim(1) == h && img.dim(2) == w,
                 "clip '" + clip_id + "': inconsistent frame sizes");
      for (std::int64_t c = 0; c < 3; ++c)
        for (std::int64_t y = 0; y < h; ++y)
          for (std::int64_t x = 0; x < w; ++x) clip.frames.at4(c, f, y, x) = img.at3(c, y, x);
    }
  }

  const io::WavData wav = io::read_wav(manifest.root / e.audio_path);
  check_data(wav.sample_rate == e.sample_rate,
             "clip '" + clip_id + "': sample_rate mismatch: manifest says " +
                 std::to_string(e.sample_rate) + ", wav has " + std::to_string(wav.sample_rate));
  clip.sample_rate = wav.sample_rate;
  clip.waveform = std::move(wav.samples);

  validate_clip(clip);
  return clip;
}

ManifestEntry write_clip_data(const ClipRecord& clip, const fs::path& root, const fs::path& dir,
                              bool frames_as_npy) {
  ManifestEntry e;
  e.clip_id = clip.clip_id;
  e.fps = clip.fps;
  e.sample_rate = clip.sample_rate;
  e.label = clip.label;
  e.span_truth = clip.span_truth;

  fs::create_directories(root / dir);
  if (frames_as_npy) {
    e.frames_path = (dir / "frames.npy").generic_string();
    io::write_npy(root / e.frames_path, clip.frames, /*as_float32=*/true);
  } else {
    const fs::path fdir = dir / "frames";
    fs::create_directories(root / fdir);
    const std::int64_t f_count = clip.frame_count(), h = clip.frames.dim(2), w = clip.frames.dim(3);
    for (std::int64_t f = 0; f < f_count; ++f) {
      Tensor img({3, h, w});
      for (std::int64_t c = 0; c < 3; ++c)
        for (std::int64_t y = 0; y < h; ++y)
          for (std::int64_t x = 0; x < w; ++x) img.at3(c, y, x) = clip.frames.at4(c, f, y, x);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%06lld.ppm", static_cast<long long>(f));
      io::write_ppm(root / fdir / name, img);
    }
    e.frames_path = fdir.generic_string();
  }
  e.audio_path = (dir / "audio.wav").generic_string();
  io::write_wav(root / e.audio_path, clip.waveform, clip.sample_rate);
  return e;
}

FakeMode parse_fake_mode(const std::string& name) {
  if (name == "audio_swap") return FakeMode::audio_swap;
  if (name == "audio_shift") return FakeMode::audio_shift;
  if (name == "splice") return FakeMode::splice;
  throw UsageError("unknown fake mode '" + name + "' (audio_swap|audio_shift|splice)");
}

std::string to_string(FakeMode mode) {
  switch (mode) {
    case FakeMode::audio_swap: return "audio_swap";
    case FakeMode::audio_shift: return "audio_shift";
    case FakeMode::splice: return "splice";
  }
  return "?";
}

void validate_synth_config(const SynthConfig& cfg) {
  check_usage(cfg.n_real >= 0 && cfg.n_fake >= 0, "synth: clip counts must be >= 0");
  check_usage(cfg.duration_s > 0, "synth: duration_s must be positive");
  check_usage(cfg.fps > 0 && cfg.sample_rate > 0, "synth: fps and sample_rate must be positive");
  check_usage(cfg.frame_h >= 16 && cfg.frame_w >= 16, "synth: frame size must be at least 16x16");
  check_usage(cfg.noise_level >= 0, "synth: noise_level must be >= 0");
  check_usage(cfg.artifact_level >= 0, "synth: artifact_level must be >= 0");
  check_usage(cfg.shift_min_s >= 1.0 / cfg.sample_rate,
              "synth: shift_min_s must be at least one audio sample period");
  if (cfg.n_fake > 0) check_usage(!cfg.fake_modes.empty(), "synth: fake_modes must not be empty");
  for (FakeMode m : cfg.fake_modes) {
    if (m == FakeMode::splice)
      check_usage(cfg.duration_s >= 4.0, "synth: splice mode needs duration_s >= 4");
    if (m == FakeMode::audio_shift)
      check_usage(cfg.shift_min_s < cfg.duration_s, "synth: shift_min_s must be below duration_s");
  }
}

std::vector<ClipRecord> generate_synthetic_corpus(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  const auto f_count = static_cast<std::int64_t>(std::llround(cfg.duration_s * cfg.fps));
  const auto n_samples = static_cast<std::int64_t>(std::llround(cfg.duration_s * cfg.sample_rate));
  check_usage(f_count >= 1, "synth: duration_s too short for one frame");

  std::vector<ClipRecord> out;
  out.reserve(static_cast<std::size_t>(cfg.n_real + cfg.n_fake));

  auto make_real = [&](Rng& rng, const std::string& id) {
    Latent z = Latent::draw(rng, cfg.duration_s, cfg.noise_level);
    z.normalize(cfg.duration_s, cfg.sample_rate);
    const double carrier = rng.uniform(180.0, 360.0);
    ClipRecord clip;
    clip.clip_id = id;
    clip.fps = cfg.fps;
    clip.sample_rate = cfg.sample_rate;
    clip.label = 0;
    clip.frames = render_frames(z, f_count, cfg.fps, cfg.frame_h, cfg.frame_w, 0.0);
    clip.waveform = render_audio(z, carrier, n_samples, cfg.sample_rate, cfg.noise_level, rng);
    return clip;
  };

  for (int i = 0; i < cfg.n_real; ++i) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(i)));
    char id[16];
    std::snprintf(id, sizeof(id), "r%04d", i);
    out.push_back(make_real(rng, id));
  }

  for (int i = 0; i < cfg.n_fake; ++i) {
    Rng rng(Rng::derive(cfg.seed, 0x80000000ull + static_cast<std::uint64_t>(i)));
    char id[16];
    std::snprintf(id, sizeof(id), "f%04d", i);
    const FakeMode mode = cfg.fake_modes[static_cast<std::size_t>(i) % cfg.fake_modes.size()];

    Latent z = Latent::draw(rng, cfg.duration_s, cfg.noise_level);
    z.normalize(cfg.duration_s, cfg.sample_rate);
    const double carrier = rng.uniform(180.0, 360.0);

    ClipRecord clip;
    clip.clip_id = id;
    clip.fps = cfg.fps;
    clip.sample_rate = cfg.sample_rate;
    clip.label = 1;

    if (mode == FakeMode::audio_swap) {
      // Genuine audio from z; frames re-driven by an independent donor latent,
      // carrying the rendering fingerprint. Correlation broken, audio marginal clean.
      Latent donor = Latent::draw(rng, cfg.duration_s, cfg.noise_level);
      donor.normalize(cfg.duration_s, cfg.sample_rate);
      clip.frames =
          render_frames(donor, f_count, cfg.fps, cfg.frame_h, cfg.frame_w, cfg.artifact_level);
      clip.waveform = render_audio(z, carrier, n_samples, cfg.sample_rate, cfg.noise_level, rng);
    } else if (mode == FakeMode::audio_shift) {
      // Same latent, audio circularly delayed by exactly shift_min_s.
      clip.frames = render_frames(z, f_count, cfg.fps, cfg.frame_h, cfg.frame_w, 0.0);
      std::vector<double> wav =
          render_audio(z, carrier, n_samples, cfg.sample_rate, cfg.noise_level, rng);
      const auto shift = static_cast<std::int64_t>(std::llround(cfg.shift_min_s * cfg.sample_rate));
      std::vector<double> shifted(wav.size());
      for (std::int64_t s = 0; s < n_samples; ++s)
        shifted[static_cast<std::size_t>((s + shift) % n_samples)] = wav[static_cast<std::size_t>(s)];
      clip.waveform = std::move(shifted);
    } else {  // splice: one fake interval on whole-second boundaries
      ClipRecord real_part;
      real_part.clip_id = id;
      real_part.fps = cfg.fps;
      real_part.sample_rate = cfg.sample_rate;
      real_part.label = 0;
      real_part.frames = render_frames(z, f_count, cfg.fps, cfg.frame_h, cfg.frame_w, 0.0);
      real_part.waveform =
          render_audio(z, carrier, n_samples, cfg.sample_rate, cfg.noise_level, rng);

      Latent donor = Latent::draw(rng, cfg.duration_s, cfg.noise_level);
      donor.normalize(cfg.duration_s, cfg.sample_rate);
      ClipRecord fake_part = real_part;  // shares the genuine audio track
      fake_part.label = 1;
      fake_part.frames =
          render_frames(donor, f_count, cfg.fps, cfg.frame_h, cfg.frame_w, cfg.artifact_level);

      const auto whole = static_cast<std::int64_t>(std::floor(cfg.duration_s));
      const std::int64_t max_len = std::min<std::int64_t>(3, whole - 2);
      const std::int64_t len = 2 + (max_len > 2 ? static_cast<std::int64_t>(rng.uniform_int(
                                                      static_cast<std::uint64_t>(max_len - 1)))
                                                : 0);
      const std::int64_t start =
          1 + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(whole - len - 1)));
      clip = splice_clips(real_part, fake_part,
                          {{static_cast<double>(start), static_cast<double>(start + len)}});
      clip.clip_id = id;
    }
    out.push_back(std::move(clip));
  }
  return out;
}

ClipRecord splice_clips(const ClipRecord& real, const ClipRecord& fake,
                        const std::vector<std::pair<double, double>>& spans) {
  check_usage(real.fps == fake.fps && real.sample_rate == fake.sample_rate,
              "splice: clips must share fps and sample_rate");
  check_usage(real.frames.shape() == fake.frames.shape(),
              "splice: clips must share frame geometry and count");
  check_usage(real.waveform.size() == fake.waveform.size(),
              "splice: clips must share waveform length");

  const double duration = real.duration_s();
  std::vector<std::pair<double, double>> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    check_usage(sorted[i].second > sorted[i].first - kSpanEps, "splice: span end before start");
    check_usage(sorted[i].first >= -kSpanEps && sorted[i].second <= duration + kSpanEps,
                "splice: span outside clip duration");
    if (i > 0)
      check_usage(sorted[i].first >= sorted[i - 1].second - kSpanEps, "splice: overlapping spans");
  }

  ClipRecord out = real;
  out.clip_id = real.clip_id + "_spliced";
  out.span_truth.clear();

  const auto h = real.frames.dim(2), w = real.frames.dim(3);
  bool any_fake = false;
  double cursor = 0.0;
  for (const auto& [s0, s1] : sorted) {
    if (s1 - s0 < kSpanEps) continue;
    any_fake = true;
    if (s0 - cursor > kSpanEps) out.span_truth.push_back({cursor, s0, 0});
    out.span_truth.push_back({s0, s1, 1});
    cursor = s1;

    const auto fs = static_cast<std::int64_t>(std::llround(s0 * real.fps));
    const auto fe = std::min<std::int64_t>(static_cast<std::int64_t>(std::llround(s1 * real.fps)),
                                           real.frame_count());
    for (std::int64_t c = 0; c < 3; ++c)
      for (std::int64_t f = fs; f < fe; ++f)
        for (std::int64_t y = 0; y < h; ++y)
          for (std::int64_t x = 0; x < w; ++x) out.frames.at4(c, f, y, x) = fake.frames.at4(c, f, y, x);

    const auto ss = static_cast<std::int64_t>(std::llround(s0 * real.sample_rate));
    const auto se = std::min<std::int64_t>(
        static_cast<std::int64_t>(std::llround(s1 * real.sample_rate)),
        static_cast<std::int64_t>(real.waveform.size()));
    for (std::int64_t s = ss; s < se; ++s)
      out.waveform[static_cast<std::size_t>(s)] = fake.waveform[static_cast<std::size_t>(s)];
  }
  if (duration - cursor > kSpanEps) out.span_truth.push_back({cursor, duration, 0});
  out.label = any_fake ? 1 : 0;
  return out;
}

std::vector<double> aperture_series(const ClipRecord& clip) {
  const std::int64_t f_count = clip.frame_count(), h = clip.frames.dim(2), w = clip.frames.dim(3);
  std::vector<double> series(static_cast<std::size_t>(f_count), 0.0);
  for (std::int64_t f = 0; f < f_count; ++f) {
    double count = 0;
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        const double r = clip.frames.at4(0, f, y, x);
        const double g = clip.frames.at4(1, f, y, x);
        const double b = clip.frames.at4(2, f, y, x);
        if (r > 0.18 && r < 0.58 && g < 0.25 && b < 0.30 && r > g + 0.12) count += 1.0;
      }
    series[static_cast<std::size_t>(f)] = count / static_cast<double>(w);
  }
  return series;
}

}  // namespace mds
