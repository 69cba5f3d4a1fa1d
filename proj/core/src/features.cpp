// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/features.hpp"

#include <cmath>
#include <complex>

#include "mds/error.hpp"
#include "mds/io.hpp"

namespace mds {

namespace {

constexpr double kPi = 3.14159265358979323846;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative radix-2 FFT, in place. size must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// (n_mfcc, n_fft/2 + 1) triangular filter weights on FFT bin centers.
std::vector<std::vector<double>> mel_filterbank(int n_mfcc, int n_fft, int sample_rate,
                                                double fmin, double fmax) {
  const int n_bins = n_fft / 2 + 1;
  std::vector<double> edges(static_cast<std::size_t>(n_mfcc) + 2);
  const double mel_lo = hz_to_mel(fmin), mel_hi = hz_to_mel(fmax);
  for (int m = 0; m < n_mfcc + 2; ++m)
    edges[static_cast<std::size_t>(m)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mfcc + 1));

  std::vector<std::vector<double>> fb(static_cast<std::size_t>(n_mfcc),
                                      std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
  for (int m = 0; m < n_mfcc; ++m) {
    const double fl = edges[static_cast<std::size_t>(m)];
    const double fc = edges[static_cast<std::size_t>(m) + 1];
    const double fr = edges[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double wgt = 0.0;
      if (f > fl && f < fc)
        wgt = (f - fl) / (fc - fl);
      else if (f >= fc && f < fr)
        wgt = (fr - f) / (fr - fc);
      fb[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = wgt;
    }
  }
  return fb;
}

}  // namespace

void validate_feature_config(const FeatureConfig& cfg) {
  check_usage(cfg.segment_s > 0, "features: segment_s must be positive");
  check_usage(cfg.n_mfcc >= 1, "features: n_mfcc must be >= 1");
  check_usage(cfg.win_len_s > cfg.hop_s && cfg.hop_s > 0,
              "features: need win_len_s > hop_s > 0");
  check_usage(cfg.n_fft >= 0, "features: n_fft must be >= 0");
  check_usage(cfg.fmin >= 0 && cfg.fmax >= 0, "features: fmin/fmax must be >= 0");
}

Tensor compute_mfcc(std::span<const double> waveform, int sample_rate, const FeatureConfig& cfg) {
  validate_feature_config(cfg);
  const int win = static_cast<int>(std::lround(cfg.win_len_s * sample_rate));
  const int hop = static_cast<int>(std::lround(cfg.hop_s * sample_rate));
  check_usage(win > 1 && hop >= 1, "mfcc: window/hop too small for this sample rate");
  check_usage(static_cast<int>(waveform.size()) >= win,
              "mfcc: waveform shorter than one analysis window");

  const int n_fft = cfg.n_fft == 0 ? next_pow2(win) : cfg.n_fft;
  check_usage(n_fft >= win && (n_fft & (n_fft - 1)) == 0,
              "mfcc: n_fft must be a power of two >= window length");
  const double fmax = cfg.fmax == 0.0 ? sample_rate / 2.0 : cfg.fmax;
  check_usage(fmax <= sample_rate / 2.0 + 1e-9, "mfcc: fmax above Nyquist");
  check_usage(cfg.fmin < fmax, "mfcc: fmin must be below fmax");

  const auto n = static_cast<int>(waveform.size());
  const int t_steps = (n - win) / hop + 1;
  const auto fb = mel_filterbank(cfg.n_mfcc, n_fft, sample_rate, cfg.fmin, fmax);

  std::vector<double> hann(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i)
    hann[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (win - 1));

  Tensor out({cfg.n_mfcc, t_steps});
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft));
  std::vector<double> energies(static_cast<std::size_t>(cfg.n_mfcc));

  for (int t = 0; t < t_steps; ++t) {
    const double* x = waveform.data() + static_cast<std::ptrdiff_t>(t) * hop;
    // Pre-emphasis stays inside the frame: first sample edge-replicated.
    buf.assign(buf.size(), {0.0, 0.0});
    buf[0] = {(1.0 - kPreEmphasis) * x[0] * hann[0], 0.0};
    for (int i = 1; i < win; ++i)
      buf[static_cast<std::size_t>(i)] = {(x[i] - kPreEmphasis * x[i - 1]) *
                                              hann[static_cast<std::size_t>(i)],
                                          0.0};
    fft(buf);

    for (int m = 0; m < cfg.n_mfcc; ++m) {
      double e = 0.0;
      const auto& w = fb[static_cast<std::size_t>(m)];
      for (int k = 0; k <= n_fft / 2; ++k)
        e += w[static_cast<std::size_t>(k)] * std::abs(buf[static_cast<std::size_t>(k)]);
      energies[static_cast<std::size_t>(m)] = std::log(std::max(e, kLogFloor));
    }

    // Orthonormal DCT-II over the mel energies.
    const int M = cfg.n_mfcc;
    for (int i = 0; i < M; ++i) {
      double c = 0.0;
      for (int j = 0; j < M; ++j)
        c += energies[static_cast<std::size_t>(j)] * std::cos(kPi * i * (2.0 * j + 1.0) / (2.0 * M));
      c *= i == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M);
      out.at2(i, t) = c;
    }
  }

  for (std::int64_t i = 0; i < out.size(); ++i)
    check_numeric(std::isfinite(out[i]), "mfcc: non-finite coefficient");
  return out;
}

std::vector<SegmentPair> segment_clip(const ClipRecord& clip, const FeatureConfig& cfg,
                                      const FeatureCache* cache) {
  validate_feature_config(cfg);
  const double frames_per_seg_d = cfg.segment_s * clip.fps;
  const double samples_per_seg_d = cfg.segment_s * clip.sample_rate;
  check_usage(std::abs(frames_per_seg_d - std::round(frames_per_seg_d)) < 1e-9,
              "segment: D*fps must be an integer frame count");
  check_usage(std::abs(samples_per_seg_d - std::round(samples_per_seg_d)) < 1e-9,
              "segment: D*sample_rate must be an integer sample count");
  const auto frames_per_seg = static_cast<std::int64_t>(std::llround(frames_per_seg_d));
  const auto samples_per_seg = static_cast<std::int64_t>(std::llround(samples_per_seg_d));

  const std::int64_t n_video = clip.frame_count() / frames_per_seg;
  const std::int64_t n_audio = static_cast<std::int64_t>(clip.waveform.size()) / samples_per_seg;
  const std::int64_t n = std::min(n_video, n_audio);
  check_usage(n >= 1, "segment: clip '" + clip.clip_id + "' shorter than one segment");

  const auto h = clip.frames.dim(2), w = clip.frames.dim(3);
  std::vector<SegmentPair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < n; ++t) {
    SegmentPair seg;
    seg.clip_id = clip.clip_id;
    seg.index = static_cast<int>(t);

    seg.visual = Tensor({3, frames_per_seg, h, w});
    for (std::int64_t c = 0; c < 3; ++c)
      for (std::int64_t f = 0; f < frames_per_seg; ++f)
        for (std::int64_t y = 0; y < h; ++y)
          for (std::int64_t x = 0; x < w; ++x)
            seg.visual.at4(c, f, y, x) = clip.frames.at4(c, t * frames_per_seg + f, y, x);

    std::optional<Tensor> cached =
        cache ? cache->get(clip.clip_id, static_cast<int>(t)) : std::nullopt;
    if (cached) {
      seg.audio_mfcc = std::move(*cached);
    } else {
      seg.audio_mfcc = compute_mfcc(
          std::span<const double>(clip.waveform.data() + t * samples_per_seg,
                                  static_cast<std::size_t>(samples_per_seg)),
          clip.sample_rate, cfg);
      if (cache) cache->put(clip.clip_id, static_cast<int>(t), seg.audio_mfcc);
    }

    if (clip.span_truth.empty()) {
      seg.label = clip.label;
    } else {
      // Fake iff fake spans cover more than half of [tD, (t+1)D).
      const double t0 = static_cast<double>(t) * cfg.segment_s;
      const double t1 = t0 + cfg.segment_s;
      double fake_overlap = 0.0;
      for (const auto& s : clip.span_truth)
        if (s.label == 1)
          fake_overlap += std::max(0.0, std::min(t1, s.end_s) - std::max(t0, s.start_s));
      seg.label = fake_overlap > 0.5 * cfg.segment_s ? 1 : 0;
    }
    out.push_back(std::move(seg));
  }
  return out;
}

VisualStats compute_visual_stats(const std::vector<const Tensor*>& frame_tensors) {
  VisualStats stats;
  double sum[3] = {0, 0, 0}, sumsq[3] = {0, 0, 0};
  std::int64_t count = 0;
  for (const Tensor* t : frame_tensors) {
    check_usage(t && t->rank() == 4 && t->dim(0) == 3, "visual stats: tensors must be (3,T,H,W)");
    const std::int64_t per_channel = t->size() / 3;
    for (std::int64_t c = 0; c < 3; ++c) {
      const double* p = t->data() + c * per_channel;
      for (std::int64_t i = 0; i < per_channel; ++i) {
        sum[c] += p[i];
        sumsq[c] += p[i] * p[i];
      }
    }
    count += per_channel;
  }
  check_usage(count > 0, "visual stats: no data");
  for (int c = 0; c < 3; ++c) {
    stats.mean[c] = sum[c] / static_cast<double>(count);
    const double var = sumsq[c] / static_cast<double>(count) - stats.mean[c] * stats.mean[c];
    stats.stddev[c] = std::sqrt(std::max(var, 1e-12));
  }
  return stats;
}

Tensor prepare_visual(const Tensor& frames, const FeatureConfig& cfg, int fps,
                      const VisualStats* stats) {
  check_usage(frames.rank() == 4 && frames.dim(0) == 3,
              "prepare_visual: expected (3,T,H,W), got " + frames.shape_str());
  const double expect = cfg.segment_s * fps;
  check_usage(frames.dim(1) == static_cast<std::int64_t>(std::llround(expect)),
              "prepare_visual: frame count " + std::to_string(frames.dim(1)) +
                  " != D*fps = " + std::to_string(std::llround(expect)));

  Tensor out = frames;
  if (cfg.normalize_visual == FeatureConfig::VisualNorm::per_channel_standardize) {
    check_usage(stats != nullptr, "prepare_visual: standardization requires train-split stats");
    const std::int64_t per_channel = out.size() / 3;
    for (std::int64_t c = 0; c < 3; ++c) {
      double* p = out.data() + c * per_channel;
      for (std::int64_t i = 0; i < per_channel; ++i)
        p[i] = (p[i] - stats->mean[c]) / stats->stddev[c];
    }
  }
  return out;
}

FeatureCache::FeatureCache(std::filesystem::path dir, std::uint64_t config_hash)
    : dir_(std::move(dir)), config_hash_(config_hash) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::filesystem::path FeatureCache::key_path(const std::string& clip_id, int t) const {
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash_));
  return dir_ / (clip_id + "_t" + std::to_string(t) + "_" + hex + ".npy");
}

std::optional<Tensor> FeatureCache::get(const std::string& clip_id, int t) const {
  if (!enabled()) return std::nullopt;
  const auto path = key_path(clip_id, t);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return io::read_npy(path);
}

void FeatureCache::put(const std::string& clip_id, int t, const Tensor& mfcc) const {
  if (!enabled()) return;
  io::write_npy(key_path(clip_id, t), mfcc, /*as_float32=*/false);
}

}  // namespace mds
