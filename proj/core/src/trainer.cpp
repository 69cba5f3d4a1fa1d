// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mds/config.hpp"
#include "mds/error.hpp"
#include "mds/evalkit.hpp"

namespace fs = std::filesystem;

namespace mds {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::app);
  check_data(os.good(), "trainer: cannot write metrics to " + path.string());
  os << content;
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  check_usage(cfg.epochs >= 1, "train: epochs must be >= 1");
  check_usage(cfg.batch_size >= 2, "train: batch_size must be >= 2 (batch norm)");
  check_usage(cfg.learning_rate > 0, "train: learning_rate must be positive");
  check_usage(cfg.beta1 > 0 && cfg.beta1 < 1 && cfg.beta2 > 0 && cfg.beta2 < 1,
              "train: adam betas must lie in (0,1)");
  check_usage(cfg.adam_eps > 0, "train: adam_eps must be positive");
  check_usage(cfg.eval_every >= 1, "train: eval_every must be >= 1");
  check_usage(cfg.early_stop_patience >= 0, "train: early_stop_patience must be >= 0");
  validate_objective_config(cfg.objective);
}

TrainData build_train_data(const CorpusManifest& manifest, const FeatureConfig& fcfg,
                           const FeatureCache* cache) {
  TrainData data;
  std::vector<const Tensor*> train_frames;
  std::vector<ClipRecord> train_clips;

  for (const auto& id : manifest.ids_in_split("train"))
    train_clips.push_back(load_clip(manifest, id));
  check_data(!train_clips.empty(), "train: manifest has an empty train split");
  data.fps = train_clips.front().fps;

  if (fcfg.normalize_visual == FeatureConfig::VisualNorm::per_channel_standardize) {
    for (const auto& c : train_clips) train_frames.push_back(&c.frames);
    data.visual_stats = compute_visual_stats(train_frames);
    data.has_visual_stats = true;
  }
  for (const auto& clip : train_clips)
    for (auto& seg : segment_clip(clip, fcfg, cache)) data.train_segments.push_back(std::move(seg));

  for (const auto& id : manifest.ids_in_split("val")) {
    const ClipRecord clip = load_clip(manifest, id);
    TrainData::ClipSegments vc;
    vc.clip_id = clip.clip_id;
    vc.label = clip.label;
    vc.segments = segment_clip(clip, fcfg, cache);
    data.val_clips.push_back(std::move(vc));
  }
  return data;
}

TrainData build_train_data(const std::vector<ClipRecord>& clips,
                           const std::map<std::string, std::string>& split,
                           const FeatureConfig& fcfg) {
  TrainData data;
  std::vector<const Tensor*> train_frames;
  for (const auto& clip : clips) {
    const auto it = split.find(clip.clip_id);
    if (it == split.end()) continue;
    if (it->second == "train") {
      train_frames.push_back(&clip.frames);
      data.fps = clip.fps;
    }
  }
  check_data(!train_frames.empty(), "train: empty train split");
  if (fcfg.normalize_visual == FeatureConfig::VisualNorm::per_channel_standardize) {
    data.visual_stats = compute_visual_stats(train_frames);
    data.has_visual_stats = true;
  }
  for (const auto& clip : clips) {
    const auto it = split.find(clip.clip_id);
    if (it == split.end()) continue;
    if (it->second == "train") {
      for (auto& seg : segment_clip(clip, fcfg)) data.train_segments.push_back(std::move(seg));
    } else if (it->second == "val") {
      TrainData::ClipSegments vc;
      vc.clip_id = clip.clip_id;
      vc.label = clip.label;
      vc.segments = segment_clip(clip, fcfg);
      data.val_clips.push_back(std::move(vc));
    }
  }
  return data;
}

Trainer::Trainer(const TrainData& data, FeatureConfig fcfg, StreamConfig visual_cfg,
                 StreamConfig audio_cfg, TrainConfig tcfg, fs::path out_dir)
    : data_(data),
      fcfg_(std::move(fcfg)),
      vcfg_(std::move(visual_cfg)),
      acfg_(std::move(audio_cfg)),
      tcfg_(std::move(tcfg)),
      out_dir_(std::move(out_dir)) {
  validate_train_config(tcfg_);
  validate_feature_config(fcfg_);
  check_usage(vcfg_.embed_dim == acfg_.embed_dim,
              "train: visual and audio embed_dim must be equal");
  check_data(!data_.train_segments.empty(), "train: no training segments");

  int n_fake = 0;
  for (const auto& s : data_.train_segments) n_fake += s.label;
  check_data(n_fake > 0 && n_fake < static_cast<int>(data_.train_segments.size()),
             "train: single-class train split (both real and fake segments required)");

  const auto& first = data_.train_segments.front();
  check_usage(first.visual.shape() == vcfg_.input_shape,
              "train: visual segments are " + first.visual.shape_str() +
                  " but the visual stream expects a different input_shape");
  check_usage(first.audio_mfcc.shape() == acfg_.input_shape,
              "train: audio maps are " + first.audio_mfcc.shape_str() +
                  " but the audio stream expects a different input_shape");

  use_visual_ = tcfg_.objective.lambda1 > 0 || tcfg_.objective.lambda2 > 0;
  use_audio_ = tcfg_.objective.lambda1 > 0 || tcfg_.objective.lambda3 > 0;

  visual_ = build_stream(vcfg_, tcfg_.seed);
  audio_ = build_stream(acfg_, tcfg_.seed);
  for (Stream* s : {visual_.get(), audio_.get()})
    for (auto* p : s->params()) {
      adam_m_.emplace_back(p->value.shape());
      adam_v_.emplace_back(p->value.shape());
    }
  rng_ = Rng(Rng::derive(tcfg_.seed, 100));
  fs::create_directories(out_dir_);
}

void Trainer::adam_step() {
  ++adam_t_;
  const double bc1 = 1.0 - std::pow(tcfg_.beta1, static_cast<double>(adam_t_));
  const double bc2 = 1.0 - std::pow(tcfg_.beta2, static_cast<double>(adam_t_));
  std::size_t idx = 0;
  for (Stream* s : {visual_.get(), audio_.get()}) {
    for (auto* p : s->params()) {
      Tensor& m = adam_m_[idx];
      Tensor& v = adam_v_[idx];
      ++idx;
      for (std::int64_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i];
        m[i] = tcfg_.beta1 * m[i] + (1.0 - tcfg_.beta1) * g;
        v[i] = tcfg_.beta2 * v[i] + (1.0 - tcfg_.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p->value[i] -= tcfg_.learning_rate * mhat / (std::sqrt(vhat) + tcfg_.adam_eps);
      }
    }
  }
}

void Trainer::log_line(std::int64_t step, int epoch, const LossBreakdown& loss) {
  std::string line = "{\"step\":" + std::to_string(step) + ",\"epoch\":" + std::to_string(epoch) +
                     ",\"L\":" + fmt(loss.total) + ",\"L1\":" + fmt(loss.contrastive) +
                     ",\"L2\":" + fmt(loss.ce_visual) + ",\"L3\":" + fmt(loss.ce_audio) +
                     ",\"val_auc\":" + (last_val_auc_ ? fmt(*last_val_auc_) : "null") + "}\n";
  metrics_buffer_ += line;
}

std::optional<double> Trainer::validate() {
  if (data_.val_clips.empty()) return std::nullopt;
  std::vector<double> scores;
  std::vector<int> labels;
  const VisualStats* stats = data_.has_visual_stats ? &data_.visual_stats : nullptr;
  bool has_real = false, has_fake = false;

  for (const auto& clip : data_.val_clips) {
    double score;
    const std::size_t n = clip.segments.size();
    std::vector<double> d_or_p;
    for (std::size_t at = 0; at < n; at += 32) {
      const std::size_t take = std::min<std::size_t>(32, n - at);
      std::vector<Tensor> prepared;
      std::vector<const Tensor*> vis_items, aud_items;
      prepared.reserve(take);
      for (std::size_t i = 0; i < take; ++i) {
        const auto& seg = clip.segments[at + i];
        prepared.push_back(prepare_visual(seg.visual, fcfg_, data_.fps, stats));
        vis_items.push_back(&prepared.back());
        aud_items.push_back(&seg.audio_mfcc);
      }
      if (use_visual_ && use_audio_) {
        auto vo = visual_->forward(to_batch(vis_items, StreamKind::visual), false);
        auto ao = audio_->forward(to_batch(aud_items, StreamKind::audio), false);
        const std::int64_t E = vcfg_.embed_dim;
        for (std::size_t i = 0; i < take; ++i)
          d_or_p.push_back(dissimilarity(
              std::span<const double>(vo.embed.data() + static_cast<std::int64_t>(i) * E, E),
              std::span<const double>(ao.embed.data() + static_cast<std::int64_t>(i) * E, E)));
      } else if (use_visual_) {
        auto vo = visual_->forward(to_batch(vis_items, StreamKind::visual), false);
        for (double p : fake_probabilities(vo.logits)) d_or_p.push_back(p);
      } else {
        auto ao = audio_->forward(to_batch(aud_items, StreamKind::audio), false);
        for (double p : fake_probabilities(ao.logits)) d_or_p.push_back(p);
      }
    }
    if (use_visual_ && use_audio_) {
      double sum = 0.0;
      for (double d : d_or_p) sum += d;
      score = sum / static_cast<double>(d_or_p.size());  // MDS
    } else {
      score = *std::max_element(d_or_p.begin(), d_or_p.end());  // max head probability
    }
    scores.push_back(score);
    labels.push_back(clip.label);
    (clip.label == 1 ? has_fake : has_real) = true;
  }
  if (!has_real || !has_fake) return std::nullopt;
  return auc(scores, labels);
}

CheckpointData Trainer::make_checkpoint(int epochs_done) const {
  CheckpointData ckpt;
  cfg::json j{{"features", cfg::to_json(fcfg_)},
              {"visual", cfg::to_json(vcfg_)},
              {"audio", cfg::to_json(acfg_)},
              {"objective", cfg::to_json(tcfg_.objective)},
              {"train", cfg::to_json(tcfg_)}};
  ckpt.config_json = cfg::canonical(j);
  ckpt.config_hash = cfg::model_config_hash(fcfg_, vcfg_, acfg_, tcfg_.objective);
  ckpt.epoch = epochs_done;
  ckpt.step = step_;
  ckpt.adam_t = adam_t_;
  ckpt.best_val_auc = best_val_auc_;
  ckpt.rng_state = rng_.serialize();
  ckpt.has_visual_stats = data_.has_visual_stats;
  ckpt.visual_stats = data_.visual_stats;
  store_stream_blobs(*visual_, ckpt);
  store_stream_blobs(*audio_, ckpt);
  std::size_t idx = 0;
  for (Stream* s : {visual_.get(), audio_.get()})
    for (auto* p : s->params()) {
      ckpt.blobs["adam_m/" + p->name] = adam_m_[idx].storage();
      ckpt.blobs["adam_v/" + p->name] = adam_v_[idx].storage();
      ++idx;
    }
  return ckpt;
}

TrainResult Trainer::run() {
  // Fresh run: truncate the metrics log.
  std::ofstream(out_dir_ / "metrics.jsonl", std::ios::trunc);
  return train_epochs(0);
}

TrainResult Trainer::run_from(const CheckpointData& ckpt) {
  restore_stream_blobs(*visual_, ckpt);
  restore_stream_blobs(*audio_, ckpt);
  std::size_t idx = 0;
  for (Stream* s : {visual_.get(), audio_.get()})
    for (auto* p : s->params()) {
      const auto mi = ckpt.blobs.find("adam_m/" + p->name);
      const auto vi = ckpt.blobs.find("adam_v/" + p->name);
      check_data(mi != ckpt.blobs.end() && vi != ckpt.blobs.end(),
                 "checkpoint: missing optimizer state for " + p->name);
      adam_m_[idx].storage() = mi->second;
      adam_v_[idx].storage() = vi->second;
      ++idx;
    }
  adam_t_ = ckpt.adam_t;
  step_ = ckpt.step;
  best_val_auc_ = ckpt.best_val_auc;
  rng_.deserialize(ckpt.rng_state);
  check_usage(ckpt.epoch < tcfg_.epochs,
              "resume: checkpoint already has " + std::to_string(ckpt.epoch) +
                  " epochs, config asks for " + std::to_string(tcfg_.epochs));
  return train_epochs(ckpt.epoch);
}

TrainResult Trainer::train_epochs(int start_epoch) {
  TrainResult result;
  result.metrics_path = out_dir_ / "metrics.jsonl";
  result.last_checkpoint = out_dir_ / "last.ckpt";
  result.best_checkpoint = out_dir_ / "best.ckpt";

  const std::size_t n = data_.train_segments.size();
  const VisualStats* stats = data_.has_visual_stats ? &data_.visual_stats : nullptr;

  std::vector<double> class_weights;
  if (tcfg_.class_weighting) {
    double n_fake = 0;
    for (const auto& s : data_.train_segments) n_fake += s.label;
    const double n_real = static_cast<double>(n) - n_fake;
    class_weights = {static_cast<double>(n) / (2.0 * n_real),
                     static_cast<double>(n) / (2.0 * n_fake)};
  }

  std::vector<std::size_t> order(n);
  int epochs_since_best = 0;
  bool have_best_file = fs::exists(result.best_checkpoint);

  for (int epoch = start_epoch; epoch < tcfg_.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng_.shuffle(order);

    LossBreakdown epoch_sum;
    std::int64_t epoch_batches = 0;

    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(tcfg_.batch_size)) {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(tcfg_.batch_size),
                                                     n - at);
      if (take < 2) break;  // batch norm needs at least two items

      std::vector<Tensor> prepared;
      std::vector<const Tensor*> vis_items, aud_items;
      std::vector<int> labels;
      std::vector<double> weights;
      prepared.reserve(take);
      for (std::size_t i = 0; i < take; ++i) {
        const auto& seg = data_.train_segments[order[at + i]];
        if (use_visual_) {
          prepared.push_back(prepare_visual(seg.visual, fcfg_, data_.fps, stats));
          vis_items.push_back(&prepared.back());
        }
        if (use_audio_) aud_items.push_back(&seg.audio_mfcc);
        labels.push_back(seg.label);
        if (tcfg_.class_weighting)
          weights.push_back(class_weights[static_cast<std::size_t>(seg.label)]);
      }
      const std::vector<double>* wptr = tcfg_.class_weighting ? &weights : nullptr;

      visual_->zero_grads();
      audio_->zero_grads();
      LossBreakdown loss;

      if (use_visual_ && use_audio_) {
        auto vo = visual_->forward(to_batch(vis_items, StreamKind::visual), true, &rng_);
        auto ao = audio_->forward(to_batch(aud_items, StreamKind::audio), true, &rng_);
        BatchLoss bl = combined_loss_batch(vo.embed, ao.embed, vo.logits, ao.logits, labels,
                                           tcfg_.objective, wptr);
        loss = bl.value;
        check_numeric(std::isfinite(loss.total),
                      "train: non-finite loss at step " + std::to_string(step_) +
                          "; last good checkpoint: " +
                          (fs::exists(result.last_checkpoint) ? result.last_checkpoint.string()
                                                              : "none"));
        visual_->backward(bl.d_fv, bl.d_logits_v);
        audio_->backward(bl.d_fa, bl.d_logits_a);
      } else if (use_visual_) {
        auto vo = visual_->forward(to_batch(vis_items, StreamKind::visual), true, &rng_);
        CeLoss ce = ce_loss(vo.logits, labels, tcfg_.objective.lambda2, wptr);
        loss.ce_visual = ce.value;
        loss.total = tcfg_.objective.lambda2 * ce.value;
        check_numeric(std::isfinite(loss.total),
                      "train: non-finite loss at step " + std::to_string(step_));
        visual_->backward(Tensor({static_cast<std::int64_t>(take), vcfg_.embed_dim}), ce.d_logits);
      } else {
        auto ao = audio_->forward(to_batch(aud_items, StreamKind::audio), true, &rng_);
        CeLoss ce = ce_loss(ao.logits, labels, tcfg_.objective.lambda3, wptr);
        loss.ce_audio = ce.value;
        loss.total = tcfg_.objective.lambda3 * ce.value;
        check_numeric(std::isfinite(loss.total),
                      "train: non-finite loss at step " + std::to_string(step_));
        audio_->backward(Tensor({static_cast<std::int64_t>(take), acfg_.embed_dim}), ce.d_logits);
      }

      adam_step();
      ++step_;
      log_line(step_, epoch, loss);
      epoch_sum.total += loss.total;
      epoch_sum.contrastive += loss.contrastive;
      epoch_sum.ce_visual += loss.ce_visual;
      epoch_sum.ce_audio += loss.ce_audio;
      ++epoch_batches;
    }

    LossBreakdown epoch_mean;
    if (epoch_batches > 0) {
      epoch_mean.total = epoch_sum.total / static_cast<double>(epoch_batches);
      epoch_mean.contrastive = epoch_sum.contrastive / static_cast<double>(epoch_batches);
      epoch_mean.ce_visual = epoch_sum.ce_visual / static_cast<double>(epoch_batches);
      epoch_mean.ce_audio = epoch_sum.ce_audio / static_cast<double>(epoch_batches);
    }
    if (epoch == start_epoch) result.first_epoch_loss = epoch_mean.total;
    result.final_epoch_loss = epoch_mean.total;

    const bool eval_now = ((epoch + 1) % tcfg_.eval_every == 0) || epoch + 1 == tcfg_.epochs;
    if (eval_now) {
      const auto val = validate();
      if (val) {
        last_val_auc_ = *val;
        log_line(step_, epoch, epoch_mean);
        if (*val > best_val_auc_) {
          best_val_auc_ = *val;
          epochs_since_best = 0;
          save_checkpoint(make_checkpoint(epoch + 1), result.best_checkpoint);
          have_best_file = true;
        } else {
          ++epochs_since_best;
        }
      }
    }

    save_checkpoint(make_checkpoint(epoch + 1), result.last_checkpoint);
    append_file(result.metrics_path, metrics_buffer_);
    metrics_buffer_.clear();
    result.epochs_run = epoch + 1;

    if (tcfg_.early_stop_patience > 0 && epochs_since_best >= tcfg_.early_stop_patience) break;
  }

  if (!have_best_file) result.best_checkpoint = result.last_checkpoint;
  result.steps = step_;
  result.best_val_auc = best_val_auc_;
  return result;
}

TrainResult train(const CorpusManifest& manifest, const FeatureConfig& fcfg,
                  const StreamConfig& visual_cfg, const StreamConfig& audio_cfg,
                  const TrainConfig& tcfg, const fs::path& out_dir, const FeatureCache* cache) {
  const TrainData data = build_train_data(manifest, fcfg, cache);
  Trainer trainer(data, fcfg, visual_cfg, audio_cfg, tcfg, out_dir);
  return trainer.run();
}

TrainResult resume(const CorpusManifest& manifest, const fs::path& checkpoint_path,
                   const fs::path& out_dir, std::optional<int> epochs_override) {
  const CheckpointData ckpt = load_checkpoint(checkpoint_path);
  const cfg::json j = cfg::json::parse(ckpt.config_json);
  const FeatureConfig fcfg = cfg::feature_from_json(j.at("features"));
  const StreamConfig vcfg = cfg::stream_from_json(j.at("visual"));
  const StreamConfig acfg = cfg::stream_from_json(j.at("audio"));
  TrainConfig tcfg = cfg::train_from_json(j.at("train"));
  if (epochs_override) tcfg.epochs = *epochs_override;

  const TrainData data = build_train_data(manifest, fcfg);
  Trainer trainer(data, fcfg, vcfg, acfg, tcfg, out_dir);
  return trainer.run_from(ckpt);
}

}  // namespace mds
