// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "mds/checkpoint.hpp"
#include "mds/config.hpp"
#include "mds/error.hpp"
#include "mds/evalkit.hpp"
#include "mds/io.hpp"
#include "mds/trainer.hpp"
#include "mds/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mds {

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int jobs = 1;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool out_required = true) {
  cmd->add_option("-c,--config", opts.config_path, "JSON config file");
  cmd->add_option("--set", opts.overrides, "dotted-key overrides, e.g. train.epochs=20");
  auto* out = cmd->add_option("-o,--out", opts.out_dir, "output directory");
  if (out_required) out->required();
  cmd->add_option("--jobs", opts.jobs, "parallelism cap (all pipelines are deterministic)");
  cmd->add_flag("-v,--verbose", opts.verbose, "chatty progress output");
}

json default_config() {
  return json{{"synth", cfg::to_json(SynthConfig{})},
              {"features", cfg::to_json(FeatureConfig{})},
              {"streams",
               {{"preset", "desk"}, {"embed_dim", 64}, {"dropout_p", 0.5}}},
              {"objective", cfg::to_json(ObjectiveConfig{})},
              {"train", cfg::to_json(TrainConfig{})},
              {"scoring", {{"tau", nullptr}, {"tau_seg", nullptr}, {"median_filter", false}}},
              {"split", {{"train", 0.7}, {"val", 0.1}, {"test", 0.2}}},
              {"frames_format", "npy"}};
}

void deep_merge(json& base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object())
      deep_merge(base[key], value);
    else
      base[key] = value;
  }
}

json resolve_config(const CommonOpts& opts) {
  json config = default_config();
  if (!opts.config_path.empty()) deep_merge(config, cfg::load_config_file(opts.config_path));
  for (const auto& assignment : opts.overrides) cfg::apply_dotted_override(config, assignment);
  return config;
}

/// Did the caller explicitly configure the features section?
bool user_set_features(const CommonOpts& opts) {
  if (!opts.config_path.empty() && cfg::load_config_file(opts.config_path).contains("features"))
    return true;
  for (const auto& assignment : opts.overrides)
    if (assignment.rfind("features.", 0) == 0) return true;
  return false;
}

void write_provenance(const fs::path& out_dir, const std::vector<std::string>& args,
                      const json& config) {
  json p{{"version", kVersion}, {"command", args}, {"config", config}};
  io::write_text_file(out_dir / "provenance.json", p.dump(2) + "\n");
}

int mfcc_t_steps(const FeatureConfig& fcfg, int sample_rate) {
  const int win = static_cast<int>(std::lround(fcfg.win_len_s * sample_rate));
  const int hop = static_cast<int>(std::lround(fcfg.hop_s * sample_rate));
  const int seg = static_cast<int>(std::lround(fcfg.segment_s * sample_rate));
  return (seg - win) / hop + 1;
}

struct ResolvedStreams {
  StreamConfig visual;
  StreamConfig audio;
};

ResolvedStreams resolve_streams(const json& config, const FeatureConfig& fcfg,
                                const ClipRecord& sample_clip) {
  const json& sj = config.at("streams");
  ResolvedStreams out;
  const auto t_frames = static_cast<int>(std::lround(fcfg.segment_s * sample_clip.fps));
  const auto h = static_cast<int>(sample_clip.frames.dim(2));
  const auto w = static_cast<int>(sample_clip.frames.dim(3));
  const int t_steps = mfcc_t_steps(fcfg, sample_clip.sample_rate);
  const auto embed = sj.value("embed_dim", 64);

  if (sj.contains("visual") && sj["visual"].contains("conv_spec")) {
    out.visual = cfg::stream_from_json(sj["visual"]);
  } else {
    const std::string preset = sj.value("preset", "desk");
    if (preset == "desk") {
      out.visual = desk_visual_config(t_frames, h, w, embed);
    } else if (preset == "full") {
      out.visual = full_visual_config();
    } else {
      throw UsageError("unknown stream preset '" + preset + "' (desk|full)");
    }
  }
  if (sj.contains("audio") && sj["audio"].contains("conv_spec")) {
    out.audio = cfg::stream_from_json(sj["audio"]);
  } else {
    const std::string preset = sj.value("preset", "desk");
    out.audio = preset == "full" ? full_audio_config()
                                 : desk_audio_config(fcfg.n_mfcc, t_steps, embed);
  }
  if (sj.contains("dropout_p")) {
    out.visual.dropout_p = sj["dropout_p"].get<double>();
    out.audio.dropout_p = sj["dropout_p"].get<double>();
  }
  return out;
}

std::map<std::string, std::string> stratified_split(const std::vector<ClipRecord>& clips,
                                                    double train_frac, double val_frac) {
  std::map<std::string, std::string> split;
  for (int label = 0; label <= 1; ++label) {
    std::vector<const ClipRecord*> group;
    for (const auto& c : clips)
      if (c.label == label) group.push_back(&c);
    const auto n = static_cast<double>(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      const double u = (static_cast<double>(i) + 0.5) / n;
      split[group[i]->clip_id] =
          u < train_frac ? "train" : (u < train_frac + val_frac ? "val" : "test");
    }
  }
  return split;
}

// ------------------------------------------------------------- subcommands

int cmd_synth(const CommonOpts& opts, const std::vector<std::string>& args) {
  const json config = resolve_config(opts);
  SynthConfig scfg = cfg::synth_from_json(config.at("synth"));
  validate_synth_config(scfg);
  const double train_frac = config.at("split").value("train", 0.7);
  const double val_frac = config.at("split").value("val", 0.1);
  check_usage(train_frac >= 0 && val_frac >= 0 && train_frac + val_frac <= 1.0,
              "synth: split fractions must be nonnegative and sum to at most 1");
  const bool as_npy = config.value("frames_format", "npy") == "npy";

  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  const auto clips = generate_synthetic_corpus(scfg);
  check_usage(!clips.empty(), "synth: nothing to generate (zero clip counts)");

  CorpusManifest manifest;
  manifest.root = out;
  for (const auto& clip : clips)
    manifest.clips.push_back(write_clip_data(clip, out, fs::path("clips") / clip.clip_id, as_npy));
  manifest.split = stratified_split(clips, train_frac, val_frac);
  save_manifest(manifest, out / "manifest.json");
  write_provenance(out, args, config);

  std::printf("wrote %zu clips (%d real, %d fake) to %s\n", clips.size(), scfg.n_real,
              scfg.n_fake, out.string().c_str());
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& manifest_path,
              const std::string& resume_path, int resume_epochs, const std::string& cache_dir,
              const std::vector<std::string>& args) {
  const json config = resolve_config(opts);
  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  const CorpusManifest manifest = load_manifest(manifest_path);

  TrainResult result;
  if (!resume_path.empty()) {
    result = resume(manifest, resume_path, out,
                    resume_epochs > 0 ? std::optional<int>(resume_epochs) : std::nullopt);
  } else {
    const FeatureConfig fcfg = cfg::feature_from_json(config.at("features"));
    validate_feature_config(fcfg);
    TrainConfig tcfg = cfg::train_from_json(config.at("train"));
    tcfg.objective = cfg::objective_from_json(config.at("objective"));

    const auto train_ids = manifest.ids_in_split("train");
    check_data(!train_ids.empty(), "train: manifest has no train split");
    const ClipRecord sample = load_clip(manifest, train_ids.front());
    const ResolvedStreams streams = resolve_streams(config, fcfg, sample);
    std::printf("visual stream: %lld parameters; audio stream: %lld parameters\n",
                static_cast<long long>(stream_param_count(streams.visual)),
                static_cast<long long>(stream_param_count(streams.audio)));
    write_provenance(out, args, config);
    FeatureCache cache;
    if (!cache_dir.empty())
      cache = FeatureCache(cache_dir, cfg::fnv1a(cfg::canonical(cfg::to_json(fcfg))));
    result = train(manifest, fcfg, streams.visual, streams.audio, tcfg, out,
                   cache.enabled() ? &cache : nullptr);
  }

  std::printf("trained %d epochs (%lld steps)\n", result.epochs_run,
              static_cast<long long>(result.steps));
  if (result.best_val_auc >= 0) std::printf("best val AUC %.4f\n", result.best_val_auc);
  std::printf("checkpoints: %s (best), %s (last)\nmetrics: %s\n",
              result.best_checkpoint.string().c_str(), result.last_checkpoint.string().c_str(),
              result.metrics_path.string().c_str());
  return 0;
}

struct ScoringSetup {
  ModelBundle bundle;
  CorpusManifest manifest;
  std::optional<double> tau_override;
  bool median_filter = false;
};

ScoringSetup load_scoring_setup(const CommonOpts& opts, const std::string& checkpoint_path,
                                const std::string& manifest_path, double tau_flag) {
  ScoringSetup setup;
  setup.bundle = load_model(checkpoint_path);

  // A caller-supplied feature config must agree with the checkpoint's.
  if (user_set_features(opts)) {
    const json config = resolve_config(opts);
    const FeatureConfig requested = cfg::feature_from_json(config.at("features"));
    const auto requested_hash = cfg::fnv1a(cfg::canonical(cfg::to_json(requested)));
    const auto stored_hash =
        cfg::fnv1a(cfg::canonical(cfg::to_json(setup.bundle.features)));
    check_data(requested_hash == stored_hash,
               "score: feature config does not match the checkpoint's (hash " +
                   std::to_string(requested_hash) + " vs " + std::to_string(stored_hash) +
                   "); re-run without overriding features or retrain");
  }
  const json config = resolve_config(opts);
  const json& scoring = config.at("scoring");
  if (tau_flag == tau_flag && tau_flag != -1.0) setup.tau_override = tau_flag;  // flag given
  else if (!scoring.at("tau").is_null()) setup.tau_override = scoring["tau"].get<double>();
  setup.median_filter = scoring.value("median_filter", false);

  setup.manifest = load_manifest(manifest_path);
  return setup;
}

int cmd_score(const CommonOpts& opts, const std::string& checkpoint_path,
              const std::string& manifest_path, const std::string& split, double tau_flag,
              const std::vector<std::string>& args) {
  ScoringSetup setup = load_scoring_setup(opts, checkpoint_path, manifest_path, tau_flag);
  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  const VisualStats* stats = setup.bundle.has_visual_stats ? &setup.bundle.visual_stats : nullptr;

  EvalReport report =
      evaluate_split(setup.manifest, *setup.bundle.visual, *setup.bundle.audio,
                     setup.bundle.features, stats, split, setup.tau_override,
                     setup.median_filter);

  json scores = json::array();
  std::vector<std::pair<double, int>> dist;
  for (const auto& r : report.reports) {
    scores.push_back(report_to_json(r));
    dist.emplace_back(r.mds, setup.manifest.entry(r.clip_id).label);
  }
  io::write_text_file(out / "scores.json", scores.dump(2) + "\n");
  write_mds_distribution_svg(dist, report.tau, out / "mds_distribution.svg");
  write_provenance(out, args, resolve_config(opts));

  std::printf("tau (train-split midpoint): %.6f\n", report.tau);
  for (const auto& r : report.reports)
    std::printf("%-16s mds %.4f -> %s\n", r.clip_id.c_str(), r.mds,
                r.predicted_label ? "fake" : "real");
  std::printf("scored %d clips; reports in %s\n", report.n_scored,
              (out / "scores.json").string().c_str());
  return 0;
}

int cmd_localize(const CommonOpts& opts, const std::string& checkpoint_path,
                 const std::string& manifest_path, const std::string& split, double tau_flag,
                 double tau_seg_flag, const std::vector<std::string>& args) {
  ScoringSetup setup = load_scoring_setup(opts, checkpoint_path, manifest_path, tau_flag);
  const fs::path out(opts.out_dir);
  fs::create_directories(out / "plots");
  const VisualStats* stats = setup.bundle.has_visual_stats ? &setup.bundle.visual_stats : nullptr;
  const FeatureConfig& fcfg = setup.bundle.features;

  double tau;
  if (setup.tau_override) {
    tau = *setup.tau_override;
  } else {
    std::vector<std::pair<double, int>> train_scores;
    for (const auto& id : setup.manifest.ids_in_split("train")) {
      const ClipRecord clip = load_clip(setup.manifest, id);
      train_scores.emplace_back(
          score_clip(*setup.bundle.visual, *setup.bundle.audio, clip, fcfg, stats).mds,
          clip.label);
    }
    check_data(!train_scores.empty(), "localize: no train split to calibrate tau from");
    tau = calibrate_threshold(train_scores);
  }
  const double tau_seg = tau_seg_flag >= 0 ? tau_seg_flag : tau;

  json table = json::array();
  const auto ids = setup.manifest.ids_in_split(split);
  check_data(!ids.empty(), "localize: split '" + split + "' is empty");
  for (const auto& id : ids) {
    const ClipRecord clip = load_clip(setup.manifest, id);
    const ClipScore cs = score_clip(*setup.bundle.visual, *setup.bundle.audio, clip, fcfg, stats);
    ScoreReport r =
        make_score_report(id, cs, tau, tau_seg, fcfg.segment_s, setup.median_filter);
    write_localization_svg(r, fcfg.segment_s, clip.span_truth, out / "plots" / (id + ".svg"));
    json entry = report_to_json(r);
    if (!clip.span_truth.empty()) {
      const auto m = localization_metrics(r.spans, clip.span_truth, fcfg.segment_s);
      entry["f1"] = m.f1;
    }
    table.push_back(entry);
    std::printf("%-16s mds %.4f spans:", id.c_str(), r.mds);
    for (const auto& s : r.spans)
      std::printf(" %s[%.0f,%.0f)", s.label ? "fake" : "real", s.start_s, s.end_s);
    std::printf("\n");
  }
  io::write_text_file(out / "localization.json", table.dump(2) + "\n");
  write_provenance(out, args, resolve_config(opts));
  std::printf("plots in %s\n", (out / "plots").string().c_str());
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint_path,
             const std::string& manifest_path, const std::string& split, double tau_flag,
             const std::vector<std::string>& args) {
  ScoringSetup setup = load_scoring_setup(opts, checkpoint_path, manifest_path, tau_flag);
  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  const VisualStats* stats = setup.bundle.has_visual_stats ? &setup.bundle.visual_stats : nullptr;

  const EvalReport report =
      evaluate_split(setup.manifest, *setup.bundle.visual, *setup.bundle.audio,
                     setup.bundle.features, stats, split, setup.tau_override,
                     setup.median_filter);
  json ej = eval_report_to_json(report);
  ej["provenance"] = {{"config_hash", setup.bundle.config_hash},
                      {"checkpoint", checkpoint_path},
                      {"split", split},
                      {"train_seed", setup.bundle.train.seed}};
  io::write_text_file(out / "eval.json", ej.dump(2) + "\n");
  write_provenance(out, args, resolve_config(opts));

  std::printf("video-wise AUC: %.4f\n", report.auc_video);
  std::printf("frame-wise AUC: %.4f\n", report.auc_frame);
  if (report.has_localization)
    std::printf("localization (segment level): precision %.4f recall %.4f F1 %.4f\n",
                report.localization.precision, report.localization.recall,
                report.localization.f1);
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& manifest_path,
               const std::string& grid_arg, const std::vector<std::string>& args) {
  const json config = resolve_config(opts);
  const fs::path out(opts.out_dir);
  fs::create_directories(out);

  const FeatureConfig fcfg = cfg::feature_from_json(config.at("features"));
  TrainConfig tcfg = cfg::train_from_json(config.at("train"));
  tcfg.objective = cfg::objective_from_json(config.at("objective"));

  std::vector<std::array<double, 3>> grid;
  if (grid_arg.empty()) {
    grid = {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1}};
  } else {
    std::istringstream rows(grid_arg);
    std::string row;
    while (std::getline(rows, row, ';')) {
      std::array<double, 3> l{};
      check_usage(std::sscanf(row.c_str(), "%lf,%lf,%lf", &l[0], &l[1], &l[2]) == 3,
                  "ablate: --grid rows must look like 'l1,l2,l3;...'");
      grid.push_back(l);
    }
  }

  const CorpusManifest manifest = load_manifest(manifest_path);
  std::vector<ClipRecord> clips;
  for (const auto& e : manifest.clips) clips.push_back(load_clip(manifest, e.clip_id));

  const auto train_ids = manifest.ids_in_split("train");
  check_data(!train_ids.empty(), "ablate: manifest has no train split");
  const ClipRecord& sample = *std::find_if(clips.begin(), clips.end(), [&](const ClipRecord& c) {
    return c.clip_id == train_ids.front();
  });
  const ResolvedStreams streams = resolve_streams(config, fcfg, sample);

  const AblationReport report =
      ablate(clips, manifest.split, fcfg, streams.visual, streams.audio, tcfg, grid, out);
  io::write_text_file(out / "ablation.json", ablation_report_to_json(report).dump(2) + "\n");
  write_provenance(out, args, config);
  std::printf("%s", ablation_table(report).c_str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"modality-dissonance deepfake detection"};
  app.require_subcommand(1);

  CommonOpts synth_opts, train_opts, score_opts, loc_opts, eval_opts, ablate_opts;
  std::string manifest_path, checkpoint_path, resume_path, split = "test", grid_arg;
  double tau_flag = -1.0, tau_seg_flag = -1.0;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  int n_real = 0, n_fake = 0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus + manifest");
  add_common(synth, synth_opts);
  synth->add_option("--n-real", n_real, "real clip count");
  synth->add_option("--n-fake", n_fake, "fake clip count");
  synth->add_option("--seed", seed_flag, "generator seed")->each([&](const std::string&) {
    seed_given = true;
  });

  auto* train_cmd = app.add_subcommand("train", "train both streams on a manifest");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--manifest", manifest_path, "corpus manifest")->required();
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  std::string cache_dir;
  train_cmd->add_option("--cache", cache_dir, "feature-cache directory for MFCC maps");
  int resume_epochs = 0;
  train_cmd->add_option("--epochs", resume_epochs,
                        "epoch target when resuming (otherwise from the checkpoint)");
  train_cmd->add_option("--seed", seed_flag, "training seed")->each([&](const std::string&) {
    seed_given = true;
  });

  auto* score = app.add_subcommand("score", "score clips with a trained checkpoint");
  add_common(score, score_opts);
  score->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();
  score->add_option("--manifest", manifest_path, "corpus manifest")->required();
  score->add_option("--split", split, "split to score (train|val|test)");
  score->add_option("--tau", tau_flag, "decision threshold override");

  auto* localize_cmd = app.add_subcommand("localize", "temporal forgery localization");
  add_common(localize_cmd, loc_opts);
  localize_cmd->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();
  localize_cmd->add_option("--manifest", manifest_path, "corpus manifest")->required();
  localize_cmd->add_option("--split", split, "split to localize");
  localize_cmd->add_option("--tau", tau_flag, "video threshold override");
  localize_cmd->add_option("--tau-seg", tau_seg_flag, "segment threshold override");

  auto* eval_cmd = app.add_subcommand("eval", "video- and frame-wise AUC report");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();
  eval_cmd->add_option("--manifest", manifest_path, "corpus manifest")->required();
  eval_cmd->add_option("--split", split, "split to evaluate");
  eval_cmd->add_option("--tau", tau_flag, "decision threshold override");

  auto* ablate_cmd = app.add_subcommand("ablate", "loss-configuration comparison table");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--manifest", manifest_path, "corpus manifest")->required();
  ablate_cmd->add_option("--grid", grid_arg, "lambda rows 'l1,l2,l3;l1,l2,l3;...'");
  ablate_cmd->add_option("--seed", seed_flag, "shared training seed")->each(
      [&](const std::string&) { seed_given = true; });

  std::vector<const char*> argv;
  argv.push_back("mds");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  auto with_seed = [&](CommonOpts& opts, const char* key) {
    if (seed_given) opts.overrides.push_back(std::string(key) + "=" + std::to_string(seed_flag));
  };

  try {
    if (synth->parsed()) {
      if (synth->count("--n-real") > 0)
        synth_opts.overrides.push_back("synth.n_real=" + std::to_string(n_real));
      if (synth->count("--n-fake") > 0)
        synth_opts.overrides.push_back("synth.n_fake=" + std::to_string(n_fake));
      with_seed(synth_opts, "synth.seed");
      return cmd_synth(synth_opts, args);
    }
    if (train_cmd->parsed()) {
      with_seed(train_opts, "train.seed");
      return cmd_train(train_opts, manifest_path, resume_path, resume_epochs, cache_dir, args);
    }
    if (score->parsed()) return cmd_score(score_opts, checkpoint_path, manifest_path, split, tau_flag, args);
    if (localize_cmd->parsed())
      return cmd_localize(loc_opts, checkpoint_path, manifest_path, split, tau_flag, tau_seg_flag,
                          args);
    if (eval_cmd->parsed())
      return cmd_eval(eval_opts, checkpoint_path, manifest_path, split, tau_flag, args);
    if (ablate_cmd->parsed()) {
      with_seed(ablate_opts, "train.seed");
      return cmd_ablate(ablate_opts, manifest_path, grid_arg, args);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace mds
