// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mds/corpus.hpp"
#include "mds/features.hpp"
#include "mds/objective.hpp"
#include "mds/streams.hpp"
#include "mds/trainer_config.hpp"

namespace mds::cfg {

using json = nlohmann::json;

std::uint64_t fnv1a(const std::string& s);

json to_json(const FeatureConfig& c);
json to_json(const StreamConfig& c);
json to_json(const ObjectiveConfig& c);
json to_json(const TrainConfig& c);
json to_json(const SynthConfig& c);

FeatureConfig feature_from_json(const json& j);
StreamConfig stream_from_json(const json& j);
ObjectiveConfig objective_from_json(const json& j);
TrainConfig train_from_json(const json& j);
SynthConfig synth_from_json(const json& j);

/// Identity hash of a trained model: features + both streams + objective.
/// Checkpoints store it; consumers refuse mismatches.
std::uint64_t model_config_hash(const FeatureConfig& f, const StreamConfig& v,
                                const StreamConfig& a, const ObjectiveConfig& o);

/// Canonical (sorted-key, compact) dump used for hashing and provenance.
std::string canonical(const json& j);

/// Parses "a.b.c=value" and applies it to the config tree. The value is
/// parsed as JSON when possible, else taken as a string.
void apply_dotted_override(json& root, const std::string& assignment);

json load_config_file(const std::filesystem::path& path);

}  // namespace mds::cfg
