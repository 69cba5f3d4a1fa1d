// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mds/streams.hpp"
#include "mds/tensor.hpp"

namespace mds {

/// Weights and margin of the combined training objective
///   L = lambda1 * contrastive + lambda2 * visual CE + lambda3 * audio CE.
struct ObjectiveConfig {
  double margin = 0.99;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
};

void validate_objective_config(const ObjectiveConfig& cfg);

/// Euclidean distance between the two segment embeddings (the per-segment
/// dissimilarity d_t).
double dissimilarity(std::span<const double> f_v, std::span<const double> f_a);

/// Margin contrastive loss, mean over the batch. Real pairs (y=0) are pulled
/// together (d^2); fake pairs (y=1) are pushed past the margin
/// (max(margin-d, 0)^2).
double contrastive_loss(std::span<const double> d, std::span<const int> y, double margin);

/// Binary cross-entropy on a fake probability, clamped at eps=1e-12.
double cross_entropy(double p_fake, int y);

struct LossBreakdown {
  double total = 0.0;
  double contrastive = 0.0;  // L1
  double ce_visual = 0.0;    // L2
  double ce_audio = 0.0;     // L3
};

/// Scalar-path combined loss over per-segment outputs. Sequential reduction,
/// reproducible order.
LossBreakdown combined_loss(const std::vector<EmbeddingPair>& outputs,
                            const std::vector<int>& labels, const ObjectiveConfig& cfg);

/// Batch-tensor combined loss with gradients, as used by the trainer.
/// Cross-entropy is computed from logits via log-softmax; identical in value
/// to cross_entropy(softmax(logits)[1], y) within rounding.
struct BatchLoss {
  LossBreakdown value;
  std::vector<double> d;  // per-item dissimilarities
  Tensor d_fv, d_fa;            // (B, E)
  Tensor d_logits_v, d_logits_a;  // (B, 2)
};

/// ce_weights (optional, one per item) rescale only the cross-entropy terms;
/// used for inverse-frequency class weighting.
BatchLoss combined_loss_batch(const Tensor& f_v, const Tensor& f_a, const Tensor& logits_v,
                              const Tensor& logits_a, const std::vector<int>& labels,
                              const ObjectiveConfig& cfg,
                              const std::vector<double>* ce_weights = nullptr);

/// Lambda-scaled mean cross-entropy over (B,2) logits, with gradient.
/// Used by the trainer for single-stream objectives.
struct CeLoss {
  double value = 0.0;   // unscaled mean CE
  Tensor d_logits;      // gradient of lambda * mean CE
};
CeLoss ce_loss(const Tensor& logits, const std::vector<int>& labels, double lambda,
               const std::vector<double>* weights = nullptr);

// ---------------------------------------------------------------------------
// Numerical gradient verification
// ---------------------------------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  int coords_checked = 0;
  int excluded_margin_kink = 0;      // batch items near the contrastive margin
  int excluded_activation_kink = 0;  // coordinates whose +/-h evals crossed a relu/pool kink
  std::string worst_param;
};

/// Central finite differences over a random subset of parameter coordinates.
/// Caller fills each Param's grad with the analytic gradient first. loss_fn
/// evaluates the loss at the current parameter values and writes an
/// activation signature (hash of relu/pool decision patterns; 0 when not
/// applicable) — coordinates whose two evaluations disagree on the signature
/// sit on a subgradient kink and are excluded. Relative error uses
/// |fd - an| / max(|fd|, |an|, denom_floor).
GradCheckResult finite_difference_check(
    const std::vector<nn::Param*>& params,
    const std::function<double(std::uint64_t* activation_sig)>& loss_fn, double h,
    int max_coords, std::uint64_t seed, double denom_floor = 1e-3);

/// End-to-end check of the combined loss through both streams (training-mode
/// batch norm; streams must be built with dropout_p=0 so the loss is
/// deterministic). Batch items whose dissimilarity lies within kink_band of
/// the margin are removed before checking. Throws NumericError naming the
/// parameter if any analytic gradient is non-finite.
GradCheckResult gradient_check(Stream& visual, Stream& audio, const Tensor& vis_batch,
                               const Tensor& aud_batch, const std::vector<int>& labels,
                               const ObjectiveConfig& cfg, double h = 1e-4,
                               int coords_per_stream = 150, std::uint64_t seed = 0,
                               double kink_band = 1e-3);

}  // namespace mds
