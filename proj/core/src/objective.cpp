// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/objective.hpp"

#include <cmath>

#include "mds/error.hpp"

namespace mds {

namespace {
constexpr double kProbEps = 1e-12;
constexpr double kDistEps = 1e-12;  // below this, the fake-pair gradient direction is undefined
}  // namespace

void validate_objective_config(const ObjectiveConfig& cfg) {
  check_usage(cfg.margin > 0.0, "objective: margin must be positive");
  check_usage(cfg.lambda1 >= 0.0 && cfg.lambda2 >= 0.0 && cfg.lambda3 >= 0.0,
              "objective: loss weights must be nonnegative");
  check_usage(cfg.lambda1 + cfg.lambda2 + cfg.lambda3 > 0.0,
              "objective: at least one loss weight must be nonzero");
}

double dissimilarity(std::span<const double> f_v, std::span<const double> f_a) {
  check_usage(f_v.size() == f_a.size(), "dissimilarity: embedding lengths differ (" +
                                            std::to_string(f_v.size()) + " vs " +
                                            std::to_string(f_a.size()) + ")");
  double sq = 0.0;
  for (std::size_t i = 0; i < f_v.size(); ++i) {
    const double diff = f_v[i] - f_a[i];
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

double contrastive_loss(std::span<const double> d, std::span<const int> y, double margin) {
  check_usage(d.size() == y.size(), "contrastive: d and y lengths differ");
  check_usage(!d.empty(), "contrastive: empty batch");
  check_usage(margin > 0.0, "contrastive: margin must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    check_usage(y[i] == 0 || y[i] == 1, "contrastive: labels must be 0 or 1");
    if (y[i] == 0) {
      sum += d[i] * d[i];
    } else {
      const double gap = std::max(margin - d[i], 0.0);
      sum += gap * gap;
    }
  }
  return sum / static_cast<double>(d.size());
}

double cross_entropy(double p_fake, int y) {
  check_usage(p_fake >= 0.0 && p_fake <= 1.0, "cross_entropy: probability outside [0,1]");
  check_usage(y == 0 || y == 1, "cross_entropy: label must be 0 or 1");
  const double p = std::min(std::max(p_fake, kProbEps), 1.0 - kProbEps);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

LossBreakdown combined_loss(const std::vector<EmbeddingPair>& outputs,
                            const std::vector<int>& labels, const ObjectiveConfig& cfg) {
  validate_objective_config(cfg);
  check_usage(outputs.size() == labels.size(), "combined_loss: outputs/labels size mismatch");
  check_usage(!outputs.empty(), "combined_loss: empty batch");

  const std::size_t n = outputs.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = dissimilarity(outputs[i].f_v, outputs[i].f_a);

  LossBreakdown out;
  out.contrastive = contrastive_loss(d, labels, cfg.margin);
  double ce_v = 0.0, ce_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ce_v += cross_entropy(outputs[i].p_v, labels[i]);
    ce_a += cross_entropy(outputs[i].p_a, labels[i]);
  }
  out.ce_visual = ce_v / static_cast<double>(n);
  out.ce_audio = ce_a / static_cast<double>(n);
  out.total = cfg.lambda1 * out.contrastive + cfg.lambda2 * out.ce_visual +
              cfg.lambda3 * out.ce_audio;
  return out;
}

namespace {

/// Mean CE from logits; writes lambda-scaled (softmax - onehot)/B into grad.
double ce_from_logits(const Tensor& logits, const std::vector<int>& labels, double lambda,
                      Tensor& grad, const std::vector<double>* weights) {
  const std::int64_t B = logits.dim(0);
  double sum = 0.0;
  for (std::int64_t b = 0; b < B; ++b) {
    const double w = weights ? (*weights)[static_cast<std::size_t>(b)] : 1.0;
    const double l0 = logits.at2(b, 0), l1 = logits.at2(b, 1);
    const double m = std::max(l0, l1);
    const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
    const int y = labels[static_cast<std::size_t>(b)];
    sum += w * (lse - (y == 1 ? l1 : l0));
    const double p0 = std::exp(l0 - lse), p1 = std::exp(l1 - lse);
    grad.at2(b, 0) += lambda * w * (p0 - (y == 0 ? 1.0 : 0.0)) / static_cast<double>(B);
    grad.at2(b, 1) += lambda * w * (p1 - (y == 1 ? 1.0 : 0.0)) / static_cast<double>(B);
  }
  return sum / static_cast<double>(B);
}

}  // namespace

BatchLoss combined_loss_batch(const Tensor& f_v, const Tensor& f_a, const Tensor& logits_v,
                              const Tensor& logits_a, const std::vector<int>& labels,
                              const ObjectiveConfig& cfg, const std::vector<double>* ce_weights) {
  validate_objective_config(cfg);
  check_usage(f_v.rank() == 2 && f_v.same_shape(f_a), "combined_loss: embedding batches must match");
  const std::int64_t B = f_v.dim(0);
  const std::int64_t E = f_v.dim(1);
  check_usage(static_cast<std::size_t>(B) == labels.size(), "combined_loss: labels size mismatch");
  check_usage(B > 0, "combined_loss: empty batch");

  BatchLoss out;
  out.d.resize(static_cast<std::size_t>(B));
  out.d_fv = Tensor({B, E});
  out.d_fa = Tensor({B, E});
  out.d_logits_v = Tensor({B, 2});
  out.d_logits_a = Tensor({B, 2});

  double l1_sum = 0.0;
  for (std::int64_t b = 0; b < B; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    check_usage(y == 0 || y == 1, "combined_loss: labels must be 0 or 1");
    double sq = 0.0;
    for (std::int64_t e = 0; e < E; ++e) {
      const double diff = f_v.at2(b, e) - f_a.at2(b, e);
      sq += diff * diff;
    }
    const double dist = std::sqrt(sq);
    out.d[static_cast<std::size_t>(b)] = dist;

    // d/dfv of the item's contrastive term, before the 1/B mean and lambda1.
    double coef = 0.0;
    if (y == 0) {
      l1_sum += sq;
      coef = 2.0;
    } else if (dist < cfg.margin) {
      const double gap = cfg.margin - dist;
      l1_sum += gap * gap;
      // d(gap^2)/d(fv) = -2 gap * (fv-fa)/dist; one-sided subgradient at dist=0
      coef = dist > kDistEps ? -2.0 * gap / dist : 0.0;
    }
    if (coef != 0.0) {
      const double scale = cfg.lambda1 * coef / static_cast<double>(B);
      for (std::int64_t e = 0; e < E; ++e) {
        const double diff = f_v.at2(b, e) - f_a.at2(b, e);
        out.d_fv.at2(b, e) = scale * diff;
        out.d_fa.at2(b, e) = -scale * diff;
      }
    }
  }
  out.value.contrastive = l1_sum / static_cast<double>(B);
  out.value.ce_visual = ce_from_logits(logits_v, labels, cfg.lambda2, out.d_logits_v, ce_weights);
  out.value.ce_audio = ce_from_logits(logits_a, labels, cfg.lambda3, out.d_logits_a, ce_weights);
  out.value.total = cfg.lambda1 * out.value.contrastive + cfg.lambda2 * out.value.ce_visual +
                    cfg.lambda3 * out.value.ce_audio;
  return out;
}

CeLoss ce_loss(const Tensor& logits, const std::vector<int>& labels, double lambda,
               const std::vector<double>* weights) {
  check_usage(logits.rank() == 2 && logits.dim(1) == 2, "ce_loss: logits must be (B,2)");
  check_usage(static_cast<std::size_t>(logits.dim(0)) == labels.size(),
              "ce_loss: labels size mismatch");
  CeLoss out;
  out.d_logits = Tensor({logits.dim(0), 2});
  out.value = ce_from_logits(logits, labels, lambda, out.d_logits, weights);
  return out;
}

GradCheckResult finite_difference_check(
    const std::vector<nn::Param*>& params,
    const std::function<double(std::uint64_t* activation_sig)>& loss_fn, double h,
    int max_coords, std::uint64_t seed, double denom_floor) {
  check_usage(h > 0.0, "gradient check: step h must be positive");

  // Flat coordinate space over all parameters.
  std::vector<std::pair<std::size_t, std::int64_t>> coords;
  for (std::size_t pi = 0; pi < params.size(); ++pi)
    for (std::int64_t i = 0; i < params[pi]->value.size(); ++i)
      check_numeric(std::isfinite(params[pi]->grad[i]),
                    "gradient check: non-finite analytic gradient in " + params[pi]->name);
  std::int64_t total = 0;
  for (const auto* p : params) total += p->value.size();
  check_usage(total > 0, "gradient check: no parameters");

  Rng rng(seed);
  const int n_check = static_cast<int>(std::min<std::int64_t>(max_coords, total));
  coords.reserve(static_cast<std::size_t>(n_check));
  for (int k = 0; k < n_check; ++k) {
    std::int64_t flat = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(total)));
    std::size_t pi = 0;
    while (flat >= params[pi]->value.size()) {
      flat -= params[pi]->value.size();
      ++pi;
    }
    coords.emplace_back(pi, flat);
  }

  GradCheckResult result;
  for (const auto& [pi, i] : coords) {
    nn::Param* p = params[pi];
    const double saved = p->value[i];
    std::uint64_t sig_plus = 0, sig_minus = 0;
    p->value[i] = saved + h;
    const double loss_plus = loss_fn(&sig_plus);
    p->value[i] = saved - h;
    const double loss_minus = loss_fn(&sig_minus);
    p->value[i] = saved;

    if (sig_plus != sig_minus) {
      ++result.excluded_activation_kink;
      continue;
    }
    const double fd = (loss_plus - loss_minus) / (2.0 * h);
    const double an = p->grad[i];
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), denom_floor});
    ++result.coords_checked;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = p->name + "[" + std::to_string(i) + "]";
    }
  }
  return result;
}

GradCheckResult gradient_check(Stream& visual, Stream& audio, const Tensor& vis_batch,
                               const Tensor& aud_batch, const std::vector<int>& labels,
                               const ObjectiveConfig& cfg, double h, int coords_per_stream,
                               std::uint64_t seed, double kink_band) {
  check_usage(visual.config().dropout_p == 0.0 && audio.config().dropout_p == 0.0,
              "gradient check: build the streams with dropout_p=0");
  check_usage(vis_batch.dim(0) == aud_batch.dim(0) &&
                  static_cast<std::size_t>(vis_batch.dim(0)) == labels.size(),
              "gradient check: batch sizes disagree");

  // Drop items sitting on the contrastive margin kink.
  auto vo = visual.forward(vis_batch, /*train=*/true);
  auto ao = audio.forward(aud_batch, /*train=*/true);
  BatchLoss base = combined_loss_batch(vo.embed, ao.embed, vo.logits, ao.logits, labels, cfg);

  std::vector<std::int64_t> keep;
  GradCheckResult result;
  for (std::int64_t b = 0; b < vis_batch.dim(0); ++b) {
    if (labels[static_cast<std::size_t>(b)] == 1 &&
        std::abs(base.d[static_cast<std::size_t>(b)] - cfg.margin) <= kink_band)
      ++result.excluded_margin_kink;
    else
      keep.push_back(b);
  }
  check_usage(keep.size() >= 2, "gradient check: too few items left after margin-kink exclusion");

  auto slice_batch = [&](const Tensor& src) {
    nn::Shape s = src.shape();
    const std::int64_t item = src.size() / s[0];
    s[0] = static_cast<std::int64_t>(keep.size());
    Tensor dst(s);
    for (std::size_t k = 0; k < keep.size(); ++k)
      std::copy(src.data() + keep[k] * item, src.data() + (keep[k] + 1) * item,
                dst.data() + static_cast<std::int64_t>(k) * item);
    return dst;
  };
  const Tensor vis = slice_batch(vis_batch);
  const Tensor aud = slice_batch(aud_batch);
  std::vector<int> y;
  for (auto b : keep) y.push_back(labels[static_cast<std::size_t>(b)]);

  // Analytic gradients at the base point.
  visual.zero_grads();
  audio.zero_grads();
  vo = visual.forward(vis, true);
  ao = audio.forward(aud, true);
  BatchLoss loss = combined_loss_batch(vo.embed, ao.embed, vo.logits, ao.logits, y, cfg);
  visual.backward(loss.d_fv, loss.d_logits_v);
  audio.backward(loss.d_fa, loss.d_logits_a);

  auto eval = [&](std::uint64_t* sig) {
    auto v = visual.forward(vis, true);
    auto a = audio.forward(aud, true);
    BatchLoss l = combined_loss_batch(v.embed, a.embed, v.logits, a.logits, y, cfg);
    std::uint64_t s = visual.activation_signature() * 0x100000001b3ull ^ audio.activation_signature();
    // The margin indicator is a kink of the same class as a relu flip.
    for (std::size_t i = 0; i < l.d.size(); ++i) {
      s *= 0x100000001b3ull;
      s ^= (y[i] == 1 && l.d[i] < cfg.margin) ? 0x5bull : 0xa7ull;
    }
    if (sig) *sig = s;
    return l.value.total;
  };

  for (Stream* stream : {&visual, &audio}) {
    GradCheckResult part = finite_difference_check(stream->params(), eval, h, coords_per_stream,
                                                   Rng::derive(seed, stream == &visual ? 11 : 12));
    result.coords_checked += part.coords_checked;
    result.excluded_activation_kink += part.excluded_activation_kink;
    if (part.max_rel_error > result.max_rel_error) {
      result.max_rel_error = part.max_rel_error;
      result.worst_param = part.worst_param;
    }
  }
  return result;
}

}  // namespace mds
