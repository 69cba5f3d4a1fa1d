// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/nn.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "mds/error.hpp"

namespace mds::nn {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

Shape batched(const Tensor& x) {
  check_usage(x.rank() >= 2, "nn: batched tensor expected");
  return Shape(x.shape().begin() + 1, x.shape().end());
}

std::int64_t product(const Shape& s, std::size_t from = 0) {
  std::int64_t n = 1;
  for (std::size_t i = from; i < s.size(); ++i) n *= s[i];
  return n;
}
}  // namespace

// ---------------------------------------------------------------- Conv3d

Conv3d::Conv3d(std::string name, std::int64_t in_ch, std::int64_t out_ch,
               std::array<int, 3> kernel, std::array<int, 3> stride, std::array<int, 3> pad)
    : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), k_(kernel), s_(stride), p_(pad) {
  const std::int64_t rows = in_ch_ * k_[0] * k_[1] * k_[2];
  weight_.name = name_ + "/weight";
  weight_.value = Tensor({out_ch_, rows});
  weight_.grad = Tensor({out_ch_, rows});
}

Shape Conv3d::output_shape(const Shape& in) const {
  check_usage(in.size() == 4, "nn: " + name_ + ": expected (C,T,H,W) input, got rank " +
                                  std::to_string(in.size()));
  check_usage(in[0] == in_ch_, "nn: " + name_ + ": expected " + std::to_string(in_ch_) +
                                   " input channels, got " + std::to_string(in[0]));
  Shape out{out_ch_, 0, 0, 0};
  for (int d = 0; d < 3; ++d) {
    const std::int64_t padded = in[static_cast<std::size_t>(d) + 1] + 2 * p_[d] - k_[d];
    check_usage(padded >= 0, "nn: " + name_ + ": kernel larger than padded input on axis " +
                                 std::to_string(d));
    out[static_cast<std::size_t>(d) + 1] = padded / s_[d] + 1;
  }
  return out;
}

void Conv3d::im2col(const double* item, double* col) const {
  const std::int64_t T = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
  const std::int64_t To = out_shape_[1], Ho = out_shape_[2], Wo = out_shape_[3];
  const std::int64_t n_cols = To * Ho * Wo;
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < in_ch_; ++c)
    for (int dt = 0; dt < k_[0]; ++dt)
      for (int dh = 0; dh < k_[1]; ++dh)
        for (int dw = 0; dw < k_[2]; ++dw, ++row) {
          double* dst = col + row * n_cols;
          for (std::int64_t to = 0; to < To; ++to) {
            const std::int64_t t = to * s_[0] - p_[0] + dt;
            if (t < 0 || t >= T) {
              std::fill(dst, dst + Ho * Wo, 0.0);
              dst += Ho * Wo;
              continue;
            }
            for (std::int64_t ho = 0; ho < Ho; ++ho) {
              const std::int64_t h = ho * s_[1] - p_[1] + dh;
              if (h < 0 || h >= H) {
                std::fill(dst, dst + Wo, 0.0);
                dst += Wo;
                continue;
              }
              const double* src = item + ((c * T + t) * H + h) * W;
              for (std::int64_t wo = 0; wo < Wo; ++wo, ++dst) {
                const std::int64_t w = wo * s_[2] - p_[2] + dw;
                *dst = (w < 0 || w >= W) ? 0.0 : src[w];
              }
            }
          }
        }
}

Tensor Conv3d::forward(const Tensor& x, const Ctx&) {
  in_shape_ = batched(x);
  out_shape_ = output_shape(in_shape_);
  const std::int64_t B = x.dim(0);
  const std::int64_t rows = in_ch_ * k_[0] * k_[1] * k_[2];
  const std::int64_t n_cols = product(out_shape_, 1);
  x_cache_ = x;

  Tensor y({B, out_shape_[0], out_shape_[1], out_shape_[2], out_shape_[3]});
  std::vector<double> col(static_cast<std::size_t>(rows * n_cols));
  CMapMat w(weight_.value.data(), out_ch_, rows);
  const std::int64_t in_item = product(in_shape_);
  const std::int64_t out_item = out_ch_ * n_cols;
  for (std::int64_t b = 0; b < B; ++b) {
    im2col(x.data() + b * in_item, col.data());
    CMapMat cm(col.data(), rows, n_cols);
    MapMat ym(y.data() + b * out_item, out_ch_, n_cols);
    ym.noalias() = w * cm;
  }
  return y;
}

Tensor Conv3d::backward(const Tensor& grad_out) {
  const std::int64_t B = x_cache_.dim(0);
  const std::int64_t rows = in_ch_ * k_[0] * k_[1] * k_[2];
  const std::int64_t n_cols = product(out_shape_, 1);
  const std::int64_t T = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
  const std::int64_t To = out_shape_[1], Ho = out_shape_[2], Wo = out_shape_[3];

  Tensor dx(x_cache_.shape());
  std::vector<double> col(static_cast<std::size_t>(rows * n_cols));
  std::vector<double> dcol(static_cast<std::size_t>(rows * n_cols));
  CMapMat w(weight_.value.data(), out_ch_, rows);
  MapMat dw(weight_.grad.data(), out_ch_, rows);
  const std::int64_t in_item = product(in_shape_);
  const std::int64_t out_item = out_ch_ * n_cols;

  for (std::int64_t b = 0; b < B; ++b) {
    im2col(x_cache_.data() + b * in_item, col.data());
    CMapMat cm(col.data(), rows, n_cols);
    CMapMat dy(grad_out.data() + b * out_item, out_ch_, n_cols);
    dw.noalias() += dy * cm.transpose();
    MapMat dc(dcol.data(), rows, n_cols);
    dc.noalias() = w.transpose() * dy;

    // col2im scatter-add
    double* dxi = dx.data() + b * in_item;
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < in_ch_; ++c)
      for (int dt = 0; dt < k_[0]; ++dt)
        for (int dh = 0; dh < k_[1]; ++dh)
          for (int dw2 = 0; dw2 < k_[2]; ++dw2, ++row) {
            const double* src = dcol.data() + row * n_cols;
            for (std::int64_t to = 0; to < To; ++to) {
              const std::int64_t t = to * s_[0] - p_[0] + dt;
              if (t < 0 || t >= T) {
                src += Ho * Wo;
                continue;
              }
              for (std::int64_t ho = 0; ho < Ho; ++ho) {
                const std::int64_t h = ho * s_[1] - p_[1] + dh;
                if (h < 0 || h >= H) {
                  src += Wo;
                  continue;
                }
                double* dst = dxi + ((c * T + t) * H + h) * W;
                for (std::int64_t wo = 0; wo < Wo; ++wo, ++src) {
                  const std::int64_t ww = wo * s_[2] - p_[2] + dw2;
                  if (ww >= 0 && ww < W) dst[ww] += *src;
                }
              }
            }
          }
  }
  return dx;
}

void Conv3d::init(Rng& rng) {
  const std::int64_t rows = in_ch_ * k_[0] * k_[1] * k_[2];
  const double std = std::sqrt(2.0 / static_cast<double>(rows));
  for (std::int64_t i = 0; i < weight_.value.size(); ++i) weight_.value[i] = rng.normal(0.0, std);
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::string name, std::int64_t channels, double momentum, double eps)
    : name_(std::move(name)), channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_.name = name_ + "/gamma";
  gamma_.value = Tensor({channels_});
  gamma_.grad = Tensor({channels_});
  beta_.name = name_ + "/beta";
  beta_.value = Tensor({channels_});
  beta_.grad = Tensor({channels_});
  for (std::int64_t c = 0; c < channels_; ++c) gamma_.value[c] = 1.0;
  running_mean_.name = name_ + "/running_mean";
  running_mean_.value = Tensor({channels_});
  running_var_.name = name_ + "/running_var";
  running_var_.value = Tensor({channels_});
  for (std::int64_t c = 0; c < channels_; ++c) running_var_.value[c] = 1.0;
}

Shape BatchNorm::output_shape(const Shape& in) const {
  check_usage(!in.empty() && in[0] == channels_,
              "nn: " + name_ + ": expected " + std::to_string(channels_) + " channels, got " +
                  (in.empty() ? std::string("rank-0") : std::to_string(in[0])));
  return in;
}

Tensor BatchNorm::forward(const Tensor& x, const Ctx& ctx) {
  const Shape item = batched(x);
  output_shape(item);
  batch_ = x.dim(0);
  spatial_ = product(item, 1);
  used_batch_stats_ = ctx.train;
  const std::int64_t n_red = batch_ * spatial_;

  std::vector<double> mean(static_cast<std::size_t>(channels_), 0.0);
  std::vector<double> var(static_cast<std::size_t>(channels_), 0.0);
  if (ctx.train) {
    check_usage(n_red > 1, "nn: " + name_ + ": batch norm needs more than one value per channel");
    for (std::int64_t b = 0; b < batch_; ++b)
      for (std::int64_t c = 0; c < channels_; ++c) {
        const double* p = x.data() + (b * channels_ + c) * spatial_;
        double s = 0.0;
        for (std::int64_t i = 0; i < spatial_; ++i) s += p[i];
        mean[static_cast<std::size_t>(c)] += s;
      }
    for (std::int64_t c = 0; c < channels_; ++c) mean[static_cast<std::size_t>(c)] /= n_red;
    for (std::int64_t b = 0; b < batch_; ++b)
      for (std::int64_t c = 0; c < channels_; ++c) {
        const double* p = x.data() + (b * channels_ + c) * spatial_;
        const double m = mean[static_cast<std::size_t>(c)];
        double s = 0.0;
        for (std::int64_t i = 0; i < spatial_; ++i) s += (p[i] - m) * (p[i] - m);
        var[static_cast<std::size_t>(c)] += s;
      }
    for (std::int64_t c = 0; c < channels_; ++c) var[static_cast<std::size_t>(c)] /= n_red;
    for (std::int64_t c = 0; c < channels_; ++c) {
      running_mean_.value[c] =
          (1.0 - momentum_) * running_mean_.value[c] + momentum_ * mean[static_cast<std::size_t>(c)];
      running_var_.value[c] =
          (1.0 - momentum_) * running_var_.value[c] + momentum_ * var[static_cast<std::size_t>(c)];
    }
  } else {
    for (std::int64_t c = 0; c < channels_; ++c) {
      mean[static_cast<std::size_t>(c)] = running_mean_.value[c];
      var[static_cast<std::size_t>(c)] = running_var_.value[c];
    }
  }

  inv_std_.assign(static_cast<std::size_t>(channels_), 0.0);
  for (std::int64_t c = 0; c < channels_; ++c)
    inv_std_[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var[static_cast<std::size_t>(c)] + eps_);

  xhat_ = Tensor(x.shape());
  Tensor y(x.shape());
  for (std::int64_t b = 0; b < batch_; ++b)
    for (std::int64_t c = 0; c < channels_; ++c) {
      const double m = mean[static_cast<std::size_t>(c)];
      const double isd = inv_std_[static_cast<std::size_t>(c)];
      const double g = gamma_.value[c], be = beta_.value[c];
      const double* p = x.data() + (b * channels_ + c) * spatial_;
      double* xh = xhat_.data() + (b * channels_ + c) * spatial_;
      double* yo = y.data() + (b * channels_ + c) * spatial_;
      for (std::int64_t i = 0; i < spatial_; ++i) {
        xh[i] = (p[i] - m) * isd;
        yo[i] = g * xh[i] + be;
      }
    }
  return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  const std::int64_t n_red = batch_ * spatial_;
  std::vector<double> sum_dy(static_cast<std::size_t>(channels_), 0.0);
  std::vector<double> sum_dy_xhat(static_cast<std::size_t>(channels_), 0.0);
  for (std::int64_t b = 0; b < batch_; ++b)
    for (std::int64_t c = 0; c < channels_; ++c) {
      const double* dy = grad_out.data() + (b * channels_ + c) * spatial_;
      const double* xh = xhat_.data() + (b * channels_ + c) * spatial_;
      double s0 = 0.0, s1 = 0.0;
      for (std::int64_t i = 0; i < spatial_; ++i) {
        s0 += dy[i];
        s1 += dy[i] * xh[i];
      }
      sum_dy[static_cast<std::size_t>(c)] += s0;
      sum_dy_xhat[static_cast<std::size_t>(c)] += s1;
    }
  for (std::int64_t c = 0; c < channels_; ++c) {
    beta_.grad[c] += sum_dy[static_cast<std::size_t>(c)];
    gamma_.grad[c] += sum_dy_xhat[static_cast<std::size_t>(c)];
  }

  Tensor dx(grad_out.shape());
  for (std::int64_t b = 0; b < batch_; ++b)
    for (std::int64_t c = 0; c < channels_; ++c) {
      const double g = gamma_.value[c];
      const double isd = inv_std_[static_cast<std::size_t>(c)];
      const double* dy = grad_out.data() + (b * channels_ + c) * spatial_;
      const double* xh = xhat_.data() + (b * channels_ + c) * spatial_;
      double* dxo = dx.data() + (b * channels_ + c) * spatial_;
      if (used_batch_stats_) {
        const double mean_dy = sum_dy[static_cast<std::size_t>(c)] / n_red;
        const double mean_dy_xhat = sum_dy_xhat[static_cast<std::size_t>(c)] / n_red;
        for (std::int64_t i = 0; i < spatial_; ++i)
          dxo[i] = g * isd * (dy[i] - mean_dy - xh[i] * mean_dy_xhat);
      } else {
        for (std::int64_t i = 0; i < spatial_; ++i) dxo[i] = g * isd * dy[i];
      }
    }
  return dx;
}

// ------------------------------------------------------------------ ReLU

Tensor ReLU::forward(const Tensor& x, const Ctx&) {
  mask_ = Tensor(x.shape());
  Tensor y(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const bool on = x[i] > 0.0;
    mask_[i] = on ? 1.0 : 0.0;
    y[i] = on ? x[i] : 0.0;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor dx(grad_out.shape());
  for (std::int64_t i = 0; i < grad_out.size(); ++i) dx[i] = grad_out[i] * mask_[i];
  return dx;
}

std::uint64_t ReLU::activation_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::int64_t i = 0; i < mask_.size(); ++i) {
    h ^= mask_[i] > 0.0 ? 0x9eull : 0x31ull;
    h *= 0x100000001b3ull;
  }
  return h;
}

// ------------------------------------------------------------- MaxPool3d

MaxPool3d::MaxPool3d(std::string name, std::array<int, 3> kernel, std::array<int, 3> stride)
    : name_(std::move(name)), k_(kernel), s_(stride) {}

Shape MaxPool3d::output_shape(const Shape& in) const {
  check_usage(in.size() == 4, "nn: " + name_ + ": expected (C,T,H,W) input");
  Shape out{in[0], 0, 0, 0};
  for (int d = 0; d < 3; ++d) {
    const std::int64_t span = in[static_cast<std::size_t>(d) + 1] - k_[d];
    check_usage(span >= 0, "nn: " + name_ + ": pool kernel larger than input on axis " +
                               std::to_string(d));
    out[static_cast<std::size_t>(d) + 1] = span / s_[d] + 1;
  }
  return out;
}

Tensor MaxPool3d::forward(const Tensor& x, const Ctx&) {
  in_shape_ = batched(x);
  const Shape out = output_shape(in_shape_);
  batch_ = x.dim(0);
  const std::int64_t C = in_shape_[0], T = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
  const std::int64_t To = out[1], Ho = out[2], Wo = out[3];
  Tensor y({batch_, C, To, Ho, Wo});
  argmax_.assign(static_cast<std::size_t>(y.size()), 0);

  const std::int64_t in_item = product(in_shape_);
  std::int64_t oi = 0;
  for (std::int64_t b = 0; b < batch_; ++b) {
    const double* xi = x.data() + b * in_item;
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t to = 0; to < To; ++to)
        for (std::int64_t ho = 0; ho < Ho; ++ho)
          for (std::int64_t wo = 0; wo < Wo; ++wo, ++oi) {
            double best = -1e308;
            std::int64_t best_idx = 0;
            for (int dt = 0; dt < k_[0]; ++dt)
              for (int dh = 0; dh < k_[1]; ++dh)
                for (int dw = 0; dw < k_[2]; ++dw) {
                  const std::int64_t t = to * s_[0] + dt;
                  const std::int64_t h = ho * s_[1] + dh;
                  const std::int64_t w = wo * s_[2] + dw;
                  const std::int64_t idx = ((c * T + t) * H + h) * W + w;
                  if (xi[idx] > best) {
                    best = xi[idx];
                    best_idx = idx;
                  }
                }
            y[oi] = best;
            argmax_[static_cast<std::size_t>(oi)] = b * in_item + best_idx;
          }
  }
  return y;
}

Tensor MaxPool3d::backward(const Tensor& grad_out) {
  Tensor dx({batch_, in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]});
  for (std::int64_t i = 0; i < grad_out.size(); ++i)
    dx[argmax_[static_cast<std::size_t>(i)]] += grad_out[i];
  return dx;
}

std::uint64_t MaxPool3d::activation_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::int64_t idx : argmax_) {
    h ^= static_cast<std::uint64_t>(idx);
    h *= 0x100000001b3ull;
  }
  return h;
}

// --------------------------------------------------------- GlobalAvgPool

Shape GlobalAvgPool::output_shape(const Shape& in) const {
  check_usage(in.size() == 4, "nn: " + name_ + ": expected (C,T,H,W) input");
  return {in[0]};
}

Tensor GlobalAvgPool::forward(const Tensor& x, const Ctx&) {
  in_shape_ = batched(x);
  output_shape(in_shape_);
  batch_ = x.dim(0);
  const std::int64_t C = in_shape_[0];
  const std::int64_t S = product(in_shape_, 1);
  Tensor y({batch_, C});
  for (std::int64_t b = 0; b < batch_; ++b)
    for (std::int64_t c = 0; c < C; ++c) {
      const double* p = x.data() + (b * C + c) * S;
      double s = 0.0;
      for (std::int64_t i = 0; i < S; ++i) s += p[i];
      y.at2(b, c) = s / static_cast<double>(S);
    }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  const std::int64_t C = in_shape_[0];
  const std::int64_t S = product(in_shape_, 1);
  Tensor dx({batch_, in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]});
  for (std::int64_t b = 0; b < batch_; ++b)
    for (std::int64_t c = 0; c < C; ++c) {
      const double g = grad_out.at2(b, c) / static_cast<double>(S);
      double* p = dx.data() + (b * C + c) * S;
      for (std::int64_t i = 0; i < S; ++i) p[i] = g;
    }
  return dx;
}

// ----------------------------------------------------- TemporalAvgFlatten

Shape TemporalAvgFlatten::output_shape(const Shape& in) const {
  check_usage(in.size() == 4, "nn: " + name_ + ": expected (C,T,H,W) input");
  return {in[0] * in[2] * in[3]};
}

Tensor TemporalAvgFlatten::forward(const Tensor& x, const Ctx&) {
  in_shape_ = batched(x);
  output_shape(in_shape_);
  batch_ = x.dim(0);
  const std::int64_t C = in_shape_[0], T = in_shape_[1], HW = in_shape_[2] * in_shape_[3];
  Tensor y({batch_, C * HW});
  for (std::int64_t b = 0; b < batch_; ++b)
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t i = 0; i < HW; ++i) {
        double s = 0.0;
        for (std::int64_t t = 0; t < T; ++t) s += x[((b * C + c) * T + t) * HW + i];
        y.at2(b, c * HW + i) = s / static_cast<double>(T);
      }
  return y;
}

Tensor TemporalAvgFlatten::backward(const Tensor& grad_out) {
  const std::int64_t C = in_shape_[0], T = in_shape_[1], HW = in_shape_[2] * in_shape_[3];
  Tensor dx({batch_, C, in_shape_[1], in_shape_[2], in_shape_[3]});
  for (std::int64_t b = 0; b < batch_; ++b)
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t i = 0; i < HW; ++i) {
        const double g = grad_out.at2(b, c * HW + i) / static_cast<double>(T);
        for (std::int64_t t = 0; t < T; ++t) dx[((b * C + c) * T + t) * HW + i] = g;
      }
  return dx;
}

// --------------------------------------------------------------- Flatten

Shape Flatten::output_shape(const Shape& in) const { return {product(in)}; }

Tensor Flatten::forward(const Tensor& x, const Ctx&) {
  in_shape_ = batched(x);
  batch_ = x.dim(0);
  Tensor y({batch_, product(in_shape_)});
  y.storage() = x.storage();
  return y;
}

Tensor Flatten::backward(const Tensor& grad_out) {
  Shape s = in_shape_;
  s.insert(s.begin(), batch_);
  Tensor dx(s);
  dx.storage() = grad_out.storage();
  return dx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::string name, std::int64_t in, std::int64_t out, bool bias)
    : name_(std::move(name)), in_(in), out_(out), has_bias_(bias) {
  weight_.name = name_ + "/weight";
  weight_.value = Tensor({out_, in_});
  weight_.grad = Tensor({out_, in_});
  if (has_bias_) {
    bias_.name = name_ + "/bias";
    bias_.value = Tensor({out_});
    bias_.grad = Tensor({out_});
  }
}

Shape Linear::output_shape(const Shape& in) const {
  check_usage(in.size() == 1 && in[0] == in_,
              "nn: " + name_ + ": expected input width " + std::to_string(in_) + ", got " +
                  (in.size() == 1 ? std::to_string(in[0]) : "rank " + std::to_string(in.size())));
  return {out_};
}

Tensor Linear::forward(const Tensor& x, const Ctx&) {
  output_shape(batched(x));
  x_cache_ = x;
  const std::int64_t B = x.dim(0);
  Tensor y({B, out_});
  CMapMat xm(x.data(), B, in_);
  CMapMat wm(weight_.value.data(), out_, in_);
  MapMat ym(y.data(), B, out_);
  ym.noalias() = xm * wm.transpose();
  if (has_bias_)
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t o = 0; o < out_; ++o) y.at2(b, o) += bias_.value[o];
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const std::int64_t B = x_cache_.dim(0);
  CMapMat dym(grad_out.data(), B, out_);
  CMapMat xm(x_cache_.data(), B, in_);
  CMapMat wm(weight_.value.data(), out_, in_);
  MapMat dwm(weight_.grad.data(), out_, in_);
  dwm.noalias() += dym.transpose() * xm;
  if (has_bias_)
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t o = 0; o < out_; ++o) bias_.grad[o] += grad_out.at2(b, o);
  Tensor dx({B, in_});
  MapMat dxm(dx.data(), B, in_);
  dxm.noalias() = dym * wm;
  return dx;
}

void Linear::init(Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(in_));
  for (std::int64_t i = 0; i < weight_.value.size(); ++i) weight_.value[i] = rng.normal(0.0, std);
}

std::vector<Param*> Linear::params() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

// --------------------------------------------------------------- Dropout

Dropout::Dropout(std::string name, double p) : name_(std::move(name)), p_(p) {
  check_usage(p_ >= 0.0 && p_ < 1.0, "nn: dropout probability must be in [0,1)");
}

Tensor Dropout::forward(const Tensor& x, const Ctx& ctx) {
  identity_ = !ctx.train || p_ == 0.0;
  if (identity_) return x;
  check_usage(ctx.rng != nullptr, "nn: " + name_ + ": training dropout needs an rng");
  mask_ = Tensor(x.shape());
  Tensor y(x.shape());
  const double scale = 1.0 / (1.0 - p_);
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const bool keep = ctx.rng->uniform() >= p_;
    mask_[i] = keep ? scale : 0.0;
    y[i] = x[i] * mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  if (identity_) return grad_out;
  Tensor dx(grad_out.shape());
  for (std::int64_t i = 0; i < grad_out.size(); ++i) dx[i] = grad_out[i] * mask_[i];
  return dx;
}

// ------------------------------------------------------------------- Net

Tensor Net::forward(const Tensor& x, const Ctx& ctx) {
  Tensor h = x;
  for (auto& layer : layers_) h = layer->forward(h, ctx);
  return h;
}

Tensor Net::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

Shape Net::infer(const Shape& input) const {
  Shape s = input;
  for (const auto& layer : layers_) s = layer->output_shape(s);
  return s;
}

void Net::init(Rng& rng) {
  for (auto& layer : layers_) layer->init(rng);
}

std::vector<Param*> Net::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_)
    for (Param* p : layer->params()) out.push_back(p);
  return out;
}

std::vector<Buffer*> Net::buffers() {
  std::vector<Buffer*> out;
  for (auto& layer : layers_)
    for (Buffer* b : layer->buffers()) out.push_back(b);
  return out;
}

std::uint64_t Net::activation_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& layer : layers_) {
    h ^= layer->activation_signature();
    h *= 0x100000001b3ull;
  }
  return h;
}

std::int64_t param_count(const std::vector<Param*>& params) {
  std::int64_t n = 0;
  for (const Param* p : params) n += p->value.size();
  return n;
}

}  // namespace mds::nn
