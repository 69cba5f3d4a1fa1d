// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mds/rng.hpp"
#include "mds/tensor.hpp"

namespace mds::nn {

using Shape = std::vector<std::int64_t>;

/// Trainable parameter: value and gradient accumulator of identical shape.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Non-trainable persistent state (batch-norm running statistics).
struct Buffer {
  std::string name;
  Tensor value;
};

struct Ctx {
  bool train = false;
  Rng* rng = nullptr;  // required when train && dropout present
};

/// Mini-batch layer. Batched tensors carry the batch dimension first:
/// feature maps are (B, C, T, H, W), vectors are (B, N). forward caches
/// whatever backward needs; backward accumulates into param gradients and
/// returns the gradient w.r.t. its input.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  /// Per-item output shape (no batch dim); throws UsageError on mismatch.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor forward(const Tensor& x, const Ctx& ctx) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void init(Rng& rng) { (void)rng; }
  virtual std::vector<Param*> params() { return {}; }
  virtual std::vector<Buffer*> buffers() { return {}; }
  /// Hash of the last forward's discrete decisions (relu sign pattern, pool
  /// argmax). 0 for smooth layers. Used by the gradient checker to detect
  /// kink crossings between finite-difference evaluations.
  virtual std::uint64_t activation_signature() const { return 0; }
};

/// 3-D convolution over (B, C, T, H, W). 2-D maps ride along with T=1 and
/// unit temporal kernel. No bias: every conv here is followed by batch norm,
/// which would cancel it.
class Conv3d : public Layer {
 public:
  Conv3d(std::string name, std::int64_t in_ch, std::int64_t out_ch, std::array<int, 3> kernel,
         std::array<int, 3> stride, std::array<int, 3> pad);
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void init(Rng& rng) override;
  std::vector<Param*> params() override { return {&weight_}; }

 private:
  std::string name_;
  std::int64_t in_ch_, out_ch_;
  std::array<int, 3> k_, s_, p_;
  Param weight_;  // (out_ch, in_ch*kt*kh*kw)
  Tensor x_cache_;
  Shape in_shape_, out_shape_;
  void im2col(const double* item, double* col) const;
};

/// Per-channel batch normalization. Accepts (B, C, ...) or (B, N) (then N is
/// the channel axis). Running statistics updated with momentum in train mode.
class BatchNorm : public Layer {
 public:
  BatchNorm(std::string name, std::int64_t channels, double momentum = 0.1, double eps = 1e-5);
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_}; }
  std::vector<Buffer*> buffers() override { return {&running_mean_, &running_var_}; }

 private:
  std::string name_;
  std::int64_t channels_;
  double momentum_, eps_;
  Param gamma_, beta_;
  Buffer running_mean_, running_var_;
  // forward cache
  Tensor xhat_;
  std::vector<double> inv_std_;
  bool used_batch_stats_ = false;
  std::int64_t batch_ = 0, spatial_ = 0;
};

class ReLU : public Layer {
 public:
  explicit ReLU(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::uint64_t activation_signature() const override;

 private:
  std::string name_;
  Tensor mask_;
};

/// Max pooling over (B, C, T, H, W), valid (unpadded) windows.
class MaxPool3d : public Layer {
 public:
  MaxPool3d(std::string name, std::array<int, 3> kernel, std::array<int, 3> stride);
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  std::uint64_t activation_signature() const override;

 private:
  std::string name_;
  std::array<int, 3> k_, s_;
  std::vector<std::int64_t> argmax_;
  Shape in_shape_;
  std::int64_t batch_ = 0;
};

/// (B, C, T, H, W) -> (B, C), mean over T, H, W.
class GlobalAvgPool : public Layer {
 public:
  explicit GlobalAvgPool(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::string name_;
  Shape in_shape_;
  std::int64_t batch_ = 0;
};

/// (B, C, T, H, W) -> (B, C*H*W), mean over T only.
class TemporalAvgFlatten : public Layer {
 public:
  explicit TemporalAvgFlatten(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::string name_;
  Shape in_shape_;
  std::int64_t batch_ = 0;
};

/// (B, C, T, H, W) -> (B, C*T*H*W).
class Flatten : public Layer {
 public:
  explicit Flatten(std::string name) : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::string name_;
  Shape in_shape_;
  std::int64_t batch_ = 0;
};

class Linear : public Layer {
 public:
  Linear(std::string name, std::int64_t in, std::int64_t out, bool bias = true);
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void init(Rng& rng) override;
  std::vector<Param*> params() override;

 private:
  std::string name_;
  std::int64_t in_, out_;
  bool has_bias_;
  Param weight_;  // (out, in)
  Param bias_;    // (out)
  Tensor x_cache_;
};

/// Inverted dropout; identity in eval mode.
class Dropout : public Layer {
 public:
  Dropout(std::string name, double p);
  std::string name() const override { return name_; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x, const Ctx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::string name_;
  double p_;
  Tensor mask_;
  bool identity_ = true;
};

/// Plain sequential container.
class Net {
 public:
  Net() = default;
  Net(Net&&) = default;
  Net& operator=(Net&&) = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  Tensor forward(const Tensor& x, const Ctx& ctx);
  Tensor backward(const Tensor& grad_out);
  /// Shape inference without running data; throws naming the failing layer.
  Shape infer(const Shape& input) const;
  void init(Rng& rng);
  std::vector<Param*> params();
  std::vector<Buffer*> buffers();
  std::uint64_t activation_signature() const;
  std::size_t layer_count() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

std::int64_t param_count(const std::vector<Param*>& params);

}  // namespace mds::nn
