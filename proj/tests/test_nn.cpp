// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "mds/nn.hpp"
#include "mds/objective.hpp"

using namespace mds;
using nn::Ctx;

namespace {

Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Direct convolution, no im2col: the oracle for Conv3d.
Tensor naive_conv3d(const Tensor& x, const Tensor& w, std::int64_t out_ch,
                    std::array<int, 3> k, std::array<int, 3> s, std::array<int, 3> p) {
  const std::int64_t B = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
  const std::int64_t To = (T + 2 * p[0] - k[0]) / s[0] + 1;
  const std::int64_t Ho = (H + 2 * p[1] - k[1]) / s[1] + 1;
  const std::int64_t Wo = (W + 2 * p[2] - k[2]) / s[2] + 1;
  Tensor y({B, out_ch, To, Ho, Wo});
  std::int64_t oi = 0;
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t oc = 0; oc < out_ch; ++oc)
      for (std::int64_t to = 0; to < To; ++to)
        for (std::int64_t ho = 0; ho < Ho; ++ho)
          for (std::int64_t wo = 0; wo < Wo; ++wo, ++oi) {
            double acc = 0.0;
            for (std::int64_t c = 0; c < C; ++c)
              for (int dt = 0; dt < k[0]; ++dt)
                for (int dh = 0; dh < k[1]; ++dh)
                  for (int dw = 0; dw < k[2]; ++dw) {
                    const std::int64_t t = to * s[0] - p[0] + dt;
                    const std::int64_t h = ho * s[1] - p[1] + dh;
                    const std::int64_t ww = wo * s[2] - p[2] + dw;
                    if (t < 0 || t >= T || h < 0 || h >= H || ww < 0 || ww >= W) continue;
                    const std::int64_t row = ((c * k[0] + dt) * k[1] + dh) * k[2] + dw;
                    acc += w.at2(oc, row) * x[(((b * C + c) * T + t) * H + h) * W + ww];
                  }
            y[oi] = acc;
          }
  return y;
}

// Finite-difference check of one layer: loss = sum(out * coeffs).
double layer_fd_check(nn::Layer& layer, const Tensor& input, Rng& rng, bool train = true) {
  Ctx ctx{train, &rng};
  Tensor out = layer.forward(input, ctx);
  Tensor coeffs = random_tensor(out.shape(), rng);

  auto loss_of = [&](const Tensor& x) {
    Tensor o = layer.forward(x, ctx);
    double acc = 0.0;
    for (std::int64_t i = 0; i < o.size(); ++i) acc += o[i] * coeffs[i];
    return acc;
  };

  // Analytic: backward with coeffs as upstream gradient.
  for (auto* p : layer.params())
    std::fill(p->grad.storage().begin(), p->grad.storage().end(), 0.0);
  layer.forward(input, ctx);
  const Tensor dx = layer.backward(coeffs);

  double max_rel = 0.0;
  const double h = 1e-6;
  // Parameter gradients.
  for (auto* p : layer.params()) {
    for (std::int64_t i = 0; i < std::min<std::int64_t>(p->value.size(), 25); ++i) {
      const std::int64_t j = (i * 7919) % p->value.size();
      const double saved = p->value[j];
      p->value[j] = saved + h;
      const double lp = loss_of(input);
      p->value[j] = saved - h;
      const double lm = loss_of(input);
      p->value[j] = saved;
      const double fd = (lp - lm) / (2 * h);
      max_rel = std::max(max_rel,
                         std::abs(fd - p->grad[j]) / std::max({std::abs(fd), std::abs(p->grad[j]), 1e-3}));
    }
  }
  // Input gradients.
  Tensor perturbed = input;
  for (std::int64_t i = 0; i < std::min<std::int64_t>(input.size(), 25); ++i) {
    const std::int64_t j = (i * 104729) % input.size();
    const double saved = perturbed[j];
    perturbed[j] = saved + h;
    const double lp = loss_of(perturbed);
    perturbed[j] = saved - h;
    const double lm = loss_of(perturbed);
    perturbed[j] = saved;
    const double fd = (lp - lm) / (2 * h);
    max_rel = std::max(max_rel,
                       std::abs(fd - dx[j]) / std::max({std::abs(fd), std::abs(dx[j]), 1e-3}));
  }
  return max_rel;
}

}  // namespace

TEST_CASE("conv3d matches the naive convolution oracle") {
  Rng rng(1);
  struct Case {
    std::array<int, 3> k, s, p;
  } cases[] = {{{3, 3, 3}, {1, 1, 1}, {1, 1, 1}},
               {{1, 3, 3}, {1, 1, 1}, {0, 1, 1}},
               {{3, 3, 3}, {1, 2, 2}, {1, 1, 1}},
               {{2, 2, 2}, {2, 2, 2}, {0, 0, 0}}};
  for (const auto& c : cases) {
    nn::Conv3d conv("conv", 3, 5, c.k, c.s, c.p);
    conv.init(rng);
    const Tensor x = random_tensor({2, 3, 4, 6, 6}, rng);
    const Tensor got = conv.forward(x, Ctx{});
    Tensor w({5, 3LL * c.k[0] * c.k[1] * c.k[2]});
    w.storage() = conv.params()[0]->value.storage();
    const Tensor want = naive_conv3d(x, w, 5, c.k, c.s, c.p);
    REQUIRE(got.shape() == want.shape());
    for (std::int64_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("layer backward passes agree with finite differences") {
  Rng rng(2);
  SUBCASE("conv3d") {
    nn::Conv3d layer("c", 2, 4, {3, 3, 3}, {1, 1, 1}, {1, 1, 1});
    layer.init(rng);
    CHECK(layer_fd_check(layer, random_tensor({2, 2, 3, 5, 5}, rng), rng) < 1e-6);
  }
  SUBCASE("batchnorm, training statistics") {
    nn::BatchNorm layer("bn", 4);
    Rng init(3);
    for (auto* p : layer.params())
      for (std::int64_t i = 0; i < p->value.size(); ++i) p->value[i] += 0.2 * init.normal();
    CHECK(layer_fd_check(layer, random_tensor({3, 4, 2, 3, 3}, rng), rng) < 1e-6);
  }
  SUBCASE("batchnorm on (B,N) vectors") {
    nn::BatchNorm layer("bn2", 6);
    CHECK(layer_fd_check(layer, random_tensor({5, 6}, rng), rng) < 1e-6);
  }
  SUBCASE("linear") {
    nn::Linear layer("fc", 7, 4);
    layer.init(rng);
    CHECK(layer_fd_check(layer, random_tensor({3, 7}, rng), rng) < 1e-6);
  }
  SUBCASE("global average pool") {
    nn::GlobalAvgPool layer("gap");
    CHECK(layer_fd_check(layer, random_tensor({2, 3, 2, 4, 4}, rng), rng) < 1e-6);
  }
  SUBCASE("temporal average flatten") {
    nn::TemporalAvgFlatten layer("tavg");
    CHECK(layer_fd_check(layer, random_tensor({2, 3, 4, 2, 2}, rng), rng) < 1e-6);
  }
  SUBCASE("relu and maxpool route gradients to the active inputs") {
    nn::ReLU relu("r");
    CHECK(layer_fd_check(relu, random_tensor({2, 3, 2, 4, 4}, rng), rng) < 1e-5);
    nn::MaxPool3d pool("p", {2, 2, 2}, {2, 2, 2});
    CHECK(layer_fd_check(pool, random_tensor({2, 3, 4, 4, 4}, rng), rng) < 1e-5);
  }
}

TEST_CASE("maxpool picks window maxima; strided pooling shapes") {
  Tensor x({1, 1, 2, 2, 4});
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  nn::MaxPool3d pool("p", {2, 2, 2}, {2, 2, 2});
  const Tensor y = pool.forward(x, Ctx{});
  CHECK(y.shape() == std::vector<std::int64_t>{1, 1, 1, 1, 2});
  CHECK(y[0] == 13.0);  // max of both planes, first 2x2 block
  CHECK(y[1] == 15.0);

  nn::MaxPool3d overlapping("p2", {1, 3, 3}, {1, 1, 2});
  CHECK(overlapping.output_shape({8, 1, 13, 99}) == nn::Shape{8, 1, 11, 49});
}

TEST_CASE("batchnorm normalizes per channel in training mode") {
  Rng rng(5);
  nn::BatchNorm bn("bn", 3);
  const Tensor x = random_tensor({4, 3, 2, 2, 2}, rng, 2.0);
  const Tensor y = bn.forward(x, Ctx{true, &rng});
  const std::int64_t spatial = 8;
  for (std::int64_t c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::int64_t b = 0; b < 4; ++b)
      for (std::int64_t i = 0; i < spatial; ++i) mean += y[(b * 3 + c) * spatial + i];
    mean /= 32;
    for (std::int64_t b = 0; b < 4; ++b)
      for (std::int64_t i = 0; i < spatial; ++i) {
        const double v = y[(b * 3 + c) * spatial + i] - mean;
        var += v * v;
      }
    var /= 32;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("dropout is identity in eval mode and rescales in train mode") {
  Rng rng(6);
  nn::Dropout drop("d", 0.5);
  const Tensor x = random_tensor({2, 100}, rng);
  const Tensor eval_out = drop.forward(x, Ctx{false, nullptr});
  for (std::int64_t i = 0; i < x.size(); ++i) CHECK(eval_out[i] == x[i]);

  const Tensor train_out = drop.forward(x, Ctx{true, &rng});
  int kept = 0;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    if (train_out[i] != 0.0) {
      ++kept;
      CHECK(train_out[i] == doctest::Approx(2.0 * x[i]));
    }
  }
  CHECK(kept > 60);
  CHECK(kept < 140);
  CHECK_THROWS_AS(drop.forward(x, Ctx{true, nullptr}), UsageError);
}

TEST_CASE("shape inference failures name the offending layer") {
  nn::Conv3d conv("visual/block1/conv", 3, 8, {3, 3, 3}, {1, 1, 1}, {0, 0, 0});
  try {
    conv.output_shape({3, 1, 5, 5});  // temporal axis too small for the kernel
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("visual/block1/conv") != std::string::npos);
  }
}
