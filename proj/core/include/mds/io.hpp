// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mds/tensor.hpp"

namespace mds::io {

// ---- wav: mono PCM16 in a RIFF container ----
struct WavData {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 0;
};

void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               int sample_rate);
WavData read_wav(const std::filesystem::path& path);

// ---- ppm: binary P6, 8-bit RGB. frame tensor layout (3, H, W), values [0,1] ----
void write_ppm(const std::filesystem::path& path, const Tensor& frame);
Tensor read_ppm(const std::filesystem::path& path);

// ---- npy: little-endian '<f4'/'<f8' C-order arrays ----
void write_npy(const std::filesystem::path& path, const Tensor& t, bool as_float32 = true);
Tensor read_npy(const std::filesystem::path& path);

// ---- misc ----
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Quantize a [0,1] value to the 8-bit grid used by the image writers.
inline double quantize8(double v) {
  int b = static_cast<int>(v * 255.0 + 0.5);
  if (b < 0) b = 0;
  if (b > 255) b = 255;
  return b / 255.0;
}

}  // namespace mds::io
