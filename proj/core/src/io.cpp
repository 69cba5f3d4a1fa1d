// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mds/error.hpp"

namespace mds::io {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::string read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check_data(in.good(), "io: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_binary(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check_data(out.good(), "io: cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  check_data(out.good(), "io: short write to " + path.string());
}

}  // namespace

void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               int sample_rate) {
  check_usage(sample_rate > 0, "wav: sample_rate must be positive");
  const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_bytes = n * 2;
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);             // fmt chunk size
  put_u16(out, 1);              // PCM
  put_u16(out, 1);              // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);  // byte rate
  put_u16(out, 2);              // block align
  put_u16(out, 16);             // bits per sample
  out += "data";
  put_u32(out, data_bytes);
  for (double s : samples) {
    double c = std::clamp(s, -1.0, 1.0);
    int v = static_cast<int>(std::lround(c * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  write_binary(path, out);
}

WavData read_wav(const std::filesystem::path& path) {
  const std::string bytes = read_binary(path);
  check_data(bytes.size() >= 44, "wav: file too small: " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  check_data(std::memcmp(p, "RIFF", 4) == 0 && std::memcmp(p + 8, "WAVE", 4) == 0,
             "wav: not a RIFF/WAVE file: " + path.string());
  std::size_t pos = 12;
  int sample_rate = 0, channels = 0, bits = 0;
  bool have_fmt = false;
  WavData result;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    const std::uint32_t len = get_u32(p + pos + 4);
    pos += 8;
    check_data(pos + len <= bytes.size(), "wav: truncated chunk in " + path.string());
    if (std::memcmp(id, "fmt ", 4) == 0) {
      check_data(len >= 16, "wav: short fmt chunk");
      check_data(get_u16(p + pos) == 1, "wav: only PCM supported: " + path.string());
      channels = get_u16(p + pos + 2);
      sample_rate = static_cast<int>(get_u32(p + pos + 4));
      bits = get_u16(p + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      check_data(have_fmt, "wav: data chunk before fmt");
      check_data(channels == 1, "wav: only mono supported: " + path.string());
      check_data(bits == 16, "wav: only 16-bit PCM supported: " + path.string());
      const std::size_t count = len / 2;
      result.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto v = static_cast<std::int16_t>(get_u16(p + pos + 2 * i));
        result.samples[i] = static_cast<double>(v) / 32767.0;
      }
      result.sample_rate = sample_rate;
      return result;
    }
    pos += len + (len & 1);  // chunks are word-aligned
  }
  throw DataError("wav: no data chunk in " + path.string());
}

void write_ppm(const std::filesystem::path& path, const Tensor& frame) {
  check_usage(frame.rank() == 3 && frame.dim(0) == 3, "ppm: frame must be (3,H,W)");
  const std::int64_t h = frame.dim(1), w = frame.dim(2);
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(3 * h * w));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (std::int64_t c = 0; c < 3; ++c) {
        int b = static_cast<int>(frame.at3(c, y, x) * 255.0 + 0.5);
        out.push_back(static_cast<char>(std::clamp(b, 0, 255)));
      }
  write_binary(path, out);
}

Tensor read_ppm(const std::filesystem::path& path) {
  const std::string bytes = read_binary(path);
  std::istringstream hs(bytes);
  std::string magic;
  std::int64_t w = 0, h = 0;
  int maxval = 0;
  hs >> magic >> w >> h >> maxval;
  check_data(magic == "P6" && maxval == 255 && w > 0 && h > 0,
             "ppm: unsupported header in " + path.string());
  hs.get();  // single whitespace after maxval
  const std::size_t offset = static_cast<std::size_t>(hs.tellg());
  check_data(bytes.size() >= offset + static_cast<std::size_t>(3 * w * h),
             "ppm: truncated pixel data in " + path.string());
  Tensor frame({3, h, w});
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (std::int64_t c = 0; c < 3; ++c)
        frame.at3(c, y, x) = px[(y * w + x) * 3 + c] / 255.0;
  return frame;
}

void write_npy(const std::filesystem::path& path, const Tensor& t, bool as_float32) {
  std::string header = "{'descr': '";
  header += as_float32 ? "<f4" : "<f8";
  header += "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < t.rank(); ++i) header += std::to_string(t.dim(i)) + ", ";
  if (t.rank() == 0) header += ",";
  header += "), }";
  // Pad so that data starts at a multiple of 64 bytes.
  std::size_t unpadded = 10 + header.size() + 1;
  std::size_t pad = (64 - unpadded % 64) % 64;
  header += std::string(pad, ' ');
  header += '\n';

  std::string out;
  out += '\x93';
  out += "NUMPY";
  out += '\x01';
  out += '\x00';
  put_u16(out, static_cast<std::uint16_t>(header.size()));
  out += header;
  if (as_float32) {
    for (std::int64_t i = 0; i < t.size(); ++i) {
      float f = static_cast<float>(t[i]);
      char buf[4];
      std::memcpy(buf, &f, 4);
      out.append(buf, 4);
    }
  } else {
    const char* raw = reinterpret_cast<const char*>(t.data());
    out.append(raw, static_cast<std::size_t>(t.size()) * 8);
  }
  write_binary(path, out);
}

Tensor read_npy(const std::filesystem::path& path) {
  const std::string bytes = read_binary(path);
  check_data(bytes.size() > 10 && bytes[0] == '\x93' && bytes.substr(1, 5) == "NUMPY",
             "npy: bad magic in " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t header_len = get_u16(p + 8);
  check_data(bytes.size() >= 10 + header_len, "npy: truncated header in " + path.string());
  const std::string header = bytes.substr(10, header_len);

  const bool f4 = header.find("'<f4'") != std::string::npos;
  const bool f8 = header.find("'<f8'") != std::string::npos;
  check_data(f4 || f8, "npy: only '<f4'/'<f8' supported: " + path.string());
  check_data(header.find("'fortran_order': False") != std::string::npos,
             "npy: fortran order not supported: " + path.string());

  const auto lp = header.find('(');
  const auto rp = header.find(')', lp);
  check_data(lp != std::string::npos && rp != std::string::npos, "npy: malformed shape");
  std::vector<std::int64_t> shape;
  std::string dims = header.substr(lp + 1, rp - lp - 1);
  std::istringstream ds(dims);
  std::string tok;
  while (std::getline(ds, tok, ',')) {
    std::string trimmed;
    for (char c : tok)
      if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
    if (!trimmed.empty()) shape.push_back(std::stoll(trimmed));
  }

  Tensor t(shape);
  const std::size_t offset = 10 + header_len;
  const std::size_t elem = f4 ? 4 : 8;
  check_data(bytes.size() >= offset + elem * static_cast<std::size_t>(t.size()),
             "npy: truncated data in " + path.string());
  const char* raw = bytes.data() + offset;
  if (f4) {
    for (std::int64_t i = 0; i < t.size(); ++i) {
      float f;
      std::memcpy(&f, raw + 4 * i, 4);
      t[i] = static_cast<double>(f);
    }
  } else {
    std::memcpy(t.data(), raw, 8 * static_cast<std::size_t>(t.size()));
  }
  return t;
}

std::string read_text_file(const std::filesystem::path& path) { return read_binary(path); }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  write_binary(path, content);
}

}  // namespace mds::io
