// Copyright (c) 2026 The mixemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mixemb/wave.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mixemb {

double rms(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : w.samples) acc += v * v;
  return std::sqrt(acc / static_cast<double>(w.samples.size()));
}

double peak_abs(const Waveform& w) {
  double p = 0.0;
  for (double v : w.samples) p = std::max(p, std::fabs(v));
  return p;
}

double signal_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

namespace {

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
}

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void write_wav(const std::string& path, const Waveform& w) {
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  std::vector<uint8_t> out;
  out.reserve(44 + 2 * n);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, 2 * n);
  for (double v : w.samples) {
    double c = std::max(-1.0, std::min(v, 32767.0 / 32768.0));
    int16_t s = static_cast<int16_t>(std::lrint(c * 32768.0));
    put_u16(out, static_cast<uint16_t>(s));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_wav: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write_wav: write failed for " + path);
}

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_wav: cannot open " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw IoError("read_wav: not a RIFF/WAVE file: " + path);
  size_t pos = 12;
  int sample_rate = 0;
  int bits = 0;
  int channels = 0;
  Waveform w;
  bool have_data = false;
  while (pos + 8 <= buf.size()) {
    uint32_t chunk_size = get_u32(buf.data() + pos + 4);
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      channels = get_u16(buf.data() + pos + 10);
      sample_rate = static_cast<int>(get_u32(buf.data() + pos + 12));
      bits = get_u16(buf.data() + pos + 22);
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      if (channels != 1 || bits != 16)
        throw IoError("read_wav: expected 16-bit mono, got " +
                      std::to_string(bits) + "-bit " +
                      std::to_string(channels) + "ch: " + path);
      size_t count = chunk_size / 2;
      if (pos + 8 + chunk_size > buf.size())
        throw IoError("read_wav: truncated data chunk: " + path);
      w.samples.resize(count);
      for (size_t i = 0; i < count; ++i) {
        int16_t s = static_cast<int16_t>(get_u16(buf.data() + pos + 8 + 2 * i));
        w.samples[i] = static_cast<double>(s) / 32768.0;
      }
      have_data = true;
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  if (!have_data) throw IoError("read_wav: no data chunk: " + path);
  w.sample_rate = sample_rate;
  return w;
}

}  // namespace mixemb
