// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "common.hpp"

namespace acss {

namespace fs = std::filesystem;

std::size_t MultiChannelRecording::min_length() const {
  std::size_t n = channels.empty() ? 0 : channels.front().size();
  for (const auto& c : channels) n = std::min(n, c.size());
  return n;
}

void validate(const AudioClip& clip) {
  require(clip.sample_rate > 0, "sample rate must be positive");
  for (double v : clip.samples)
    require(std::isfinite(v), "audio contains non-finite samples");
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

double peak(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

namespace {

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}

void put32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
void put16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

AudioClip read_wav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open WAV file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::kIo, "malformed WAV file " + path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    bad("missing RIFF/WAVE header");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::size_t len = le32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + len > bytes.size()) len = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) bad("short fmt chunk");
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == 0xFFFE && len >= 26) format = le16(bytes.data() + body + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);
  }
  if (channels == 0 || rate == 0) bad("missing fmt chunk");
  if (data == nullptr) bad("missing data chunk");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    const std::size_t frame = 2u * channels;
    const std::size_t n = data_len / frame;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto v = static_cast<std::int16_t>(le16(data + i * frame));
      clip.samples[i] = v / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const std::size_t frame = 4u * channels;
    const std::size_t n = data_len / frame;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = le32(data + i * frame);
      float f;
      std::memcpy(&f, &u, 4);
      clip.samples[i] = f;
    }
  } else {
    bad("unsupported encoding (need 16-bit PCM or 32-bit float)");
  }
  return clip;
}

void write_wav(const fs::path& path, const AudioClip& clip) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write WAV file: " + path.string());
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_bytes = n * 2;
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);
  for (double v : clip.samples) {
    double s = std::clamp(v, -1.0, 1.0) * 32767.0;
    put16(out, static_cast<std::uint16_t>(
                   static_cast<std::int16_t>(std::lround(s))));
  }
  if (!out) fail(ErrorCode::kIo, "short write: " + path.string());
}

std::vector<fs::path> read_session_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorCode::kIo, "cannot open session manifest: " + manifest.string());
  std::vector<fs::path> paths;
  std::string line;
  const fs::path base = manifest.parent_path();
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    fs::path p = line.substr(b, e - b + 1);
    paths.push_back(p.is_absolute() ? p : base / p);
  }
  require(!paths.empty(), "session manifest lists no channels: " + manifest.string());
  return paths;
}

MultiChannelRecording read_session(const fs::path& manifest) {
  MultiChannelRecording rec;
  for (const auto& p : read_session_manifest(manifest)) rec.channels.push_back(read_wav(p));
  for (const auto& c : rec.channels)
    require(c.sample_rate == rec.sample_rate(),
            "session channels have different sample rates: " + manifest.string());
  return rec;
}

void write_session(const fs::path& dir, const MultiChannelRecording& rec,
                   const std::string& stem) {
  fs::create_directories(dir);
  std::ofstream list(dir / "channels.txt");
  for (std::size_t c = 0; c < rec.num_channels(); ++c) {
    const std::string name = stem + std::to_string(c) + ".wav";
    write_wav(dir / name, rec.channels[c]);
    list << name << '\n';
  }
}

}  // namespace acss
