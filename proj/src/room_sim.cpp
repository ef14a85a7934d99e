// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "room_sim.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "fft.hpp"

namespace acss {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, kNumOverlapStyles> kStyleNames{
    "single", "inclusive", "sequential", "full_overlap", "partial_overlap"};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
double uniform(std::mt19937_64& rng, const Range& r) {
  return r.lo == r.hi ? r.lo : uniform(rng, r.lo, r.hi);
}
std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool inside(const RoomSpec& room, const Point3& p) {
  for (int i = 0; i < 3; ++i)
    if (!(p[i] > 0.0 && p[i] < room.dims[i])) return false;
  return true;
}

}  // namespace

std::string_view to_string(OverlapStyle style) {
  return kStyleNames[static_cast<std::size_t>(style)];
}

OverlapStyle parse_overlap_style(std::string_view name) {
  for (std::size_t i = 0; i < kStyleNames.size(); ++i)
    if (kStyleNames[i] == name) return static_cast<OverlapStyle>(i);
  fail(ErrorCode::kInvalidArgument, "unknown overlap style: " + std::string(name));
}

std::vector<ImageSource> image_sources(const RoomSpec& room, const Point3& src,
                                       const Point3& mic, int max_order) {
  require(max_order >= 0, "max_order must be non-negative");
  require(inside(room, src) && inside(room, mic),
          "source and microphone must lie strictly inside the room");
  require(distance(src, mic) > 0.0, "source and microphone coincide");
  for (double a : room.absorption)
    require(a > 0.0 && a <= 1.0, "absorption must be in (0, 1]");

  std::array<double, 6> beta{};
  for (int i = 0; i < 6; ++i) beta[i] = std::sqrt(1.0 - room.absorption[i]);

  std::vector<ImageSource> out;
  const int n_max = max_order;
  for (int nx = -n_max; nx <= n_max; ++nx)
    for (int ny = -n_max; ny <= n_max; ++ny)
      for (int nz = -n_max; nz <= n_max; ++nz)
        for (int q = 0; q < 8; ++q) {
          const std::array<int, 3> n{nx, ny, nz};
          const std::array<int, 3> qq{q & 1, (q >> 1) & 1, (q >> 2) & 1};
          int order = 0;
          double gain = 1.0;
          Point3 img{};
          for (int i = 0; i < 3; ++i) {
            const int lo_hits = std::abs(n[i] - qq[i]);
            const int hi_hits = std::abs(n[i]);
            order += lo_hits + hi_hits;
            gain *= std::pow(beta[2 * i], lo_hits) * std::pow(beta[2 * i + 1], hi_hits);
            img[i] = (1 - 2 * qq[i]) * src[i] + 2.0 * n[i] * room.dims[i];
          }
          if (order > max_order) continue;
          const double d = distance(img, mic);
          out.push_back({d, gain / (4.0 * kPi * d), order});
        }
  return out;
}

std::vector<double> image_method_rir(const RoomSpec& room, const Point3& src,
                                     const Point3& mic, int max_order,
                                     int sample_rate, std::size_t length) {
  require(length >= 1, "RIR length must be positive");
  std::vector<double> h(length, 0.0);
  for (const auto& img : image_sources(room, src, mic, max_order)) {
    if (img.gain == 0.0) continue;
    const auto tap = static_cast<std::size_t>(
        std::llround(img.distance / room.speed_of_sound * sample_rate));
    if (tap < length) h[tap] += img.gain;
  }
  return h;
}

AudioClip render_source(const AudioClip& dry, std::span<const double> rir) {
  require(!rir.empty(), "impulse response is empty");
  AudioClip out;
  out.sample_rate = dry.sample_rate;
  out.samples = fft_convolve(dry.samples, rir);
  return out;
}

OverlapSchedule schedule_overlap(OverlapStyle style, std::size_t len_a,
                                 std::size_t len_b, std::size_t segment_len,
                                 std::mt19937_64& rng) {
  require(len_a > 0 && (style == OverlapStyle::kSingle || len_b > 0),
          "utterance lengths must be positive");
  auto impossible = [&](const char* why) {
    fail(ErrorCode::kInvalidArgument,
         std::string("impossible ") + std::string(to_string(style)) + " geometry: " + why);
  };
  OverlapSchedule s;
  s.len_a = len_a;
  switch (style) {
    case OverlapStyle::kSingle:
      if (len_a > segment_len) impossible("utterance longer than segment");
      s.onset_a = uniform_index(rng, 0, segment_len - len_a);
      s.len_b = 0;
      break;
    case OverlapStyle::kFullOverlap: {
      const std::size_t len = std::min(len_a, len_b);
      if (len > segment_len) impossible("utterances longer than segment");
      s.len_a = s.len_b = len;
      s.onset_a = uniform_index(rng, 0, segment_len - len);
      s.onset_b = s.onset_a;
      break;
    }
    case OverlapStyle::kInclusive:
      if (len_a > segment_len) impossible("outer utterance longer than segment");
      if (len_b + 2 > len_a) impossible("inner utterance does not fit strictly inside");
      s.len_b = len_b;
      s.onset_a = uniform_index(rng, 0, segment_len - len_a);
      s.onset_b = s.onset_a + uniform_index(rng, 1, len_a - len_b - 1);
      break;
    case OverlapStyle::kSequential: {
      if (len_a + len_b > segment_len) impossible("utterances do not fit in sequence");
      const std::size_t slack = segment_len - len_a - len_b;
      const std::size_t gap = uniform_index(rng, 0, slack);
      s.len_b = len_b;
      s.onset_a = uniform_index(rng, 0, slack - gap);
      s.onset_b = s.onset_a + len_a + gap;
      break;
    }
    case OverlapStyle::kPartialOverlap: {
      const std::size_t shorter = std::min(len_a, len_b);
      const std::size_t lo = std::max<std::size_t>(
          1, len_a + len_b > segment_len ? len_a + len_b - segment_len : 1);
      if (shorter < 2 || lo > shorter - 1) impossible("no admissible overlap length");
      const std::size_t overlap = uniform_index(rng, lo, shorter - 1);
      const std::size_t span = len_a + len_b - overlap;
      s.len_b = len_b;
      s.onset_a = uniform_index(rng, 0, segment_len - span);
      s.onset_b = s.onset_a + len_a - overlap;
      break;
    }
  }
  return s;
}

OverlapStyle sample_style(const std::array<double, kNumOverlapStyles>& weights,
                          std::mt19937_64& rng) {
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "style weights must be non-negative");
    total += w;
  }
  require(total > 0.0, "style weights must not all be zero");
  double u = uniform(rng, 0.0, total);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return static_cast<OverlapStyle>(i);
    u -= weights[i];
  }
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return static_cast<OverlapStyle>(i);
  return OverlapStyle::kSingle;
}

MultiChannelRecording make_noise(const MultiChannelRecording& rec, double snr_db,
                                 std::mt19937_64& rng) {
  require(!std::isnan(snr_db) && snr_db != -kInf, "snr_db must be finite or +inf");
  MultiChannelRecording noise;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t c = 0; c < rec.num_channels(); ++c) {
    const auto& ch = rec.channels[c];
    AudioClip n;
    n.sample_rate = ch.sample_rate;
    n.samples.assign(ch.size(), 0.0);
    if (snr_db != kInf) {
      const double sig = energy(ch.samples);
      require(sig > 0.0, "cannot set SNR on silent channel " + std::to_string(c),
              ErrorCode::kNumeric);
      for (double& v : n.samples) v = gauss(rng);
      const double target = sig / std::pow(10.0, snr_db / 10.0);
      const double g = std::sqrt(target / energy(n.samples));
      for (double& v : n.samples) v *= g;
    }
    noise.channels.push_back(std::move(n));
  }
  return noise;
}

MultiChannelRecording add_noise(const MultiChannelRecording& rec, double snr_db,
                                std::mt19937_64& rng) {
  auto noise = make_noise(rec, snr_db, rng);
  MultiChannelRecording out = rec;
  for (std::size_t c = 0; c < out.num_channels(); ++c)
    for (std::size_t i = 0; i < out.channels[c].size(); ++i)
      out.channels[c].samples[i] += noise.channels[c].samples[i];
  return out;
}

Catalog load_catalog(const fs::path& root) {
  require(fs::is_directory(root), "corpus directory not found: " + root.string(),
          ErrorCode::kIo);
  Catalog cat;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(d))
      if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) continue;
    Speaker spk;
    spk.id = d.filename().string();
    for (const auto& f : files) spk.utterances.push_back(read_wav(f));
    cat.speakers.push_back(std::move(spk));
  }
  return cat;
}

namespace {

struct VoiceProfile {
  double f0 = 120.0;
  double formant_scale = 1.0;
  double tilt = 0.6;
  double noise_level = 0.02;
};

// F1..F3 of five cardinal vowels.
constexpr std::array<std::array<double, 3>, 5> kVowels{{{730, 1090, 2440},
                                                     {270, 2290, 3010},
                                                     {300, 870, 2240},
                                                     {530, 1840, 2480},
                                                     {570, 840, 2410}}};

std::vector<double> synthesize_utterance(const VoiceProfile& voice, std::size_t length,
                                         int rate, std::mt19937_64& rng) {
  std::vector<double> y(length, 0.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double phase_base = 0.0;
  std::size_t pos = 0;
  while (pos < length) {
    const auto syl = static_cast<std::size_t>(uniform(rng, 0.12, 0.32) * rate);
    const auto gap = uniform(rng, 0.0, 1.0) < 0.3
                         ? static_cast<std::size_t>(uniform(rng, 0.02, 0.08) * rate)
                         : 0;
    const auto& vowel = kVowels[uniform_index(rng, 0, kVowels.size() - 1)];
    const double f_start = voice.f0 * uniform(rng, 0.85, 1.15);
    const double f_end = voice.f0 * uniform(rng, 0.85, 1.15);
    const double amp = uniform(rng, 0.5, 1.0);
    const int num_harm = static_cast<int>(7000.0 / (voice.f0 * 1.15));
    std::vector<double> harm_amp(num_harm + 1, 0.0);
    const std::size_t end = std::min(length, pos + syl);
    const std::size_t ramp = static_cast<std::size_t>(0.02 * rate);
    for (std::size_t i = pos; i < end; ++i) {
      const double frac = static_cast<double>(i - pos) / syl;
      const double f0 = f_start + (f_end - f_start) * frac;
      if ((i - pos) % 80 == 0) {
        for (int k = 1; k <= num_harm; ++k) {
          const double f = k * f0;
          double a = 0.0;
          for (int j = 0; j < 3; ++j) {
            const double fc = vowel[j] * voice.formant_scale;
            const double bw = 60.0 + 0.06 * fc;
            a += std::exp(-0.5 * (f - fc) * (f - fc) / (bw * bw)) / (1.0 + j);
          }
          harm_amp[k] = (a + 0.02) / std::pow(k, voice.tilt);
        }
      }
      phase_base += 2.0 * kPi * f0 / rate;
      if (phase_base > 2.0 * kPi) phase_base -= 2.0 * kPi;
      // sin(k p) = 2 cos(p) sin((k - 1) p) - sin((k - 2) p)
      const double s1 = std::sin(phase_base), two_c = 2.0 * std::cos(phase_base);
      const int top = std::min(num_harm, static_cast<int>(0.45 * rate / f0 - 1e-12));
      double v = 0.0, sk_1 = 0.0, sk = s1;
      for (int k = 1; k <= top; ++k) {
        v += harm_amp[k] * sk;
        const double next = two_c * sk - sk_1;
        sk_1 = sk;
        sk = next;
      }
      double env = 1.0;
      if (i - pos < ramp) env = static_cast<double>(i - pos) / ramp;
      if (end - i < ramp) env = std::min(env, static_cast<double>(end - i) / ramp);
      y[i] = amp * env * (v + voice.noise_level * gauss(rng));
    }
    pos = end + gap;
  }
  const double rms = std::sqrt(energy(y) / std::max<std::size_t>(1, y.size()));
  if (rms > 0.0)
    for (double& v : y) v *= 0.1 / rms;
  return y;
}

}  // namespace

Catalog synthesize_catalog(std::size_t num_speakers, std::size_t utterances_per_speaker,
                           double utterance_seconds, std::uint64_t seed, int sample_rate) {
  require(num_speakers >= 1 && utterances_per_speaker >= 1,
          "synthetic catalog needs speakers and utterances");
  Catalog cat;
  for (std::size_t s = 0; s < num_speakers; ++s) {
    std::mt19937_64 rng(derive_seed(seed, s));
    VoiceProfile voice;
    voice.f0 = uniform(rng, 90.0, 240.0);
    voice.formant_scale = uniform(rng, 0.85, 1.2);
    voice.tilt = uniform(rng, 0.4, 0.9);
    voice.noise_level = uniform(rng, 0.005, 0.04);
    Speaker spk;
    spk.id = "synth" + std::to_string(s);
    for (std::size_t u = 0; u < utterances_per_speaker; ++u) {
      const auto len = static_cast<std::size_t>(
          utterance_seconds * uniform(rng, 0.8, 1.2) * sample_rate);
      spk.utterances.emplace_back(synthesize_utterance(voice, len, sample_rate, rng),
                                  sample_rate);
    }
    cat.speakers.push_back(std::move(spk));
  }
  return cat;
}

RoomSpec sample_room(const RoomSampler& sampler, std::mt19937_64& rng) {
  RoomSpec room;
  room.dims = {uniform(rng, sampler.length), uniform(rng, sampler.width),
               uniform(rng, sampler.height)};
  for (double& a : room.absorption) a = uniform(rng, sampler.absorption);
  return room;
}

ArrayLayout sample_layout(const RoomSpec& room, const RoomSampler& sampler,
                          std::size_t num_sources, std::size_t num_mics,
                          std::mt19937_64& rng) {
  require(num_sources >= 1 && num_mics >= 1, "layout needs sources and microphones");
  auto point = [&] {
    Point3 p{};
    for (int i = 0; i < 3; ++i) {
      const double m = std::min(sampler.wall_margin, 0.25 * room.dims[i]);
      p[i] = uniform(rng, m, room.dims[i] - m);
    }
    return p;
  };
  ArrayLayout layout;
  for (std::size_t s = 0; s < num_sources; ++s) layout.source_positions.push_back(point());
  for (std::size_t m = 0; m < num_mics; ++m) {
    Point3 p{};
    for (int attempt = 0; attempt < 100; ++attempt) {
      p = point();
      bool ok = true;
      for (const auto& s : layout.source_positions)
        ok = ok && distance(p, s) >= sampler.min_source_mic_distance;
      if (ok) break;
    }
    layout.mic_positions.push_back(p);
  }
  return layout;
}

UtterancePool::UtterancePool(const Catalog& catalog, bool reuse)
    : catalog_(catalog), reuse_(reuse) {
  require(catalog.speakers.size() >= 2, "catalog needs at least two speakers");
  for (const auto& spk : catalog.speakers) {
    require(!spk.utterances.empty(), "speaker without utterances: " + spk.id);
    std::vector<std::size_t> idx(spk.utterances.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    remaining_.push_back(std::move(idx));
  }
}

std::vector<double> UtterancePool::draw(std::size_t speaker, std::size_t length,
                                        std::mt19937_64& rng) {
  const auto& spk = catalog_.speakers.at(speaker);
  std::vector<double> out;
  out.reserve(length);
  bool first = true;
  while (out.size() < length) {
    std::size_t u;
    if (reuse_) {
      u = uniform_index(rng, 0, spk.utterances.size() - 1);
    } else {
      auto& rem = remaining_[speaker];
      if (rem.empty()) fail(ErrorCode::kState, "catalog exhausted for speaker " + spk.id);
      const std::size_t k = uniform_index(rng, 0, rem.size() - 1);
      u = rem[k];
      rem.erase(rem.begin() + static_cast<std::ptrdiff_t>(k));
    }
    const auto& s = spk.utterances[u].samples;
    std::size_t start = 0;
    if (first && s.size() > 2) start = uniform_index(rng, 0, s.size() / 3);
    first = false;
    const std::size_t take = std::min(length - out.size(), s.size() - start);
    out.insert(out.end(), s.begin() + start, s.begin() + start + take);
  }
  return out;
}

namespace {

std::pair<std::size_t, std::size_t> style_lengths(OverlapStyle style, std::size_t seg,
                                                  bool fill, std::mt19937_64& rng) {
  auto frac = [&](double lo, double hi) {
    return static_cast<std::size_t>(uniform(rng, lo, hi) * seg);
  };
  switch (style) {
    case OverlapStyle::kSingle:
      return {fill ? seg : frac(0.5, 1.0), 0};
    case OverlapStyle::kFullOverlap: {
      const std::size_t l = fill ? seg : frac(0.6, 1.0);
      return {l, l};
    }
    case OverlapStyle::kInclusive: {
      const std::size_t a = frac(0.7, 1.0);
      return {a, static_cast<std::size_t>(uniform(rng, 0.2, 0.6) * a)};
    }
    case OverlapStyle::kSequential:
      return {frac(0.25, 0.5), frac(0.25, 0.5)};
    case OverlapStyle::kPartialOverlap:
      return {frac(0.35, 0.75), frac(0.35, 0.75)};
  }
  return {seg, 0};
}

void place(std::vector<double>& buf, const std::vector<double>& src, std::size_t onset) {
  for (std::size_t i = 0; i < src.size() && onset + i < buf.size(); ++i)
    buf[onset + i] += src[i];
}

}  // namespace

namespace {

AudioClip linear_distortion(const AudioClip& clip, DistortionParams params) {
  params.clip_ratio.reset();
  return apply_distortion(clip, params);
}

}  // namespace

MixtureSample generate_mixture(UtterancePool& pool, const MixtureConfig& cfg,
                               std::mt19937_64& rng) {
  const Catalog& catalog = pool.catalog();
  require(catalog.speakers.size() >= 2, "catalog needs at least two speakers");
  require(cfg.min_devices >= 1 && cfg.min_devices <= cfg.max_devices,
          "device count range is invalid");
  const int rate = catalog.speakers[0].utterances[0].sample_rate;
  const auto seg = static_cast<std::size_t>(std::llround(cfg.segment_s * rate));
  require(seg >= cfg.stft.fft_size, "segment shorter than one STFT frame");

  MixtureSample out;
  out.style = cfg.forced_style ? *cfg.forced_style : sample_style(cfg.style_weights, rng);
  out.num_speakers = out.style == OverlapStyle::kSingle ? 1 : 2;
  const std::size_t ndev = uniform_index(rng, cfg.min_devices, cfg.max_devices);
  require(cfg.ref_channel < ndev, "reference channel exceeds device count");
  out.room = sample_room(cfg.room, rng);
  out.layout = sample_layout(out.room, cfg.room, out.num_speakers, ndev, rng);

  bool scheduled = false;
  for (int attempt = 0; attempt < 64 && !scheduled; ++attempt) {
    const auto [la, lb] = style_lengths(out.style, seg, cfg.fill_segment, rng);
    try {
      out.schedule = schedule_overlap(out.style, std::max<std::size_t>(la, 1),
                                      std::max<std::size_t>(lb, 1), seg, rng);
      scheduled = true;
    } catch (const Error&) {
    }
  }
  require(scheduled, "could not schedule overlap after bounded retries", ErrorCode::kState);

  const std::size_t spk_a = uniform_index(rng, 0, catalog.speakers.size() - 1);
  std::size_t spk_b = uniform_index(rng, 0, catalog.speakers.size() - 2);
  if (spk_b >= spk_a) ++spk_b;
  out.speaker_ids = {catalog.speakers[spk_a].id,
                     out.num_speakers > 1 ? catalog.speakers[spk_b].id : std::string()};

  std::array<std::vector<double>, 2> dry;
  dry[0].assign(seg, 0.0);
  dry[1].assign(seg, 0.0);
  place(dry[0], pool.draw(spk_a, out.schedule.len_a, rng), out.schedule.onset_a);
  if (out.num_speakers > 1) {
    auto b = pool.draw(spk_b, out.schedule.len_b, rng);
    const double g = std::pow(10.0, uniform(rng, cfg.source_gain_db) / 20.0);
    for (double& v : b) v *= g;
    place(dry[1], b, *out.schedule.onset_b);
  }

  const auto rir_len = static_cast<std::size_t>(std::llround(cfg.rir_seconds * rate));
  MultiChannelRecording clean;
  clean.channels.assign(ndev, AudioClip(std::vector<double>(seg, 0.0), rate));
  for (std::size_t s = 0; s < 2; ++s) {
    out.images[s].assign(ndev, AudioClip(std::vector<double>(seg, 0.0), rate));
    if (s >= out.num_speakers) continue;
    for (std::size_t c = 0; c < ndev; ++c) {
      const auto rir = image_method_rir(out.room, out.layout.source_positions[s],
                                        out.layout.mic_positions[c], cfg.max_order,
                                        rate, rir_len);
      auto img = render_source(AudioClip(dry[s], rate), rir);
      img.samples.resize(seg);
      for (std::size_t i = 0; i < seg; ++i) clean.channels[c].samples[i] += img.samples[i];
      out.images[s][c] = std::move(img);
    }
  }

  out.snr_db = uniform(rng, cfg.snr_db);
  const auto noise = make_noise(clean, out.snr_db, rng);
  out.noise = noise.channels;

  out.distortions.resize(ndev);
  out.mixture.channels.resize(ndev);
  for (std::size_t c = 0; c < ndev; ++c) {
    if (cfg.distortion) out.distortions[c] = sample_params(cfg.distortion_policy, rng);
    AudioClip noisy = clean.channels[c];
    for (std::size_t i = 0; i < seg; ++i) noisy.samples[i] += noise.channels[c].samples[i];
    out.mixture.channels[c] = apply_distortion(noisy, out.distortions[c]);
  }

  // Targets follow the linear part of the reference device's distortion so
  // they stay time-aligned with the masked reference mixture.
  for (std::size_t s = 0; s < 2; ++s)
    out.clean_refs[s] = linear_distortion(out.images[s][cfg.ref_channel],
                                          out.distortions[cfg.ref_channel]);

  const StftConfig& st = cfg.stft;
  const std::size_t frames = num_frames(seg, st);
  for (std::size_t s = 0; s < 2; ++s) {
    out.activity[s].assign(frames, 0);
    if (s >= out.num_speakers) continue;
    const std::size_t on = s == 0 ? out.schedule.onset_a : *out.schedule.onset_b;
    const std::size_t len = s == 0 ? out.schedule.len_a : out.schedule.len_b;
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t centre = t * st.hop + st.fft_size / 2;
      out.activity[s][t] = centre >= on && centre < on + len ? 1 : 0;
    }
  }
  out.count_labels.assign(frames, 0);
  for (std::size_t t = 0; t < frames; ++t)
    out.count_labels[t] = out.activity[0][t] + out.activity[1][t];

  double pk = 0.0;
  for (const auto& ch : out.mixture.channels) pk = std::max(pk, peak(ch.samples));
  out.scale = pk > 0.0 ? cfg.peak_level / pk : 1.0;
  auto scale = [&](AudioClip& clip) {
    for (double& v : clip.samples) v *= out.scale;
  };
  for (auto& ch : out.mixture.channels) scale(ch);
  for (auto& r : out.clean_refs) scale(r);
  for (auto& per_spk : out.images)
    for (auto& img : per_spk) scale(img);
  for (auto& n : out.noise) scale(n);
  return out;
}

MixtureSample generate_mixture(const Catalog& catalog, const MixtureConfig& cfg,
                               std::mt19937_64& rng) {
  UtterancePool pool(catalog, true);
  return generate_mixture(pool, cfg, rng);
}

std::vector<std::array<AudioClip, 2>> device_references(const MixtureSample& sample) {
  const std::size_t ndev = sample.mixture.num_channels();
  require(sample.images[0].size() == ndev && sample.images[1].size() == ndev &&
              sample.distortions.size() == ndev,
          "sample has no per-device images");
  std::vector<std::array<AudioClip, 2>> out(ndev);
  for (std::size_t c = 0; c < ndev; ++c)
    for (std::size_t s = 0; s < 2; ++s)
      out[c][s] = linear_distortion(sample.images[s][c], sample.distortions[c]);
  return out;
}

MultiChannelRecording recompose_mixture(const MixtureSample& sample) {
  MultiChannelRecording rec;
  for (std::size_t c = 0; c < sample.noise.size(); ++c) {
    AudioClip ch = sample.noise[c];
    for (const auto& per_spk : sample.images)
      for (std::size_t i = 0; i < ch.size(); ++i) ch.samples[i] += per_spk[c].samples[i];
    rec.channels.push_back(apply_distortion(ch, sample.distortions[c]));
  }
  return rec;
}

std::vector<std::pair<std::size_t, std::size_t>> single_speaker_intervals(
    const MixtureSample& sample) {
  const auto& s = sample.schedule;
  const std::size_t a0 = s.onset_a, a1 = s.onset_a + s.len_a;
  if (sample.num_speakers < 2 || !s.onset_b) return {{a0, a1}};
  const std::size_t b0 = *s.onset_b, b1 = *s.onset_b + s.len_b;
  std::vector<std::size_t> cuts{a0, a1, b0, b1};
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const std::size_t lo = cuts[i], hi = cuts[i + 1];
    if (hi <= lo) continue;
    const bool in_a = lo >= a0 && lo < a1;
    const bool in_b = lo >= b0 && lo < b1;
    if (in_a != in_b) {
      if (!out.empty() && out.back().second == lo) out.back().second = hi;
      else out.emplace_back(lo, hi);
    }
  }
  return out;
}

}  // namespace acss
