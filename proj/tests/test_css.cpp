// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "corpus.hpp"
#include "css.hpp"
#include "evaluation.hpp"
#include "support.hpp"

using namespace acss;

namespace {

MultiChannelRecording noise_session(std::size_t channels, std::size_t length, std::uint64_t seed) {
  MultiChannelRecording rec;
  for (std::size_t c = 0; c < channels; ++c)
    rec.channels.emplace_back(acss::testing::random_signal(length, seed + c, 0.1), 16000);
  return rec;
}

// Masks derived only from the window's own magnitudes.
MaskEstimator local_estimator() {
  return [](const WindowContext& ctx) {
    const RealGrid& m = ctx.mags->channels[0];
    const RealGrid a = m.array() / (m.array() + 0.05);
    return MaskPair{a, (1.0 - a.array()).matrix()};
  };
}

// Ideal ratio masks of two reference signals on the CSS frame grid. The
// residual of the reference channel enters the denominator, so the masks
// leave noise out and the reference channel has the best posterior SNR.
struct OracleMasks {
  std::array<std::vector<double>, 3> padded;
  StftConfig stft;
  bool swap_odd = false;

  OracleMasks(const std::array<AudioClip, 2>& refs, const AudioClip& ref_channel,
              const WindowLayout& layout, const StftConfig& cfg)
      : stft(cfg) {
    std::vector<double> residual(layout.length);
    for (std::size_t i = 0; i < layout.length; ++i)
      residual[i] = ref_channel.samples[i] - refs[0].samples[i] - refs[1].samples[i];
    for (int i = 0; i < 2; ++i) padded[i] = pad_for_css(refs[i].samples, layout, cfg);
    padded[2] = pad_for_css(residual, layout, cfg);
  }

  MaskPair operator()(const WindowContext& ctx) const {
    const std::size_t frames = static_cast<std::size_t>(ctx.mags->channels[0].rows());
    std::array<RealGrid, 3> mag;
    for (int i = 0; i < 3; ++i)
      mag[i] = window_stft(padded[i], ctx.first_frame, frames, stft).data.cwiseAbs();
    const RealGrid sum = (mag[0] + mag[1] + mag[2]).array() + 1e-12;
    MaskPair m{mag[0].cwiseQuotient(sum), mag[1].cwiseQuotient(sum)};
    if (swap_odd && ctx.index % 2 == 1) std::swap(m[0], m[1]);
    return m;
  }
};

}  // namespace

TEST_CASE("window layout of a 20 s session") {
  const CssConfig cfg;
  const auto l = make_layout(320000, cfg, 16000);
  CHECK(l.window_frames == 250);
  CHECK(l.shift_frames == 125);
  CHECK(l.num_windows == 9);
  CHECK(l.needed_frames == 1251);
  CHECK(l.total_frames == 1251);
  CHECK(l.frames(0) == 250);
  CHECK(l.frames(7) == 250);
  CHECK(l.frames(8) == 251);
  CHECK_FALSE(l.truncated);
  const auto exact = make_layout(64000, cfg, 16000);
  CHECK(exact.num_windows == 1);
  CHECK_FALSE(exact.truncated);
  const auto longer = make_layout(64001, cfg, 16000);
  CHECK(longer.num_windows == 2);
}

TEST_CASE("CSS configuration is validated") {
  CssConfig a;
  a.shift_s = 1.0;  // overlap 3 s exceeds the shift
  CHECK_THROWS_AS(validate(a, 16000), Error);
  CssConfig b;
  b.window_s = 4.01;
  CHECK_THROWS_AS(validate(b, 16000), Error);
  CssConfig c;
  c.shift_s = 4.0;
  CHECK_THROWS_AS(validate(c, 16000), Error);
  validate(CssConfig{}, 16000);
}

TEST_CASE("channel selection follows posterior SNR") {
  StftConfig stft;
  const auto x0 = acss::testing::tone(4096, 1000.0);
  auto x1 = acss::testing::tone(4096, 1000.0);
  const auto n = acss::testing::random_signal(4096, 5, 0.2);
  std::vector<double> noisy(4096);
  for (std::size_t i = 0; i < 4096; ++i) noisy[i] = x1[i] + n[i];
  std::vector<ComplexSpectrogram> specs{acss::stft(noisy, stft), acss::stft(x0, stft)};
  const RealGrid clean = specs[1].data.cwiseAbs();
  const RealGrid m = (clean.array() > 0.1 * clean.maxCoeff()).cast<double>();
  const MaskPair masks{0.5 * m, 0.5 * m};
  CHECK(select_channel(masks, specs) == 1);
  const auto snr = posterior_snr(masks, specs);
  CHECK(snr[1] > snr[0]);

  // A per-channel gain does not change that channel's posterior SNR.
  auto scaled = specs;
  scaled[1].data *= 0.1;
  const auto snr2 = posterior_snr(masks, scaled);
  CHECK(snr2[1] == doctest::Approx(snr[1]).epsilon(1e-6));
  CHECK(select_channel(masks, scaled) == 1);
  // Ties keep the lowest index.
  std::vector<ComplexSpectrogram> same{specs[1], specs[1]};
  CHECK(select_channel(masks, same) == 0);
}

TEST_CASE("permutation alignment matches a brute-force search") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    using acss::testing::random_grid;
    const std::array<RealGrid, 2> prev{random_grid(8, 5, seed), random_grid(8, 5, seed + 100)};
    std::array<RealGrid, 2> cur{random_grid(8, 5, seed + 200), random_grid(8, 5, seed + 300)};
    if (seed % 2) cur = {prev[1] + 0.1 * cur[0], prev[0] + 0.1 * cur[1]};
    double best = 1e300;
    Permutation arg = kIdentityPerm;
    for (const Permutation p : {kIdentityPerm, kSwapPerm}) {
      double d = 0.0;
      for (int k = 0; k < 2; ++k) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < 8 * 5; ++i) {
          const double e = prev[k].data()[i] - cur[p[k]].data()[i];
          s += e * e;
        }
        d += std::sqrt(s);
      }
      if (d < best) {
        best = d;
        arg = p;
      }
    }
    CHECK(align_permutation(prev, cur) == arg);
    CHECK(permutation_distance(prev, cur, arg) == doctest::Approx(best).epsilon(1e-12));
    if (seed % 2) CHECK(arg == kSwapPerm);
  }
  const std::array<RealGrid, 2> z{RealGrid::Zero(3, 3), RealGrid::Zero(3, 3)};
  CHECK(align_permutation(z, z) == kIdentityPerm);
}

TEST_CASE("cross-fade weights sum to one and are symmetric") {
  for (std::size_t n : {1, 2, 125, 126}) {
    for (std::size_t k = 0; k < n; ++k) {
      const double r = crossfade_in(k, n);
      CHECK(r > 0.0);
      CHECK(r < 1.0);
      CHECK((1.0 - r) + r == 1.0);
      CHECK(r + crossfade_in(n - 1 - k, n) == doctest::Approx(1.0).epsilon(1e-14));
      if (k > 0) CHECK(r > crossfade_in(k - 1, n));
    }
  }
}

TEST_CASE("stitching identical spectra reconstructs the signal") {
  const CssConfig cfg;
  for (std::size_t length : {std::size_t{160000}, std::size_t{320000}, std::size_t{75000}}) {
    const auto x = acss::testing::random_signal(length, length, 0.3);
    const auto layout = make_layout(length, cfg, 16000);
    const auto padded = pad_for_css(x, layout, cfg.stft);
    std::vector<StitchWindow> windows;
    for (std::size_t w = 0; w < layout.num_windows; ++w) {
      const auto spec = window_stft(padded, layout.start(w), layout.frames(w), cfg.stft);
      windows.push_back({layout.start(w), {spec.data, 0.5 * spec.data}});
    }
    const auto out = stitch(windows, layout.total_frames, length, cfg.stft, 16000);
    REQUIRE(out[0].size() == length);
    std::vector<double> half(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) half[i] = 0.5 * x[i];
    CHECK(acss::testing::max_abs_diff(out[0].samples, x) < 1e-10);
    CHECK(acss::testing::max_abs_diff(out[1].samples, half) < 1e-10);
  }
}

TEST_CASE("stitching rejects inconsistent window series") {
  const StftConfig stft;
  const Eigen::Index bins = 257;
  auto win = [&](std::size_t start, Eigen::Index frames) {
    return StitchWindow{start, {ComplexGrid::Zero(frames, bins), ComplexGrid::Zero(frames, bins)}};
  };
  CHECK_THROWS_AS(stitch({win(0, 10), win(12, 10)}, 22, 5000, stft, 16000), Error);
  CHECK_THROWS_AS(stitch({win(0, 10), win(5, 10), win(8, 10)}, 18, 4000, stft, 16000), Error);
  CHECK_THROWS_AS(stitch({win(2, 10)}, 12, 2000, stft, 16000), Error);
  CHECK_THROWS_AS(stitch({win(0, 10), win(5, 10)}, 20, 4000, stft, 16000), Error);
  CHECK_THROWS_AS(stitch({win(0, 10), win(5, 10)}, 15, 100000, stft, 16000), Error);
  CHECK_NOTHROW(stitch({win(0, 10), win(5, 10)}, 15, 3000, stft, 16000));
}

TEST_CASE("forced single-speaker decisions leave the second stream silent") {
  const auto rec = noise_session(3, 150000, 1);
  CssConfig cfg;
  const auto out = run_css(rec, local_estimator(), forced_decider(false), cfg);
  CHECK(std::all_of(out.streams[1].samples.begin(), out.streams[1].samples.end(),
                    [](double v) { return v == 0.0; }));
  CHECK(duplication_leakage(out.streams, {{0, rec.min_length()}}) == -kMetricCapDb);
  for (const auto& w : out.windows) {
    CHECK(w.gated);
    CHECK_FALSE(w.multi_speaker);
    CHECK(w.absolute == kIdentityPerm);
  }
  // The merged stream is the masked sum, i.e. the selected channel itself.
  const auto first = nlohmann::json::parse(to_json_line(out.windows[0]));
  CHECK(first["decision"] == "single");
}

TEST_CASE("oracle masks separate a full-overlap session") {
  const Catalog cat = synthesize_catalog(4, 4, 10.0, 17);
  MixtureConfig mcfg = acss::testing::quick_mixture_config(10.0);
  mcfg.forced_style = OverlapStyle::kFullOverlap;
  mcfg.fill_segment = true;
  mcfg.distortion = false;
  mcfg.snr_db = {25.0, 25.0};
  std::mt19937_64 rng(5);
  auto s = generate_mixture(cat, mcfg, rng);
  REQUIRE(s.num_speakers == 2);
  REQUIRE(s.mixture.num_channels() >= 2);
  // The other devices are far noisier, so the reference device is the one
  // posterior-SNR selection should pick.
  for (std::size_t c = 1; c < s.mixture.num_channels(); ++c) {
    auto& x = s.mixture.channels[c].samples;
    const double rms = std::sqrt(energy(x) / x.size());
    const auto n = acss::testing::random_signal(x.size(), 100 + c, rms);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += n[i];
  }
  CssConfig cfg;
  cfg.count_merge = false;
  const auto layout = make_layout(s.mixture.min_length(), cfg, 16000);
  OracleMasks oracle(s.clean_refs, s.mixture.channels[0], layout, cfg.stft);
  const auto out = run_css(s.mixture, std::cref(oracle), {}, cfg);
  for (const auto& w : out.windows) CHECK(w.selected_channel == 0);
  const auto score = best_assignment_si_snr(out.streams, {s.clean_refs[0], s.clean_refs[1]});
  MESSAGE("oracle-mask SI-SNR " << score.si_snr_db[0] << " / " << score.si_snr_db[1]);
  CHECK(score.si_snr_db[0] > 10.0);
  CHECK(score.si_snr_db[1] > 10.0);
  CHECK(nlohmann::json::parse(to_json_line(out.windows[0]))["decision"] == "ungated");

  SUBCASE("swapped window outputs are re-aligned") {
    oracle.swap_odd = true;
    const auto swapped = run_css(s.mixture, std::cref(oracle), {}, cfg);
    for (std::size_t w = 1; w < swapped.windows.size(); ++w) {
      CHECK(swapped.windows[w].relative == kSwapPerm);
      CHECK(swapped.windows[w].absolute == (w % 2 ? kSwapPerm : kIdentityPerm));
    }
    for (int k = 0; k < 2; ++k)
      CHECK(acss::testing::max_abs_diff(swapped.streams[k].samples, out.streams[k].samples) <
            1e-12);
  }
}

TEST_CASE("window processing only reads samples up to the window's right edge") {
  const std::size_t length = 320000;
  const auto a = noise_session(2, length, 40);
  CssConfig cfg;
  cfg.count_merge = false;
  const auto layout = make_layout(length, cfg, 16000);
  const std::size_t w_cut = 3;
  const std::size_t edge = (layout.start(w_cut) + layout.frames(w_cut) - 1) * cfg.stft.hop +
                           cfg.stft.fft_size - WindowLayout::pad(cfg.stft);
  auto b = a;
  for (auto& ch : b.channels)
    for (std::size_t i = edge; i < length; ++i) ch.samples[i] = -3.0 * ch.samples[i] + 0.1;

  CssSession sa(a, local_estimator(), {}, cfg), sb(b, local_estimator(), {}, cfg);
  CHECK(sa.committed_frames() == 0);
  for (std::size_t w = 0; w <= w_cut; ++w) {
    const auto& ra = sa.process_next();
    const auto& rb = sb.process_next();
    CHECK(ra.selected_channel == rb.selected_channel);
    for (int i = 0; i < 2; ++i) CHECK(ra.raw_mags[i] == rb.raw_mags[i]);
    CHECK(sa.committed_frames() == layout.start(w + 1));
  }
  const auto& ra = sa.process_next();
  const auto& rb = sb.process_next();
  CHECK(ra.raw_mags[0] != rb.raw_mags[0]);
  const auto out = sa.finish();
  CHECK(sa.finished());
  CHECK(sa.committed_frames() == layout.total_frames);
  CHECK_THROWS_AS(sa.process_next(), Error);
  CHECK(out.windows.size() == 9);
}

TEST_CASE("model-driven CSS is deterministic") {
  nn::NetConfig sc = nn::NetConfig::separation_defaults();
  sc.d_model = 8;
  sc.num_heads = 2;
  sc.num_blocks = 1;
  sc.rnn_cells = 8;
  nn::NetConfig cc = nn::NetConfig::counting_defaults(nn::CountHead::kCount);
  cc.d_model = 8;
  cc.num_heads = 2;
  cc.num_blocks = 1;
  cc.rnn_cells = 8;
  const nn::SpatioTemporalNet sep(sc), count(cc);
  const auto rec = noise_session(3, 100000, 9);
  CssConfig cfg;
  cfg.count_head = nn::CountHead::kCount;
  cfg.seed = 3;
  const auto a = run_css(rec, sep, &count, cfg);
  const auto b = run_css(rec, sep, &count, cfg);
  for (int k = 0; k < 2; ++k) CHECK(a.streams[k].samples == b.streams[k].samples);
  std::vector<std::size_t> ch_a;
  for (std::size_t w = 0; w < a.windows.size(); ++w) {
    CHECK(to_json_line(a.windows[w]) == to_json_line(b.windows[w]));
    ch_a.push_back(a.windows[w].count_channel);
  }
  bool differs = false;
  for (std::uint64_t seed = 4; seed < 12 && !differs; ++seed) {
    cfg.seed = seed;
    const auto c = run_css(rec, sep, &count, cfg);
    for (std::size_t w = 0; w < c.windows.size(); ++w)
      differs = differs || c.windows[w].count_channel != ch_a[w];
  }
  CHECK(differs);

  cfg.count_head = nn::CountHead::kVad;
  CHECK_THROWS_AS(run_css(rec, sep, &count, cfg), Error);
  cfg.count_merge = false;
  CHECK_NOTHROW(run_css(rec, sep, nullptr, cfg));
}

TEST_CASE("sessions shorter than one window are processed as one truncated window") {
  const auto rec = noise_session(2, 40000, 70);
  CssConfig cfg;
  cfg.count_merge = false;
  const auto out = run_css(rec, local_estimator(), {}, cfg);
  REQUIRE(out.windows.size() == 1);
  CHECK(out.windows[0].truncated);
  CHECK(out.layout.truncated);
  CHECK(out.streams[0].size() == 40000);
  const auto j = nlohmann::json::parse(to_json_line(out.windows[0]));
  CHECK(j["truncated"] == true);
  CHECK_THROWS_AS(run_css(noise_session(2, 100, 1), local_estimator(), {}, cfg), Error);
}

TEST_CASE("channels of unequal length are cut to the shortest") {
  auto rec = noise_session(2, 70000, 80);
  rec.channels[1].samples.resize(65000);
  CssConfig cfg;
  cfg.count_merge = false;
  const auto out = run_css(rec, local_estimator(), {}, cfg);
  CHECK(out.streams[0].size() == 65000);
}

TEST_CASE("selected-channel references follow the per-window channel choice") {
  // Channel gains change halfway, so selection moves between devices.
  const std::size_t n = 9 * 16000;
  const auto a = acss::testing::random_signal(n, 40, 0.3);
  const auto b = acss::testing::random_signal(n, 41, 0.3);
  MultiChannelRecording rec;
  rec.channels.resize(2);
  for (int c = 0; c < 2; ++c) rec.channels[c].samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool late = i >= n / 2;
    rec.channels[0].samples[i] = (late ? 0.2 : 1.0) * a[i];
    rec.channels[1].samples[i] = (late ? 1.0 : 0.2) * b[i];
  }
  CssConfig cfg;
  cfg.count_merge = false;
  const MaskEstimator pass_all = [](const WindowContext& ctx) {
    const RealGrid& m = ctx.mags->channels[0];
    return MaskPair{RealGrid::Constant(m.rows(), m.cols(), 0.6),
                    RealGrid::Constant(m.rows(), m.cols(), 0.4)};
  };
  const auto out = run_css(rec, pass_all, {}, cfg);
  std::vector<std::array<AudioClip, 2>> dev;
  for (const auto& ch : rec.channels) {
    AudioClip lo = ch, hi = ch;
    for (auto& v : lo.samples) v *= 0.6;
    for (auto& v : hi.samples) v *= 0.4;
    dev.push_back({lo, hi});
  }
  const auto refs = selected_channel_references(out, dev, cfg);
  // Constant masks commute with the STFT, so the references are the streams.
  for (int k = 0; k < 2; ++k) {
    REQUIRE(refs[k].size() == out.streams[k].size());
    CHECK(acss::testing::max_abs_diff(refs[k].samples, out.streams[k].samples) < 1e-9);
  }
  std::set<std::size_t> chosen;
  for (const auto& w : out.windows) chosen.insert(w.selected_channel);
  CHECK(chosen.size() == 2);

  dev.pop_back();
  CHECK_THROWS_AS(selected_channel_references(out, dev, cfg), Error);
}

TEST_CASE("oracle window labels follow the padded frame grid") {
  const CssConfig cfg;
  const auto layout = make_layout(160000, cfg, 16000);
  std::vector<int> counts(1 + (160000 - 512) / 256, 1);
  for (std::size_t t = 300; t < 303; ++t) counts[t] = 2;
  const auto labels = oracle_window_labels(counts, layout, cfg.stft, 3);
  REQUIRE(labels.size() == layout.num_windows);
  // Unpadded frame 300 is padded frame 301: windows starting at 125 and 250.
  for (std::size_t w = 0; w < labels.size(); ++w) CHECK(labels[w] == (w == 1 || w == 2));
  counts[301] = 1;
  const auto none = oracle_window_labels(counts, layout, cfg.stft, 3);
  CHECK(std::none_of(none.begin(), none.end(), [](bool b) { return b; }));
}
