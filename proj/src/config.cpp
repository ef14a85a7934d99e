// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "common.hpp"

namespace acss {

using nlohmann::json;

namespace {

const std::set<std::string> kSections = {"num_samples", "hours", "catalog", "mixture", "policy",
                                         "sync",        "model", "train",   "css"};

class Reader {
 public:
  Reader(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) bad("", "an object");
    // Sections of other subcommands are checked by check_root only.
    if (path_.empty()) seen_.insert(kSections.begin(), kSections.end());
  }

  ~Reader() noexcept(false) {
    if (!j_ || std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_->items())
      if (!seen_.count(k)) fail(ErrorCode::kConfig, "unknown config field '" + full(k) + "'");
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return Reader(nullptr, full(key));
    return Reader(&j_->at(key), full(key));
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    const json& v = j_->at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(key, "a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad(key, "an integer");
      if (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0) bad(key, "a nonnegative integer");
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad(key, "a number");
      out = v.get<T>();
    } else {
      if (!v.is_string()) bad(key, "a string");
      out = v.get<std::string>();
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    if (j_->at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  void get(const std::string& key, Range& out) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    const json& v = j_->at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      bad(key, "a [lo, hi] pair of numbers");
    out = {v[0].get<double>(), v[1].get<double>()};
    if (out.lo > out.hi) fail(ErrorCode::kConfig, "config field '" + full(key) + "': lo > hi");
  }

  [[noreturn]] void bad(const std::string& key, const std::string& what) const {
    fail(ErrorCode::kConfig, "config field '" + full(key) + "' must be " + what);
  }

  // Runs a validator, prefixing its message with this section's path.
  template <typename F>
  void check(F&& f) const {
    try {
      f();
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, "config section '" + (path_.empty() ? "<root>" : path_) +
                                   "': " + e.what());
    }
  }

  std::string full(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check_root(const json& j) {
  if (j.is_null()) return;
  if (!j.is_object()) fail(ErrorCode::kConfig, "config root must be an object");
  for (const auto& [k, v] : j.items())
    if (!kSections.count(k)) fail(ErrorCode::kConfig, "unknown config field '" + k + "'");
}

const json* root_ptr(const json& j) { return j.is_null() ? nullptr : &j; }

void read_policy(Reader r, DistortionPolicy& p) {
  r.get("p_bandpass", p.p_bandpass);
  r.get("p_clip", p.p_clip);
  r.get("p_delay", p.p_delay);
  r.get("low_cut_hz", p.low_cut);
  r.get("high_cut_hz", p.high_cut);
  r.get("clip_ratio", p.clip_ratio);
  r.get("delay_ms", p.delay_ms);
  r.check([&] { validate(p); });
}

void read_stft(Reader r, StftConfig& s) {
  r.get("fft_size", s.fft_size);
  r.get("hop", s.hop);
  r.check([&] { validate(s); });
}

}  // namespace

json load_config_file(const std::filesystem::path& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config file: " + path.string());
  try {
    json j = json::parse(in);
    check_root(j);
    return j;
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, "config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

SimulateConfig parse_simulate_config(const json& j) {
  check_root(j);
  SimulateConfig c;
  Reader root(root_ptr(j), "");
  root.get("num_samples", c.num_samples);
  root.get("hours", c.hours);
  if (c.hours && !(*c.hours > 0.0)) root.bad("hours", "positive");
  if (c.num_samples && *c.num_samples == 0) root.bad("num_samples", "positive");
  {
    Reader r = root.child("catalog");
    std::optional<std::string> dir;
    r.get("dir", dir);
    if (dir) c.catalog.dir = *dir;
    r.get("num_speakers", c.catalog.num_speakers);
    r.get("utterances_per_speaker", c.catalog.utterances_per_speaker);
    r.get("utterance_s", c.catalog.utterance_s);
    if (c.catalog.num_speakers < 2) r.bad("num_speakers", "at least 2");
    if (c.catalog.utterances_per_speaker < 1) r.bad("utterances_per_speaker", "at least 1");
    if (!(c.catalog.utterance_s > 0.1)) r.bad("utterance_s", "greater than 0.1");
  }
  {
    Reader r = root.child("mixture");
    auto& m = c.mixture;
    r.get("segment_s", m.segment_s);
    r.get("min_devices", m.min_devices);
    r.get("max_devices", m.max_devices);
    {
      Reader w = r.child("style_weights");
      for (std::size_t i = 0; i < kNumOverlapStyles; ++i)
        w.get(std::string(to_string(static_cast<OverlapStyle>(i))), m.style_weights[i]);
    }
    std::optional<std::string> forced;
    r.get("forced_style", forced);
    if (forced) {
      r.check([&] { m.forced_style = parse_overlap_style(*forced); });
    }
    r.get("fill_segment", m.fill_segment);
    r.get("snr_db", m.snr_db);
    r.get("source_gain_db", m.source_gain_db);
    r.get("distortion", m.distortion);
    read_policy(r.child("distortion_policy"), m.distortion_policy);
    r.get("max_order", m.max_order);
    r.get("rir_s", m.rir_seconds);
    r.get("ref_channel", m.ref_channel);
    r.get("reuse_utterances", m.reuse_utterances);
    r.get("peak_level", m.peak_level);
    {
      Reader room = r.child("room");
      room.get("length_m", m.room.length);
      room.get("width_m", m.room.width);
      room.get("height_m", m.room.height);
      room.get("absorption", m.room.absorption);
      room.get("wall_margin_m", m.room.wall_margin);
      room.get("min_source_mic_m", m.room.min_source_mic_distance);
    }
    read_stft(r.child("stft"), m.stft);
    if (!(m.segment_s > 0.0)) r.bad("segment_s", "positive");
    if (m.min_devices < 1 || m.max_devices < m.min_devices)
      r.bad("max_devices", "at least min_devices (which must be >= 1)");
    if (m.ref_channel >= m.min_devices) r.bad("ref_channel", "below min_devices");
    if (m.max_order < 0) r.bad("max_order", "nonnegative");
    if (!(m.rir_seconds > 0.0)) r.bad("rir_s", "positive");
    if (!(m.peak_level > 0.0 && m.peak_level <= 1.0)) r.bad("peak_level", "in (0, 1]");
    double total = 0.0;
    for (double w : m.style_weights) {
      if (w < 0.0) r.bad("style_weights", "nonnegative");
      total += w;
    }
    if (!(total > 0.0)) r.bad("style_weights", "not all zero");
  }
  return c;
}

DistortionPolicy parse_distortion_config(const json& j) {
  check_root(j);
  DistortionPolicy p;
  Reader root(root_ptr(j), "");
  read_policy(root.child("policy"), p);
  return p;
}

SyncOptions parse_sync_config(const json& j) {
  check_root(j);
  SyncOptions o;
  Reader root(root_ptr(j), "");
  Reader r = root.child("sync");
  r.get("max_lag", o.max_lag);
  r.get("score_floor", o.score_floor);
  if (o.max_lag < 0) r.bad("max_lag", "nonnegative");
  return o;
}

TrainJobConfig parse_train_config(const json& j, nn::CountHead head) {
  check_root(j);
  TrainJobConfig c;
  c.model = head == nn::CountHead::kNone ? nn::NetConfig::separation_defaults()
                                         : nn::NetConfig::counting_defaults(head);
  if (head != nn::CountHead::kNone) c.train.patience = 10;
  Reader root(root_ptr(j), "");
  {
    Reader r = root.child("model");
    auto& m = c.model;
    r.get("d_model", m.d_model);
    r.get("num_heads", m.num_heads);
    r.get("num_blocks", m.num_blocks);
    r.get("rnn_cells", m.rnn_cells);
    r.get("ffn_mult", m.ffn_mult);
    r.get("cross_channel", m.cross_channel);
    r.check([&] { nn::validate(m); });
  }
  {
    Reader r = root.child("train");
    auto& t = c.train;
    r.get("epochs", t.epochs);
    r.get("batch_size", t.batch_size);
    r.get("learning_rate", t.adam.learning_rate);
    r.get("beta1", t.adam.beta1);
    r.get("beta2", t.adam.beta2);
    r.get("epsilon", t.adam.epsilon);
    r.get("ref_channel", t.ref_channel);
    r.get("crop_s", t.crop_s);
    r.get("validate_every", t.validate_every);
    r.get("patience", t.patience);
    r.get("max_channels", t.max_channels);
    read_stft(r.child("stft"), t.stft);
    r.check([&] { validate(t); });
  }
  if (c.train.stft.num_bins() != static_cast<std::size_t>(c.model.num_bins))
    c.model.num_bins = static_cast<Eigen::Index>(c.train.stft.num_bins());
  return c;
}

CssConfig parse_css_config(const json& j) {
  check_root(j);
  CssConfig c;
  Reader root(root_ptr(j), "");
  Reader r = root.child("css");
  r.get("window_s", c.window_s);
  r.get("shift_s", c.shift_s);
  {
    Reader d = r.child("rule");
    d.get("vad_threshold", c.rule.vad_threshold);
    d.get("count_threshold", c.rule.count_threshold);
    d.get("run_length", c.rule.run_length);
    d.check([&] { validate(c.rule); });
  }
  read_stft(r.child("stft"), c.stft);
  r.check([&] { validate(c, kDefaultSampleRate); });
  return c;
}

std::uint64_t config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace acss
