// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "app.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "evaluation.hpp"
#include "log.hpp"
#include "nn/checkpoint.hpp"

namespace acss::app {

using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "short write: " + path.string());
}

json distortion_json(const DistortionParams& d) {
  json j;
  j["bandpass_hz"] = d.bandpass ? json{d.bandpass->low_cut, d.bandpass->high_cut} : json(nullptr);
  j["clip_ratio"] = d.clip_ratio ? json(*d.clip_ratio) : json(nullptr);
  j["delay_ms"] = d.delay_ms ? json(*d.delay_ms) : json(nullptr);
  return j;
}

json config_with_overrides(const json& file, const json& overrides) {
  json j;
  j["file"] = file;
  j["overrides"] = overrides;
  return j;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::kIo, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_run_manifest(const fs::path& path, const std::string& command, std::uint64_t seed,
                        const json& config, const json& extra) {
  json j;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  j["config_hash"] = hex64(config_hash(config));
  j["version"] = kVersion;
  j["checkpoint_format_version"] = nn::kCheckpointVersion;
  if (!extra.is_null()) j["outputs"] = extra;
  write_text(path, j.dump(2) + "\n");
}

json sample_record(const std::string& id, const MixtureSample& s, const std::string& rel_dir) {
  json j;
  j["id"] = id;
  j["style"] = std::string(to_string(s.style));
  j["num_speakers"] = s.num_speakers;
  j["snr_db"] = s.snr_db;
  j["num_samples"] = s.mixture.min_length();
  j["sample_rate"] = s.mixture.sample_rate();
  j["speakers"] = {s.speaker_ids[0], s.speaker_ids[1]};
  json chans = json::array();
  for (std::size_t c = 0; c < s.mixture.num_channels(); ++c)
    chans.push_back(rel_dir + "/ch" + std::to_string(c) + ".wav");
  j["channels"] = chans;
  j["session"] = rel_dir + "/channels.txt";
  j["refs"] = {rel_dir + "/s0.wav", rel_dir + "/s1.wav"};
  json dev = json::array();
  for (std::size_t c = 0; c < s.mixture.num_channels(); ++c) {
    const std::string stem = rel_dir + "/dev" + std::to_string(c);
    dev.push_back({stem + "_s0.wav", stem + "_s1.wav"});
  }
  j["device_refs"] = dev;
  j["labels"] = rel_dir + "/labels.json";
  json intervals = json::array();
  for (const auto& [b, e] : single_speaker_intervals(s)) intervals.push_back({b, e});
  j["single_intervals"] = intervals;
  json dist = json::array();
  for (const auto& d : s.distortions) dist.push_back(distortion_json(d));
  j["distortions"] = dist;
  j["room_m"] = {s.room.dims[0], s.room.dims[1], s.room.dims[2]};
  return j;
}

void write_sample(const fs::path& corpus_dir, const std::string& id, const MixtureSample& s) {
  const fs::path dir = corpus_dir / "samples" / id;
  write_session(dir, s.mixture);
  write_wav(dir / "s0.wav", s.clean_refs[0]);
  write_wav(dir / "s1.wav", s.clean_refs[1]);
  const auto dev = device_references(s);
  for (std::size_t c = 0; c < dev.size(); ++c)
    for (int k = 0; k < 2; ++k)
      write_wav(dir / ("dev" + std::to_string(c) + "_s" + std::to_string(k) + ".wav"), dev[c][k]);
  json labels;
  labels["activity"] = {s.activity[0], s.activity[1]};
  labels["count"] = s.count_labels;
  write_text(dir / "labels.json", labels.dump() + "\n");
}

void run_simulate(const SimulateJob& job) {
  const json file = load_config_file(job.config);
  SimulateConfig cfg = parse_simulate_config(file);
  if (job.num_samples) cfg.num_samples = job.num_samples;
  if (job.hours) {
    cfg.hours = job.hours;
    if (!job.num_samples) cfg.num_samples.reset();
  }
  std::size_t n = 0;
  if (cfg.num_samples) {
    n = *cfg.num_samples;
  } else {
    const double hours = cfg.hours.value_or(0.1);
    require(hours > 0.0, "hours must be positive");
    n = static_cast<std::size_t>(std::ceil(hours * 3600.0 / cfg.mixture.segment_s - 1e-9));
  }
  require(n >= 1, "nothing to simulate");

  Catalog catalog = cfg.catalog.dir
                        ? load_catalog(*cfg.catalog.dir)
                        : synthesize_catalog(cfg.catalog.num_speakers,
                                             cfg.catalog.utterances_per_speaker,
                                             cfg.catalog.utterance_s, derive_seed(job.seed, 1));
  require(catalog.speakers.size() >= 2, "the speaker catalog needs at least two speakers");
  UtterancePool pool(catalog, cfg.mixture.reuse_utterances);
  std::mt19937_64 rng(derive_seed(job.seed, 2));

  fs::create_directories(job.out_dir);
  std::ostringstream manifest;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "s%05zu", i);
    const MixtureSample s = generate_mixture(pool, cfg.mixture, rng);
    write_sample(job.out_dir, id, s);
    manifest << sample_record(id, s, std::string("samples/") + id).dump() << '\n';
    if ((i + 1) % 50 == 0) log_info("simulated " + std::to_string(i + 1) + "/" + std::to_string(n));
  }
  write_text(job.out_dir / "manifest.jsonl", manifest.str());
  json ov;
  ov["num_samples"] = n;
  if (job.hours) ov["hours"] = *job.hours;
  write_run_manifest(job.out_dir / "run_manifest.json", "simulate", job.seed,
                     config_with_overrides(file, ov), json{{"manifest", "manifest.jsonl"},
                                                           {"num_samples", n}});
}

void run_distort(const DistortJob& job) {
  const json file = load_config_file(job.config);
  const DistortionPolicy policy = parse_distortion_config(file);
  const AudioClip in = read_wav(job.input);
  std::mt19937_64 rng(derive_seed(job.seed, 3));
  const DistortionParams params = sample_params(policy, rng);
  write_wav(job.output, apply_distortion(in, params));
  fs::path sidecar = job.output;
  sidecar += ".run_manifest.json";
  write_run_manifest(sidecar, "distort", job.seed, config_with_overrides(file, {}),
                     json{{"output", job.output.filename().string()},
                          {"params", distortion_json(params)}});
}

void run_sync(const SyncJob& job) {
  const json file = load_config_file(job.config);
  const SyncOptions opts = parse_sync_config(file);
  const MultiChannelRecording rec = read_session(job.session);
  const AlignmentResult r = align_session(rec, opts);
  write_session(job.out_dir, r.aligned);
  json lags;
  lags["lags"] = r.lags;
  lags["peak_scores"] = r.peak_scores;
  write_text(job.out_dir / "lags.json", lags.dump() + "\n");
  write_run_manifest(job.out_dir / "run_manifest.json", "sync", job.seed,
                     config_with_overrides(file, {}),
                     json{{"session", "channels.txt"}, {"lags", r.lags}});
}

void run_train(const TrainJob& job) {
  const json file = load_config_file(job.config);
  TrainJobConfig cfg = parse_train_config(file, job.head);
  if (job.epochs) cfg.train.epochs = *job.epochs;
  cfg.model.seed = derive_seed(job.seed, 4);
  cfg.train.seed = derive_seed(job.seed, 5);
  cfg.train.out_dir = job.out_dir;

  const Dataset train_set = load_dataset(job.train_manifest);
  std::optional<Dataset> val_set;
  if (job.val_manifest) val_set = load_dataset(*job.val_manifest);
  const TrainResult r = train(cfg.model, train_set, val_set ? &*val_set : nullptr, cfg.train);

  json report;
  report["kind"] = job.head == nn::CountHead::kNone ? "separation" : "counting";
  report["head"] = nn::to_string(job.head);
  report["best_epoch"] = r.best_epoch;
  report["best_loss"] = r.best_loss;
  report["selection"] = val_set ? "val_loss" : "train_loss";
  report["epochs_run"] = r.history.size();
  report["stopped_early"] = r.stopped_early;
  report["skipped_samples"] = train_set.skipped;
  report["best_checkpoint"] = "best.ckpt";
  write_text(job.out_dir / "train_report.json", report.dump(2) + "\n");
  json ov;
  ov["head"] = nn::to_string(job.head);
  if (job.epochs) ov["epochs"] = *job.epochs;
  write_run_manifest(job.out_dir / "run_manifest.json",
                     job.head == nn::CountHead::kNone ? "train-sep" : "train-count", job.seed,
                     config_with_overrides(file, ov),
                     json{{"metrics", "metrics.jsonl"}, {"report", "train_report.json"}});
}

namespace {

std::size_t separate_one(const MultiChannelRecording& input, const SeparateJob& job,
                         const CssConfig& cfg, const json& file,
                         const nn::SpatioTemporalNet& sep, const nn::SpatioTemporalNet* count,
                         const fs::path& out_dir) {
  MultiChannelRecording rec = input;
  std::vector<std::int64_t> lags;
  std::size_t offset = 0;
  if (job.align) {
    AlignmentResult a = align_session(rec, parse_sync_config(file));
    rec = std::move(a.aligned);
    lags = a.lags;
    offset = a.offset;
  }
  CssOutput out = run_css(rec, sep, count, cfg);
  if (job.align) {
    // Back onto the reference channel's timeline, silent where the channels
    // had no common support.
    for (auto& s : out.streams) {
      std::vector<double> full(input.channels[0].size(), 0.0);
      std::copy(s.samples.begin(), s.samples.end(),
                full.begin() + static_cast<std::ptrdiff_t>(offset));
      s.samples = std::move(full);
    }
  }
  fs::create_directories(out_dir);
  write_wav(out_dir / "stream1.wav", out.streams[0]);
  write_wav(out_dir / "stream2.wav", out.streams[1]);
  std::ostringstream report;
  for (const auto& w : out.windows) report << to_json_line(w) << '\n';
  write_text(out_dir / "report.jsonl", report.str());
  json ov;
  ov["count_merge"] = job.count_merge;
  ov["count_head"] = nn::to_string(job.count_head);
  ov["align"] = job.align;
  json outputs{{"streams", {"stream1.wav", "stream2.wav"}},
               {"report", "report.jsonl"},
               {"num_windows", out.windows.size()}};
  if (job.align) {
    outputs["lags"] = lags;
    outputs["offset"] = offset;
  }
  write_run_manifest(out_dir / "run_manifest.json", "separate", job.seed,
                     config_with_overrides(file, ov), outputs);
  return out.windows.size();
}

}  // namespace

void run_separate(const SeparateJob& job) {
  const json file = load_config_file(job.config);
  CssConfig cfg = parse_css_config(file);
  cfg.seed = derive_seed(job.seed, 6);
  cfg.count_merge = job.count_merge;
  cfg.count_head = job.count_head;

  const nn::SpatioTemporalNet sep = nn::load_checkpoint(job.sep_ckpt);
  std::optional<nn::SpatioTemporalNet> count;
  if (job.count_merge) {
    require(job.count_ckpt.has_value(), "--count-ckpt is required unless --no-count-merge is set");
    count = nn::load_checkpoint(*job.count_ckpt);
  }
  const nn::SpatioTemporalNet* count_ptr = count ? &*count : nullptr;
  if (!job.corpus) {
    separate_one(read_session(job.session), job, cfg, file, sep, count_ptr, job.out_dir);
    return;
  }
  const fs::path base = job.corpus->parent_path();
  for (const auto& e : read_jsonl(*job.corpus)) {
    const std::string id = e.at("id").get<std::string>();
    const auto rec = read_session(resolve(base, e.at("session").get<std::string>()));
    separate_one(rec, job, cfg, file, sep, count_ptr, job.out_dir / id);
    log_info("separated " + id);
  }
}

void run_count(const CountJob& job) {
  const json file = load_config_file(job.config);
  CssConfig cfg = parse_css_config(file);
  cfg.seed = derive_seed(job.seed, 6);
  cfg.count_head = job.count_head;
  const MultiChannelRecording rec = read_session(job.session);
  const nn::SpatioTemporalNet net = nn::load_checkpoint(job.count_ckpt);
  require(net.config().head == job.count_head,
          "counting checkpoint head is " + nn::to_string(net.config().head) + ", not " +
              nn::to_string(job.count_head));
  const CountDecider decide = model_decider(net, cfg.rule);

  const WindowLayout layout = make_layout(rec.min_length(), cfg, rec.sample_rate());
  std::vector<std::vector<double>> padded;
  for (const auto& ch : rec.channels)
    padded.push_back(
        pad_for_css(std::span<const double>(ch.samples.data(), layout.length), layout, cfg.stft));
  std::ostringstream lines;
  for (std::size_t w = 0; w < layout.num_windows; ++w) {
    std::vector<ComplexSpectrogram> specs;
    for (const auto& p : padded)
      specs.push_back(window_stft(p, layout.start(w), layout.frames(w), cfg.stft));
    const MagnitudeTensor mags = magnitudes(specs);
    std::mt19937_64 rng(derive_seed(cfg.seed, w));
    const CountDecision d = decide(WindowContext{w, layout.start(w), &specs, &mags}, rng);
    json j;
    j["window"] = w;
    j["first_frame"] = layout.start(w);
    j["frames"] = layout.frames(w);
    j["channel"] = d.channel;
    j["longest_run"] = longest_active_run(d.head, cfg.rule, job.count_head);
    j["decision"] = d.multi_speaker ? "multi" : "single";
    lines << j.dump() << '\n';
  }
  write_text(job.output, lines.str());
  fs::path sidecar = job.output;
  sidecar += ".run_manifest.json";
  write_run_manifest(sidecar, "count", job.seed,
                     config_with_overrides(file, json{{"count_head", nn::to_string(job.count_head)}}),
                     json{{"output", job.output.filename().string()},
                          {"num_windows", layout.num_windows}});
}

namespace {

struct DeviceScore {
  double mean_db = 0.0;
  double mixture_db = 0.0;
};

// Scores the streams against references stitched from the channel each
// window selected, and the equally stitched unmasked mixture as the baseline.
// Needs the per-device images, the window report and the run manifest.
std::optional<DeviceScore> device_reference_score(const json& entry, const fs::path& base,
                                                  const fs::path& hyp,
                                                  const std::array<AudioClip, 2>& streams,
                                                  std::size_t num_refs) {
  if (num_refs == 0 || !entry.contains("device_refs") || !fs::exists(hyp / "report.jsonl") ||
      !fs::exists(hyp / "run_manifest.json"))
    return std::nullopt;
  std::ifstream mf(hyp / "run_manifest.json");
  const json manifest = json::parse(mf);
  const CssConfig cfg =
      parse_css_config(manifest.at("config").value("file", json::object()));
  const json outputs = manifest.value("outputs", json::object());

  const auto& dev_paths = entry.at("device_refs");
  const auto& chan_paths = entry.at("channels");
  require(dev_paths.size() == chan_paths.size(), "device references do not match the channels");
  std::array<MultiChannelRecording, 2> images;
  MultiChannelRecording mix;
  for (std::size_t c = 0; c < dev_paths.size(); ++c) {
    for (int k = 0; k < 2; ++k)
      images[k].channels.push_back(read_wav(resolve(base, dev_paths[c][k].get<std::string>())));
    mix.channels.push_back(read_wav(resolve(base, chan_paths[c].get<std::string>())));
  }
  std::size_t offset = 0;
  if (outputs.contains("lags")) {
    const auto lags = outputs.at("lags").get<std::vector<std::int64_t>>();
    for (auto& rec : images) rec = apply_lags(rec, lags).aligned;
    const AlignmentResult a = apply_lags(mix, lags);
    mix = a.aligned;
    offset = a.offset;
  }

  CssOutput out;
  out.layout = make_layout(mix.min_length(), cfg, mix.sample_rate());
  for (const auto& w : read_jsonl(hyp / "report.jsonl")) {
    WindowResult r;
    r.index = w.at("window").get<std::size_t>();
    r.first_frame = w.at("first_frame").get<std::size_t>();
    r.frames = w.at("frames").get<std::size_t>();
    r.selected_channel = w.at("selected_channel").get<std::size_t>();
    out.windows.push_back(std::move(r));
  }
  if (out.windows.size() != out.layout.num_windows) return std::nullopt;

  std::vector<std::array<AudioClip, 2>> dev_refs(mix.num_channels()), dev_mix(mix.num_channels());
  for (std::size_t c = 0; c < mix.num_channels(); ++c) {
    dev_refs[c] = {images[0].channels[c], images[1].channels[c]};
    dev_mix[c] = {mix.channels[c], mix.channels[c]};
  }
  const auto refs = selected_channel_references(out, dev_refs, cfg, mix.sample_rate());
  const auto base_mix = selected_channel_references(out, dev_mix, cfg, mix.sample_rate());

  // Streams of an aligned run sit at offset on the reference timeline.
  const std::size_t n = refs[0].size();
  if (streams[0].size() < offset + n) return std::nullopt;
  std::array<AudioClip, 2> hyp_streams;
  for (int k = 0; k < 2; ++k)
    hyp_streams[k].samples.assign(streams[k].samples.begin() + offset,
                                  streams[k].samples.begin() + offset + n);
  std::vector<AudioClip> active;
  for (const auto& r : refs)
    if (energy(r.samples) > 0.0) active.push_back(r);
  if (active.empty()) return std::nullopt;
  DeviceScore score;
  score.mean_db = best_assignment_si_snr(hyp_streams, active).mean_db;
  for (const auto& r : active) score.mixture_db += si_snr(base_mix[0], r);
  score.mixture_db /= static_cast<double>(active.size());
  return score;
}

}  // namespace

std::string run_evaluate(const EvaluateJob& job) {
  const fs::path base = job.ref_manifest.parent_path();
  const auto entries = read_jsonl(job.ref_manifest);
  require(!entries.empty(), "reference manifest is empty");
  const CssConfig css_cfg;

  std::ostringstream records;
  double sum_si = 0.0, sum_imp = 0.0, sum_leak = 0.0, sum_leak_single = 0.0;
  double sum_dev = 0.0, sum_dev_imp = 0.0;
  std::size_t n_dev = 0, n_si = 0, n_leak = 0, n_leak_single = 0, n_sessions = 0;
  std::vector<bool> all_decisions, all_labels;
  for (const auto& e : entries) {
    const std::string id = e.at("id").get<std::string>();
    const fs::path hyp = job.hyp_dir / id;
    if (!fs::exists(hyp / "stream1.wav") || !fs::exists(hyp / "stream2.wav")) {
      log_warn("no hypothesis streams for " + id + ", skipping");
      continue;
    }
    ++n_sessions;
    std::array<AudioClip, 2> streams{read_wav(hyp / "stream1.wav"), read_wav(hyp / "stream2.wav")};
    std::vector<AudioClip> refs;
    for (const auto& r : e.at("refs")) {
      AudioClip c = read_wav(resolve(base, r.get<std::string>()));
      if (energy(c.samples) > 0.0) refs.push_back(std::move(c));
    }
    AudioClip mix = read_wav(resolve(base, e.at("channels").at(0).get<std::string>()));
    std::size_t n = std::min({streams[0].size(), streams[1].size(), mix.size()});
    for (const auto& r : refs) n = std::min(n, r.size());
    for (auto& s : streams) s.samples.resize(n);
    for (auto& r : refs) r.samples.resize(n);
    mix.samples.resize(n);

    json rec;
    rec["id"] = id;
    rec["style"] = e.value("style", "");
    rec["num_speakers"] = e.value("num_speakers", refs.size());
    if (!refs.empty()) {
      const AssignmentScore sc = best_assignment_si_snr(streams, refs);
      double mix_si = 0.0;
      for (const auto& r : refs) mix_si += si_snr(mix, r);
      mix_si /= static_cast<double>(refs.size());
      rec["si_snr_db"] = sc.si_snr_db;
      rec["assignment"] = sc.stream;
      rec["mean_si_snr_db"] = sc.mean_db;
      rec["mixture_si_snr_db"] = mix_si;
      rec["si_snr_improvement_db"] = sc.mean_db - mix_si;
      sum_si += sc.mean_db;
      sum_imp += sc.mean_db - mix_si;
      ++n_si;
    }
    if (const auto dev = device_reference_score(e, base, hyp, streams, refs.size())) {
      rec["device_si_snr_db"] = dev->mean_db;
      rec["device_si_snr_improvement_db"] = dev->mean_db - dev->mixture_db;
      sum_dev += dev->mean_db;
      sum_dev_imp += dev->mean_db - dev->mixture_db;
      ++n_dev;
    }
    std::vector<Interval> intervals;
    for (const auto& iv : e.value("single_intervals", json::array())) {
      const std::size_t b = iv.at(0).get<std::size_t>();
      const std::size_t end = std::min(iv.at(1).get<std::size_t>(), n);
      if (b < end) intervals.emplace_back(b, end);
    }
    if (!intervals.empty()) {
      const double leak = duplication_leakage(streams, intervals);
      rec["leakage_db"] = leak;
      sum_leak += leak;
      ++n_leak;
      if (refs.size() == 1) {
        sum_leak_single += leak;
        ++n_leak_single;
      }
    } else {
      rec["leakage_db"] = nullptr;
    }
    if (fs::exists(hyp / "report.jsonl") && e.contains("labels")) {
      std::vector<bool> decisions;
      bool gated = true;
      for (const auto& w : read_jsonl(hyp / "report.jsonl")) {
        const std::string d = w.value("decision", "ungated");
        if (d == "ungated") gated = false;
        decisions.push_back(d == "multi");
      }
      if (gated && !decisions.empty()) {
        std::ifstream lf(resolve(base, e.at("labels").get<std::string>()));
        const auto counts = json::parse(lf).at("count").get<std::vector<int>>();
        const WindowLayout layout = make_layout(n, css_cfg, mix.sample_rate);
        const auto labels =
            oracle_window_labels(counts, layout, css_cfg.stft, css_cfg.rule.run_length);
        if (labels.size() == decisions.size()) {
          const CountingMetrics cm = counting_metrics(decisions, labels);
          rec["counting"] = {{"accuracy", cm.accuracy},
                             {"false_multi_rate", cm.false_multi_rate},
                             {"false_single_rate", cm.false_single_rate}};
          all_decisions.insert(all_decisions.end(), decisions.begin(), decisions.end());
          all_labels.insert(all_labels.end(), labels.begin(), labels.end());
        }
      }
    }
    records << rec.dump() << '\n';
  }
  require(n_sessions > 0, "no hypothesis sessions found under " + job.hyp_dir.string());

  json summary;
  summary["summary"] = true;
  summary["sessions"] = n_sessions;
  std::ostringstream text;
  text << "sessions evaluated: " << n_sessions << '\n';
  if (n_si > 0) {
    summary["mean_si_snr_db"] = sum_si / n_si;
    summary["mean_si_snr_improvement_db"] = sum_imp / n_si;
    text << "mean SI-SNR: " << fixed(sum_si / n_si) << " dB (improvement "
         << fixed(sum_imp / n_si) << " dB)\n";
  }
  if (n_dev > 0) {
    summary["mean_device_si_snr_db"] = sum_dev / n_dev;
    summary["mean_device_si_snr_improvement_db"] = sum_dev_imp / n_dev;
    text << "mean SI-SNR against selected-device references: " << fixed(sum_dev / n_dev)
         << " dB (improvement " << fixed(sum_dev_imp / n_dev) << " dB)\n";
  }
  if (n_leak > 0) {
    summary["mean_leakage_db"] = sum_leak / n_leak;
    text << "mean duplication leakage: " << fixed(sum_leak / n_leak) << " dB\n";
  }
  if (n_leak_single > 0) {
    summary["mean_leakage_single_speaker_db"] = sum_leak_single / n_leak_single;
    text << "mean leakage, single-speaker sessions: "
         << fixed(sum_leak_single / n_leak_single) << " dB\n";
  }
  if (!all_labels.empty()) {
    const CountingMetrics cm = counting_metrics(all_decisions, all_labels);
    summary["counting"] = {{"windows", all_labels.size()},
                           {"accuracy", cm.accuracy},
                           {"false_multi_rate", cm.false_multi_rate},
                           {"false_single_rate", cm.false_single_rate}};
    text << "counting accuracy: " << fixed(cm.accuracy, 3)
         << " (false multi " << fixed(cm.false_multi_rate, 3) << ", false single "
         << fixed(cm.false_single_rate, 3) << ")\n";
  }
  records << summary.dump() << '\n';
  write_text(job.output.value_or(job.hyp_dir / "eval.jsonl"), records.str());
  return text.str();
}

}  // namespace acss::app
