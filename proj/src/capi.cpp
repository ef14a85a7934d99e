// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "adhoc_css/adhoc_css.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "app.hpp"
#include "common.hpp"
#include "css.hpp"
#include "device_sync.hpp"
#include "evaluation.hpp"
#include "log.hpp"
#include "nn/checkpoint.hpp"

struct acss_model {
  acss::nn::SpatioTemporalNet net;
};

struct acss_recording {
  acss::MultiChannelRecording rec;
};

struct acss_css_result {
  acss::CssOutput out;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
acss_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return ACSS_OK;
  } catch (const acss::Error& e) {
    g_last_error = e.what();
    return static_cast<acss_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ACSS_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return ACSS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ACSS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) acss::fail(acss::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

std::string str(const char* s, const char* what) {
  need(s, what);
  return s;
}

std::optional<std::filesystem::path> opt_path(const char* s) {
  if (s == nullptr || *s == '\0') return std::nullopt;
  return std::filesystem::path(s);
}

std::filesystem::path path_or_empty(const char* s) { return s ? std::filesystem::path(s) : std::filesystem::path(); }

acss::nn::CountHead to_head(acss_head h) {
  switch (h) {
    case ACSS_HEAD_NONE: return acss::nn::CountHead::kNone;
    case ACSS_HEAD_S1: return acss::nn::CountHead::kVad;
    case ACSS_HEAD_S2: return acss::nn::CountHead::kCount;
  }
  acss::fail(acss::ErrorCode::kInvalidArgument, "unknown head kind");
}

acss_head from_head(acss::nn::CountHead h) {
  switch (h) {
    case acss::nn::CountHead::kNone: return ACSS_HEAD_NONE;
    case acss::nn::CountHead::kVad: return ACSS_HEAD_S1;
    case acss::nn::CountHead::kCount: return ACSS_HEAD_S2;
  }
  return ACSS_HEAD_NONE;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* acss_version(void) { return acss::app::kVersion; }

const char* acss_last_error(void) { return g_last_error.c_str(); }

const char* acss_status_string(acss_status status) {
  switch (status) {
    case ACSS_OK: return "ok";
    case ACSS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ACSS_ERR_IO: return "i/o error";
    case ACSS_ERR_CONFIG: return "configuration error";
    case ACSS_ERR_NUMERIC: return "numerical error";
    case ACSS_ERR_STATE: return "invalid state";
    case ACSS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void acss_set_log_level(acss_log_level level) {
  acss::set_log_level(static_cast<acss::LogLevel>(level));
}

void acss_string_free(char* s) { std::free(s); }

acss_status acss_model_create(acss_head head, const char* config_json, uint64_t seed,
                              acss_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    nlohmann::json j = nlohmann::json::object();
    if (config_json) {
      try {
        j = nlohmann::json::parse(config_json);
      } catch (const nlohmann::json::parse_error& e) {
        acss::fail(acss::ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
      }
    }
    auto cfg = acss::parse_train_config(j, to_head(head)).model;
    cfg.seed = seed;
    *out = new acss_model{acss::nn::SpatioTemporalNet(cfg)};
  });
}

acss_status acss_model_load(const char* path, acss_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    *out = new acss_model{acss::nn::load_checkpoint(str(path, "path"))};
  });
}

acss_status acss_model_save(const acss_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    acss::nn::save_checkpoint(str(path, "path"), model->net);
  });
}

acss_status acss_model_head(const acss_model* model, acss_head* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = from_head(model->net.config().head);
  });
}

acss_status acss_model_num_parameters(const acss_model* model, size_t* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->net.params().num_elements();
  });
}

acss_status acss_model_forward(const acss_model* model, const double* magnitudes,
                               size_t channels, size_t frames, size_t bins, double* masks,
                               double* head) {
  return guarded([&] {
    need(model, "model");
    need(magnitudes, "magnitudes");
    need(masks, "masks");
    acss::require(channels >= 1 && frames >= 1 && bins >= 1, "empty input tensor");
    acss::MagnitudeTensor x;
    const auto T = static_cast<Eigen::Index>(frames), F = static_cast<Eigen::Index>(bins);
    for (size_t c = 0; c < channels; ++c)
      x.channels.push_back(Eigen::Map<const acss::RealGrid>(magnitudes + c * frames * bins, T, F));
    const auto y = model->net.forward(x);
    for (int i = 0; i < 2; ++i)
      std::memcpy(masks + i * frames * bins, y.masks[i].data(), sizeof(double) * frames * bins);
    if (head && y.head.size() > 0)
      std::memcpy(head, y.head.data(), sizeof(double) * static_cast<size_t>(y.head.size()));
  });
}

void acss_model_free(acss_model* model) { delete model; }

acss_status acss_recording_read(const char* manifest, acss_recording** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    *out = new acss_recording{acss::read_session(str(manifest, "manifest"))};
  });
}

acss_status acss_recording_create(const double* const* channels, size_t num_channels,
                                  size_t length, int sample_rate, acss_recording** out) {
  return guarded([&] {
    need(out, "out");
    need(channels, "channels");
    *out = nullptr;
    acss::require(num_channels >= 1, "recording needs at least one channel");
    acss::require(sample_rate > 0, "sample rate must be positive");
    acss::MultiChannelRecording rec;
    for (size_t c = 0; c < num_channels; ++c) {
      need(channels[c], "channel buffer");
      acss::AudioClip clip;
      clip.sample_rate = sample_rate;
      clip.samples.assign(channels[c], channels[c] + length);
      rec.channels.push_back(std::move(clip));
    }
    *out = new acss_recording{std::move(rec)};
  });
}

size_t acss_recording_num_channels(const acss_recording* rec) {
  return rec ? rec->rec.num_channels() : 0;
}

size_t acss_recording_length(const acss_recording* rec) {
  return rec ? rec->rec.min_length() : 0;
}

int acss_recording_sample_rate(const acss_recording* rec) {
  return rec ? rec->rec.sample_rate() : 0;
}

const double* acss_recording_channel(const acss_recording* rec, size_t channel) {
  if (!rec || channel >= rec->rec.num_channels()) return nullptr;
  return rec->rec.channels[channel].samples.data();
}

void acss_recording_free(acss_recording* rec) { delete rec; }

acss_status acss_sync(const acss_recording* rec, int64_t max_lag, double score_floor,
                      int64_t* lags, acss_recording** aligned) {
  return guarded([&] {
    need(rec, "recording");
    need(aligned, "aligned");
    *aligned = nullptr;
    acss::SyncOptions opts;
    opts.max_lag = max_lag;
    opts.score_floor = score_floor;
    auto r = acss::align_session(rec->rec, opts);
    if (lags) std::copy(r.lags.begin(), r.lags.end(), lags);
    *aligned = new acss_recording{std::move(r.aligned)};
  });
}

void acss_css_options_init(acss_css_options* opts) {
  if (!opts) return;
  const acss::CssConfig d;
  opts->window_s = d.window_s;
  opts->shift_s = d.shift_s;
  opts->count_merge = 1;
  opts->count_head = ACSS_HEAD_S1;
  opts->vad_threshold = d.rule.vad_threshold;
  opts->count_threshold = d.rule.count_threshold;
  opts->run_length = d.rule.run_length;
  opts->seed = 0;
}

acss_status acss_separate(const acss_recording* rec, const acss_model* sep,
                          const acss_model* count, const acss_css_options* opts,
                          acss_css_result** out) {
  return guarded([&] {
    need(rec, "recording");
    need(sep, "separation model");
    need(opts, "options");
    need(out, "out");
    *out = nullptr;
    acss::CssConfig cfg;
    cfg.window_s = opts->window_s;
    cfg.shift_s = opts->shift_s;
    cfg.count_merge = opts->count_merge != 0;
    cfg.count_head = to_head(opts->count_head);
    cfg.rule.vad_threshold = opts->vad_threshold;
    cfg.rule.count_threshold = opts->count_threshold;
    cfg.rule.run_length = opts->run_length;
    cfg.seed = opts->seed;
    *out = new acss_css_result{
        acss::run_css(rec->rec, sep->net, count ? &count->net : nullptr, cfg)};
  });
}

size_t acss_css_result_length(const acss_css_result* r) {
  return r ? r->out.streams[0].size() : 0;
}

const double* acss_css_result_stream(const acss_css_result* r, int stream) {
  if (!r || stream < 0 || stream > 1) return nullptr;
  return r->out.streams[stream].samples.data();
}

size_t acss_css_result_num_windows(const acss_css_result* r) {
  return r ? r->out.windows.size() : 0;
}

acss_status acss_css_result_report(const acss_css_result* r, char** jsonl) {
  return guarded([&] {
    need(r, "result");
    need(jsonl, "jsonl");
    std::ostringstream os;
    for (const auto& w : r->out.windows) os << acss::to_json_line(w) << '\n';
    *jsonl = dup_string(os.str());
  });
}

void acss_css_result_free(acss_css_result* r) { delete r; }

acss_status acss_si_snr(const double* est, const double* ref, size_t length, double* out_db) {
  return guarded([&] {
    need(est, "est");
    need(ref, "ref");
    need(out_db, "out_db");
    *out_db = acss::si_snr(std::span<const double>(est, length), std::span<const double>(ref, length));
  });
}

acss_status acss_run_simulate(const acss_simulate_args* a) {
  return guarded([&] {
    need(a, "args");
    acss::app::SimulateJob job;
    job.config = path_or_empty(a->config);
    job.out_dir = str(a->out_dir, "out_dir");
    if (a->hours > 0.0) job.hours = a->hours;
    if (a->num_samples >= 0) job.num_samples = static_cast<std::size_t>(a->num_samples);
    job.seed = a->seed;
    acss::app::run_simulate(job);
  });
}

acss_status acss_run_distort(const acss_distort_args* a) {
  return guarded([&] {
    need(a, "args");
    acss::app::DistortJob job;
    job.config = path_or_empty(a->config);
    job.input = str(a->input, "input");
    job.output = str(a->output, "output");
    job.seed = a->seed;
    acss::app::run_distort(job);
  });
}

acss_status acss_run_sync(const acss_sync_args* a) {
  return guarded([&] {
    need(a, "args");
    acss::app::SyncJob job;
    job.config = path_or_empty(a->config);
    job.session = str(a->session, "session");
    job.out_dir = str(a->out_dir, "out_dir");
    job.seed = a->seed;
    acss::app::run_sync(job);
  });
}

acss_status acss_run_train(const acss_train_args* a) {
  return guarded([&] {
    need(a, "args");
    acss::app::TrainJob job;
    job.config = path_or_empty(a->config);
    job.train_manifest = str(a->train_manifest, "train_manifest");
    job.val_manifest = opt_path(a->val_manifest);
    job.out_dir = str(a->out_dir, "out_dir");
    job.head = to_head(a->head);
    if (a->epochs >= 0) job.epochs = static_cast<std::size_t>(a->epochs);
    job.seed = a->seed;
    acss::app::run_train(job);
  });
}

acss_status acss_run_separate(const acss_separate_args* a) {
  return guarded([&] {
    need(a, "args");
    acss::app::SeparateJob job;
    job.config = path_or_empty(a->config);
    job.corpus = opt_path(a->corpus);
    if (!job.corpus) job.session = str(a->session, "session");
    job.sep_ckpt = str(a->sep_ckpt, "sep_ckpt");
    job.count_ckpt = opt_path(a->count_ckpt);
    job.count_head = to_head(a->count_head);
    job.count_merge = a->count_merge != 0;
    job.align = a->align != 0;
    job.out_dir = str(a->out_dir, "out_dir");
    job.seed = a->seed;
    acss::app::run_separate(job);
  });
}

acss_status acss_run_count(const acss_count_args* a) {
  return guarded([&] {
    need(a, "args");
    acss::app::CountJob job;
    job.config = path_or_empty(a->config);
    job.session = str(a->session, "session");
    job.count_ckpt = str(a->count_ckpt, "count_ckpt");
    job.count_head = to_head(a->count_head);
    job.output = str(a->output, "output");
    job.seed = a->seed;
    acss::app::run_count(job);
  });
}

acss_status acss_run_evaluate(const acss_evaluate_args* a, char** summary) {
  return guarded([&] {
    need(a, "args");
    acss::app::EvaluateJob job;
    job.hyp_dir = str(a->hyp_dir, "hyp_dir");
    job.ref_manifest = str(a->ref_manifest, "ref_manifest");
    job.output = opt_path(a->output);
    const std::string text = acss::app::run_evaluate(job);
    if (summary) *summary = dup_string(text);
  });
}

}  // extern "C"
