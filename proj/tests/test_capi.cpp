// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Exercises the shared library through its public C header only.

#include <adhoc_css/adhoc_css.h>
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed, double scale = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

const char* kTinyModel = R"({"model": {"d_model": 8, "num_heads": 2, "num_blocks": 1, "rnn_cells": 8}})";

}  // namespace

TEST_CASE("library metadata") {
  CHECK(std::string(acss_version()) == "0.1.0");
  CHECK(std::string(acss_status_string(ACSS_ERR_IO)).size() > 0);
  CHECK(std::string(acss_status_string(ACSS_OK)) != acss_status_string(ACSS_ERR_CONFIG));
}

TEST_CASE("invalid arguments are reported with a message") {
  acss_model* m = nullptr;
  CHECK(acss_model_create(ACSS_HEAD_NONE, nullptr, 0, nullptr) == ACSS_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(acss_last_error()) > 0);
  CHECK(acss_model_create(ACSS_HEAD_NONE, "{ nope", 0, &m) == ACSS_ERR_CONFIG);
  CHECK(m == nullptr);
  CHECK(acss_model_create(ACSS_HEAD_NONE, R"({"model": {"depth": 2}})", 0, &m) ==
        ACSS_ERR_CONFIG);
  CHECK(std::string(acss_last_error()).find("model.depth") != std::string::npos);
  CHECK(acss_model_load("/nonexistent/x.ckpt", &m) == ACSS_ERR_IO);
  CHECK(acss_recording_read("/nonexistent/session.txt", nullptr) == ACSS_ERR_INVALID_ARGUMENT);
  double out = 0.0;
  const std::vector<double> z(10, 0.0);
  CHECK(acss_si_snr(z.data(), z.data(), z.size(), &out) == ACSS_ERR_INVALID_ARGUMENT);
  acss_model_free(nullptr);
  acss_recording_free(nullptr);
  acss_css_result_free(nullptr);
  acss_string_free(nullptr);
}

TEST_CASE("models are created, run, saved and loaded") {
  const auto dir = std::filesystem::temp_directory_path() / "acss_test_capi_model";
  std::filesystem::create_directories(dir);
  acss_model* m = nullptr;
  REQUIRE(acss_model_create(ACSS_HEAD_S1, kTinyModel, 3, &m) == ACSS_OK);
  acss_head head = ACSS_HEAD_NONE;
  CHECK(acss_model_head(m, &head) == ACSS_OK);
  CHECK(head == ACSS_HEAD_S1);
  std::size_t n = 0;
  CHECK(acss_model_num_parameters(m, &n) == ACSS_OK);
  CHECK(n > 0);

  const std::size_t T = 5, F = 257;
  std::vector<double> mags(T * F);
  for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(std::sin(0.1 * i));
  std::vector<double> masks(2 * T * F), out(T * 2);
  REQUIRE(acss_model_forward(m, mags.data(), 1, T, F, masks.data(), out.data()) == ACSS_OK);
  for (double v : out) CHECK((v > 0.0 && v < 1.0));
  for (double v : masks) CHECK(v >= 0.0);
  CHECK(acss_model_forward(m, mags.data(), 1, T, 100, masks.data(), out.data()) ==
        ACSS_ERR_INVALID_ARGUMENT);
  CHECK(acss_model_forward(m, mags.data(), 1, T, F, masks.data(), nullptr) == ACSS_OK);
  CHECK(acss_model_forward(m, nullptr, 1, T, F, masks.data(), nullptr) ==
        ACSS_ERR_INVALID_ARGUMENT);

  const std::string path = (dir / "m.ckpt").string();
  REQUIRE(acss_model_save(m, path.c_str()) == ACSS_OK);
  acss_model* back = nullptr;
  REQUIRE(acss_model_load(path.c_str(), &back) == ACSS_OK);
  std::vector<double> masks2(masks.size()), out2(out.size());
  REQUIRE(acss_model_forward(back, mags.data(), 1, T, F, masks2.data(), out2.data()) == ACSS_OK);
  CHECK(masks2 == masks);
  CHECK(out2 == out);
  acss_model_free(back);
  acss_model_free(m);
}

TEST_CASE("recordings and device sync") {
  const std::size_t L = 16000;
  const auto base = noise(L + 400, 1);
  std::vector<double> a(base.begin() + 200, base.begin() + 200 + L);
  std::vector<double> b(base.begin() + 77, base.begin() + 77 + L);  // leads by 123
  const double* chans[2] = {a.data(), b.data()};
  acss_recording* rec = nullptr;
  REQUIRE(acss_recording_create(chans, 2, L, 16000, &rec) == ACSS_OK);
  CHECK(acss_recording_num_channels(rec) == 2);
  CHECK(acss_recording_length(rec) == L);
  CHECK(acss_recording_sample_rate(rec) == 16000);
  CHECK(acss_recording_channel(rec, 1)[5] == b[5]);
  CHECK(acss_recording_channel(rec, 2) == nullptr);

  int64_t lags[2] = {9, 9};
  acss_recording* aligned = nullptr;
  REQUIRE(acss_sync(rec, 320, 0.1, lags, &aligned) == ACSS_OK);
  CHECK(lags[0] == 0);
  CHECK(std::abs(lags[1]) == 123);
  const double* x0 = acss_recording_channel(aligned, 0);
  const double* x1 = acss_recording_channel(aligned, 1);
  const std::size_t la = acss_recording_length(aligned);
  CHECK(la < L);
  double err = 0.0;
  for (std::size_t i = 0; i < la; ++i) err = std::max(err, std::abs(x0[i] - x1[i]));
  CHECK(err == 0.0);
  acss_recording_free(aligned);
  acss_recording_free(rec);
}

TEST_CASE("separation through the C API") {
  const std::size_t L = 80000;
  const auto a = noise(L, 5), b = noise(L, 6);
  const double* chans[2] = {a.data(), b.data()};
  acss_recording* rec = nullptr;
  REQUIRE(acss_recording_create(chans, 2, L, 16000, &rec) == ACSS_OK);
  acss_model *sep = nullptr, *count = nullptr;
  REQUIRE(acss_model_create(ACSS_HEAD_NONE, kTinyModel, 1, &sep) == ACSS_OK);
  REQUIRE(acss_model_create(ACSS_HEAD_S2, kTinyModel, 2, &count) == ACSS_OK);

  acss_css_options opts;
  acss_css_options_init(&opts);
  CHECK(opts.window_s == 4.0);
  CHECK(opts.count_threshold == 1.2);
  CHECK(opts.count_merge == 1);
  acss_css_result* r = nullptr;
  // Default head is s1, the model is s2.
  CHECK(acss_separate(rec, sep, count, &opts, &r) == ACSS_ERR_INVALID_ARGUMENT);
  opts.count_head = ACSS_HEAD_S2;
  REQUIRE(acss_separate(rec, sep, count, &opts, &r) == ACSS_OK);
  CHECK(acss_css_result_length(r) == L);
  CHECK(acss_css_result_num_windows(r) == 2);
  CHECK(acss_css_result_stream(r, 1) != nullptr);
  CHECK(acss_css_result_stream(r, 2) == nullptr);
  char* report = nullptr;
  REQUIRE(acss_css_result_report(r, &report) == ACSS_OK);
  const std::string text(report);
  acss_string_free(report);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("\"selected_channel\"") != std::string::npos);
  acss_css_result_free(r);

  opts.count_merge = 0;
  REQUIRE(acss_separate(rec, sep, nullptr, &opts, &r) == ACSS_OK);
  acss_css_result_free(r);
  opts.window_s = 4.01;
  CHECK(acss_separate(rec, sep, nullptr, &opts, &r) == ACSS_ERR_CONFIG);
  acss_model_free(count);
  acss_model_free(sep);
  acss_recording_free(rec);
}

TEST_CASE("SI-SNR through the C API") {
  const auto r = noise(1000, 8);
  double db = 0.0;
  REQUIRE(acss_si_snr(r.data(), r.data(), r.size(), &db) == ACSS_OK);
  CHECK(db == 60.0);
}

TEST_CASE("job entry points validate their arguments") {
  acss_simulate_args s{};
  CHECK(acss_run_simulate(&s) == ACSS_ERR_INVALID_ARGUMENT);
  CHECK(acss_run_simulate(nullptr) == ACSS_ERR_INVALID_ARGUMENT);
  acss_evaluate_args e{};
  e.hyp_dir = "/nonexistent/hyp";
  e.ref_manifest = "/nonexistent/manifest.jsonl";
  CHECK(acss_run_evaluate(&e, nullptr) == ACSS_ERR_IO);
}
