// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line front end. Links only the C API.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "adhoc_css/adhoc_css.h"

namespace {

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int report(acss_status st) {
  if (st == ACSS_OK) return 0;
  std::cerr << "error: " << acss_last_error() << " (" << acss_status_string(st) << ")\n";
  return 1;
}

acss_head head_of(const std::string& s) {
  if (s == "s1") return ACSS_HEAD_S1;
  if (s == "s2") return ACSS_HEAD_S2;
  return ACSS_HEAD_NONE;
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON configuration file");
  sub->add_option("--seed", c.seed, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous speech separation for ad hoc microphone arrays", "adhoc-css"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(acss_version()));
  int verbosity = 1;
  app.add_flag_callback("-v,--verbose", [&] { verbosity = 2; }, "Log progress");
  app.add_flag_callback("-q,--quiet", [&] { verbosity = 0; }, "Suppress warnings");

  Common c_sim, c_dist, c_sync, c_tsep, c_tcnt, c_sep, c_cnt;

  auto* sim = app.add_subcommand("simulate", "Generate a simulated multi-device corpus");
  add_common(sim, c_sim);
  std::string sim_out;
  std::optional<double> sim_hours;
  std::optional<std::int64_t> sim_n;
  sim->add_option("--out-dir", sim_out, "Output corpus directory")->required();
  sim->add_option("--hours", sim_hours, "Total duration of the corpus");
  sim->add_option("--num-samples", sim_n, "Number of mixtures (overrides --hours)");

  auto* dist = app.add_subcommand("distort", "Apply a randomly sampled device distortion to a WAV");
  add_common(dist, c_dist);
  std::string dist_in, dist_out;
  dist->add_option("--input", dist_in, "Input WAV")->required();
  dist->add_option("--output", dist_out, "Output WAV")->required();

  auto* sync = app.add_subcommand("sync", "Align the channels of a session");
  add_common(sync, c_sync);
  std::string sync_session, sync_out;
  sync->add_option("--session", sync_session, "Channel manifest")->required();
  sync->add_option("--out-dir", sync_out, "Output directory")->required();

  std::string tsep_train, tsep_val, tsep_out, tcnt_train, tcnt_val, tcnt_out, tcnt_head;
  std::optional<std::int64_t> tsep_epochs, tcnt_epochs;
  auto* tsep = app.add_subcommand("train-sep", "Train the separation model");
  add_common(tsep, c_tsep);
  tsep->add_option("--train-manifest", tsep_train, "Training manifest.jsonl")->required();
  tsep->add_option("--val-manifest", tsep_val, "Validation manifest.jsonl");
  tsep->add_option("--out-dir", tsep_out, "Checkpoint and log directory")->required();
  tsep->add_option("--epochs", tsep_epochs, "Override train.epochs");

  auto* tcnt = app.add_subcommand("train-count", "Train a speaker-counting model");
  add_common(tcnt, c_tcnt);
  tcnt->add_option("--head", tcnt_head, "Counting head")
      ->required()
      ->check(CLI::IsMember({"s1", "s2"}));
  tcnt->add_option("--train-manifest", tcnt_train, "Training manifest.jsonl")->required();
  tcnt->add_option("--val-manifest", tcnt_val, "Validation manifest.jsonl");
  tcnt->add_option("--out-dir", tcnt_out, "Checkpoint and log directory")->required();
  tcnt->add_option("--epochs", tcnt_epochs, "Override train.epochs");

  auto* sep = app.add_subcommand("separate", "Separate a session into two streams");
  add_common(sep, c_sep);
  std::string sep_session, sep_corpus, sep_ckpt, sep_count_ckpt, sep_head = "s1", sep_out;
  bool sep_no_merge = false, sep_align = false;
  auto* sep_s = sep->add_option("--session", sep_session, "Channel manifest of one session");
  auto* sep_c = sep->add_option("--corpus", sep_corpus,
                                "Simulate manifest.jsonl; every session goes to <out-dir>/<id>");
  sep_s->excludes(sep_c);
  sep->add_option("--sep-ckpt", sep_ckpt, "Separation checkpoint")->required();
  sep->add_option("--count-ckpt", sep_count_ckpt, "Counting checkpoint");
  sep->add_option("--count-head", sep_head, "Counting head")->check(CLI::IsMember({"s1", "s2"}));
  sep->add_flag("--no-count-merge", sep_no_merge, "Skip the speaker-counting gate");
  sep->add_flag("--align", sep_align, "Synchronize the channels first");
  sep->add_option("--out-dir", sep_out, "Output directory")->required();

  auto* cnt = app.add_subcommand("count", "Dump per-window speaker-count decisions");
  add_common(cnt, c_cnt);
  std::string cnt_session, cnt_ckpt, cnt_head = "s1", cnt_out;
  cnt->add_option("--session", cnt_session, "Channel manifest")->required();
  cnt->add_option("--count-ckpt", cnt_ckpt, "Counting checkpoint")->required();
  cnt->add_option("--count-head", cnt_head, "Counting head")->check(CLI::IsMember({"s1", "s2"}));
  cnt->add_option("--output", cnt_out, "Output JSONL")->required();

  auto* ev = app.add_subcommand("evaluate", "Score separated streams against references");
  std::string ev_hyp, ev_ref, ev_out;
  ev->add_option("--hyp-dir", ev_hyp, "Directory of <id>/stream{1,2}.wav")->required();
  ev->add_option("--ref-manifest", ev_ref, "Reference manifest.jsonl")->required();
  ev->add_option("--output", ev_out, "Output JSONL (default <hyp-dir>/eval.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto* s : app.get_subcommands()) failing = s;
    std::cerr << failing->help();
    return 2;
  }

  acss_set_log_level(static_cast<acss_log_level>(verbosity));

  if (sim->parsed()) {
    acss_simulate_args a{opt(c_sim.config), sim_out.c_str(), sim_hours.value_or(-1.0),
                         sim_n.value_or(-1), c_sim.seed};
    return report(acss_run_simulate(&a));
  }
  if (dist->parsed()) {
    acss_distort_args a{opt(c_dist.config), dist_in.c_str(), dist_out.c_str(), c_dist.seed};
    return report(acss_run_distort(&a));
  }
  if (sync->parsed()) {
    acss_sync_args a{opt(c_sync.config), sync_session.c_str(), sync_out.c_str(), c_sync.seed};
    return report(acss_run_sync(&a));
  }
  if (tsep->parsed()) {
    acss_train_args a{opt(c_tsep.config), tsep_train.c_str(), opt(tsep_val), tsep_out.c_str(),
                      ACSS_HEAD_NONE,     tsep_epochs.value_or(-1), c_tsep.seed};
    return report(acss_run_train(&a));
  }
  if (tcnt->parsed()) {
    acss_train_args a{opt(c_tcnt.config), tcnt_train.c_str(), opt(tcnt_val), tcnt_out.c_str(),
                      head_of(tcnt_head), tcnt_epochs.value_or(-1), c_tcnt.seed};
    return report(acss_run_train(&a));
  }
  if (sep->parsed()) {
    if (sep_session.empty() == sep_corpus.empty()) {
      std::cerr << "error: exactly one of --session and --corpus is required\n\n" << sep->help();
      return 2;
    }
    acss_separate_args a{opt(c_sep.config), opt(sep_session), opt(sep_corpus),
                         sep_ckpt.c_str(),  opt(sep_count_ckpt), head_of(sep_head),
                         sep_no_merge ? 0 : 1, sep_align ? 1 : 0, sep_out.c_str(),
                         c_sep.seed};
    return report(acss_run_separate(&a));
  }
  if (cnt->parsed()) {
    acss_count_args a{opt(c_cnt.config), cnt_session.c_str(), cnt_ckpt.c_str(),
                      head_of(cnt_head),  cnt_out.c_str(),     c_cnt.seed};
    return report(acss_run_count(&a));
  }
  if (ev->parsed()) {
    acss_evaluate_args a{ev_hyp.c_str(), ev_ref.c_str(), opt(ev_out)};
    char* summary = nullptr;
    const acss_status st = acss_run_evaluate(&a, &summary);
    if (st == ACSS_OK && summary) std::cout << summary;
    acss_string_free(summary);
    return report(st);
  }
  return 2;
}
