// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,5,...] [--work-dir DIR] [--verbose]
//
// Exit status is 0 when every selected criterion passes.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "criteria.hpp"

using namespace acss::acceptance;

int main(int argc, char** argv) {
  CLI::App app{"adhoc-css acceptance suite", "acceptance"};
  std::vector<int> only;
  std::string work_dir;
  bool verbose = false;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--work-dir", work_dir, "Scratch directory for corpora and checkpoints");
  app.add_flag("-v,--verbose", verbose, "Print progress of long criteria");
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  ctx.work_dir = work_dir.empty() ? std::filesystem::temp_directory_path() / "acss_acceptance"
                                  : std::filesystem::path(work_dir);
  ctx.verbose = verbose;
  std::filesystem::create_directories(ctx.work_dir);

  const std::set<int> selected(only.begin(), only.end());
  bool all_pass = true;
  for (const Criterion& c : criteria()) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = o.pass && in_time;
    all_pass = all_pass && pass;
    std::ostringstream line;
    line << (pass ? "PASS" : "FAIL") << "  [" << std::setw(2) << c.id << "] " << c.name << ": "
         << o.detail << " (" << std::fixed << std::setprecision(1) << secs << " s, limit "
         << std::setprecision(0) << c.time_limit_s << " s" << (in_time ? "" : ", TOO SLOW")
         << ")";
    std::cout << line.str() << std::endl;
  }
  return all_pass ? 0 : 1;
}
