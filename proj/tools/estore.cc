// Copyright 2026 The estore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: run one scenario, check a saved trace, or run a
// directory of scenarios. Exit codes: 0 all pass, 1 violation, 2 config error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "estore/harness/checkers.h"
#include "estore/harness/runner.h"
#include "estore/harness/scenario.h"

namespace {

using namespace estore;

constexpr int kPass = 0;
constexpr int kViolation = 1;
constexpr int kConfigError = 2;

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_violations(const std::vector<Violation>& violations) {
  for (const auto& v : violations) std::cout << "VIOLATION " << v.str() << "\n";
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
            std::optional<SimTime> until, const std::string& trace_out,
            const std::string& metrics_out) {
  const Scenario s = Scenario::load(path);
  RunOptions options;
  options.seed = seed;
  options.until = until;
  RunResult r = run_scenario(s, options);
  if (!trace_out.empty()) {
    std::ofstream out(trace_out);
    r.trace().write(out);
  }
  if (!metrics_out.empty()) {
    std::ofstream out(metrics_out);
    out << std::setw(2) << r.metrics.to_json() << "\n";
  }
  print_violations(r.violations);
  if (r.aborted) std::cout << "ABORTED " << r.abort_reason << "\n";
  std::cout << s.name << ": " << r.trace().size() << " events, " << r.metrics.committed
            << " commits, " << r.violations.size() << " violations, digest " << std::hex
            << r.trace().digest() << std::dec << "\n";
  return r.ok() ? kPass : kViolation;
}

int cmd_check(const std::string& path, const std::string& checks) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace: " + path);
  Trace trace;
  try {
    trace = Trace::read(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("unreadable trace: ") + e.what());
  }
  const auto violations = run_checks(trace, split_names(checks));
  print_violations(violations);
  std::cout << trace.size() << " events, " << violations.size() << " violations\n";
  return violations.empty() ? kPass : kViolation;
}

int cmd_corpus(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  if (files.empty()) throw ConfigError("no scenarios in " + dir);
  std::sort(files.begin(), files.end());
  bool all_ok = true;
  std::cout << std::left << std::setw(24) << "scenario" << std::setw(8) << "result"
            << std::setw(10) << "commits" << "violations\n";
  for (const auto& file : files) {
    const Scenario s = Scenario::load(file.string());
    RunResult r = run_scenario(s);
    all_ok &= r.ok();
    std::cout << std::left << std::setw(24) << s.name << std::setw(8)
              << (r.ok() ? "PASS" : "FAIL") << std::setw(10) << r.metrics.committed
              << r.violations.size() << (r.aborted ? " (aborted)" : "") << "\n";
    for (const auto& v : r.violations) std::cout << "    " << v.str() << "\n";
  }
  return all_ok ? kPass : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator and checkers for a partitioned transactional store"};
  app.require_subcommand(1);

  std::string scenario, trace_out, metrics_out, trace_in, checks = "all", dir;
  std::uint64_t seed = 0;
  SimTime until = 0;

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--scenario", scenario, "Scenario file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Seed (defaults to the scenario's)");
  auto* until_opt = run->add_option("--until", until, "Stop at this tick");
  run->add_option("--trace-out", trace_out, "Write the trace here");
  run->add_option("--metrics-out", metrics_out, "Write metrics here");

  auto* check = app.add_subcommand("check", "Run checkers over a saved trace");
  check->add_option("--trace", trace_in, "Trace file")->required();
  check->add_option("--checks", checks, "all or a comma-separated list");

  auto* corpus = app.add_subcommand("corpus", "Run every scenario in a directory");
  corpus->add_option("--dir", dir, "Scenario directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    if (*run) {
      std::optional<std::uint64_t> s;
      std::optional<SimTime> u;
      if (*seed_opt) s = seed;
      if (*until_opt) u = until;
      return cmd_run(scenario, s, u, trace_out, metrics_out);
    }
    if (*check) return cmd_check(trace_in, checks);
    return cmd_corpus(dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
}
