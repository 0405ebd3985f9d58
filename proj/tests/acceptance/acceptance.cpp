// Runs every acceptance experiment on the shipped default configuration and
// prints one line per criterion. Thresholds come from the written reports.
//
// usage: spinchain_acceptance [--config FILE] [--out DIR] [criterion...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spinchain/config.hpp"
#include "spinchain/experiments.hpp"
#include "spinchain/report.hpp"

namespace {

using namespace spinchain;

struct Criterion {
  int number;
  std::string title;
  std::vector<std::string> experiments;
  std::optional<double> budget_seconds;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "oracle triangle", {"oracle-triangle"}, 10.0},
      {2, "Fourier identity at N = 3", {"fourier-identity"}, 60.0},
      {3, "observable difference scaling", {"exp-observable-scaling"}, 300.0},
      {4, "correlation difference scaling", {"exp-correlation-scaling"}, 300.0},
      {5, "ce spin-spin structure", {"exp-ce-spin-decay"}, 120.0},
      {6, "gce exponential decay", {"exp-gce-decay"}, 60.0},
      {7, "density at zero stays bounded", {"exp-g0-stability"}, 300.0},
      {8, "variance band", {"exp-variance-band"}, 60.0},
      {9, "block moment scaling", {"exp-moment-scaling"}, 600.0},
      {10, "sampler correctness", {"exp-sampler-check"}, 600.0},
      {11, "mean conservation", {"exp-mean-conservation"}, std::nullopt},
  };
  return all;
}

std::string describe(const Verdict& v) {
  std::string s = v.name + "=" + format_number(v.value);
  if (v.lower) s += (v.lower->strict ? " >" : " >=") + format_number(v.lower->value);
  if (v.upper) s += (v.upper->strict ? " <" : " <=") + format_number(v.upper->value);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path config_path =
      std::filesystem::path(SPINCHAIN_SOURCE_DIR) / "configs" / "default.conf";
  std::filesystem::path out = "acceptance-out";
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--config" && k + 1 < argc) {
      config_path = argv[++k];
    } else if (arg == "--out" && k + 1 < argc) {
      out = argv[++k];
    } else {
      try {
        wanted.insert(std::stoi(arg));
      } catch (const std::exception&) {
        std::fprintf(stderr, "usage: %s [--config FILE] [--out DIR] [criterion...]\n", argv[0]);
        return 2;
      }
    }
  }

  ExperimentContext ctx;
  try {
    ctx.config = ModelConfig::load(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  ctx.out_dir = out;
  std::filesystem::create_directories(out);

  int failures = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && !wanted.contains(c.number)) continue;
    bool pass = true;
    double seconds = 0.0;
    std::vector<std::string> details;
    for (const auto& id : c.experiments) {
      const auto* entry = find_experiment(id);
      if (entry == nullptr) {
        pass = false;
        details.push_back(id + ": not registered");
        continue;
      }
      const auto start = std::chrono::steady_clock::now();
      try {
        const auto report = entry->run(ctx);
        write_report(report, out);
      } catch (const std::exception& e) {
        pass = false;
        details.push_back(id + ": " + e.what());
        continue;
      }
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const auto summary = read_report_summary(out / (id + ".json"));
      pass = pass && summary.passed;
      for (const auto& v : summary.verdicts) {
        if (!v.passed) details.push_back("failed " + describe(v));
      }
    }
    std::string budget = "no budget";
    if (c.budget_seconds) {
      const bool in_time = seconds < *c.budget_seconds;
      pass = pass && in_time;
      budget = "budget " + format_number(*c.budget_seconds) + " s";
      if (!in_time) details.push_back("over runtime budget");
    }
    std::printf("criterion %2d %s: %s (%.1f s, %s)\n", c.number, c.title.c_str(),
                pass ? "PASS" : "FAIL", seconds, budget.c_str());
    for (const auto& d : details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
