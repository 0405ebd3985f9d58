// spinchain: command-line front end for model validation, sampling, sigma
// matching and the experiment registry.
//
// Exit codes: 0 pass, 1 verdict failure or runtime error, 2 usage/config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "spinchain/ensemble_match.hpp"
#include "spinchain/estimators.hpp"
#include "spinchain/experiments.hpp"
#include "spinchain/samplers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spinchain;

namespace {

enum Exit : int { kPass = 0, kFail = 1, kUsage = 2 };

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigParse:
    case ErrorCode::Io:
    case ErrorCode::NonSymmetric:
    case ErrorCode::NotDiagonallyDominant:
    case ErrorCode::NotBanded:
    case ErrorCode::DimensionMismatch:
      return true;
    default:
      return false;
  }
}

struct Common {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool verbose = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "model configuration file (default: built-in model)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads for xi integrals")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_flag("--verbose", c.verbose, "per-xi diagnostics and progress on stderr");
}

ModelConfig load_config(const Common& c) {
  return c.config.empty() ? ModelConfig::default_model() : ModelConfig::load(c.config);
}

ExperimentContext context(const Common& c) {
  ExperimentContext ctx;
  ctx.config = load_config(c);
  ctx.seed = c.seed;
  ctx.threads = c.threads;
  ctx.verbose = c.verbose;
  ctx.out_dir = c.out;
  return ctx;
}

json report_summary(const ExperimentReport& r) {
  json verdicts = json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"name", v.name}, {"value", v.value}, {"passed", v.passed}});
  }
  return {{"id", r.id}, {"passed", r.passed()}, {"wall_seconds", r.wall_seconds},
          {"verdicts", verdicts}};
}

void print_report(const ExperimentReport& r) {
  std::cout << r.id << ": " << (r.passed() ? "PASS" : "FAIL") << "  (" << r.wall_seconds
            << " s)\n";
  for (const auto& v : r.verdicts) {
    std::cout << "  " << (v.passed ? "pass " : "FAIL ") << v.name << " = "
              << format_number(v.value) << "\n";
  }
  for (const auto& [key, text] : r.notes) std::cout << "  note " << key << ": " << text << "\n";
}

int run_reports(const Common& c, const std::vector<const ExperimentEntry*>& entries,
                json& summary) {
  const auto ctx = context(c);
  bool ok = true;
  json reports = json::array();
  for (const auto* e : entries) {
    if (c.verbose) std::cerr << "running " << e->id << "\n";
    const auto report = e->run(ctx);
    write_report(report, c.out);
    print_report(report);
    reports.push_back(report_summary(report));
    ok = ok && report.passed();
  }
  summary["reports"] = reports;
  return ok ? kPass : kFail;
}

int cmd_validate(const Common& c, json& summary) {
  const auto cfg = load_config(c);
  const auto report = validate_model(cfg.build());
  summary["digest"] = cfg.digest();
  summary["size"] = cfg.size;
  summary["margin"] = report.margin;
  summary["margin_row"] = report.margin_row;
  json issues = json::array();
  for (const auto& issue : report.issues) {
    issues.push_back({{"code", std::string(to_string(issue.code))}, {"message", issue.message}});
    std::cout << "issue: " << issue.message << "\n";
  }
  summary["issues"] = issues;
  std::cout << "digest " << cfg.digest() << ", N = " << cfg.size << ", margin "
            << format_number(report.margin) << "\n";
  std::cout << (report.passed() ? "valid" : "invalid") << "\n";
  return report.passed() ? kPass : kUsage;
}

struct SampleArgs {
  std::string ensemble = "gce";
  std::uint64_t sweeps = 100000;
  std::uint64_t thin = 1;
  std::optional<double> parameter;
  bool trace = false;
};

int cmd_sample(const Common& c, const SampleArgs& a, json& summary) {
  const auto cfg = load_config(c);
  const Model model(cfg.build());
  const Ensemble ens = a.ensemble == "ce" ? Ensemble::Ce : Ensemble::Gce;
  const double param = a.parameter.value_or(ens == Ensemble::Ce ? cfg.mean_spin.value_or(0.1)
                                                                 : cfg.sigma);
  auto sc = SamplerConfig::defaults(ens, a.sweeps, c.seed);
  sc.thin = a.thin;
  std::optional<TraceWriter> writer;
  if (a.trace) {
    fs::create_directories(c.out);
    writer.emplace(fs::path(c.out) / "trace.bin", model.size(), a.thin);
  }
  std::vector<double> mean_trace;
  std::vector<double> site_sum(model.size(), 0.0);
  const auto run = run_chain(model, ens, param, sc, [&](const ChainState& s) {
    mean_trace.push_back(s.config.mean());
    for (std::size_t k = 0; k < site_sum.size(); ++k) site_sum[k] += s.config.x[k];
    if (writer) writer->write(s.config.x);
  });
  if (writer) writer->close();
  summary["ensemble"] = a.ensemble;
  summary["parameter"] = param;
  summary["samples"] = run.samples;
  summary["acceptance"] = run.acceptance;
  summary["step_sizes"] = run.step_sizes;
  summary["largest_reprojection"] = run.largest_reprojection;
  for (double& v : site_sum) v /= static_cast<double>(run.samples);
  summary["site_means"] = site_sum;
  if (mean_trace.size() >= 100) {
    const auto est = mc_mean(mean_trace);
    summary["mean_spin"] = {{"value", est.value}, {"std_error", est.std_error}, {"ess", est.ess}};
    std::cout << "mean spin " << format_number(est.value) << " +- "
              << format_number(est.std_error) << "\n";
  }
  std::cout << run.samples << " samples, acceptance " << format_number(run.acceptance) << "\n";
  return kPass;
}

struct MatchArgs {
  std::optional<double> m;
  std::string backend = "auto";
  double tolerance = 1e-2;
};

int cmd_match(const Common& c, const MatchArgs& a, json& summary) {
  const auto cfg = load_config(c);
  const Model model(cfg.build());
  const double m = a.m.value_or(cfg.mean_spin.value_or(0.1));
  MatchBackend backend = preferred_backend(model);
  if (a.backend == "closed_form") backend = MatchBackend::ClosedForm;
  if (a.backend == "transfer") backend = MatchBackend::Transfer;
  if (a.backend == "stochastic_approximation") backend = MatchBackend::StochasticApproximation;
  MatchOptions opts;
  opts.transfer.threads = c.threads;
  opts.seed = c.seed;
  opts.tolerance = a.tolerance;
  const auto r = sigma_of_m(model, m, backend, opts);
  summary["m"] = m;
  summary["sigma"] = r.sigma;
  summary["achieved_mean"] = r.achieved_mean;
  summary["residual"] = r.residual;
  summary["std_error"] = r.std_error;
  summary["backend"] = std::string(to_string(r.backend));
  summary["iterations"] = r.iterations;
  std::cout << "sigma(" << format_number(m) << ") = " << format_number(r.sigma) << "  ["
            << to_string(r.backend) << ", residual " << format_number(r.residual) << "]\n";
  return kPass;
}

int cmd_report(const Common& c, json& summary) {
  if (!fs::is_directory(c.out)) {
    throw Error(ErrorCode::Io, "no such directory: " + c.out);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(c.out)) {
    const auto& p = entry.path();
    if (p.extension() == ".json" && p.filename() != "summary.json") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  bool ok = true;
  json reports = json::array();
  for (const auto& p : files) {
    ReportSummary s;
    try {
      s = read_report_summary(p);
    } catch (const std::exception&) {
      continue;  // not a report
    }
    std::cout << (s.passed ? "PASS " : "FAIL ") << s.id << "  " << s.claim << "\n";
    for (const auto& v : s.verdicts) {
      if (!v.passed) std::cout << "    failed " << v.name << " = " << format_number(v.value) << "\n";
    }
    reports.push_back({{"id", s.id}, {"passed", s.passed}});
    ok = ok && s.passed;
  }
  summary["reports"] = reports;
  if (reports.empty()) {
    std::cout << "no reports in " << c.out << "\n";
    return kFail;
  }
  return ok ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinchain: ensemble equivalence experiments for 1D continuous-spin chains"};
  app.require_subcommand(1);
  Common common;

  auto* validate = app.add_subcommand("validate", "check the configured model");
  add_common(validate, common);

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "run one Metropolis chain");
  add_common(sample, common);
  sample->add_option("--ensemble", sample_args.ensemble, "gce or ce")
      ->check(CLI::IsMember({"gce", "ce"}))
      ->capture_default_str();
  sample->add_option("--sweeps", sample_args.sweeps, "sweeps including burn-in")
      ->capture_default_str();
  sample->add_option("--thin", sample_args.thin, "keep every k-th sweep")->capture_default_str();
  sample->add_option("--param", sample_args.parameter, "sigma (gce) or m (ce)");
  sample->add_flag("--trace", sample_args.trace, "write <out>/trace.bin");

  MatchArgs match_args;
  auto* match = app.add_subcommand("match-sigma", "solve mean(sigma) = m");
  add_common(match, common);
  match->add_option("--m", match_args.m, "target mean spin (default: config mean_spin)");
  match->add_option("--backend", match_args.backend)
      ->check(CLI::IsMember({"auto", "closed_form", "transfer", "stochastic_approximation"}))
      ->capture_default_str();
  match->add_option("--tolerance", match_args.tolerance, "stochastic approximation tolerance")
      ->capture_default_str();

  auto* oracle = app.add_subcommand("oracle-check", "backend cross-checks");
  add_common(oracle, common);

  auto* report = app.add_subcommand("report", "summarise the reports in --out");
  add_common(report, common);

  std::vector<std::pair<CLI::App*, const ExperimentEntry*>> experiments;
  for (const auto& e : experiment_registry()) {
    if (e.id.rfind("exp-", 0) != 0) continue;
    auto* sub = app.add_subcommand(e.id, e.claim);
    add_common(sub, common);
    experiments.emplace_back(sub, &e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() != 0) std::cerr << app.help();
    return kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  json summary{{"command", chosen->get_name()}};
  int code = kPass;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (chosen == validate) {
      code = cmd_validate(common, summary);
    } else if (chosen == sample) {
      code = cmd_sample(common, sample_args, summary);
    } else if (chosen == match) {
      code = cmd_match(common, match_args, summary);
    } else if (chosen == oracle) {
      code = run_reports(common, {find_experiment("oracle-triangle"),
                                  find_experiment("fourier-identity")},
                         summary);
    } else if (chosen == report) {
      code = cmd_report(common, summary);
    } else {
      for (const auto& [sub, entry] : experiments) {
        if (sub == chosen) code = run_reports(common, {entry}, summary);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    summary["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    code = is_config_error(e.code()) ? kUsage : kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    summary["error"] = {{"code", "internal"}, {"message", e.what()}};
    code = kFail;
  }
  summary["exit_code"] = code;
  summary["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    write_file_atomic(fs::path(common.out) / "summary.json", summary.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write summary: " << e.what() << "\n";
    if (code == kPass) code = kFail;
  }
  return code;
}
