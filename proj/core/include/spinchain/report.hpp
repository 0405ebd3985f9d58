#pragma once

// Experiment reports: a raw table (CSV), fitted quantities and verdicts (JSON).
// Formats are described in docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace spinchain {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

struct Bound {
  double value = 0.0;
  bool strict = false;
};

/// A pass/fail check of `value` against the recorded bounds.
struct Verdict {
  std::string name;
  std::string description;
  double value = 0.0;
  std::optional<Bound> lower;
  std::optional<Bound> upper;
  bool passed = false;

  bool evaluate() const;
};

struct ExperimentReport {
  std::string id;
  std::string claim;
  std::string model_digest;
  std::vector<std::string> backends;
  Table table;
  std::vector<std::pair<std::string, double>> fitted;
  std::vector<std::pair<std::string, std::string>> notes;
  std::vector<Verdict> verdicts;
  std::vector<std::uint64_t> seeds;
  double wall_seconds = 0.0;

  bool passed() const;
  const Verdict& verdict(const std::string& name) const;
  double fitted_value(const std::string& name) const;

  void fit(const std::string& name, double value) { fitted.emplace_back(name, value); }
  void note(const std::string& key, const std::string& text) { notes.emplace_back(key, text); }
  const Verdict& check(const std::string& name, const std::string& description, double value,
                       std::optional<Bound> lower, std::optional<Bound> upper);
};

inline Bound at_least(double v) { return {v, false}; }
inline Bound above(double v) { return {v, true}; }
inline Bound at_most(double v) { return {v, false}; }
inline Bound below(double v) { return {v, true}; }

/// %.17g, with "nan" / "inf" / "-inf" for non-finite values.
std::string format_number(double value);

std::string to_csv(const Table& table);
std::string to_json(const ExperimentReport& report);

/// Writes <dir>/<id>.csv and <dir>/<id>.json, each via temp file + rename.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Verdict summary read back from a JSON report.
struct ReportSummary {
  std::string id;
  std::string claim;
  bool passed = false;
  std::vector<Verdict> verdicts;
};

ReportSummary read_report_summary(const std::filesystem::path& json_path);

}  // namespace spinchain
