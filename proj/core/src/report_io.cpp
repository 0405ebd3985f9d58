#include "spinchain/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spinchain/errors.hpp"

namespace spinchain {

using nlohmann::json;

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorCode::DimensionMismatch, "table row has " + std::to_string(row.size()) +
                                                  " cells, expected " +
                                                  std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

bool Verdict::evaluate() const {
  if (std::isnan(value)) return false;
  if (lower && (lower->strict ? !(value > lower->value) : !(value >= lower->value))) return false;
  if (upper && (upper->strict ? !(value < upper->value) : !(value <= upper->value))) return false;
  return true;
}

bool ExperimentReport::passed() const {
  for (const auto& v : verdicts) {
    if (!v.passed) return false;
  }
  return true;
}

const Verdict& ExperimentReport::verdict(const std::string& name) const {
  for (const auto& v : verdicts) {
    if (v.name == name) return v;
  }
  throw Error(ErrorCode::InvalidArgument, id + ": no verdict named " + name);
}

double ExperimentReport::fitted_value(const std::string& name) const {
  for (const auto& [key, value] : fitted) {
    if (key == name) return value;
  }
  throw Error(ErrorCode::InvalidArgument, id + ": no fitted quantity named " + name);
}

const Verdict& ExperimentReport::check(const std::string& name, const std::string& description,
                                       double value, std::optional<Bound> lower,
                                       std::optional<Bound> upper) {
  Verdict v{name, description, value, lower, upper, false};
  v.passed = v.evaluate();
  verdicts.push_back(std::move(v));
  return verdicts.back();
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  return csv_escape(std::get<std::string>(cell));
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

json bound_json(const std::optional<Bound>& b) {
  if (!b) return nullptr;
  return json{{"value", number(b->value)}, {"strict", b->strict}};
}

std::optional<Bound> bound_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Bound{j.at("value").get<double>(), j.at("strict").get<bool>()};
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out += (c ? "," : "") + csv_escape(table.columns[c]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += cell_text(row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const ExperimentReport& report) {
  json j;
  j["id"] = report.id;
  j["claim"] = report.claim;
  j["model_digest"] = report.model_digest;
  j["backends"] = report.backends;
  j["table"] = report.id + ".csv";
  j["columns"] = report.table.columns;
  j["rows"] = report.table.rows.size();
  json fitted = json::object();
  for (const auto& [key, value] : report.fitted) fitted[key] = number(value);
  j["fitted"] = fitted;
  json notes = json::object();
  for (const auto& [key, text] : report.notes) notes[key] = text;
  j["notes"] = notes;
  json verdicts = json::array();
  for (const auto& v : report.verdicts) {
    verdicts.push_back({{"name", v.name},
                        {"description", v.description},
                        {"value", number(v.value)},
                        {"lower", bound_json(v.lower)},
                        {"upper", bound_json(v.upper)},
                        {"passed", v.passed}});
  }
  j["verdicts"] = verdicts;
  j["passed"] = report.passed();
  j["seeds"] = report.seeds;
  j["wall_seconds"] = report.wall_seconds;
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + temp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "short write to " + temp.string());
  }
  std::filesystem::rename(temp, path);
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  write_file_atomic(dir / (report.id + ".csv"), to_csv(report.table));
  write_file_atomic(dir / (report.id + ".json"), to_json(report));
}

ReportSummary read_report_summary(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + json_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, json_path.string() + ": " + e.what());
  }
  ReportSummary s;
  s.id = j.value("id", "");
  s.claim = j.value("claim", "");
  s.passed = j.value("passed", false);
  for (const auto& v : j.at("verdicts")) {
    Verdict verdict;
    verdict.name = v.at("name").get<std::string>();
    verdict.description = v.value("description", "");
    const auto& value = v.at("value");
    verdict.value = value.is_number() ? value.get<double>() : std::nan("");
    verdict.lower = bound_from(v.at("lower"));
    verdict.upper = bound_from(v.at("upper"));
    verdict.passed = v.at("passed").get<bool>();
    s.verdicts.push_back(std::move(verdict));
  }
  return s;
}

}  // namespace spinchain
