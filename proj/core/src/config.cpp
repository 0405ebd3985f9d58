#include "spinchain/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace spinchain {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Located {
  std::string value;
  std::size_t line = 0;
};

using Sections = std::map<std::string, std::map<std::string, Located>>;

[[noreturn]] void parse_error(const std::string& source, std::size_t line,
                              const std::string& what) {
  throw Error(ErrorCode::ConfigParse, source + ":" + std::to_string(line) + ": " + what, line);
}

double to_number(const std::string& source, const Located& v) {
  const std::string text = trim(v.value);
  double out = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    parse_error(source, v.line, "expected a number, got '" + text + "'");
  }
  return out;
}

std::size_t to_count(const std::string& source, const Located& v) {
  const double d = to_number(source, v);
  if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d))) {
    parse_error(source, v.line, "expected a nonnegative integer, got '" + trim(v.value) + "'");
  }
  return static_cast<std::size_t>(d);
}

std::vector<double> to_list(const std::string& source, const Located& v) {
  std::vector<double> out;
  std::stringstream ss(v.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(to_number(source, {item, v.line}));
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> FieldSpec::resolve(std::size_t n) const {
  switch (kind) {
    case Kind::Constant: return std::vector<double>(n, value);
    case Kind::Alternating: {
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = (i % 2 == 0) ? value : -value;
      return s;
    }
    case Kind::Values:
      if (values.size() != n) {
        throw Error(ErrorCode::DimensionMismatch,
                    "explicit field list has " + std::to_string(values.size()) +
                        " entries but N = " + std::to_string(n));
      }
      return values;
  }
  return {};
}

ModelConfig ModelConfig::parse(std::string_view text, const std::string& source) {
  Sections sections;
  std::string current;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_error(source, line_no, "unterminated section header");
      current = lower(trim(line.substr(1, line.size() - 2)));
      if (current.empty()) parse_error(source, line_no, "empty section name");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_error(source, line_no, "expected 'key = value'");
    if (current.empty()) parse_error(source, line_no, "key outside of any section");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) parse_error(source, line_no, "empty key");
    auto& sec = sections[current];
    if (sec.count(key)) parse_error(source, line_no, "duplicate key '" + key + "'");
    sec[key] = {value, line_no};
  }

  ModelConfig cfg;
  auto need = [&](const std::string& sec, const std::string& key) -> const Located& {
    auto s = sections.find(sec);
    if (s == sections.end()) {
      throw Error(ErrorCode::ConfigParse, source + ": missing section [" + sec + "]");
    }
    auto k = s->second.find(key);
    if (k == s->second.end()) {
      throw Error(ErrorCode::ConfigParse,
                  source + ": missing key '" + key + "' in [" + sec + "]");
    }
    return k->second;
  };
  auto find = [&](const std::string& sec, const std::string& key) -> const Located* {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };
  auto reject_unknown = [&](const std::string& sec, const std::set<std::string>& allowed) {
    auto s = sections.find(sec);
    if (s == sections.end()) return;
    for (const auto& [key, v] : s->second) {
      if (!allowed.count(key) && !(sec == "couplings" && key.rfind("band", 0) == 0)) {
        parse_error(source, v.line, "unknown key '" + key + "' in [" + sec + "]");
      }
    }
  };

  cfg.size = to_count(source, need("lattice", "n"));
  if (cfg.size == 0) parse_error(source, need("lattice", "n").line, "N must be positive");
  cfg.range = find("lattice", "r") ? to_count(source, *find("lattice", "r")) : 1;
  reject_unknown("lattice", {"n", "r"});

  if (!sections.count("couplings")) {
    throw Error(ErrorCode::ConfigParse, source + ": missing section [couplings]");
  }
  reject_unknown("couplings", {"uniform"});
  if (const auto* u = find("couplings", "uniform")) {
    if (sections["couplings"].size() != 1) {
      parse_error(source, u->line, "'uniform' cannot be combined with explicit bands");
    }
    cfg.couplings.kind = CouplingSpec::Kind::Uniform;
    cfg.couplings.uniform = to_number(source, *u);
  } else {
    cfg.couplings.kind = CouplingSpec::Kind::Bands;
    cfg.couplings.bands.assign(cfg.range, {});
    for (const auto& [key, v] : sections["couplings"]) {
      std::size_t k = 0;
      const std::string digits = key.substr(4);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
      if (ec != std::errc{} || ptr != digits.data() + digits.size() || k == 0 ||
          k > cfg.range) {
        parse_error(source, v.line, "band key must be band1..band" + std::to_string(cfg.range));
      }
      cfg.couplings.bands[k - 1] = to_list(source, v);
    }
  }

  if (sections.count("field")) {
    reject_unknown("field", {"constant", "alternating", "values"});
    const auto& sec = sections["field"];
    if (sec.size() != 1) {
      throw Error(ErrorCode::ConfigParse,
                  source + ": [field] needs exactly one of constant/alternating/values");
    }
    const auto& [key, v] = *sec.begin();
    if (key == "constant") {
      cfg.field.kind = FieldSpec::Kind::Constant;
      cfg.field.value = to_number(source, v);
    } else if (key == "alternating") {
      cfg.field.kind = FieldSpec::Kind::Alternating;
      cfg.field.value = to_number(source, v);
    } else {
      cfg.field.kind = FieldSpec::Kind::Values;
      cfg.field.values = to_list(source, v);
    }
  }

  if (sections.count("potential")) {
    reject_unknown("potential", {"kind", "a", "b"});
    const auto& kind = need("potential", "kind");
    const std::string k = lower(kind.value);
    if (k == "zero" || k == "gaussian") {
      cfg.potential = SingleSitePotential::zero();
    } else if (k == "cosine") {
      const double a = find("potential", "a") ? to_number(source, *find("potential", "a")) : 1.0;
      const double b = find("potential", "b") ? to_number(source, *find("potential", "b")) : 2.0;
      cfg.potential = SingleSitePotential::cosine(a, b);
    } else {
      parse_error(source, kind.line, "unknown potential kind '" + kind.value + "'");
    }
  }

  if (sections.count("ensemble")) {
    reject_unknown("ensemble", {"sigma", "m"});
    if (const auto* s = find("ensemble", "sigma")) cfg.sigma = to_number(source, *s);
    if (const auto* m = find("ensemble", "m")) cfg.mean_spin = to_number(source, *m);
  }

  static const std::set<std::string> known{"lattice", "couplings", "field", "potential",
                                           "ensemble"};
  for (const auto& [name, sec] : sections) {
    if (known.count(name)) continue;
    for (const auto& [key, v] : sec) cfg.extras_[name][key] = v.value;
  }

  // Surface shape errors (band lengths, field length) at parse time.
  (void)cfg.build();
  return cfg;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

ModelConfig ModelConfig::default_model(std::size_t n) {
  ModelConfig cfg;
  cfg.size = n;
  cfg.range = 1;
  cfg.couplings.kind = CouplingSpec::Kind::Uniform;
  cfg.couplings.uniform = 0.3;
  cfg.field.kind = FieldSpec::Kind::Alternating;
  cfg.field.value = 0.2;
  cfg.potential = SingleSitePotential::cosine(1.0, 2.0);
  cfg.sigma = 0.0;
  cfg.mean_spin = 0.1;
  return cfg;
}

ModelSpec ModelConfig::build(std::size_t n) const {
  InteractionMatrix m = couplings.kind == CouplingSpec::Kind::Uniform
                            ? InteractionMatrix::uniform(n, range, couplings.uniform)
                            : InteractionMatrix::from_bands(n, couplings.bands);
  return ModelSpec{std::move(m), potential, field.resolve(n), sigma};
}

ModelConfig ModelConfig::gaussian() const {
  ModelConfig out = *this;
  out.potential = SingleSitePotential::zero();
  return out;
}

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os << "[lattice]\nN = " << size << "\nR = " << range << "\n[couplings]\n";
  if (couplings.kind == CouplingSpec::Kind::Uniform) {
    os << "uniform = " << format_number(couplings.uniform) << "\n";
  } else {
    for (std::size_t k = 0; k < couplings.bands.size(); ++k) {
      os << "band" << k + 1 << " =";
      for (std::size_t i = 0; i < couplings.bands[k].size(); ++i) {
        os << (i ? ", " : " ") << format_number(couplings.bands[k][i]);
      }
      os << "\n";
    }
  }
  os << "[field]\n";
  switch (field.kind) {
    case FieldSpec::Kind::Constant: os << "constant = " << format_number(field.value); break;
    case FieldSpec::Kind::Alternating:
      os << "alternating = " << format_number(field.value);
      break;
    case FieldSpec::Kind::Values:
      os << "values =";
      for (std::size_t i = 0; i < field.values.size(); ++i) {
        os << (i ? ", " : " ") << format_number(field.values[i]);
      }
      break;
  }
  os << "\n[potential]\n";
  if (potential.is_zero()) {
    os << "kind = zero\n";
  } else {
    os << "kind = cosine\na = " << format_number(potential.amplitude())
       << "\nb = " << format_number(potential.frequency()) << "\n";
  }
  os << "[ensemble]\nsigma = " << format_number(sigma) << "\n";
  if (mean_spin) os << "m = " << format_number(*mean_spin) << "\n";
  for (const auto& [name, sec] : extras_) {
    os << "[" << name << "]\n";
    for (const auto& [key, v] : sec) os << key << " = " << v << "\n";
  }
  return os.str();
}

std::string ModelConfig::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::optional<std::string> ModelConfig::extra(const std::string& section,
                                              const std::string& key) const {
  auto s = extras_.find(section);
  if (s == extras_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::optional<double> ModelConfig::extra_number(const std::string& section,
                                                const std::string& key) const {
  auto v = extra(section, key);
  if (!v) return std::nullopt;
  return to_number(section, {*v, 0});
}

std::optional<std::vector<double>> ModelConfig::extra_list(const std::string& section,
                                                           const std::string& key) const {
  auto v = extra(section, key);
  if (!v) return std::nullopt;
  return to_list(section, {*v, 0});
}

void ModelConfig::set_extra(const std::string& section, const std::string& key,
                            const std::string& value) {
  extras_[lower(section)][lower(key)] = value;
}

}  // namespace spinchain
