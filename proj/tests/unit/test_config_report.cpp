#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "spinchain/config.hpp"
#include "spinchain/experiments.hpp"
#include "spinchain/report.hpp"

using namespace spinchain;
using namespace testing;

namespace {

const char* const kModel = R"(# chain
[lattice]
N = 6
R = 1

[couplings]
uniform = 0.25

[field]
alternating = 0.1

[potential]
kind = cosine
a = 1
b = 2

[ensemble]
m = 0.05

[gce-decay]
size = 12
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parse and build") {
    const auto c = ModelConfig::parse(kModel);
    CHECK(c.size == 6);
    CHECK(c.mean_spin == 0.05);
    const auto spec = c.build();
    CHECK(spec.field == std::vector<double>{0.1, -0.1, 0.1, -0.1, 0.1, -0.1});
    CHECK(spec.interaction(2, 3) == 0.25);
    CHECK(spec.potential.kind() == PotentialKind::Cosine);
    CHECK(c.build(10).field.size() == 10);
    CHECK(c.extra_number("gce-decay", "size") == 12.0);
    CHECK_FALSE(c.extra("gce-decay", "missing").has_value());
    CHECK(c.gaussian().potential.kind() == PotentialKind::Zero);
  }

  TEST_CASE("digest ignores formatting") {
    std::string spaced = kModel;
    spaced.insert(0, "\n\n# another comment\n");
    for (auto pos = spaced.find(" = "); pos != std::string::npos; pos = spaced.find(" = ", pos)) {
      spaced.replace(pos, 3, "=");
    }
    CHECK(ModelConfig::parse(kModel).digest() == ModelConfig::parse(spaced).digest());
    auto other = ModelConfig::parse(kModel);
    other.couplings.uniform = 0.2;
    CHECK(other.digest() != ModelConfig::parse(kModel).digest());
    CHECK(ModelConfig::parse(kModel).digest().size() == 16);
  }

  TEST_CASE("parse errors carry the line number") {
    std::string broken = kModel;
    broken.replace(broken.find("0.25"), 4, "abc");
    try {
      ModelConfig::parse(broken, "model.conf");
      FAIL("expected ConfigParse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigParse);
      CHECK(e.first_index() == 7);
      CHECK(std::string(e.what()).find("model.conf:7") != std::string::npos);
    }
    check_error([] { ModelConfig::parse("[lattice]\nN = 4\n"); }, ErrorCode::ConfigParse);
    check_error([] { ModelConfig::load("/nonexistent/model.conf"); }, ErrorCode::Io);
  }

  TEST_CASE("shipped configurations validate") {
    for (const char* name : {"default.conf", "gaussian.conf", "quick.conf"}) {
      const auto path = std::filesystem::path(SPINCHAIN_SOURCE_DIR) / "configs" / name;
      const auto c = ModelConfig::load(path);
      CHECK(validate_model(c.build()).passed());
    }
    CHECK(validate_model(ModelConfig::default_model().build()).passed());
  }
}

TEST_SUITE("report") {
  TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  }

  TEST_CASE("csv") {
    Table t;
    t.columns = {"n", "value", "leg"};
    t.add({std::int64_t{8}, 0.1, std::string("transfer")});
    t.add({std::int64_t{16}, -2.5e-12, std::string("gaussian")});
    const auto csv = to_csv(t);
    CHECK(csv == "n,value,leg\n8,0.10000000000000001,transfer\n16,-2.4999999999999998e-12,gaussian\n");
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(to_csv(t) == csv);
  }

  TEST_CASE("verdict bounds") {
    ExperimentReport r;
    CHECK(r.check("a", "", 1.0, at_least(1.0), std::nullopt).passed);
    CHECK_FALSE(r.check("b", "", 1.0, above(1.0), std::nullopt).passed);
    CHECK(r.check("c", "", 1.0, std::nullopt, at_most(1.0)).passed);
    CHECK_FALSE(r.check("d", "", 1.0, std::nullopt, below(1.0)).passed);
    CHECK_FALSE(r.check("e", "", std::nan(""), at_least(0.0), std::nullopt).passed);
    CHECK_FALSE(r.passed());
    CHECK(r.verdict("c").passed);
    check_error([&] { (void)r.verdict("zzz"); }, ErrorCode::InvalidArgument);
  }

  TEST_CASE("json round trip through files") {
    ExperimentReport r;
    r.id = "unit-report";
    r.claim = "round trip";
    r.table.columns = {"x"};
    r.table.add({1.5});
    r.fit("slope", -1.0);
    r.check("slope", "slope in range", -1.0, at_least(-1.3), at_most(-0.7));
    r.check("residual", "small", 1e-12, std::nullopt, below(1e-9));
    const auto dir = std::filesystem::temp_directory_path() / "spinchain_report_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_report(r, dir);
    CHECK(slurp(dir / "unit-report.csv") == "x\n1.5\n");
    const auto summary = read_report_summary(dir / "unit-report.json");
    CHECK(summary.id == "unit-report");
    CHECK(summary.passed);
    REQUIRE(summary.verdicts.size() == 2);
    CHECK(summary.verdicts[0].lower->value == -1.3);
    CHECK(summary.verdicts[1].upper->strict);
    CHECK(summary.verdicts[1].value == 1e-12);
    CHECK(r.fitted_value("slope") == -1.0);
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("registry") {
    CHECK(experiment_registry().size() == 11);
    CHECK(find_experiment("exp-gce-decay") != nullptr);
    CHECK(find_experiment("nope") == nullptr);
  }

  TEST_CASE("variance band runs and passes") {
    ExperimentContext ctx;
    ctx.config.set_extra("variance-band", "sizes", "8, 16, 32");
    const auto r = exp_variance_band(ctx);
    CHECK(r.id == "exp-variance-band");
    CHECK(r.passed());
    CHECK_FALSE(r.table.rows.empty());
    CHECK(r.model_digest == ctx.config.digest());
  }

  TEST_CASE("bad knob is a config error") {
    ExperimentContext ctx;
    ctx.config.set_extra("variance-band", "sizes", "8, x");
    check_error([&] { exp_variance_band(ctx); }, ErrorCode::ConfigParse);
  }
}
