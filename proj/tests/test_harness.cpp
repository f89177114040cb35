#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "catenoid/harness.hpp"

using namespace catenoid;
using namespace catenoid::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("catenoid_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig from_text(const std::string& text, const fs::path& base = ".") {
  std::istringstream is(text);
  return ExperimentConfig::parse(is, base);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string offending_key(const std::string& text) {
  try {
    from_text(text).validate();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

const Check* find_check(const RunReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST(Config, ParsesCommentsAndSpecialKeys) {
  const auto c = from_text("# header\nkind = demo   # trailing\nseed = 7\nout = /tmp/x\n\nmasses = 1e-2, 1e-3\n");
  EXPECT_EQ(c.kind, "demo");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.out_dir, fs::path("/tmp/x"));
  EXPECT_EQ(c.list("masses", {}), (std::vector<double>{1e-2, 1e-3}));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, LaterSetOverrides) {
  auto c = from_text("kind = construct\nneck = 4\n");
  c.set("neck", "6");
  EXPECT_EQ(c.number("neck", 0), 6.0);
}

TEST(Config, MalformedInputNamesTheKey) {
  EXPECT_EQ(offending_key("kind = balance\nneck = ten\n"), "neck");
  EXPECT_EQ(offending_key("kind = balance\nwidth = 3\n"), "width");
  EXPECT_EQ(offending_key("kind = balance\nmasses = 1e-3,,2\n"), "masses");
  EXPECT_EQ(offending_key("kind = balance\nmasses = 1e-3,-2\n"), "masses");
  EXPECT_EQ(offending_key("kind = teleport\n"), "kind");
  EXPECT_EQ(offending_key("neck = 3\n"), "kind");
  EXPECT_EQ(offending_key("kind = construct\nn_s = 1000\n"), "n_s");
  EXPECT_EQ(offending_key("kind = construct\nq = 0.5\n"), "q");
  EXPECT_EQ(offending_key("kind = construct\nneck = 1\n"), "neck");
  EXPECT_EQ(offending_key("kind = construct\nmetric = /no/such/file.metric\n"), "metric");
  EXPECT_EQ(offending_key("kind = construct\nmass = 50\n"), "metric");
  EXPECT_EQ(offending_key("kind = balance\nomega = /no/such/omega.csv\n"), "omega");
  EXPECT_EQ(offending_key("kind = solve-mode\nflavor = tangent\n"), "flavor");
  EXPECT_THROW(from_text("kind = demo\nseed = -3\n"), ConfigError);
  try {
    from_text("kind = demo\njust some words\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  try {
    from_text("kind = demo\nneck = 1\nneck = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "neck");
  }
}

TEST(Config, DimensionTwoRefusedWithVacuousMessage) {
  try {
    from_text("kind = construct\ndim = 2\n").validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "dim");
    EXPECT_NE(std::string(e.what()).find("vacuous"), std::string::npos);
  }
}

TEST(Run, ObstructionConstantReport) {
  const auto dir = scratch("oc");
  auto c = from_text("kind = obstruction-constant\n");
  c.out_dir = dir;
  const auto r = run(c);
  EXPECT_TRUE(r.ok());
  const Check* agree = find_check(r, "two_scheme_agreement");
  ASSERT_NE(agree, nullptr);
  EXPECT_EQ(agree->provenance, Provenance::derived);
  EXPECT_LE(agree->measured, 1e-8);
  const std::string rep = slurp(dir / "report.txt");
  EXPECT_NE(rep.find("value.A = 10.94087842801"), std::string::npos);
  EXPECT_NE(rep.find("check.two_scheme_agreement.tolerance = 1e-08"), std::string::npos);
  EXPECT_NE(rep.find("status = PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "obstruction_constant.csv"));
  EXPECT_EQ(slurp(dir / "integrand.csv").substr(0, 11), "v,integrand");
}

TEST(Run, FlatConstructionIsOneIteration) {
  const auto dir = scratch("flat");
  auto c = from_text("kind = construct\nmetric = flat\nn_s = 401\ns_max = 8\n");
  c.out_dir = dir;
  const auto r = run(c);
  EXPECT_TRUE(r.ok());
  const Check* it = find_check(r, "iterations");
  ASSERT_NE(it, nullptr);
  EXPECT_EQ(it->measured, 1.0);
  EXPECT_EQ(it->provenance, Provenance::trivial);
  EXPECT_EQ(slurp(dir / "omega.csv").substr(0, 24), "s,omega,domega,ddomega\n-");
}

TEST(Run, SchwarzschildConstructionFromMetricFile) {
  const auto dir = scratch("schw");
  {
    std::ofstream m(dir / "g.metric");
    m << "type = schwarzschild\nmass = 2e-3\nr0 = 2\ndim = 3\n";
  }
  auto c = from_text("kind = construct\nmetric = g.metric\nneck = 4\n", dir);
  c.out_dir = dir / "out";
  const auto r = run(c);
  EXPECT_TRUE(r.ok());
  for (const auto& ch : r.checks) EXPECT_TRUE(ch.pass) << ch.name;
  EXPECT_NE(find_check(r, "decay_rate"), nullptr);
  EXPECT_TRUE(fs::exists(c.out_dir / "newton_history.csv"));
}

TEST(Run, SplineMetricTable) {
  const auto dir = scratch("spline");
  {
    std::ofstream t(dir / "h.csv");
    t << "r,h\n";
    for (int i = 0; i <= 40; ++i) {
      const double r = 1.0 + 0.25 * i;
      t << r << ',' << 1e-3 / (r * r) << '\n';
    }
    std::ofstream m(dir / "g.metric");
    m << "type = spline\nr0 = 1\ntable = h.csv\ntail_power = 2\n";
  }
  const auto g = load_metric(from_text("kind = construct\nmetric = g.metric\n", dir), 3);
  EXPECT_EQ(g.kind, "spline");
  EXPECT_NEAR(g.h(2.0).h, 1e-3 / 4, 1e-6);
  EXPECT_NEAR(g.h(20.0).h, 1e-3 / 400, 1e-12);
}

TEST(Run, RescaleCheckAgrees) {
  const auto dir = scratch("rescale");
  auto c = from_text("kind = rescale-check\nmass = 1e-3\nr0 = 1\nneck = 4\n");
  c.out_dir = dir;
  const auto r = run(c);
  const Check* rt = find_check(r, "round_trip");
  ASSERT_NE(rt, nullptr);
  EXPECT_TRUE(rt->pass) << rt->measured;
}

TEST(Run, SolveModeManufacturedAndSeeded) {
  const auto a = scratch("mode_a"), b = scratch("mode_b"), d = scratch("mode_d");
  auto c = from_text("kind = solve-mode\nj = 2\nseed = 11\n");
  c.out_dir = a;
  const auto r = run(c);
  EXPECT_TRUE(r.ok());
  for (const auto& ch : r.checks) EXPECT_TRUE(ch.pass) << ch.name << " " << ch.measured;
  c.out_dir = b;
  run(c);
  EXPECT_EQ(slurp(a / "mode_solution.csv"), slurp(b / "mode_solution.csv"));
  c.seed = 12;
  c.out_dir = d;
  run(c);
  EXPECT_NE(slurp(a / "mode_solution.csv"), slurp(d / "mode_solution.csv"));
}

TEST(Run, SolveModeZero) {
  const auto dir = scratch("mode0");
  auto c = from_text("kind = solve-mode\nj = 0\n");
  c.out_dir = dir;
  const auto r = run(c);
  const Check* m = find_check(r, "manufactured_solution");
  ASSERT_NE(m, nullptr);
  EXPECT_TRUE(m->pass) << m->measured;
}

TEST(Run, ConstructionCsvIsByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto c = from_text("kind = construct\nn_s = 801\ns_max = 12\nmass = 1e-3\n");
  c.out_dir = a;
  run(c);
  c.out_dir = b;
  run(c);
  for (const char* f : {"omega.csv", "newton_history.csv"}) {
    const std::string x = slurp(a / f);
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
}

TEST(Run, BalanceSlopesAndZeroOmega) {
  const auto dir = scratch("balance");
  auto c = from_text("kind = balance\nneck = 10\nomega = zero\n");
  c.out_dir = dir;
  const auto r = run(c);
  EXPECT_TRUE(r.ok());
  const Check* s = find_check(r, "main_error_slope");
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->provenance, Provenance::paper);
}

TEST(Run, BalanceWithOmegaFile) {
  const auto dir = scratch("balance_file");
  {
    std::ofstream o(dir / "omega.csv");
    o << "v,omega,domega,ddomega\n" << std::setprecision(17);
    for (int i = 0; i <= 1600; ++i) {
      const double v = -40 + 0.05 * i, s = sech(v), t = std::tanh(v);
      o << v << ',' << 1e-3 * s << ',' << -1e-3 * s * t << ',' << 1e-3 * s * (2 * t * t - 1) << '\n';
    }
  }
  auto c = from_text("kind = balance\nmass = 1e-3\nomega = omega.csv\n", dir);
  c.out_dir = dir / "out";
  const auto r = run(c);
  EXPECT_TRUE(r.ok());
  // same profile in closed form
  auto d = from_text("kind = balance\nmass = 1e-3\n");
  d.out_dir = dir / "ref";
  run(d);
  auto row = [](const fs::path& p) {
    std::istringstream is(slurp(p));
    std::string line;
    std::getline(is, line);
    std::getline(is, line);
    std::stringstream ss(line);
    std::vector<double> x;
    std::string item;
    for (int k = 0; k < 7 && std::getline(ss, item, ','); ++k) x.push_back(std::stod(item));
    return x;
  };
  const auto x = row(dir / "out" / "balance.csv"), y = row(dir / "ref" / "balance.csv");
  EXPECT_EQ(x[1], y[1]);
  EXPECT_NEAR(x[3], y[3], 1e-5 * std::abs(y[3]));
  EXPECT_NEAR(x[4], y[4], 1e-5 * std::abs(y[4]));
  // the table carries Omega'' linearly at spacing 0.05
  EXPECT_NEAR(x[6], y[6], 1e-4 * std::abs(y[6]));
}

TEST(Run, ModuleErrorsCarryContext) {
  const auto dir = scratch("ctx");
  {
    std::ofstream o(dir / "bad.csv");
    o << "v,omega,domega,ddomega\n0,1,2\n";
  }
  auto c = from_text("kind = balance\nmass = 1e-3\nomega = bad.csv\n", dir);
  c.out_dir = dir / "out";
  try {
    run(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "omega");
  }
}

TEST(Report, EveryCheckCarriesToleranceAndProvenance) {
  const auto dir = scratch("prov");
  auto c = from_text("kind = construct\nmetric = flat\nn_s = 201\ns_max = 6\n");
  c.out_dir = dir;
  const auto r = run(c);
  std::ostringstream os;
  r.write(os);
  for (const auto& ch : r.checks) {
    EXPECT_NE(os.str().find("check." + ch.name + ".tolerance"), std::string::npos);
    EXPECT_NE(os.str().find("check." + ch.name + ".provenance = " + to_string(ch.provenance)), std::string::npos);
  }
  EXPECT_GE(r.wall_seconds, 0.0);
}
