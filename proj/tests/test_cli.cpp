#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "phidiss/config.hpp"
#include "phidiss/field.hpp"

namespace fs = std::filesystem;
using namespace phidiss;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("phidiss_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  // exit status of the CLI; stdout goes to `stdout_file`
  int run(const std::string& args) {
    const std::string cmd = std::string(PHIDISS_CLI) + " " + args + " > " + (dir_ / "stdout").string() + " 2> " +
                            (dir_ / "stderr").string();
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::string out() { return read(dir_ / "stdout"); }
  std::string err() { return read(dir_ / "stderr"); }

  fs::path config(const std::string& p, const std::string& domain, const std::string& field) {
    return write("run.ini", "[phi]\nfamily = power\np = " + p + "\n\n[domain]\n" + domain + "\n\n[field]\n" + field +
                                "\n");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, CheckIdentityIsStrict) {
  const auto c = config("4", "n = 1\ngrid = 8", "A1 = 1 0; 0 1");
  EXPECT_EQ(run("check --config " + c.string()), 0);
  EXPECT_NE(out().find("status = StrictlyDissipative"), std::string::npos);
  const auto text = out();
  const auto pos = text.find("margin = ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NEAR(std::stod(text.substr(pos + 9)), 0.75, 1e-12);
}

TEST_F(Cli, CheckAnisotropicIsViolated) {
  const auto c = config("4", "n = 1\ngrid = 8", "A1 = 1 0; 0 16");
  EXPECT_EQ(run("check --config " + c.string()), 2);
  EXPECT_NE(out().find("witness.lambda = "), std::string::npos);
}

TEST_F(Cli, CheckIndefiniteQuadratic) {
  const auto c = config("2", "n = 1\ngrid = 4", "A1 = 1 0; 0 -0.5");
  EXPECT_EQ(run("check --config " + c.string()), 2);
}

TEST_F(Cli, CheckBoundaryAndInconclusiveCodes) {
  auto c = config("2", "n = 1\ngrid = 4", "A1 = 1 0; 0 0");
  EXPECT_EQ(run("check --config " + c.string()), 1);
  c = config("2", "n = 1\ngrid = 4", "A1 = 1 0; 0 -5e-8");
  EXPECT_EQ(run("check --config " + c.string()), 3);
}

TEST_F(Cli, ComplexInlineEntries) {
  const auto c = config("3", "n = 2\nbounds = 0 1; -1 1\ngrid = 3", "A1 = 2 (0,0.5); (0,-0.5) 2\nA2 = 1 0; 0 1");
  EXPECT_EQ(run("check --config " + c.string()), 0);
}

TEST_F(Cli, ConfigErrorsExit64) {
  EXPECT_EQ(run("check --config " + (dir_ / "missing.ini").string()), 64);
  auto c = config("4", "n = 1", "A1 = 1 zero; 0 1");
  EXPECT_EQ(run("check --config " + c.string()), 64);
  EXPECT_NE(err().find("not a number"), std::string::npos);
  c = write("nop.ini", "[phi]\nfamily = power\n[domain]\nn = 1\n[field]\nA1 = 1\n");
  EXPECT_EQ(run("check --config " + c.string()), 64);
  EXPECT_NE(err().find("phi.p"), std::string::npos);
  c = config("0.5", "n = 1", "A1 = 1");
  EXPECT_EQ(run("check --config " + c.string()), 64);
  EXPECT_EQ(run("check"), 64);
  EXPECT_EQ(run("frobnicate --config x"), 64);
}

TEST_F(Cli, LambdaTable) {
  const auto c = config("4", "n = 1", "A1 = 1");
  EXPECT_EQ(run("lambda --config " + c.string() + " --grid 7"), 0);
  std::istringstream is(out());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,Lambda,Lambda_sq");
  int rows = 0;
  while (std::getline(is, line) && line[0] != '#') {
    ++rows;
    EXPECT_NE(line.find(",-0.5,0.25"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 7);
  EXPECT_EQ(line, "# lambda_inf_sq=0.25 cond_L=true");

  const auto c2 = config("2", "n = 1", "A1 = 1");
  EXPECT_EQ(run("lambda --config " + c2.string() + " --grid 3"), 0);
  EXPECT_NE(out().find("1,0,0\n"), std::string::npos);
}

TEST_F(Cli, LambdaTabulatedExponential) {
  std::ostringstream grid;
  grid.precision(17);
  grid << "s,phi,dphi\n";
  for (int i = 0; i <= 360; ++i) {
    const double s = std::pow(10.0, -7.0 + i * (std::log10(60.0) + 7.0) / 360.0);
    grid << s << ',' << std::exp(s) << ',' << std::exp(s) << '\n';
  }
  write("exp.csv", grid.str());
  const auto c = write("tab.ini",
                       "[phi]\nfamily = tabulated\ngrid_path = exp.csv\nr = 0\ns0 = 1e-3\n"
                       "[domain]\nn = 1\n[field]\nA1 = 1\n");
  EXPECT_EQ(run("lambda --config " + c.string() + " --grid 5 --tmin 1e-3 --tmax 1e12"), 0);
  EXPECT_NE(out().find("cond_L=false"), std::string::npos) << out() << err();
}

TEST_F(Cli, FalsifyOutcomes) {
  auto c = config("4", "n = 1\ngrid = 4", "A1 = 1 0; 0 16");
  const auto csv = dir_ / "ramp.csv";
  EXPECT_EQ(run("falsify --config " + c.string() + " --csv " + csv.string()), 2);
  EXPECT_NE(out().find("result = counterexample"), std::string::npos);
  EXPECT_NE(out().find("lhs = -"), std::string::npos);
  EXPECT_EQ(read(csv).rfind("x1,re1,im1,re2,im2\n", 0), 0u);

  EXPECT_EQ(run("falsify --config " + c.string() + " --budget 0"), 0);
  EXPECT_NE(out().find("none within budget"), std::string::npos);

  c = config("4", "n = 1\ngrid = 4", "A1 = 1 0; 0 1");
  EXPECT_EQ(run("falsify --config " + c.string()), 0);
}

TEST_F(Cli, FalsifyWithoutWitness) {
  BlockTensor t(1, 1);
  t(0, 0) = CMatrix::identity(1);
  save_field((dir_ / "tensor.csv").string(), CoefficientField::constant_tensor(t));
  const auto c = config("4", "n = 1\ngrid = 4", "path = tensor.csv");
  EXPECT_EQ(run("falsify --config " + c.string()), 65);
  // an explicit witness makes it runnable
  const auto w = write("w.ini", read(c) + "\n[witness]\nx = 0.5\nh = 1\nlambda = 1\nomega = 1\n");
  EXPECT_EQ(run("falsify --config " + w.string()), 0);
}

TEST_F(Cli, ReportMarginMapCrossesAtBoundary) {
  // diag(1, 1 + x^2) on [0, 4]: the criterion fails once 1 + x^2 > 7 + 4 sqrt(3)
  const std::size_t pts = 41;
  const auto box = DomainBox::cube(1, 0.0, 4.0, pts);
  std::vector<std::vector<CMatrix>> values;
  for (double x : box.axis_points(0)) {
    const CVector d{cplx(1.0, 0.0), cplx(1.0 + x * x, 0.0)};
    values.push_back({CMatrix::diagonal(std::span<const cplx>(d))});
  }
  save_field((dir_ / "grid.csv").string(), CoefficientField::grid_per_h(box, values));
  const auto c = config("4", "n = 1\nbounds = 0 4\ngrid = 41", "path = grid.csv");
  const auto csv = dir_ / "map.csv";
  EXPECT_EQ(run("report --config " + c.string() + " --csv " + csv.string()), 0);
  EXPECT_NE(out().find("weak.holds = false"), std::string::npos);

  std::istringstream is(read(csv));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "x1,margin_h1,margin_min");
  const double root = std::sqrt(6.0 + 4.0 * std::sqrt(3.0));
  double prev_x = -1.0, prev_m = 0.0;
  int crossings = 0, rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    const auto comma = line.find(',');
    const double x = std::stod(line.substr(0, comma));
    const double m = std::stod(line.substr(line.rfind(',') + 1));
    if (rows > 1 && (prev_m > 0) != (m > 0)) {
      ++crossings;
      EXPECT_LE(prev_x, root);
      EXPECT_GE(x, root);
    }
    prev_x = x;
    prev_m = m;
  }
  EXPECT_EQ(rows, 41);
  EXPECT_EQ(crossings, 1);
}

TEST_F(Cli, ReportSingleAxisColumns) {
  const auto c = config("4", "n = 1\ngrid = 5", "A1 = 1 0; 0 1");
  EXPECT_EQ(run("report --config " + c.string()), 0);
  const auto text = out();
  EXPECT_NE(text.find("strong.holds = true"), std::string::npos);
  EXPECT_NE(text.find("x1,margin_h1,margin_min\n"), std::string::npos);
  // constant field: identical margins on every row
  EXPECT_NE(text.find("0.25,0.7499999999999996,0.7499999999999996"), std::string::npos);
}

TEST_F(Cli, RecordsAreDeterministic) {
  const auto c = config("3", "n = 2\ngrid = 4", "A1 = 1 (0.3,0.1); (0.2,0) 5\nA2 = 2 0; 0 1");
  const auto a = dir_ / "a.txt", b = dir_ / "b.txt";
  run("check --config " + c.string() + " --seed 7 --out " + a.string());
  run("check --config " + c.string() + " --seed 7 --out " + b.string());
  EXPECT_FALSE(read(a).empty());
  EXPECT_EQ(read(a), read(b));
  run("report --config " + c.string() + " --out " + a.string());
  run("report --config " + c.string() + " --out " + b.string());
  EXPECT_EQ(read(a), read(b));
}

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ErrorKind parse_error_kind(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvariantViolation;  // no throw
}

}  // namespace

TEST(Config, ComplexMatrixEntries) {
  const auto cfg = parse("[phi]\np = 3\n[domain]\nn = 1\n[field]\nA1 = 1 (0,2); (0,-2) (3,0)\n");
  const auto a = cfg.field.constant_matrices().at(0);
  EXPECT_EQ(a(0, 1), cplx(0.0, 2.0));
  EXPECT_EQ(a(1, 0), cplx(0.0, -2.0));
  EXPECT_EQ(a(1, 1), cplx(3.0, 0.0));
  EXPECT_DOUBLE_EQ(cfg.phi.p(), 3.0);
}

TEST(Config, UnboundedAxes) {
  const auto cfg = parse("[phi]\np = 4\n[domain]\nn = 2\nbounds = -inf inf; 0 2\ngrid = 5 7\n[field]\nA1 = 1\nA2 = 2\n");
  const auto& ax = cfg.domain.axes();
  EXPECT_TRUE(ax[0].lo_unbounded);
  EXPECT_TRUE(ax[0].hi_unbounded);
  EXPECT_FALSE(ax[1].lo_unbounded);
  EXPECT_DOUBLE_EQ(ax[1].hi, 2.0);
  EXPECT_EQ(ax[0].points, 5u);
  EXPECT_EQ(ax[1].points, 7u);
}

TEST(Config, Witness) {
  const auto cfg = parse(
      "[phi]\np = 4\n[domain]\nn = 2\n[field]\nA1 = 1 0; 0 1\nA2 = 1 0; 0 1\n"
      "[witness]\nx = 0.25 0.5\nh = 2\nlambda = 1 (0,1)\nomega = 0 1\n");
  ASSERT_TRUE(cfg.witness);
  EXPECT_EQ(cfg.witness->h, 1u);
  EXPECT_EQ(cfg.witness->lambda[1], cplx(0.0, 1.0));
  EXPECT_DOUBLE_EQ(cfg.witness->x[0], 0.25);
}

TEST(Config, Rejections) {
  const std::string head = "[phi]\np = 4\n[domain]\nn = 1\n[field]\n";
  EXPECT_EQ(parse_error_kind(head + "A1 = 1 x; 0 1\n"), ErrorKind::Config);
  EXPECT_EQ(parse_error_kind(head + "A1 = 1 0 0; 0 1\n"), ErrorKind::Config);
  EXPECT_EQ(parse_error_kind(head + "A1 = (1,0\n"), ErrorKind::Config);
  EXPECT_EQ(parse_error_kind(head), ErrorKind::Config);
  EXPECT_EQ(parse_error_kind("[phi]\nfamily = cubic\n[domain]\nn = 1\n[field]\nA1 = 1\n"), ErrorKind::Config);
  EXPECT_EQ(parse_error_kind("[phi]\np = 4\n[domain]\nn = 2\nbounds = 0 1\n[field]\nA1 = 1\nA2 = 1\n[witness]\nx = 0\nh = 3\n"
                             "lambda = 1\nomega = 1\n"),
            ErrorKind::Config);
  EXPECT_EQ(parse_error_kind("[phi]\np = 4\n[domain]\nn = 1\nbounds = inf 1\n[field]\nA1 = 1\n"), ErrorKind::Config);
  EXPECT_EQ(parse_error_kind("[phi]\np = 4\n[domain]\nn = 1\n[field]\npath = /nonexistent/field.csv\n"), ErrorKind::Config);
}
