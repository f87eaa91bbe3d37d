// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/commands.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace fs = std::filesystem;
using sfcloops::cli::run_cli;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sfcloops");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<nlohmann::json> json_lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sfcloops_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    ::unsetenv("SFC_LOOPS_WORKERS");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, JoinFixture) {
  const auto in = write("tri.csv", "0,0\n0,0.5\n10,10\n");
  const auto r = cli({"join", in, "--eps", "1", "-o", path("pairs.csv")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("pairs.csv")), "0,1,0.5\n");
  const auto reports = json_lines(r.out);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0]["schema"], "sfcloops.run/1");
  EXPECT_EQ(reports[0]["parameters"]["pairs"], 1);
  EXPECT_EQ(reports[0]["verification"], "skipped");
}

TEST_F(Cli, JoinToStdoutSendsReportToStderr) {
  const auto in = write("tri.csv", "0,0\n0,0.5\n10,10\n");
  const auto r = cli({"join", in, "--eps", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0,1,0.5\n");
  EXPECT_EQ(json_lines(r.err).size(), 1u);
}

TEST_F(Cli, JoinVerifyAndWorkerIndependence) {
  ASSERT_EQ(cli({"gen", "--n", "1500", "--d", "4", "--seed", "11", "-o", path("u.csv")}).code, 0);
  for (const char* curve : {"hilbert", "zorder", "peano"}) {
    const auto one = cli({"join", path("u.csv"), "--eps", "0.15", "--curve", curve, "--workers", "1", "--verify",
                          "-o", path("w1.csv"), "--report", path("rep.jsonl")});
    const auto four = cli({"join", path("u.csv"), "--eps", "0.15", "--curve", curve, "--workers", "4", "--verify",
                           "--block-bits", "5", "-o", path("w4.csv"), "--report", path("rep.jsonl")});
    EXPECT_EQ(one.code, 0) << one.err;
    EXPECT_EQ(four.code, 0) << four.err;
    EXPECT_FALSE(slurp(path("w1.csv")).empty());
    EXPECT_EQ(slurp(path("w1.csv")), slurp(path("w4.csv")));
  }
  const auto reports = json_lines(slurp(path("rep.jsonl")));
  ASSERT_EQ(reports.size(), 6u);
  for (const auto& r : reports) EXPECT_EQ(r["verification"], "verified-exact");
}

TEST_F(Cli, GenIsByteDeterministic) {
  ASSERT_EQ(cli({"gen", "--n", "3", "--d", "2", "--seed", "1", "-o", path("a.csv")}).code, 0);
  ASSERT_EQ(cli({"gen", "--n", "3", "--d", "2", "--seed", "1", "-o", path("b.csv")}).code, 0);
  const auto a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
  const auto h = cli({"gen", "--n", "2", "--d", "3", "--header"});
  EXPECT_EQ(h.out.substr(0, 9), "x0,x1,x2\n");
  const auto sig = cli({"gen", "--generator", "signal", "--n", "4", "--d", "6", "--periods", "3,6", "--stride", "6"});
  EXPECT_EQ(sig.code, 0);
  std::istringstream rows(sig.out);
  std::string first, line;
  std::getline(rows, first);
  while (std::getline(rows, line)) EXPECT_EQ(line, first);
}

TEST_F(Cli, KMeansExamples) {
  write("mean.csv", "0,0\n2,0\n2,4\n0,4\n");
  auto r = cli({"kmeans", path("mean.csv"), "--k", "1", "-o", path("m1.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto model = nlohmann::json::parse(slurp(path("m1.json")));
  EXPECT_EQ(model["centroids"][0], (std::vector<double>{1.0, 2.0}));
  EXPECT_TRUE(model["converged"].get<bool>());

  write("six.csv", "0,0\n0,0\n0,0\n10,10\n10,10\n10,10\n");
  r = cli({"kmeans", path("six.csv"), "--k", "2", "--seed", "4", "--verify", "-o", path("m2.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  model = nlohmann::json::parse(slurp(path("m2.json")));
  auto c = model["centroids"].get<std::vector<std::vector<double>>>();
  std::sort(c.begin(), c.end());
  EXPECT_EQ(c, (std::vector<std::vector<double>>{{0.0, 0.0}, {10.0, 10.0}}));
  EXPECT_EQ(json_lines(r.out)[0]["verification"], "verified-exact");

  ASSERT_EQ(cli({"gen", "--generator", "mixture", "--n", "3000", "--d", "8", "--clusters", "5", "--sigma", "0.1",
                 "--seed", "2", "-o", path("mix.csv")})
                .code,
            0);
  r = cli({"kmeans", path("mix.csv"), "--k", "5", "--workers", "3", "--curve", "zorder", "--verify", "-o",
           path("m3.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(cli({"kmeans", path("six.csv"), "--k", "7"}).code, 2);
}

TEST_F(Cli, MatmulExamples) {
  auto r = cli({"matmul", "--size", "64", "--verify"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rep = json_lines(r.out).at(0);
  EXPECT_EQ(rep["verification"], "verified-tolerance");
  EXPECT_LE(rep["parameters"]["max_relative_error"].get<double>(), 1e-12);
  r = cli({"matmul", "--sizes", "30,17,41", "--curve-dims", "3", "--block-bits", "3", "--workers", "2", "--verify"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(cli({"matmul", "--curve", "peano", "--curve-dims", "3"}).code, 2);
  EXPECT_EQ(cli({"matmul", "--curve-dims", "4"}).code, 2);
}

TEST_F(Cli, CacheSim) {
  const auto r = cli({"cachesim", "--pattern", "selfjoin,kmeans,matmul3", "--curves", "hilbert,rowmajor", "--configs",
                      "16x8,64x64", "--n", "256", "--blocks", "4", "--block", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "curve,pattern,capacity,line,accesses,misses");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3 * 2 * 2);
  EXPECT_EQ(cli({"cachesim", "--configs", "64"}).code, 2);
  EXPECT_EQ(cli({"cachesim", "--configs", "64x3"}).code, 2);
}

TEST_F(Cli, TraverseShapesAndMonotone) {
  for (const char* shape : {"full", "tri", "band:0", "band:3"}) {
    const auto r = cli({"traverse", "--bounds", "17,13", "--shape", shape, "--workers", "4", "--granule-bits", "3",
                        "--monotone-dims", "0", "--verify"});
    EXPECT_EQ(r.code, 0) << shape << r.err;
    EXPECT_EQ(json_lines(r.out).at(0)["verification"], "verified-exact");
  }
  auto r = cli({"traverse", "--bounds", "9,9,9", "--curve", "zorder", "--workers", "8", "--verify"});
  EXPECT_EQ(r.code, 0) << r.err;
  r = cli({"traverse", "--bounds", "64,64", "--workers", "4", "--granule-bits", "4", "--simulate", "index"});
  ASSERT_EQ(r.code, 0);
  const auto sched = json_lines(r.out).at(0)["schedule"];
  EXPECT_LE(sched["makespan"].get<double>(), 1.2 * sched["ideal"].get<double>());
  EXPECT_EQ(cli({"traverse", "--shape", "oval"}).code, 2);
  EXPECT_EQ(cli({"traverse", "--bounds", "4,4,4", "--shape", "tri"}).code, 2);
  EXPECT_EQ(cli({"traverse", "--monotone-dims", "5"}).code, 2);
}

TEST_F(Cli, BenchSuite) {
  const auto suite = write("suite.json", R"({
    "dataset": {"generator": "uniform", "n": 3000, "d": 8, "seed": 1},
    "runs": [
      {"name": "naive", "kernel": "join", "eps": 0.45, "naive": true, "baseline": true},
      {"name": "sfc-w1", "kernel": "join", "eps": 0.45, "workers": 1, "verify": true},
      {"name": "sfc-w2", "kernel": "join", "eps": 0.45, "workers": 2},
      {"name": "sfc-w4", "kernel": "join", "eps": 0.45, "workers": 4},
      {"name": "km", "kernel": "kmeans", "k": 4, "verify": true, "baseline": true},
      {"name": "mm", "kernel": "matmul", "size": 48, "verify": true},
      {"name": "mm-naive", "kernel": "matmul", "size": 48, "naive": true, "baseline": true},
      {"name": "km-2", "kernel": "kmeans", "k": 4, "workers": 2}
    ]})");
  const auto r = cli({"bench", suite});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = json_lines(r.out);
  ASSERT_EQ(lines.size(), 8u);
  for (const auto& l : lines) {
    EXPECT_EQ(l["schema"], "sfcloops.run/1");
    EXPECT_TRUE(l.contains("speedup"));
    EXPECT_TRUE(l.contains("wall_seconds"));
    EXPECT_TRUE(l.contains("throughput"));
  }
  EXPECT_DOUBLE_EQ(lines[0]["speedup"].get<double>(), 1.0);
  EXPECT_EQ(lines[1]["verification"], "verified-exact");
  EXPECT_EQ(lines[1]["parameters"]["pairs"], lines[0]["parameters"]["pairs"]);
  EXPECT_EQ(lines[5]["verification"], "verified-tolerance");
  // speedups compare against the baseline of the same kernel
  EXPECT_DOUBLE_EQ(lines[4]["speedup"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(lines[6]["speedup"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(lines[5]["speedup"].get<double>(),
                   lines[6]["wall_seconds"].get<double>() / lines[5]["wall_seconds"].get<double>());
  EXPECT_DOUBLE_EQ(lines[7]["speedup"].get<double>(),
                   lines[4]["wall_seconds"].get<double>() / lines[7]["wall_seconds"].get<double>());

  const auto other_kernel = write("other.json", R"({"dataset": {"n": 200, "d": 2},
    "runs": [{"name": "j", "kernel": "join", "eps": 0.1, "baseline": true}, {"name": "m", "kernel": "matmul", "size": 8}]})");
  const auto r3 = cli({"bench", other_kernel});
  ASSERT_EQ(r3.code, 0) << r3.err;
  EXPECT_FALSE(json_lines(r3.out).at(1).contains("speedup"));

  const auto no_base = write("nobase.json", R"({"dataset": {"n": 200, "d": 2},
    "runs": [{"name": "a", "kernel": "join", "eps": 0.1}]})");
  const auto r2 = cli({"bench", no_base});
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_FALSE(json_lines(r2.out).at(0).contains("speedup"));

  EXPECT_EQ(cli({"bench", write("bad.json", "{not json")}).code, 2);
  EXPECT_EQ(cli({"bench", write("bad2.json", R"({"runs": [{"kernel": "sort"}]})")}).code, 2);
}

TEST_F(Cli, WorkersFromEnvironment) {
  write("tri.csv", "0,0\n0,0.5\n10,10\n");
  ::setenv("SFC_LOOPS_WORKERS", "3", 1);
  auto r = cli({"join", path("tri.csv"), "--eps", "1", "-o", path("p.csv")});
  EXPECT_EQ(json_lines(r.out).at(0)["workers"], 3);
  r = cli({"join", path("tri.csv"), "--eps", "1", "--workers", "2", "-o", path("p.csv")});
  EXPECT_EQ(json_lines(r.out).at(0)["workers"], 2);
  ::setenv("SFC_LOOPS_WORKERS", "0", 1);
  EXPECT_EQ(cli({"join", path("tri.csv"), "--eps", "1"}).code, 2);
  ::unsetenv("SFC_LOOPS_WORKERS");
}

TEST_F(Cli, UsageAndParseErrors) {
  write("tri.csv", "0,0\n0,0.5\n10,10\n");
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"join", path("tri.csv")}).code, 2);
  EXPECT_EQ(cli({"join", path("tri.csv"), "--eps", "0"}).code, 2);
  EXPECT_EQ(cli({"join", path("tri.csv"), "--eps", "1", "--curve", "moore"}).code, 2);
  EXPECT_EQ(cli({"join", path("missing.csv"), "--eps", "1"}).code, 2);
  write("bad.csv", "1,2\n3,4\n5,nan\n");
  const auto r = cli({"join", path("bad.csv"), "--eps", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.csv:3:"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"join", path("tri.csv"), "--eps", "1", "-o", path("no/such/dir/p.csv")}).code, 2);
}
