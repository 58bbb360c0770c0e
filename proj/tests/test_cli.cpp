#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "domslam/graph_io.hpp"

namespace domslam {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const std::string name = ::testing::UnitTest::GetInstance()->current_test_info()->name();
    dir_ = fs::temp_directory_path() / ("domslam_cli_" + name);
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string command = std::string(DOMSLAM_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                                " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("simulate --experiment Z --out " + path("x")), 2);
  EXPECT_EQ(run("simulate --experiment B --size 13 --out " + path("x")), 2);
  EXPECT_EQ(run("simulate --experiment B --set bogus=1 --out " + path("x")), 2);
  EXPECT_EQ(run("solve --in /nonexistent/graph.txt --out " + path("e.txt")), 2);
  EXPECT_NE(read("stderr.txt").find("nonexistent"), std::string::npos);
}

TEST_F(Cli, SimulateSolveEvaluate) {
  ASSERT_EQ(run("simulate --experiment C --seed 3 --set steps=10 --out " + path("sim")), 0);
  ASSERT_TRUE(fs::exists(dir_ / "sim" / "graph.txt"));
  ASSERT_TRUE(fs::exists(dir_ / "sim" / "groundtruth.txt"));

  ASSERT_EQ(run("solve --in " + path("sim/graph.txt") + " --mode with-dom --out " + path("with.txt") + " --stats " +
                path("with.json")),
            0);
  ASSERT_EQ(run("solve --in " + path("sim/graph.txt") + " --mode without-dom --out " + path("without.txt")), 0);
  const FactorGraph with = read_graph_file(dir_ / "with.txt");
  const FactorGraph without = read_graph_file(dir_ / "without.txt");
  EXPECT_LT(without.variable_count(), with.variable_count());
  EXPECT_TRUE(without.motions().empty());
  const auto stats = nlohmann::json::parse(read("with.json"));
  EXPECT_EQ(stats.at("status"), "ok");
  EXPECT_GT(stats.at("iterations").get<int>(), 0);

  ASSERT_EQ(run("evaluate --estimate " + path("with.txt") + " --truth " + path("sim/groundtruth.txt") + " --out " +
                path("m.csv")),
            0);
  EXPECT_EQ(read("m.csv").substr(0, 34), "ATE,ARE,ASE,allRTE,allRRE,allRSE,p");
}

TEST_F(Cli, EvaluatingTruthAgainstItselfGivesZeros) {
  ASSERT_EQ(run("simulate --experiment D --set steps=6 --out " + path("sim")), 0);
  ASSERT_EQ(run("evaluate --estimate " + path("sim/groundtruth.txt") + " --truth " + path("sim/groundtruth.txt")), 0);
  std::istringstream csv(read("stdout.txt"));
  std::string header;
  std::string values;
  std::getline(csv, header);
  std::getline(csv, values);
  EXPECT_EQ(values.substr(0, 12), "0,0,0,0,0,0,");
}

TEST_F(Cli, NoiselessDataSolvesToZeroCost) {
  ASSERT_EQ(run("simulate --experiment B --set steps=10 --set noise_scale=0 --out " + path("sim")), 0);
  ASSERT_EQ(run("solve --in " + path("sim/graph.txt") + " --out " + path("e.txt") + " --stats " + path("s.json")),
            0);
  const auto stats = nlohmann::json::parse(read("s.json"));
  EXPECT_LT(stats.at("final_cost").get<double>(), 1e-12);
}

TEST_F(Cli, SolveWritesStatsWhenSingular) {
  {
    std::ofstream out(dir_ / "bad.txt");
    out << "VERTEX_POSE 0 0 0 0 0 0 0\nVERTEX_POINT 1 1 2 3\nFIX 0\n";
  }
  EXPECT_EQ(run("solve --in " + path("bad.txt") + " --out " + path("e.txt") + " --stats " + path("s.json")), 1);
  const auto stats = nlohmann::json::parse(read("s.json"));
  EXPECT_EQ(stats.at("status"), "failed");
  EXPECT_NE(stats.at("error").get<std::string>().find("landmark 1"), std::string::npos);
}

TEST_F(Cli, MalformedGraphNamesTheLine) {
  {
    std::ofstream out(dir_ / "bad.txt");
    out << "VERTEX_POSE 0 0 0 0 0 0 0\nEDGE_POINT 0 9 1 2 3 1 0 0 1 0 1\n";
  }
  EXPECT_EQ(run("solve --in " + path("bad.txt") + " --out " + path("e.txt")), 1);
  EXPECT_NE(read("stderr.txt").find("line 2"), std::string::npos);
}

TEST_F(Cli, CompareWritesOneBlockPerSeed) {
  ASSERT_EQ(run("compare --experiment B --seeds 1..2 --set steps=20 --out " + path("cmp")), 0);
  std::ifstream in(dir_ / "cmp" / "comparison.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 1u + 3u * 6u);  // two seeds and the median
  EXPECT_TRUE(fs::exists(dir_ / "cmp" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir_ / "cmp" / "seed_002" / "stats_without_dom.json"));
}

TEST_F(Cli, CompareHonoursOutputRootEnvironment) {
  const std::string command = "DOMSLAM_OUTPUT_ROOT=" + path("root") + " " + std::string(DOMSLAM_CLI) +
                              " compare --experiment C --seeds 1 --set steps=5 > /dev/null 2>&1";
  ASSERT_EQ(std::system(command.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "root"));
  std::size_t found = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir_ / "root")) {
    if (entry.path().filename() == "comparison.csv") ++found;
  }
  EXPECT_EQ(found, 1u);
}

}  // namespace
}  // namespace domslam
