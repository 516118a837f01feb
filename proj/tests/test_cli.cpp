#include <gtest/gtest.h>

#include "specwalk/cli.hpp"
#include "specwalk/dataset.hpp"
#include "specwalk/remote.hpp"
#include "specwalk/results.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace specwalk;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "specwalk");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "specwalk_cli";
    fs::remove_all(dir_);
    ASSERT_EQ(cli({"gen-synthetic", "--classes", "3", "--per-class", "2", "--points", "48", "--seed", "4", "--out",
                   (dir_ / "data").string()}),
              0);
    std::ofstream cfg(dir_ / "fast.cfg");
    cfg << "rounds = 4\nmc_samples = 8\nband_cutoff = 8\nk_neighbors = 6\n";
  }

  static std::string path(const std::string& rel) { return (dir_ / rel).string(); }

  static fs::path dir_;
};

fs::path CliTest::dir_;

std::size_t count_lines(const std::string& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

}  // namespace

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({}), 1);
  EXPECT_EQ(cli({"attack"}), 1);
  EXPECT_EQ(cli({"frobnicate"}), 1);
  EXPECT_EQ(cli({"--help"}), 0);
  EXPECT_EQ(cli({"attack", "--manifest", path("data/manifest.json"), "--source-id", "0", "--oracle", "magic"}), 1);
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(cli({"attack", "--manifest", path("missing.json"), "--source-id", "0"}), 2);
  std::ofstream bad(path("bad.cfg"));
  bad << "rounds = 4\nroundz = 5\n";
  bad.close();
  EXPECT_EQ(cli({"attack", "--manifest", path("data/manifest.json"), "--source-id", "0", "--config",
                 path("bad.cfg")}),
            2);
}

TEST_F(CliTest, OracleErrors) {
  std::uint16_t port;
  {
    std::vector<Prototype> protos{{0, PointCloud(Points::Zero(1, 3))}, {1, PointCloud(Points::Ones(1, 3))}};
    OracleServer tmp(std::make_shared<NearestCentroidOracle>(protos), "tmp");
    port = tmp.port();
    tmp.stop();
  }
  EXPECT_EQ(cli({"attack", "--manifest", path("data/manifest.json"), "--source-id", "0", "--config", path("fast.cfg"),
                 "--oracle", "remote:127.0.0.1:" + std::to_string(port), "--out", path("remote.jsonl")}),
            3);
}

TEST_F(CliTest, BudgetExhausted) {
  EXPECT_EQ(cli({"attack", "--manifest", path("data/manifest.json"), "--source-id", "0", "--config", path("fast.cfg"),
                 "--budget", "3", "--out", path("budget.jsonl")}),
            4);
}

TEST_F(CliTest, AttackWritesRecordAndCloud) {
  const auto out = path("one/results.jsonl");
  fs::create_directories(path("one"));
  EXPECT_EQ(cli({"attack", "--manifest", path("data/manifest.json"), "--source-id", "0", "--config", path("fast.cfg"),
                 "--out", out}),
            0);
  const auto records = read_jsonl(out);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(fs::exists(path("one/" + records[0].source_id + ".adv.xyz")));
  EXPECT_EQ(records[0].rounds_executed, 4u);

  // Same inputs, same record.
  const auto out2 = path("one/again.jsonl");
  EXPECT_EQ(cli({"attack", "--manifest", path("data/manifest.json"), "--source-id", "0", "--config", path("fast.cfg"),
                 "--out", out2}),
            0);
  EXPECT_EQ(to_json_line(read_jsonl(out2)[0]), to_json_line(records[0]));
}

TEST_F(CliTest, BatchDefendAblate) {
  fs::create_directories(path("batch"));
  const auto out = path("batch/results.jsonl");
  EXPECT_EQ(cli({"attack-batch", "--manifest", path("data/manifest.json"), "--config", path("fast.cfg"), "--out", out,
                 "--workers", "2"}),
            0);
  EXPECT_EQ(count_lines(out), 6u);

  const auto report = path("defense.jsonl");
  EXPECT_EQ(cli({"defend-eval", "--manifest", path("data/manifest.json"), "--adv-dir", path("batch"), "--defense",
                 "srs", "--params", "ratio=0.3", "--out", report}),
            0);
  EXPECT_EQ(count_lines(report), 6u);
  EXPECT_EQ(cli({"defend-eval", "--manifest", path("data/manifest.json"), "--adv-dir", path("batch"), "--defense",
                 "sor", "--params", "k=2,alpha=1.1", "--out", path("sor.jsonl")}),
            0);
  EXPECT_EQ(cli({"defend-eval", "--manifest", path("data/manifest.json"), "--adv-dir", path("batch"), "--defense",
                 "srs", "--params", "ratio=1.5"}),
            1);

  const auto csv = path("rounds.csv");
  EXPECT_EQ(cli({"ablate", "--manifest", path("data/manifest.json"), "--config", path("fast.cfg"), "--sweep", "rounds",
                 "--values", "1", "2", "4", "--limit", "3", "--out", csv}),
            0);
  EXPECT_EQ(count_lines(csv), 4u);
  EXPECT_EQ(cli({"ablate", "--manifest", path("data/manifest.json"), "--config", path("fast.cfg"), "--sweep", "alpha",
                 "--values", "0.9:0.3", "--limit", "2", "--out", path("alpha.csv")}),
            0);
}
