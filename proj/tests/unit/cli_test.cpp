#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "pdm/io.hpp"

#ifdef PDM_CLI_PATH

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(PDM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("pdm_cli_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("train --variant ppo"), 2);
    EXPECT_EQ(run("train --seed abc"), 2);
    EXPECT_EQ(run("ingest --data /nonexistent/train_FD001.txt"), 2);
    EXPECT_EQ(run("train --config /nonexistent/config.json"), 2);
}

TEST(Cli, BadConfigExitsTwo) {
    const auto dir = scratch("badcfg");
    std::ofstream(dir / "c.json") << R"({"agent": {"batch": 0}})";
    EXPECT_EQ(run("train --config " + (dir / "c.json").string()), 2);
    std::ofstream(dir / "d.json") << R"({"agent": {"unknown_key": 1}})";
    EXPECT_EQ(run("train --config " + (dir / "d.json").string()), 2);
    std::filesystem::remove_all(dir);
}

TEST(Cli, MalformedDataExitsOne) {
    const auto dir = scratch("baddata");
    std::ofstream(dir / "train_FD001.txt") << "1 1 0.5 0.5\n";
    EXPECT_EQ(run("ingest --out " + dir.string() + " --data " + (dir / "train_FD001.txt").string()), 1);
    std::filesystem::remove_all(dir);
}

TEST(Cli, EvalWithoutCheckpointExitsTwo) {
    const auto dir = scratch("nockpt");
    EXPECT_EQ(run("eval --out " + dir.string()), 2);
    std::filesystem::remove_all(dir);
}

TEST(Cli, IngestTrainPredictEval) {
    const auto dir = scratch("pipeline");
    std::ofstream(dir / "small.json") << R"({
        "data": {"synthetic": {"n_engines": 8}},
        "agent": {"total_steps": 600, "warmup": 100, "eval_interval": 200},
        "env": {"train_engines": [2]}
    })";
    const std::string common = " --config " + (dir / "small.json").string() + " --out " + dir.string();
    ASSERT_EQ(run("ingest" + common), 0);
    EXPECT_TRUE(std::filesystem::exists(dir / "health.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "fits.csv"));
    ASSERT_EQ(run("train --variant ddqn_per --seed 3" + common), 0);
    const auto log = pdm::io::read_file(dir / "ddqn_per" / "train_log.csv");
    EXPECT_NE(log.find("step,episode,reward,episodic_return,epsilon,sigma_noise,b"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(dir / "ddqn_per" / "checkpoint.json"));
    ASSERT_EQ(run("predict --variant ddqn_per --seed 3" + common), 0);
    const auto pred = pdm::io::parse_csv(pdm::io::read_file(dir / "predictions.csv"));
    EXPECT_EQ(pred.rows.size(), 8u);
    EXPECT_EQ(pred.header[0], "engine");
    ASSERT_EQ(run("eval --variant ddqn_per --seed 3" + common), 0);
    EXPECT_TRUE(std::filesystem::exists(dir / "eval_summary.csv"));
    // Health CSV written by ingest is a valid --data input.
    ASSERT_EQ(run("predict --variant ddqn_per --seed 3 --data " + (dir / "health.csv").string() + common), 0);
    std::filesystem::remove_all(dir);
}

}  // namespace

#endif
