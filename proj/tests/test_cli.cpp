#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "evq/data.hpp"

namespace fs = std::filesystem;

namespace {

// Small, fast run: two synthetic houses, a narrow network, short training.
constexpr const char* kConfig = R"({
  "data": {"synth": {"seed": 3, "houses": 2, "days": 12}},
  "eligibility": {"min_days_per_house": 1},
  "learner": {"hidden": [16], "batch_size": 16, "learn_start": 64, "epsilon_decay_steps": 500,
              "target_sync_every": 50, "epochs": 2, "seed": 4},
  "split": {"test_fraction": 0.25}
})";

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("evq_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        config_ = (dir_ / "run.json").string();
        std::ofstream(config_) << kConfig;
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(EVQ_BINARY) + " " + args + " >" + (dir_ / "stdout.txt").string() +
                                " 2>" + (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return status == 0 ? 0 : 1;
    }
    std::string cfg() const { return "--config " + config_ + " "; }
    std::string out(const std::string& sub) const { return "--out " + (dir_ / sub).string() + " "; }
    fs::path path(const std::string& rel) const { return dir_ / rel; }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    static std::string first_line(const fs::path& p) {
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);
        return line;
    }

    fs::path dir_;
    std::string config_;
};

} // namespace

TEST_F(Cli, SynthDaysTimesHousesEpisodes) {
    ASSERT_EQ(run("synth --days 10 --houses 2 " + out("a")), 0);
    const auto eps = evq::load_episodes(path("a/dataset.csv").string()).episodes;
    EXPECT_EQ(eps.size(), 20u);
    EXPECT_EQ(evq::by_house(eps).size(), 2u);
}

TEST_F(Cli, SynthIsByteDeterministic) {
    ASSERT_EQ(run("synth --days 5 --houses 2 --seed 9 " + out("a")), 0);
    ASSERT_EQ(run("synth --days 5 --houses 2 --seed 9 " + out("b")), 0);
    ASSERT_EQ(run("synth --days 5 --houses 2 --seed 10 " + out("c")), 0);
    EXPECT_EQ(slurp(path("a/dataset.csv")), slurp(path("b/dataset.csv")));
    EXPECT_NE(slurp(path("a/dataset.csv")), slurp(path("c/dataset.csv")));
}

TEST_F(Cli, AnalyzeWritesProfiles) {
    ASSERT_EQ(run(cfg() + "analyze " + out("a")), 0);
    EXPECT_EQ(first_line(path("a/frequency_h01.csv")), "weekday,slot,frequency");
    EXPECT_EQ(first_line(path("a/cost_h02.csv")), "slot,avg_cost");
    EXPECT_EQ(first_line(path("a/quantiles.csv")), "house_id,profile,q25,q50,q75");
    const auto freq = slurp(path("a/frequency_h01.csv"));
    EXPECT_EQ(freq.find("\n0,"), std::string::npos); // aggregate only without --per-weekday
    ASSERT_EQ(run(cfg() + "analyze --per-weekday " + out("b")), 0);
    EXPECT_NE(slurp(path("b/frequency_h01.csv")).find("\n0,"), std::string::npos);
}

TEST_F(Cli, AnalyzeEmptyDatasetFails) {
    const auto csv = path("empty.csv");
    std::ofstream(csv) << "timestamp,house_id,p_res_kw,p_ev_kw,p_pv_kw\n";
    std::ofstream(config_) << R"({"data": {"source": "csv", "csv_path": ")" << csv.string() << R"("}})";
    EXPECT_NE(run(cfg() + "analyze " + out("a")), 0);
    EXPECT_NE(slurp(path("stderr.txt")).find("evq:"), std::string::npos);
}

TEST_F(Cli, NStepOneReproducesPlainDqn) {
    ASSERT_EQ(run(cfg() + "train --mode dqn --epochs 5 " + out("a")), 0);
    ASSERT_EQ(run(cfg() + "train --mode ndqn --n-step 1 --epochs 5 " + out("a")), 0);
    for (const char* h : {"h01", "h02"}) {
        const auto dqn = slurp(path(std::string("a/dqn_") + h + ".evqn"));
        ASSERT_FALSE(dqn.empty());
        EXPECT_EQ(dqn, slurp(path(std::string("a/ndqn_") + h + ".evqn")));
        EXPECT_EQ(slurp(path(std::string("a/dqn_") + h + "_log.csv")),
                  slurp(path(std::string("a/ndqn_") + h + "_log.csv")));
    }
}

TEST_F(Cli, TrainIsByteDeterministic) {
    ASSERT_EQ(run(cfg() + "train --mode ndqn " + out("a")), 0);
    ASSERT_EQ(run(cfg() + "train --mode ndqn " + out("b")), 0);
    EXPECT_EQ(slurp(path("a/ndqn_h01.evqn")), slurp(path("b/ndqn_h01.evqn")));
    EXPECT_EQ(slurp(path("a/ndqn_h01_log.csv")), slurp(path("b/ndqn_h01_log.csv")));
    EXPECT_EQ(first_line(path("a/ndqn_h01_log.csv")), "epoch,mean_return,epsilon,loss");
}

TEST_F(Cli, ZeroEpochsWritesInitialization) {
    ASSERT_EQ(run(cfg() + "train --mode ndqn --epochs 0 " + out("a")), 0);
    const auto bytes = slurp(path("a/ndqn_h01.evqn"));
    ASSERT_GE(bytes.size(), 4u);
    EXPECT_EQ(bytes.substr(0, 4), "EVQN");
    EXPECT_EQ(first_line(path("a/ndqn_h01_log.csv")), "epoch,mean_return,epsilon,loss");
}

TEST_F(Cli, EvalBaselineOnlyAndWithModels) {
    ASSERT_EQ(run(cfg() + "eval " + out("base")), 0);
    EXPECT_EQ(first_line(path("base/eval_test.csv")), "house_id,date,dr_class,method,sci,tec,par,return,load_match");
    const auto base = slurp(path("base/eval_test.csv"));
    EXPECT_NE(base.find(",UC,"), std::string::npos);
    EXPECT_NE(base.find(",DP,"), std::string::npos);
    EXPECT_EQ(base.find(",NDQN,"), std::string::npos);

    ASSERT_EQ(run(cfg() + "train --mode ndqn " + out("m")), 0);
    ASSERT_EQ(run(cfg() + "train --mode madqn " + out("m")), 0);
    ASSERT_EQ(run(cfg() + "eval --emit-traces --models " + path("m").string() + " " + out("e1")), 0);
    ASSERT_EQ(run(cfg() + "eval --emit-traces --jobs 3 --models " + path("m").string() + " " + out("e2")), 0);
    const auto csv = slurp(path("e1/eval_test.csv"));
    EXPECT_NE(csv.find(",NDQN,"), std::string::npos);
    EXPECT_NE(csv.find("community,"), std::string::npos);
    EXPECT_NE(csv.find(",COC,"), std::string::npos);
    EXPECT_NE(csv.find(",IOC,"), std::string::npos);
    EXPECT_EQ(csv, slurp(path("e2/eval_test.csv")));
    EXPECT_EQ(slurp(path("e1/summary_test.json")), slurp(path("e2/summary_test.json")));

    const auto summary = nlohmann::json::parse(slurp(path("e1/summary_test.json")));
    for (const char* m : {"UC", "DP", "NDQN"}) EXPECT_TRUE(summary["aggregate"].contains(m)) << m;
    for (const char* m : {"UC", "IOC", "COC"}) EXPECT_TRUE(summary["community"].contains(m)) << m;
    EXPECT_TRUE(summary["aggregate"]["UC"]["all"].contains("sci"));

    bool any_trace = false;
    for (const auto& e : fs::directory_iterator(path("e1/traces"))) {
        EXPECT_EQ(first_line(e.path()), "slot,price,p_res,p_pv,action,p_ev");
        any_trace = true;
    }
    EXPECT_TRUE(any_trace);
}

TEST_F(Cli, EvalRejectsMismatchedModel) {
    ASSERT_EQ(run(cfg() + "train --mode ndqn --epochs 0 " + out("m")), 0);
    std::ofstream(config_) << R"({"data": {"synth": {"seed": 3, "houses": 2, "days": 12}},
                                 "eligibility": {"min_days_per_house": 1},
                                 "env": {"variant": "ch6"}, "split": {"test_fraction": 0.25}})";
    EXPECT_NE(run(cfg() + "eval --models " + path("m").string() + " " + out("e")), 0);
}

TEST_F(Cli, OracleVerifyAndRatios) {
    ASSERT_EQ(run(cfg() + "oracle --verify-T 12 " + out("o")), 0);
    EXPECT_EQ(first_line(path("o/oracle_verify.csv")),
              "house_id,date,T,dp_return,brute_force_return,abs_diff,same_schedule");
    std::ifstream in(path("o/oracle_verify.csv"));
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(line.back(), '1') << line;
    }
    EXPECT_GT(rows, 0);
    EXPECT_EQ(first_line(path("o/oracle_test.csv")), "house_id,date,policy,optimal_return,policy_return,ratio");
}

TEST_F(Cli, EmptyTestSplitFails) {
    std::ofstream(config_) << R"({"data": {"synth": {"seed": 3, "houses": 1, "days": 6}},
                              "eligibility": {"min_days_per_house": 1}, "split": {"test_fraction": 0}})";
    EXPECT_NE(run(cfg() + "oracle " + out("o")), 0);
    EXPECT_NE(run(cfg() + "eval " + out("e")), 0);
    EXPECT_NE(slurp(path("stderr.txt")).find("evq:"), std::string::npos);
}

TEST_F(Cli, InvalidArgumentsFail) {
    EXPECT_NE(run("train --mode qlearn"), 0);
    EXPECT_NE(run(""), 0);
    EXPECT_NE(run("synth --config /nonexistent.json"), 0);
}
