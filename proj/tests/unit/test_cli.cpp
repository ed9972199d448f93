#include "flowvote/decision.hpp"
#include "flowvote/report.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using namespace flowvote;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("flowvote_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args, const std::string& env = {}) {
    const std::string cmd = env + " " FLOWVOTE_CLI_PATH " " + args + " >" + (workdir() / "stdout.txt").string() +
                            " 2>" + (workdir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        write_file(workdir() / "quiet.scenario", "duration_bins = 48\nflows_per_bin = 4000\nseed = 3\n");
        write_file(workdir() / "ddos.scenario",
                   "duration_bins = 48\nflows_per_bin = 4000\nseed = 3\ninject = ddos,30,400,tiny\n");
        ASSERT_EQ(run("generate --spec " + path("quiet.scenario") + " --name quiet --out-dir " + workdir().string()), 0);
        ASSERT_EQ(run("generate --spec " + path("ddos.scenario") + " --name ddos --out-dir " + workdir().string()), 0);
    }
};

}  // namespace

TEST_F(Cli, GenerateWritesTwoFiles) {
    EXPECT_TRUE(fs::exists(workdir() / "quiet.csv"));
    EXPECT_TRUE(fs::exists(workdir() / "quiet.truth.csv"));
    EXPECT_NE(read_text(workdir() / "quiet.csv").find("# config_hash="), std::string::npos);
}

TEST_F(Cli, GenerateMissingSpecIsUsageError) {
    EXPECT_EQ(run("generate --spec " + path("nope.scenario")), 2);
    EXPECT_EQ(run("generate"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, GenerateUnwritableOutDir) {
    write_file(workdir() / "plainfile", "x");
    EXPECT_EQ(run("generate --spec " + path("quiet.scenario") + " --out-dir " + path("plainfile/sub")), 1);
}

TEST_F(Cli, DetectAnomalyFree) {
    ASSERT_EQ(run("detect --trace " + path("quiet.csv") + " --heuristic union --report quiet.json --out-dir " +
                  workdir().string()),
              0);
    const auto r = load_detection_report(workdir() / "quiet.json");
    EXPECT_TRUE(r.diagnoses.empty());
    EXPECT_EQ(r.method, Method::VoteUnion);
}

TEST_F(Cli, DetectSingleDdos) {
    ASSERT_EQ(run("detect --trace " + path("ddos.csv") + " --heuristic h1 --report ddos.json --out-dir " +
                  workdir().string()),
              0);
    const auto r = load_detection_report(workdir() / "ddos.json");
    ASSERT_EQ(r.diagnoses.size(), 1u);
    EXPECT_EQ(r.diagnoses[0].bin, 30u);
    EXPECT_EQ(r.diagnoses[0].verdict, Verdict::DDoS);

    ASSERT_EQ(run("evaluate --report " + path("ddos.json") + " --truth " + path("ddos.truth.csv") +
                  " --output card.json --out-dir " + workdir().string()),
              0);
    EXPECT_NE(read_text(workdir() / "card.json").find("\"detection_rate\": 1.0"), std::string::npos);
}

TEST_F(Cli, LambdaEchoOmitsC) {
    ASSERT_EQ(run("detect --trace " + path("quiet.csv") + " --heuristic h2 --lambda 0.05 --report lam.json --out-dir " +
                  workdir().string()),
              0);
    const auto r = load_detection_report(workdir() / "lam.json");
    EXPECT_EQ(r.params.lambda, 0.05);
    EXPECT_FALSE(r.params.c.has_value());
    EXPECT_EQ(run("detect --trace " + path("quiet.csv") + " --lambda 0.05 --c 2"), 2);
}

TEST_F(Cli, FlagsOverrideConfigAndEnvSetsOutDir) {
    write_file(workdir() / "run.cfg", "c = 2.5\nk = 15\nreport = cfg.json\n");
    const auto env_dir = workdir() / "envout";
    ASSERT_EQ(run("detect --trace " + path("quiet.csv") + " --config " + path("run.cfg") + " --c 3",
                  "FLOWVOTE_OUT_DIR=" + env_dir.string()),
              0);
    const auto r = load_detection_report(env_dir / "cfg.json");
    EXPECT_EQ(r.params.c, 3.0);
    EXPECT_EQ(r.params.k, 15u);
    write_file(workdir() / "bad.cfg", "no_such_key = 1\n");
    EXPECT_EQ(run("detect --trace " + path("quiet.csv") + " --config " + path("bad.cfg")), 2);
}

TEST_F(Cli, EvaluateTraceMismatch) {
    ASSERT_EQ(run("detect --trace " + path("quiet.csv") + " --heuristic h1 --report mm.json --out-dir " +
                  workdir().string()),
              0);
    EXPECT_EQ(run("evaluate --report " + path("mm.json") + " --truth " + path("ddos.truth.csv") + " --out-dir " +
                  workdir().string()),
              1);
}

TEST_F(Cli, LearnThresholdsMatchesLibrary) {
    write_file(workdir() / "history.csv",
               "intensity,label\n10,Scan\n20,Scan\n100,DoS\n200,DoS\n1000,DDoS\n2000,DDoS\n");
    ASSERT_EQ(run("learn-thresholds --history " + path("history.csv") + " --output th.cfg --out-dir " +
                  workdir().string()),
              0);
    const auto got = read_thresholds(workdir() / "th.cfg");
    const auto want = learn_thresholds(read_labeled_history(workdir() / "history.csv"));
    EXPECT_EQ(got.ddos, want.ddos);
    EXPECT_EQ(got.dos, want.dos);
    EXPECT_EQ(got.scan, want.scan);
    EXPECT_FALSE(got.bootstrap);

    ASSERT_EQ(run("detect --trace " + path("ddos.csv") + " --thresholds " + path("th.cfg") +
                  " --report th.json --out-dir " + workdir().string()),
              0);
    EXPECT_EQ(load_detection_report(workdir() / "th.json").params.thresholds->ddos, want.ddos);
}

TEST_F(Cli, BaselineAnomalyFree) {
    ASSERT_EQ(run("baseline --trace " + path("quiet.csv") + " --report base.json --out-dir " + workdir().string()), 0);
    const auto r = load_detection_report(workdir() / "base.json");
    EXPECT_EQ(r.method, Method::Apriori);
    EXPECT_TRUE(r.diagnoses.empty());
}

TEST_F(Cli, RocWritesJsonAndCsv) {
    ASSERT_EQ(run("roc --trace " + path("ddos.csv") + " --truth " + path("ddos.truth.csv") +
                  " --heuristic h1 --grid 2,2.5 --output sweep --out-dir " + workdir().string()),
              0);
    const auto csv = read_text(workdir() / "sweep.csv");
    EXPECT_NE(csv.find("\n2,"), std::string::npos);
    EXPECT_NE(csv.find("\n2.5,"), std::string::npos);
    EXPECT_TRUE(fs::exists(workdir() / "sweep.json"));
    EXPECT_EQ(run("roc --trace " + path("ddos.csv") + " --truth " + path("ddos.truth.csv") + " --grid ,"), 2);
}

TEST_F(Cli, DetectIsDeterministic) {
    const auto args = "detect --trace " + path("ddos.csv") + " --heuristic union --out-dir " + workdir().string();
    ASSERT_EQ(run(args + " --report det1.json"), 0);
    ASSERT_EQ(run(args + " --report det2.json"), 0);
    EXPECT_EQ(read_text(workdir() / "det1.json"), read_text(workdir() / "det2.json"));
}
