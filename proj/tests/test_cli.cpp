#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "gradeprobe/analytics.hpp"
#include "gradeprobe/episode_log.hpp"
#include "gradeprobe/grade_service.hpp"
#include "gradeprobe/policy.hpp"
#include "support/fixtures.hpp"

using namespace gradeprobe;
using namespace gradeprobe::testing;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override { dir = fresh_temp_dir("cli"); }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write_config(const std::string& json, const std::string& name = "cfg.json") {
        spit(dir / name, json);
        return dir / name;
    }

    void write_log(const fs::path& path, int experiment, int run, const std::vector<EpisodeRecord>& eps) {
        EpisodeLog log{LogHeader{kEpisodeLogVersion, experiment, run}, eps};
        spit(path, serialize_episode_log(log));
    }

    fs::path dir;
};

constexpr const char* kSmallConfig =
    R"({"experiment": 1, "run": {"total_timesteps": 2000, "num_runs": 2, "seed": 0}})";

} // namespace

TEST_F(CliTest, TrainWritesLogsAndManifest) {
    const auto cfg = write_config(kSmallConfig);
    const auto r = run({"train", "--config", cfg.string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "out/episodes_exp1_run0.jsonl"));
    EXPECT_TRUE(fs::exists(dir / "out/episodes_exp1_run1.jsonl"));
    EXPECT_TRUE(fs::exists(dir / "out/policy_exp1_run0.json"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "out/manifest.json"));
    EXPECT_EQ(manifest["runs"].size(), 2u);
    EXPECT_EQ(manifest["runs"][1]["seed"], 1);
    EXPECT_EQ(manifest["config"]["experiment"], 1);
    EXPECT_EQ(manifest["config"]["run"]["total_timesteps"], 2000);
    EXPECT_TRUE(manifest.contains("wall_seconds"));
    EXPECT_TRUE(manifest["software"].contains("version"));

    const auto log = read_episode_log(dir / "out/episodes_exp1_run1.jsonl");
    EXPECT_EQ(log.header.run_id, 1);
    long steps = 0;
    for (const auto& e : log.episodes) steps += static_cast<long>(e.transitions.size());
    EXPECT_GE(steps, 2000);
}

TEST_F(CliTest, TrainIsDeterministicAcrossInvocationsAndParallelism) {
    const auto cfg = write_config(kSmallConfig);
    ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", (dir / "b").string(), "--parallel"}).code, 0);
    for (const char* name : {"episodes_exp1_run0.jsonl", "episodes_exp1_run1.jsonl", "policy_exp1_run1.json"}) {
        EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
    }
}

TEST_F(CliTest, TrainRejectsInvalidConfigWithFieldName) {
    const auto cfg = write_config(R"({"experiment": 4})");
    const auto r = run({"train", "--config", cfg.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("experiment"), std::string::npos) << r.err;
    EXPECT_EQ(run({"train", "--config", (dir / "nope.json").string(), "--out", dir.string()}).code,
              cli::kExitValidation);
    EXPECT_EQ(run({"train", "--out", dir.string()}).code, cli::kExitValidation);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kExitValidation);
}

TEST_F(CliTest, TrainAgainstUnreachableGraderKeepsPartialLogs) {
    const int port = unused_port();
    const auto cfg = write_config(R"({"experiment": 1, "grader": {"kind": "remote", "endpoint": "http://127.0.0.1:)" +
                                  std::to_string(port) + R"("}, "run": {"total_timesteps": 100, "num_runs": 1}})");
    const auto r = run({"train", "--config", cfg.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, cli::kExitRuntime);
    EXPECT_NE(r.err.find("transport"), std::string::npos) << r.err;
    EXPECT_TRUE(fs::exists(dir / "out/episodes_exp1_run0.jsonl"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "out/manifest.json"));
    EXPECT_EQ(manifest["runs"][0]["status"], "failed");
}

TEST_F(CliTest, TrainAgainstServedMockMatchesInProcessMock) {
    GradeServer server(std::make_shared<MockGrader>(), "mock");
    ASSERT_TRUE(server.bind("127.0.0.1", 0));
    std::thread t([&] { server.listen(); });
    server.wait_until_ready();
    const auto remote = write_config(R"({"experiment": 2, "grader": {"kind": "remote", "endpoint": "http://127.0.0.1:)" +
                                         std::to_string(server.port()) +
                                         R"("}, "run": {"total_timesteps": 300, "num_runs": 1}})",
                                     "remote.json");
    const auto local = write_config(R"({"experiment": 2, "run": {"total_timesteps": 300, "num_runs": 1}})", "local.json");
    const auto a = run({"train", "--config", remote.string(), "--out", (dir / "remote").string()});
    const auto b = run({"train", "--config", local.string(), "--out", (dir / "local").string()});
    server.stop();
    t.join();
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(dir / "remote/episodes_exp2_run0.jsonl"), slurp(dir / "local/episodes_exp2_run0.jsonl"));
}

TEST_F(CliTest, AnalyzeMatchesOracle) {
    const auto log = handcrafted_log();
    std::vector<EpisodeRecord> run0(log.begin(), log.begin() + 10), run1(log.begin() + 10, log.end());
    write_log(dir / "episodes_exp3_run0.jsonl", 3, 0, run0);
    write_log(dir / "episodes_exp3_run1.jsonl", 3, 1, run1);
    const auto r = run({"analyze", "--logs", (dir / "episodes_*.jsonl").string(), "--top-pct", "0.25", "--report",
                        (dir / "report.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = report_from_json(slurp(dir / "report.json"));
    EXPECT_EQ(report, oracle_report(log, 0.25, experiment_preset(3), 5));

    const auto all = run({"analyze", "--logs", (dir / "episodes_*.jsonl").string(), "--top-pct", "1.0", "--report",
                          (dir / "all.json").string()});
    ASSERT_EQ(all.code, 0);
    const auto full = report_from_json(slurp(dir / "all.json"));
    EXPECT_EQ(full.n_episodes_analyzed, 20u);
    EXPECT_EQ(full.repeat_sequence_fraction, 0.25);
    EXPECT_EQ(full.triple_consecutive_fraction, 0.05);
}

TEST_F(CliTest, AnalyzeValidation) {
    auto r = run({"analyze", "--logs", (dir / "none_*.jsonl").string(), "--top-pct", "0.05", "--report",
                  (dir / "r.json").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("no logs matched"), std::string::npos);

    auto eps = handcrafted_log();
    write_log(dir / "a.jsonl", 3, 0, {eps[0]});
    auto other = eps[1];
    other.experiment_id = 1;
    other.run_id = 0;
    write_log(dir / "b.jsonl", 1, 0, {other});
    r = run({"analyze", "--logs", (dir / "*.jsonl").string(), "--top-pct", "0.05", "--report", (dir / "r.json").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("--per-experiment"), std::string::npos) << r.err;

    r = run({"analyze", "--logs", (dir / "*.jsonl").string(), "--top-pct", "0.05", "--report", (dir / "r.json").string(),
             "--per-experiment"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "r_exp1.json"));
    EXPECT_TRUE(fs::exists(dir / "r_exp3.json"));

    r = run({"analyze", "--logs", (dir / "a.jsonl").string(), "--top-pct", "5", "--report", (dir / "r.json").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);

    spit(dir / "broken.jsonl", "{\"schema\":\"nope\"}\n");
    r = run({"analyze", "--logs", (dir / "broken.jsonl").string(), "--top-pct", "0.05", "--report",
             (dir / "r.json").string()});
    EXPECT_NE(r.code, 0);
}

TEST_F(CliTest, CurveWindowOneAndTruncation) {
    auto eps = handcrafted_log();
    std::vector<EpisodeRecord> run0(eps.begin(), eps.begin() + 10), run1(eps.begin() + 10, eps.begin() + 16);
    write_log(dir / "episodes_exp3_run0.jsonl", 3, 0, run0);
    write_log(dir / "episodes_exp3_run1.jsonl", 3, 1, run1);
    const auto r = run({"curve", "--logs", (dir / "episodes_*.jsonl").string(), "--window", "1", "--out",
                        (dir / "curve.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("truncat"), std::string::npos) << r.err;
    std::istringstream csv(slurp(dir / "curve.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "episode_index,mean,lower,upper");
    int rows = 0;
    while (std::getline(csv, line)) {
        const double mean = std::stod(line.substr(line.find(',') + 1));
        EXPECT_NEAR(mean, (run0[rows].episode_return + run1[rows].episode_return) / 2.0, 1e-12);
        ++rows;
    }
    EXPECT_EQ(rows, 6);

    EXPECT_EQ(run({"curve", "--logs", (dir / "episodes_*.jsonl").string(), "--window", "0", "--out",
                   (dir / "c.csv").string()})
                  .code,
              cli::kExitValidation);
}

TEST_F(CliTest, ProbeTrainedPolicyReachesThreshold) {
    const auto cfg = write_config(R"({"experiment": 1, "run": {"max_episodes": 1500, "total_timesteps": 100000, "num_runs": 1}})");
    ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", (dir / "out").string()}).code, 0);
    const auto r = run({"probe", "--policy", (dir / "out/policy_exp1_run0.json").string(), "--response", "i dont know"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("termination: threshold_reached"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("["), std::string::npos);
}

TEST_F(CliTest, ProbeZeroPolicyTakesLowestIndex) {
    const Featurizer f(experiment_preset(1).phrases, FeaturizerConfig::defaults());
    PolicyDocument doc;
    doc.params = PolicyParameters::zeros(f.dimension(), 25);
    doc.featurizer = f.config();
    doc.experiment_id = 1;
    spit(dir / "zero.json", policy_to_json(doc));
    const auto r = run({"probe", "--policy", (dir / "zero.json").string(), "--response", "i dont know"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("step 1: insert-front \"" + experiment_preset(1).phrases[0] + "\""), std::string::npos)
        << r.out;

    const auto mismatch = run({"probe", "--policy", (dir / "zero.json").string(), "--response", "x", "--experiment", "3"});
    EXPECT_EQ(mismatch.code, cli::kExitValidation);
    EXPECT_NE(mismatch.err.find("preset 3"), std::string::npos) << mismatch.err;

    EXPECT_EQ(run({"probe", "--policy", (dir / "zero.json").string(), "--response", "   "}).code, cli::kExitValidation);
}

TEST_F(CliTest, ServeMockBindFailure) {
    GradeServer holder(std::make_shared<MockGrader>(), "holder");
    ASSERT_TRUE(holder.bind("127.0.0.1", 0));
    const int port = holder.port();
    const auto r = run({"serve-mock", "--port", std::to_string(port), "--host", "127.0.0.1"});
    EXPECT_EQ(r.code, cli::kExitRuntime);
}
