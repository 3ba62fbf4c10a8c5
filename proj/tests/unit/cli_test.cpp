#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "collider/cli.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace collider {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

const fs::path kData = COLLIDER_DATA_DIR;

struct CliRun {
  int status = -1;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "collider");
  std::ostringstream out, err;
  CliRun r;
  r.status = run_pipeline(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string vocab() { return (kData / "vocabularies").string(); }

TEST(Cli, TasksList) {
  const CliRun r = cli({"tasks", "list"});
  EXPECT_EQ(r.status, kExitOk);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 11U);
  EXPECT_EQ(ls[0], "I\tpredictive\tp(E=1 | C1=0, C2=0)");
  EXPECT_EQ(ls[10], "XI\tdiagnostic_effect_absent\tp(C1=1 | E=0, C2=0)");
}

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(cli({"--help"}).status, kExitOk);
  EXPECT_EQ(cli({}).status, kExitInputError);
  EXPECT_EQ(cli({"frobnicate"}).status, kExitInputError);
  EXPECT_EQ(cli({"fit", "cbn", "--judgments", "/nonexistent.csv", "--out", "/tmp/x"}).status, kExitInputError);
  EXPECT_EQ(cli({"fit", "cbn", "--tying", "7p"}).status, kExitInputError);
}

TEST(Cli, PromptsGenerateWritesBundlesAndManifest) {
  TempDir dir("cli_prompts");
  const CliRun r = cli({"prompts", "generate", "--vocab", vocab(), "--out", dir.path().string(), "--seed", "5"});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(lines(slurp(dir.path() / "prompts.jsonl")).size(), 132U);
  const auto manifest = nlohmann::json::parse(slurp(dir.path() / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["command"], "prompts generate");
  EXPECT_EQ(manifest["inputs"].size(), 3U);
}

TEST(Cli, ReplayOverFixtureStoreIsDeterministic) {
  TempDir dir("cli_replay");
  ASSERT_EQ(cli({"prompts", "generate", "--vocab", vocab(), "--out", (dir.path() / "p").string()}).status, kExitOk);
  const std::vector<std::string> base = {"query", "run", "--prompts", (dir.path() / "p" / "prompts.jsonl").string(),
                                         "--transport", "replay", "--store", (kData / "fixtures" / "transcripts").string(),
                                         "--model", "synthetic-llm", "--temperature", "0", "--out"};
  auto a = base, b = base;
  a.push_back((dir.path() / "a").string());
  b.push_back((dir.path() / "b").string());
  const CliRun ra = cli(a);
  ASSERT_EQ(ra.status, kExitOk) << ra.err;
  ASSERT_EQ(cli(b).status, kExitOk);
  const std::string csv = slurp(dir.path() / "a" / "judgments.csv");
  EXPECT_EQ(lines(csv).size(), 133U);
  EXPECT_EQ(csv, slurp(dir.path() / "b" / "judgments.csv"));
  EXPECT_FALSE(fs::exists(dir.path() / "a" / "errors.csv"));
}

TEST(Cli, ReplayWithEmptyStoreFailsWithoutOutputs) {
  TempDir dir("cli_miss");
  ASSERT_EQ(cli({"prompts", "generate", "--vocab", vocab(), "--domain", "weather", "--out", (dir.path() / "p").string()})
                .status,
            kExitOk);
  fs::create_directories(dir.path() / "empty");
  const CliRun r = cli({"query", "run", "--prompts", (dir.path() / "p" / "prompts.jsonl").string(), "--transport", "replay",
                     "--store", (dir.path() / "empty").string(), "--model", "m", "--out", (dir.path() / "q").string()});
  EXPECT_EQ(r.status, kExitRuntimeError);
  EXPECT_NE(r.err.find("CacheMiss"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir.path() / "q" / "judgments.csv"));
  EXPECT_FALSE(fs::exists(dir.path() / "q" / "manifest.json"));
}

TEST(Cli, ReplayRequiresStore) {
  TempDir dir("cli_nostore");
  ASSERT_EQ(cli({"prompts", "generate", "--vocab", vocab(), "--out", dir.path().string()}).status, kExitOk);
  const CliRun r = cli({"query", "run", "--prompts", (dir.path() / "prompts.jsonl").string(), "--transport", "replay",
                     "--model", "m", "--out", (dir.path() / "q").string()});
  EXPECT_EQ(r.status, kExitInputError);
}

TEST(Cli, FitCbnRecoversFixtureParameters) {
  TempDir dir("cli_fit");
  const CliRun r = cli({"fit", "cbn", "--judgments", (kData / "fixtures" / "cbn_recovery" / "judgments.csv").string(),
                     "--tying", "3p", "--tying", "4p", "--out", dir.path().string()});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  int three = 0;
  for (const std::string& line : lines(slurp(dir.path() / "fits.jsonl"))) {
    const auto j = nlohmann::json::parse(line);
    if (j["tying"] != "3p") continue;
    ++three;
    EXPECT_NEAR(j["parameters"]["w_C"].get<double>(), 0.528, 0.05);
    EXPECT_NEAR(j["parameters"]["w_{C,E}"].get<double>(), 1.06, 0.05);
    EXPECT_NEAR(j["parameters"]["w_E"].get<double>(), 0.91, 0.05);
    EXPECT_LE(j["sse"].get<double>(), 1e-4);
  }
  EXPECT_EQ(three, 12);
  const auto table = lines(slurp(dir.path() / "table2.csv"));
  ASSERT_EQ(table.size(), 3U);
  EXPECT_EQ(table[0], "Agent,Model,NP,w_C,\"w_{C,E}\",\"w_{C1,E}\",\"w_{C2,E}\",w_E,R,AIC,Loss,Winner");
}

TEST(Cli, FigureDataHasFourGroupFiles) {
  TempDir dir("cli_fig");
  const CliRun r = cli({"report", "figure-data", "--judgments",
                     (kData / "fixtures" / "human_reference" / "judgments.csv").string(), "--bootstrap", "200",
                     "--out", dir.path().string()});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(lines(slurp(dir.path() / "predictive.csv")).size(), 4U);
  EXPECT_EQ(lines(slurp(dir.path() / "independence.csv")).size(), 3U);
  EXPECT_EQ(lines(slurp(dir.path() / "diagnostic_effect_present.csv")).size(), 4U);
  EXPECT_EQ(lines(slurp(dir.path() / "diagnostic_effect_absent.csv")).size(), 4U);
  EXPECT_EQ(lines(slurp(dir.path() / "independence.csv"))[0],
            "task_id,query,Human mean,Human ci_low,Human ci_high,Human n");
}

TEST(Cli, CorrelateNeedsReferenceAgent) {
  TempDir dir("cli_corr");
  const CliRun r = cli({"analyze", "correlate", "--judgments",
                     (kData / "fixtures" / "cbn_recovery" / "judgments.csv").string(), "--reference", "Nobody",
                     "--out", dir.path().string()});
  EXPECT_EQ(r.status, kExitInputError);
  EXPECT_FALSE(fs::exists(dir.path() / "table1.csv"));
}

TEST(Cli, MalformedJudgmentsAreRejectedWithLineNumber) {
  TempDir dir("cli_bad");
  const fs::path csv = dir.path() / "bad.csv";
  std::ofstream(csv) << "agent_id,agent_type,model_name,domain,counterbalance,task_id,response,temperature\n"
                     << "s1,human,,economy,1,I,50,\n"
                     << "s1,human,,economy,1,XII,50,\n";
  const CliRun r = cli({"report", "figure-data", "--judgments", csv.string(), "--out", (dir.path() / "o").string()});
  EXPECT_EQ(r.status, kExitInputError);
  EXPECT_NE(r.err.find("bad.csv:3"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir.path() / "o"));
}

TEST(Cli, SimulateThenFitSamplerIsDeterministic) {
  TempDir dir("cli_sim");
  ASSERT_EQ(cli({"simulate", "sampler", "--lambda", "3", "--chains", "2000", "--units", "1", "--out",
                 (dir.path() / "s").string()})
                .status,
            kExitOk);
  const std::vector<std::string> fit = {"fit", "sampler", "--judgments", (dir.path() / "s" / "judgments.csv").string(),
                                        "--chains", "200", "--lambda-max", "12", "--out"};
  auto a = fit, b = fit;
  a.push_back((dir.path() / "a").string());
  b.push_back((dir.path() / "b").string());
  ASSERT_EQ(cli(a).status, kExitOk);
  ASSERT_EQ(cli(b).status, kExitOk);
  EXPECT_EQ(slurp(dir.path() / "a" / "table3.csv"), slurp(dir.path() / "b" / "table3.csv"));
  EXPECT_EQ(slurp(dir.path() / "a" / "fits.jsonl"), slurp(dir.path() / "b" / "fits.jsonl"));
  EXPECT_EQ(lines(slurp(dir.path() / "a" / "table3.csv")).size(), 3U);
}

TEST(Cli, BinaryExitCodes) {
  EXPECT_EQ(std::system((std::string(COLLIDER_CLI_PATH) + " tasks list > /dev/null").c_str()), 0);
  const int status = std::system((std::string(COLLIDER_CLI_PATH) + " fit cbn 2> /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitInputError);
}

}  // namespace
}  // namespace collider
