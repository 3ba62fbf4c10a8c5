#include <gtest/gtest.h>

#include <random>

#include "collider/judgment_io.hpp"
#include "test_support.hpp"

namespace collider {
namespace {

constexpr const char* kHeader = "agent_id,agent_type,model_name,domain,counterbalance,task_id,response,temperature\n";

TEST(JudgmentIo, ParsesTwoRows) {
  const std::string text = std::string(kHeader) +
                           "s01,human,,sociology,1,X,35,\n"
                           "gpt-4o,llm,gpt-4o,weather,3,VII,72.5,0\n";
  const auto rs = parse_judgments(text);
  ASSERT_EQ(rs.size(), 2U);
  EXPECT_EQ(rs[0].agent_type, AgentType::Human);
  EXPECT_EQ(rs[0].task_id, TaskId::X);
  EXPECT_FALSE(rs[0].temperature.has_value());
  EXPECT_EQ(rs[1].model_name, "gpt-4o");
  EXPECT_EQ(rs[1].domain, Domain::Weather);
  EXPECT_EQ(rs[1].temperature, 0.0);
  EXPECT_DOUBLE_EQ(rs[1].response, 72.5);
}

TEST(JudgmentIo, AcceptsCapitalizedEnums) {
  const auto rs = parse_judgments(std::string(kHeader) + "s,Human,,Economy,2,I,1,\n");
  EXPECT_EQ(rs[0].domain, Domain::Economy);
}

void expect_rejected(const std::string& row, ErrorCode code, const std::string& fragment) {
  try {
    parse_judgments(std::string(kHeader) + "s01,human,,sociology,1,I,20,\n" + row, "f.csv");
    FAIL() << "accepted: " << row;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
    EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(JudgmentIo, RejectsOutOfRangeResponse) {
  expect_rejected("s02,human,,sociology,1,I,101,\n", ErrorCode::OutOfRange, "101");
}

TEST(JudgmentIo, RejectsUnknownTask) {
  expect_rejected("s02,human,,sociology,1,XII,50,\n", ErrorCode::UnknownTask, "XII");
}

TEST(JudgmentIo, RejectsMalformedRows) {
  expect_rejected("s02,robot,,sociology,1,I,50,\n", ErrorCode::InvalidInput, "robot");
  expect_rejected("s02,human,,mars,1,I,50,\n", ErrorCode::InvalidInput, "mars");
  expect_rejected("s02,human,,sociology,9,I,50,\n", ErrorCode::InvalidInput, "counterbalance");
  expect_rejected("s02,human,,sociology,1,I,abc,\n", ErrorCode::InvalidInput, "abc");
  expect_rejected("s02,human,,sociology,1,I\n", ErrorCode::InvalidInput, "8 fields");
}

TEST(JudgmentIo, RejectsWrongHeader) {
  EXPECT_ERROR_CODE(parse_judgments("a,b,c\n"), ErrorCode::InvalidInput);
}

TEST(JudgmentIo, MissingFileIsInputError) {
  EXPECT_ERROR_CODE(ingest_judgments("/nonexistent/file.csv"), ErrorCode::InvalidInput);
}

TEST(JudgmentIoProperty, FileRoundTripIsExact) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> response(0.0, 100.0), temp(0.0, 2.0);
  std::uniform_int_distribution<int> pick(0, 1000);
  const std::vector<std::string> names = {"s1", "model, \"quoted\"", "gpt-4o", "multi\nline"};
  std::vector<JudgmentRecord> rs;
  for (int i = 0; i < 500; ++i) {
    JudgmentRecord r;
    r.agent_id = names[static_cast<std::size_t>(pick(rng)) % names.size()];
    r.agent_type = pick(rng) % 2 ? AgentType::Human : AgentType::LLM;
    r.model_name = r.agent_type == AgentType::LLM ? r.agent_id : "";
    r.domain = kDomains[static_cast<std::size_t>(pick(rng)) % 3];
    r.counterbalance = 1 + pick(rng) % 4;
    r.task_id = catalog()[static_cast<std::size_t>(pick(rng)) % kTaskCount].id;
    r.response = pick(rng) % 3 == 0 ? std::round(response(rng)) : response(rng);
    if (pick(rng) % 2) r.temperature = temp(rng);
    rs.push_back(r);
  }
  testing::TempDir dir("io");
  const auto path = dir.path() / "j.csv";
  write_judgments(path, rs);
  EXPECT_EQ(ingest_judgments(path), rs);
}

}  // namespace
}  // namespace collider
