#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "collider/stats.hpp"
#include "test_support.hpp"

namespace collider {
namespace {

// Quadratic-time reference: rank = (#less) + (#equal + 1) / 2.
std::vector<double> naive_ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    out[i] = less + (equal + 1.0) / 2.0;
  }
  return out;
}

double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - sx / n) * (y[i] - sy / n);
    sxx += (x[i] - sx / n) * (x[i] - sx / n);
    syy += (y[i] - sy / n) * (y[i] - sy / n);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(Stats, SpearmanReferenceValues) {
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}), -1.0, 1e-15);
}

TEST(Stats, SpearmanErrors) {
  EXPECT_ERROR_CODE(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), ErrorCode::LengthMismatch);
  EXPECT_ERROR_CODE(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), ErrorCode::ConstantVector);
  EXPECT_ERROR_CODE(spearman(std::vector<double>{1}, std::vector<double>{1}), ErrorCode::EmptyInput);
}

TEST(Stats, AverageRanksWithTies) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(StatsProperty, RanksMatchNaiveReferenceExactly) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> value(0, 6), length(2, 40);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(length(rng)));
    for (double& x : v) x = value(rng);
    EXPECT_EQ(average_ranks(v), naive_ranks(v));
  }
}

TEST(StatsProperty, SpearmanIsPearsonOfRanks) {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<int> value(0, 5);
  int checked = 0;
  while (checked < 100) {
    std::vector<double> x(15), y(15);
    for (double& v : x) v = value(rng);
    for (double& v : y) v = value(rng);
    const auto rx = naive_ranks(x), ry = naive_ranks(y);
    if (std::equal(rx.begin() + 1, rx.end(), rx.begin()) || std::equal(ry.begin() + 1, ry.end(), ry.begin())) continue;
    EXPECT_NEAR(spearman(x, y), naive_pearson(rx, ry), 1e-12);
    ++checked;
  }
}

TEST(StatsProperty, SpearmanIsInvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(20), y(20), ex(20);
    for (std::size_t i = 0; i < 20; ++i) {
      x[i] = n(rng);
      y[i] = x[i] + n(rng);
      ex[i] = std::exp(x[i]);
    }
    EXPECT_NEAR(spearman(x, y), spearman(ex, y), 1e-12);
    EXPECT_NEAR(spearman(x, y), spearman(y, x), 1e-15);
  }
}

TEST(Stats, BootstrapOnConstantDataHasZeroWidth) {
  const std::vector<double> v(30, 42.0);
  const Interval ci = bootstrap_ci(v, 500, 0.95, 1);
  EXPECT_EQ(ci.low, 42.0);
  EXPECT_EQ(ci.high, 42.0);
}

TEST(Stats, BootstrapIsSeededAndBracketsTheMean) {
  const std::vector<double> v = {10, 20, 30, 40, 55, 60, 70, 90};
  const Interval a = bootstrap_ci(v, 2000, 0.95, 9);
  const Interval b = bootstrap_ci(v, 2000, 0.95, 9);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  EXPECT_LT(a.low, 46.875);
  EXPECT_GT(a.high, 46.875);
  const Interval narrow = bootstrap_ci(v, 2000, 0.5, 9);
  EXPECT_GE(narrow.low, a.low);
  EXPECT_LE(narrow.high, a.high);
}

TEST(Stats, BootstrapErrors) {
  EXPECT_ERROR_CODE(bootstrap_ci({}, 500, 0.95, 1), ErrorCode::EmptyInput);
  EXPECT_ERROR_CODE(bootstrap_ci(std::vector<double>{1.0}, 10, 0.95, 1), ErrorCode::InvalidInput);
  EXPECT_ERROR_CODE(bootstrap_ci(std::vector<double>{1.0}, 500, 1.0, 1), ErrorCode::InvalidInput);
}

JudgmentRecord rec(std::string agent, AgentType type, Domain d, int cb, TaskId t, double r) {
  JudgmentRecord j;
  j.agent_id = agent;
  j.agent_type = type;
  j.model_name = type == AgentType::LLM ? agent : "";
  j.domain = d;
  j.counterbalance = cb;
  j.task_id = t;
  j.response = r;
  return j;
}

TEST(Stats, AggregateGroupsAndOrders) {
  std::vector<JudgmentRecord> rs = {
      rec("s1", AgentType::Human, Domain::Economy, 1, TaskId::VII, 60),
      rec("s2", AgentType::Human, Domain::Weather, 2, TaskId::VII, 80),
      rec("gpt", AgentType::LLM, Domain::Economy, 1, TaskId::I, 10),
      rec("s1", AgentType::Human, Domain::Economy, 1, TaskId::I, 30),
  };
  const auto rows = aggregate(rs, GroupBy{}, {200, 0.95, 0});
  ASSERT_EQ(rows.size(), 3U);
  EXPECT_EQ(rows[0].task_id, TaskId::I);
  EXPECT_EQ(rows[0].agent, "Human");
  EXPECT_EQ(rows[1].agent, "gpt");
  EXPECT_EQ(rows[2].task_id, TaskId::VII);
  EXPECT_DOUBLE_EQ(rows[2].mean, 70.0);
  EXPECT_EQ(rows[2].n, 2U);
  EXPECT_EQ(rows[2].group, TaskGroup::DiagnosticEffectPresent);
  for (const auto& r : rows) {
    EXPECT_LE(r.ci_low, r.mean);
    EXPECT_GE(r.ci_high, r.mean);
  }
  const auto by_domain = aggregate(rs, GroupBy{true, true, false}, {200, 0.95, 0});
  EXPECT_EQ(by_domain.size(), 4U);
}

TEST(StatsProperty, AggregateIgnoresRecordOrder) {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> r(0, 100);
  std::vector<JudgmentRecord> rs;
  for (int s = 0; s < 20; ++s) {
    for (const TaskSpec& t : catalog()) {
      rs.push_back(rec("s" + std::to_string(s), AgentType::Human, kDomains[s % 3], 1 + s % 4, t.id, r(rng)));
    }
  }
  const auto a = aggregate(rs, GroupBy{}, {300, 0.95, 5});
  std::shuffle(rs.begin(), rs.end(), rng);
  const auto b = aggregate(rs, GroupBy{}, {300, 0.95, 5});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mean, b[i].mean);
    EXPECT_EQ(a[i].ci_low, b[i].ci_low);
    EXPECT_EQ(a[i].ci_high, b[i].ci_high);
  }
}

TEST(Stats, RecordValidation) {
  auto r = rec("s", AgentType::Human, Domain::Economy, 1, TaskId::I, 101);
  EXPECT_ERROR_CODE(r.validate(), ErrorCode::OutOfRange);
  r.response = 50;
  r.counterbalance = 5;
  EXPECT_ERROR_CODE(r.validate(), ErrorCode::InvalidInput);
  r.counterbalance = 1;
  r.task_id = static_cast<TaskId>(12);
  EXPECT_ERROR_CODE(r.validate(), ErrorCode::UnknownTask);
}

}  // namespace
}  // namespace collider
