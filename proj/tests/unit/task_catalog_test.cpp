#include <gtest/gtest.h>

#include <set>

#include "collider/causal_model.hpp"
#include "collider/task_catalog.hpp"
#include "test_support.hpp"

namespace collider {
namespace {

TEST(TaskCatalog, HasElevenTasksInOrder) {
  const auto tasks = catalog();
  ASSERT_EQ(tasks.size(), kTaskCount);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    EXPECT_EQ(static_cast<std::size_t>(tasks[i].id), i + 1);
    EXPECT_FALSE(tasks[i].mirrored);
  }
}

TEST(TaskCatalog, GroupSizes) {
  std::map<TaskGroup, int> counts;
  for (const TaskSpec& t : catalog()) ++counts[t.group];
  EXPECT_EQ(counts[TaskGroup::Predictive], 3);
  EXPECT_EQ(counts[TaskGroup::Independence], 2);
  EXPECT_EQ(counts[TaskGroup::DiagnosticEffectPresent], 3);
  EXPECT_EQ(counts[TaskGroup::DiagnosticEffectAbsent], 3);
}

TEST(TaskCatalog, QueriesMatchFormalDefinitions) {
  EXPECT_EQ(task(TaskId::I).query.notation(), "p(E=1 | C1=0, C2=0)");
  EXPECT_EQ(task(TaskId::II).query.notation(), "p(E=1 | C1=1, C2=0)");
  EXPECT_EQ(task(TaskId::III).query.notation(), "p(E=1 | C1=1, C2=1)");
  EXPECT_EQ(task(TaskId::IV).query.notation(), "p(C1=1 | C2=0)");
  EXPECT_EQ(task(TaskId::V).query.notation(), "p(C1=1 | C2=1)");
  EXPECT_EQ(task(TaskId::VI).query.notation(), "p(C1=1 | E=1, C2=1)");
  EXPECT_EQ(task(TaskId::VII).query.notation(), "p(C1=1 | E=1)");
  EXPECT_EQ(task(TaskId::VIII).query.notation(), "p(C1=1 | E=1, C2=0)");
  EXPECT_EQ(task(TaskId::IX).query.notation(), "p(C1=1 | E=0, C2=1)");
  EXPECT_EQ(task(TaskId::X).query.notation(), "p(C1=1 | E=0)");
  EXPECT_EQ(task(TaskId::XI).query.notation(), "p(C1=1 | E=0, C2=0)");
}

TEST(TaskCatalog, RomanRoundTrip) {
  for (const TaskSpec& t : catalog()) EXPECT_EQ(parse_task_id(to_roman(t.id)), t.id);
  EXPECT_FALSE(parse_task_id("XII").has_value());
  EXPECT_FALSE(parse_task_id("").has_value());
  EXPECT_FALSE(parse_task_id("iv").has_value());
}

TEST(TaskCatalog, SymmetricCounterparts) {
  EXPECT_FALSE(symmetric_counterpart(task(TaskId::I)).has_value());
  EXPECT_FALSE(symmetric_counterpart(task(TaskId::III)).has_value());
  const auto mirror = symmetric_counterpart(task(TaskId::IX));
  ASSERT_TRUE(mirror.has_value());
  EXPECT_TRUE(mirror->mirrored);
  EXPECT_EQ(mirror->query.notation(), "p(C2=1 | E=0, C1=1)");
  // Mirroring twice returns the canonical task.
  EXPECT_EQ(symmetric_counterpart(*mirror), task(TaskId::IX));
}

TEST(TaskCatalog, CounterpartRejectsNonCatalogQueries) {
  TaskSpec bogus = task(TaskId::VII);
  bogus.query = EvidenceQuery::make(Variable::C2, false, {{Variable::E, true}});
  EXPECT_ERROR_CODE(symmetric_counterpart(bogus), ErrorCode::UnknownTask);
}

TEST(TaskCatalogProperty, MirroredTasksHaveEqualCbnAnswersUnderSymmetricParameters) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> prior(0.01, 0.99), w(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = ColliderParameters::shared(prior(rng), w(rng), w(rng));
    const JointTable joint = build_joint(p);
    for (const TaskSpec& t : catalog()) {
      const auto mirror = symmetric_counterpart(t);
      if (!mirror) continue;
      EXPECT_NEAR(conditional_prob(joint, t.query), conditional_prob(joint, mirror->query), 1e-12);
    }
  }
}

TEST(TaskCatalog, GroupLabels) {
  EXPECT_EQ(slug(TaskGroup::DiagnosticEffectAbsent), "diagnostic_effect_absent");
  EXPECT_EQ(to_string(TaskGroup::Independence), "Independence of Causes");
}

}  // namespace
}  // namespace collider
