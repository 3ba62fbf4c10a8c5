#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "collider/task_catalog.hpp"

namespace collider {

enum class AgentType { Human, LLM };
enum class Domain { Economy, Sociology, Weather };

inline constexpr std::array<Domain, 3> kDomains{Domain::Economy, Domain::Sociology, Domain::Weather};

std::string_view to_string(AgentType t);
std::string_view to_string(Domain d);
std::optional<AgentType> parse_agent_type(std::string_view s);
std::optional<Domain> parse_domain(std::string_view s);
/// "Economy", "Sociology", "Weather".
std::string_view display_name(Domain d);

struct JudgmentRecord {
  std::string agent_id;
  AgentType agent_type = AgentType::Human;
  std::string model_name;  // empty for humans
  Domain domain = Domain::Sociology;
  int counterbalance = 1;
  TaskId task_id = TaskId::I;
  double response = 0.0;
  std::optional<double> temperature;

  /// Throws Error(InvalidInput) when a field violates its range.
  void validate() const;
  /// "Human" for people, the model name for LLMs.
  std::string agent_label() const;

  friend bool operator==(const JudgmentRecord&, const JudgmentRecord&) = default;
};

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws LengthMismatch, or
/// ConstantVector when either input has no spread.
double spearman(std::span<const double> x, std::span<const double> y);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap interval of the mean: `replicates` resamples of n
/// values with replacement; bounds are the (1-level)/2 and (1+level)/2
/// quantiles of the replicate means (linear interpolation).
Interval bootstrap_ci(std::span<const double> values, std::size_t replicates, double level,
                      std::uint64_t seed);

struct GroupBy {
  bool agent = true;
  bool domain = false;
  bool counterbalance = false;
};

struct AggregateRow {
  TaskId task_id = TaskId::I;
  TaskGroup group = TaskGroup::Predictive;
  std::string agent;                    // empty unless grouped by agent
  std::optional<Domain> domain;         // set when grouped by domain
  std::optional<int> counterbalance;    // set when grouped by counterbalance
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

struct BootstrapOptions {
  std::size_t replicates = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

/// Mean response and bootstrap CI per (task x key). Rows are ordered by task
/// id, then agent, domain and counterbalance.
std::vector<AggregateRow> aggregate(std::span<const JudgmentRecord> records, const GroupBy& group_by,
                                    const BootstrapOptions& bootstrap = {});

}  // namespace collider
