#include "collider/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "collider/error.hpp"
#include "collider/rng.hpp"

namespace collider {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(AgentType t) { return t == AgentType::Human ? "human" : "llm"; }

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::Economy: return "economy";
    case Domain::Sociology: return "sociology";
    case Domain::Weather: return "weather";
  }
  return "?";
}

std::string_view display_name(Domain d) {
  switch (d) {
    case Domain::Economy: return "Economy";
    case Domain::Sociology: return "Sociology";
    case Domain::Weather: return "Weather";
  }
  return "?";
}

std::optional<AgentType> parse_agent_type(std::string_view s) {
  if (s == "human") return AgentType::Human;
  if (s == "llm") return AgentType::LLM;
  return std::nullopt;
}

std::optional<Domain> parse_domain(std::string_view s) {
  for (Domain d : kDomains) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

void JudgmentRecord::validate() const {
  if (agent_id.empty()) throw Error(ErrorCode::InvalidInput, "agent_id is empty");
  if (counterbalance < 1 || counterbalance > 4) {
    throw Error(ErrorCode::InvalidInput, "counterbalance " + std::to_string(counterbalance) + " outside 1-4");
  }
  const auto raw = static_cast<int>(task_id);
  if (raw < 1 || raw > static_cast<int>(kTaskCount)) throw Error(ErrorCode::UnknownTask, "task id out of range");
  if (!(response >= 0.0 && response <= 100.0)) {
    throw Error(ErrorCode::OutOfRange, "response " + std::to_string(response) + " outside [0, 100]");
  }
  if (temperature && !(*temperature >= 0.0)) throw Error(ErrorCode::InvalidInput, "temperature must be >= 0");
}

std::string JudgmentRecord::agent_label() const {
  if (agent_type == AgentType::Human) return "Human";
  return model_name.empty() ? agent_id : model_name;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "spearman inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::EmptyInput, "spearman needs at least two pairs");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const auto n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ConstantVector, "spearman input is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Interval bootstrap_ci(std::span<const double> values, std::size_t replicates, double level, std::uint64_t seed) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "bootstrap needs at least one value");
  if (replicates < 100) throw Error(ErrorCode::InvalidInput, "bootstrap needs >= 100 replicates");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidInput, "level must lie in (0, 1)");
  const std::size_t n = values.size();
  std::vector<double> means(replicates);
  for (std::size_t b = 0; b < replicates; ++b) {
    Rng rng(stream_seed(seed, b));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += values[uniform_index(rng, n)];
    means[b] = total / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = 0.5 * (1.0 - level);
  return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

std::vector<AggregateRow> aggregate(std::span<const JudgmentRecord> records, const GroupBy& group_by,
                                    const BootstrapOptions& bootstrap) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no judgment records to aggregate");
  using Key = std::tuple<int, std::string, int, int>;  // task, agent, domain, counterbalance
  std::map<Key, std::vector<double>> cells;
  for (const JudgmentRecord& r : records) {
    Key key{static_cast<int>(r.task_id), group_by.agent ? r.agent_label() : std::string(),
            group_by.domain ? static_cast<int>(r.domain) : -1, group_by.counterbalance ? r.counterbalance : -1};
    cells[key].push_back(r.response);
  }

  std::vector<AggregateRow> rows;
  rows.reserve(cells.size());
  for (auto& [key, values] : cells) {
    const auto& [task_raw, agent, domain_raw, cb] = key;
    // Sorting makes the resample (and so the CI) independent of input order.
    std::sort(values.begin(), values.end());
    AggregateRow row;
    row.task_id = static_cast<TaskId>(task_raw);
    row.group = task(row.task_id).group;
    row.agent = agent;
    if (domain_raw >= 0) row.domain = static_cast<Domain>(domain_raw);
    if (cb >= 0) row.counterbalance = cb;
    row.n = values.size();
    row.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(row.n);
    std::uint64_t cell_seed = fnv1a(agent, fnv1a(to_roman(row.task_id)));
    cell_seed = splitmix64(cell_seed + static_cast<std::uint64_t>(domain_raw + 1));
    cell_seed = splitmix64(cell_seed + static_cast<std::uint64_t>(cb + 1));
    const Interval ci = bootstrap_ci(values, bootstrap.replicates, bootstrap.level, bootstrap.seed ^ cell_seed);
    // A percentile interval can miss the mean on tiny skewed cells.
    row.ci_low = std::min(ci.low, row.mean);
    row.ci_high = std::max(ci.high, row.mean);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace collider
