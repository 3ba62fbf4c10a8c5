#include "collider/mutation_sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "collider/error.hpp"

namespace collider {

namespace {

constexpr std::size_t kBlockSize = 256;

// Per-state acceptance probabilities for flipping each variable.
using AcceptanceTable = std::array<std::array<double, 3>, kStateCount>;

AcceptanceTable acceptance_table(const JointTable& joint) {
  AcceptanceTable table{};
  for (const StateAssignment s : all_states()) {
    for (const Variable v : kVariables) {
      table[s.index()][static_cast<std::size_t>(v)] = acceptance_probability(joint, s, s.flipped(v));
    }
  }
  return table;
}

template <class Engine>
StateAssignment draw_prototype(const SamplerConfig& config, Engine& rng) {
  return uniform01(rng) < config.prototype_weights[0] ? kAllPresent : kAllAbsent;
}

template <class Engine>
StateAssignment step(const AcceptanceTable& table, StateAssignment current, Engine& rng) {
  const auto var = static_cast<Variable>(uniform_index(rng, 3));
  const double u = uniform01(rng);
  return u < table[current.index()][static_cast<std::size_t>(var)] ? current.flipped(var) : current;
}

using Histogram = std::array<std::uint32_t, kStateCount>;

struct QueryMasks {
  std::array<bool, kStateCount> evidence{};
  std::array<bool, kStateCount> joint{};
};

QueryMasks masks_for(const EvidenceQuery& q) {
  QueryMasks m;
  for (const StateAssignment s : all_states()) {
    m.evidence[s.index()] = q.matches_evidence(s);
    m.joint[s.index()] = q.matches(s);
  }
  return m;
}

double histogram_estimate(const Histogram& h, const QueryMasks& m, double fallback) {
  std::uint64_t evidence = 0;
  std::uint64_t joint = 0;
  for (std::size_t i = 0; i < kStateCount; ++i) {
    if (m.evidence[i]) evidence += h[i];
    if (m.joint[i]) joint += h[i];
  }
  if (evidence == 0) return fallback;
  return static_cast<double>(joint) / static_cast<double>(evidence);
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(chain_length >= 1.0) || !std::isfinite(chain_length)) {
    throw Error(ErrorCode::InvalidInput, "chain_length must be a finite value >= 1");
  }
  if (chain_count < 1) throw Error(ErrorCode::InvalidInput, "chain_count must be >= 1");
  if (prototype_weights[0] < 0 || prototype_weights[1] < 0 ||
      std::abs(prototype_weights[0] + prototype_weights[1] - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidInput, "prototype_weights must be non-negative and sum to 1");
  }
  if (!(empty_evidence_fallback >= 0.0 && empty_evidence_fallback <= 1.0)) {
    throw Error(ErrorCode::InvalidInput, "empty_evidence_fallback must lie in [0, 1]");
  }
}

double acceptance_probability(const JointTable& joint, StateAssignment from, StateAssignment to) {
  const double p_from = joint[from];
  if (!(p_from > 0.0)) {
    std::ostringstream msg;
    msg << "state (" << from.c1 << ',' << from.c2 << ',' << from.e << ") has probability 0";
    throw Error(ErrorCode::DegenerateJoint, msg.str());
  }
  return std::min(1.0, joint[to] / p_from);
}

StateAssignment transition_step(const JointTable& joint, StateAssignment current, Rng& rng) {
  const auto var = static_cast<Variable>(uniform_index(rng, 3));
  const double u = uniform01(rng);
  const StateAssignment proposal = current.flipped(var);
  return u < acceptance_probability(joint, current, proposal) ? proposal : current;
}

std::array<std::array<double, kStateCount>, kStateCount> transition_matrix(const JointTable& joint) {
  std::array<std::array<double, kStateCount>, kStateCount> k{};
  for (const StateAssignment s : all_states()) {
    double leave = 0.0;
    for (const Variable v : kVariables) {
      const StateAssignment t = s.flipped(v);
      const double p = acceptance_probability(joint, s, t) / 3.0;
      k[s.index()][t.index()] = p;
      leave += p;
    }
    k[s.index()][s.index()] = 1.0 - leave;
  }
  return k;
}

ChainRecord run_chain(const JointTable& joint, const SamplerConfig& config, Rng& rng) {
  config.validate();
  const auto length = static_cast<std::size_t>(std::ceil(config.chain_length));
  ChainRecord chain;
  chain.states.reserve(length);
  chain.states.push_back(draw_prototype(config, rng));
  while (chain.states.size() < length) {
    chain.states.push_back(transition_step(joint, chain.states.back(), rng));
  }
  return chain;
}

double chain_estimate(const ChainRecord& chain, const EvidenceQuery& query, double fallback) {
  std::size_t evidence = 0;
  std::size_t joint = 0;
  for (const StateAssignment s : chain.states) {
    if (!query.matches_evidence(s)) continue;
    ++evidence;
    if (s.value(query.query_var) == query.query_value) ++joint;
  }
  if (evidence == 0) return fallback;
  return static_cast<double>(joint) / static_cast<double>(evidence);
}

std::vector<double> expected_predictions(const ColliderParameters& params, const SamplerConfig& config,
                                         std::span<const EvidenceQuery> queries) {
  config.validate();
  const JointTable joint = build_joint(params);
  if (!joint.strictly_positive()) {
    throw Error(ErrorCode::DegenerateJoint, "mutation sampler needs a strictly positive joint");
  }
  const AcceptanceTable table = acceptance_table(joint);

  std::vector<QueryMasks> masks;
  masks.reserve(queries.size());
  for (const auto& q : queries) {
    q.validate();
    masks.push_back(masks_for(q));
  }

  // The floor-length chain is a prefix of the ceil-length chain drawn from
  // the same stream, so one walk yields both interpolation endpoints.
  const double lo_len = std::floor(config.chain_length);
  const auto hi_len = static_cast<std::size_t>(std::ceil(config.chain_length));
  const auto lo_steps = static_cast<std::size_t>(lo_len);
  const double hi_weight = config.chain_length - lo_len;
  const double lo_weight = 1.0 - hi_weight;
  const std::size_t nq = queries.size();
  const double fallback = config.empty_evidence_fallback;

  const std::size_t blocks = (config.chain_count + kBlockSize - 1) / kBlockSize;
  std::vector<std::vector<double>> block_sums(blocks, std::vector<double>(nq, 0.0));

  auto run_block = [&](std::size_t b) {
    std::vector<double>& sums = block_sums[b];
    const std::size_t first = b * kBlockSize;
    const std::size_t last = std::min(config.chain_count, first + kBlockSize);
    for (std::size_t c = first; c < last; ++c) {
      SplitMix64 rng(stream_seed(config.seed, c));
      Histogram hist{};
      StateAssignment s = draw_prototype(config, rng);
      ++hist[s.index()];
      Histogram lo_hist = hist;
      for (std::size_t n = 1; n < hi_len; ++n) {
        if (n == lo_steps) lo_hist = hist;
        s = step(table, s, rng);
        ++hist[s.index()];
      }
      if (hi_len == lo_steps) lo_hist = hist;
      for (std::size_t q = 0; q < nq; ++q) {
        double est = lo_weight * histogram_estimate(lo_hist, masks[q], fallback);
        if (hi_weight > 0.0) est += hi_weight * histogram_estimate(hist, masks[q], fallback);
        sums[q] += est;
      }
    }
  };

  const unsigned workers = std::max(1U, std::min<unsigned>(config.threads, static_cast<unsigned>(blocks)));
  if (workers == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < blocks; b = next++) run_block(b);
      });
    }
  }

  std::vector<double> out(nq, 0.0);
  for (const auto& sums : block_sums) {
    for (std::size_t q = 0; q < nq; ++q) out[q] += sums[q];
  }
  for (double& v : out) v /= static_cast<double>(config.chain_count);
  return out;
}

std::vector<double> expected_predictions(const ColliderParameters& params, const SamplerConfig& config,
                                         std::span<const TaskSpec> tasks) {
  std::vector<EvidenceQuery> queries;
  queries.reserve(tasks.size());
  for (const auto& t : tasks) queries.push_back(t.query);
  return expected_predictions(params, config, queries);
}

}  // namespace collider
