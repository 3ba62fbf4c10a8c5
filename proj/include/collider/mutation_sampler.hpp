#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "collider/causal_model.hpp"
#include "collider/rng.hpp"
#include "collider/task_catalog.hpp"

namespace collider {

// Mutation sampler: a single-flip Metropolis walk over the 8 collider states,
// started at a prototype (all present / all absent). Conditionals are read off
// the visited states, so short chains inherit the prototypes' associative bias.

struct SamplerConfig {
  /// Number of recorded states, start included. Non-integers interpolate
  /// linearly between floor and ceil.
  double chain_length = 1.0;
  std::size_t chain_count = 1000;
  std::uint64_t seed = 0;
  /// Start-state distribution over {all present, all absent}.
  std::array<double, 2> prototype_weights{0.5, 0.5};
  /// Estimate used when a chain never visits a state matching the evidence.
  double empty_evidence_fallback = 0.5;
  /// Worker threads for chain batches; results do not depend on this.
  unsigned threads = 1;

  void validate() const;
};

struct ChainRecord {
  std::vector<StateAssignment> states;
};

/// min(1, pi(to) / pi(from)). Throws Error(DegenerateJoint) if pi(from) == 0.
double acceptance_probability(const JointTable& joint, StateAssignment from, StateAssignment to);

/// Uniformly picks one variable, proposes flipping it, accepts with the
/// Metropolis ratio. Consumes exactly two draws from `rng`.
StateAssignment transition_step(const JointTable& joint, StateAssignment current, Rng& rng);

/// Exact one-step transition matrix of `transition_step`; row = from state.
std::array<std::array<double, kStateCount>, kStateCount> transition_matrix(const JointTable& joint);

/// ceil(chain_length) states starting at a prototype drawn from the weights.
ChainRecord run_chain(const JointTable& joint, const SamplerConfig& config, Rng& rng);

double chain_estimate(const ChainRecord& chain, const EvidenceQuery& query, double fallback);

/// Monte Carlo expectation of chain_estimate over config.chain_count chains.
/// Chain i draws from a SplitMix64 stream seeded with
/// stream_seed(config.seed, i); every query is read off the same chains.
/// Requires a strictly positive joint.
std::vector<double> expected_predictions(const ColliderParameters& params, const SamplerConfig& config,
                                         std::span<const EvidenceQuery> queries);

std::vector<double> expected_predictions(const ColliderParameters& params, const SamplerConfig& config,
                                         std::span<const TaskSpec> tasks);

}  // namespace collider
