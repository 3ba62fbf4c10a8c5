#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace collider {

// Collider C1 -> E <- C2 over binary variables.

enum class Variable : std::uint8_t { C1 = 0, C2 = 1, E = 2 };

inline constexpr std::array<Variable, 3> kVariables{Variable::C1, Variable::C2, Variable::E};

std::string_view to_string(Variable v);

enum class GeneratingFunction { Logistic, NoisyOr };

/// Which parameters are tied together. The first two are the 3- and
/// 4-parameter CBNs; the free-prior variants give each cause its own prior.
enum class Tying {
  SharedPriorSharedStrength,
  SharedPriorFreeStrength,
  FreePriorSharedStrength,
  FreePriorFreeStrength,
};

std::string_view to_string(GeneratingFunction g);
std::string_view to_string(Tying t);

inline constexpr double kStrengthBound = 3.0;

struct StateAssignment {
  bool c1 = false;
  bool c2 = false;
  bool e = false;

  /// Lexicographic over (c1, c2, e): (0,0,0) -> 0 ... (1,1,1) -> 7.
  constexpr std::size_t index() const {
    return (static_cast<std::size_t>(c1) << 2) | (static_cast<std::size_t>(c2) << 1) |
           static_cast<std::size_t>(e);
  }

  static constexpr StateAssignment from_index(std::size_t i) {
    return {(i & 4U) != 0, (i & 2U) != 0, (i & 1U) != 0};
  }

  constexpr bool value(Variable v) const {
    switch (v) {
      case Variable::C1: return c1;
      case Variable::C2: return c2;
      case Variable::E: return e;
    }
    return false;
  }

  constexpr StateAssignment flipped(Variable v) const {
    StateAssignment s = *this;
    switch (v) {
      case Variable::C1: s.c1 = !s.c1; break;
      case Variable::C2: s.c2 = !s.c2; break;
      case Variable::E: s.e = !s.e; break;
    }
    return s;
  }

  friend constexpr bool operator==(const StateAssignment&, const StateAssignment&) = default;
};

inline constexpr std::size_t kStateCount = 8;

constexpr std::array<StateAssignment, kStateCount> all_states() {
  std::array<StateAssignment, kStateCount> out{};
  for (std::size_t i = 0; i < kStateCount; ++i) out[i] = StateAssignment::from_index(i);
  return out;
}

inline constexpr StateAssignment kAllPresent{true, true, true};
inline constexpr StateAssignment kAllAbsent{false, false, false};

/// Free parameters of the collider CBN. Under NoisyOr the strength and bias
/// fields are causal powers / background rate and must lie in [0, 1].
struct ColliderParameters {
  double prior_c1 = 0.5;
  double prior_c2 = 0.5;
  double strength_c1 = 0.0;
  double strength_c2 = 0.0;
  double bias_e = 0.0;
  GeneratingFunction generating_function = GeneratingFunction::Logistic;
  Tying tying = Tying::FreePriorFreeStrength;

  /// Throws Error(ParameterOutOfRange) when a bound or tying constraint fails.
  void validate() const;

  /// 3-parameter model: shared prior w_C, shared strength w_{C,E}, bias w_E.
  static ColliderParameters shared(double prior, double strength, double bias,
                                   GeneratingFunction g = GeneratingFunction::Logistic);
  /// 4-parameter model with separate strengths.
  static ColliderParameters free_strength(double prior, double strength_c1, double strength_c2,
                                          double bias,
                                          GeneratingFunction g = GeneratingFunction::Logistic);

  /// Swap the roles of C1 and C2.
  ColliderParameters mirrored() const;

  friend bool operator==(const ColliderParameters&, const ColliderParameters&) = default;
};

/// p(E=1 | c1, c2) = sigmoid(s1*w1 + s2*w2 + wE), s_i = +1 present / -1 absent.
double logistic_effect_prob(const ColliderParameters& params, bool c1, bool c2);

/// p(E=1 | c1, c2) = 1 - (1-wE)(1-w1)^c1 (1-w2)^c2.
double noisy_or_effect_prob(const ColliderParameters& params, bool c1, bool c2);

/// Dispatches on params.generating_function.
double effect_prob(const ColliderParameters& params, bool c1, bool c2);

class JointTable {
 public:
  JointTable() = default;
  explicit JointTable(const std::array<double, kStateCount>& probs) : probs_(probs) {}

  double operator[](StateAssignment s) const { return probs_[s.index()]; }
  double at(std::size_t index) const { return probs_.at(index); }
  const std::array<double, kStateCount>& probs() const { return probs_; }
  double sum() const;
  bool strictly_positive() const;

 private:
  std::array<double, kStateCount> probs_{};
};

JointTable build_joint(const ColliderParameters& params);

/// p(query_var = query_value | evidence). Unobserved variables are nullopt.
struct EvidenceQuery {
  Variable query_var = Variable::C1;
  bool query_value = true;
  std::array<std::optional<bool>, 3> evidence{};

  static EvidenceQuery make(Variable query, bool value,
                            std::initializer_list<std::pair<Variable, bool>> observed);

  const std::optional<bool>& observed(Variable v) const {
    return evidence[static_cast<std::size_t>(v)];
  }
  bool matches_evidence(StateAssignment s) const;
  bool matches(StateAssignment s) const { return matches_evidence(s) && s.value(query_var) == query_value; }

  /// Throws Error(InvalidInput) if the query variable is also observed.
  void validate() const;

  /// Exchange the C1 and C2 roles.
  EvidenceQuery mirrored() const;

  /// Formal notation, e.g. "p(C1=1 | E=0, C2=1)". Evidence is listed E, C1, C2
  /// for cause queries and C1, C2 for effect queries.
  std::string notation() const;

  friend bool operator==(const EvidenceQuery&, const EvidenceQuery&) = default;
};

/// Throws Error(ZeroEvidenceMass) when the evidence has probability zero.
double conditional_prob(const JointTable& joint, const EvidenceQuery& query);

struct TaskSpec;

/// Exact CBN prediction for each task in catalog order.
std::vector<double> predict_task_battery(const ColliderParameters& params,
                                         std::span<const TaskSpec> tasks);

}  // namespace collider
