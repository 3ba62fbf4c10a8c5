#include "collider/causal_model.hpp"

#include <cmath>
#include <sstream>

#include "collider/error.hpp"
#include "collider/task_catalog.hpp"

namespace collider {

namespace {

bool shared_prior(Tying t) {
  return t == Tying::SharedPriorSharedStrength || t == Tying::SharedPriorFreeStrength;
}

bool shared_strength(Tying t) {
  return t == Tying::SharedPriorSharedStrength || t == Tying::FreePriorSharedStrength;
}

void require_in(double value, double lo, double hi, const char* name) {
  if (!(value >= lo && value <= hi)) {
    std::ostringstream msg;
    msg << name << " = " << value << " outside [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::ParameterOutOfRange, msg.str());
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

}  // namespace

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::C1: return "C1";
    case Variable::C2: return "C2";
    case Variable::E: return "E";
  }
  return "?";
}

std::string_view to_string(GeneratingFunction g) {
  return g == GeneratingFunction::Logistic ? "logistic" : "noisyor";
}

std::string_view to_string(Tying t) {
  switch (t) {
    case Tying::SharedPriorSharedStrength: return "3p";
    case Tying::SharedPriorFreeStrength: return "4p";
    case Tying::FreePriorSharedStrength: return "freeprior";
    case Tying::FreePriorFreeStrength: return "freeprior4p";
  }
  return "?";
}

void ColliderParameters::validate() const {
  require_in(prior_c1, 0.0, 1.0, "prior_c1");
  require_in(prior_c2, 0.0, 1.0, "prior_c2");
  if (generating_function == GeneratingFunction::Logistic) {
    require_in(strength_c1, -kStrengthBound, kStrengthBound, "strength_c1");
    require_in(strength_c2, -kStrengthBound, kStrengthBound, "strength_c2");
    require_in(bias_e, -kStrengthBound, kStrengthBound, "bias_e");
  } else {
    require_in(strength_c1, 0.0, 1.0, "strength_c1");
    require_in(strength_c2, 0.0, 1.0, "strength_c2");
    require_in(bias_e, 0.0, 1.0, "bias_e");
  }
  if (shared_prior(tying) && prior_c1 != prior_c2) {
    throw Error(ErrorCode::ParameterOutOfRange, "tying requires prior_c1 == prior_c2");
  }
  if (shared_strength(tying) && strength_c1 != strength_c2) {
    throw Error(ErrorCode::ParameterOutOfRange, "tying requires strength_c1 == strength_c2");
  }
}

ColliderParameters ColliderParameters::shared(double prior, double strength, double bias,
                                              GeneratingFunction g) {
  return {prior, prior, strength, strength, bias, g, Tying::SharedPriorSharedStrength};
}

ColliderParameters ColliderParameters::free_strength(double prior, double strength_c1,
                                                     double strength_c2, double bias,
                                                     GeneratingFunction g) {
  return {prior, prior, strength_c1, strength_c2, bias, g, Tying::SharedPriorFreeStrength};
}

ColliderParameters ColliderParameters::mirrored() const {
  ColliderParameters out = *this;
  std::swap(out.prior_c1, out.prior_c2);
  std::swap(out.strength_c1, out.strength_c2);
  return out;
}

double logistic_effect_prob(const ColliderParameters& params, bool c1, bool c2) {
  const double s1 = c1 ? 1.0 : -1.0;
  const double s2 = c2 ? 1.0 : -1.0;
  return sigmoid(s1 * params.strength_c1 + s2 * params.strength_c2 + params.bias_e);
}

double noisy_or_effect_prob(const ColliderParameters& params, bool c1, bool c2) {
  require_in(params.strength_c1, 0.0, 1.0, "strength_c1");
  require_in(params.strength_c2, 0.0, 1.0, "strength_c2");
  require_in(params.bias_e, 0.0, 1.0, "bias_e");
  double absent = 1.0 - params.bias_e;
  if (c1) absent *= 1.0 - params.strength_c1;
  if (c2) absent *= 1.0 - params.strength_c2;
  return 1.0 - absent;
}

double effect_prob(const ColliderParameters& params, bool c1, bool c2) {
  return params.generating_function == GeneratingFunction::Logistic
             ? logistic_effect_prob(params, c1, c2)
             : noisy_or_effect_prob(params, c1, c2);
}

double JointTable::sum() const {
  double total = 0.0;
  for (double p : probs_) total += p;
  return total;
}

bool JointTable::strictly_positive() const {
  for (double p : probs_) {
    if (!(p > 0.0)) return false;
  }
  return true;
}

JointTable build_joint(const ColliderParameters& params) {
  params.validate();
  std::array<double, kStateCount> probs{};
  for (const StateAssignment s : all_states()) {
    const double p_e1 = effect_prob(params, s.c1, s.c2);
    const double p_c1 = s.c1 ? params.prior_c1 : 1.0 - params.prior_c1;
    const double p_c2 = s.c2 ? params.prior_c2 : 1.0 - params.prior_c2;
    probs[s.index()] = (s.e ? p_e1 : 1.0 - p_e1) * p_c1 * p_c2;
  }
  return JointTable(probs);
}

EvidenceQuery EvidenceQuery::make(Variable query, bool value,
                                  std::initializer_list<std::pair<Variable, bool>> observed) {
  EvidenceQuery q;
  q.query_var = query;
  q.query_value = value;
  for (const auto& [var, val] : observed) q.evidence[static_cast<std::size_t>(var)] = val;
  q.validate();
  return q;
}

bool EvidenceQuery::matches_evidence(StateAssignment s) const {
  for (const Variable v : kVariables) {
    const auto& obs = observed(v);
    if (obs && *obs != s.value(v)) return false;
  }
  return true;
}

void EvidenceQuery::validate() const {
  if (observed(query_var)) {
    throw Error(ErrorCode::InvalidInput,
                "query variable " + std::string(to_string(query_var)) + " is also observed");
  }
}

EvidenceQuery EvidenceQuery::mirrored() const {
  EvidenceQuery q = *this;
  if (query_var == Variable::C1) {
    q.query_var = Variable::C2;
  } else if (query_var == Variable::C2) {
    q.query_var = Variable::C1;
  }
  std::swap(q.evidence[0], q.evidence[1]);
  return q;
}

std::string EvidenceQuery::notation() const {
  std::ostringstream out;
  out << "p(" << to_string(query_var) << '=' << (query_value ? 1 : 0);
  bool first = true;
  for (const Variable v : {Variable::E, Variable::C1, Variable::C2}) {
    const auto& obs = observed(v);
    if (!obs) continue;
    out << (first ? " | " : ", ") << to_string(v) << '=' << (*obs ? 1 : 0);
    first = false;
  }
  out << ')';
  return out.str();
}

double conditional_prob(const JointTable& joint, const EvidenceQuery& query) {
  query.validate();
  double evidence_mass = 0.0;
  double joint_mass = 0.0;
  for (const StateAssignment s : all_states()) {
    if (!query.matches_evidence(s)) continue;
    evidence_mass += joint[s];
    if (s.value(query.query_var) == query.query_value) joint_mass += joint[s];
  }
  if (!(evidence_mass > 0.0)) {
    throw Error(ErrorCode::ZeroEvidenceMass, "evidence of " + query.notation() + " has probability 0");
  }
  return joint_mass / evidence_mass;
}

std::vector<double> predict_task_battery(const ColliderParameters& params,
                                         std::span<const TaskSpec> tasks) {
  if (tasks.empty()) throw Error(ErrorCode::EmptyInput, "task list is empty");
  const JointTable joint = build_joint(params);
  std::vector<double> out;
  out.reserve(tasks.size());
  for (const TaskSpec& task : tasks) {
    try {
      out.push_back(conditional_prob(joint, task.query));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroEvidenceMass) throw;
      throw Error(ErrorCode::ZeroEvidenceMass,
                  "task " + std::string(to_roman(task.id)) + " " + task.query.notation() +
                      ": evidence has probability 0");
    }
  }
  return out;
}

}  // namespace collider
