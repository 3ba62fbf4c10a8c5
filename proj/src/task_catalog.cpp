#include "collider/task_catalog.hpp"

#include <array>
#include <string>

#include "collider/error.hpp"

namespace collider {

namespace {

using V = Variable;

std::array<TaskSpec, kTaskCount> make_catalog() {
  const auto predictive = TaskGroup::Predictive;
  const auto independence = TaskGroup::Independence;
  const auto present = TaskGroup::DiagnosticEffectPresent;
  const auto absent = TaskGroup::DiagnosticEffectAbsent;
  return {{
      {TaskId::I, predictive, EvidenceQuery::make(V::E, true, {{V::C1, false}, {V::C2, false}}), false},
      {TaskId::II, predictive, EvidenceQuery::make(V::E, true, {{V::C1, true}, {V::C2, false}}), true},
      {TaskId::III, predictive, EvidenceQuery::make(V::E, true, {{V::C1, true}, {V::C2, true}}), false},
      {TaskId::IV, independence, EvidenceQuery::make(V::C1, true, {{V::C2, false}}), true},
      {TaskId::V, independence, EvidenceQuery::make(V::C1, true, {{V::C2, true}}), true},
      {TaskId::VI, present, EvidenceQuery::make(V::C1, true, {{V::E, true}, {V::C2, true}}), true},
      {TaskId::VII, present, EvidenceQuery::make(V::C1, true, {{V::E, true}}), true},
      {TaskId::VIII, present, EvidenceQuery::make(V::C1, true, {{V::E, true}, {V::C2, false}}), true},
      {TaskId::IX, absent, EvidenceQuery::make(V::C1, true, {{V::E, false}, {V::C2, true}}), true},
      {TaskId::X, absent, EvidenceQuery::make(V::C1, true, {{V::E, false}}), true},
      {TaskId::XI, absent, EvidenceQuery::make(V::C1, true, {{V::E, false}, {V::C2, false}}), true},
  }};
}

const std::array<TaskSpec, kTaskCount>& catalog_storage() {
  static const std::array<TaskSpec, kTaskCount> tasks = make_catalog();
  return tasks;
}

constexpr std::array<std::string_view, kTaskCount> kRoman{"I",   "II", "III", "IV", "V", "VI",
                                                          "VII", "VIII", "IX", "X",  "XI"};

}  // namespace

std::span<const TaskSpec> catalog() { return catalog_storage(); }

const TaskSpec& task(TaskId id) { return catalog_storage().at(index_of(id)); }

std::optional<TaskSpec> symmetric_counterpart(const TaskSpec& t) {
  const auto raw = static_cast<std::size_t>(t.id);
  if (raw < 1 || raw > kTaskCount) throw Error(ErrorCode::UnknownTask, "task id out of range");
  const TaskSpec& canonical = task(t.id);
  const bool known = t.mirrored ? (canonical.symmetric_variant && t.query == canonical.query.mirrored())
                                : t.query == canonical.query;
  if (!known || t.group != canonical.group) {
    throw Error(ErrorCode::UnknownTask,
                "task " + t.query.notation() + " is not in the catalog under id " +
                    std::string(to_roman(t.id)));
  }
  if (!canonical.symmetric_variant) return std::nullopt;
  TaskSpec out = t;
  out.query = t.query.mirrored();
  out.mirrored = !t.mirrored;
  return out;
}

std::string_view to_roman(TaskId id) {
  const auto raw = static_cast<std::size_t>(id);
  if (raw < 1 || raw > kTaskCount) return "?";
  return kRoman[raw - 1];
}

std::optional<TaskId> parse_task_id(std::string_view roman) {
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    if (kRoman[i] == roman) return static_cast<TaskId>(i + 1);
  }
  return std::nullopt;
}

std::string_view to_string(TaskGroup group) {
  switch (group) {
    case TaskGroup::Predictive: return "Predictive Inference";
    case TaskGroup::Independence: return "Independence of Causes";
    case TaskGroup::DiagnosticEffectPresent: return "Diagnostic Inference (E=1)";
    case TaskGroup::DiagnosticEffectAbsent: return "Diagnostic Inference (E=0)";
  }
  return "?";
}

std::string_view slug(TaskGroup group) {
  switch (group) {
    case TaskGroup::Predictive: return "predictive";
    case TaskGroup::Independence: return "independence";
    case TaskGroup::DiagnosticEffectPresent: return "diagnostic_effect_present";
    case TaskGroup::DiagnosticEffectAbsent: return "diagnostic_effect_absent";
  }
  return "unknown";
}

}  // namespace collider
