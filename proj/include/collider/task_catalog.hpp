#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "collider/causal_model.hpp"

namespace collider {

enum class TaskId : std::uint8_t { I = 1, II, III, IV, V, VI, VII, VIII, IX, X, XI };

inline constexpr std::size_t kTaskCount = 11;

enum class TaskGroup { Predictive, Independence, DiagnosticEffectPresent, DiagnosticEffectAbsent };

inline constexpr std::array<TaskGroup, 4> kTaskGroups{
    TaskGroup::Predictive, TaskGroup::Independence, TaskGroup::DiagnosticEffectPresent,
    TaskGroup::DiagnosticEffectAbsent};

/// One inference task. `mirrored` marks the C1<->C2 role-swapped
/// instantiation; `symmetric_variant` says whether such a mirror exists.
struct TaskSpec {
  TaskId id = TaskId::I;
  TaskGroup group = TaskGroup::Predictive;
  EvidenceQuery query;
  bool symmetric_variant = false;
  bool mirrored = false;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// The eleven canonical tasks, I..XI.
std::span<const TaskSpec> catalog();

const TaskSpec& task(TaskId id);

/// Role-swapped counterpart, or nullopt for I and III whose evidence is
/// already symmetric. Throws Error(UnknownTask) for non-catalog input.
std::optional<TaskSpec> symmetric_counterpart(const TaskSpec& task);

std::string_view to_roman(TaskId id);
std::optional<TaskId> parse_task_id(std::string_view roman);
constexpr std::size_t index_of(TaskId id) { return static_cast<std::size_t>(id) - 1; }

std::string_view to_string(TaskGroup group);
/// File-name friendly slug, e.g. "diagnostic_effect_present".
std::string_view slug(TaskGroup group);

}  // namespace collider
