#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collider/stats.hpp"
#include "collider/task_catalog.hpp"

namespace collider {

/// One variable of a cover story. `active` is the adjective for the causally
/// active (value 1) state under the canonical counterbalance, `alternate` the
/// adjective it flips to, `baseline` the value-0 adjective. `described`
/// overrides the adjective used in the variable's introductory sentence.
struct VariableEntry {
  std::string noun;
  std::string definition;
  std::string active;
  std::string alternate;
  std::string baseline;
  std::optional<std::string> described;
};

/// Sentence templates; `{slot}` is substituted, `{Slot}` capitalizes the value.
struct PromptTemplate {
  std::string variables_intro = "Here are some variables:";
  std::string variable_description = "{definition} Some {units} have {described}. Others have {baseline}.";
  std::string mechanism_intro = "Assume you live in a world that works like this:";
  std::string mechanism_first = "{Cause} causes {effect}.";
  std::string mechanism_second = "Also, {cause} causes {effect}.";
  std::string observation = "Suppose that the {unit} you live in currently exhibits the following: {observations}.";
  std::string question =
      "Given the observations and the causal mechanism, how likely on a scale from 0 to 100 is {query}? "
      "0 means definitely not likely and 100 means definitely likely. "
      "Please provide only a numeric response and no additional information.";
  std::string separator = " ";
};

struct DomainVocabulary {
  Domain domain = Domain::Sociology;
  std::string introduction;
  std::string unit_singular;
  std::string unit_plural;
  std::array<VariableEntry, 3> variables;  // C1, C2, E
  PromptTemplate templates;
  /// True when the wording is not taken from the original materials.
  bool reconstructed = false;

  const VariableEntry& entry(Variable v) const { return variables[static_cast<std::size_t>(v)]; }
};

DomainVocabulary parse_vocabulary(std::istream& in, const std::string& source = "<stream>");
DomainVocabulary load_vocabulary(const std::filesystem::path& path);
/// Loads economy, sociology and weather (in that order) from `dir`.
std::vector<DomainVocabulary> load_vocabularies(const std::filesystem::path& dir);

/// Codes 1-4 enumerate the 2x2 polarity flips of the two causes; code 1 is
/// the canonical assignment.
struct CounterbalanceCode {
  int code = 1;
  bool flip_c1 = false;
  bool flip_c2 = false;

  static CounterbalanceCode from_code(int code);
  static std::array<CounterbalanceCode, 4> all();
};

struct PromptSections {
  std::string introduction;
  std::string variables;
  std::string mechanism;
  std::string observation;
  std::string question;
};

struct PromptBundle {
  Domain domain = Domain::Sociology;
  int counterbalance = 1;
  TaskSpec task;
  PromptSections sections;
  std::string full_text;
  bool reconstructed_vocabulary = false;
};

/// Adjective + noun for a variable in the given state under a counterbalance.
std::string state_phrase(const DomainVocabulary& vocab, const CounterbalanceCode& cb, Variable v, bool value);

/// Throws Error(TemplateSlotUnresolved) if a slot has no (non-empty) value.
std::string fill_template(const std::string& tmpl, const std::map<std::string, std::string>& slots);

PromptBundle render_prompt(const DomainVocabulary& vocab, const CounterbalanceCode& cb, const TaskSpec& task);

/// domains x 4 counterbalances x tasks, in that nesting order.
std::vector<PromptBundle> prompt_matrix(std::span<const DomainVocabulary> vocabs, std::span<const TaskSpec> tasks);

void write_bundles(std::ostream& out, std::span<const PromptBundle> bundles);
std::vector<PromptBundle> read_bundles(std::istream& in, const std::string& source = "<stream>");

}  // namespace collider
