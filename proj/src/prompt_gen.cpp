#include "collider/prompt_gen.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "collider/error.hpp"
#include "json.hpp"

namespace collider {

using nlohmann::json;

namespace {

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string lowercase_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

std::string join_phrases(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += (i + 1 == items.size()) ? (items.size() > 2 ? ", and " : " and ") : ", ";
    out += items[i];
  }
  return out;
}

std::string join_sections(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string get_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_string()) throw Error(ErrorCode::InvalidInput, where + ": field '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

VariableEntry parse_entry(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, where + " must be an object");
  VariableEntry e;
  e.noun = get_string(j, "noun", where);
  e.definition = get_string(j, "definition", where);
  e.active = get_string(j, "active", where);
  e.alternate = get_string(j, "alternate", where);
  e.baseline = get_string(j, "baseline", where);
  if (j.contains("described")) e.described = get_string(j, "described", where);
  return e;
}

}  // namespace

DomainVocabulary parse_vocabulary(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, source + ": " + e.what());
  }
  DomainVocabulary v;
  const std::string domain = get_string(j, "domain", source);
  const auto d = parse_domain(domain);
  if (!d) throw Error(ErrorCode::InvalidInput, source + ": unknown domain '" + domain + "'");
  v.domain = *d;
  v.introduction = get_string(j, "introduction", source);
  v.unit_singular = get_string(j, "unit_singular", source);
  v.unit_plural = get_string(j, "unit_plural", source);
  v.reconstructed = j.value("reconstructed", false);
  if (!j.contains("variables") || !j.at("variables").is_object()) {
    throw Error(ErrorCode::InvalidInput, source + ": missing 'variables' object");
  }
  for (const Variable var : kVariables) {
    const std::string name(to_string(var));
    if (!j.at("variables").contains(name)) {
      throw Error(ErrorCode::InvalidInput, source + ": missing variable " + name);
    }
    v.variables[static_cast<std::size_t>(var)] = parse_entry(j.at("variables").at(name), source + ": variables." + name);
  }
  if (j.contains("templates")) {
    const json& t = j.at("templates");
    auto override_field = [&](const char* key, std::string& field) {
      if (t.contains(key)) field = get_string(t, key, source + ": templates");
    };
    override_field("variables_intro", v.templates.variables_intro);
    override_field("variable_description", v.templates.variable_description);
    override_field("mechanism_intro", v.templates.mechanism_intro);
    override_field("mechanism_first", v.templates.mechanism_first);
    override_field("mechanism_second", v.templates.mechanism_second);
    override_field("observation", v.templates.observation);
    override_field("question", v.templates.question);
    override_field("separator", v.templates.separator);
  }
  return v;
}

DomainVocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open vocabulary " + path.string());
  return parse_vocabulary(in, path.string());
}

std::vector<DomainVocabulary> load_vocabularies(const std::filesystem::path& dir) {
  std::vector<DomainVocabulary> out;
  for (const Domain d : kDomains) {
    DomainVocabulary v = load_vocabulary(dir / (std::string(to_string(d)) + ".json"));
    if (v.domain != d) {
      throw Error(ErrorCode::InvalidInput, "vocabulary file for " + std::string(to_string(d)) + " declares another domain");
    }
    out.push_back(std::move(v));
  }
  return out;
}

CounterbalanceCode CounterbalanceCode::from_code(int code) {
  if (code < 1 || code > 4) throw Error(ErrorCode::InvalidInput, "counterbalance code must be 1-4");
  const int bits = code - 1;
  return {code, (bits & 1) != 0, (bits & 2) != 0};
}

std::array<CounterbalanceCode, 4> CounterbalanceCode::all() {
  return {from_code(1), from_code(2), from_code(3), from_code(4)};
}

std::string fill_template(const std::string& tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string::npos) {
      throw Error(ErrorCode::TemplateSlotUnresolved, "unterminated slot in template: " + tmpl);
    }
    out.append(tmpl, pos, open - pos);
    const std::string name = tmpl.substr(open + 1, close - open - 1);
    auto it = slots.find(name);
    bool capital = false;
    if (it == slots.end() && !name.empty() && std::isupper(static_cast<unsigned char>(name[0]))) {
      it = slots.find(lowercase_first(name));
      capital = true;
    }
    if (it == slots.end() || it->second.empty()) {
      throw Error(ErrorCode::TemplateSlotUnresolved, "slot {" + name + "} has no value");
    }
    out += capital ? capitalize(it->second) : it->second;
    pos = close + 1;
  }
  return out;
}

std::string state_phrase(const DomainVocabulary& vocab, const CounterbalanceCode& cb, Variable v, bool value) {
  const VariableEntry& e = vocab.entry(v);
  std::string adjective;
  if (!value) {
    adjective = e.baseline;
  } else {
    const bool flip = (v == Variable::C1 && cb.flip_c1) || (v == Variable::C2 && cb.flip_c2);
    adjective = flip ? e.alternate : e.active;
  }
  if (adjective.empty() || e.noun.empty()) {
    throw Error(ErrorCode::TemplateSlotUnresolved,
                "vocabulary has no adjective/noun for " + std::string(to_string(v)) + "=" + (value ? "1" : "0"));
  }
  return adjective + " " + e.noun;
}

PromptBundle render_prompt(const DomainVocabulary& vocab, const CounterbalanceCode& cb, const TaskSpec& t) {
  const PromptTemplate& tpl = vocab.templates;
  PromptBundle b;
  b.domain = vocab.domain;
  b.counterbalance = cb.code;
  b.task = t;
  b.reconstructed_vocabulary = vocab.reconstructed;

  if (vocab.introduction.empty()) throw Error(ErrorCode::TemplateSlotUnresolved, "vocabulary has no introduction");
  b.sections.introduction = vocab.introduction;

  std::vector<std::string> var_parts{tpl.variables_intro};
  for (const Variable v : kVariables) {
    const VariableEntry& e = vocab.entry(v);
    std::string described = state_phrase(vocab, cb, v, true);
    if (e.described) described = *e.described + " " + e.noun;
    var_parts.push_back(fill_template(tpl.variable_description, {{"definition", e.definition},
                                                                 {"units", vocab.unit_plural},
                                                                 {"described", described},
                                                                 {"baseline", state_phrase(vocab, cb, v, false)}}));
  }
  b.sections.variables = join_sections(var_parts, tpl.separator);

  const std::string effect = state_phrase(vocab, cb, Variable::E, true);
  b.sections.mechanism = join_sections(
      {tpl.mechanism_intro,
       fill_template(tpl.mechanism_first, {{"cause", state_phrase(vocab, cb, Variable::C1, true)}, {"effect", effect}}),
       fill_template(tpl.mechanism_second, {{"cause", state_phrase(vocab, cb, Variable::C2, true)}, {"effect", effect}})},
      tpl.separator);

  // Effect first, then causes: the same order as the formal notation.
  std::vector<std::string> observed;
  for (const Variable v : {Variable::E, Variable::C1, Variable::C2}) {
    if (const auto& value = t.query.observed(v)) observed.push_back(state_phrase(vocab, cb, v, *value));
  }
  b.sections.observation =
      fill_template(tpl.observation, {{"unit", vocab.unit_singular}, {"observations", join_phrases(observed)}});

  b.sections.question =
      fill_template(tpl.question, {{"query", state_phrase(vocab, cb, t.query.query_var, t.query.query_value)}});

  b.full_text = join_sections({b.sections.introduction, b.sections.variables, b.sections.mechanism,
                               b.sections.observation, b.sections.question},
                              tpl.separator);
  return b;
}

std::vector<PromptBundle> prompt_matrix(std::span<const DomainVocabulary> vocabs, std::span<const TaskSpec> tasks) {
  if (vocabs.empty() || tasks.empty()) throw Error(ErrorCode::EmptyInput, "prompt matrix needs vocabularies and tasks");
  std::vector<PromptBundle> out;
  out.reserve(vocabs.size() * 4 * tasks.size());
  for (const DomainVocabulary& v : vocabs) {
    for (const CounterbalanceCode& cb : CounterbalanceCode::all()) {
      for (const TaskSpec& t : tasks) out.push_back(render_prompt(v, cb, t));
    }
  }
  return out;
}

void write_bundles(std::ostream& out, std::span<const PromptBundle> bundles) {
  for (const PromptBundle& b : bundles) {
    json j;
    j["domain"] = to_string(b.domain);
    j["counterbalance"] = b.counterbalance;
    j["task_id"] = to_roman(b.task.id);
    j["mirrored"] = b.task.mirrored;
    j["query"] = b.task.query.notation();
    j["reconstructed_vocabulary"] = b.reconstructed_vocabulary;
    j["sections"] = {{"introduction", b.sections.introduction},
                     {"variables", b.sections.variables},
                     {"mechanism", b.sections.mechanism},
                     {"observation", b.sections.observation},
                     {"question", b.sections.question}};
    j["full_text"] = b.full_text;
    out << j.dump() << '\n';
  }
}

std::vector<PromptBundle> read_bundles(std::istream& in, const std::string& source) {
  std::vector<PromptBundle> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      PromptBundle b;
      const auto domain = parse_domain(j.at("domain").get<std::string>());
      if (!domain) throw Error(ErrorCode::InvalidInput, where + ": unknown domain");
      b.domain = *domain;
      b.counterbalance = CounterbalanceCode::from_code(j.at("counterbalance").get<int>()).code;
      const auto id = parse_task_id(j.at("task_id").get<std::string>());
      if (!id) throw Error(ErrorCode::UnknownTask, where + ": unknown task id");
      b.task = task(*id);
      if (j.value("mirrored", false)) {
        auto mirror = symmetric_counterpart(b.task);
        if (!mirror) throw Error(ErrorCode::UnknownTask, where + ": task has no mirrored variant");
        b.task = *mirror;
      }
      b.reconstructed_vocabulary = j.value("reconstructed_vocabulary", false);
      const json& s = j.at("sections");
      b.sections = {s.at("introduction").get<std::string>(), s.at("variables").get<std::string>(),
                    s.at("mechanism").get<std::string>(), s.at("observation").get<std::string>(),
                    s.at("question").get<std::string>()};
      b.full_text = j.at("full_text").get<std::string>();
      if (b.full_text.empty()) throw Error(ErrorCode::InvalidInput, where + ": empty prompt text");
      out.push_back(std::move(b));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace collider
