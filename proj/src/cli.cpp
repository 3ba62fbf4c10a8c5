#include "collider/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "collider/causal_model.hpp"
#include "collider/error.hpp"
#include "collider/fitting.hpp"
#include "collider/judgment_io.hpp"
#include "collider/llm_harness.hpp"
#include "collider/mutation_sampler.hpp"
#include "collider/prompt_gen.hpp"
#include "collider/rng.hpp"
#include "collider/stats.hpp"
#include "collider/task_catalog.hpp"
#include "json.hpp"

namespace collider {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- helpers --

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);  // no "-0.000"
  return s;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + '\n';
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Inputs are identified by name and content digest, never by location, so
/// manifests do not change when the same data lives in another directory.
json fingerprint(const fs::path& path) {
  return {{"name", path.filename().string()}, {"sha256", sha256_hex(read_file(path))}};
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Collects output files in memory and publishes them together. Files are
/// first written under temporary names; anything not committed is removed.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [name, content] : files_) fs::remove(temp_path(name), ec);
  }

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back(f.first);
    return out;
  }

  void commit() {
    fs::create_directories(dir_);
    for (const auto& [name, content] : files_) {
      std::ofstream out(temp_path(name), std::ios::binary | std::ios::trunc);
      out << content;
      if (!out.flush()) throw Error(ErrorCode::InvalidInput, "cannot write " + temp_path(name).string());
    }
    for (const auto& f : files_) fs::rename(temp_path(f.first), dir_ / f.first);
    committed_ = true;
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path temp_path(const std::string& name) const { return dir_ / ("." + name + ".partial"); }

  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
  bool committed_ = false;
};

/// Adds manifest.json (command, seed, config, inputs, outputs) and commits.
void publish(OutputSet& outputs, const std::string& command, std::uint64_t seed, json config, json inputs) {
  json m;
  m["tool"] = "collider";
  m["command"] = command;
  m["seed"] = seed;
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["outputs"] = outputs.names();
  outputs.add("manifest.json", m.dump(2) + "\n");
  outputs.commit();
}

void check_out_dir(const std::string& dir) {
  const fs::path p(dir);
  if (fs::exists(p) && !fs::is_directory(p)) {
    throw Error(ErrorCode::InvalidInput, "--out " + dir + " exists and is not a directory");
  }
}

/// "Human" first, then the remaining labels alphabetically.
bool label_less(const std::string& a, const std::string& b) {
  if ((a == "Human") != (b == "Human")) return a == "Human";
  return a < b;
}

std::vector<JudgmentRecord> load_judgments(const std::vector<std::string>& paths, json& inputs) {
  std::vector<JudgmentRecord> records;
  for (const std::string& p : paths) {
    auto part = ingest_judgments(p);
    records.insert(records.end(), part.begin(), part.end());
    inputs.push_back(fingerprint(p));
  }
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no judgment rows in the input files");
  return records;
}

Tying parse_tying(const std::string& s) {
  for (Tying t : {Tying::SharedPriorSharedStrength, Tying::SharedPriorFreeStrength, Tying::FreePriorSharedStrength,
                  Tying::FreePriorFreeStrength}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::InvalidInput, "unknown tying '" + s + "'");
}

GeneratingFunction parse_generating(const std::string& s) {
  if (s == "logistic") return GeneratingFunction::Logistic;
  if (s == "noisyor") return GeneratingFunction::NoisyOr;
  throw Error(ErrorCode::InvalidInput, "unknown generating function '" + s + "'");
}

bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput:
    case ErrorCode::UnknownTask:
    case ErrorCode::OutOfRange:
    case ErrorCode::EmptyInput:
    case ErrorCode::LengthMismatch:
    case ErrorCode::NotNumeric:
    case ErrorCode::TemplateSlotUnresolved:
    case ErrorCode::ParameterOutOfRange:
      return true;
    default:
      return false;
  }
}

// ------------------------------------------------------------------ tasks --

int cmd_tasks_list(std::ostream& out) {
  for (const TaskSpec& t : catalog()) {
    out << to_roman(t.id) << '\t' << slug(t.group) << '\t' << t.query.notation() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- prompts --

struct PromptOptions {
  std::string vocab = "data/vocabularies";
  std::vector<std::string> domains;
  std::string out;
  std::uint64_t seed = 0;
};

int cmd_prompts_generate(const PromptOptions& o, std::ostream& out) {
  check_out_dir(o.out);
  auto vocabs = load_vocabularies(o.vocab);
  if (!o.domains.empty()) {
    std::set<Domain> keep;
    for (const std::string& d : o.domains) {
      const auto parsed = parse_domain(d);
      if (!parsed) throw Error(ErrorCode::InvalidInput, "unknown domain '" + d + "'");
      keep.insert(*parsed);
    }
    std::erase_if(vocabs, [&](const DomainVocabulary& v) { return !keep.contains(v.domain); });
  }
  const auto bundles = prompt_matrix(vocabs, catalog());

  std::ostringstream jsonl;
  write_bundles(jsonl, bundles);
  json inputs = json::array();
  json domains = json::array();
  for (const DomainVocabulary& v : vocabs) {
    inputs.push_back(fingerprint(fs::path(o.vocab) / (std::string(to_string(v.domain)) + ".json")));
    domains.push_back(to_string(v.domain));
  }
  OutputSet outputs(o.out);
  outputs.add("prompts.jsonl", jsonl.str());
  publish(outputs, "prompts generate", o.seed,
          {{"domains", domains}, {"counterbalances", 4}, {"tasks", kTaskCount}, {"bundles", bundles.size()}},
          inputs);
  out << "wrote " << bundles.size() << " prompts to " << (fs::path(o.out) / "prompts.jsonl").string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ query --

struct QueryOptions {
  std::string prompts;
  std::string transport;
  std::string store;
  std::string model;
  std::string provider = "openai";
  double temperature = 0.0;
  std::size_t concurrency = 4;
  double rps = 0.0;
  int retries = 3;
  int timeout_ms = 30000;
  bool lenient = false;
  std::uint64_t seed = 0;
  double mock_prior = 0.5;
  double mock_strength = 1.0;
  double mock_strength2 = std::nan("");
  double mock_bias = 0.0;
  double mock_noise = 0.0;
  std::string out;
};

int cmd_query_run(const QueryOptions& o, std::ostream& out, std::ostream& err) {
  check_out_dir(o.out);
  std::ifstream in(o.prompts, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + o.prompts);
  const auto bundles = read_bundles(in, o.prompts);
  if (bundles.empty()) throw Error(ErrorCode::EmptyInput, o.prompts + " contains no prompts");
  if (o.transport == "replay" && o.store.empty()) throw Error(ErrorCode::InvalidInput, "--transport replay needs --store");

  std::optional<TranscriptStore> store;
  if (!o.store.empty()) store.emplace(o.store);
  const ParseMode mode = o.lenient ? ParseMode::Lenient : ParseMode::Strict;

  json config = {{"transport", o.transport}, {"model", o.model}, {"temperature", o.temperature},
                 {"parse_mode", o.lenient ? "lenient" : "strict"}, {"max_retries", o.retries}};

  std::unique_ptr<Transport> transport;
  std::unique_ptr<Transport> inner;
  if (o.transport == "replay") {
    transport = std::make_unique<ReplayTransport>(*store);
  } else if (o.transport == "mock") {
    // Synthetic respondent: round(100 * CBN answer + Gaussian noise), with the
    // noise seeded by the prompt text so answers do not depend on scheduling.
    const double s2 = std::isnan(o.mock_strength2) ? o.mock_strength : o.mock_strength2;
    const auto params = ColliderParameters::free_strength(o.mock_prior, o.mock_strength, s2, o.mock_bias);
    params.validate();
    const JointTable joint = build_joint(params);
    auto answers = std::make_shared<std::map<std::string, std::string>>();
    for (const PromptBundle& b : bundles) {
      Rng rng(stream_seed(o.seed, fnv1a(b.full_text)));
      const double noisy = 100.0 * conditional_prob(joint, b.task.query) + o.mock_noise * standard_normal(rng);
      (*answers)[b.full_text] = std::to_string(std::lround(std::clamp(noisy, 0.0, 100.0)));
    }
    transport = std::make_unique<ScriptedTransport>(
        [answers](const QueryRequest& r) {
          const auto it = answers->find(r.prompt);
          return it == answers->end() ? std::string("no scripted answer") : it->second;
        },
        mode, [] { return std::string("1970-01-01T00:00:00Z"); });
    config["mock"] = {{"prior", o.mock_prior}, {"strength_c1", o.mock_strength}, {"strength_c2", s2},
                      {"bias", o.mock_bias}, {"noise_sd", o.mock_noise}};
  } else {
    ProviderConfig provider = ProviderConfig::from_env(o.provider);
    if (provider.api_key.empty()) {
      throw Error(ErrorCode::InvalidInput, "no API key for provider '" + o.provider + "' in the environment");
    }
    inner = std::make_unique<HttpTransport>(std::move(provider), mode);
    if (store) {
      transport = std::make_unique<CachedTransport>(*inner, *store);
    } else {
      transport = std::move(inner);
    }
    config["provider"] = o.provider;
  }

  QueryRequest tmpl;
  tmpl.provider = o.transport == "live" ? o.provider : o.transport;
  tmpl.model = o.model;
  tmpl.temperature = o.temperature;
  tmpl.prompt = "-";  // replaced per bundle
  tmpl.max_retries = o.retries;
  tmpl.timeout = std::chrono::milliseconds(o.timeout_ms);
  tmpl.validate();
  HarnessOptions harness;
  harness.concurrency = std::max<std::size_t>(1, o.concurrency);
  harness.requests_per_second = o.rps;

  const ExperimentReport report = run_experiment(bundles, tmpl, *transport, store ? &*store : nullptr, harness);
  if (report.records.empty()) {
    const std::string first = report.errors.empty() ? "" : ": " + report.errors.front().message;
    throw Error(ErrorCode::TransportFailure, "no prompt produced a judgment" + first);
  }

  OutputSet outputs(o.out);
  outputs.add("judgments.csv", format_judgments(report.records));
  if (!report.errors.empty()) {
    std::string csv = csv_row({"bundle_index", "domain", "counterbalance", "task_id", "request_hash", "message"});
    for (const RunError& e : report.errors) {
      csv += csv_row({std::to_string(e.bundle_index), std::string(to_string(e.domain)), std::to_string(e.counterbalance),
                      std::string(to_roman(e.task_id)), e.request_hash, e.message});
    }
    outputs.add("errors.csv", csv);
  }
  config["counts"] = {{"prompts", bundles.size()}, {"judgments", report.records.size()}, {"errors", report.errors.size()}};
  publish(outputs, "query run", o.seed, config, json::array({fingerprint(o.prompts)}));
  out << "collected " << report.records.size() << " judgments from " << bundles.size() << " prompts\n";
  if (!report.errors.empty()) {
    err << "warning: " << report.errors.size() << " prompts failed; see "
        << (fs::path(o.out) / "errors.csv").string() << '\n';
  }
  return kExitOk;
}

// -------------------------------------------------------------------- fit --

struct FitOptions {
  std::vector<std::string> judgments;
  std::vector<std::string> tyings;
  std::string generating = "logistic";
  std::size_t chains = 2000;
  double lambda_max = 100.0;
  std::uint64_t seed = 0;
  std::string out;
};

/// The data one model is fitted to: one human subject, or one LLM in one
/// domain x counterbalance condition.
struct FitUnit {
  std::string label;
  std::string agent_id;
  AgentType type = AgentType::Human;
  std::optional<Domain> domain;
  std::optional<int> counterbalance;
  std::vector<Judgment> judgments;
};

std::vector<FitUnit> fit_units(const std::vector<JudgmentRecord>& records) {
  using Key = std::tuple<std::string, std::string, int, int>;  // label, agent id, domain, cb
  std::map<Key, FitUnit> units;
  for (const JudgmentRecord& r : records) {
    const bool human = r.agent_type == AgentType::Human;
    const Key key{r.agent_label(), human ? r.agent_id : "", human ? -1 : static_cast<int>(r.domain),
                  human ? -1 : r.counterbalance};
    FitUnit& u = units[key];
    if (u.judgments.empty()) {
      u.label = r.agent_label();
      u.agent_id = human ? r.agent_id : r.model_name;
      u.type = r.agent_type;
      u.domain = r.domain;
      u.counterbalance = r.counterbalance;
    }
    // A subject seen under several conditions has no single domain/cb.
    if (u.domain && *u.domain != r.domain) u.domain.reset();
    if (u.counterbalance && *u.counterbalance != r.counterbalance) u.counterbalance.reset();
    u.judgments.push_back({task(r.task_id), r.response});
  }
  std::vector<FitUnit> out;
  for (auto& [key, u] : units) out.push_back(std::move(u));
  std::stable_sort(out.begin(), out.end(), [](const FitUnit& a, const FitUnit& b) { return label_less(a.label, b.label); });
  return out;
}

struct Variant {
  std::string model;  // "cbn" or "sampler"
  FitSpec spec;
};

struct VariantSummary {
  std::map<std::string, double> param_sums;
  double r_sum = 0.0;
  std::size_t r_count = 0;
  double aic_sum = 0.0;
  double loss_sum = 0.0;
  std::size_t units = 0;
  int n_params = 0;
};

/// Canonical column order for averaged parameters.
const std::vector<std::string> kParamColumns = {"w_C",       "w_{C1}",    "w_{C2}", "w_{C,E}",
                                                "w_{C1,E}", "w_{C2,E}", "w_E",    "lambda"};

int cmd_fit(const std::string& family, const FitOptions& o, std::ostream& out) {
  check_out_dir(o.out);
  const bool sampler = family == "sampler";
  std::vector<Tying> tyings;
  for (const std::string& t : o.tyings) tyings.push_back(parse_tying(t));
  if (tyings.empty()) tyings.push_back(Tying::SharedPriorSharedStrength);
  const GeneratingFunction generating = parse_generating(o.generating);
  if (sampler && generating != GeneratingFunction::Logistic) {
    throw Error(ErrorCode::InvalidInput, "the mutation sampler uses the logistic generating function");
  }
  if (o.chains < 1) throw Error(ErrorCode::InvalidInput, "--chains must be >= 1");

  std::vector<Variant> variants;
  auto cbn_variant = [&](Tying t) {
    FitSpec s;
    s.tying = t;
    s.generating_function = generating;
    s.seed = o.seed;
    return Variant{"cbn", s};
  };
  if (sampler) {
    // The 3-parameter CBN is fitted alongside for comparison.
    variants.push_back(cbn_variant(Tying::SharedPriorSharedStrength));
    for (Tying t : tyings) {
      FitSpec s;
      s.model_family = ModelFamily::MutationSampler;
      s.tying = t;
      s.seed = o.seed;
      s.lambda_bounds = {1.0, o.lambda_max};
      s.sampler.chain_count = o.chains;
      s.sampler.seed = o.seed;
      variants.push_back({"sampler", s});
    }
  } else {
    for (Tying t : tyings) variants.push_back(cbn_variant(t));
  }
  for (const Variant& v : variants) v.spec.validate();

  json inputs = json::array();
  const auto records = load_judgments(o.judgments, inputs);
  const auto units = fit_units(records);

  std::string fits;
  std::map<std::string, std::vector<VariantSummary>> summaries;  // label -> per variant
  std::vector<std::string> labels;
  std::set<std::string> used_params;
  for (const FitUnit& u : units) {
    auto& rows = summaries[u.label];
    if (rows.empty()) {
      rows.resize(variants.size());
      labels.push_back(u.label);
    }
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const Variant& v = variants[vi];
      const FitResult r = fit_model(v.spec, u.judgments);
      const ParameterLayout layout(v.spec);
      const auto values = layout.pack(r.parameters);
      json params = json::object();
      VariantSummary& s = rows[vi];
      for (std::size_t i = 0; i < values.size(); ++i) {
        params[layout.names()[i]] = values[i];
        s.param_sums[layout.names()[i]] += values[i];
        used_params.insert(layout.names()[i]);
      }
      if (r.r_fit) {
        s.r_sum += *r.r_fit;
        ++s.r_count;
      }
      s.aic_sum += r.aic;
      s.loss_sum += r.mae_loss;
      s.n_params = r.n_params;
      ++s.units;

      json line;
      line["agent"] = u.label;
      line["agent_id"] = u.agent_id;
      line["agent_type"] = to_string(u.type);
      line["domain"] = u.domain ? json(to_string(*u.domain)) : json(nullptr);
      line["counterbalance"] = u.counterbalance ? json(*u.counterbalance) : json(nullptr);
      line["model"] = v.model;
      line["tying"] = to_string(v.spec.tying);
      line["generating"] = to_string(v.spec.generating_function);
      line["n_params"] = r.n_params;
      line["parameters"] = params;
      line["sse"] = r.sse;
      line["r"] = r.r_fit ? json(*r.r_fit) : json(nullptr);
      line["aic"] = r.aic;
      line["loss"] = r.mae_loss;
      line["n"] = r.n_observations;
      line["converged"] = r.converged;
      line["seed"] = o.seed;
      if (v.model == "sampler") line["chains"] = v.spec.sampler.chain_count;
      fits += line.dump() + "\n";
    }
  }

  // Averaged summary table; the variant with the lowest mean AIC is marked.
  std::vector<std::string> columns;
  const std::set<std::string> base = sampler ? std::set<std::string>{"w_C", "w_{C,E}", "w_E", "lambda"}
                                             : std::set<std::string>{"w_C", "w_{C,E}", "w_{C1,E}", "w_{C2,E}", "w_E"};
  for (const std::string& c : kParamColumns) {
    if (base.contains(c) || used_params.contains(c)) columns.push_back(c);
  }
  std::vector<std::string> header = {"Agent", "Model", "NP"};
  header.insert(header.end(), columns.begin(), columns.end());
  for (const char* h : {"R", "AIC", "Loss", "Winner"}) header.emplace_back(h);
  std::string table = csv_row(header);
  for (const std::string& label : labels) {
    const auto& rows = summaries[label];
    std::size_t best = 0;
    for (std::size_t vi = 1; vi < rows.size(); ++vi) {
      if (rows[vi].aic_sum / rows[vi].units < rows[best].aic_sum / rows[best].units) best = vi;
    }
    for (std::size_t vi = 0; vi < rows.size(); ++vi) {
      const VariantSummary& s = rows[vi];
      const double n = static_cast<double>(s.units);
      std::vector<std::string> row = {label, variants[vi].model + "-" + std::string(to_string(variants[vi].spec.tying)),
                                      std::to_string(s.n_params)};
      for (const std::string& c : columns) {
        const auto it = s.param_sums.find(c);
        row.push_back(it == s.param_sums.end() ? "" : fixed(it->second / n, c == "lambda" ? 2 : 3));
      }
      row.push_back(s.r_count ? fixed(s.r_sum / static_cast<double>(s.r_count), 3) : "NA");
      row.push_back(fixed(s.aic_sum / n, 1));
      row.push_back(fixed(s.loss_sum / n, 2));
      row.push_back(vi == best ? "*" : "");
      table += csv_row(row);
    }
  }

  OutputSet outputs(o.out);
  outputs.add("fits.jsonl", fits);
  outputs.add(sampler ? "table3.csv" : "table2.csv", table);
  json tying_names = json::array();
  for (Tying t : tyings) tying_names.push_back(to_string(t));
  json config = {{"model", family}, {"tying", tying_names}, {"generating", to_string(generating)},
                 {"units", units.size()}};
  if (sampler) {
    config["chains"] = o.chains;
    config["lambda_max"] = o.lambda_max;
  }
  publish(outputs, "fit " + family, o.seed, config, inputs);
  out << "fitted " << units.size() << " units x " << variants.size() << " models; wrote "
      << (fs::path(o.out) / (sampler ? "table3.csv" : "table2.csv")).string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- analyze --

struct CorrelateOptions {
  std::vector<std::string> judgments;
  std::string reference = "Human";
  std::uint64_t seed = 0;
  std::string out;
};

std::string correlation_cell(const std::vector<double>& x, const std::vector<double>& y) {
  try {
    return fixed(spearman(x, y), 3);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConstantVector || e.code() == ErrorCode::EmptyInput) return "NA";
    throw;
  }
}

int cmd_correlate(const CorrelateOptions& o, std::ostream& out) {
  check_out_dir(o.out);
  json inputs = json::array();
  const auto records = load_judgments(o.judgments, inputs);

  // Mean response per (domain, counterbalance, task) cell for every agent.
  using Cell = std::tuple<int, int, int>;
  std::map<std::string, std::map<Cell, std::pair<double, std::size_t>>> cells;
  for (const JudgmentRecord& r : records) {
    auto& c = cells[r.agent_label()][{static_cast<int>(r.domain), r.counterbalance, static_cast<int>(r.task_id)}];
    c.first += r.response;
    ++c.second;
  }
  const auto ref_it = cells.find(o.reference);
  if (ref_it == cells.end()) throw Error(ErrorCode::InvalidInput, "no judgments from reference agent '" + o.reference + "'");
  const auto& ref = ref_it->second;

  std::vector<std::string> labels;
  for (const auto& [label, _] : cells) {
    if (label != o.reference) labels.push_back(label);
  }
  std::sort(labels.begin(), labels.end(), label_less);
  if (labels.empty()) throw Error(ErrorCode::InvalidInput, "no agents besides the reference to correlate");

  std::string table = csv_row({"Model", "Economy (r_s)", "Sociology (r_s)", "Weather (r_s)", "Pooled"});
  for (const std::string& label : labels) {
    std::vector<std::string> row = {label};
    std::vector<double> px, py;
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_domain;
    for (const auto& [cell, sum] : cells[label]) {
      const auto r = ref.find(cell);
      if (r == ref.end()) continue;
      const double x = sum.first / static_cast<double>(sum.second);
      const double y = r->second.first / static_cast<double>(r->second.second);
      by_domain[std::get<0>(cell)].first.push_back(x);
      by_domain[std::get<0>(cell)].second.push_back(y);
      px.push_back(x);
      py.push_back(y);
    }
    for (Domain d : kDomains) {
      const auto& [x, y] = by_domain[static_cast<int>(d)];
      row.push_back(correlation_cell(x, y));
    }
    row.push_back(correlation_cell(px, py));
    table += csv_row(row);
  }

  OutputSet outputs(o.out);
  outputs.add("table1.csv", table);
  publish(outputs, "analyze correlate", o.seed,
          {{"reference", o.reference}, {"cell", "domain x counterbalance x task mean"}, {"statistic", "spearman"}},
          inputs);
  out << "correlated " << labels.size() << " agents with " << o.reference << "; wrote "
      << (fs::path(o.out) / "table1.csv").string() << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- report --

struct FigureOptions {
  std::vector<std::string> judgments;
  std::size_t bootstrap = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_figure_data(const FigureOptions& o, std::ostream& out) {
  check_out_dir(o.out);
  json inputs = json::array();
  const auto records = load_judgments(o.judgments, inputs);
  const auto rows = aggregate(records, GroupBy{true, false, false}, {o.bootstrap, o.level, o.seed});

  std::vector<std::string> labels;
  std::map<std::pair<int, std::string>, const AggregateRow*> index;
  for (const AggregateRow& r : rows) {
    if (std::find(labels.begin(), labels.end(), r.agent) == labels.end()) labels.push_back(r.agent);
    index[{static_cast<int>(r.task_id), r.agent}] = &r;
  }
  std::sort(labels.begin(), labels.end(), label_less);

  std::vector<std::string> header = {"task_id", "query"};
  for (const std::string& l : labels) {
    for (const char* suffix : {"mean", "ci_low", "ci_high", "n"}) header.push_back(l + " " + suffix);
  }
  OutputSet outputs(o.out);
  json groups = json::object();
  for (TaskGroup g : kTaskGroups) {
    std::string csv = csv_row(header);
    std::size_t n_rows = 0;
    for (const TaskSpec& t : catalog()) {
      if (t.group != g) continue;
      std::vector<std::string> row = {std::string(to_roman(t.id)), t.query.notation()};
      for (const std::string& l : labels) {
        const auto it = index.find({static_cast<int>(t.id), l});
        if (it == index.end()) {
          row.insert(row.end(), {"", "", "", "0"});
        } else {
          const AggregateRow& a = *it->second;
          row.insert(row.end(), {fixed(a.mean, 3), fixed(a.ci_low, 3), fixed(a.ci_high, 3), std::to_string(a.n)});
        }
      }
      csv += csv_row(row);
      ++n_rows;
    }
    const std::string name = std::string(slug(g)) + ".csv";
    outputs.add(name, csv);
    groups[std::string(slug(g))] = {{"file", name}, {"title", to_string(g)}, {"rows", n_rows}};
  }
  json agents = json::array();
  for (const std::string& l : labels) agents.push_back(l);
  publish(outputs, "report figure-data", o.seed,
          {{"bootstrap_replicates", o.bootstrap}, {"level", o.level}, {"agents", agents}, {"groups", groups}}, inputs);
  out << "wrote 4 task-group tables for " << labels.size() << " agents to " << o.out << '\n';
  return kExitOk;
}

// --------------------------------------------------------------- simulate --

struct SimulateOptions {
  double prior = 0.5;
  double strength = 1.0;
  double strength2 = std::nan("");
  double bias = 0.0;
  std::string generating = "logistic";
  double lambda = 4.0;
  std::size_t chains = 10000;
  double noise = 0.0;
  std::size_t units = 12;
  std::string agent_type = "human";
  std::string model_name = "synthetic-llm";
  bool round = false;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate(const std::string& family, const SimulateOptions& o, std::ostream& out) {
  check_out_dir(o.out);
  const auto type = parse_agent_type(o.agent_type);
  if (!type) throw Error(ErrorCode::InvalidInput, "--agent-type must be human or llm");
  if (o.units < 1) throw Error(ErrorCode::InvalidInput, "--units must be >= 1");
  if (!(o.noise >= 0.0)) throw Error(ErrorCode::InvalidInput, "--noise must be >= 0");
  const double s2 = std::isnan(o.strength2) ? o.strength : o.strength2;
  const GeneratingFunction g = parse_generating(o.generating);
  ColliderParameters params = ColliderParameters::free_strength(o.prior, o.strength, s2, o.bias, g);
  params.validate();

  std::vector<double> truth;
  json config = {{"model", family}, {"prior", o.prior}, {"strength_c1", o.strength}, {"strength_c2", s2},
                 {"bias", o.bias}, {"noise_sd", o.noise}, {"units", o.units}, {"agent_type", o.agent_type},
                 {"rounded", o.round}};
  if (family == "sampler") {
    if (g != GeneratingFunction::Logistic) throw Error(ErrorCode::InvalidInput, "the mutation sampler uses the logistic generating function");
    SamplerConfig cfg;
    cfg.chain_length = o.lambda;
    cfg.chain_count = o.chains;
    cfg.seed = o.seed;
    truth = expected_predictions(params, cfg, catalog());
    config["lambda"] = o.lambda;
    config["chains"] = o.chains;
  } else {
    truth = predict_task_battery(params, catalog());
    config["generating"] = to_string(g);
  }

  // Unit i is assigned domain i mod 3 and counterbalance (i / 3) mod 4 + 1,
  // so 12 units cover every condition once.
  Rng rng(stream_seed(o.seed, 0x51u));
  std::vector<JudgmentRecord> records;
  for (std::size_t i = 0; i < o.units; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "s%03zu", i + 1);
    for (const TaskSpec& t : catalog()) {
      JudgmentRecord r;
      r.agent_type = *type;
      r.agent_id = *type == AgentType::Human ? std::string(id) : o.model_name;
      r.model_name = *type == AgentType::Human ? "" : o.model_name;
      r.domain = kDomains[i % 3];
      r.counterbalance = static_cast<int>((i / 3) % 4) + 1;
      r.task_id = t.id;
      double v = 100.0 * truth[index_of(t.id)];
      if (o.noise > 0.0) v += o.noise * standard_normal(rng);
      v = std::clamp(v, 0.0, 100.0);
      r.response = o.round ? std::round(v) : v;
      if (*type == AgentType::LLM) r.temperature = 0.0;
      records.push_back(std::move(r));
    }
  }
  OutputSet outputs(o.out);
  outputs.add("judgments.csv", format_judgments(records));
  publish(outputs, "simulate " + family, o.seed, config, json::array());
  out << "wrote " << records.size() << " synthetic judgments to " << (fs::path(o.out) / "judgments.csv").string()
      << '\n';
  return kExitOk;
}

}  // namespace

int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collider causal-reasoning workbench: prompts, LLM queries, model fits and summaries.", "collider"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto* tasks = app.add_subcommand("tasks", "Inspect the inference task battery");
  tasks->require_subcommand(1);
  auto* tasks_list = tasks->add_subcommand("list", "Print tasks I-XI with their formal queries");

  PromptOptions prompt_opts;
  auto* prompts = app.add_subcommand("prompts", "Prompt generation");
  prompts->require_subcommand(1);
  auto* prompts_gen = prompts->add_subcommand("generate", "Render every domain x counterbalance x task prompt");
  prompts_gen->add_option("--vocab", prompt_opts.vocab, "Directory with <domain>.json vocabularies")
      ->check(CLI::ExistingDirectory)
      ->capture_default_str();
  prompts_gen->add_option("--domain", prompt_opts.domains, "Restrict to these domains (repeatable)");
  prompts_gen->add_option("--out", prompt_opts.out, "Output directory")->required();
  prompts_gen->add_option("--seed", prompt_opts.seed, "Recorded in the manifest")->capture_default_str();

  QueryOptions query_opts;
  auto* query = app.add_subcommand("query", "LLM querying");
  query->require_subcommand(1);
  auto* query_run = query->add_subcommand("run", "Query a model with every prompt in a prompts.jsonl file");
  query_run->add_option("--prompts", query_opts.prompts, "prompts.jsonl from `prompts generate`")
      ->required()
      ->check(CLI::ExistingFile);
  query_run->add_option("--transport", query_opts.transport, "live, replay or mock")
      ->required()
      ->check(CLI::IsMember({"live", "replay", "mock"}));
  query_run->add_option("--store", query_opts.store, "Transcript store directory");
  query_run->add_option("--model", query_opts.model, "Model name")->required();
  query_run->add_option("--provider", query_opts.provider, "openai, anthropic or gemini (live only)")
      ->check(CLI::IsMember({"openai", "anthropic", "gemini"}))
      ->capture_default_str();
  query_run->add_option("--temperature", query_opts.temperature, "Sampling temperature")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  query_run->add_option("--concurrency", query_opts.concurrency, "Requests in flight")->capture_default_str();
  query_run->add_option("--rps", query_opts.rps, "Max request starts per second (0 = unlimited)")
      ->check(CLI::NonNegativeNumber);
  query_run->add_option("--retries", query_opts.retries, "Retries on timeout / rate limit")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  query_run->add_option("--timeout-ms", query_opts.timeout_ms, "Per-request timeout")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  query_run->add_flag("--lenient", query_opts.lenient, "Take the first number in a reply instead of rejecting prose");
  query_run->add_option("--seed", query_opts.seed, "Seed for mock noise")->capture_default_str();
  query_run->add_option("--mock-prior", query_opts.mock_prior, "Mock respondent: cause prior")->capture_default_str();
  query_run->add_option("--mock-strength", query_opts.mock_strength, "Mock respondent: C1 strength")
      ->capture_default_str();
  query_run->add_option("--mock-strength2", query_opts.mock_strength2, "Mock respondent: C2 strength (default: C1's)");
  query_run->add_option("--mock-bias", query_opts.mock_bias, "Mock respondent: effect bias")->capture_default_str();
  query_run->add_option("--mock-noise", query_opts.mock_noise, "Mock respondent: noise sd on the 0-100 scale")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  query_run->add_option("--out", query_opts.out, "Output directory")->required();

  FitOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "Fit models to judgments (humans per subject, LLMs per condition)");
  fit->require_subcommand(1);
  auto* fit_cbn = fit->add_subcommand("cbn", "Causal Bayes net variants");
  auto* fit_sampler = fit->add_subcommand("sampler", "Mutation sampler (plus the 3-parameter CBN for comparison)");
  for (auto* sub : {fit_cbn, fit_sampler}) {
    sub->add_option("--judgments", fit_opts.judgments, "Judgment CSV files")->required()->check(CLI::ExistingFile);
    sub->add_option("--tying", fit_opts.tyings, "3p, 4p, freeprior or freeprior4p (repeatable; default 3p)")
        ->check(CLI::IsMember({"3p", "4p", "freeprior", "freeprior4p"}));
    sub->add_option("--seed", fit_opts.seed, "Seed for sampler chains")->capture_default_str();
    sub->add_option("--out", fit_opts.out, "Output directory")->required();
  }
  fit_cbn->add_option("--generating", fit_opts.generating, "logistic or noisyor")
      ->check(CLI::IsMember({"logistic", "noisyor"}))
      ->capture_default_str();
  fit_sampler->add_option("--chains", fit_opts.chains, "Chains per prediction")->capture_default_str();
  fit_sampler->add_option("--lambda-max", fit_opts.lambda_max, "Upper bound on the chain length")
      ->check(CLI::Range(1.0, 1e6))
      ->capture_default_str();

  CorrelateOptions corr_opts;
  auto* analyze = app.add_subcommand("analyze", "Agreement analyses");
  analyze->require_subcommand(1);
  auto* correlate = analyze->add_subcommand("correlate", "Spearman correlation of each agent with a reference");
  correlate->add_option("--judgments", corr_opts.judgments, "Judgment CSV files")->required()->check(CLI::ExistingFile);
  correlate->add_option("--reference", corr_opts.reference, "Reference agent label")->capture_default_str();
  correlate->add_option("--seed", corr_opts.seed, "Recorded in the manifest")->capture_default_str();
  correlate->add_option("--out", corr_opts.out, "Output directory")->required();

  FigureOptions fig_opts;
  auto* report = app.add_subcommand("report", "Plot-ready data");
  report->require_subcommand(1);
  auto* figure = report->add_subcommand("figure-data", "Per-task means and bootstrap CIs in four task groups");
  figure->add_option("--judgments", fig_opts.judgments, "Judgment CSV files")->required()->check(CLI::ExistingFile);
  figure->add_option("--bootstrap", fig_opts.bootstrap, "Bootstrap replicates")
      ->check(CLI::Range(100, 10000000))
      ->capture_default_str();
  figure->add_option("--level", fig_opts.level, "Confidence level")->check(CLI::Range(0.5, 0.999))->capture_default_str();
  figure->add_option("--seed", fig_opts.seed, "Bootstrap seed")->capture_default_str();
  figure->add_option("--out", fig_opts.out, "Output directory")->required();

  SimulateOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Synthetic judgments from a known model");
  simulate->require_subcommand(1);
  auto* sim_cbn = simulate->add_subcommand("cbn", "Judgments from a causal Bayes net");
  auto* sim_sampler = simulate->add_subcommand("sampler", "Judgments from the mutation sampler");
  for (auto* sub : {sim_cbn, sim_sampler}) {
    sub->add_option("--prior", sim_opts.prior, "Cause prior")->capture_default_str();
    sub->add_option("--strength", sim_opts.strength, "C1 strength")->capture_default_str();
    sub->add_option("--strength2", sim_opts.strength2, "C2 strength (default: C1's)");
    sub->add_option("--bias", sim_opts.bias, "Effect bias")->capture_default_str();
    sub->add_option("--noise", sim_opts.noise, "Gaussian noise sd on the 0-100 scale")->capture_default_str();
    sub->add_option("--units", sim_opts.units, "Subjects (human) or condition replicates (llm)")->capture_default_str();
    sub->add_option("--agent-type", sim_opts.agent_type, "human or llm")
        ->check(CLI::IsMember({"human", "llm"}))
        ->capture_default_str();
    sub->add_option("--model-name", sim_opts.model_name, "Model name for llm agents")->capture_default_str();
    sub->add_flag("--round", sim_opts.round, "Round responses to integers");
    sub->add_option("--seed", sim_opts.seed, "Noise and chain seed")->capture_default_str();
    sub->add_option("--out", sim_opts.out, "Output directory")->required();
  }
  sim_cbn->add_option("--generating", sim_opts.generating, "logistic or noisyor")
      ->check(CLI::IsMember({"logistic", "noisyor"}))
      ->capture_default_str();
  sim_sampler->add_option("--lambda", sim_opts.lambda, "Chain length")->capture_default_str();
  sim_sampler->add_option("--chains", sim_opts.chains, "Chains")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInputError;
  }

  try {
    if (tasks_list->parsed()) return cmd_tasks_list(out);
    if (prompts_gen->parsed()) return cmd_prompts_generate(prompt_opts, out);
    if (query_run->parsed()) return cmd_query_run(query_opts, out, err);
    if (fit_cbn->parsed()) return cmd_fit("cbn", fit_opts, out);
    if (fit_sampler->parsed()) return cmd_fit("sampler", fit_opts, out);
    if (correlate->parsed()) return cmd_correlate(corr_opts, out);
    if (figure->parsed()) return cmd_figure_data(fig_opts, out);
    if (sim_cbn->parsed()) return cmd_simulate("cbn", sim_opts, out);
    if (sim_sampler->parsed()) return cmd_simulate("sampler", sim_opts, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitInputError : kExitRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  err << "error: no command given\n";
  return kExitInputError;
}

}  // namespace collider
