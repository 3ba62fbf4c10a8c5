#include "collider/judgment_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "collider/error.hpp"

namespace collider {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

/// Splits one CSV record starting at `pos`; advances `pos` past its line end.
/// Quoted fields may span lines, so `line` is advanced for each newline seen.
std::vector<std::string> next_record(std::string_view text, std::size_t& pos, std::size_t& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          fields.back() += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c == '\n') {
      ++line;
      break;
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw Error(ErrorCode::InvalidInput, "unterminated quoted field");
  return fields;
}

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s.front() == '+') ++begin;
  const auto res = std::from_chars(begin, s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidInput, std::string(what) + " '" + s + "' is not a number");
  }
  return v;
}

JudgmentRecord parse_row(const std::vector<std::string>& f) {
  if (f.size() != 8) {
    throw Error(ErrorCode::InvalidInput, "expected 8 fields, found " + std::to_string(f.size()));
  }
  JudgmentRecord r;
  r.agent_id = f[0];
  const auto type = parse_agent_type(lower(f[1]));
  if (!type) throw Error(ErrorCode::InvalidInput, "unknown agent_type '" + f[1] + "'");
  r.agent_type = *type;
  r.model_name = f[2];
  const auto domain = parse_domain(lower(f[3]));
  if (!domain) throw Error(ErrorCode::InvalidInput, "unknown domain '" + f[3] + "'");
  r.domain = *domain;
  int cb = 0;
  const auto res = std::from_chars(f[4].data(), f[4].data() + f[4].size(), cb);
  if (f[4].empty() || res.ec != std::errc() || res.ptr != f[4].data() + f[4].size()) {
    throw Error(ErrorCode::InvalidInput, "counterbalance '" + f[4] + "' is not an integer");
  }
  r.counterbalance = cb;
  const auto id = parse_task_id(f[5]);
  if (!id) throw Error(ErrorCode::UnknownTask, "unknown task id '" + f[5] + "'");
  r.task_id = *id;
  r.response = parse_double(f[6], "response");
  if (!f[7].empty()) r.temperature = parse_double(f[7], "temperature");
  r.validate();
  return r;
}

}  // namespace

std::string format_judgments(std::span<const JudgmentRecord> records) {
  std::string out(kJudgmentHeader);
  out += '\n';
  for (const JudgmentRecord& r : records) {
    r.validate();
    out += quote(r.agent_id);
    out += ',';
    out += to_string(r.agent_type);
    out += ',';
    out += quote(r.model_name);
    out += ',';
    out += to_string(r.domain);
    out += ',';
    out += std::to_string(r.counterbalance);
    out += ',';
    out += to_roman(r.task_id);
    out += ',';
    out += shortest(r.response);
    out += ',';
    if (r.temperature) out += shortest(*r.temperature);
    out += '\n';
  }
  return out;
}

std::vector<JudgmentRecord> parse_judgments(std::string_view text, const std::string& source) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::size_t pos = 0;
  std::size_t line = 1;
  const auto header = next_record(text, pos, line);
  std::string joined;
  for (std::size_t i = 0; i < header.size(); ++i) joined += (i ? "," : "") + header[i];
  if (joined != kJudgmentHeader) {
    throw Error(ErrorCode::InvalidInput, source + ":1: header must be '" + std::string(kJudgmentHeader) + "'");
  }
  std::vector<JudgmentRecord> records;
  while (pos < text.size()) {
    const std::size_t row_line = line;
    std::vector<std::string> fields;
    try {
      fields = next_record(text, pos, line);
      if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
      records.push_back(parse_row(fields));
    } catch (const Error& e) {
      throw Error(e.code(), source + ":" + std::to_string(row_line) + ": " + e.what());
    }
  }
  return records;
}

std::vector<JudgmentRecord> ingest_judgments(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_judgments(buf.str(), path.string());
}

void write_judgments(const std::filesystem::path& path, std::span<const JudgmentRecord> records) {
  const std::string text = format_judgments(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
}

}  // namespace collider
