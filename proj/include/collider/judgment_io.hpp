#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collider/stats.hpp"

namespace collider {

/// Column order of the judgment table.
inline constexpr std::string_view kJudgmentHeader =
    "agent_id,agent_type,model_name,domain,counterbalance,task_id,response,temperature";

/// CSV text for the records (header included). Doubles use the shortest
/// round-trip form; fields containing commas or quotes are quoted.
std::string format_judgments(std::span<const JudgmentRecord> records);

/// Parses CSV text in the judgment format. Every row is validated; the first
/// bad row throws Error naming `source` and the 1-based line number.
std::vector<JudgmentRecord> parse_judgments(std::string_view text, const std::string& source = "<input>");

std::vector<JudgmentRecord> ingest_judgments(const std::filesystem::path& path);
void write_judgments(const std::filesystem::path& path, std::span<const JudgmentRecord> records);

}  // namespace collider
