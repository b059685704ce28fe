#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmsprt/abtest.hpp"
#include "bmsprt/harness.hpp"
#include "bmsprt/msprt.hpp"
#include "bmsprt/session.hpp"

namespace bmsprt {

inline constexpr const char* kCsvHeader = "ts,queries,successful_queries,revenue";

/// Reads the four-column session CSV. Throws MissingHeader when the first
/// line is not kCsvHeader and MalformedRow (1-based line number) for rows
/// that do not parse or violate the record invariants.
std::vector<SessionRecord> parse_csv(std::istream& in);
std::vector<SessionRecord> parse_csv(const std::filesystem::path& path);

std::string sessions_csv(std::span<const SessionRecord> records);

/// Shortest round-trip decimal form; "nan" / "inf" / "-inf" otherwise.
std::string format_double(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

nlohmann::json to_json(const UpdateRecord& rec);
nlohmann::json to_json(const AbUpdateRecord& rec);

std::string qq_csv(std::span<const QqPoint> points);
std::string power_csv(std::span<const PowerPoint> points);
std::string duration_csv(std::span<const PowerPoint> points);
std::string trials_csv(std::span<const TrialResult> trials);

}  // namespace bmsprt
