#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "embedhalluc/harness/experiment.hpp"

namespace embedhalluc::harness {

enum class ReportFormat { json, csv, table };

std::string to_string(ReportFormat format);
ReportFormat parse_report_format(const std::string& text);

// Scores are fractions; the table shows them x100 with one decimal.
std::string format_mean_std(double mean, double std);

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);

// One row per seed then an aggregate row.
std::string report_to_csv(const RunReport& report);
// Recovers task, method, metric and per-seed scores; aggregates are recomputed.
RunReport report_from_csv(const std::string& text);

// Rows are methods, columns are tasks; a missing pair renders as "-".
std::string render_table(const std::vector<RunReport>& reports);

// Throws DataError on an empty seed list and IoError when the file cannot be
// written.
void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path);
void emit_table(const std::vector<RunReport>& reports, const std::filesystem::path& path);

// Reads a JSON or CSV report, chosen by extension.
RunReport load_report(const std::filesystem::path& path);

}  // namespace embedhalluc::harness
