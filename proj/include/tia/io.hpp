#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace tia {

using json = nlohmann::json;

/// Reads and parses a JSON document.
/// Throws missing_input_error if the file does not exist, schema_error on parse failure.
json read_json_file(const std::string& path);

/// Serializes `doc` with 2-space indent and writes it atomically (temp file + rename).
void write_json_file(const std::string& path, const json& doc);

/// Writes `body` atomically (temp file + rename). Parent directory must exist.
void write_text_file(const std::string& path, const std::string& body);

/// Shortest round-trippable formatting used in every CSV the toolkit emits.
std::string format_double(double v);

/// In-memory CSV table. Cells are kept as raw strings; callers convert.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name, -1 if absent.
    int col(const std::string& name) const;
};

/// Reads a CSV file with a mandatory header row.
/// Every name in `required_columns` must appear in the header; every row must
/// have exactly as many cells as the header. Violations raise schema_error
/// naming the file and line. Missing file raises missing_input_error.
CsvTable read_csv_file(const std::string& path,
                       const std::vector<std::string>& required_columns);

/// Parses CSV text (used by tests and by readers of in-repo fixtures).
CsvTable parse_csv(const std::string& text, const std::string& origin);

/// Serializes and writes a table atomically. Cells containing separators are quoted.
void write_csv_file(const std::string& path, const CsvTable& table);

/// Strict numeric cell parsers; raise schema_error naming `context` on failure.
double parse_double_cell(const std::string& cell, const std::string& context);
long parse_long_cell(const std::string& cell, const std::string& context);

} // namespace tia
