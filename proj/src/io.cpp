#include "tia/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tia/errors.hpp"

namespace fs = std::filesystem;

namespace tia {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw missing_input_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw schema_error("invalid JSON in '" + path + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& body) {
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::internal, "cannot write '" + tmp.string() + "'");
        out << body;
        out.flush();
        if (!out) throw Error(ErrorCode::internal, "write failed on '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorCode::internal, "rename failed for '" + path + "': " + ec.message());
    }
}

void write_json_file(const std::string& path, const json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

int CsvTable::col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

namespace {

// Splits one physical CSV record. Quoted cells may contain commas and doubled quotes.
std::vector<std::string> split_record(const std::string& line, const std::string& where) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') { cur += '"'; ++i; }
                else quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw schema_error(where + ": unterminated quote");
    cells.push_back(cur);
    return cells;
}

std::string quote_if_needed(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string where = origin + ":" + std::to_string(lineno);
        auto cells = split_record(line, where);
        if (table.header.empty()) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size())
                throw schema_error(where + ": expected " + std::to_string(table.header.size()) +
                                   " cells, got " + std::to_string(cells.size()));
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty()) throw schema_error(origin + ": missing header row");
    return table;
}

CsvTable read_csv_file(const std::string& path,
                       const std::vector<std::string>& required_columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw missing_input_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    CsvTable table = parse_csv(buf.str(), path);
    for (const auto& name : required_columns) {
        if (table.col(name) < 0)
            throw schema_error(path + ": missing required column '" + name + "'");
    }
    return table;
}

void write_csv_file(const std::string& path, const CsvTable& table) {
    std::string body;
    auto append_row = [&body](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) body += ',';
            body += quote_if_needed(cells[i]);
        }
        body += '\n';
    };
    append_row(table.header);
    for (const auto& row : table.rows) append_row(row);
    write_text_file(path, body);
}

double parse_double_cell(const std::string& cell, const std::string& context) {
    if (cell.empty()) throw schema_error(context + ": empty numeric cell");
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(cell.c_str(), &end);
    if (errno != 0 || end != cell.c_str() + cell.size())
        throw schema_error(context + ": bad number '" + cell + "'");
    return v;
}

long parse_long_cell(const std::string& cell, const std::string& context) {
    if (cell.empty()) throw schema_error(context + ": empty integer cell");
    char* end = nullptr;
    errno = 0;
    long v = std::strtol(cell.c_str(), &end, 10);
    if (errno != 0 || end != cell.c_str() + cell.size())
        throw schema_error(context + ": bad integer '" + cell + "'");
    return v;
}

} // namespace tia
