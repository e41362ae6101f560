#include "report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ergostop/errors.hpp"

namespace ergostop::cli {

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

std::string render(const Cell& cell, Format format) {
    return std::visit(
        [format](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return format == Format::Csv ? csv_escape(v) : json_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                const std::string s = format_number(v);
                if (format == Format::Json && !std::isfinite(v)) return json_string(s);
                return s;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (format == Format::Csv) return v ? "1" : "0";
                return v ? "true" : "false";
            } else {
                return std::to_string(v);
            }
        },
        cell);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size())
        fail(ErrorCode::InvalidArgument, "row width does not match the columns of " + name);
    rows.push_back(std::move(row));
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value < 0 ? "-inf" : "inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::filesystem::path emit_table(const Table& table, const std::filesystem::path& dir, Format format) {
    ensure_dir(dir);
    std::ostringstream os;
    std::filesystem::path path;
    if (format == Format::Csv) {
        path = dir / (table.name + ".csv");
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            os << (c ? "," : "") << csv_escape(table.columns[c]);
        os << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << render(row[c], format);
            os << '\n';
        }
    } else {
        path = dir / (table.name + ".json");
        os << "{\"columns\":[";
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            os << (c ? "," : "") << json_string(table.columns[c]);
        os << "],\"rows\":[";
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            os << (r ? ",\n" : "\n") << '[';
            for (std::size_t c = 0; c < table.rows[r].size(); ++c)
                os << (c ? "," : "") << render(table.rows[r][c], format);
            os << ']';
        }
        os << "]}\n";
    }
    write_file(path, os.str());
    return path;
}

nlohmann::ordered_json json_number(double value) {
    if (!std::isfinite(value)) return format_number(value);
    return value;
}

std::filesystem::path emit_record(const nlohmann::ordered_json& record,
                                  const std::filesystem::path& dir, const std::string& name) {
    ensure_dir(dir);
    const auto path = dir / (name + ".json");
    write_file(path, record.dump(2) + "\n");
    return path;
}

}  // namespace ergostop::cli
