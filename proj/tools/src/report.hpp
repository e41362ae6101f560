#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace ergostop::cli {

enum class Format { Csv, Json };

using Cell = std::variant<std::string, double, std::int64_t, bool>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

/// 17 significant digits; non-finite values become `-inf`, `inf`, `nan`.
std::string format_number(double value);

/// Writes `<dir>/<name>.csv` or `<dir>/<name>.json`. Returns the path written.
std::filesystem::path emit_table(const Table& table, const std::filesystem::path& dir, Format format);

/// Number for a JSON record; non-finite values become the string tokens above.
nlohmann::ordered_json json_number(double value);

std::filesystem::path emit_record(const nlohmann::ordered_json& record,
                                  const std::filesystem::path& dir, const std::string& name);

}  // namespace ergostop::cli
