#include "ergostop/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ergostop/errors.hpp"

namespace ergostop {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& field, const std::string& message) {
    fail(ErrorCode::ParseError, "field '" + field + "': " + message);
}

Matrix read_matrix(const json& doc, const std::string& field, std::size_t rows,
                   std::optional<std::size_t> cols) {
    const json& node = doc.at(field);
    if (!node.is_array()) parse_fail(field, "expected an array of rows");
    if (node.size() != rows) {
        std::ostringstream os;
        os << "expected " << rows << " rows, got " << node.size();
        parse_fail(field, os.str());
    }
    const std::size_t width = cols ? *cols : (rows > 0 && node[0].is_array() ? node[0].size() : 0);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows; ++i) {
        const json& row = node[i];
        if (!row.is_array() || row.size() != width) {
            std::ostringstream os;
            os << "row " << i << " must be an array of " << width << " numbers";
            parse_fail(field, os.str());
        }
        for (std::size_t j = 0; j < width; ++j) {
            if (!row[j].is_number()) {
                std::ostringstream os;
                os << "entry [" << i << "][" << j << "] is not a number";
                parse_fail(field, os.str());
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j].get<double>();
        }
    }
    return m;
}

Vector read_vector(const json& doc, const std::string& field, std::size_t n) {
    const json& node = doc.at(field);
    if (!node.is_array() || node.size() != n) {
        std::ostringstream os;
        os << "expected an array of " << n << " numbers";
        parse_fail(field, os.str());
    }
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!node[i].is_number()) {
            std::ostringstream os;
            os << "entry [" << i << "] is not a number";
            parse_fail(field, os.str());
        }
        v(static_cast<Eigen::Index>(i)) = node[i].get<double>();
    }
    return v;
}

}  // namespace

ModelFile parse_model(const std::string& text, std::optional<double> dt_override) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, e.what());
    }
    if (!doc.is_object()) fail(ErrorCode::ParseError, "model file must hold a JSON object");

    if (!doc.contains("states") || !doc["states"].is_array())
        parse_fail("states", "missing or not an array");
    std::vector<std::string> states;
    for (const json& s : doc["states"]) {
        if (s.is_string()) states.push_back(s.get<std::string>());
        else if (s.is_number_integer()) states.push_back(std::to_string(s.get<long long>()));
        else parse_fail("states", "state identifiers must be strings or integers");
    }
    const std::size_t n = states.size();

    const bool has_kernel = doc.contains("kernel");
    const bool has_generator = doc.contains("generator");
    if (has_kernel == has_generator)
        fail(ErrorCode::ParseError, "exactly one of 'kernel' or 'generator' must be present");

    if (!doc.contains("dt") || !doc["dt"].is_number()) parse_fail("dt", "missing or not a number");
    const double file_dt = doc["dt"].get<double>();
    double dt = file_dt;
    if (dt_override) {
        if (has_kernel && std::abs(*dt_override - file_dt) > 1e-12 * std::max(1.0, file_dt))
            fail(ErrorCode::ConflictingFlags,
                 "--dt differs from the dt of a kernel model; only generator models can be re-gridded");
        dt = *dt_override;
    }

    std::optional<Matrix> coords;
    if (doc.contains("coords")) coords = read_matrix(doc, "coords", n, std::nullopt);

    ModelFile out{has_kernel
                      ? build_dtmc(states, read_matrix(doc, "kernel", n, n), dt, coords)
                      : build_from_generator(states, read_matrix(doc, "generator", n, n), dt, coords),
                  std::nullopt, std::nullopt};
    if (doc.contains("f")) out.f = read_vector(doc, "f", n);
    if (doc.contains("g")) out.g = read_vector(doc, "g", n);
    return out;
}

ModelFile load_model(const std::filesystem::path& path, std::optional<double> dt_override) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open model file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_model(buffer.str(), dt_override);
}

}  // namespace ergostop
