#include "lsgeom/io.hpp"

#include "lsgeom/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace lsgeom {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

void flatten(const nlohmann::json& node, const std::string& prefix, std::map<std::string, double>& out)
{
    if (node.is_number()) {
        out[prefix] = node.get<double>();
    } else if (node.is_object()) {
        for (const auto& [key, value] : node.items()) flatten(value, prefix.empty() ? key : prefix + "." + key, out);
    } else if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i) flatten(node[i], prefix + "." + std::to_string(i), out);
    }
}

}  // namespace

Matrix read_matrix_csv(const std::string& path)
{
    std::ifstream in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::stringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) {
            const std::string text = trim(field);
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
                throw IoError(path + ":" + std::to_string(line_no) + ": cannot parse '" + text + "' as a number");
            }
            row.push_back(value);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                          " columns, found " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": no data");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
}

Vector read_vector_csv(const std::string& path)
{
    const Matrix m = read_matrix_csv(path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw IoError(path + ": expected a single column, found " + std::to_string(m.rows()) + "x" +
                  std::to_string(m.cols()));
}

void write_matrix_csv(const std::string& path, const Matrix& m)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << std::setprecision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

std::map<std::string, double> result_scalars(const std::string& document_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("result document is not valid JSON: ") + e.what());
    }
    std::map<std::string, double> out;
    flatten(doc, "", out);
    return out;
}

std::map<std::string, double> read_result_scalars(const std::string& path)
{
    std::ifstream in = open_input(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return result_scalars(buffer.str());
}

}  // namespace lsgeom
