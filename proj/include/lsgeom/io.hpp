#pragma once

#include "lsgeom/core_model.hpp"

#include <map>
#include <string>

namespace lsgeom {

/// Headerless row-major CSV of decimal floats. Errors name the path and line.
Matrix read_matrix_csv(const std::string& path);

/// Single-column CSV (a single row is also accepted).
Vector read_vector_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const Matrix& m);

/// Every numeric leaf of a result document keyed by its dotted path,
/// with array elements as "name.0", "name.1", ...
std::map<std::string, double> result_scalars(const std::string& document_text);

/// result_scalars on the contents of a file.
std::map<std::string, double> read_result_scalars(const std::string& path);

}  // namespace lsgeom
