#pragma once

#include <filesystem>
#include <string>

#include "shadowlab/linalg.hpp"

namespace shadowlab {

// Matrix documents are JSON objects
//   { "dim": d, "entries": [[re, im], ...] }
// with d*d entries in row-major order.

ComplexMatrix parse_matrix(const std::string& text);
std::string format_matrix(const ComplexMatrix& m);

ComplexMatrix load_matrix(const std::filesystem::path& path);
void save_matrix(const ComplexMatrix& m, const std::filesystem::path& path);

}  // namespace shadowlab
