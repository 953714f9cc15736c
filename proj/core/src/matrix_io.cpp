#include "shadowlab/matrix_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shadowlab/error.hpp"

namespace shadowlab {

using nlohmann::json;

ComplexMatrix parse_matrix(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("matrix document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dim") || !doc.contains("entries")) {
    throw ValidationError("matrix document needs fields 'dim' and 'entries'");
  }
  if (!doc["dim"].is_number_integer() || doc["dim"].get<long long>() < 1) {
    throw ValidationError("matrix 'dim' must be a positive integer");
  }
  const auto d = static_cast<Index>(doc["dim"].get<long long>());
  const json& entries = doc["entries"];
  if (!entries.is_array() || static_cast<Index>(entries.size()) != d * d) {
    std::ostringstream os;
    os << "matrix 'entries' must hold dim*dim = " << d * d << " [re, im] pairs";
    throw ValidationError(os.str());
  }
  ComplexMatrix m(d, d);
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) {
      const json& e = entries[static_cast<std::size_t>(r * d + c)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw ValidationError("matrix entries must be [re, im] number pairs");
      }
      m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  if (!m.allFinite()) throw ValidationError("matrix has non-finite entries");
  return m;
}

std::string format_matrix(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("only square matrices are serialized");
  json entries = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) entries.push_back({m(r, c).real(), m(r, c).imag()});
  }
  json doc = {{"dim", m.rows()}, {"entries", entries}};
  return doc.dump(2) + "\n";
}

ComplexMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_matrix(buffer.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_matrix(const ComplexMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix file " + path.string());
  out << format_matrix(m);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace shadowlab
