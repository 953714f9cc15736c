#include "shadowlab/resources.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "shadowlab/error.hpp"

namespace shadowlab {

namespace {

std::uint64_t ceil_log2(std::uint64_t n) {
  std::uint64_t bits = 0;
  while ((std::uint64_t{1} << bits) < n) ++bits;
  return bits;
}

}  // namespace

CircuitVariant parse_circuit_variant(std::string_view name) {
  if (name == "batch") return CircuitVariant::kBatch;
  if (name == "read-once") return CircuitVariant::kReadOnce;
  if (name == "const-memory") return CircuitVariant::kConstMemory;
  if (name == "log-memory") return CircuitVariant::kLogMemory;
  throw ValidationError("unknown circuit variant '" + std::string(name) +
                        "' (expected batch, read-once, const-memory, log-memory)");
}

std::string_view to_string(CircuitVariant v) {
  switch (v) {
    case CircuitVariant::kBatch: return "batch";
    case CircuitVariant::kReadOnce: return "read-once";
    case CircuitVariant::kConstMemory: return "const-memory";
    case CircuitVariant::kLogMemory: return "log-memory";
  }
  return "unknown";
}

ResourceEstimate estimate_resources(std::uint64_t m, std::uint64_t k, std::uint64_t n,
                                    std::span<const std::uint64_t> circuit_sizes,
                                    CircuitVariant variant) {
  if (circuit_sizes.size() != m) {
    std::ostringstream os;
    os << "estimate_resources: " << circuit_sizes.size() << " circuit sizes for m = " << m;
    throw ValidationError(os.str());
  }
  const std::uint64_t total_size =
      std::accumulate(circuit_sizes.begin(), circuit_sizes.end(), std::uint64_t{0});
  const std::uint64_t rotations = m * k * n;
  const std::uint64_t outcome_circuits = n * total_size;

  ResourceEstimate r;
  r.variant = variant;
  r.circuit_sizes.assign(circuit_sizes.begin(), circuit_sizes.end());
  switch (variant) {
    case CircuitVariant::kBatch:
      r.gate_units = rotations + outcome_circuits;
      r.ancilla_qubits = n + k;
      break;
    case CircuitVariant::kReadOnce:
      r.gate_units = rotations + outcome_circuits;
      r.ancilla_qubits = m * k + n;
      break;
    case CircuitVariant::kConstMemory:
      r.overhead_units = n * k * total_size;
      r.gate_units = rotations + outcome_circuits + r.overhead_units;
      r.ancilla_qubits = 2;
      break;
    case CircuitVariant::kLogMemory: {
      const std::uint64_t log_n = std::max<std::uint64_t>(ceil_log2(n), 1);
      // adder and multiplicity-controlled rotations replace the m*k*n rotations
      r.overhead_units = m * n * log_n + m * k * log_n;
      r.gate_units = outcome_circuits + r.overhead_units;
      r.ancilla_qubits = log_n;
      break;
    }
  }
  return r;
}

std::string format_resources(const ResourceEstimate& r) {
  std::ostringstream os;
  os << "variant: " << to_string(r.variant) << "\n"
     << "gate_units (Theta): " << r.gate_units << "\n"
     << "overhead_units (Theta): " << r.overhead_units << "\n"
     << "ancilla_qubits (Theta): " << r.ancilla_qubits << "\n";
  return os.str();
}

}  // namespace shadowlab
