#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shadowlab {

/// Circuit layouts of the k-ancilla protocol.
///  - batch: all n outcome qubits and k ancillas per stage
///  - read-once: one copy of rho at a time, all m*k ancillas kept alive
///  - const-memory: one outcome qubit and one ancilla, each outcome recomputed k times
///  - log-memory: outcomes summed into a ceil(log2 n) register by a QFT adder
enum class CircuitVariant { kBatch, kReadOnce, kConstMemory, kLogMemory };

CircuitVariant parse_circuit_variant(std::string_view name);
std::string_view to_string(CircuitVariant v);

/// Order-of-magnitude (Theta) resource counts with all implied constants set to one.
struct ResourceEstimate {
  CircuitVariant variant = CircuitVariant::kBatch;
  std::uint64_t gate_units = 0;
  std::uint64_t overhead_units = 0;  // part of gate_units attributable to the variant
  std::uint64_t ancilla_qubits = 0;
  std::vector<std::uint64_t> circuit_sizes;
};

/// `circuit_sizes` holds S_i, the gate count of a circuit implementing M_i;
/// its length must equal m.
ResourceEstimate estimate_resources(std::uint64_t m, std::uint64_t k, std::uint64_t n,
                                    std::span<const std::uint64_t> circuit_sizes,
                                    CircuitVariant variant);

std::string format_resources(const ResourceEstimate& r);

}  // namespace shadowlab
