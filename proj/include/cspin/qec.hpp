#pragma once

// XZZX toric-code layouts on cluster chains, with brute-force verification
// of the stabilizer properties on small instances.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace cspin::qec {

// Pauli operator as X/Z bitmasks over up to 32 qubits.
struct PauliOp {
  uint32_t x = 0;
  uint32_t z = 0;

  int weight() const;
  bool identity() const { return x == 0 && z == 0; }
  bool commutes_with(const PauliOp& other) const;
  std::string to_string(int n) const;
  PauliOp operator*(const PauliOp& other) const {  // phase-free product
    return {x ^ other.x, z ^ other.z};
  }
};

PauliOp pauli_from_string(const std::string& s);

struct StabilizerCode {
  int n_qubits = 0;
  std::vector<PauliOp> checks;
  std::vector<PauliOp> logical_x;
  std::vector<PauliOp> logical_z;

  int k() const { return static_cast<int>(logical_x.size()); }
  nlohmann::json to_json() const;
};

StabilizerCode code_from_json(const nlohmann::json& j);

// GF(2) rank of the symplectic check matrix.
int symplectic_rank(const std::vector<PauliOp>& ops, int n);

bool all_checks_commute(const StabilizerCode& code);
bool logicals_valid(const StabilizerCode& code);

// True if p is a product of checks.
bool in_stabilizer_group(const StabilizerCode& code, const PauliOp& p);

// Minimum weight of a Pauli that commutes with every check but is not a
// stabilizer, searched exhaustively up to max_weight (0 if none found).
int brute_force_distance(const StabilizerCode& code, int max_weight);

// XZZX toric code on the (l1 x l2) twisted periodic lattice, presented as a
// length-n ring with checks X_j Z_{j+1} Z_{j+s} X_{j+s+1}; the twist s is
// picked deterministically as the smallest offset that preserves k = 2 and
// maximizes the brute-force distance.
StabilizerCode build_xzzx_toric(int l1, int l2);

struct ChainAssignment {
  std::vector<int> qubit_cluster;    // data qubit -> cluster
  std::vector<int> ancilla_cluster;  // check -> cluster
  bool ring = false;                 // chain closes into a ring
};

// Places data qubits and one ancilla per check on a chain of clusters so
// that every check's support plus its ancilla spans at most two adjacent
// clusters. Throws, naming the first unsatisfiable check, if the search
// proves infeasibility (or exceeds its node budget).
ChainAssignment assign_to_chain(const StabilizerCode& code,
                                const std::vector<int>& cluster_sizes,
                                bool ring = false);

bool assignment_valid(const StabilizerCode& code,
                      const std::vector<int>& cluster_sizes,
                      const ChainAssignment& assignment);

struct ScheduledGate {
  enum Kind { CXX, CNOT, CZ } kind = CZ;
  int check = 0;
  int control = 0;               // ancilla qubit id (offset n_qubits + check)
  std::vector<int> targets;      // data qubit ids
  int round = 0;
};

struct SyndromeSchedule {
  std::vector<ScheduledGate> gates;
  int rounds = 0;
};

// Ancilla-mediated measurement circuit for every check: a CXX fan-out onto
// the X-type positions and controlled-Z onto the Z-type positions, packed
// into rounds so no qubit is touched twice per round.
SyndromeSchedule syndrome_schedule(const StabilizerCode& code,
                                   const ChainAssignment& assignment);

}  // namespace cspin::qec
