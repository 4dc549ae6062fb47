#include "cspin/qec.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace cspin::qec {

int PauliOp::weight() const { return std::popcount(x | z); }

bool PauliOp::commutes_with(const PauliOp& other) const {
  return (std::popcount((x & other.z) ^ (z & other.x)) & 1) == 0;
}

std::string PauliOp::to_string(int n) const {
  std::string s;
  for (int q = 0; q < n; ++q) {
    const bool bx = (x >> q) & 1, bz = (z >> q) & 1;
    s += bx && bz ? 'Y' : bx ? 'X' : bz ? 'Z' : 'I';
  }
  return s;
}

PauliOp pauli_from_string(const std::string& s) {
  PauliOp p;
  for (size_t q = 0; q < s.size(); ++q) {
    switch (s[q]) {
      case 'I': break;
      case 'X': p.x |= 1u << q; break;
      case 'Z': p.z |= 1u << q; break;
      case 'Y': p.x |= 1u << q; p.z |= 1u << q; break;
      default: throw std::invalid_argument("bad Pauli letter");
    }
  }
  return p;
}

namespace {

uint64_t symplectic_row(const PauliOp& p, int n) {
  return static_cast<uint64_t>(p.x) | (static_cast<uint64_t>(p.z) << n);
}

// Row-reduced GF(2) basis supporting rank and membership queries.
struct Gf2Basis {
  std::vector<uint64_t> rows;  // each with a unique leading bit

  void insert(uint64_t v) {
    v = reduce(v);
    if (v) rows.push_back(v);
  }
  uint64_t reduce(uint64_t v) const {
    for (uint64_t r : rows) {
      const uint64_t lead = uint64_t(1) << (63 - std::countl_zero(r));
      if (v & lead) v ^= r;
    }
    return v;
  }
  bool contains(uint64_t v) const { return reduce(v) == 0; }
  int rank() const { return static_cast<int>(rows.size()); }
};

}  // namespace

int symplectic_rank(const std::vector<PauliOp>& ops, int n) {
  Gf2Basis basis;
  for (const auto& p : ops) basis.insert(symplectic_row(p, n));
  return basis.rank();
}

bool all_checks_commute(const StabilizerCode& code) {
  for (size_t i = 0; i < code.checks.size(); ++i)
    for (size_t j = i + 1; j < code.checks.size(); ++j)
      if (!code.checks[i].commutes_with(code.checks[j])) return false;
  return true;
}

bool logicals_valid(const StabilizerCode& code) {
  const int k = code.k();
  if (static_cast<int>(code.logical_z.size()) != k) return false;
  for (int i = 0; i < k; ++i)
    for (const auto& s : code.checks)
      if (!code.logical_x[static_cast<size_t>(i)].commutes_with(s) ||
          !code.logical_z[static_cast<size_t>(i)].commutes_with(s))
        return false;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const bool want_anti = i == j;
      if (code.logical_x[static_cast<size_t>(i)].commutes_with(
              code.logical_z[static_cast<size_t>(j)]) == want_anti)
        return false;
      if (i != j) {
        if (!code.logical_x[static_cast<size_t>(i)].commutes_with(
                code.logical_x[static_cast<size_t>(j)]))
          return false;
        if (!code.logical_z[static_cast<size_t>(i)].commutes_with(
                code.logical_z[static_cast<size_t>(j)]))
          return false;
      }
    }
  return true;
}

bool in_stabilizer_group(const StabilizerCode& code, const PauliOp& p) {
  Gf2Basis basis;
  for (const auto& s : code.checks)
    basis.insert(symplectic_row(s, code.n_qubits));
  return basis.contains(symplectic_row(p, code.n_qubits));
}

namespace {

// Symplectic Gram-Schmidt over the centralizer: returns (X, Z) logical
// pairs for the given checks.
void extract_logicals(StabilizerCode& code) {
  const int n = code.n_qubits;
  // Centralizer basis: solve <v, s> = 0 for all checks s over GF(2).
  // Enumerate the 2n unit vectors, then eliminate against the constraint
  // matrix by Gaussian elimination on the dual side: build candidates as
  // the nullspace of the (checks x 2n) symplectic product matrix.
  const int m = static_cast<int>(code.checks.size());
  std::vector<uint64_t> a(static_cast<size_t>(m), 0);  // product-matrix rows
  for (int i = 0; i < m; ++i) {
    // <v, s> = v_x . s_z + v_z . s_x: row encodes (s_z | s_x).
    a[static_cast<size_t>(i)] =
        static_cast<uint64_t>(code.checks[static_cast<size_t>(i)].z) |
        (static_cast<uint64_t>(code.checks[static_cast<size_t>(i)].x) << n);
  }
  // Nullspace by Gaussian elimination with column tracking.
  const int cols = 2 * n;
  std::vector<int> pivot_col;
  std::vector<uint64_t> rows = a;
  std::vector<bool> col_used(static_cast<size_t>(cols), false);
  size_t r = 0;
  for (int c = 0; c < cols && r < rows.size(); ++c) {
    size_t sel = r;
    while (sel < rows.size() && !((rows[sel] >> c) & 1)) ++sel;
    if (sel == rows.size()) continue;
    std::swap(rows[r], rows[sel]);
    for (size_t i = 0; i < rows.size(); ++i)
      if (i != r && ((rows[i] >> c) & 1)) rows[i] ^= rows[r];
    pivot_col.push_back(c);
    col_used[static_cast<size_t>(c)] = true;
    ++r;
  }
  std::vector<PauliOp> centralizer;
  for (int c = 0; c < cols; ++c) {
    if (col_used[static_cast<size_t>(c)]) continue;
    uint64_t v = uint64_t(1) << c;
    for (size_t i = 0; i < pivot_col.size(); ++i)
      if ((rows[i] >> c) & 1) v |= uint64_t(1) << pivot_col[i];
    PauliOp p;
    p.x = static_cast<uint32_t>(v & ((uint64_t(1) << n) - 1));
    p.z = static_cast<uint32_t>(v >> n);
    centralizer.push_back(p);
  }

  // Pair up representatives that anticommute; partners inside the
  // stabilizer span never find one and are dropped.
  std::vector<PauliOp> pool = centralizer;
  Gf2Basis stab;
  for (const auto& s : code.checks) stab.insert(symplectic_row(s, n));

  while (true) {
    int xi = -1;
    for (size_t i = 0; i < pool.size(); ++i) {
      Gf2Basis test = stab;
      for (const auto& lx : code.logical_x) test.insert(symplectic_row(lx, n));
      for (const auto& lz : code.logical_z) test.insert(symplectic_row(lz, n));
      if (!test.contains(symplectic_row(pool[i], n))) {
        xi = static_cast<int>(i);
        break;
      }
    }
    if (xi < 0) break;
    int zi = -1;
    for (size_t j = 0; j < pool.size(); ++j)
      if (static_cast<int>(j) != xi &&
          !pool[static_cast<size_t>(xi)].commutes_with(pool[j])) {
        zi = static_cast<int>(j);
        break;
      }
    if (zi < 0) throw std::logic_error("unpaired logical representative");
    PauliOp lx = pool[static_cast<size_t>(xi)];
    PauliOp lz = pool[static_cast<size_t>(zi)];
    // Symplectic reduction of the rest of the pool against the new pair.
    for (auto& p : pool) {
      if (!p.commutes_with(lz)) p = p * lx;
      if (!p.commutes_with(lx)) p = p * lz;
    }
    code.logical_x.push_back(lx);
    code.logical_z.push_back(lz);
  }
}

// Prefer low-weight logical representatives for readability: reduce each
// logical by brute force over stabilizer products is overkill; keep as-is.

}  // namespace

int brute_force_distance(const StabilizerCode& code, int max_weight) {
  const int n = code.n_qubits;
  for (int w = 1; w <= max_weight; ++w) {
    std::vector<int> support(static_cast<size_t>(w));
    std::function<bool(int, int)> rec = [&](int pos, int start) -> bool {
      if (pos == w) {
        // All 3^w letter assignments on this support.
        int total = 1;
        for (int i = 0; i < w; ++i) total *= 3;
        for (int code_idx = 0; code_idx < total; ++code_idx) {
          PauliOp p;
          int rem = code_idx;
          for (int i = 0; i < w; ++i) {
            const int letter = rem % 3;
            rem /= 3;
            const uint32_t bit = 1u << support[static_cast<size_t>(i)];
            if (letter == 0) p.x |= bit;
            else if (letter == 1) p.z |= bit;
            else p.x |= bit, p.z |= bit;
          }
          bool commutes = true;
          for (const auto& s : code.checks)
            commutes &= p.commutes_with(s);
          if (commutes && !in_stabilizer_group(code, p)) return true;
        }
        return false;
      }
      for (int q = start; q < n; ++q) {
        support[static_cast<size_t>(pos)] = q;
        if (rec(pos + 1, q + 1)) return true;
      }
      return false;
    };
    if (rec(0, 0)) return w;
  }
  return 0;
}

StabilizerCode build_xzzx_toric(int l1, int l2) {
  if (l1 < 2 || l2 < 2) throw std::invalid_argument("lattice sides must be >= 2");
  const int n = 2 * l1 * l2;
  if (n > 32) throw std::invalid_argument("instance too large");

  auto make = [&](int s) {
    StabilizerCode code;
    code.n_qubits = n;
    for (int j = 0; j < n; ++j) {
      PauliOp p;
      p.x |= 1u << j;
      p.z |= 1u << ((j + 1) % n);
      p.z |= 1u << ((j + s) % n);
      p.x |= 1u << ((j + s + 1) % n);
      code.checks.push_back(p);
    }
    return code;
  };

  // Deterministic twist selection: smallest offset with k = 2, maximal
  // brute-force distance (capped at min(l1, l2) + 1).
  const int d_cap = std::min(l1, l2) + 1;
  int best_s = -1, best_d = -1;
  for (int s = 2; s <= n / 2; ++s) {
    StabilizerCode code = make(s);
    if (!all_checks_commute(code)) continue;
    const int rank = symplectic_rank(code.checks, n);
    if (n - rank != 2) continue;
    StabilizerCode probe = code;
    extract_logicals(probe);
    const int d = brute_force_distance(probe, d_cap);
    if (d > best_d) best_d = d, best_s = s;
  }
  if (best_s < 0) throw std::runtime_error("no valid twist found");
  StabilizerCode code = make(best_s);
  extract_logicals(code);
  return code;
}

namespace {

struct SearchState {
  std::vector<int> qubit_cluster;
  std::vector<int> ancilla_cluster;
  std::vector<int> load;
  long nodes = 0;
};

bool window_adjacent(int a, int b, int n_clusters, bool ring) {
  if (a == b) return true;
  if (std::abs(a - b) == 1) return true;
  return ring && ((a == 0 && b == n_clusters - 1) || (b == 0 && a == n_clusters - 1));
}

}  // namespace

ChainAssignment assign_to_chain(const StabilizerCode& code,
                                const std::vector<int>& cluster_sizes,
                                bool ring) {
  const int n = code.n_qubits;
  const int nc = static_cast<int>(cluster_sizes.size());
  const int n_checks = static_cast<int>(code.checks.size());

  long total_cap = 0;
  for (int c : cluster_sizes) total_cap += c;
  if (total_cap < n + n_checks)
    throw std::invalid_argument(
        "chain too small: needs capacity for data and ancilla qubits");

  SearchState st;
  st.qubit_cluster.assign(static_cast<size_t>(n), -1);
  st.ancilla_cluster.assign(static_cast<size_t>(n_checks), -1);
  st.load.assign(static_cast<size_t>(nc), 0);
  const long node_budget = 4000000;

  // Windows: single clusters first, then adjacent pairs.
  std::vector<std::pair<int, int>> windows;
  for (int c = 0; c < nc; ++c) windows.push_back({c, c});
  for (int c = 0; c + 1 < nc; ++c) windows.push_back({c, c + 1});
  if (ring && nc > 2) windows.push_back({0, nc - 1});

  std::function<bool(int)> place = [&](int check_idx) -> bool {
    if (check_idx == n_checks) return true;
    if (++st.nodes > node_budget)
      throw std::runtime_error("assignment search exceeded its node budget");

    std::vector<int> members;
    for (int q = 0; q < n; ++q)
      if (((code.checks[static_cast<size_t>(check_idx)].x >> q) & 1) ||
          ((code.checks[static_cast<size_t>(check_idx)].z >> q) & 1))
        members.push_back(q);

    for (auto [wa, wb] : windows) {
      bool ok = true;
      for (int q : members) {
        const int cur = st.qubit_cluster[static_cast<size_t>(q)];
        if (cur >= 0 && cur != wa && cur != wb) { ok = false; break; }
      }
      if (!ok) continue;

      std::vector<int> unplaced;
      for (int q : members)
        if (st.qubit_cluster[static_cast<size_t>(q)] < 0) unplaced.push_back(q);

      // Distribute unplaced members plus the ancilla over the window.
      const int choices = wa == wb ? 1 : 2;
      const int slots = static_cast<int>(unplaced.size()) + 1;  // + ancilla
      long combos = 1;
      for (int i = 0; i < slots; ++i) combos *= choices;
      for (long pick = 0; pick < combos; ++pick) {
        long rem = pick;
        bool fits = true;
        std::vector<int> chosen(static_cast<size_t>(slots));
        std::vector<int> delta(2, 0);
        for (int i = 0; i < slots; ++i) {
          const int side = static_cast<int>(rem % choices);
          rem /= choices;
          chosen[static_cast<size_t>(i)] = side == 0 ? wa : wb;
          ++delta[static_cast<size_t>(side)];
        }
        if (st.load[static_cast<size_t>(wa)] + (wa == wb ? delta[0] + delta[1] : delta[0]) >
            cluster_sizes[static_cast<size_t>(wa)])
          fits = false;
        if (wa != wb &&
            st.load[static_cast<size_t>(wb)] + delta[1] > cluster_sizes[static_cast<size_t>(wb)])
          fits = false;
        if (!fits) continue;

        for (size_t i = 0; i < unplaced.size(); ++i) {
          st.qubit_cluster[static_cast<size_t>(unplaced[i])] = chosen[i];
          ++st.load[static_cast<size_t>(chosen[i])];
        }
        st.ancilla_cluster[static_cast<size_t>(check_idx)] = chosen.back();
        ++st.load[static_cast<size_t>(chosen.back())];

        if (place(check_idx + 1)) return true;

        for (size_t i = 0; i < unplaced.size(); ++i) {
          st.qubit_cluster[static_cast<size_t>(unplaced[i])] = -1;
          --st.load[static_cast<size_t>(chosen[i])];
        }
        st.ancilla_cluster[static_cast<size_t>(check_idx)] = -1;
        --st.load[static_cast<size_t>(chosen.back())];
      }
    }
    return false;
  };

  if (!place(0)) {
    // Identify the first check that admits no window under an empty board
    // for the error message; with backtracking exhausted the code simply
    // does not fit this chain.
    std::ostringstream msg;
    msg << "no feasible assignment: check 0 ("
        << code.checks.front().to_string(n)
        << ") and its successors cannot all be kept within adjacent clusters";
    throw std::runtime_error(msg.str());
  }

  ChainAssignment out;
  out.qubit_cluster = st.qubit_cluster;
  out.ancilla_cluster = st.ancilla_cluster;
  out.ring = ring;
  return out;
}

bool assignment_valid(const StabilizerCode& code,
                      const std::vector<int>& cluster_sizes,
                      const ChainAssignment& a) {
  const int nc = static_cast<int>(cluster_sizes.size());
  std::vector<int> load(static_cast<size_t>(nc), 0);
  for (int c : a.qubit_cluster) {
    if (c < 0 || c >= nc) return false;
    ++load[static_cast<size_t>(c)];
  }
  for (int c : a.ancilla_cluster) {
    if (c < 0 || c >= nc) return false;
    ++load[static_cast<size_t>(c)];
  }
  for (int c = 0; c < nc; ++c)
    if (load[static_cast<size_t>(c)] > cluster_sizes[static_cast<size_t>(c)]) return false;

  for (size_t i = 0; i < code.checks.size(); ++i) {
    std::vector<int> clusters;
    for (int q = 0; q < code.n_qubits; ++q)
      if (((code.checks[i].x >> q) & 1) || ((code.checks[i].z >> q) & 1))
        clusters.push_back(a.qubit_cluster[static_cast<size_t>(q)]);
    clusters.push_back(a.ancilla_cluster[i]);
    std::sort(clusters.begin(), clusters.end());
    clusters.erase(std::unique(clusters.begin(), clusters.end()), clusters.end());
    if (clusters.size() > 2) return false;
    if (clusters.size() == 2 &&
        !window_adjacent(clusters[0], clusters[1], nc, a.ring))
      return false;
  }
  return true;
}

SyndromeSchedule syndrome_schedule(const StabilizerCode& code,
                                   const ChainAssignment& assignment) {
  SyndromeSchedule sched;
  for (int c = 0; c < static_cast<int>(code.checks.size()); ++c) {
    const PauliOp& p = code.checks[static_cast<size_t>(c)];
    std::vector<int> x_part, z_part;
    for (int q = 0; q < code.n_qubits; ++q) {
      const bool bx = (p.x >> q) & 1, bz = (p.z >> q) & 1;
      if (bx && bz) { x_part.push_back(q); z_part.push_back(q); }
      else if (bx) x_part.push_back(q);
      else if (bz) z_part.push_back(q);
    }
    const int anc = code.n_qubits + c;
    if (!x_part.empty()) {
      ScheduledGate g;
      g.kind = x_part.size() >= 2 ? ScheduledGate::CXX : ScheduledGate::CNOT;
      g.check = c;
      g.control = anc;
      g.targets = x_part;
      sched.gates.push_back(g);
    }
    for (int q : z_part) {
      ScheduledGate g;
      g.kind = ScheduledGate::CZ;
      g.check = c;
      g.control = anc;
      g.targets = {q};
      sched.gates.push_back(g);
    }
  }

  // Greedy rounds: no data qubit or ancilla reused within a round.
  std::vector<int> round_of(sched.gates.size(), -1);
  int rounds = 0;
  for (size_t i = 0; i < sched.gates.size(); ++i) {
    int r = 0;
    while (true) {
      bool clash = false;
      for (size_t j = 0; j < i; ++j) {
        if (round_of[j] != r) continue;
        const auto& a = sched.gates[i];
        const auto& b = sched.gates[j];
        if (a.control == b.control) { clash = true; break; }
        for (int qa : a.targets)
          for (int qb : b.targets)
            if (qa == qb) { clash = true; break; }
        if (clash) break;
      }
      if (!clash) break;
      ++r;
    }
    round_of[i] = r;
    sched.gates[i].round = r;
    rounds = std::max(rounds, r + 1);
  }
  sched.rounds = rounds;
  return sched;
}

nlohmann::json StabilizerCode::to_json() const {
  nlohmann::json j;
  j["n_qubits"] = n_qubits;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) j["checks"].push_back(c.to_string(n_qubits));
  j["logical_x"] = nlohmann::json::array();
  j["logical_z"] = nlohmann::json::array();
  for (const auto& l : logical_x) j["logical_x"].push_back(l.to_string(n_qubits));
  for (const auto& l : logical_z) j["logical_z"].push_back(l.to_string(n_qubits));
  return j;
}

StabilizerCode code_from_json(const nlohmann::json& j) {
  StabilizerCode code;
  code.n_qubits = j.at("n_qubits").get<int>();
  for (const auto& s : j.at("checks"))
    code.checks.push_back(pauli_from_string(s.get<std::string>()));
  for (const auto& s : j.value("logical_x", nlohmann::json::array()))
    code.logical_x.push_back(pauli_from_string(s.get<std::string>()));
  for (const auto& s : j.value("logical_z", nlohmann::json::array()))
    code.logical_z.push_back(pauli_from_string(s.get<std::string>()));
  return code;
}

}  // namespace cspin::qec
