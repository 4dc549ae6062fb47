#pragma once

// Analytic level structure and conditional transition frequencies.
//
// The closed-form energies treat hyperfine in the secular (ZZ) limit and
// diagonalize the exchange block of the two antiparallel electron states
// exactly. Against the full vector-coupling Hamiltonian the residual error
// is the hyperfine flip-flop shift, roughly (A/2)^2 / (gamma_e B0) per
// level; exact tables are available where simulation-grade carriers are
// needed.

#include <optional>
#include <string>
#include <vector>

#include "cspin/hamiltonian.hpp"
#include "cspin/spin_system.hpp"

namespace cspin {

// Energies of the four electron-pair states for one nuclear configuration.
// The antiparallel pair is labeled adiabatically: `mid_down_up` is the
// eigenstate continuously connected to |down_L up_R> as J -> 0.
struct PairEnergies {
  double down_down = 0.0;
  double up_up = 0.0;
  double mid_upper = 0.0;  // + branch of the sqrt
  double mid_lower = 0.0;  // - branch
  bool upper_is_down_up = true;  // adiabatic label of the + branch

  double mid_down_up() const { return upper_is_down_up ? mid_upper : mid_lower; }
  double mid_up_down() const { return upper_is_down_up ? mid_lower : mid_upper; }
};

// `nuclear_down[i]` is m_i (true = Down) over all nuclei, left cluster first.
PairEnergies analytic_pair_energies(const SpinSystem& sys,
                                    const std::vector<bool>& nuclear_down);

// Single-cluster energy, electron_down selects the electron branch.
double analytic_single_energy(const SpinSystem& sys, bool electron_down,
                              const std::vector<bool>& nuclear_down);

// NMR frequency of nucleus i per the driving protocol: |gamma_n B_i + A_i/2|,
// with the second cluster seeing B0 + dB. This is the frequency entering the
// addressability analysis; the simulation-resonant carrier for an electron
// held in |down> is the exact gap, available via nmr_carrier_exact().
double nmr_frequency(const SpinSystem& sys, int nucleus_index);

// Exact nuclear transition frequency (full Hamiltonian eigen-gap) for
// nucleus i with all electrons down and the other nuclei in the given
// configuration (defaults to all Down).
double nmr_carrier_exact(const SpinSystem& sys, int nucleus_index,
                         std::optional<std::vector<bool>> others = {});

enum class Branch { plus, minus, single };

struct FrequencyEntry {
  int driven_electron = 0;       // which electron the drive addresses
  bool partner_down = true;      // state of the other electron (2 clusters)
  std::vector<bool> controls;    // nuclear configuration, m_i = true for Down
  Branch branch = Branch::single;
  double freq_mhz = 0.0;
};

struct FrequencyTable {
  std::vector<FrequencyEntry> entries;

  std::string to_csv() const;
};

enum class TableMode { analytic, exact };

// All conditional ESR lines: every nuclear configuration, both partner
// electron states and both exchange branches (single cluster: 2^N lines).
FrequencyTable esr_frequency_table(const SpinSystem& sys,
                                   TableMode mode = TableMode::analytic);

struct DetuningOptions {
  bool exclude_accidental = false;   // drop pairs closer than tolerance
  double accidental_tol_mhz = 1e-3;  // 1 kHz
  std::optional<bool> partner_down_only;  // restrict comparison set
  std::optional<int> driven_electron_only;
};

// Smallest |f_target - f_other| over the table. A table with no admissible
// partner yields an infinite sentinel.
double min_detuning(const FrequencyTable& table, const FrequencyEntry& target,
                    const DetuningOptions& opts = {});

// Minimum pairwise |A_i - A_j| over a set of hyperfine couplings.
struct DeltaA {
  double value_mhz = 0.0;
};
DeltaA min_hyperfine_difference(const std::vector<double>& hyperfine_mhz);

}  // namespace cspin
