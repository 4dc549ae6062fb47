#pragma once

// Hamiltonian assembly over the tensor-product spin space.
//
// Conventions used throughout the library:
//   - energies and frequencies in MHz (plain, not angular), hbar = 1,
//   - time in microseconds, so U(t) = exp(-i 2*pi H t),
//   - magnetic fields in tesla,
//   - basis ordering: electrons left-to-right, then nuclei (left cluster
//     first); spin 0 is the most significant bit; bit 0 = up.

#include "cspin/operators.hpp"
#include "cspin/spin_system.hpp"

namespace cspin {

// Hyperfine treatment. `full` keeps the vector S.I coupling; `secular`
// keeps only the ZZ part. Exchange S_L.S_R is always kept in full: the
// analytic level structure diagonalizes it exactly.
enum class HyperfineModel { full, secular };

Matrix build_static_hamiltonian(const SpinSystem& sys,
                                HyperfineModel model = HyperfineModel::full);

struct DriveTarget {
  enum Kind { electron, nucleus } kind = electron;
  int index = 0;  // electron index for ESR (coupling still hits all
                  // electrons), nucleus index for NMR
};

// Transverse drive operator: rabi * (sx cos(phase) + sy sin(phase)) / 2 on
// the driven spin(s), identity elsewhere. ESR couples every electron (the
// alternating field is global); NMR couples only the targeted nucleus.
Matrix build_drive_hamiltonian(const SpinSystem& sys, DriveTarget target,
                               double rabi_mhz, double phase_rad);

// Total z-magnetization operator sum_s sigma_z(s)/2; commutes with the
// static Hamiltonian.
Matrix total_sz(const SpinSystem& sys);

}  // namespace cspin
