#pragma once

// Rotating-frame time evolution of driven cluster systems.
//
// The working frame is defined with respect to the diagonalized static
// Hamiltonian: resonant drive elements become constants of magnitude
// rabi/2, off-resonant elements oscillate at their detuning, and
// counter-rotating terms at twice the carrier are dropped. Internally each
// pulse is propagated in a per-carrier frame in which the co-rotating
// generator is constant, which makes the stepping exact for noiseless
// pulses; the result is converted back to the static-eigenbasis rotating
// frame at pulse boundaries. A no-RWA integrator over the same frame is
// kept for cross-validation.

#include <optional>
#include <string>
#include <vector>

#include "cspin/hamiltonian.hpp"
#include "cspin/noise.hpp"
#include "cspin/pulse.hpp"
#include "cspin/spin_system.hpp"

namespace cspin {

struct RotatingFrame {
  Matrix eigvecs;            // V: columns are eigenstates (computational basis)
  Eigen::VectorXd energies;  // MHz
  Matrix coupling;           // W = V^dag G V for the supplied drive
  double carrier_mhz = 0.0;
  std::vector<int> excitation;  // drive-excitation label per eigenstate
  std::vector<std::string> warnings;

  // RWA generator in the rotating frame at time t (us): co-rotating terms
  // only, each oscillating at its own detuning. Zero drive gives the zero
  // matrix; the frame absorbs all statics.
  Matrix generator_at(double t_us) const;

  // Constant co-rotating generator in the carrier frame (diagonal detunings
  // plus static couplings); unitarily equivalent to generator_at up to
  // diagonal phases.
  Matrix carrier_frame_generator() const;
};

RotatingFrame rotating_frame(const SpinSystem& sys, const Matrix& drive,
                             double carrier_mhz, Pulse::Kind kind,
                             int target = 0);

struct TracePoint {
  double time_us = 0.0;
  std::vector<double> populations;  // computational basis
};

struct EvolutionResult {
  Vector final_state;     // rotating frame, computational basis
  Matrix propagator;      // rotating frame, computational basis
  std::vector<TracePoint> traces;
  double norm_error = 0.0;
};

struct EvolveOptions {
  double steps_per_period = 50.0;  // of the fastest frequency present
  bool record_traces = true;
  int max_trace_points = 4096;
  bool no_rwa = false;  // integrate with counter-rotating terms retained
};

EvolutionResult evolve(const SpinSystem& sys, const PulseSequence& pulses,
                       const Vector& initial_state,
                       const NoiseTrace* noise = nullptr,
                       const EvolveOptions& opts = {});

// Drift under noise only (the frame absorbs the statics): diagonal
// dephasing propagator, suitable for Ramsey-style checks.
Matrix free_evolve(const SpinSystem& sys, double duration_us,
                   const NoiseTrace& noise);

struct NuclearGate {
  Matrix unitary;      // nuclear subspace, electron-down block
  double leakage = 0.0;
  std::vector<double> phase_pattern;  // arg of the diagonal, per config
};

// Projects the propagator onto the electron-down subspace (ancilla
// convention: electrons start and end in |down>). Throws if more than half
// the trace weight leaked out of the block.
NuclearGate extract_nuclear_gate(const EvolutionResult& result,
                                 const SpinSystem& sys);

// |Tr(A^dag B)|^2 / (d * Tr(B^dag B)), insensitive to global phase; equals
// the usual process fidelity when B is unitary.
double process_fidelity(const Matrix& ideal, const Matrix& actual);

// Largest absolute difference after aligning global phase.
double max_difference_up_to_phase(const Matrix& a, const Matrix& b);

}  // namespace cspin
