#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "cspin/dynamics.hpp"
#include "cspin/spectrum.hpp"

using namespace cspin;

namespace {

SpinSystem one_p(double a = 117.0, double b0 = 1.35) {
  SpinSystem sys;
  sys.clusters.push_back({{a}});
  sys.b0_t = b0;
  return sys;
}

SpinSystem two_p(double a1 = 50.0, double a2 = 150.0, double b0 = 1.35) {
  SpinSystem sys;
  sys.clusters.push_back({{a1, a2}});
  sys.b0_t = b0;
  return sys;
}

double esr_line(const SpinSystem& sys, const std::vector<bool>& controls) {
  FrequencyTable t = esr_frequency_table(sys, TableMode::exact);
  for (const auto& e : t.entries)
    if (e.controls == controls && e.partner_down) return e.freq_mhz;
  throw std::runtime_error("line not found");
}

Vector basis_state(const SpinSystem& sys, const std::vector<bool>& e_down,
                   const std::vector<bool>& n_down) {
  Vector v = Vector::Zero(sys.dimension());
  SpinBasisLabel l;
  l.electron_down = e_down;
  l.nuclear_down = n_down;
  v(l.to_index(sys)) = 1.0;
  return v;
}

double electron_up_population(const SpinSystem& sys,
                              const std::vector<double>& pops) {
  // Electron is spin 0 = the top bit; up = bit 0.
  double up = 0.0;
  for (int i = 0; i < sys.dimension() / 2; ++i) up += pops[static_cast<size_t>(i)];
  return up;
}

}  // namespace

TEST_CASE("rotating frame generator basics") {
  SpinSystem sys = one_p();
  const double line = esr_line(sys, {false});  // nucleus Up

  SUBCASE("zero drive gives the zero generator") {
    Matrix d = build_drive_hamiltonian(sys, {DriveTarget::electron, 0}, 0.0, 0.0);
    RotatingFrame f = rotating_frame(sys, d, line, Pulse::ESR);
    CHECK(f.generator_at(0.37).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("resonant element is constant at rabi/2") {
    Matrix d = build_drive_hamiltonian(sys, {DriveTarget::electron, 0}, 0.5, 0.0);
    RotatingFrame f = rotating_frame(sys, d, line, Pulse::ESR);
    double elem0 = 0.0, elem1 = 0.0;
    const Matrix g0 = f.generator_at(0.0);
    const Matrix g1 = f.generator_at(1.234);
    for (int k = 0; k < g0.rows(); ++k)
      for (int l = 0; l < g0.cols(); ++l) {
        // The resonant pair sits where the gap equals the carrier.
        const double gap = f.energies(k) - f.energies(l);
        if (std::abs(gap - line) < 1e-6) {
          elem0 = std::abs(g0(k, l));
          elem1 = std::abs(g1(k, l));
        }
      }
    CHECK(elem0 == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(elem1 == doctest::Approx(0.25).epsilon(1e-6));
  }
  SUBCASE("off-resonant element rotates at its detuning") {
    Matrix d = build_drive_hamiltonian(sys, {DriveTarget::electron, 0}, 0.5, 0.0);
    const double other = esr_line(sys, {true});
    RotatingFrame f = rotating_frame(sys, d, line, Pulse::ESR);
    const double delta = other - line;  // = -A here
    // Phase advance of the off-resonant element over dt.
    const double dt = 1e-3;
    const Matrix g0 = f.generator_at(0.0);
    const Matrix g1 = f.generator_at(dt);
    for (int k = 0; k < g0.rows(); ++k)
      for (int l = 0; l < g0.cols(); ++l) {
        const double gap = f.energies(k) - f.energies(l);
        if (std::abs(gap - other) < 1e-6 && std::abs(g0(k, l)) > 0.2) {
          const double dphi = std::arg(g1(k, l) / g0(k, l));
          CHECK(dphi == doctest::Approx(2.0 * M_PI * delta * dt).epsilon(1e-4));
        }
      }
  }
  SUBCASE("far-off carrier raises a warning") {
    Matrix d = build_drive_hamiltonian(sys, {DriveTarget::electron, 0}, 0.5, 0.0);
    RotatingFrame f = rotating_frame(sys, d, 3.0, Pulse::ESR);
    CHECK(!f.warnings.empty());
  }
}

TEST_CASE("resonant 2pi ESR returns the population and imprints a pi phase") {
  SpinSystem sys = one_p();
  Pulse p;
  p.kind = Pulse::ESR;
  p.carrier_mhz = esr_line(sys, {false});
  p.rabi_mhz = 0.5;
  p.duration_us = two_pi_pulse_duration(p.rabi_mhz);
  PulseSequence seq{{p}};

  Vector init = basis_state(sys, {true}, {false});
  EvolutionResult r = evolve(sys, seq, init, nullptr, {});
  CHECK(r.norm_error < 1e-9);

  const int idx = SpinBasisLabel{{true}, {false}}.to_index(sys);
  const Complex amp = r.final_state(idx);
  CHECK(std::abs(amp) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(std::abs(std::arg(amp)) - M_PI) < 0.01);

  // Spectator branch: nucleus Down keeps its population and no pi phase.
  Vector spect = basis_state(sys, {true}, {true});
  EvolutionResult r2 = evolve(sys, seq, spect, nullptr, {});
  const int idx2 = SpinBasisLabel{{true}, {true}}.to_index(sys);
  CHECK(std::abs(r2.final_state(idx2)) == doctest::Approx(1.0).epsilon(2e-4));
  CHECK(std::abs(std::arg(r2.final_state(idx2))) < 0.1);
}

TEST_CASE("off-resonant peak transfer follows the Rabi formula") {
  SpinSystem sys = one_p();
  const double line = esr_line(sys, {false});
  const double f = 0.5;

  auto peak_for = [&](double delta) {
    Pulse p;
    p.kind = Pulse::ESR;
    p.carrier_mhz = line + delta;
    p.rabi_mhz = f;
    p.duration_us = 2.0 / std::sqrt(f * f + delta * delta);
    PulseSequence seq{{p}};
    Vector init = basis_state(sys, {true}, {false});
    EvolveOptions opts;
    opts.max_trace_points = 3000;
    EvolutionResult r = evolve(sys, seq, init, nullptr, opts);
    double peak = 0.0;
    for (const auto& pt : r.traces)
      peak = std::max(peak, electron_up_population(sys, pt.populations));
    return peak;
  };

  SUBCASE("small detuning, 0.25 MHz -> 0.8") {
    CHECK(peak_for(0.25) == doctest::Approx(0.8).epsilon(0.02));
  }
  SUBCASE("large detuning, 45 MHz -> <= 1.5e-4") {
    const double peak = peak_for(45.0);
    CHECK(peak <= 1.5e-4);
    CHECK(peak == doctest::Approx(0.25 / (0.25 + 45.0 * 45.0)).epsilon(0.02));
  }
  SUBCASE("sweep of detuning over two decades") {
    for (double ratio : {0.0, 0.5, 2.0, 10.0, 100.0}) {
      const double delta = ratio * f;
      const double expect = f * f / (f * f + delta * delta);
      CHECK(peak_for(delta) == doctest::Approx(expect).epsilon(0.02));
    }
  }
}

TEST_CASE("unitarity of the propagator") {
  SpinSystem sys = two_p();
  Pulse p;
  p.kind = Pulse::ESR;
  p.carrier_mhz = esr_line(sys, {false, false});
  p.rabi_mhz = 0.5;
  p.duration_us = two_pi_pulse_duration(p.rabi_mhz);
  PulseSequence seq{{p}};
  Vector init = basis_state(sys, {true}, {false, false});
  EvolutionResult r = evolve(sys, seq, init, nullptr, {});
  const Matrix u = r.propagator;
  CHECK((u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()))
            .cwiseAbs()
            .maxCoeff() < 1e-8);
}

TEST_CASE("lab-frame and rotating-frame populations agree") {
  // Small system, weak drive: the no-RWA integration over the same frame
  // must reproduce the RWA populations to 1e-6.
  SpinSystem sys = one_p(1.0, 0.01);  // gamma_e B0 = 279.7 MHz
  const double line = esr_line(sys, {false});
  Pulse p;
  p.kind = Pulse::ESR;
  p.carrier_mhz = line;
  p.rabi_mhz = 0.05;
  // Partial rotation spanning an integer number of carrier half-periods,
  // where the first-order counter-rotating micromotion closes on itself.
  p.duration_us = std::round(2.0 * 2.0 * line) / (2.0 * line);
  PulseSequence seq{{p}};
  Vector init = basis_state(sys, {true}, {false});

  EvolveOptions rwa;
  rwa.record_traces = false;
  EvolutionResult r1 = evolve(sys, seq, init, nullptr, rwa);

  EvolveOptions lab;
  lab.record_traces = false;
  lab.no_rwa = true;
  lab.steps_per_period = 220.0;
  EvolutionResult r2 = evolve(sys, seq, init, nullptr, lab);

  for (int i = 0; i < sys.dimension(); ++i)
    CHECK(std::norm(r1.final_state(i)) ==
          doctest::Approx(std::norm(r2.final_state(i))).epsilon(2e-6).scale(1.0));
}

TEST_CASE("conditional 2pi ESR on a 2P cluster realizes a CZ") {
  SpinSystem sys = two_p(50.0, 150.0);  // delta-A = 100 MHz
  Pulse p;
  p.kind = Pulse::ESR;
  p.carrier_mhz = esr_line(sys, {false, false});  // both nuclei Up
  p.rabi_mhz = 0.5;
  p.duration_us = two_pi_pulse_duration(p.rabi_mhz);
  PulseSequence seq{{p}};

  Vector init = basis_state(sys, {true}, {false, false});
  EvolveOptions opts;
  opts.record_traces = false;
  EvolutionResult r = evolve(sys, seq, init, nullptr, opts);
  NuclearGate gate = extract_nuclear_gate(r, sys);

  CHECK(gate.leakage < 1e-3);
  Matrix ideal = Matrix::Identity(4, 4);
  ideal(0, 0) = -1.0;  // Up-Up configuration carries the pi phase
  CHECK(process_fidelity(ideal, gate.unitary) >= 0.99);

  SUBCASE("phase pattern singles out the driven configuration") {
    CHECK(std::abs(std::abs(gate.phase_pattern[0]) - M_PI) < 0.05);
    for (int i = 1; i < 4; ++i) CHECK(std::abs(gate.phase_pattern[static_cast<size_t>(i)]) < 0.1);
  }
}

TEST_CASE("identity sequence extracts the identity gate") {
  SpinSystem sys = two_p();
  EvolutionResult r;
  r.propagator = Matrix::Identity(sys.dimension(), sys.dimension());
  r.final_state = basis_state(sys, {true}, {true, true});
  NuclearGate gate = extract_nuclear_gate(r, sys);
  CHECK(gate.leakage == doctest::Approx(0.0));
  CHECK(process_fidelity(Matrix::Identity(4, 4), gate.unitary) ==
        doctest::Approx(1.0));
}

TEST_CASE("leakage above one half is rejected") {
  SpinSystem sys = one_p();
  EvolutionResult r;
  r.propagator = Matrix::Zero(sys.dimension(), sys.dimension());
  // Map the electron-down block entirely out of the subspace.
  r.propagator(0, 2) = 1.0;
  r.propagator(1, 3) = 1.0;
  r.propagator(2, 0) = 1.0;
  r.propagator(3, 1) = 1.0;
  r.final_state = Vector::Zero(sys.dimension());
  r.final_state(0) = 1.0;
  CHECK_THROWS_AS(extract_nuclear_gate(r, sys), std::runtime_error);
}

TEST_CASE("evolve rejects malformed inputs") {
  SpinSystem sys = one_p();
  Pulse p;
  p.kind = Pulse::ESR;
  p.carrier_mhz = esr_line(sys, {false});
  p.rabi_mhz = 0.5;
  p.duration_us = 1.0;
  PulseSequence seq{{p}};

  Vector bad = Vector::Zero(sys.dimension());
  bad(0) = 0.5;  // not normalized
  CHECK_THROWS_AS(evolve(sys, seq, bad, nullptr, {}), std::invalid_argument);

  Vector ok = basis_state(sys, {true}, {false});
  Pulse zero_dur = p;
  zero_dur.duration_us = 0.0;
  PulseSequence bad_seq{{zero_dur}};
  CHECK_THROWS_AS(evolve(sys, bad_seq, ok, nullptr, {}), std::invalid_argument);
}
