#include "cspin/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace cspin {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

struct EigenSystem {
  Matrix vecs;
  Eigen::VectorXd vals;
  std::vector<int> dominant;  // computational index per eigenstate
};

EigenSystem diagonalize_static(const SpinSystem& sys) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(build_static_hamiltonian(sys));
  EigenSystem out;
  out.vecs = es.eigenvectors();
  out.vals = es.eigenvalues();
  const int dim = static_cast<int>(out.vals.size());
  out.dominant.resize(static_cast<size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    int best = 0;
    double w = -1.0;
    for (int i = 0; i < dim; ++i) {
      double p = std::norm(out.vecs(i, k));
      if (p > w) w = p, best = i;
    }
    out.dominant[static_cast<size_t>(k)] = best;
  }
  return out;
}

// Drive-excitation label of a computational index: electron-up count for
// ESR, the target nucleus' up bit for NMR.
int excitation_of(const SpinSystem& sys, int comp_index, Pulse::Kind kind,
                  int target) {
  const int n = sys.n_spins();
  if (kind == Pulse::ESR) {
    int ups = 0;
    for (int e = 0; e < sys.n_electrons(); ++e)
      ups += ((comp_index >> (n - 1 - e)) & 1) == 0;
    return ups;
  }
  const int site = sys.n_electrons() + target;
  return ((comp_index >> (n - 1 - site)) & 1) == 0;
}

// Diagonal of V^dag (sum_j eps_j delta sigma_z,j / 2) V for one noise
// sample; the off-diagonal part is suppressed by the level gaps and is
// dropped (quasi-static dephasing).
Eigen::VectorXd noise_diagonal(const SpinSystem& sys, const EigenSystem& eig,
                               const NoiseTrace& noise, double sample_value) {
  const int n = sys.n_spins();
  const int dim = sys.dimension();
  Eigen::VectorXd half_z(dim);
  for (int i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
      const double eps = s < static_cast<int>(noise.eps_mhz.size())
                             ? noise.eps_mhz[static_cast<size_t>(s)]
                             : 0.0;
      const double sz = ((i >> (n - 1 - s)) & 1) ? -0.5 : 0.5;
      acc += eps * sz;
    }
    half_z(i) = acc * sample_value;
  }
  Eigen::VectorXd out(dim);
  for (int k = 0; k < dim; ++k) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) acc += std::norm(eig.vecs(i, k)) * half_z(i);
    out(k) = acc;
  }
  return out;
}

Matrix hermitian_exp(const Matrix& h, double scale) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Vector phases(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k)
    phases(k) = std::exp(Complex(0.0, scale * es.eigenvalues()(k)));
  return es.eigenvectors() * phases.asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace

Matrix RotatingFrame::generator_at(double t_us) const {
  const int dim = static_cast<int>(energies.size());
  Matrix h = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k)
    for (int l = 0; l < dim; ++l) {
      if (k == l) continue;
      const double gap = energies(k) - energies(l);
      if (gap <= 0.0) continue;  // fill upper transition, mirror below
      // Co-rotating part of 2 cos(2 pi f t) acting on an upward transition.
      const Complex elem = coupling(k, l) *
                           std::exp(Complex(0.0, kTwoPi * (gap - carrier_mhz) * t_us));
      h(k, l) += elem;
      h(l, k) += std::conj(elem);
    }
  return h;
}

Matrix RotatingFrame::carrier_frame_generator() const {
  const int dim = static_cast<int>(energies.size());
  Matrix h = Matrix::Zero(dim, dim);
  const double e_ref = energies(0) - carrier_mhz * excitation[0];
  for (int k = 0; k < dim; ++k)
    h(k, k) = energies(k) - carrier_mhz * excitation[static_cast<size_t>(k)] - e_ref;
  for (int k = 0; k < dim; ++k)
    for (int l = 0; l < dim; ++l)
      if (excitation[static_cast<size_t>(k)] ==
          excitation[static_cast<size_t>(l)] + 1)
        h(k, l) += coupling(k, l), h(l, k) += std::conj(coupling(k, l));
  return h;
}

RotatingFrame rotating_frame(const SpinSystem& sys, const Matrix& drive,
                             double carrier_mhz, Pulse::Kind kind,
                             int target) {
  const EigenSystem eig = diagonalize_static(sys);
  RotatingFrame frame;
  frame.eigvecs = eig.vecs;
  frame.energies = eig.vals;
  frame.coupling = eig.vecs.adjoint() * drive * eig.vecs;
  frame.carrier_mhz = carrier_mhz;
  const int dim = static_cast<int>(eig.vals.size());
  frame.excitation.resize(static_cast<size_t>(dim));
  for (int k = 0; k < dim; ++k)
    frame.excitation[static_cast<size_t>(k)] =
        excitation_of(sys, eig.dominant[static_cast<size_t>(k)], kind, target);

  // Flag a carrier with no transition anywhere near it.
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim; ++k)
    for (int l = 0; l < dim; ++l)
      if (frame.excitation[static_cast<size_t>(k)] ==
          frame.excitation[static_cast<size_t>(l)] + 1)
        best = std::min(best, std::abs((eig.vals(k) - eig.vals(l)) - carrier_mhz));
  if (best > 0.3 * carrier_mhz)
    frame.warnings.push_back("carrier is far outside the spectral band");
  return frame;
}

namespace {

struct PulseContext {
  Matrix u_a;            // accumulated carrier-frame propagator for the pulse
  Matrix h_const;        // carrier-frame generator without noise
  Eigen::VectorXd a_diag;  // carrier frame diagonal f_c * q_k
  double dt = 0.0;
  int steps = 0;
};

}  // namespace

EvolutionResult evolve(const SpinSystem& sys, const PulseSequence& pulses,
                       const Vector& initial_state, const NoiseTrace* noise,
                       const EvolveOptions& opts) {
  sys.validate();
  const int dim = sys.dimension();
  if (initial_state.size() != dim)
    throw std::invalid_argument("initial state dimension mismatch");
  if (std::abs(initial_state.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("initial state must be normalized");
  for (const auto& p : pulses.pulses) p.validate();

  const EigenSystem eig = diagonalize_static(sys);

  // State carried in the static eigenbasis, Schrodinger picture.
  Vector psi = eig.vecs.adjoint() * initial_state;
  Matrix u_schr = Matrix::Identity(dim, dim);

  EvolutionResult result;
  double t_abs = 0.0;

  const double total = pulses.total_duration_us();
  const int max_pts = std::max(2, opts.max_trace_points);
  const double trace_dt = total > 0.0 ? total / max_pts : 1.0;
  double next_trace = 0.0;

  auto record = [&](double t) {
    if (!opts.record_traces) return;
    TracePoint pt;
    pt.time_us = t;
    // Schrodinger-picture populations in the computational basis.
    Vector comp = eig.vecs * psi;
    pt.populations.resize(static_cast<size_t>(dim));
    for (int i = 0; i < dim; ++i) pt.populations[static_cast<size_t>(i)] = std::norm(comp(i));
    result.traces.push_back(std::move(pt));
    result.norm_error = std::max(result.norm_error, std::abs(psi.norm() - 1.0));
  };
  record(0.0);
  next_trace = trace_dt;

  for (const auto& pulse : pulses.pulses) {
    const Matrix drive = build_drive_hamiltonian(
        sys,
        pulse.kind == Pulse::ESR
            ? DriveTarget{DriveTarget::electron, pulse.target}
            : DriveTarget{DriveTarget::nucleus, pulse.target},
        pulse.rabi_mhz, 0.0);
    const Matrix w = eig.vecs.adjoint() * drive * eig.vecs;

    std::vector<int> q(static_cast<size_t>(dim));
    for (int k = 0; k < dim; ++k)
      q[static_cast<size_t>(k)] = excitation_of(
          sys, eig.dominant[static_cast<size_t>(k)], pulse.kind, pulse.target);

    // Constant co-rotating generator in the carrier frame; the pulse phase
    // is referenced to a continuous oscillator (absolute time).
    const double e_ref = eig.vals(0) - pulse.carrier_mhz * q[0];
    Matrix h = Matrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k)
      h(k, k) = eig.vals(k) - pulse.carrier_mhz * q[static_cast<size_t>(k)] - e_ref;
    const Complex phase_fac = std::exp(Complex(0.0, -pulse.phase_rad));
    for (int k = 0; k < dim; ++k)
      for (int l = 0; l < dim; ++l)
        if (q[static_cast<size_t>(k)] == q[static_cast<size_t>(l)] + 1) {
          const Complex elem = w(k, l) * phase_fac;
          h(k, l) += elem;
          h(l, k) += std::conj(elem);
        }

    Matrix h_norwa;  // only used when counter-rotating terms are kept
    if (opts.no_rwa) h_norwa = w;

    // Fastest frequency present: spectral width by Gershgorin, plus the
    // carrier itself when integrating without the RWA.
    double lo = h(0, 0).real(), hi = h(0, 0).real();
    for (int k = 0; k < dim; ++k) {
      double r = 0.0;
      for (int l = 0; l < dim; ++l)
        if (l != k) r += std::abs(h(k, l));
      lo = std::min(lo, h(k, k).real() - r);
      hi = std::max(hi, h(k, k).real() + r);
    }
    double f_max = std::max(hi - lo, 1.0 / pulse.duration_us);
    if (opts.no_rwa) f_max += 2.0 * pulse.carrier_mhz;
    const double dt_raw = 1.0 / (opts.steps_per_period * f_max);
    if (!(dt_raw > 0.0) || dt_raw < 1e-12)
      throw std::runtime_error("step size underflow");
    const int steps = std::max(1, static_cast<int>(std::ceil(pulse.duration_us / dt_raw)));
    const double dt = pulse.duration_us / steps;

    // Propagate. In the carrier frame the noiseless generator is constant,
    // so one exponential serves every step.
    const double t0 = t_abs;
    auto a_phase = [&](double t, int k) {
      return std::exp(Complex(0.0, -kTwoPi * pulse.carrier_mhz *
                                       q[static_cast<size_t>(k)] * t));
    };

    Vector psi_a(dim);
    for (int k = 0; k < dim; ++k) psi_a(k) = psi(k) / a_phase(t0, k);
    Matrix u_a = Matrix::Identity(dim, dim);

    if (!noise && !opts.no_rwa && !opts.record_traces) {
      // Constant generator: the whole pulse is one exponential.
      u_a = hermitian_exp(h, -kTwoPi * pulse.duration_us);
      psi_a = u_a * psi_a;
      const double t1 = t0 + pulse.duration_us;
      const Complex ref_phase =
          std::exp(Complex(0.0, -kTwoPi * e_ref * pulse.duration_us));
      Matrix u_pulse(dim, dim);
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l)
          u_pulse(k, l) = ref_phase * a_phase(t1, k) * u_a(k, l) / a_phase(t0, l);
      u_schr = u_pulse * u_schr;
      for (int k = 0; k < dim; ++k)
        psi(k) = ref_phase * psi_a(k) * a_phase(t1, k);
      t_abs = t1;
      continue;
    }

    Matrix u_step;
    if (!noise && !opts.no_rwa) u_step = hermitian_exp(h, -kTwoPi * dt);

    for (int s = 0; s < steps; ++s) {
      const double t_mid = t0 + (s + 0.5) * dt;
      if (opts.no_rwa) {
        // No-RWA cross-check: full oscillating coupling in the carrier
        // frame, fourth-order commutator-free stepping.
        auto h_at = [&](double t) {
          Matrix m = h;
          m.diagonal().setZero();
          for (int k = 0; k < dim; ++k) m(k, k) = eig.vals(k) - pulse.carrier_mhz * q[static_cast<size_t>(k)] - e_ref;
          for (int k = 0; k < dim; ++k)
            for (int l = 0; l < dim; ++l) {
              if (k == l) continue;
              const int dq = q[static_cast<size_t>(k)] - q[static_cast<size_t>(l)];
              // field 2cos(2 pi f t + phi) in the frame rotating at f*q
              const double arg = kTwoPi * pulse.carrier_mhz * t + pulse.phase_rad;
              const Complex field = std::exp(Complex(0.0, arg)) +
                                    std::exp(Complex(0.0, -arg));
              const Complex rot = std::exp(
                  Complex(0.0, kTwoPi * pulse.carrier_mhz * dq * t));
              m(k, l) = h_norwa(k, l) * field * rot;
            }
          if (noise) {
            const int idx = std::min(noise->size() - 1,
                                     static_cast<int>(t / noise->dt_us));
            m.diagonal() += noise_diagonal(sys, eig, *noise,
                                           noise->samples[static_cast<size_t>(idx)])
                                .cast<Complex>();
          }
          return m;
        };
        const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
        const double a1 = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0;
        const double a2 = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;
        const Matrix h1 = h_at(t0 + s * dt + c1 * dt);
        const Matrix h2 = h_at(t0 + s * dt + c2 * dt);
        const Matrix u1 = hermitian_exp(a2 * h1 + a1 * h2, -kTwoPi * dt);
        const Matrix u2 = hermitian_exp(a1 * h1 + a2 * h2, -kTwoPi * dt);
        u_a = u1 * u2 * u_a;
        psi_a = u1 * (u2 * psi_a);
      } else if (noise) {
        const int idx = std::min(noise->size() - 1,
                                 static_cast<int>(t_mid / noise->dt_us));
        Matrix hn = h;
        hn.diagonal() += noise_diagonal(sys, eig, *noise,
                                        noise->samples[static_cast<size_t>(idx)])
                             .cast<Complex>();
        const Matrix u = hermitian_exp(hn, -kTwoPi * dt);
        u_a = u * u_a;
        psi_a = u * psi_a;
      } else {
        u_a = u_step * u_a;
        psi_a = u_step * psi_a;
      }

      const double t_now = t0 + (s + 1) * dt;
      if (opts.record_traces && (t_now >= next_trace || s == steps - 1)) {
        for (int k = 0; k < dim; ++k) psi(k) = psi_a(k) * a_phase(t_now, k);
        record(t_now);
        while (next_trace <= t_now) next_trace += trace_dt;
      }
    }

    // Back to the Schrodinger picture in the eigenbasis. The reference
    // shift e_ref was subtracted from the generator; restore its phase so
    // the propagator carries no pulse-dependent global factor.
    const double t1 = t0 + pulse.duration_us;
    const Complex ref_phase =
        std::exp(Complex(0.0, -kTwoPi * e_ref * pulse.duration_us));
    Matrix u_pulse(dim, dim);
    for (int k = 0; k < dim; ++k)
      for (int l = 0; l < dim; ++l)
        u_pulse(k, l) = ref_phase * a_phase(t1, k) * u_a(k, l) / a_phase(t0, l);
    u_schr = u_pulse * u_schr;
    for (int k = 0; k < dim; ++k)
      psi(k) = ref_phase * psi_a(k) * a_phase(t1, k);
    t_abs = t1;
  }

  // Rotating-frame result: strip the static phases accumulated over the
  // whole sequence.
  Vector rot_phases(dim);
  for (int k = 0; k < dim; ++k)
    rot_phases(k) = std::exp(Complex(0.0, kTwoPi * eig.vals(k) * t_abs));
  Matrix u_rot = rot_phases.asDiagonal() * u_schr;

  result.final_state = eig.vecs * (rot_phases.asDiagonal() * psi);
  result.propagator = eig.vecs * u_rot * eig.vecs.adjoint();
  result.norm_error = std::max(result.norm_error,
                               std::abs(result.final_state.norm() - 1.0));
  return result;
}

Matrix free_evolve(const SpinSystem& sys, double duration_us,
                   const NoiseTrace& noise) {
  const EigenSystem eig = diagonalize_static(sys);
  const int dim = sys.dimension();
  Eigen::VectorXd phase_acc = Eigen::VectorXd::Zero(dim);
  const int steps = std::max(
      1, static_cast<int>(std::ceil(duration_us / noise.dt_us)));
  const double dt = duration_us / steps;
  for (int s = 0; s < steps; ++s) {
    const int idx = std::min(noise.size() - 1,
                             static_cast<int>((s + 0.5) * dt / noise.dt_us));
    phase_acc += dt * noise_diagonal(sys, eig, noise,
                                     noise.samples[static_cast<size_t>(idx)]);
  }
  Vector diag(dim);
  for (int k = 0; k < dim; ++k)
    diag(k) = std::exp(Complex(0.0, -kTwoPi * phase_acc(k)));
  return eig.vecs * diag.asDiagonal() * eig.vecs.adjoint();
}

NuclearGate extract_nuclear_gate(const EvolutionResult& result,
                                 const SpinSystem& sys) {
  const int ne = sys.n_electrons();
  const int nn = sys.n_nuclei();
  const int dn = 1 << nn;
  const int elec_mask = ((1 << ne) - 1) << nn;  // all electrons down

  NuclearGate gate;
  gate.unitary = Matrix(dn, dn);
  for (int x = 0; x < dn; ++x)
    for (int y = 0; y < dn; ++y)
      gate.unitary(x, y) = result.propagator(elec_mask | x, elec_mask | y);

  gate.leakage = 1.0 - gate.unitary.squaredNorm() / dn;
  if (gate.leakage > 0.5)
    throw std::runtime_error(
        "gate extraction invalid: leakage out of the electron-down subspace "
        "exceeds 0.5");
  gate.phase_pattern.resize(static_cast<size_t>(dn));
  for (int x = 0; x < dn; ++x)
    gate.phase_pattern[static_cast<size_t>(x)] = std::arg(gate.unitary(x, x));
  return gate;
}

double process_fidelity(const Matrix& ideal, const Matrix& actual) {
  const double d = static_cast<double>(ideal.rows());
  const double overlap = std::norm((ideal.adjoint() * actual).trace());
  const double weight = (actual.adjoint() * actual).trace().real();
  if (weight <= 0.0) return 0.0;
  return overlap / (d * weight);
}

double max_difference_up_to_phase(const Matrix& a, const Matrix& b) {
  const Complex tr = (a.adjoint() * b).trace();
  const Complex phase = std::abs(tr) > 0 ? tr / std::abs(tr) : Complex(1.0);
  return (a * phase - b).cwiseAbs().maxCoeff();
}

}  // namespace cspin
