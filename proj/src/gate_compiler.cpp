#include "cspin/gate_compiler.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

namespace cspin {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::string config_string(const std::vector<bool>& m) {
  std::string s;
  for (bool d : m) s += d ? 'D' : 'U';
  return s;
}

struct ResolvedLine {
  double carrier_mhz = 0.0;
  double element = 0.0;  // unit-rabi coupling magnitude
};

class LineResolver {
 public:
  virtual ~LineResolver() = default;
  virtual ResolvedLine esr(int driven, bool partner_up,
                           const std::vector<bool>& m) const = 0;
  virtual ResolvedLine nmr(int nucleus) const = 0;
};

// Carriers and couplings from full diagonalization; what the simulator is
// resonant with.
class ExactResolver : public LineResolver {
 public:
  explicit ExactResolver(const SpinSystem& sys) : sys_(sys) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(build_static_hamiltonian(sys));
    vecs_ = es.eigenvectors();
    vals_ = es.eigenvalues();
    w_esr_ = vecs_.adjoint() *
             build_drive_hamiltonian(sys, {DriveTarget::electron, 0}, 1.0, 0.0) *
             vecs_;
    w_nmr_.resize(static_cast<size_t>(sys.n_nuclei()));
    for (int j = 0; j < sys.n_nuclei(); ++j)
      w_nmr_[static_cast<size_t>(j)] =
          vecs_.adjoint() *
          build_drive_hamiltonian(sys, {DriveTarget::nucleus, j}, 1.0, 0.0) *
          vecs_;
    const int dim = static_cast<int>(vals_.size());
    const int n = sys.n_spins();
    elec_ups_.resize(static_cast<size_t>(dim));
    for (int k = 0; k < dim; ++k) {
      int ups = 0;
      const int best = dominant(k);
      for (int e = 0; e < sys.n_electrons(); ++e)
        ups += ((best >> (n - 1 - e)) & 1) == 0;
      elec_ups_[static_cast<size_t>(k)] = ups;
    }
  }

  ResolvedLine esr(int driven, bool partner_up,
                   const std::vector<bool>& m) const override {
    std::vector<bool> elec(static_cast<size_t>(sys_.n_electrons()), true);
    if (partner_up)
      for (int e = 0; e < sys_.n_electrons(); ++e)
        if (e != driven) elec[static_cast<size_t>(e)] = false;
    const int i0 = index_of(elec, m);
    const int k0 = state_near(i0);

    std::vector<bool> elec_f = elec;
    elec_f[static_cast<size_t>(driven)] = false;
    const int i1 = index_of(elec_f, m);

    const int dim = static_cast<int>(vals_.size());
    int best = -1;
    double w = -1.0;
    for (int l = 0; l < dim; ++l) {
      if (elec_ups_[static_cast<size_t>(l)] !=
          elec_ups_[static_cast<size_t>(k0)] + 1)
        continue;
      const double p = std::norm(vecs_(i1, l));
      if (p > w) w = p, best = l;
    }
    if (best < 0) throw std::runtime_error("no ESR transition found");
    ResolvedLine line{vals_(best) - vals_(k0), std::abs(w_esr_(best, k0))};
    if (line.element < 1e-9)
      throw std::runtime_error("ESR line has vanishing matrix element");
    return line;
  }

  ResolvedLine nmr(int nucleus) const override {
    std::vector<bool> elec(static_cast<size_t>(sys_.n_electrons()), true);
    std::vector<bool> lo(static_cast<size_t>(sys_.n_nuclei()), true), hi = lo;
    hi[static_cast<size_t>(nucleus)] = false;
    const int k0 = state_near(index_of(elec, lo));
    const int k1 = state_near(index_of(elec, hi));
    ResolvedLine line{std::abs(vals_(k1) - vals_(k0)),
                      std::abs(w_nmr_[static_cast<size_t>(nucleus)](k1, k0))};
    if (line.element < 1e-9)
      throw std::runtime_error("NMR line has vanishing matrix element");
    return line;
  }

 private:
  int index_of(const std::vector<bool>& elec,
               const std::vector<bool>& nuc) const {
    SpinBasisLabel l;
    l.electron_down = elec;
    l.nuclear_down = nuc;
    return l.to_index(sys_);
  }
  int dominant(int k) const {
    int best = 0;
    double w = -1.0;
    for (int i = 0; i < vecs_.rows(); ++i) {
      const double p = std::norm(vecs_(i, k));
      if (p > w) w = p, best = i;
    }
    return best;
  }
  int state_near(int comp) const {
    int best = 0;
    double w = -1.0;
    for (int k = 0; k < vecs_.cols(); ++k) {
      const double p = std::norm(vecs_(comp, k));
      if (p > w) w = p, best = k;
    }
    return best;
  }

  SpinSystem sys_;
  Matrix vecs_;
  Eigen::VectorXd vals_;
  Matrix w_esr_;
  std::vector<Matrix> w_nmr_;
  std::vector<int> elec_ups_;
};

// Closed-form carriers; no dense linear algebra. Used by the sweep runner.
class AnalyticResolver : public LineResolver {
 public:
  explicit AnalyticResolver(const SpinSystem& sys) : sys_(sys) {}

  ResolvedLine esr(int driven, bool partner_up,
                   const std::vector<bool>& m) const override {
    if (sys_.n_electrons() == 1) {
      return {analytic_single_energy(sys_, false, m) -
                  analytic_single_energy(sys_, true, m),
              0.5};
    }
    const PairEnergies pe = analytic_pair_energies(sys_, m);
    // Mixing amplitudes of the antiparallel eigenstates in the
    // {down_L up_R, up_L down_R} product basis.
    const double h = 0.5 * sys_.gamma_e * (sys_.field_at(1) - sys_.field_at(0)) +
                     0.25 * (signed_sum(1, m) - signed_sum(0, m));
    const double half_j = 0.5 * sys_.j_mhz;
    const double root = std::sqrt(h * h + half_j * half_j);
    // Upper eigenvector direction (c_du, c_ud) ~ (J/2, root - h).
    double c_du_u = half_j, c_ud_u = root - h;
    const double nu = std::hypot(c_du_u, c_ud_u);
    if (nu < 1e-12) c_du_u = 1.0, c_ud_u = 0.0;
    else c_du_u /= nu, c_ud_u /= nu;
    const double c_du_l = c_ud_u, c_ud_l = c_du_u;  // orthogonal complement

    double carrier, elem;
    if (!partner_up) {
      // |dd> -> mid: driving L couples through the up_L down_R component.
      const double amp_u = driven == 0 ? c_ud_u : c_du_u;
      const double amp_l = driven == 0 ? c_ud_l : c_du_l;
      if (std::abs(amp_u) >= std::abs(amp_l)) {
        carrier = pe.mid_upper - pe.down_down;
        elem = 0.5 * std::abs(amp_u);
      } else {
        carrier = pe.mid_lower - pe.down_down;
        elem = 0.5 * std::abs(amp_l);
      }
    } else {
      // mid -> |uu>: the parked state is the adiabatic down_L up_R branch.
      const double amp_u = driven == 0 ? c_du_u : c_ud_u;
      const double amp_l = driven == 0 ? c_du_l : c_ud_l;
      const bool park_upper = pe.upper_is_down_up;
      carrier = pe.up_up - (park_upper ? pe.mid_upper : pe.mid_lower);
      elem = 0.5 * std::abs(park_upper ? amp_u : amp_l);
    }
    if (elem < 1e-9)
      throw std::runtime_error("ESR line has vanishing matrix element");
    return {carrier, elem};
  }

  ResolvedLine nmr(int nucleus) const override {
    const double b = sys_.field_at(sys_.cluster_of_nucleus(nucleus));
    const double a = sys_.hyperfine_of_nucleus(nucleus);
    // Electron-down manifold gap (the simulator's resonance).
    return {std::abs(sys_.gamma_n * b - 0.5 * a), 0.5};
  }

 private:
  double signed_sum(int cluster, const std::vector<bool>& m) const {
    double s = 0.0;
    int i0 = cluster == 0 ? 0 : sys_.clusters[0].donor_count();
    for (int k = 0; k < sys_.clusters[static_cast<size_t>(cluster)].donor_count(); ++k)
      s += (m[static_cast<size_t>(i0 + k)] ? -1.0 : 1.0) *
           sys_.clusters[static_cast<size_t>(cluster)].hyperfine_mhz[static_cast<size_t>(k)];
    return s;
  }

  SpinSystem sys_;
};

std::unique_ptr<LineResolver> make_resolver(const SpinSystem& sys,
                                            TableMode mode) {
  if (mode == TableMode::exact)
    return std::make_unique<ExactResolver>(sys);
  return std::make_unique<AnalyticResolver>(sys);
}

// Worst-case line analysis from the analytic table: nearest distinct line
// and the spectator-configuration spread of the pulse's own line.
void analyze_esr_line(const SpinSystem& sys, const FrequencyTable& table,
                      int driven, bool partner_up,
                      const std::vector<bool>& cond,
                      const std::vector<int>& conditioned_nuclei,
                      double carrier, EsrLineInfo& info, double tol,
                      bool check_collisions) {
  // Identify the branch the carrier addresses: the analytic entry of the
  // representative configuration closest in frequency.
  Branch pulse_branch = Branch::single;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : table.entries) {
    if (e.driven_electron != driven || e.partner_down == partner_up) continue;
    if (e.controls != cond) continue;
    const double d = std::abs(e.freq_mhz - carrier);
    if (d < best) best = d, pulse_branch = e.branch;
  }

  // Same branch and matching conditioned values: spectator copies the
  // pulse deliberately co-drives. Everything else is a crosstalk partner.
  auto co_driven = [&](const FrequencyEntry& e) {
    if (e.driven_electron != driven || e.partner_down == partner_up ||
        e.branch != pulse_branch)
      return false;
    for (int q : conditioned_nuclei)
      if (e.controls[static_cast<size_t>(q)] != cond[static_cast<size_t>(q)])
        return false;
    return true;
  };

  double lo = carrier, hi = carrier;
  double nearest = std::numeric_limits<double>::infinity();
  const FrequencyEntry* collider = nullptr;
  for (const auto& e : table.entries) {
    if (e.driven_electron != driven) continue;  // one transition set per event
    // With the partner electron held in |down>, partner-up lines are
    // unpopulated; once it is parked up, both manifolds carry weight.
    if (!partner_up && sys.n_electrons() == 2 && !e.partner_down) continue;
    if (co_driven(e)) {
      lo = std::min(lo, e.freq_mhz);
      hi = std::max(hi, e.freq_mhz);
      continue;
    }
    const double d = std::abs(e.freq_mhz - carrier);
    if (d < nearest) nearest = d, collider = &e;
  }
  info.min_detuning_mhz = nearest;
  info.detuning_spread_mhz = 0.5 * (hi - lo);
  if (check_collisions && collider && nearest < tol) {
    std::ostringstream msg;
    msg << "unresolvable carrier " << carrier << " MHz for condition "
        << config_string(cond) << ": collides with line "
        << config_string(collider->controls) << " (driven e"
        << collider->driven_electron << ", "
        << (collider->branch == Branch::plus    ? "plus"
            : collider->branch == Branch::minus ? "minus"
                                                : "single")
        << ") at detuning " << nearest << " MHz";
    throw std::runtime_error(msg.str());
  }
}

}  // namespace

std::vector<int> GateSpec::involved() const {
  std::vector<int> all = controls;
  all.insert(all.end(), targets.begin(), targets.end());
  std::sort(all.begin(), all.end());
  return all;
}

void GateSpec::validate(const SpinSystem& sys) const {
  if (targets.empty()) throw std::invalid_argument("gate needs targets");
  for (int c : controls)
    for (int t : targets)
      if (c == t) throw std::invalid_argument("controls and targets overlap");
  const auto all = involved();
  for (size_t i = 0; i + 1 < all.size(); ++i)
    if (all[i] == all[i + 1]) throw std::invalid_argument("duplicate qubit id");
  for (int q : all)
    if (q < 0 || q >= sys.n_nuclei())
      throw std::invalid_argument("qubit id outside the system");
  if (kind == CXX && controls.size() != 1)
    throw std::invalid_argument("CXX has exactly one control");
  if (kind == CNOT && (controls.size() != 1 || targets.size() != 1))
    throw std::invalid_argument("CNOT is one control, one target");
  if (kind == Toffoli && (controls.size() < 2 || targets.size() != 1))
    throw std::invalid_argument("Toffoli needs >= 2 controls, one target");

  bool spans_left = false, spans_right = false;
  for (int q : all) {
    if (sys.cluster_of_nucleus(q) == 0) spans_left = true;
    else spans_right = true;
  }
  if (scope == intra && spans_left && spans_right)
    throw std::invalid_argument("intra gate spans two clusters");
  if (scope == inter && !(spans_left && spans_right))
    throw std::invalid_argument("inter gate must span both clusters");
  if (scope == inter && sys.n_electrons() != 2)
    throw std::invalid_argument("inter gate needs a two-cluster system");
  if (scheme != direct && scope != inter)
    throw std::invalid_argument("assisted schemes apply to inter gates");
}

PulseSequence CompiledGate::flat_sequence() const {
  PulseSequence all;
  for (const auto& s : segments)
    all.pulses.insert(all.pulses.end(), s.sequence.pulses.begin(),
                      s.sequence.pulses.end());
  return all;
}

double CompiledGate::total_duration_us() const {
  return flat_sequence().total_duration_us();
}

namespace {

// Nuclear configurations (full register) requiring a pi phase, together
// with the list of conditioned nuclei. For intra gates the other cluster's
// nuclei are never conditioned.
struct PhasePattern {
  std::vector<std::vector<bool>> configs;
  std::vector<int> conditioned;
};

PhasePattern phase_pattern(const GateSpec& gate, const SpinSystem& sys) {
  const int nn = sys.n_nuclei();
  std::vector<int> universe;
  if (gate.scope == GateSpec::intra) {
    const int c = sys.cluster_of_nucleus(gate.involved().front());
    for (int q = 0; q < nn; ++q)
      if (sys.cluster_of_nucleus(q) == c) universe.push_back(q);
  } else {
    universe.resize(static_cast<size_t>(nn));
    std::iota(universe.begin(), universe.end(), 0);
  }

  PhasePattern out;
  out.conditioned = universe;
  const int u = static_cast<int>(universe.size());
  for (int bits = 0; bits < (1 << u); ++bits) {
    std::vector<bool> m(static_cast<size_t>(nn), true);
    for (int i = 0; i < u; ++i)
      m[static_cast<size_t>(universe[static_cast<size_t>(i)])] = (bits >> i) & 1;

    bool phased = false;
    auto bit_of = [&](int q) { return m[static_cast<size_t>(q)]; };
    if (gate.kind == GateSpec::CXX) {
      int downs = 0;
      for (int t : gate.targets) downs += bit_of(t);
      phased = bit_of(gate.controls.front()) && (downs % 2 == 1);
    } else {
      phased = true;
      for (int q : gate.involved()) phased &= bit_of(q);
    }
    if (phased) out.configs.push_back(m);
  }
  return out;
}

struct Emitter {
  const SpinSystem& sys;
  const LineResolver& resolver;
  const FrequencyTable& analytic;
  const CompileOptions& opts;
  CompiledGate& out;

  void hadamard(int nucleus, PulseSequence& seq) {
    const ResolvedLine line = resolver.nmr(nucleus);
    Pulse ry;
    ry.kind = Pulse::NMR;
    ry.carrier_mhz = line.carrier_mhz;
    ry.rabi_mhz = opts.nmr_rabi_mhz;
    ry.phase_rad = M_PI / 2.0;
    ry.duration_us = 1.0 / (8.0 * line.element * opts.nmr_rabi_mhz);
    ry.target = nucleus;
    ry.intent = "h.ry90 n" + std::to_string(nucleus);
    seq.pulses.push_back(ry);
    Pulse rx = ry;
    rx.phase_rad = 0.0;
    rx.duration_us = 1.0 / (4.0 * line.element * opts.nmr_rabi_mhz);
    rx.intent = "h.rx180 n" + std::to_string(nucleus);
    seq.pulses.push_back(rx);
    out.n_nmr_logical += 1;
    out.n_nmr_physical += 2;
  }

  void nmr_pi(int nucleus, const std::string& intent, PulseSequence& seq) {
    const ResolvedLine line = resolver.nmr(nucleus);
    Pulse p;
    p.kind = Pulse::NMR;
    p.carrier_mhz = line.carrier_mhz;
    p.rabi_mhz = opts.nmr_rabi_mhz;
    p.duration_us = 1.0 / (4.0 * line.element * opts.nmr_rabi_mhz);
    p.target = nucleus;
    p.intent = intent;
    seq.pulses.push_back(p);
    out.n_nmr_logical += 1;
    out.n_nmr_physical += 1;
  }

  void conditional_esr(double turns, int driven, bool partner_up,
                       const std::vector<bool>& m,
                       const std::vector<int>& conditioned,
                       bool check_collisions, const char* tag,
                       PulseSequence& seq) {
    const ResolvedLine line = resolver.esr(driven, partner_up, m);
    Pulse p;
    p.kind = Pulse::ESR;
    p.carrier_mhz = line.carrier_mhz;
    p.rabi_mhz = opts.esr_rabi_mhz;
    p.duration_us = turns / (2.0 * line.element * opts.esr_rabi_mhz);
    p.target = driven;
    p.intent = std::string(tag) + " c=" + config_string(m) + " e" +
               std::to_string(driven) + (partner_up ? " partner=up" : "");
    seq.pulses.push_back(p);
    out.n_esr += 1;

    EsrLineInfo info;
    info.condition = m;
    info.carrier_mhz = line.carrier_mhz;
    info.duration_us = p.duration_us;
    analyze_esr_line(sys, analytic, driven, partner_up, m, conditioned,
                     line.carrier_mhz, info, opts.min_detuning_tol_mhz,
                     check_collisions);
    out.esr_lines.push_back(info);
  }
};

}  // namespace

CompiledGate compile(const GateSpec& gate, const SpinSystem& sys,
                     const CompileOptions& opts) {
  sys.validate();
  gate.validate(sys);

  CompiledGate out;
  out.spec = gate;

  const PhasePattern pattern = phase_pattern(gate, sys);
  const std::vector<int> h_targets =
      gate.kind == GateSpec::CXX  ? gate.targets
      : gate.kind != GateSpec::CZ ? std::vector<int>{gate.targets.front()}
                                  : std::vector<int>{};

  if (gate.scheme == GateSpec::direct ||
      gate.scheme == GateSpec::nmr_assisted) {
    CompiledSegment seg;
    seg.sys = sys;
    const auto resolver = make_resolver(sys, opts.table_mode);
    const FrequencyTable analytic = esr_frequency_table(sys, TableMode::analytic);
    Emitter em{sys, *resolver, analytic, opts, out};

    for (int t : h_targets) em.hadamard(t, seg.sequence);

    const int driven = gate.scope == GateSpec::intra
                           ? sys.cluster_of_nucleus(gate.involved().front())
                           : 0;
    if (gate.scheme == GateSpec::direct) {
      for (const auto& m : pattern.configs)
        em.conditional_esr(1.0, driven, false, m, pattern.conditioned,
                           opts.check_collisions, "cz2pi", seg.sequence);
    } else {
      // Gray-code walk of the spectator configurations through the
      // all-down conditional line.
      std::vector<int> spectators;
      {
        std::vector<bool> inv(static_cast<size_t>(sys.n_nuclei()), false);
        for (int q : gate.involved()) inv[static_cast<size_t>(q)] = true;
        for (int q : pattern.conditioned)
          if (!inv[static_cast<size_t>(q)]) spectators.push_back(q);
      }
      const std::vector<bool> all_down(static_cast<size_t>(sys.n_nuclei()), true);
      std::vector<int> all_nuclei(static_cast<size_t>(sys.n_nuclei()));
      std::iota(all_nuclei.begin(), all_nuclei.end(), 0);

      const int s_count = 1 << spectators.size();
      unsigned prev_gray = 0;
      for (int g = 0; g < s_count; ++g) {
        const unsigned gray =
            static_cast<unsigned>(g) ^ (static_cast<unsigned>(g) >> 1);
        const unsigned delta = gray ^ prev_gray;
        for (size_t b = 0; b < spectators.size(); ++b)
          if (delta & (1u << b))
            em.nmr_pi(spectators[b], "map.x180 n" + std::to_string(spectators[b]),
                      seg.sequence);
        prev_gray = gray;
        em.conditional_esr(1.0, driven, false, all_down, all_nuclei, false,
                           "cz2pi", seg.sequence);
      }
      for (size_t b = 0; b < spectators.size(); ++b)
        if (prev_gray & (1u << b))
          em.nmr_pi(spectators[b], "unmap.x180 n" + std::to_string(spectators[b]),
                    seg.sequence);
    }

    for (int t : h_targets) em.hadamard(t, seg.sequence);
    out.segments.push_back(std::move(seg));
    return out;
  }

  // ESR-assisted scheme: park the right-cluster condition on the right
  // electron with the exchange off, run the conditional 2pi with it on,
  // then restore.
  SpinSystem sys_off = sys;
  sys_off.j_mhz = opts.j_off_mhz;

  std::vector<int> right_involved, left_involved, right_spect, left_spect;
  for (int q = 0; q < sys.n_nuclei(); ++q) {
    const bool inv = std::find(gate.involved().begin(), gate.involved().end(),
                               q) != gate.involved().end();
    const bool right = sys.cluster_of_nucleus(q) == 1;
    if (inv)
      (right ? right_involved : left_involved).push_back(q);
    else
      (right ? right_spect : left_spect).push_back(q);
  }

  const auto resolver_off = make_resolver(sys_off, opts.table_mode);
  const auto resolver_on = make_resolver(sys, opts.table_mode);
  const FrequencyTable analytic_off = esr_frequency_table(sys_off, TableMode::analytic);
  const FrequencyTable analytic_on = esr_frequency_table(sys, TableMode::analytic);

  CompiledSegment park, act, restore;
  park.sys = sys_off;
  act.sys = sys;
  restore.sys = sys_off;

  std::vector<int> right_all = right_involved;
  right_all.insert(right_all.end(), right_spect.begin(), right_spect.end());
  Emitter em_off{sys_off, *resolver_off, analytic_off, opts, out};
  for (int bits = 0; bits < (1 << right_spect.size()); ++bits) {
    std::vector<bool> m(static_cast<size_t>(sys.n_nuclei()), true);
    for (size_t b = 0; b < right_spect.size(); ++b)
      m[static_cast<size_t>(right_spect[b])] = (bits >> b) & 1;
    em_off.conditional_esr(0.5, 1, false, m, right_all, false, "assist.pi",
                           park.sequence);
  }

  std::vector<int> act_conditioned = left_involved;
  act_conditioned.insert(act_conditioned.end(), left_spect.begin(), left_spect.end());
  act_conditioned.insert(act_conditioned.end(), right_involved.begin(),
                         right_involved.end());
  Emitter em_on{sys, *resolver_on, analytic_on, opts, out};
  for (int bits = 0; bits < (1 << left_spect.size()); ++bits) {
    std::vector<bool> m(static_cast<size_t>(sys.n_nuclei()), true);
    for (size_t b = 0; b < left_spect.size(); ++b)
      m[static_cast<size_t>(left_spect[b])] = (bits >> b) & 1;
    em_on.conditional_esr(1.0, 0, true, m, act_conditioned, false, "cz2pi",
                          act.sequence);
  }

  restore.sequence.pulses = park.sequence.pulses;
  std::reverse(restore.sequence.pulses.begin(), restore.sequence.pulses.end());
  out.n_esr += static_cast<int>(restore.sequence.pulses.size());
  {
    const size_t n_park = park.sequence.pulses.size();
    std::vector<EsrLineInfo> park_lines(out.esr_lines.begin(),
                                        out.esr_lines.begin() + n_park);
    std::reverse(park_lines.begin(), park_lines.end());
    out.esr_lines.insert(out.esr_lines.end(), park_lines.begin(),
                         park_lines.end());
  }

  out.segments.push_back(std::move(park));
  out.segments.push_back(std::move(act));
  out.segments.push_back(std::move(restore));
  return out;
}

Matrix ideal_gate_matrix(const GateSpec& gate, int n_nuclei) {
  const int dn = 1 << n_nuclei;
  auto bit_down = [&](int x, int q) { return (x >> (n_nuclei - 1 - q)) & 1; };

  Matrix u = Matrix::Zero(dn, dn);
  for (int x = 0; x < dn; ++x) {
    if (gate.kind == GateSpec::CZ) {
      bool trig = true;
      for (int q : gate.involved()) trig &= bit_down(x, q);
      u(x, x) = trig ? -1.0 : 1.0;
    } else if (gate.kind == GateSpec::CNOT || gate.kind == GateSpec::Toffoli) {
      bool trig = true;
      for (int c : gate.controls) trig &= bit_down(x, c);
      const int y = trig ? x ^ (1 << (n_nuclei - 1 - gate.targets.front())) : x;
      u(y, x) = 1.0;
    } else {  // CXX
      int y = x;
      if (bit_down(x, gate.controls.front()))
        for (int t : gate.targets) y ^= 1 << (n_nuclei - 1 - t);
      u(y, x) = 1.0;
    }
  }
  return u;
}

EvolutionResult simulate_segments(const std::vector<CompiledSegment>& segments,
                                  const SpinSystem& frame_sys) {
  const int dim = frame_sys.dimension();
  Matrix u_schr = Matrix::Identity(dim, dim);
  double t_total = 0.0;
  EvolveOptions opts;
  opts.record_traces = false;

  Vector ground = Vector::Zero(dim);
  ground(dim - 1) = 1.0;  // all spins down

  for (const auto& seg : segments) {
    if (seg.sequence.pulses.empty()) continue;
    EvolutionResult r = evolve(seg.sys, seg.sequence, ground, nullptr, opts);
    // Undo the segment's rotating frame to recover the Schrodinger-picture
    // propagator in the computational basis.
    Eigen::SelfAdjointEigenSolver<Matrix> es(build_static_hamiltonian(seg.sys));
    const double t_seg = seg.sequence.total_duration_us();
    Vector ph(dim);
    for (int k = 0; k < dim; ++k)
      ph(k) = std::exp(Complex(0.0, -kTwoPi * es.eigenvalues()(k) * t_seg));
    const Matrix u_seg = es.eigenvectors() * ph.asDiagonal() *
                         es.eigenvectors().adjoint() * r.propagator;
    u_schr = u_seg * u_schr;
    t_total += t_seg;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(build_static_hamiltonian(frame_sys));
  Vector ph(dim);
  for (int k = 0; k < dim; ++k)
    ph(k) = std::exp(Complex(0.0, kTwoPi * es.eigenvalues()(k) * t_total));
  EvolutionResult out;
  out.propagator = es.eigenvectors() * ph.asDiagonal() *
                   es.eigenvectors().adjoint() * u_schr;
  out.final_state = out.propagator * ground;
  return out;
}

VerifyResult verify_compiled(const GateSpec& gate, const CompiledGate& compiled,
                             const SpinSystem& sys, const VerifyOptions& opts) {
  EvolutionResult run = simulate_segments(compiled.segments, sys);

  if (opts.use_reference_run || gate.scheme == GateSpec::esr_assisted) {
    // Idle reference: identical timing with the conditional 2pi pulses
    // parked far off resonance; dividing out cancels the deterministic
    // frame phases the hardware would calibrate away.
    std::vector<CompiledSegment> ref = compiled.segments;
    for (auto& seg : ref)
      for (auto& p : seg.sequence.pulses)
        if (p.intent.rfind("cz2pi", 0) == 0) p.carrier_mhz += 2.0e5;
    EvolutionResult idle = simulate_segments(ref, sys);
    run.propagator = run.propagator * idle.propagator.adjoint();
  }

  NuclearGate extracted = extract_nuclear_gate(run, sys);
  const Matrix ideal = ideal_gate_matrix(gate, sys.n_nuclei());

  VerifyResult v;
  v.extracted = extracted.unitary;
  v.leakage = extracted.leakage;
  v.fidelity = process_fidelity(ideal, extracted.unitary);
  v.pass = v.fidelity >= opts.fidelity_bound && v.leakage <= opts.leakage_bound;
  return v;
}

ErrorBudget gate_error_budget(const CompiledGate& compiled,
                              const FidelityInputs& inputs) {
  double t2e = inputs.t2e_us;
  if (inputs.exchange_noise)
    t2e = t2e_with_exchange_noise(t2e, *inputs.exchange_noise);

  std::vector<PulseError> esr;
  const PulseSequence flat = compiled.flat_sequence();
  size_t line_idx = 0;
  for (const auto& p : flat.pulses) {
    if (p.kind != Pulse::ESR) continue;
    const EsrLineInfo& info = compiled.esr_lines[line_idx++];
    PulseError e;
    e.intent = p.intent;
    e.e_ct = crosstalk_error_esr_cz(p.rabi_mhz, info.min_detuning_mhz);
    e.e_detuning = 1.0 - crosstalk_error(p.rabi_mhz, info.detuning_spread_mhz);
    e.e_t2e = decoherence_error(p.duration_us, t2e);
    esr.push_back(e);
  }
  return compose_budget(esr, compiled.n_nmr_logical,
                        compiled.total_duration_us(), inputs);
}

}  // namespace cspin
