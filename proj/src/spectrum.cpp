#include "cspin/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cspin {

namespace {

// Signed hyperfine sum over one cluster: sum_i (-1)^{m_i} A_i (Up -> +A).
double signed_hf_sum(const SpinSystem& sys, int cluster,
                     const std::vector<bool>& nuclear_down) {
  double sum = 0.0;
  int i0 = cluster == 0 ? 0 : sys.clusters[0].donor_count();
  for (int k = 0; k < sys.clusters[cluster].donor_count(); ++k)
    sum += (nuclear_down[i0 + k] ? -1.0 : 1.0) *
           sys.clusters[cluster].hyperfine_mhz[k];
  return sum;
}

double nuclear_zeeman(const SpinSystem& sys,
                      const std::vector<bool>& nuclear_down) {
  double sum = 0.0;
  for (int i = 0; i < sys.n_nuclei(); ++i) {
    const double b = sys.field_at(sys.cluster_of_nucleus(i));
    sum += (nuclear_down[i] ? -1.0 : 1.0) * 0.5 * sys.gamma_n * b;
  }
  return sum;
}

}  // namespace

double analytic_single_energy(const SpinSystem& sys, bool electron_down,
                              const std::vector<bool>& nuclear_down) {
  const double s = electron_down ? -1.0 : 1.0;
  return s * 0.5 * sys.gamma_e * sys.b0_t + nuclear_zeeman(sys, nuclear_down) +
         s * 0.25 * signed_hf_sum(sys, 0, nuclear_down);
}

PairEnergies analytic_pair_energies(const SpinSystem& sys,
                                    const std::vector<bool>& nuclear_down) {
  if (sys.n_electrons() != 2)
    throw std::invalid_argument("pair energies need a two-cluster system");
  if (static_cast<int>(nuclear_down.size()) != sys.n_nuclei())
    throw std::invalid_argument("nuclear configuration size mismatch");

  const double bl = sys.field_at(0), br = sys.field_at(1);
  const double nz = nuclear_zeeman(sys, nuclear_down);
  const double sl = signed_hf_sum(sys, 0, nuclear_down);
  const double sr = signed_hf_sum(sys, 1, nuclear_down);
  const double j = sys.j_mhz;

  PairEnergies e;
  e.down_down = -0.5 * sys.gamma_e * (bl + br) + nz - 0.25 * (sl + sr) + 0.25 * j;
  e.up_up = 0.5 * sys.gamma_e * (bl + br) + nz + 0.25 * (sl + sr) + 0.25 * j;

  // 2x2 antiparallel block in the {|down_L up_R>, |up_L down_R>} basis.
  // Diagonal split h, flip-flop coupling J/2.
  const double h = 0.5 * sys.gamma_e * (br - bl) + 0.25 * (sr - sl);
  const double mean = nz - 0.25 * j;
  const double root = std::sqrt(h * h + 0.25 * j * j);
  e.mid_upper = mean + root;
  e.mid_lower = mean - root;
  e.upper_is_down_up = h >= 0.0;
  return e;
}

double nmr_frequency(const SpinSystem& sys, int nucleus_index) {
  if (nucleus_index < 0 || nucleus_index >= sys.n_nuclei())
    throw std::out_of_range("nucleus index out of range");
  const double b = sys.field_at(sys.cluster_of_nucleus(nucleus_index));
  const double a = sys.hyperfine_of_nucleus(nucleus_index);
  return std::abs(sys.gamma_n * b + 0.5 * a);
}

double nmr_carrier_exact(const SpinSystem& sys, int nucleus_index,
                         std::optional<std::vector<bool>> others) {
  if (nucleus_index < 0 || nucleus_index >= sys.n_nuclei())
    throw std::out_of_range("nucleus index out of range");
  std::vector<bool> nuc = others.value_or(
      std::vector<bool>(static_cast<size_t>(sys.n_nuclei()), true));
  nuc.resize(static_cast<size_t>(sys.n_nuclei()), true);

  const Matrix h = build_static_hamiltonian(sys);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);

  SpinBasisLabel lo, hi;
  lo.electron_down.assign(static_cast<size_t>(sys.n_electrons()), true);
  hi.electron_down = lo.electron_down;
  lo.nuclear_down = nuc;
  hi.nuclear_down = nuc;
  lo.nuclear_down[static_cast<size_t>(nucleus_index)] = true;
  hi.nuclear_down[static_cast<size_t>(nucleus_index)] = false;
  const int i_lo = lo.to_index(sys), i_hi = hi.to_index(sys);

  // Eigenvalue of the state dominated by a given computational vector.
  auto energy_of = [&](int comp) {
    int best = 0;
    double w = -1.0;
    for (int k = 0; k < es.eigenvectors().cols(); ++k) {
      double p = std::norm(es.eigenvectors()(comp, k));
      if (p > w) w = p, best = k;
    }
    return es.eigenvalues()(best);
  };
  return std::abs(energy_of(i_hi) - energy_of(i_lo));
}

namespace {

void append_analytic_lines(const SpinSystem& sys, FrequencyTable& table) {
  const int nn = sys.n_nuclei();
  for (int cfg = 0; cfg < (1 << nn); ++cfg) {
    std::vector<bool> m(static_cast<size_t>(nn));
    for (int i = 0; i < nn; ++i) m[static_cast<size_t>(i)] = (cfg >> (nn - 1 - i)) & 1;

    if (sys.n_electrons() == 1) {
      FrequencyEntry e;
      e.driven_electron = 0;
      e.partner_down = true;
      e.controls = m;
      e.branch = Branch::single;
      e.freq_mhz = analytic_single_energy(sys, false, m) -
                   analytic_single_energy(sys, true, m);
      table.entries.push_back(e);
      continue;
    }

    const PairEnergies pe = analytic_pair_energies(sys, m);
    for (int drv = 0; drv < 2; ++drv) {
      // Partner down: |dd> -> antiparallel branches.
      for (Branch b : {Branch::plus, Branch::minus}) {
        FrequencyEntry e;
        e.driven_electron = drv;
        e.partner_down = true;
        e.controls = m;
        e.branch = b;
        e.freq_mhz = (b == Branch::plus ? pe.mid_upper : pe.mid_lower) -
                     pe.down_down;
        table.entries.push_back(e);
      }
      // Partner up: antiparallel branches -> |uu>.
      for (Branch b : {Branch::plus, Branch::minus}) {
        FrequencyEntry e;
        e.driven_electron = drv;
        e.partner_down = false;
        e.controls = m;
        e.branch = b;
        e.freq_mhz = pe.up_up -
                     (b == Branch::plus ? pe.mid_lower : pe.mid_upper);
        table.entries.push_back(e);
      }
    }
  }
}

void append_exact_lines(const SpinSystem& sys, FrequencyTable& table) {
  const Matrix h = build_static_hamiltonian(sys);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const int nn = sys.n_nuclei();
  const int ne = sys.n_electrons();

  auto dominant_energy = [&](const SpinBasisLabel& l) {
    const int comp = l.to_index(sys);
    int best = 0;
    double w = -1.0;
    for (int k = 0; k < es.eigenvectors().cols(); ++k) {
      double p = std::norm(es.eigenvectors()(comp, k));
      if (p > w) w = p, best = k;
    }
    return best;
  };

  for (int cfg = 0; cfg < (1 << nn); ++cfg) {
    std::vector<bool> m(static_cast<size_t>(nn));
    for (int i = 0; i < nn; ++i) m[static_cast<size_t>(i)] = (cfg >> (nn - 1 - i)) & 1;

    if (ne == 1) {
      SpinBasisLabel lo{{true}, m}, hi{{false}, m};
      FrequencyEntry e;
      e.driven_electron = 0;
      e.partner_down = true;
      e.controls = m;
      e.branch = Branch::single;
      e.freq_mhz = es.eigenvalues()(dominant_energy(hi)) -
                   es.eigenvalues()(dominant_energy(lo));
      table.entries.push_back(e);
      continue;
    }

    // Two clusters: locate the four electron-pair eigenstates for this
    // nuclear configuration. The antiparallel pair is picked as the two
    // eigenvectors with the largest weight inside the {du, ud} span.
    SpinBasisLabel dd{{true, true}, m}, uu{{false, false}, m};
    SpinBasisLabel du{{true, false}, m}, ud{{false, true}, m};
    const int i_du = du.to_index(sys), i_ud = ud.to_index(sys);

    const double e_dd = es.eigenvalues()(dominant_energy(dd));
    const double e_uu = es.eigenvalues()(dominant_energy(uu));

    int k1 = -1, k2 = -1;
    double w1 = -1.0, w2 = -1.0;
    for (int k = 0; k < es.eigenvectors().cols(); ++k) {
      double p = std::norm(es.eigenvectors()(i_du, k)) +
                 std::norm(es.eigenvectors()(i_ud, k));
      if (p > w1) {
        w2 = w1, k2 = k1;
        w1 = p, k1 = k;
      } else if (p > w2) {
        w2 = p, k2 = k;
      }
    }
    const double mid_upper = std::max(es.eigenvalues()(k1), es.eigenvalues()(k2));
    const double mid_lower = std::min(es.eigenvalues()(k1), es.eigenvalues()(k2));

    for (int drv = 0; drv < 2; ++drv) {
      for (Branch b : {Branch::plus, Branch::minus}) {
        FrequencyEntry e;
        e.driven_electron = drv;
        e.partner_down = true;
        e.controls = m;
        e.branch = b;
        e.freq_mhz = (b == Branch::plus ? mid_upper : mid_lower) - e_dd;
        table.entries.push_back(e);
      }
      for (Branch b : {Branch::plus, Branch::minus}) {
        FrequencyEntry e;
        e.driven_electron = drv;
        e.partner_down = false;
        e.controls = m;
        e.branch = b;
        e.freq_mhz = e_uu - (b == Branch::plus ? mid_lower : mid_upper);
        table.entries.push_back(e);
      }
    }
  }
}

}  // namespace

FrequencyTable esr_frequency_table(const SpinSystem& sys, TableMode mode) {
  sys.validate();
  FrequencyTable table;
  if (mode == TableMode::analytic)
    append_analytic_lines(sys, table);
  else
    append_exact_lines(sys, table);
  return table;
}

double min_detuning(const FrequencyTable& table, const FrequencyEntry& target,
                    const DetuningOptions& opts) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : table.entries) {
    if (opts.partner_down_only && e.partner_down != *opts.partner_down_only)
      continue;
    if (opts.driven_electron_only &&
        e.driven_electron != *opts.driven_electron_only)
      continue;
    const double d = std::abs(e.freq_mhz - target.freq_mhz);
    if (d == 0.0 && e.controls == target.controls &&
        e.branch == target.branch && e.driven_electron == target.driven_electron &&
        e.partner_down == target.partner_down)
      continue;  // the target itself
    if (opts.exclude_accidental && d < opts.accidental_tol_mhz) continue;
    if (d < best) best = d;
  }
  return best;
}

DeltaA min_hyperfine_difference(const std::vector<double>& a) {
  if (a.size() < 2) return {std::numeric_limits<double>::infinity()};
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = i + 1; j < a.size(); ++j)
      best = std::min(best, std::abs(a[i] - a[j]));
  return {best};
}

std::string FrequencyTable::to_csv() const {
  std::ostringstream out;
  out << "driven,controls,partner_electron,branch,freq_mhz\n";
  for (const auto& e : entries) {
    out << 'e' << e.driven_electron << ',';
    for (bool d : e.controls) out << (d ? 'D' : 'U');
    out << ',' << (e.partner_down ? "down" : "up") << ','
        << (e.branch == Branch::plus ? "plus"
            : e.branch == Branch::minus ? "minus" : "single")
        << ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", e.freq_mhz);
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace cspin
