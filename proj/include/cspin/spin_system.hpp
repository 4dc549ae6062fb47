#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace cspin {

// Default gyromagnetic ratios, MHz/T.
inline constexpr double kGammaElectronMhzPerT = 27970.0;
inline constexpr double kGammaNuclearMhzPerT = -17.41;

// One donor cluster: a single bound electron hyperfine-coupled to its donors.
struct Cluster {
  std::vector<double> hyperfine_mhz;  // A_i, one per donor, > 0

  int donor_count() const { return static_cast<int>(hyperfine_mhz.size()); }
};

// Full description of a one- or two-cluster system. All energies are in MHz
// (plain frequencies, hbar = 1), magnetic fields in tesla, time in us.
// Immutable after construction; validate() is called by every consumer.
struct SpinSystem {
  std::vector<Cluster> clusters;   // 1 or 2 entries
  double b0_t = 1.0;               // static field along z
  double gradient_db_t = 0.0;      // extra field seen by the second cluster
  double gamma_e = kGammaElectronMhzPerT;
  double gamma_n = kGammaNuclearMhzPerT;
  double j_mhz = 0.0;              // exchange between electrons (2 clusters)

  int n_electrons() const { return static_cast<int>(clusters.size()); }
  int n_nuclei() const {
    int n = 0;
    for (const auto& c : clusters) n += c.donor_count();
    return n;
  }
  int n_spins() const { return n_electrons() + n_nuclei(); }
  int dimension() const { return 1 << n_spins(); }

  // Field seen by cluster `c` (0-based).
  double field_at(int c) const { return b0_t + (c == 1 ? gradient_db_t : 0.0); }

  // Cluster index owning nucleus `i` (0-based, left cluster first).
  int cluster_of_nucleus(int i) const {
    int c = 0;
    for (const auto& cl : clusters) {
      if (i < cl.donor_count()) return c;
      i -= cl.donor_count();
      ++c;
    }
    throw std::out_of_range("nucleus index out of range");
  }

  double hyperfine_of_nucleus(int i) const {
    for (const auto& cl : clusters) {
      if (i < cl.donor_count()) return cl.hyperfine_mhz[i];
      i -= cl.donor_count();
    }
    throw std::out_of_range("nucleus index out of range");
  }

  void validate() const {
    if (clusters.empty() || clusters.size() > 2)
      throw std::invalid_argument("system must have 1 or 2 clusters");
    for (const auto& c : clusters) {
      if (c.hyperfine_mhz.empty() || c.donor_count() > 7)
        throw std::invalid_argument("each cluster needs 1..7 donors");
      for (double a : c.hyperfine_mhz)
        if (!(a > 0.0) || !std::isfinite(a))
          throw std::invalid_argument("hyperfine couplings must be finite and > 0");
    }
    if (!(b0_t > 0.0)) throw std::invalid_argument("b0 must be > 0");
    if (clusters.size() < 2 && j_mhz != 0.0)
      throw std::invalid_argument("exchange requires two clusters");
    if (n_spins() > 9)
      throw std::invalid_argument("Hilbert dimension exceeds 2^9");
  }
};

// Basis label in the canonical ordering: electrons left-to-right, then nuclei
// (left cluster first, in hyperfine-list order). Spin 0 is the most
// significant bit of the basis index; bit 0 = up, bit 1 = down.
struct SpinBasisLabel {
  std::vector<bool> electron_down;  // per electron
  std::vector<bool> nuclear_down;   // per nucleus, m_i = 1 for Down

  static SpinBasisLabel from_index(const SpinSystem& sys, int index) {
    SpinBasisLabel l;
    const int n = sys.n_spins();
    for (int s = 0; s < n; ++s) {
      bool down = (index >> (n - 1 - s)) & 1;
      if (s < sys.n_electrons())
        l.electron_down.push_back(down);
      else
        l.nuclear_down.push_back(down);
    }
    return l;
  }

  int to_index(const SpinSystem& sys) const {
    if (static_cast<int>(electron_down.size()) != sys.n_electrons() ||
        static_cast<int>(nuclear_down.size()) != sys.n_nuclei())
      throw std::invalid_argument("label does not match system shape");
    int idx = 0;
    const int n = sys.n_spins();
    int s = 0;
    for (bool d : electron_down) idx |= (d ? 1 : 0) << (n - 1 - s), ++s;
    for (bool d : nuclear_down) idx |= (d ? 1 : 0) << (n - 1 - s), ++s;
    return idx;
  }

  std::string to_string() const {
    std::string out;
    for (bool d : electron_down) out += d ? 'd' : 'u';
    out += '|';
    for (bool d : nuclear_down) out += d ? 'D' : 'U';
    return out;
  }
};

inline nlohmann::json to_json(const SpinSystem& sys) {
  nlohmann::json j;
  j["clusters"] = nlohmann::json::array();
  for (const auto& c : sys.clusters)
    j["clusters"].push_back({{"hyperfine_mhz", c.hyperfine_mhz}});
  j["b0_t"] = sys.b0_t;
  j["gradient_db_t"] = sys.gradient_db_t;
  j["j_mhz"] = sys.j_mhz;
  j["gamma_e_mhz_per_t"] = sys.gamma_e;
  j["gamma_n_mhz_per_t"] = sys.gamma_n;
  return j;
}

inline SpinSystem spin_system_from_json(const nlohmann::json& j) {
  SpinSystem sys;
  sys.clusters.clear();
  for (const auto& c : j.at("clusters"))
    sys.clusters.push_back({c.at("hyperfine_mhz").get<std::vector<double>>()});
  sys.b0_t = j.at("b0_t").get<double>();
  sys.gradient_db_t = j.value("gradient_db_t", 0.0);
  sys.j_mhz = j.value("j_mhz", 0.0);
  sys.gamma_e = j.value("gamma_e_mhz_per_t", kGammaElectronMhzPerT);
  sys.gamma_n = j.value("gamma_n_mhz_per_t", kGammaNuclearMhzPerT);
  sys.validate();
  return sys;
}

}  // namespace cspin
