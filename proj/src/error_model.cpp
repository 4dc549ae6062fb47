#include "cspin/error_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cspin/noise.hpp"

namespace cspin {

double crosstalk_error(double f_rabi_mhz, double delta_mhz) {
  if (!(f_rabi_mhz > 0.0)) throw std::invalid_argument("rabi must be > 0");
  const double f2 = f_rabi_mhz * f_rabi_mhz;
  if (std::isinf(delta_mhz)) return 0.0;
  return f2 / (f2 + delta_mhz * delta_mhz);
}

double crosstalk_error_esr_cz(double f_rabi_mhz, double delta_mhz) {
  const double x = crosstalk_error(f_rabi_mhz, delta_mhz);
  const double r = 1.0 + std::sqrt(1.0 - x);
  return 1.0 - 0.25 * r * r;
}

double decoherence_error(double tau_us, double t2_us) {
  if (!(t2_us > 0.0)) throw std::invalid_argument("T2 must be > 0");
  if (tau_us < 0.0) throw std::invalid_argument("tau must be >= 0");
  return 1.0 - std::exp(-tau_us / t2_us);
}

ExchangePoint exchange_curve(double t_c_mhz, double u_mhz, double eps_mhz) {
  if (!(u_mhz > 0.0)) throw std::invalid_argument("U must be > 0");
  if (std::abs(eps_mhz) >= u_mhz)
    throw std::domain_error("detuning |eps| must stay below U");
  const double denom = u_mhz * u_mhz - eps_mhz * eps_mhz;
  ExchangePoint p;
  p.j_mhz = 4.0 * t_c_mhz * t_c_mhz * u_mhz / denom;
  p.dj_deps = 8.0 * t_c_mhz * t_c_mhz * u_mhz * eps_mhz / (denom * denom);
  return p;
}

double t2e_with_exchange_noise(double t2e_us, const ExchangeNoise& xn) {
  const ExchangePoint p = exchange_curve(xn.t_c_mhz, xn.u_mhz, xn.eps_mhz);
  const double delta_j = std::abs(xn.delta_eps_mhz * p.dj_deps);
  const double rate = std::sqrt(1.0 / (t2e_us * t2e_us) +
                                std::pow(2.0 * M_PI * xn.kappa * delta_j, 2));
  return 1.0 / rate;
}

ErrorBudget compose_budget(const std::vector<PulseError>& esr_pulses,
                           int n_nmr, double total_duration_us,
                           const FidelityInputs& inputs) {
  ErrorBudget b;
  b.esr_pulses = esr_pulses;
  b.n_nmr = n_nmr;
  b.total_duration_us = total_duration_us;
  b.e_t2n = decoherence_error(total_duration_us, inputs.t2n_us);

  double f = 1.0 - b.e_t2n;
  for (auto& p : b.esr_pulses)
    f *= (1.0 - p.e_t2e) * (1.0 - p.e_ct) * (1.0 - p.e_detuning);
  b.composed_fidelity = f;
  return b;
}

nlohmann::json ErrorBudget::to_json() const {
  nlohmann::json pulses = nlohmann::json::array();
  for (const auto& p : esr_pulses)
    pulses.push_back({{"intent", p.intent},
                      {"e_ct", p.e_ct},
                      {"e_detuning", p.e_detuning},
                      {"e_t2e", p.e_t2e}});
  return {{"esr_pulses", pulses},
          {"n_esr", esr_pulses.size()},
          {"n_nmr", n_nmr},
          {"total_duration_us", total_duration_us},
          {"e_t2n", e_t2n},
          {"composed_fidelity", composed_fidelity}};
}

DonorCountStats sample_feasible_donor_count(double range_lo_mhz,
                                            double range_hi_mhz,
                                            double min_gap_mhz, int trials,
                                            uint64_t seed, int max_count) {
  if (!(range_hi_mhz > range_lo_mhz))
    throw std::invalid_argument("invalid hyperfine range");
  if (trials < 1) throw std::invalid_argument("need at least one trial");

  DonorCountStats stats;
  stats.counts.reserve(static_cast<size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    Rng rng(Rng::derive(seed, static_cast<uint64_t>(t)));
    int onset = max_count;
    for (int k = 2; k <= max_count; ++k) {
      std::vector<double> a(static_cast<size_t>(k));
      for (auto& v : a) v = rng.uniform(range_lo_mhz, range_hi_mhz);
      std::sort(a.begin(), a.end());
      bool crowded = false;
      for (int i = 0; i + 1 < k; ++i)
        crowded |= a[static_cast<size_t>(i + 1)] - a[static_cast<size_t>(i)] < min_gap_mhz;
      if (crowded) {
        onset = k;
        break;
      }
    }
    stats.counts.push_back(onset);
  }

  double sum = 0.0, sq = 0.0;
  stats.min = stats.counts.front();
  stats.max = stats.counts.front();
  for (int c : stats.counts) {
    sum += c;
    sq += static_cast<double>(c) * c;
    stats.min = std::min(stats.min, c);
    stats.max = std::max(stats.max, c);
  }
  stats.mean = sum / trials;
  stats.sd = std::sqrt(std::max(0.0, sq / trials - stats.mean * stats.mean));
  return stats;
}

}  // namespace cspin
