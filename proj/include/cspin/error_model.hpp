#pragma once

// Closed-form error and fidelity calculus for compiled gates: crosstalk,
// carrier detuning, decoherence and exchange-variation contributions,
// composed multiplicatively per pulse.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cspin {

inline constexpr double kMhzPerMev = 241798.935;  // 1 meV in MHz

// Worst-case off-resonant excitation during a drive of strength f at
// detuning delta: f^2 / (f^2 + delta^2).
double crosstalk_error(double f_rabi_mhz, double delta_mhz);

// Refined per-pulse estimate of the error left on the nuclear register by
// an off-resonant conditional 2pi rotation:
// 1 - (1/4) [1 + sqrt(1 - f^2/(f^2+delta^2))]^2. Bounded above by
// crosstalk_error everywhere.
double crosstalk_error_esr_cz(double f_rabi_mhz, double delta_mhz);

// 1 - exp(-tau/T2).
double decoherence_error(double tau_us, double t2_us);

struct ExchangePoint {
  double j_mhz = 0.0;
  double dj_deps = 0.0;  // dimensionless (MHz per MHz of detuning)
};

// Detuning-controlled exchange J = 4 t_c^2 U / (U^2 - eps^2) and its
// sensitivity dJ/deps = 8 t_c^2 U eps / (U^2 - eps^2)^2. Valid for
// |eps| < U.
ExchangePoint exchange_curve(double t_c_mhz, double u_mhz, double eps_mhz);

// Exchange-noise parameters. When set, the electron decoherence rate is
// stiffened by the exchange variation delta_J = delta_eps * dJ/deps taken
// into the total frequency variance in quadrature:
// 1/T2_eff = sqrt((1/T2)^2 + (2 pi kappa deltaJ)^2), kappa being the
// carrier's sensitivity to J (1/2 for the exchange-split branches).
struct ExchangeNoise {
  double t_c_mhz = 0.0;
  double u_mhz = 0.0;
  double eps_mhz = 0.0;
  double delta_eps_mhz = 0.0;
  double kappa = 0.5;
};

double t2e_with_exchange_noise(double t2e_us, const ExchangeNoise& xn);

struct PulseError {
  std::string intent;
  double e_ct = 0.0;        // crosstalk (CZ-refined form for ESR pulses)
  double e_detuning = 0.0;  // carrier vs actual line
  double e_t2e = 0.0;       // electron decoherence over this pulse
};

struct ErrorBudget {
  std::vector<PulseError> esr_pulses;
  int n_nmr = 0;
  double total_duration_us = 0.0;
  double e_t2n = 0.0;  // nuclear decoherence over the whole circuit
  double composed_fidelity = 1.0;

  nlohmann::json to_json() const;
};

struct FidelityInputs {
  double t2n_us = 40000.0;  // 40 ms
  double t2e_us = 400.0;
  std::optional<ExchangeNoise> exchange_noise;
};

// Composes F = (1 - e_T2n) * prod_pulses (1-e_T2e)(1-e_ct)(1-e_detuning)
// from per-pulse crosstalk/detuning figures supplied by the caller (the
// gate compiler reports them from the frequency table).
ErrorBudget compose_budget(const std::vector<PulseError>& esr_pulses,
                           int n_nmr, double total_duration_us,
                           const FidelityInputs& inputs);

struct DonorCountStats {
  double mean = 0.0;
  double sd = 0.0;
  int min = 0;
  int max = 0;
  std::vector<int> counts;  // per trial
};

// Feasible donor numbers per cluster under a minimum hyperfine separation:
// each trial grows the cluster size k = 2, 3, ..., sampling a fresh set of
// k couplings uniformly from [range_lo, range_hi] at each size, until a set
// exhibits a pairwise gap below min_gap; the trial records that onset size.
// A zero/negative gap never fails, so counts are capped at max_count.
DonorCountStats sample_feasible_donor_count(double range_lo_mhz,
                                            double range_hi_mhz,
                                            double min_gap_mhz, int trials,
                                            uint64_t seed, int max_count = 16);

}  // namespace cspin
