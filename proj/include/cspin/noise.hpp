#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace cspin {

// Deterministic, platform-stable RNG helpers (splitmix64 core).
struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // uniform in [0, 1)
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }
  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
  // standard normal via Box-Muller
  double normal() {
    double u1 = 0.0;
    while (u1 == 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  // decorrelated stream for work item `index`
  static uint64_t derive(uint64_t seed, uint64_t index) {
    Rng r(seed ^ (0x5851f42d4c957f2dULL * (index + 1)));
    return r.next_u64();
  }
};

// Sampled 1/f noise series plus its generation parameters. `samples` are
// dimensionless; per-qubit couplings eps_j (MHz per unit sample) turn them
// into frequency detunings.
struct NoiseTrace {
  std::vector<double> samples;
  double dt_us = 1.0;
  double c_eps = 0.0;
  std::vector<double> eps_mhz;  // one per spin; missing entries read as 0
  uint64_t seed = 0;

  int size() const { return static_cast<int>(samples.size()); }

  std::string to_csv() const;
  nlohmann::json params_json() const;
};

// In-place radix-2 FFT (inverse via flag); n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

// Frequency-domain 1/f shaping of a white Gaussian sequence: the spectral
// power of bin k is scaled by S_k = c_eps^2 N / k (DC amplitude set to
// zero), so the output periodogram has slope -1 in log-log.
NoiseTrace generate_one_over_f(int n, double dt_us, double c_eps,
                               uint64_t seed);

// delta-hbar-omega_j at sample i, in MHz.
double detuning_of(const NoiseTrace& trace, int qubit, int sample);

// Least-squares log-log slope of the ensemble-averaged periodogram over the
// central two decades. Test/diagnostic helper.
double periodogram_slope(const std::vector<std::vector<double>>& traces);

}  // namespace cspin
