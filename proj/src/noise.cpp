#include "cspin/noise.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace cspin {

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft length must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

NoiseTrace generate_one_over_f(int n, double dt_us, double c_eps,
                               uint64_t seed) {
  if (n < 64 || (n & (n - 1)) != 0)
    throw std::invalid_argument("sample count must be a power of two, >= 64");

  NoiseTrace trace;
  trace.dt_us = dt_us;
  trace.c_eps = c_eps;
  trace.seed = seed;
  trace.samples.assign(static_cast<size_t>(n), 0.0);
  if (c_eps == 0.0) return trace;

  Rng rng(seed);
  std::vector<std::complex<double>> freq(static_cast<size_t>(n));
  for (auto& x : freq) x = rng.normal();
  fft_radix2(freq, false);

  // Scale amplitudes by sqrt(S_k); mirror bins share k_eff so the spectrum
  // stays Hermitian and the inverse transform is real.
  freq[0] = 0.0;  // zero-mean: the singular DC bin is dropped
  for (int k = 1; k < n; ++k) {
    const int k_eff = std::min(k, n - k);
    freq[static_cast<size_t>(k)] *=
        c_eps * std::sqrt(static_cast<double>(n) / k_eff);
  }
  fft_radix2(freq, true);
  for (int i = 0; i < n; ++i) trace.samples[static_cast<size_t>(i)] = freq[static_cast<size_t>(i)].real();
  return trace;
}

double detuning_of(const NoiseTrace& trace, int qubit, int sample) {
  if (sample < 0 || sample >= trace.size())
    throw std::out_of_range("noise sample index out of range");
  if (qubit < 0) throw std::out_of_range("qubit index out of range");
  const double eps = qubit < static_cast<int>(trace.eps_mhz.size())
                         ? trace.eps_mhz[static_cast<size_t>(qubit)]
                         : 0.0;
  return eps * trace.samples[static_cast<size_t>(sample)];
}

double periodogram_slope(const std::vector<std::vector<double>>& traces) {
  if (traces.empty()) throw std::invalid_argument("need at least one trace");
  const size_t n = traces.front().size();
  std::vector<double> avg_psd(n / 2, 0.0);
  for (const auto& t : traces) {
    std::vector<std::complex<double>> a(t.begin(), t.end());
    fft_radix2(a, false);
    for (size_t k = 1; k < n / 2; ++k) avg_psd[k] += std::norm(a[k]);
  }

  // Central two decades of the available band [1, n/2).
  const double log_lo = 0.0, log_hi = std::log10(static_cast<double>(n) / 2.0);
  const double mid = 0.5 * (log_lo + log_hi);
  const size_t k_min = static_cast<size_t>(std::max(1.0, std::pow(10.0, mid - 1.0)));
  const size_t k_max = static_cast<size_t>(std::min(static_cast<double>(n / 2 - 1),
                                                    std::pow(10.0, mid + 1.0)));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (size_t k = k_min; k <= k_max; ++k) {
    const double x = std::log10(static_cast<double>(k));
    const double y = std::log10(avg_psd[k] / traces.size());
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++cnt;
  }
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

std::string NoiseTrace::to_csv() const {
  std::ostringstream out;
  out << "index,value\n";
  for (int i = 0; i < size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", samples[static_cast<size_t>(i)]);
    out << i << ',' << buf << '\n';
  }
  return out.str();
}

nlohmann::json NoiseTrace::params_json() const {
  return {{"n", size()},
          {"dt_us", dt_us},
          {"c_eps", c_eps},
          {"eps_mhz", eps_mhz},
          {"seed", seed}};
}

}  // namespace cspin
