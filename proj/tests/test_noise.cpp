#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <complex>

#include "cspin/dynamics.hpp"
#include "cspin/noise.hpp"

using namespace cspin;

TEST_CASE("fft round trip and a known transform") {
  std::vector<std::complex<double>> a = {1, 2, 3, 4, 5, 6, 7, 8};
  auto b = a;
  fft_radix2(b, false);
  // Check against the naive DFT.
  for (size_t k = 0; k < a.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (size_t j = 0; j < a.size(); ++j)
      acc += a[j] * std::exp(std::complex<double>(
                        0.0, -2.0 * M_PI * static_cast<double>(k * j) / a.size()));
    CHECK(std::abs(b[k] - acc) < 1e-10);
  }
  fft_radix2(b, true);
  for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b[i] - a[i]) < 1e-12);
}

TEST_CASE("zero amplitude gives the all-zero trace") {
  NoiseTrace t = generate_one_over_f(256, 0.1, 0.0, 42);
  for (double v : t.samples) CHECK(v == 0.0);
}

TEST_CASE("fixed seed reproduces the trace bit for bit") {
  NoiseTrace a = generate_one_over_f(512, 0.1, 1.0, 1234);
  NoiseTrace b = generate_one_over_f(512, 0.1, 1.0, 1234);
  REQUIRE(a.samples.size() == b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i)
    CHECK(a.samples[i] == b.samples[i]);
  NoiseTrace c = generate_one_over_f(512, 0.1, 1.0, 1235);
  bool differs = false;
  for (size_t i = 0; i < a.samples.size(); ++i)
    differs |= a.samples[i] != c.samples[i];
  CHECK(differs);
}

TEST_CASE("amplitude is linear in c_eps") {
  NoiseTrace a = generate_one_over_f(256, 0.1, 1.0, 7);
  NoiseTrace b = generate_one_over_f(256, 0.1, 2.0, 7);
  for (size_t i = 0; i < a.samples.size(); ++i)
    CHECK(b.samples[i] == doctest::Approx(2.0 * a.samples[i]).epsilon(1e-12));
}

TEST_CASE("sample count must be a power of two, >= 64") {
  CHECK_THROWS_AS(generate_one_over_f(100, 0.1, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_one_over_f(32, 0.1, 1.0, 1), std::invalid_argument);
}

TEST_CASE("ensemble periodogram slope is -1") {
  std::vector<std::vector<double>> traces;
  for (int s = 0; s < 100; ++s)
    traces.push_back(generate_one_over_f(4096, 0.1, 1.0, 1000 + s).samples);
  const double slope = periodogram_slope(traces);
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.15));
}

TEST_CASE("ensemble mean tends to zero") {
  double acc = 0.0;
  long count = 0;
  double var = 0.0;
  for (int s = 0; s < 50; ++s) {
    NoiseTrace t = generate_one_over_f(1024, 0.1, 1.0, 500 + s);
    for (double v : t.samples) acc += v, var += v * v, ++count;
  }
  const double mean = acc / count;
  const double sigma = std::sqrt(var / count);
  CHECK(std::abs(mean) <= 3.0 * sigma / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("detuning_of applies the per-qubit coupling") {
  NoiseTrace t = generate_one_over_f(64, 0.1, 1.0, 3);
  t.eps_mhz = {0.0, 1.0};
  CHECK(detuning_of(t, 0, 10) == 0.0);
  CHECK(detuning_of(t, 1, 10) == doctest::Approx(t.samples[10]));
  t.eps_mhz = {0.0, 2.5};
  CHECK(detuning_of(t, 1, 10) == doctest::Approx(2.5 * t.samples[10]));
  CHECK_THROWS_AS(detuning_of(t, 0, 64), std::out_of_range);
}

TEST_CASE("Ramsey decay under generated noise shortens with amplitude") {
  // Free evolution of a single nuclear spin; the ensemble coherence decays
  // faster as c_eps grows.
  SpinSystem sys;
  sys.clusters.push_back({{110.0}});
  sys.b0_t = 1.35;
  const int idx_up = SpinBasisLabel{{true}, {false}}.to_index(sys);
  const int idx_dn = SpinBasisLabel{{true}, {true}}.to_index(sys);

  // The trace spans a window much longer than the probe time: the
  // generator removes the DC component, so only a partial-window integral
  // carries a quasi-static phase.
  auto coherence = [&](double c_eps, double t_us) {
    std::complex<double> acc = 0.0;
    const int realizations = 40;
    for (int r = 0; r < realizations; ++r) {
      NoiseTrace noise = generate_one_over_f(1024, 8.0 * t_us / 1024.0, c_eps,
                                             9000 + static_cast<uint64_t>(r));
      noise.eps_mhz = {0.0, 1.0};  // nuclear detuning only
      Matrix u = free_evolve(sys, t_us, noise);
      // Phase between the two nuclear states of the electron-down manifold.
      acc += u(idx_up, idx_up) * std::conj(u(idx_dn, idx_dn));
    }
    return std::abs(acc) / 40.0;
  };

  const double t_probe = 2.0;
  const double c0 = coherence(0.0, t_probe);
  const double c1 = coherence(0.05, t_probe);
  const double c2 = coherence(0.25, t_probe);
  CHECK(c0 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c1 < c0 + 1e-12);
  CHECK(c2 < c1);
}

TEST_CASE("csv and parameter sidecar") {
  NoiseTrace t = generate_one_over_f(64, 0.25, 0.7, 77);
  t.eps_mhz = {0.1, 0.2};
  const std::string csv = t.to_csv();
  CHECK(csv.rfind("index,value\n", 0) == 0);
  auto j = t.params_json();
  CHECK(j.at("n").get<int>() == 64);
  CHECK(j.at("dt_us").get<double>() == doctest::Approx(0.25));
  CHECK(j.at("c_eps").get<double>() == doctest::Approx(0.7));
  CHECK(j.at("seed").get<uint64_t>() == 77);
}
