#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "cspin/hamiltonian.hpp"
#include "cspin/noise.hpp"
#include "cspin/spin_system.hpp"

using namespace cspin;

namespace {

SpinSystem one_p(double a = 117.0, double b0 = 1.0) {
  SpinSystem sys;
  sys.clusters.push_back({{a}});
  sys.b0_t = b0;
  return sys;
}

SpinSystem random_system(Rng& rng, int max_total_spins = 6) {
  SpinSystem sys;
  const int n_clusters = 1 + static_cast<int>(rng.next_u64() % 2);
  int spins = n_clusters;
  for (int c = 0; c < n_clusters; ++c) {
    const int max_donors = std::max(1, (max_total_spins - spins) / (n_clusters - c));
    const int n = 1 + static_cast<int>(rng.next_u64() % static_cast<uint64_t>(max_donors));
    Cluster cl;
    for (int i = 0; i < n; ++i) cl.hyperfine_mhz.push_back(rng.uniform(1.0, 250.0));
    sys.clusters.push_back(cl);
    spins += n;
  }
  sys.b0_t = rng.uniform(0.5, 2.0);
  if (n_clusters == 2) sys.j_mhz = rng.uniform(0.0, 100.0);
  return sys;
}

}  // namespace

TEST_CASE("1P diagonal matches the term-by-term sum") {
  SpinSystem sys = one_p(117.0, 1.0);
  Matrix h = build_static_hamiltonian(sys);
  REQUIRE(h.rows() == 4);
  // |up, Up> is basis index 0.
  const double expected = 0.5 * sys.gamma_e * 1.0 + 0.5 * sys.gamma_n * 1.0 + 117.0 / 4.0;
  CHECK(h(0, 0).real() == doctest::Approx(expected).epsilon(1e-14));
  CHECK(h(0, 0).imag() == doctest::Approx(0.0));
}

TEST_CASE("2P-1P system assembles and is Hermitian") {
  SpinSystem sys;
  sys.clusters.push_back({{50.0, 150.0}});
  sys.clusters.push_back({{110.0}});
  sys.b0_t = 1.35;
  sys.j_mhz = 20.0;
  Matrix h = build_static_hamiltonian(sys);
  REQUIRE(h.rows() == 32);
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("decoupled limit is a pure Zeeman diagonal") {
  SpinSystem sys;
  sys.clusters.push_back({{1e-9, 1e-9}});
  sys.b0_t = 1.0;
  Matrix h = build_static_hamiltonian(sys);
  Matrix offdiag = h;
  offdiag.diagonal().setZero();
  CHECK(offdiag.cwiseAbs().maxCoeff() < 1e-8);
  // Diagonal equals the Zeeman sum of each basis label.
  for (int i = 0; i < h.rows(); ++i) {
    SpinBasisLabel l = SpinBasisLabel::from_index(sys, i);
    double expect = (l.electron_down[0] ? -0.5 : 0.5) * sys.gamma_e;
    for (bool d : l.nuclear_down) expect += (d ? -0.5 : 0.5) * sys.gamma_n;
    CHECK(h(i, i).real() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("static Hamiltonian commutes with total z-magnetization") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    SpinSystem sys = random_system(rng);
    Matrix h = build_static_hamiltonian(sys);
    Matrix sz = total_sz(sys);
    CHECK((h * sz - sz * h).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pure-Zeeman gaps scale linearly with the field") {
  SpinSystem sys;
  sys.clusters.push_back({{1e-9}});
  sys.b0_t = 0.7;
  Eigen::SelfAdjointEigenSolver<Matrix> e1(build_static_hamiltonian(sys));
  SpinSystem scaled = sys;
  scaled.b0_t *= 3.0;
  Eigen::SelfAdjointEigenSolver<Matrix> e2(build_static_hamiltonian(scaled));
  for (int i = 1; i < e1.eigenvalues().size(); ++i) {
    const double g1 = e1.eigenvalues()(i) - e1.eigenvalues()(0);
    const double g2 = e2.eigenvalues()(i) - e2.eigenvalues()(0);
    CHECK(g2 == doctest::Approx(3.0 * g1).epsilon(1e-9));
  }
}

TEST_CASE("drive operator basics") {
  SpinSystem sys = one_p();
  SUBCASE("zero rabi gives the zero matrix") {
    Matrix d = build_drive_hamiltonian(sys, {DriveTarget::electron, 0}, 0.0, 0.3);
    CHECK(d.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("electron drive couples electron-flipped pairs at rabi/2") {
    Matrix d = build_drive_hamiltonian(sys, {DriveTarget::electron, 0}, 0.5, 0.0);
    // |up,Up> = 0, |down,Up> = 2.
    CHECK(d(0, 2).real() == doctest::Approx(0.25));
    CHECK(d(0, 1).real() == doctest::Approx(0.0));
  }
  SUBCASE("invalid index is rejected") {
    CHECK_THROWS_AS(build_drive_hamiltonian(sys, {DriveTarget::nucleus, 5}, 0.5, 0.0),
                    std::out_of_range);
  }
}

TEST_CASE("drive operators are traceless and Hermitian") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    SpinSystem sys = random_system(rng);
    const bool esr = rng.next_double() < 0.5;
    DriveTarget t;
    t.kind = esr ? DriveTarget::electron : DriveTarget::nucleus;
    t.index = static_cast<int>(rng.next_u64() %
                               (esr ? sys.n_electrons() : sys.n_nuclei()));
    Matrix d = build_drive_hamiltonian(sys, t, rng.uniform(0.01, 2.0),
                                       rng.uniform(0.0, 6.28));
    CHECK(std::abs(d.trace()) < 1e-12);
    CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("validation rejects bad systems") {
  SpinSystem sys;
  CHECK_THROWS_AS(sys.validate(), std::invalid_argument);  // no clusters

  sys.clusters.push_back({{117.0}});
  sys.b0_t = -1.0;
  CHECK_THROWS_AS(sys.validate(), std::invalid_argument);

  sys.b0_t = 1.0;
  sys.clusters[0].hyperfine_mhz[0] = -5.0;
  CHECK_THROWS_AS(sys.validate(), std::invalid_argument);

  // Dimension overflow: 2 electrons + 14 nuclei.
  SpinSystem big;
  big.clusters.push_back({std::vector<double>(7, 50.0)});
  big.clusters.push_back({std::vector<double>(7, 60.0)});
  big.b0_t = 1.0;
  CHECK_THROWS_AS(build_static_hamiltonian(big), std::invalid_argument);
}

TEST_CASE("JSON round trip preserves the system") {
  SpinSystem sys;
  sys.clusters.push_back({{60.0, 170.0}});
  sys.clusters.push_back({{15.0, 120.0, 230.0}});
  sys.b0_t = 1.35;
  sys.gradient_db_t = 0.02;
  sys.j_mhz = 7.5;
  SpinSystem back = spin_system_from_json(to_json(sys));
  CHECK(back.clusters.size() == 2);
  CHECK(back.clusters[1].hyperfine_mhz[2] == doctest::Approx(230.0));
  CHECK(back.b0_t == doctest::Approx(1.35));
  CHECK(back.gradient_db_t == doctest::Approx(0.02));
  CHECK(back.j_mhz == doctest::Approx(7.5));
  CHECK(back.gamma_n == doctest::Approx(-17.41));
}
