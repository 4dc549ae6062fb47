#include "cspin/hamiltonian.hpp"

namespace cspin {

Matrix build_static_hamiltonian(const SpinSystem& sys, HyperfineModel model) {
  sys.validate();
  const int n = sys.n_spins();
  const int dim = sys.dimension();
  Matrix h = Matrix::Zero(dim, dim);

  // Zeeman terms. Diagonal, assembled directly.
  for (int e = 0; e < sys.n_electrons(); ++e)
    h += sys.gamma_e * sys.field_at(e) * 0.5 * op_on(pauli_z(), e, n);
  for (int i = 0; i < sys.n_nuclei(); ++i) {
    const int site = sys.n_electrons() + i;
    const double b = sys.field_at(sys.cluster_of_nucleus(i));
    h += sys.gamma_n * b * 0.5 * op_on(pauli_z(), site, n);
  }

  // Hyperfine couplings within each cluster.
  for (int i = 0; i < sys.n_nuclei(); ++i) {
    const int e_site = sys.cluster_of_nucleus(i);
    const int n_site = sys.n_electrons() + i;
    const double a = sys.hyperfine_of_nucleus(i);
    h += a * (model == HyperfineModel::full ? dot_coupling(e_site, n_site, n)
                                            : zz_coupling(e_site, n_site, n));
  }

  // Exchange between the two electrons.
  if (sys.n_electrons() == 2 && sys.j_mhz != 0.0)
    h += sys.j_mhz * dot_coupling(0, 1, n);

  return h;
}

Matrix build_drive_hamiltonian(const SpinSystem& sys, DriveTarget target,
                               double rabi_mhz, double phase_rad) {
  sys.validate();
  const int n = sys.n_spins();
  const Matrix quad = 0.5 * (std::cos(phase_rad) * pauli_x() +
                             std::sin(phase_rad) * pauli_y());
  Matrix h = Matrix::Zero(sys.dimension(), sys.dimension());
  if (target.kind == DriveTarget::electron) {
    if (target.index < 0 || target.index >= sys.n_electrons())
      throw std::out_of_range("electron index out of range");
    for (int e = 0; e < sys.n_electrons(); ++e)
      h += rabi_mhz * op_on(quad, e, n);
  } else {
    if (target.index < 0 || target.index >= sys.n_nuclei())
      throw std::out_of_range("nucleus index out of range");
    h += rabi_mhz * op_on(quad, sys.n_electrons() + target.index, n);
  }
  return h;
}

Matrix total_sz(const SpinSystem& sys) {
  const int n = sys.n_spins();
  Matrix h = Matrix::Zero(sys.dimension(), sys.dimension());
  for (int s = 0; s < n; ++s) h += 0.5 * op_on(pauli_z(), s, n);
  return h;
}

}  // namespace cspin
