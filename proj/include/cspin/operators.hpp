#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace cspin {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline const Matrix& pauli_x() {
  static const Matrix m = (Matrix(2, 2) << 0, 1, 1, 0).finished();
  return m;
}
inline const Matrix& pauli_y() {
  static const Matrix m =
      (Matrix(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished();
  return m;
}
inline const Matrix& pauli_z() {
  static const Matrix m = (Matrix(2, 2) << 1, 0, 0, -1).finished();
  return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Single-site operator embedded at `site` of an `n_spins` register
// (site 0 is the most significant bit of the basis index).
inline Matrix op_on(const Matrix& op, int site, int n_spins) {
  Matrix out = Matrix::Identity(1, 1);
  for (int s = 0; s < n_spins; ++s)
    out = kron(out, s == site ? op : Matrix::Identity(2, 2));
  return out;
}

// S_a . S_b with spin-1/2 operators (sigma/2) on two sites.
inline Matrix dot_coupling(int site_a, int site_b, int n_spins) {
  Matrix out = Matrix::Zero(1 << n_spins, 1 << n_spins);
  const Matrix* paulis[3] = {&pauli_x(), &pauli_y(), &pauli_z()};
  for (const Matrix* p : paulis)
    out += 0.25 * op_on(*p, site_a, n_spins) * op_on(*p, site_b, n_spins);
  return out;
}

inline Matrix zz_coupling(int site_a, int site_b, int n_spins) {
  return 0.25 * op_on(pauli_z(), site_a, n_spins) *
         op_on(pauli_z(), site_b, n_spins);
}

}  // namespace cspin
