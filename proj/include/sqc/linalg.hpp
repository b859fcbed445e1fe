// Dense complex linear algebra helpers shared by every module: type aliases,
// Hermiticity/unitarity predicates, matrix exponentials, and the
// column-stacking vectorization used for superoperators.
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <complex>
#include <stdexcept>

namespace sqc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex I{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

// Tolerance used by the structural predicates below.
inline constexpr double structure_tol = 1e-10;

// Largest |entry| of a matrix (max-entry norm).
inline double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& a, double tol = structure_tol) {
  if (a.rows() != a.cols()) return false;
  return max_abs(a - a.adjoint().eval()) <= tol;
}

inline bool is_unitary(const Matrix& a, double tol = structure_tol) {
  if (a.rows() != a.cols()) return false;
  return max_abs((a.adjoint() * a - Matrix::Identity(a.rows(), a.cols())).eval()) <= tol;
}

// exp(A) for a general square complex matrix (Pade scaling-and-squaring).
inline Matrix matrix_exponential(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("matrix_exponential: non-square input");
  return a.exp();
}

// exp(-i*H*t) for Hermitian H via spectral decomposition; also hands back the
// eigensystem so callers (gradients) can reuse it.
struct HermitianExp {
  RealVector eigenvalues;
  Matrix eigenvectors;  // columns
  Matrix unitary;       // exp(-i*H*t)
};

inline HermitianExp expm_hermitian(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  HermitianExp out;
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  Vector phases(out.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases[k] = std::exp(-I * out.eigenvalues[k] * t);
  out.unitary = out.eigenvectors * phases.asDiagonal() * out.eigenvectors.adjoint();
  return out;
}

// Frechet derivative of U = exp(-i*H*t) in direction dH, reusing the
// eigensystem of H: the Daleckii-Krein / divided-difference formula.
inline Matrix expm_hermitian_derivative(const HermitianExp& ed, double t, const Matrix& dh) {
  const Eigen::Index n = ed.eigenvalues.size();
  Matrix m = ed.eigenvectors.adjoint() * dh * ed.eigenvectors;
  for (Eigen::Index a = 0; a < n; ++a) {
    const double la = ed.eigenvalues[a];
    const Complex ea = std::exp(-I * la * t);
    for (Eigen::Index b = 0; b < n; ++b) {
      const double lb = ed.eigenvalues[b];
      Complex f;
      if (std::abs(la - lb) < 1e-12) {
        f = -I * t * ea;
      } else {
        f = (ea - std::exp(-I * lb * t)) / (la - lb);
      }
      m(a, b) *= f;
    }
  }
  return ed.eigenvectors * m * ed.eigenvectors.adjoint();
}

// Column-stacking vec: vec(A)_{i + j*d} = A(i, j).
inline Vector vectorize(const Matrix& a) {
  Vector v(a.size());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) v[k++] = a(i, j);
  return v;
}

inline Matrix unvectorize(const Vector& v, Eigen::Index d) {
  Matrix a(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) a(i, j) = v[k++];
  return a;
}

// Kronecker product.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace sqc
