// Propagation of closed and open systems plus every fidelity functional used
// as an optimization objective or acceptance metric.
//
// Open-system conventions: a LindbladModel stores exactly what is propagated,
//   d rho/dt = -i (H rho - rho H^+) + sum_q gamma_q W_q rho W_q^+,
// where H is typically the non-Hermitian effective Hamiltonian
// H_eff = H0 - (i/2) sum_q gamma_q W_q^+ W_q (see make_lindblad). Dropping the
// jump terms while keeping H_eff yields the trace-decreasing no-jump evolution.
// Superoperators act on column-stacked density matrices, so the commutator
// part of a Hermitian H maps to -i (I (x) H - H^T (x) I).
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "sqc/linalg.hpp"

namespace sqc {

struct ScheduleStep {
  Matrix generator;  // Hamiltonian for this step (may be non-Hermitian effective)
  double duration = 0.0;
};

using PiecewiseGeneratorSchedule = std::vector<ScheduleStep>;

// Ordered product of per-step exponentials exp(-i H_k t_k), later steps on the left.
inline Matrix propagate_unitary(const PiecewiseGeneratorSchedule& schedule) {
  if (schedule.empty()) throw std::invalid_argument("propagate_unitary: empty schedule");
  const Eigen::Index d = schedule.front().generator.rows();
  Matrix u = Matrix::Identity(d, d);
  for (const auto& step : schedule) {
    if (step.generator.rows() != d || step.generator.cols() != d)
      throw std::invalid_argument("propagate_unitary: dimension mismatch");
    if (step.duration <= 0.0) throw std::invalid_argument("propagate_unitary: duration <= 0");
    Matrix stepu;
    if (is_hermitian(step.generator, 1e-13)) {
      stepu = expm_hermitian(step.generator, step.duration).unitary;
    } else {
      stepu = matrix_exponential(Matrix(-I * step.duration * step.generator));
    }
    u = stepu * u;
  }
  return u;
}

struct JumpOperator {
  Matrix op;
  double rate = 0.0;  // gamma_q >= 0
};

struct LindbladModel {
  Matrix hamiltonian;  // propagated as-is; see file header for the convention
  std::vector<JumpOperator> jumps;

  Eigen::Index dim() const { return hamiltonian.rows(); }
};

// Assemble the standard Lindblad form from a Hermitian H0:
// stores H_eff = H0 - (i/2) sum gamma W^+ W together with the jump list.
inline LindbladModel make_lindblad(const Matrix& h0, std::vector<JumpOperator> jumps) {
  Matrix heff = h0;
  for (const auto& j : jumps) {
    if (j.rate < 0.0) throw std::invalid_argument("make_lindblad: negative rate");
    heff -= 0.5 * I * j.rate * (j.op.adjoint() * j.op);
  }
  return LindbladModel{std::move(heff), std::move(jumps)};
}

inline Matrix lindblad_rhs(const LindbladModel& m, const Matrix& rho) {
  Matrix out = -I * (m.hamiltonian * rho - rho * m.hamiltonian.adjoint());
  for (const auto& j : m.jumps) out += j.rate * (j.op * rho * j.op.adjoint());
  return out;
}

// Fixed-step classical RK4 on the Lindblad ODE. Throws if the trace drifts by
// more than 1e-4 above its initial value (a step-too-large symptom).
inline Matrix lindblad_propagate(const LindbladModel& m, const Matrix& rho0, double total_time,
                                 double dt) {
  if (dt <= 0.0) throw std::invalid_argument("lindblad_propagate: dt <= 0");
  const int n_steps = std::max(1, static_cast<int>(std::ceil(total_time / dt - 1e-12)));
  const double h = total_time / n_steps;
  const double tr0 = rho0.trace().real();
  Matrix rho = rho0;
  for (int s = 0; s < n_steps; ++s) {
    const Matrix k1 = lindblad_rhs(m, rho);
    const Matrix k2 = lindblad_rhs(m, Matrix(rho + 0.5 * h * k1));
    const Matrix k3 = lindblad_rhs(m, Matrix(rho + 0.5 * h * k2));
    const Matrix k4 = lindblad_rhs(m, Matrix(rho + h * k3));
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (rho.trace().real() > tr0 + 1e-4)
      throw std::runtime_error("lindblad_propagate: trace drift, step too large");
  }
  return rho;
}

struct CPMap {
  Matrix superoperator;  // d^2 x d^2, column-stacking convention

  Matrix apply(const Matrix& rho) const {
    return unvectorize(Vector(superoperator * vectorize(rho)), rho.rows());
  }
};

// Vectorized Lindbladian L with vec(A X B) = (B^T (x) A) vec(X).
inline Matrix lindblad_superoperator(const LindbladModel& m) {
  const Eigen::Index d = m.dim();
  const Matrix id = Matrix::Identity(d, d);
  Matrix L = -I * kron(id, m.hamiltonian) + I * kron(m.hamiltonian.conjugate(), id);
  for (const auto& j : m.jumps) L += j.rate * kron(j.op.conjugate(), j.op);
  return L;
}

// exp(T L) as a CP map; identity at T = 0.
inline CPMap cp_map(const LindbladModel& m, double total_time) {
  return CPMap{matrix_exponential(Matrix(total_time * lindblad_superoperator(m)))};
}

// ---------------------------------------------------------------------------
// Fidelities
// ---------------------------------------------------------------------------

inline double state_fidelity(const Vector& target, const Vector& achieved) {
  if (target.size() != achieved.size())
    throw std::invalid_argument("state_fidelity: shape mismatch");
  return std::norm(Complex(target.adjoint() * achieved));
}

// Tr(rho_target rho) for a pure target given as a density matrix.
inline double state_fidelity(const Matrix& rho_target, const Matrix& rho) {
  if (rho_target.rows() != rho.rows()) throw std::invalid_argument("state_fidelity: shape mismatch");
  return (rho_target * rho).trace().real();
}

inline double unitary_fidelity(const Matrix& target, const Matrix& achieved) {
  if (target.rows() != achieved.rows() || target.cols() != achieved.cols())
    throw std::invalid_argument("unitary_fidelity: shape mismatch");
  const double d = static_cast<double>(target.rows());
  return std::norm(Complex((target.adjoint() * achieved).trace())) / (d * d);
}

// |Tr(V_tar^+ V)|^2 / k^2 with k the column count of the isometry.
inline double isometry_fidelity(const Matrix& target, const Matrix& achieved) {
  if (target.rows() != achieved.rows() || target.cols() != achieved.cols())
    throw std::invalid_argument("isometry_fidelity: shape mismatch");
  const double k = static_cast<double>(target.cols());
  return std::norm(Complex((target.adjoint() * achieved).trace())) / (k * k);
}

// Process fidelity |Tr(E_tar^+ E)| / d^2 between superoperators, printed
// un-squared in the source convention; set `squared` to square it.
inline double process_fidelity(const CPMap& target, const CPMap& achieved, bool squared = false) {
  if (target.superoperator.rows() != achieved.superoperator.rows())
    throw std::invalid_argument("process_fidelity: shape mismatch");
  const double d2 = static_cast<double>(target.superoperator.rows());  // = d^2
  const double f = std::abs(Complex((target.superoperator.adjoint() * achieved.superoperator).trace())) / d2;
  return squared ? f * f : f;
}

// Closed-system unitary embedded as a superoperator, E_U = U* (x) U.
inline CPMap unitary_channel(const Matrix& u) { return CPMap{kron(u.conjugate(), u)}; }

// ---------------------------------------------------------------------------
// Two-level coherence transfer under spontaneous decay
// ---------------------------------------------------------------------------

// Ground-state coherence picked up from an initial excited-state coherence
// with energy splitting Delta and decay rate Gamma (decaying convention):
//   rho01_g(t) / rho01_e(0) = Gamma/(Gamma + i Delta) (1 - e^{-(i Delta + Gamma) t}).
inline Complex two_level_coherence(double delta, double gamma, double t) {
  if (gamma <= 0.0) throw std::invalid_argument("two_level_coherence: gamma must be > 0");
  const Complex s = Complex(gamma, delta);
  return (gamma / s) * (1.0 - std::exp(-s * t));
}

}  // namespace sqc
