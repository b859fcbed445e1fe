// Physical Hamiltonians and noise models: the qudecimal nuclear-spin control
// Hamiltonian, Rydberg-dressed two-qudit entanglers, dual-manifold rf driving,
// manifold-transfer Rabi Hamiltonians, optical-pumping jump operators, and the
// hyperfine + light-shift stack of the cooling analysis.
//
// Conventions shared with the rest of the library: spin matrices use the
// m = J - row ordering, half-integer quantum numbers travel as doubled ints,
// and every constructed Hamiltonian is Hermitian unless explicitly labeled
// effective (anti-Hermitian part negative semidefinite).
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sqc/angular.hpp"
#include "sqc/dynamics.hpp"
#include "sqc/linalg.hpp"

namespace sqc {

// ---------------------------------------------------------------------------
// Physical constants (overridable defaults, SI-flavored units as named)
// ---------------------------------------------------------------------------

struct PhysicalConstants {
  double gamma_3p1_khz = 7.5;          // intercombination linewidth
  double omega_hf_2pi_mhz = 1130.0;    // excited-state hyperfine splitting
  double g_i_mu_n_hz_per_gauss = -184; // nuclear moment
  double a_1p1_mhz = -3.4;             // dipolar hyperfine constant, 1P1
  double q_1p1_mhz = 39.0;             // quadrupolar hyperfine constant, 1P1
  double gamma_1p1_mhz = 32.0;         // broad singlet linewidth
  double kappa_figure_of_merit = 6.8e3;
};

inline const PhysicalConstants& default_constants() {
  static const PhysicalConstants c{};
  return c;
}

// ---------------------------------------------------------------------------
// Qudecimal control Hamiltonian
// ---------------------------------------------------------------------------

struct QudecimalControl {
  double omega_rf = 1.0;  // reference Rabi frequency (unit of energy)
  double beta = 0.0;      // tensor-shift strength, units of omega_rf
  SpinQuantum J{9};       // d = 2J+1 (defaults to the qudecimal, J = 9/2)
};

// H(c) = Omega_rf (cos(c pi) Ix + sin(c pi) Iy) + beta Iz^2, c = phase / pi.
inline Matrix qudecimal_hamiltonian(const QudecimalControl& ctl, double c) {
  if (ctl.omega_rf <= 0.0) throw std::invalid_argument("qudecimal_hamiltonian: omega_rf <= 0");
  const auto ops = angular_momentum_ops(ctl.J);
  return ctl.omega_rf * (std::cos(c * pi) * ops[0] + std::sin(c * pi) * ops[1]) +
         ctl.beta * ctl.omega_rf * ops[2] * ops[2];
}

inline Matrix qudecimal_hamiltonian_derivative(const QudecimalControl& ctl, double c) {
  const auto ops = angular_momentum_ops(ctl.J);
  return pi * ctl.omega_rf * (-std::sin(c * pi) * ops[0] + std::cos(c * pi) * ops[1]);
}

// ---------------------------------------------------------------------------
// Clebsch-Gordan Rabi ratios for pi-polarized coupling F -> F'
// ---------------------------------------------------------------------------

// Ratio <F',M | F,M; 1,0> / <F',-F | F,-F; 1,0>, the per-level Rabi frequency
// relative to the stretched M = -F transition.
inline double rabi_cg_ratio(SpinQuantum F, SpinQuantum Fp, int two_m) {
  if (std::abs(two_m) > F.two_j || (F.two_j - two_m) % 2 != 0)
    throw std::invalid_argument("rabi_cg_ratio: invalid M");
  const double ref = clebsch_gordan(F.two_j, -F.two_j, 2, 0, Fp.two_j, -F.two_j);
  if (std::abs(ref) < 1e-15)
    throw std::invalid_argument("rabi_cg_ratio: stretched transition forbidden");
  return clebsch_gordan(F.two_j, two_m, 2, 0, Fp.two_j, two_m) / ref;
}

// ---------------------------------------------------------------------------
// Rydberg dressing: single-atom and two-atom (perfect blockade) spectra
// ---------------------------------------------------------------------------

// Ground-branch light shift of the single-atom 2-level dressing
// [[0, Omega/2], [Omega/2, -Delta]]; the branch adiabatically connected to
// the bare ground state is selected by maximal ground overlap.
inline double single_atom_light_shift(double omega, double delta) {
  Matrix h2 = Matrix::Zero(2, 2);
  h2(0, 1) = h2(1, 0) = omega / 2.0;
  h2(1, 1) = -delta;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h2);
  const double o0 = std::abs(es.eigenvectors()(0, 0));
  const double o1 = std::abs(es.eigenvectors()(0, 1));
  if (std::abs(o0 - o1) < 1e-9)
    throw std::runtime_error("single_atom_light_shift: ambiguous adiabatic branch");
  return o0 > o1 ? es.eigenvalues()[0] : es.eigenvalues()[1];
}

struct DressedLevels {
  std::array<double, 3> eigenvalues{};  // ascending
  Vector ground_branch;                 // eigenvector with maximal |<ij|.>|
  double energy = 0.0;                  // eigenvalue of the ground branch
};

// Two atoms under perfect blockade, basis {|ij>, |r_i j>, |i r_j>}:
//   H = [[0, W_i/2, W_j/2], [W_i/2, -Delta_i, 0], [W_j/2, 0, -Delta_j]],
// with W = omega_l * (CG Rabi ratio).
inline DressedLevels two_atom_dressed_levels(double omega_l, double delta_i, double delta_j,
                                             double ratio_i, double ratio_j) {
  Matrix h = Matrix::Zero(3, 3);
  h(0, 1) = h(1, 0) = omega_l * ratio_i / 2.0;
  h(0, 2) = h(2, 0) = omega_l * ratio_j / 2.0;
  h(1, 1) = -delta_i;
  h(2, 2) = -delta_j;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  DressedLevels out;
  for (int k = 0; k < 3; ++k) out.eigenvalues[k] = es.eigenvalues()[k];
  int best = 0, second = -1;
  double best_ov = -1.0, second_ov = -1.0;
  for (int k = 0; k < 3; ++k) {
    const double ov = std::abs(es.eigenvectors()(0, k));
    if (ov > best_ov) {
      second_ov = best_ov;
      second = best;
      best_ov = ov;
      best = k;
    } else if (ov > second_ov) {
      second_ov = ov;
      second = k;
    }
  }
  (void)second;
  if (best_ov - second_ov < 1e-9)
    throw std::runtime_error("two_atom_dressed_levels: ambiguous adiabatic branch");
  out.ground_branch = es.eigenvectors().col(best);
  // Deterministic phase: largest component real positive.
  if (std::abs(out.ground_branch[0]) > 0)
    out.ground_branch *= std::abs(out.ground_branch[0]) / out.ground_branch[0];
  out.energy = es.eigenvalues()[best];
  return out;
}

struct EntanglerSpec {
  SpinQuantum F{9};        // ground/auxiliary manifold spin
  SpinQuantum Fp{11};      // Rydberg manifold spin (dressing transition F -> F')
  int d = 3;               // qudit dimension: lowest d magnetic sublevels
  double omega_l = 6.0;    // dressing Rabi frequency (units of omega_rf)
  double delta_l = 0.0;    // laser detuning from the stretched transition
  double delta_z = 1.0;    // per-level Zeeman detuning slope (default omega_0)
  double rydberg_linewidth = 0.0;  // Gamma_r, same units
};

struct DressedEntangler {
  int d = 0;
  Eigen::MatrixXd energies;                         // E^{ij}, d x d, symmetric
  Eigen::MatrixXd decay;                            // gamma^{ij} >= 0
  std::vector<std::vector<Vector>> dressed_coeffs;  // (C_ij, C_{r_i j}, C_{i r_j})
};

// Dressed two-qudit entangler tables. Level i (i = 0..d-1) is the magnetic
// sublevel M_i = -F + i with per-level Rabi Omega_L * ratio(M_i) and Zeeman
// detuning Delta_i = Delta_L + delta_z * M_i. The tabulated E^{ij} is the
// genuine two-body entangling energy: the dressed-pair ground energy minus
// the two single-atom light shifts (so E -> 0 as Omega_L -> 0, with the
// characteristic Omega_L^4 / Delta^3 far-detuned scaling).
inline DressedEntangler rydberg_entangler(const EntanglerSpec& spec) {
  if (spec.d < 2 || spec.d > spec.F.dim())
    throw std::invalid_argument("rydberg_entangler: invalid qudit dimension");
  DressedEntangler out;
  out.d = spec.d;
  out.energies.setZero(spec.d, spec.d);
  out.decay.setZero(spec.d, spec.d);
  out.dressed_coeffs.assign(spec.d, std::vector<Vector>(spec.d));
  std::vector<double> ratio(spec.d), delta(spec.d), ls(spec.d);
  for (int i = 0; i < spec.d; ++i) {
    const int two_m = -spec.F.two_j + 2 * i;
    ratio[i] = rabi_cg_ratio(spec.F, spec.Fp, two_m);
    delta[i] = spec.delta_l + spec.delta_z * (0.5 * two_m);
    ls[i] = spec.omega_l == 0.0 ? 0.0
                                : single_atom_light_shift(spec.omega_l * ratio[i], delta[i]);
  }
  for (int i = 0; i < spec.d; ++i)
    for (int j = 0; j < spec.d; ++j) {
      const auto lv =
          two_atom_dressed_levels(spec.omega_l, delta[i], delta[j], ratio[i], ratio[j]);
      out.energies(i, j) = lv.energy - ls[i] - ls[j];
      out.dressed_coeffs[i][j] = lv.ground_branch;
      const double cri = std::norm(lv.ground_branch[1]);
      const double cir = std::norm(lv.ground_branch[2]);
      out.decay(i, j) = (cri + cir) * spec.rydberg_linewidth;
    }
  return out;
}

// Collective entangling Hamiltonian on the d^2 dressed-pair space; when decay
// is included the diagonal picks up -i gamma^{ij}/2 (effective, non-Hermitian).
inline Matrix entangler_hamiltonian(const DressedEntangler& e, bool with_decay) {
  const int d = e.d;
  Matrix h = Matrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Complex v = e.energies(i, j);
      if (with_decay) v -= 0.5 * I * e.decay(i, j);
      h(i * d + j, i * d + j) = v;
    }
  return h;
}

// rf Larmor Hamiltonian H~[phi] in the dressed-pair basis. Each manifold sees
//   h_a = Omega_rf (cos phi Fx + sin phi Fy),
//   h_r = 2 Omega_rf (cos phi Fx + sin phi Fy) + omega_0 Fz,
// with spin-(d-1)/2 operators on the retained levels, weighted by the dressed
// coefficients; matrix elements vanish between different a/r characters.
inline Matrix dressed_rf_hamiltonian(const DressedEntangler& e, double phi, double omega_rf,
                                     double omega_0) {
  const int d = e.d;
  const SpinQuantum j{d - 1};
  const auto ops = angular_momentum_ops(j);
  const Matrix drive = std::cos(phi) * ops[0] + std::sin(phi) * ops[1];
  const Matrix ha = omega_rf * drive;
  const Matrix hr = 2.0 * omega_rf * drive + omega_0 * ops[2];
  Matrix h = Matrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int jj = 0; jj < d; ++jj)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          const Vector& cij = e.dressed_coeffs[i][jj];
          const Vector& ckl = e.dressed_coeffs[k][l];
          Complex v = 0.0;
          const Complex gg = std::conj(cij[0]) * ckl[0];
          const Complex rr = std::conj(cij[1]) * ckl[1];
          const Complex ir = std::conj(cij[2]) * ckl[2];
          if (jj == l) v += (gg * ha(i, k) + rr * hr(i, k) + ir * ha(i, k));
          if (i == k) v += (gg * ha(jj, l) + rr * ha(jj, l) + ir * hr(jj, l));
          h(i * d + jj, k * d + l) = v;
        }
  return h;
}

// ---------------------------------------------------------------------------
// Dual-manifold rf driving (g-factor ratio fixed at 2, rf at 4/3 omega_0)
// ---------------------------------------------------------------------------

struct DualManifoldPair {
  Matrix h_a;  // auxiliary manifold
  Matrix h_r;  // Rydberg manifold
};

inline DualManifoldPair dual_manifold_rf(SpinQuantum F, double omega_rf, double omega_0,
                                         double phi) {
  const auto ops = angular_momentum_ops(F);
  const Matrix drive = std::cos(phi) * ops[0] + std::sin(phi) * ops[1];
  DualManifoldPair out;
  out.h_a = omega_rf * drive - (omega_0 / 3.0) * ops[2];
  out.h_r = 2.0 * omega_rf * drive + (2.0 * omega_0 / 3.0) * ops[2];
  return out;
}

// Effective Larmor frequencies of the two manifolds; Omega_r = 2 Omega_a.
inline std::array<double, 2> dual_manifold_rabi(double omega_rf, double omega_0) {
  const double oa = std::sqrt(omega_rf * omega_rf + omega_0 * omega_0 / 9.0);
  return {oa, 2.0 * oa};
}

// ---------------------------------------------------------------------------
// Manifold-transfer Rabi Hamiltonian (ground + excited, per-M couplings)
// ---------------------------------------------------------------------------

// Basis [g_0..g_{n-1}, e_0..e_{n-1}]:
//   H = sum_M -Delta_M |e,M><e,M| + (Omega/2) sum_M C_M (e^{i phi}|e,M><g,M| + h.c.).
inline Matrix transfer_rabi_hamiltonian(const RealVector& detunings, const RealVector& cg,
                                        double omega, double phi) {
  const Eigen::Index n = detunings.size();
  if (cg.size() != n) throw std::invalid_argument("transfer_rabi_hamiltonian: size mismatch");
  Matrix h = Matrix::Zero(2 * n, 2 * n);
  const Complex coupling_phase = std::exp(I * phi);
  for (Eigen::Index m = 0; m < n; ++m) {
    h(n + m, n + m) = -detunings[m];
    h(n + m, m) = 0.5 * omega * cg[m] * coupling_phase;
    h(m, n + m) = std::conj(h(n + m, m));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Optical-pumping jump operators
// ---------------------------------------------------------------------------

struct OpticalPumpingSimplified {
  double alpha = 0.0137;  // rank-1 weight (J = 9/2 value)
  double beta = 0.2;      // rank-2 weight
  double scattering_rate = 1.0;
};

struct OpticalPumpingFull {
  SpinQuantum J_excited{2};  // electron angular momentum J' of the excited state
  SpinQuantum I_nuclear{9};
  SpinQuantum F_ground{9};
  double rabi = 1.0;                     // Omega_L
  double detuning = 10.0;                // Delta (from the F' = F excited level)
  std::vector<double> excited_splittings;  // delta_{F'} per F' in ascending order
  double linewidth = 1.0;                // Gamma
  std::array<Complex, 3> laser_polarization{Complex(0), Complex(0), Complex(1)};  // Cartesian
};

// Per-F' rank-0/1/2 dyadic coefficients C^(0,1,2), with the relative line
// strength |o_{F'}|^2 = (2F'+1)(2J'+1) {J J' 1; F' F I}^2 folded in.
struct DyadicCoefficients {
  int two_fp = 0;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
};

namespace detail {

// Spherical basis vectors as Cartesian complex 3-vectors.
inline std::array<Complex, 3> spherical_unit(int q) {
  const double s = 1.0 / std::sqrt(2.0);
  switch (q) {
    case +1: return {-s, -s * I, 0.0};
    case 0: return {0.0, 0.0, 1.0};
    case -1: return {s, -s * I, 0.0};
  }
  throw std::invalid_argument("spherical_unit: q must be -1, 0, +1");
}

// Cartesian components of the dimensionless raising operator D^+_{FF'}
// (d_e x d_g), with reduced strength o_{F'} from the 6j recoupling.
inline std::array<Matrix, 3> raising_operator(SpinQuantum F, SpinQuantum Fp, SpinQuantum Jg,
                                              SpinQuantum Jp, SpinQuantum nuc) {
  // Line strength from the hyperfine recoupling of the reduced element:
  // |<(J' I)F' || d || (J I)F>|^2 = (2F+1) {J J' 1; F' F I}^2 |<J'||d||J>|^2
  // in the <F' m'|F m; 1 q> Clebsch-Gordan convention used below.
  const double sixj = wigner_6j(Jg.two_j, Jp.two_j, 2, Fp.two_j, F.two_j, nuc.two_j);
  const double o = std::sqrt(double(F.dim())) * std::abs(sixj);
  std::array<Matrix, 3> dq;  // spherical components q = -1, 0, +1
  for (int q = -1; q <= 1; ++q) {
    Matrix m = Matrix::Zero(Fp.dim(), F.dim());
    for (int two_mg = -F.two_j; two_mg <= F.two_j; two_mg += 2) {
      const int two_me = two_mg + 2 * q;
      if (std::abs(two_me) > Fp.two_j) continue;
      m(m_index(Fp, two_me), m_index(F, two_mg)) =
          o * clebsch_gordan(F.two_j, two_mg, 2, 2 * q, Fp.two_j, two_me);
    }
    dq[q + 1] = std::move(m);
  }
  // Cartesian combinations: A_{+1} = -(Ax + i Ay)/sqrt(2), A_{-1} = (Ax - i Ay)/sqrt(2).
  std::array<Matrix, 3> cart;
  cart[0] = (dq[0] - dq[2]) / std::sqrt(2.0);        // x
  cart[1] = I * (dq[0] + dq[2]) / std::sqrt(2.0);    // y
  cart[2] = dq[1];                                   // z
  return cart;
}

}  // namespace detail

// Numerically extracted C^(0,1,2) per excited manifold F' for the dyadic
// D_{FF'} D^+_{FF'}; validates against the sum rule sum_{F'} C^(2) = 0 for
// J = 0 ground states.
inline std::vector<DyadicCoefficients> optical_pumping_coefficients(SpinQuantum Jg,
                                                                    SpinQuantum Jp,
                                                                    SpinQuantum nuc,
                                                                    SpinQuantum F) {
  std::vector<DyadicCoefficients> out;
  const auto fops = angular_momentum_ops(F);
  const int d = F.dim();
  const Matrix f2 = fops[0] * fops[0] + fops[1] * fops[1] + fops[2] * fops[2];
  for (int two_fp = std::abs(Jp.two_j - nuc.two_j); two_fp <= Jp.two_j + nuc.two_j;
       two_fp += 2) {
    const SpinQuantum Fp{two_fp};
    if (std::abs(F.two_j - two_fp) > 2) continue;  // dipole selection rule
    const auto dup = detail::raising_operator(F, Fp, Jg, Jp, nuc);
    // M_ab = D_a D^+_b acting on the ground space.
    std::array<std::array<Matrix, 3>, 3> mab;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) mab[a][b] = dup[a].adjoint() * dup[b];
    DyadicCoefficients c;
    c.two_fp = two_fp;
    Matrix trace_part = mab[0][0] + mab[1][1] + mab[2][2];
    c.c0 = std::real(trace_part.trace()) / (3.0 * d);
    const Matrix anti = mab[0][1] - mab[1][0];  // = 2 i C1 Fz
    const double fz2 = std::real((fops[2] * fops[2]).trace());
    c.c1 = std::real((fops[2] * (anti / (2.0 * I))).trace()) / fz2;
    const Matrix q_op = fops[2] * fops[2] - f2 / 3.0;  // rank-2 probe
    const Matrix sym = mab[2][2] - trace_part / 3.0;
    const double q2 = std::real((q_op * q_op).trace());
    c.c2 = std::real((q_op * sym).trace()) / q2;
    out.push_back(c);
  }
  return out;
}

// Three jump operators (q = -1, 0, +1) with their common rate.
struct JumpSet {
  std::vector<JumpOperator> jumps;
};

// List ordering is q = -1, 0, +1:
//   W_{-1} = i alpha T^(1)_{+1} + beta sqrt(3/4) T^(2)_{+1},
//   W_0    = beta T^(2)_0,
//   W_{+1} = i alpha T^(1)_{-1} - beta sqrt(3/4) T^(2)_{-1}.
inline JumpSet optical_pumping_jumps(const OpticalPumpingSimplified& spec, SpinQuantum J) {
  const double root34 = std::sqrt(3.0 / 4.0);
  JumpSet out;
  out.jumps.push_back({Matrix(I * spec.alpha * spherical_tensor(J, {1, +1}) +
                              root34 * spec.beta * spherical_tensor(J, {2, +1})),
                       spec.scattering_rate});
  out.jumps.push_back({Matrix(spec.beta * spherical_tensor(J, {2, 0})), spec.scattering_rate});
  out.jumps.push_back({Matrix(I * spec.alpha * spherical_tensor(J, {1, -1}) -
                              root34 * spec.beta * spherical_tensor(J, {2, -1})),
                       spec.scattering_rate});
  return out;
}

// Full atomic-structure construction: W_q = sum_{F'} pref_{F'} (e_q* . D)(eps_L . D^+).
inline JumpSet optical_pumping_jumps(const OpticalPumpingFull& spec) {
  if (spec.linewidth <= 0.0) throw std::invalid_argument("optical_pumping_jumps: Gamma <= 0");
  const SpinQuantum F = spec.F_ground;
  JumpSet out;
  std::vector<int> fps;
  for (int two_fp = std::abs(spec.J_excited.two_j - spec.I_nuclear.two_j);
       two_fp <= spec.J_excited.two_j + spec.I_nuclear.two_j; two_fp += 2)
    if (std::abs(F.two_j - two_fp) <= 2) fps.push_back(two_fp);
  if (!spec.excited_splittings.empty() && spec.excited_splittings.size() != fps.size())
    throw std::invalid_argument("optical_pumping_jumps: splittings count mismatch");
  for (int q = -1; q <= 1; ++q) {
    Matrix w = Matrix::Zero(F.dim(), F.dim());
    const auto eq = detail::spherical_unit(q);
    for (std::size_t n = 0; n < fps.size(); ++n) {
      const SpinQuantum Fp{fps[n]};
      // Ground state J is effectively 0 for the nuclear-spin encodings here;
      // the recoupling strength lives in raising_operator.
      const auto dup = detail::raising_operator(F, Fp, SpinQuantum{0}, spec.J_excited,
                                                spec.I_nuclear);
      Matrix absorb = Matrix::Zero(Fp.dim(), F.dim());
      for (int a = 0; a < 3; ++a) absorb += spec.laser_polarization[a] * dup[a];
      Matrix emit = Matrix::Zero(F.dim(), Fp.dim());
      for (int a = 0; a < 3; ++a) emit += std::conj(eq[a]) * dup[a].adjoint();
      const double splitting = spec.excited_splittings.empty() ? 0.0 : spec.excited_splittings[n];
      const Complex pref =
          (spec.rabi / 2.0) / Complex(spec.detuning + splitting, spec.linewidth / 2.0);
      w += pref * (emit * absorb);
    }
    out.jumps.push_back({std::move(w), spec.linewidth});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hyperfine + Autler-Townes light-shift stack (cooling analysis)
// ---------------------------------------------------------------------------

struct HyperfineSpec {
  double a = -3.4;  // dipolar constant (MHz)
  double q = 39.0;  // quadrupolar constant (MHz)
  SpinQuantum I{9};
  SpinQuantum J{2};  // electronic J = 1 for the singlet excited state
  // Linear nuclear Zeeman splitting (MHz per unit M_I). Breaks the exact
  // M_I <-> -M_I symmetry of the dressed stack, as the bias field does in
  // the lab; 0 keeps the stack field-free.
  double nuclear_zeeman = 0.0;
};

struct QuarticShift {
  double c0 = 0.0, c2 = 0.0, c4 = 0.0;  // shift c0 + c2 M_I^2 + c4 M_I^4
};

// Electronic basis: |a, M_J = +1>, |a, 0>, |a, -1>, |b+>, |b-> tensored with
// the nuclear |M_I> levels. The two b sublevels carry the Autler-Townes
// coupling to M_J = +-1 separately (strength Omega / 2 sqrt(2) each), which
// reproduces the independent dressed-pair picture used in the perturbative
// treatment; the hyperfine interaction acts on the a manifold only.
inline Matrix hyperfine_stack(const HyperfineSpec& spec, double autler_townes_rabi,
                              const std::optional<QuarticShift>& lightshift = std::nullopt) {
  if (spec.J.two_j != 2)
    throw std::invalid_argument("hyperfine_stack: electronic manifold must have J = 1");
  const int di = spec.I.dim();
  const int ne = 5;  // a(+1,0,-1), b+, b-
  const auto iops = angular_momentum_ops(spec.I);
  const auto jops = angular_momentum_ops(spec.J);  // spin-1, 3x3
  const Matrix id_i = Matrix::Identity(di, di);

  // Embed the 3x3 electronic-J operators in the 5-level electronic space.
  auto embed = [&](const Matrix& j3) {
    Matrix m = Matrix::Zero(ne, ne);
    m.topLeftCorner(3, 3) = j3;
    return m;
  };
  Matrix idot = Matrix::Zero(ne * di, ne * di);
  for (int ax = 0; ax < 3; ++ax) idot += kron(embed(jops[ax]), iops[ax]);

  const double ii = spec.I.j() * (spec.I.j() + 1.0);
  const double jj = spec.J.j() * (spec.J.j() + 1.0);
  const double denom = 2.0 * spec.I.j() * spec.J.j() * (2.0 * spec.I.j() - 1.0) *
                       (2.0 * spec.J.j() - 1.0);
  Matrix h = spec.a * idot +
             (spec.q / denom) * (3.0 * idot * idot + 1.5 * idot -
                                 ii * jj * Matrix::Identity(ne * di, ne * di));
  // Zero the hyperfine on the b rows/columns (b has no electronic J structure).
  for (int e = 3; e < ne; ++e)
    for (int n = 0; n < di; ++n) {
      h.row(e * di + n).setZero();
      h.col(e * di + n).setZero();
    }

  // Autler-Townes coupling: |a,-1> <-> |b->, -|a,+1> <-> |b+>.
  Matrix ls = Matrix::Zero(ne, ne);
  const double g = autler_townes_rabi / (2.0 * std::sqrt(2.0));
  ls(2, 4) = ls(4, 2) = g;   // a,-1 (row index 2) with b-
  ls(0, 3) = ls(3, 0) = -g;  // a,+1 (row index 0) with b+
  h += kron(ls, id_i);

  if (lightshift) {
    // Residual quartic tensor shift applied on the a, M_J = 0 levels.
    for (int n = 0; n < di; ++n) {
      const double mi = spec.I.j() - n;
      h(1 * di + n, 1 * di + n) +=
          lightshift->c0 + lightshift->c2 * mi * mi + lightshift->c4 * std::pow(mi, 4);
    }
  }
  if (spec.nuclear_zeeman != 0.0)
    h += spec.nuclear_zeeman * kron(Matrix::Identity(ne, ne), iops[2]);
  return h;
}

// ---------------------------------------------------------------------------
// Nondegenerate perturbation theory
// ---------------------------------------------------------------------------

struct PerturbationShifts {
  double e1 = 0.0;  // <n|V|n>
  double e2 = 0.0;  // sum_{m != n} |<m|V|n>|^2 / (E_n - E_m)
};

inline PerturbationShifts perturbation_shifts(const Matrix& h0, const Matrix& v, int index) {
  if (!is_hermitian(h0, 1e-9) || !is_hermitian(v, 1e-9))
    throw std::invalid_argument("perturbation_shifts: inputs must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h0);
  const Eigen::Index n = h0.rows();
  if (index < 0 || index >= n) throw std::invalid_argument("perturbation_shifts: bad index");
  const double en = es.eigenvalues()[index];
  for (Eigen::Index m = 0; m < n; ++m)
    if (m != index && std::abs(es.eigenvalues()[m] - en) < 1e-6)
      throw std::runtime_error("perturbation_shifts: degenerate target level");
  const Vector psi = es.eigenvectors().col(index);
  PerturbationShifts out;
  out.e1 = std::real(Complex(psi.adjoint() * v * psi));
  for (Eigen::Index m = 0; m < n; ++m) {
    if (m == index) continue;
    const Complex vmn = Complex(es.eigenvectors().col(m).adjoint() * v * psi);
    out.e2 += std::norm(vmn) / (en - es.eigenvalues()[m]);
  }
  return out;
}

// Degeneracy-tolerant variant: caller supplies the zeroth-order eigenstate.
// Valid when the perturbation does not couple the state to its degenerate
// partners (checked); the second-order sum runs over levels outside the
// degenerate shell.
inline PerturbationShifts perturbation_shifts(const Matrix& h0, const Matrix& v,
                                              const Vector& psi0, double gap_tol = 1e-6) {
  if (!is_hermitian(h0, 1e-9) || !is_hermitian(v, 1e-9))
    throw std::invalid_argument("perturbation_shifts: inputs must be Hermitian");
  if (std::abs(psi0.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("perturbation_shifts: state must be normalized");
  const double e0 = std::real(Complex(psi0.adjoint() * h0 * psi0));
  if ((h0 * psi0 - e0 * psi0).norm() > 1e-6)
    throw std::invalid_argument("perturbation_shifts: state is not an H0 eigenstate");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h0);
  PerturbationShifts out;
  out.e1 = std::real(Complex(psi0.adjoint() * v * psi0));
  const Vector vpsi = v * psi0;
  double shell_coupling = 0.0;
  for (Eigen::Index m = 0; m < h0.rows(); ++m) {
    const Complex vmn = Complex(es.eigenvectors().col(m).adjoint() * vpsi);
    const Complex olap = Complex(es.eigenvectors().col(m).adjoint() * psi0);
    if (std::abs(es.eigenvalues()[m] - e0) < gap_tol) {
      // Component of V psi0 inside the degenerate shell beyond e1 psi0.
      shell_coupling += std::norm(vmn - out.e1 * olap);
      continue;
    }
    out.e2 += std::norm(vmn) / (e0 - es.eigenvalues()[m]);
  }
  if (std::sqrt(shell_coupling) > 1e-6 * std::max(1.0, vpsi.norm()))
    throw std::runtime_error("perturbation_shifts: perturbation mixes degenerate shell");
  return out;
}

}  // namespace sqc
