// The spin-cat qubit-in-qudit encoding: kitten states, subspace structure,
// correctable-error machinery, rank-preserving gate matrices, and the
// measurement-free error-correction channels.
//
// Conventions: half-integer J throughout the main constructions (even d);
// integer J raises an unsupported-configuration error because the m = 0 level
// belongs to neither sector. The sector parity z = Pi0 - Pi1 defines ZZ(theta)
// and CZ at the encoded-qubit level.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sqc/angular.hpp"
#include "sqc/linalg.hpp"
#include "sqc/rng.hpp"

namespace sqc {

// ---------------------------------------------------------------------------
// Code states and subspace projectors
// ---------------------------------------------------------------------------

struct CatCode {
  SpinQuantum J{9};  // defaults to the qudecimal spin
};

struct KittenLabel {
  int m = 0;     // kitten index, 0 .. floor((2J-1)/2)
  int sign = 1;  // +1 or -1
};

inline int max_kitten_index(const CatCode& code) { return (code.J.two_j - 1) / 2; }

namespace detail {

inline void require_half_integer(const CatCode& code, const char* who) {
  if (!code.J.half_integer())
    throw std::invalid_argument(std::string(who) + ": integer J is unsupported (the m = 0 "
                                                   "level belongs to neither sector)");
}

}  // namespace detail

// |+->_m = (|-J+m> +- |J-m>)/sqrt(2).
inline Vector code_states(const CatCode& code, const KittenLabel& label) {
  if (label.m < 0 || label.m > max_kitten_index(code) ||
      (label.sign != 1 && label.sign != -1))
    throw std::invalid_argument("code_states: invalid kitten label");
  const int d = code.J.dim();
  Vector v = Vector::Zero(d);
  v[d - 1 - label.m] = 1.0 / std::sqrt(2.0);                   // |-J+m>
  v[label.m] = double(label.sign) / std::sqrt(2.0);            // |J-m>
  return v;
}

// Pi0 projects onto the lower half (amplitude-damped |0> states), Pi1 onto
// the upper half.
struct SectorProjectors {
  Matrix pi0, pi1;
};

inline SectorProjectors subspace_projectors(const CatCode& code) {
  detail::require_half_integer(code, "subspace_projectors");
  const int d = code.J.dim();
  SectorProjectors out;
  out.pi0 = Matrix::Zero(d, d);
  out.pi1 = Matrix::Zero(d, d);
  for (int k = 0; k < d / 2; ++k) {
    out.pi1(k, k) = 1.0;          // m_z = J - k
    out.pi0(d - 1 - k, d - 1 - k) = 1.0;  // m_z = -J + k
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rank-preserving gates
// ---------------------------------------------------------------------------

enum class CatGate { X, Y, Z, CNOT, CZ, Toffoli };

// Sector parity z = Pi0 - Pi1, the encoded-qubit Z at the sector level.
inline Matrix sector_parity(const CatCode& code) {
  const auto pr = subspace_projectors(code);
  return pr.pi0 - pr.pi1;
}

// Phase-normalized per-kitten NOT: |m> <-> |-m> with no relative phases.
// Equals exp(-i pi Jx) up to a single global phase for half-integer J; this
// normalization is what makes the controlled constructions below exact.
inline Matrix sector_exchange(const CatCode& code) {
  detail::require_half_integer(code, "sector_exchange");
  const int d = code.J.dim();
  Matrix x = Matrix::Zero(d, d);
  for (int a = 0; a < d; ++a) x(d - 1 - a, a) = 1.0;
  return x;
}

inline Matrix logical_gate(const CatCode& code, CatGate kind) {
  const auto ops = angular_momentum_ops(code.J);
  switch (kind) {
    case CatGate::X: return expm_hermitian(ops[0], pi).unitary;
    case CatGate::Y: return expm_hermitian(ops[1], pi).unitary;
    case CatGate::Z: return expm_hermitian(ops[2], pi).unitary;
    default: break;
  }
  detail::require_half_integer(code, "logical_gate");
  const int d = code.J.dim();
  const auto pr = subspace_projectors(code);
  const Matrix x = sector_exchange(code);
  const Matrix id = Matrix::Identity(d, d);
  switch (kind) {
    case CatGate::CNOT: return kron(pr.pi0, id) + kron(pr.pi1, x);
    case CatGate::CZ: return kron(pr.pi0, id) + kron(pr.pi1, pr.pi0 - pr.pi1);
    case CatGate::Toffoli:
      // Flip the target when both controls are in the 1-sector.
      return kron(id, kron(id, id)) + kron(pr.pi1, kron(pr.pi1, x - id));
    default: throw std::invalid_argument("logical_gate: unknown kind");
  }
}

// ZZ(theta) = exp(-i theta z (x) z) with the sector parity z; diagonal and
// sector-preserving.
inline Matrix logical_zz(const CatCode& code, double theta) {
  const Matrix z = sector_parity(code);
  return expm_hermitian(kron(z, z), theta).unitary;
}

// Encoded Hadamard at the kitten level (reference matrix only; not reachable
// by SU(2) rotations).
inline Matrix hadamard_reference(const CatCode& code) {
  detail::require_half_integer(code, "hadamard_reference");
  const int d = code.J.dim();
  Matrix h = Matrix::Zero(d, d);
  for (int m = 0; m <= max_kitten_index(code); ++m) {
    Vector zero = Vector::Zero(d), one = Vector::Zero(d);
    zero[d - 1 - m] = 1.0;
    one[m] = 1.0;
    const Vector plus = code_states(code, {m, +1});
    const Vector minus = code_states(code, {m, -1});
    h += plus * zero.adjoint() + minus * one.adjoint();
  }
  return h;
}

// V_s = Pi0(x)Pi0 + Pi1(x)Pi1 + XPi0(x)XPi1 + XPi1(x)XPi0: swaps the encoded
// qubit between any two kitten levels while leaving the levels in place.
inline Matrix vs_swap(const CatCode& code) {
  detail::require_half_integer(code, "vs_swap");
  const auto pr = subspace_projectors(code);
  const Matrix x = sector_exchange(code);
  return kron(pr.pi0, pr.pi0) + kron(pr.pi1, pr.pi1) +
         kron(x * pr.pi0, x * pr.pi1) + kron(x * pr.pi1, x * pr.pi0);
}

// ---------------------------------------------------------------------------
// Correctable errors and the Knill-Laflamme test
// ---------------------------------------------------------------------------

struct ErrorMonomial {
  int l = 0, m = 0, n = 0;  // powers of Jx, Jy, Jz in that order
};

// All monomials with total degree <= floor((2J-1)/2).
inline std::vector<ErrorMonomial> correctable_error_set(const CatCode& code) {
  const int kmax = (code.J.two_j - 1) / 2;
  std::vector<ErrorMonomial> out;
  for (int deg = 0; deg <= kmax; ++deg)
    for (int l = deg; l >= 0; --l)
      for (int m = deg - l; m >= 0; --m) out.push_back({l, m, deg - l - m});
  return out;
}

inline Matrix error_monomial_matrix(const CatCode& code, const ErrorMonomial& mono) {
  const auto ops = angular_momentum_ops(code.J);
  const int d = code.J.dim();
  Matrix e = Matrix::Identity(d, d);
  for (int i = 0; i < mono.l; ++i) e = e * ops[0];
  for (int i = 0; i < mono.m; ++i) e = e * ops[1];
  for (int i = 0; i < mono.n; ++i) e = e * ops[2];
  return e;
}

struct RepetitionEncoding {
  int n_rep = 3;
  CatCode base;
};

// Logical |+_L> = |+>^n, |-_L> = |->^n.
inline std::vector<Vector> logical_states(const RepetitionEncoding& enc) {
  if (enc.n_rep < 3 || enc.n_rep % 2 == 0)
    throw std::invalid_argument("logical_states: n_rep must be odd and >= 3");
  std::vector<Vector> out;
  for (int sign : {+1, -1}) {
    Vector v = code_states(enc.base, {0, sign});
    const Vector single = v;
    for (int i = 1; i < enc.n_rep; ++i) v = kron(v, single).eval();
    out.push_back(std::move(v));
  }
  return out;
}

// Lift a single-spin operator to act on spin `site` of an n-spin register.
inline Matrix on_site(const Matrix& op, int site, int n_sites) {
  if (site < 0 || site >= n_sites) throw std::invalid_argument("on_site: bad site");
  const Eigen::Index d = op.rows();
  Matrix out = site == 0 ? op : Matrix(Matrix::Identity(d, d));
  for (int i = 1; i < n_sites; ++i)
    out = kron(out, i == site ? op : Matrix(Matrix::Identity(d, d))).eval();
  return out;
}

// Apply a single-spin operator to one site of an n-spin state without ever
// forming the lifted d^n x d^n matrix.
inline Vector apply_on_site(const Matrix& op, int site, int n_sites, const Vector& v) {
  const Eigen::Index d = op.rows();
  Eigen::Index dim = 1;
  for (int i = 0; i < n_sites; ++i) dim *= d;
  if (site < 0 || site >= n_sites || v.size() != dim)
    throw std::invalid_argument("apply_on_site: bad site or dimension");
  Eigen::Index right = 1;
  for (int i = site + 1; i < n_sites; ++i) right *= d;
  const Eigen::Index left = dim / (right * d);
  Vector out = Vector::Zero(dim);
  for (Eigen::Index a = 0; a < left; ++a)
    for (Eigen::Index r = 0; r < right; ++r)
      for (Eigen::Index i = 0; i < d; ++i) {
        Complex acc = 0.0;
        for (Eigen::Index j = 0; j < d; ++j)
          acc += op(i, j) * v[(a * d + j) * right + r];
        out[(a * d + i) * right + r] = acc;
      }
  return out;
}

struct KlResult {
  bool passes = false;
  double worst_violation = 0.0;
};

using ErrorApplier = std::function<Vector(const Vector&)>;

// Knill-Laflamme test with errors given as state appliers (cheap for lifted
// single-site operators on many-spin registers). The identity is always
// included alongside the supplied errors.
inline KlResult kl_check(const std::vector<Vector>& codewords,
                         const std::vector<ErrorApplier>& errors, double tol = 1e-9) {
  if (codewords.size() < 2) throw std::invalid_argument("kl_check: need >= 2 codewords");
  const std::size_t ne = errors.size() + 1, nc = codewords.size();
  std::vector<std::vector<Vector>> img(ne, std::vector<Vector>(nc));
  for (std::size_t i = 0; i < nc; ++i) img[0][i] = codewords[i];
  for (std::size_t a = 1; a < ne; ++a)
    for (std::size_t i = 0; i < nc; ++i) {
      img[a][i] = errors[a - 1](codewords[i]);
      if (img[a][i].size() != codewords[i].size())
        throw std::invalid_argument("kl_check: dimension mismatch");
    }
  KlResult out;
  for (std::size_t a = 0; a < ne; ++a)
    for (std::size_t b = 0; b < ne; ++b) {
      const Complex cab = img[a][0].dot(img[b][0]);
      for (std::size_t i = 0; i < nc; ++i)
        for (std::size_t j = 0; j < nc; ++j) {
          const Complex v = img[a][i].dot(img[b][j]);
          const double dev = std::abs(v - (i == j ? cab : Complex(0.0)));
          out.worst_violation = std::max(out.worst_violation, dev);
        }
    }
  out.passes = out.worst_violation <= tol;
  return out;
}

// Knill-Laflamme conditions <psi_i|Ea^dag Eb|psi_j> = C_ab delta_ij over the
// given codewords, errors supplied as explicit matrices.
inline KlResult kl_check(const std::vector<Vector>& codewords,
                         const std::vector<Matrix>& errors, double tol = 1e-9) {
  std::vector<ErrorApplier> appliers;
  for (const auto& e : errors)
    appliers.push_back([&e](const Vector& v) -> Vector {
      if (e.cols() != v.size()) throw std::invalid_argument("kl_check: dimension mismatch");
      return e * v;
    });
  return kl_check(codewords, appliers, tol);
}

// ---------------------------------------------------------------------------
// Phase-error correction (repetition code, majority decoding)
// ---------------------------------------------------------------------------

struct PhaseCode {
  int n_rep = 3;
  std::vector<Matrix> syndromes;  // X_i X_{i+1}, i = 0 .. n-2
};

inline PhaseCode phase_code(const RepetitionEncoding& enc) {
  if (enc.n_rep < 3) throw std::invalid_argument("phase_code: n_rep must be >= 3");
  PhaseCode out;
  out.n_rep = enc.n_rep;
  const Matrix x = sector_exchange(enc.base);
  for (int i = 0; i + 1 < enc.n_rep; ++i)
    out.syndromes.push_back(on_site(x, i, enc.n_rep) * on_site(x, i + 1, enc.n_rep));
  return out;
}

// Majority decoder: map syndrome outcomes (+-1 per X_i X_{i+1}) to the
// minimal set of sites needing a Z correction.
inline std::vector<int> phase_decode(int n_rep, const std::vector<int>& syndrome) {
  if (int(syndrome.size()) != n_rep - 1)
    throw std::invalid_argument("phase_decode: wrong syndrome length");
  const int max_weight = (n_rep - 1) / 2;
  // Search error patterns by increasing weight; a Z on site k flips the
  // syndromes adjacent to k.
  const int patterns = 1 << n_rep;
  std::vector<int> best;
  bool found = false;
  for (int w = 0; w <= max_weight && !found; ++w)
    for (int p = 0; p < patterns && !found; ++p) {
      if (__builtin_popcount(unsigned(p)) != w) continue;
      bool match = true;
      for (int i = 0; i + 1 < n_rep; ++i) {
        const int flip = ((p >> i) & 1) ^ ((p >> (i + 1)) & 1);
        if ((flip ? -1 : 1) != syndrome[i]) {
          match = false;
          break;
        }
      }
      if (match) {
        for (int k = 0; k < n_rep; ++k)
          if ((p >> k) & 1) best.push_back(k);
        found = true;
      }
    }
  if (!found) throw std::runtime_error("phase_decode: syndrome outside correction radius");
  return best;
}

// ---------------------------------------------------------------------------
// Measurement-free amplitude recovery
// ---------------------------------------------------------------------------

// Attach a fresh ancilla in |+>_0, apply V_s, and trace out the (former data)
// subsystem; the encoded qubit reappears in the cat manifold of the output.
inline Matrix amplitude_recovery(const CatCode& code, const Matrix& rho) {
  detail::require_half_integer(code, "amplitude_recovery");
  const int d = code.J.dim();
  if (rho.rows() != d || rho.cols() != d)
    throw std::invalid_argument("amplitude_recovery: dimension mismatch");
  const Vector anc = code_states(code, {0, +1});
  const Matrix vs = vs_swap(code);
  const Matrix joint = vs * kron(rho, Matrix(anc * anc.adjoint())) * vs.adjoint();
  Matrix out = Matrix::Zero(d, d);  // partial trace over the first subsystem
  for (int k = 0; k < d; ++k) out += joint.block(k * d, k * d, d, d);
  return out;
}

// Kraus elements U_k M_k of the reference recovery: measure the kitten index
// (M_k) and coherently shift level k back to the cat manifold (U_k).
inline std::vector<Matrix> amplitude_recovery_kraus(const CatCode& code) {
  detail::require_half_integer(code, "amplitude_recovery_kraus");
  const int d = code.J.dim();
  std::vector<Matrix> out;
  for (int k = 0; k <= max_kitten_index(code); ++k) {
    Matrix mk = Matrix::Zero(d, d), uk = Matrix::Identity(d, d);
    for (int sign : {+1, -1}) {
      const Vector sk = code_states(code, {k, sign});
      mk += sk * sk.adjoint();
      if (k != 0) {
        const Vector s0 = code_states(code, {0, sign});
        uk += s0 * sk.adjoint() + sk * s0.adjoint() - sk * sk.adjoint() -
              s0 * s0.adjoint();
      }
    }
    out.push_back(uk * mk);
  }
  return out;
}

inline Matrix amplitude_recovery_reference(const CatCode& code, const Matrix& rho) {
  const int d = code.J.dim();
  Matrix out = Matrix::Zero(d, d);
  for (const Matrix& k : amplitude_recovery_kraus(code)) out += k * rho * k.adjoint();
  return out;
}

// Syndrome-projective phase recovery on an n-spin register: project onto each
// joint X_iX_{i+1} eigenspace and apply the decoded sector-parity corrections.
inline Matrix phase_recovery(const RepetitionEncoding& enc, const Matrix& rho) {
  const int n = enc.n_rep, d = enc.base.J.dim();
  Eigen::Index dim = 1;
  for (int i = 0; i < n; ++i) dim *= d;
  if (rho.rows() != dim || rho.cols() != dim)
    throw std::invalid_argument("phase_recovery: dimension mismatch");
  const auto pc = phase_code(enc);
  const Matrix zbar = sector_parity(enc.base);
  Matrix out = Matrix::Zero(dim, dim);
  const int n_syn = 1 << (n - 1);
  for (int s = 0; s < n_syn; ++s) {
    std::vector<int> outcome(n - 1);
    Matrix proj = Matrix::Identity(dim, dim);
    for (int i = 0; i < n - 1; ++i) {
      outcome[i] = ((s >> i) & 1) ? -1 : 1;
      proj = proj * 0.5 * (Matrix::Identity(dim, dim) + double(outcome[i]) * pc.syndromes[i]);
    }
    Matrix corr = Matrix::Identity(dim, dim);
    for (int site : phase_decode(n, outcome)) corr = corr * on_site(zbar, site, n);
    const Matrix kraus = corr * proj;
    out += kraus * rho * kraus.adjoint();
  }
  return out;
}

// X-measurement transfer isometry: maps the encoded qubit {|+>, |->} to the
// stretched states {|J,J>, |J,-J>} (noiseless identity only).
inline Matrix mx_isometry(const CatCode& code) {
  const int d = code.J.dim();
  Matrix v = Matrix::Zero(d, 2);
  v(0, 0) = 1.0;      // |J, J> <+|
  v(d - 1, 1) = 1.0;  // |J, -J> <-|
  return v;
}

// ---------------------------------------------------------------------------
// Rotation-error budget
// ---------------------------------------------------------------------------

struct RotationErrorProbs {
  double p_phase = 0.0;  // |theta J|^2 from U_Z at first order
  double p_amp = 0.0;    // |theta|^2 J / 2 from U_X at first order
};

inline RotationErrorProbs rotation_error_ratio(const CatCode& code, double theta) {
  if (std::abs(theta) > 0.3)
    throw std::invalid_argument("rotation_error_ratio: first-order formula needs |theta| <= 0.3");
  const double j = code.J.j();
  return {theta * theta * j * j, theta * theta * j / 2.0};
}

// ---------------------------------------------------------------------------
// Teleported Hadamard gadget
// ---------------------------------------------------------------------------

namespace detail {

inline double overlap_fidelity(const Vector& a, const Vector& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

}  // namespace detail

// Simulates CNOT (ancilla control) + CZ + ancilla X-measurement with the
// conditional Z / X corrections, for random encoded inputs on every kitten
// level; also verifies that no sampled SU(2) rotation reaches the cat state
// from |0>.
inline bool hadamard_gadget_check(const CatCode& code, unsigned seed = 20240817) {
  detail::require_half_integer(code, "hadamard_gadget_check");
  const int d = code.J.dim();
  const Matrix x = sector_exchange(code);
  const Matrix z = logical_gate(code, CatGate::Z);
  const Matrix cz = logical_gate(code, CatGate::CZ);
  // CNOT with the ancilla (second factor) as control, data as target.
  const auto pr = subspace_projectors(code);
  const Matrix id = Matrix::Identity(d, d);
  const Matrix cnot_anc = kron(id, pr.pi0) + kron(x, pr.pi1);
  // X-measurement projectors on the ancilla.
  Matrix plus_proj = Matrix::Zero(d, d), minus_proj = Matrix::Zero(d, d);
  for (int k = 0; k <= max_kitten_index(code); ++k) {
    const Vector sp = code_states(code, {k, +1});
    const Vector sm = code_states(code, {k, -1});
    plus_proj += sp * sp.adjoint();
    minus_proj += sm * sm.adjoint();
  }
  CounterRng rng(seed, "hadamard-gadget");
  for (int k = 0; k <= max_kitten_index(code); ++k) {
    const Complex alpha = rng.complex_normal(), beta = rng.complex_normal();
    Vector zero = Vector::Zero(d), one = Vector::Zero(d);
    zero[d - 1 - k] = 1.0;
    one[k] = 1.0;
    Vector psi = alpha * zero + beta * one;
    psi /= psi.norm();
    const Vector target = (alpha * code_states(code, {k, +1}) +
                           beta * code_states(code, {k, -1})) /
                          std::sqrt(std::norm(alpha) + std::norm(beta));
    const Vector joint = cz * (cnot_anc * kron(psi, code_states(code, {0, +1})));
    // Branch +: apply Z to the data; branch -: apply X.
    const Vector branch_p = kron(z, plus_proj) * joint;
    const Vector branch_m = kron(x, minus_proj) * joint;
    for (const Vector& branch : {branch_p, branch_m}) {
      if (branch.norm() < 1e-12) return false;
      Vector data = Vector::Zero(d);  // contract the ancilla factor away
      Matrix resh = Matrix::Zero(d, d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) resh(a, b) = branch[a * d + b];
      // The post-measurement ancilla state factorizes; take the dominant
      // left-singular vector as the data state.
      Eigen::JacobiSVD<Matrix> svd(resh, Eigen::ComputeThinU);
      if (svd.singularValues()[1] > 1e-9 * svd.singularValues()[0]) return false;
      data = svd.matrixU().col(0);
      if (std::abs(detail::overlap_fidelity(data, target) - 1.0) > 1e-10) return false;
    }
  }
  // SU(2) unreachability of the cat state from |0> (spot check, J >= 3/2).
  if (code.J.two_j >= 3) {
    Vector zero = Vector::Zero(d);
    zero[d - 1] = 1.0;
    const Vector cat = code_states(code, {0, +1});
    double best = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      const double a = rng.uniform(0.0, 2.0 * pi);
      const double b = rng.uniform(0.0, pi);
      const double g = rng.uniform(0.0, 2.0 * pi);
      const Vector rotated = wigner_rotation(code.J, a, b, g) * zero;
      best = std::max(best, std::norm(cat.dot(rotated)));
    }
    if (best > 0.6) return false;
  }
  return true;
}

}  // namespace sqc
