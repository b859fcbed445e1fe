// Numerical optimal control: GRAPE over piecewise-constant waveforms with
// exact spectral gradients, the layered (Lie-group) two-qudit optimizer,
// robust two-point objectives, low-pass waveform shaping, the target-gate
// library, and the parameter/layer counting formulas.
//
// Objective unification: every target is reduced to z = Tr(A U) with
// F = |z|^2 / scale^2, where
//   state pair    A = |psi_0><psi_tar|, scale = 1,
//   unitary       A = U_tar^+,          scale = d,
//   isometry      A = V_init V_tar^+,   scale = k (columns of the isometry).
// The gradient of the ordered product U = U_n ... U_1 follows from prefix and
// suffix products plus the spectral (Daleckii-Krein) derivative of each
// per-step exponential.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sqc/dynamics.hpp"
#include "sqc/linalg.hpp"
#include "sqc/rng.hpp"

namespace sqc {

// ---------------------------------------------------------------------------
// Waveforms
// ---------------------------------------------------------------------------

struct PiecewiseWaveform {
  // One row per time step, one column per control channel.
  Eigen::MatrixXd values;
  double dt = 0.0;
  double slew_cap = 0.0;  // 0 = unconstrained; otherwise max |c_{i+1} - c_i|

  Eigen::Index steps() const { return values.rows(); }
  Eigen::Index controls() const { return values.cols(); }
};

// Clamp each column so consecutive samples never differ by more than the cap.
inline void enforce_slew_cap(PiecewiseWaveform& w) {
  if (w.slew_cap <= 0.0) return;
  for (Eigen::Index k = 0; k < w.controls(); ++k)
    for (Eigen::Index i = 1; i < w.steps(); ++i) {
      const double lo = w.values(i - 1, k) - w.slew_cap;
      const double hi = w.values(i - 1, k) + w.slew_cap;
      w.values(i, k) = std::min(hi, std::max(lo, w.values(i, k)));
    }
}

inline bool slew_cap_satisfied(const PiecewiseWaveform& w, double tol = 1e-12) {
  if (w.slew_cap <= 0.0) return true;
  for (Eigen::Index k = 0; k < w.controls(); ++k)
    for (Eigen::Index i = 1; i < w.steps(); ++i)
      if (std::abs(w.values(i, k) - w.values(i - 1, k)) > w.slew_cap + tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Control problems
// ---------------------------------------------------------------------------

// One physical system driven by the shared waveform. `hamiltonian` builds the
// step generator from that step's control values; `dhamiltonian` is its
// derivative with respect to control channel k (exact, caller-supplied, which
// keeps nonlinear parameterizations such as phase controls differentiable).
struct ControlSystem {
  std::function<Matrix(const RealVector&)> hamiltonian;
  std::function<Matrix(const RealVector&, int)> dhamiltonian;
  Matrix a;            // z = Tr(a U)
  double scale = 1.0;  // F = |z|^2 / scale^2
};

struct ControlProblem {
  std::vector<ControlSystem> systems;  // objective = mean of per-system F
  int n_controls = 1;
  double total_time = 0.0;
};

inline ControlSystem state_target_system(std::function<Matrix(const RealVector&)> h,
                                         std::function<Matrix(const RealVector&, int)> dh,
                                         const Vector& psi0, const Vector& psi_tar) {
  return {std::move(h), std::move(dh), Matrix(psi0 * psi_tar.adjoint()), 1.0};
}

inline ControlSystem unitary_target_system(std::function<Matrix(const RealVector&)> h,
                                           std::function<Matrix(const RealVector&, int)> dh,
                                           const Matrix& u_tar) {
  return {std::move(h), std::move(dh), Matrix(u_tar.adjoint()),
          static_cast<double>(u_tar.rows())};
}

// v_init embeds the k-dimensional input subspace (d x k); v_tar is the d x k
// target isometry. When k = d this reduces to the unitary objective.
inline ControlSystem isometry_target_system(std::function<Matrix(const RealVector&)> h,
                                            std::function<Matrix(const RealVector&, int)> dh,
                                            const Matrix& v_init, const Matrix& v_tar) {
  if (v_init.cols() != v_tar.cols() || v_init.rows() != v_tar.rows())
    throw std::invalid_argument("isometry_target_system: shape mismatch");
  return {std::move(h), std::move(dh), Matrix(v_init * v_tar.adjoint()),
          static_cast<double>(v_tar.cols())};
}

namespace detail {

// Propagator of one system under the waveform; generators must be Hermitian.
inline Matrix system_propagator(const ControlSystem& sys, const PiecewiseWaveform& w) {
  const Matrix h0 = sys.hamiltonian(RealVector(w.values.row(0)));
  Matrix u = Matrix::Identity(h0.rows(), h0.cols());
  for (Eigen::Index j = 0; j < w.steps(); ++j) {
    const Matrix h = sys.hamiltonian(RealVector(w.values.row(j)));
    u = expm_hermitian(h, w.dt).unitary * u;
  }
  return u;
}

}  // namespace detail

inline double objective(const ControlProblem& p, const PiecewiseWaveform& w) {
  double f = 0.0;
  for (const auto& sys : p.systems) {
    const Matrix u = detail::system_propagator(sys, w);
    f += std::norm(Complex((sys.a * u).trace())) / (sys.scale * sys.scale);
  }
  return f / static_cast<double>(p.systems.size());
}

// Exact gradient, flattened with index = step * n_controls + control.
inline RealVector objective_gradient(const ControlProblem& p, const PiecewiseWaveform& w) {
  const Eigen::Index n = w.steps();
  const int nc = p.n_controls;
  RealVector grad = RealVector::Zero(n * nc);
  for (const auto& sys : p.systems) {
    std::vector<HermitianExp> eds(n);
    std::vector<Matrix> prefix(n + 1);  // prefix[j] = U_j ... U_1
    const Matrix h0 = sys.hamiltonian(RealVector(w.values.row(0)));
    prefix[0] = Matrix::Identity(h0.rows(), h0.cols());
    for (Eigen::Index j = 0; j < n; ++j) {
      eds[j] = expm_hermitian(sys.hamiltonian(RealVector(w.values.row(j))), w.dt);
      prefix[j + 1] = eds[j].unitary * prefix[j];
    }
    const Complex z = (sys.a * prefix[n]).trace();
    const double norm = sys.scale * sys.scale * static_cast<double>(p.systems.size());
    Matrix suffix = Matrix::Identity(h0.rows(), h0.cols());  // U_n ... U_{j+2}
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      const Matrix g = prefix[j] * sys.a * suffix;  // dz = Tr(g dU_j)
      const RealVector c = w.values.row(j);
      for (int k = 0; k < nc; ++k) {
        const Matrix d = expm_hermitian_derivative(eds[j], w.dt, sys.dhamiltonian(c, k));
        const Complex dz = (g * d).trace();
        grad[j * nc + k] += 2.0 * std::real(std::conj(z) * dz) / norm;
      }
      suffix = suffix * eds[j].unitary;
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Gradient-ascent driver (backtracking line search), shared by both optimizers
// ---------------------------------------------------------------------------

struct OptimizeConfig {
  int max_iters = 5000;
  double ftol = 1e-10;
  std::uint64_t seed = 0;
  double slew_cap = 0.0;
  bool zero_init = false;       // all-zero initial waveform instead of random
  double init_amplitude = 0.1;  // uniform(-a, a) random initialization
  double target_fidelity = 1.0; // early stop once reached
};

namespace detail {

struct AscentResult {
  RealVector x;
  double value = 0.0;
  std::vector<double> trace;  // best-so-far per iteration, monotone
  int iters = 0;
};

// Maximize f by steepest ascent with a backtracking/expanding step size.
// `project` (optional) restores feasibility after every trial step.
inline AscentResult gradient_ascent(const std::function<double(const RealVector&)>& f,
                                    const std::function<RealVector(const RealVector&)>& grad,
                                    RealVector x0,
                                    const std::function<void(RealVector&)>& project,
                                    const OptimizeConfig& cfg) {
  AscentResult res;
  if (project) project(x0);
  res.x = std::move(x0);
  res.value = f(res.x);
  if (!std::isfinite(res.value)) throw std::runtime_error("gradient_ascent: objective diverged");
  res.trace.push_back(res.value);
  double step = 0.5;
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (res.value >= cfg.target_fidelity - cfg.ftol) break;
    const RealVector g = grad(res.x);
    const double gnorm = g.norm();
    if (gnorm < 1e-14) break;
    bool improved = false;
    while (step > 1e-14) {
      RealVector trial = res.x + step * g;
      if (project) project(trial);
      const double val = f(trial);
      if (!std::isfinite(val)) throw std::runtime_error("gradient_ascent: objective diverged");
      if (val > res.value) {
        const double gain = val - res.value;
        res.x = std::move(trial);
        res.value = val;
        improved = true;
        step = std::min(step * 1.6, 1e6);
        res.trace.push_back(res.value);
        res.iters = it + 1;
        if (gain < cfg.ftol) return res;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return res;
}

}  // namespace detail

struct GrapeResult {
  PiecewiseWaveform waveform;
  double fidelity = 0.0;
  std::vector<double> fidelity_trace;
  int iterations = 0;
};

inline GrapeResult grape_optimize(const ControlProblem& p, int steps, const OptimizeConfig& cfg) {
  if (steps < 1) throw std::invalid_argument("grape_optimize: steps must be >= 1");
  if (p.systems.empty()) throw std::invalid_argument("grape_optimize: no systems");
  const int nc = p.n_controls;
  const double dt = p.total_time / steps;

  PiecewiseWaveform shape;
  shape.dt = dt;
  shape.slew_cap = cfg.slew_cap;
  shape.values.resize(steps, nc);

  RealVector x0 = RealVector::Zero(steps * nc);
  if (!cfg.zero_init) {
    CounterRng rng(cfg.seed, "grape-init");
    for (Eigen::Index i = 0; i < x0.size(); ++i)
      x0[i] = rng.uniform(-cfg.init_amplitude, cfg.init_amplitude);
  }

  auto unpack = [&shape, steps, nc](const RealVector& x) {
    PiecewiseWaveform w = shape;
    for (int j = 0; j < steps; ++j)
      for (int k = 0; k < nc; ++k) w.values(j, k) = x[j * nc + k];
    return w;
  };
  auto f = [&](const RealVector& x) { return objective(p, unpack(x)); };
  auto g = [&](const RealVector& x) { return objective_gradient(p, unpack(x)); };
  std::function<void(RealVector&)> project;
  if (cfg.slew_cap > 0.0) {
    project = [&](RealVector& x) {
      PiecewiseWaveform w = unpack(x);
      enforce_slew_cap(w);
      for (int j = 0; j < steps; ++j)
        for (int k = 0; k < nc; ++k) x[j * nc + k] = w.values(j, k);
    };
  }

  const auto res = detail::gradient_ascent(f, g, std::move(x0), project, cfg);
  GrapeResult out;
  out.waveform = unpack(res.x);
  out.fidelity = res.value;
  out.fidelity_trace = res.trace;
  out.iterations = res.iters;
  return out;
}

// Two-point robust objective: (F[H + delta H_pert] + F[H - delta H_pert]) / 2.
struct RobustSpec {
  Matrix perturbation_generator;
  double delta = 0.0;
};

inline ControlProblem perturbed_problem(const ControlProblem& p, const RobustSpec& spec) {
  if (spec.delta < 0.0) throw std::invalid_argument("perturbed_problem: delta must be >= 0");
  ControlProblem out;
  out.n_controls = p.n_controls;
  out.total_time = p.total_time;
  for (double sign : {+1.0, -1.0}) {
    for (const auto& sys : p.systems) {
      ControlSystem shifted = sys;
      const Matrix pert = sign * spec.delta * spec.perturbation_generator;
      auto base = sys.hamiltonian;
      shifted.hamiltonian = [base, pert](const RealVector& c) { return Matrix(base(c) + pert); };
      out.systems.push_back(std::move(shifted));
    }
  }
  return out;
}

inline double robust_objective(const ControlProblem& p, const RobustSpec& spec,
                               const PiecewiseWaveform& w) {
  return objective(perturbed_problem(p, spec), w);
}

// ---------------------------------------------------------------------------
// Target-gate library
// ---------------------------------------------------------------------------

inline Matrix target_cphase(int d) {
  if (d < 2) throw std::invalid_argument("target_cphase: d must be >= 2");
  Matrix u = Matrix::Zero(d * d, d * d);
  const Complex omega = std::exp(2.0 * pi * I / double(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) u(i * d + j, i * d + j) = std::pow(omega, i * j);
  return u;
}

// Qudit Fourier gate, H_d |j> = (1/sqrt(d)) sum_k omega^{jk} |k>.
inline Matrix target_fourier(int d) {
  if (d < 2) throw std::invalid_argument("target_fourier: d must be >= 2");
  Matrix h(d, d);
  const Complex omega = std::exp(2.0 * pi * I / double(d));
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j) h(k, j) = std::pow(omega, j * k) / std::sqrt(double(d));
  return h;
}

inline Matrix target_csum(int d) {
  if (d < 2) throw std::invalid_argument("target_csum: d must be >= 2");
  Matrix u = Matrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) u(i * d + (i + j) % d, i * d + j) = 1.0;
  return u;
}

// exp(-i theta Jz^2 / 2) with the collective Jz of two spin-(d-1)/2 qudits.
inline Matrix target_molmer_sorensen(double theta, int d) {
  if (d < 2) throw std::invalid_argument("target_molmer_sorensen: d must be >= 2");
  Matrix u = Matrix::Zero(d * d, d * d);
  const double j = 0.5 * (d - 1);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const double mz = (j - a) + (j - b);
      u(a * d + b, a * d + b) = std::exp(-I * theta * mz * mz / 2.0);
    }
  return u;
}

inline Matrix target_haar(std::uint64_t seed, int d) {
  if (d < 2) throw std::invalid_argument("target_haar: d must be >= 2");
  CounterRng rng(seed, "target-haar");
  return rng.haar_unitary(d);
}

inline Matrix target_library(const std::string& name, int d, double theta = 0.0,
                             std::uint64_t seed = 0) {
  if (name == "cphase") return target_cphase(d);
  if (name == "csum") return target_csum(d);
  if (name == "hadamard_d") return target_fourier(d);
  if (name == "molmer_sorensen") return target_molmer_sorensen(theta, d);
  if (name == "haar_random") return target_haar(seed, d);
  throw std::invalid_argument("target_library: unknown target '" + name + "'");
}

// ---------------------------------------------------------------------------
// Counting formulas and SU(d) basis
// ---------------------------------------------------------------------------

// Free parameters of a K-column isometry target in a D-dimensional space.
inline long min_parameters(long K, long D) {
  if (K < 1 || K > D) throw std::invalid_argument("min_parameters: need 1 <= K <= D");
  return 2 * K * D - K * K - 1;
}

// Dimension of the symmetric subspace of two d-level systems.
inline long symmetric_dim(long d) { return d * (d + 1) / 2; }

// Minimum layer count of the layered ansatz for a d-level local dimension.
inline long min_layers(long d) {
  if (d < 2) throw std::invalid_argument("min_layers: d must be >= 2");
  const long num = d * d * (d * d + 1);
  const long den = 2 * (2 * d * d - 1);
  return (num + den - 1) / den;
}

// Generalized Gell-Mann matrices: symmetric + antisymmetric off-diagonal
// pairs followed by the d-1 diagonal generators. Hermitian, traceless,
// Tr(L_a L_b) = 2 delta_ab.
inline std::vector<Matrix> gell_mann_basis(int d) {
  if (d < 2) throw std::invalid_argument("gell_mann_basis: d must be >= 2");
  std::vector<Matrix> out;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      Matrix x = Matrix::Zero(d, d), y = Matrix::Zero(d, d);
      x(j, k) = x(k, j) = 1.0;
      y(j, k) = -I;
      y(k, j) = I;
      out.push_back(std::move(x));
      out.push_back(std::move(y));
    }
  for (int l = 1; l < d; ++l) {
    Matrix z = Matrix::Zero(d, d);
    const double norm = std::sqrt(2.0 / double(l * (l + 1)));
    for (int m = 0; m < l; ++m) z(m, m) = norm;
    z(l, l) = -norm * l;
    out.push_back(std::move(z));
  }
  return out;
}

// Isometry from the symmetric subspace of two d-level systems into d^2:
// columns |ii> followed by (|ij> + |ji>)/sqrt(2) for i < j.
inline Matrix symmetrizer(int d) {
  Matrix v = Matrix::Zero(d * d, symmetric_dim(d));
  Eigen::Index col = 0;
  for (int i = 0; i < d; ++i) v(i * d + i, col++) = 1.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      v(i * d + j, col) = v(j * d + i, col) = 1.0 / std::sqrt(2.0);
      ++col;
    }
  return v;
}

// ---------------------------------------------------------------------------
// Controllability: iterated-commutator closure rank
// ---------------------------------------------------------------------------

struct ControllabilityResult {
  bool is_controllable = false;
  int lie_rank = 0;
};

namespace detail {

inline double hs_inner(const Matrix& a, const Matrix& b) {
  return std::real((a.adjoint() * b).trace());
}

// Append the traceless part of `cand` to the orthonormal set if independent.
inline bool gram_schmidt_add(std::vector<Matrix>& basis, Matrix cand, double tol = 1e-9) {
  const Eigen::Index d = cand.rows();
  cand -= (cand.trace() / double(d)) * Matrix::Identity(d, d);
  const double n0 = std::sqrt(hs_inner(cand, cand));
  if (n0 < tol) return false;
  for (const auto& b : basis) cand -= hs_inner(b, cand) * b;
  // Re-orthogonalize once for numerical safety.
  for (const auto& b : basis) cand -= hs_inner(b, cand) * b;
  const double n1 = std::sqrt(hs_inner(cand, cand));
  if (n1 < tol * std::max(1.0, n0)) return false;
  basis.push_back(cand / n1);
  return true;
}

}  // namespace detail

inline ControllabilityResult controllability_check(const std::vector<Matrix>& generators) {
  if (generators.empty()) return {false, 0};
  const Eigen::Index d = generators.front().rows();
  for (const auto& g : generators)
    if (!is_hermitian(g, 1e-9) || g.rows() != d)
      throw std::invalid_argument("controllability_check: generators must be Hermitian, same dim");
  std::vector<Matrix> basis;
  for (const auto& g : generators) detail::gram_schmidt_add(basis, g);
  const int full = static_cast<int>(d * d - 1);
  // Breadth-first commutator closure: i[A, B] of Hermitian A, B is Hermitian.
  std::size_t frontier_start = 0;
  while (static_cast<int>(basis.size()) < full) {
    const std::size_t frontier_end = basis.size();
    bool grew = false;
    for (std::size_t a = 0; a < frontier_end; ++a)
      for (std::size_t b = std::max(a + 1, frontier_start); b < frontier_end; ++b) {
        const Matrix comm = I * (basis[a] * basis[b] - basis[b] * basis[a]);
        if (detail::gram_schmidt_add(basis, comm)) grew = true;
        if (static_cast<int>(basis.size()) >= full) break;
      }
    if (!grew) break;
    frontier_start = 0;  // new elements can pair with everything next sweep
  }
  const int rank = static_cast<int>(basis.size());
  return {rank == full, rank};
}

// ---------------------------------------------------------------------------
// Layered (Lie-group) two-qudit optimizer
// ---------------------------------------------------------------------------

struct LayeredCircuit {
  std::vector<double> t;          // entangling times, one per layer
  std::vector<RealVector> alpha;  // Gell-Mann coefficients, qudit 1
  std::vector<RealVector> beta;   // Gell-Mann coefficients, qudit 2
  bool sign_alternation = false;  // global mode: alpha = beta, H_ent sign flips
};

enum class LayeredMode { local, global_sign_flip };

struct LayeredResult {
  LayeredCircuit circuit;
  double fidelity = 0.0;
  std::vector<double> fidelity_trace;
};

namespace detail {

// Assemble U = prod_j (A_j (x) B_j) exp(-i s_j t_j H_ent), layer 1 rightmost.
inline Matrix layered_propagator(const LayeredCircuit& c, const std::vector<Matrix>& basis,
                                 const Matrix& h_ent) {
  const Eigen::Index dd = h_ent.rows();
  Matrix u = Matrix::Identity(dd, dd);
  for (std::size_t j = 0; j < c.t.size(); ++j) {
    const Eigen::Index d = basis.front().rows();
    Matrix ha = Matrix::Zero(d, d), hb = Matrix::Zero(d, d);
    for (std::size_t a = 0; a < basis.size(); ++a) {
      ha += c.alpha[j][a] * basis[a];
      hb += c.beta[j][a] * basis[a];
    }
    const double sign = (c.sign_alternation && j % 2 == 1) ? -1.0 : 1.0;
    const Matrix ent = expm_hermitian(Matrix(sign * h_ent), c.t[j]).unitary;
    const Matrix local = kron(expm_hermitian(ha, 1.0).unitary, expm_hermitian(hb, 1.0).unitary);
    u = local * ent * u;
  }
  return u;
}

}  // namespace detail

inline LayeredResult layered_optimize(const Matrix& target, const Matrix& h_ent, int layers,
                                      LayeredMode mode, const OptimizeConfig& cfg) {
  if (layers < 1) throw std::invalid_argument("layered_optimize: layers must be >= 1");
  const Eigen::Index dd = target.rows();
  const int d = static_cast<int>(std::llround(std::sqrt(double(dd))));
  if (Eigen::Index(d) * d != dd || h_ent.rows() != dd)
    throw std::invalid_argument("layered_optimize: target must act on two equal qudits");
  const auto basis = gell_mann_basis(d);
  const int nb = static_cast<int>(basis.size());
  const bool global = mode == LayeredMode::global_sign_flip;
  const int per_layer = global ? 1 + nb : 1 + 2 * nb;

  auto unpack = [&](const RealVector& x) {
    LayeredCircuit c;
    c.sign_alternation = global;
    for (int j = 0; j < layers; ++j) {
      const int base = j * per_layer;
      c.t.push_back(x[base]);
      RealVector a = x.segment(base + 1, nb);
      c.alpha.push_back(a);
      c.beta.push_back(global ? a : RealVector(x.segment(base + 1 + nb, nb)));
    }
    return c;
  };

  const double scale2 = double(dd) * double(dd);
  auto fidelity_of = [&](const LayeredCircuit& c) {
    const Matrix u = detail::layered_propagator(c, basis, h_ent);
    return std::norm(Complex((target.adjoint() * u).trace())) / scale2;
  };
  auto f = [&](const RealVector& x) { return fidelity_of(unpack(x)); };

  // Analytic gradient through the 2*layers factor product.
  auto g = [&](const RealVector& x) {
    const LayeredCircuit c = unpack(x);
    // Factors left-to-right in application order: ent_0, loc_0, ent_1, loc_1, ...
    std::vector<Matrix> factors;
    std::vector<HermitianExp> eda(layers), edb(layers);
    std::vector<double> signs(layers);
    for (int j = 0; j < layers; ++j) {
      Matrix ha = Matrix::Zero(d, d), hb = Matrix::Zero(d, d);
      for (int a = 0; a < nb; ++a) {
        ha += c.alpha[j][a] * basis[a];
        hb += c.beta[j][a] * basis[a];
      }
      signs[j] = (c.sign_alternation && j % 2 == 1) ? -1.0 : 1.0;
      factors.push_back(expm_hermitian(Matrix(signs[j] * h_ent), c.t[j]).unitary);
      eda[j] = expm_hermitian(ha, 1.0);
      edb[j] = expm_hermitian(hb, 1.0);
      factors.push_back(kron(eda[j].unitary, edb[j].unitary));
    }
    const int nf = static_cast<int>(factors.size());
    std::vector<Matrix> prefix(nf + 1);
    prefix[0] = Matrix::Identity(dd, dd);
    for (int i = 0; i < nf; ++i) prefix[i + 1] = factors[i] * prefix[i];
    const Complex z = (target.adjoint() * prefix[nf]).trace();

    RealVector grad = RealVector::Zero(x.size());
    Matrix suffix = Matrix::Identity(dd, dd);
    for (int i = nf - 1; i >= 0; --i) {
      const Matrix gmat = prefix[i] * target.adjoint() * suffix;  // dz = Tr(gmat dFactor_i)
      const int j = i / 2;
      const int base = j * per_layer;
      if (i % 2 == 0) {
        // Entangling factor: dU/dt = -i s H_ent U (H_ent commutes with itself).
        const Complex dz = (gmat * Matrix(-I * signs[j] * h_ent * factors[i])).trace();
        grad[base] += 2.0 * std::real(std::conj(z) * dz) / scale2;
      } else {
        for (int a = 0; a < nb; ++a) {
          const Matrix da = expm_hermitian_derivative(eda[j], 1.0, basis[a]);
          const Complex dza = (gmat * kron(da, edb[j].unitary)).trace();
          const Matrix db = expm_hermitian_derivative(edb[j], 1.0, basis[a]);
          const Complex dzb = (gmat * kron(eda[j].unitary, db)).trace();
          if (global) {
            grad[base + 1 + a] += 2.0 * std::real(std::conj(z) * (dza + dzb)) / scale2;
          } else {
            grad[base + 1 + a] += 2.0 * std::real(std::conj(z) * dza) / scale2;
            grad[base + 1 + nb + a] += 2.0 * std::real(std::conj(z) * dzb) / scale2;
          }
        }
      }
      suffix = suffix * factors[i];
    }
    return grad;
  };

  CounterRng rng(cfg.seed, "layered-init");
  RealVector x0(layers * per_layer);
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    x0[i] = rng.uniform(-cfg.init_amplitude, cfg.init_amplitude);
  // Entangling times start positive so the ansatz actually entangles.
  for (int j = 0; j < layers; ++j) x0[j * per_layer] = std::abs(x0[j * per_layer]) + 0.2;

  const auto res = detail::gradient_ascent(f, g, std::move(x0), nullptr, cfg);
  LayeredResult out;
  out.circuit = unpack(res.x);
  out.fidelity = res.value;
  out.fidelity_trace = res.trace;
  return out;
}

// ---------------------------------------------------------------------------
// Low-pass filter: exact RC response to a piecewise-constant input
// ---------------------------------------------------------------------------

// c(t) = Omega_c * integral_0^t c_ideal(xi) exp(-Omega_c (t - xi)) d xi.
class FilteredWaveform {
 public:
  FilteredWaveform(const PiecewiseWaveform& w, double corner) : w_(w), corner_(corner) {
    if (corner <= 0.0) throw std::invalid_argument("FilteredWaveform: corner must be > 0");
    if (w.controls() != 1)
      throw std::invalid_argument("FilteredWaveform: single-channel waveforms only");
    // Exact segment recursion: y_{k+1} = c_k + (y_k - c_k) e^{-Omega_c dt}.
    segment_start_.resize(w.steps() + 1);
    segment_start_[0] = 0.0;
    const double decay = std::exp(-corner * w.dt);
    for (Eigen::Index k = 0; k < w.steps(); ++k) {
      const double c = w.values(k, 0);
      segment_start_[k + 1] = c + (segment_start_[k] - c) * decay;
    }
  }

  double operator()(double t) const {
    if (t <= 0.0) return segment_start_[0];
    const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(t / w_.dt), w_.steps() - 1);
    const double local = t - k * w_.dt;
    const double c = w_.values(k, 0);
    return c + (segment_start_[k] - c) * std::exp(-corner_ * local);
  }

  // Resample onto n equal steps covering the same total duration.
  PiecewiseWaveform resample(Eigen::Index n) const {
    PiecewiseWaveform out;
    out.dt = w_.dt * w_.steps() / double(n);
    out.values.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i)
      out.values(i, 0) = (*this)((i + 0.5) * out.dt);  // midpoint sample
    return out;
  }

 private:
  PiecewiseWaveform w_;
  double corner_;
  std::vector<double> segment_start_;
};

inline FilteredWaveform lowpass_filter(const PiecewiseWaveform& w, double corner) {
  return FilteredWaveform(w, corner);
}

}  // namespace sqc
