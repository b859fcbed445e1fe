// Analytic fault-tolerance bounds for the error-corrected logical CNOT gadget
// of the concatenated spin-cat scheme: phase/syndrome/amplitude error bounds,
// the jump-cascade combinatorics, and break-even threshold scans.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sqc/angular.hpp"

namespace sqc {

// ---------------------------------------------------------------------------
// Noise and gadget parameters
// ---------------------------------------------------------------------------

struct NoiseParams {
  double eps = 0.0;  // per-CNOT dephasing probability
  double p1 = 0.0;   // per-CNOT probability of one amplitude jump
  double p2 = 0.0;   // per-CNOT probability of two amplitude jumps
  std::array<double, 4> ancilla_leak{};  // prob. ancilla prepared in |+>_k, k = 1..4
};

// Two printed conventions for the minimum jump count causing a logical error.
enum class KmaxConvention { lower_half, upper_half };  // (2J-1)/2 vs (2J+1)/2

struct GadgetConfig {
  int n = 3;   // repetition size, odd
  int r1 = 1;  // phase-EC rounds, odd
  int r2 = 0;  // amplitude-EC rounds
  SpinQuantum J{9};
  KmaxConvention kmax_convention = KmaxConvention::lower_half;  // stricter default

  int r() const { return r1 + r2; }
  int k_max() const {
    return kmax_convention == KmaxConvention::lower_half ? (J.two_j - 1) / 2
                                                         : (J.two_j + 1) / 2;
  }
};

namespace detail {

inline void validate(const GadgetConfig& cfg) {
  if (cfg.n < 3 || cfg.n % 2 == 0) throw std::invalid_argument("gadget: n must be odd >= 3");
  if (cfg.r1 < 1 || cfg.r1 % 2 == 0)
    throw std::invalid_argument("gadget: r1 must be odd >= 1");
  if (cfg.r2 < 0) throw std::invalid_argument("gadget: r2 must be >= 0");
}

inline void validate(const NoiseParams& noise) {
  if (noise.eps < 0.0 || noise.eps > 1.0)
    throw std::invalid_argument("noise: eps outside [0, 1]");
  if (noise.p1 < 0.0 || noise.p2 < 0.0 || noise.p1 + noise.p2 > 1.0)
    throw std::invalid_argument("noise: jump probabilities outside the simplex");
  double leak = 0.0;
  for (double p : noise.ancilla_leak) {
    if (p < 0.0) throw std::invalid_argument("noise: negative ancilla leak");
    leak += p;
  }
  if (leak > 1.0) throw std::invalid_argument("noise: ancilla leak sums above 1");
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b *= double(n - k + i) / double(i);
  return b;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Phase-error bounds
// ---------------------------------------------------------------------------

struct PhaseBounds {
  double eps_target = 0.0;
  double eps_control = 0.0;
};

// Majority-vote failure of the repetition blocks: the per-qudit dephasing
// probability after r EC rounds plus the transversal CNOT is 2r*eps + eps on
// the target block and 4r*eps + eps on the control block.
inline PhaseBounds phase_block_bounds(const GadgetConfig& cfg, const NoiseParams& noise) {
  detail::validate(cfg);
  detail::validate(noise);
  const int half = (cfg.n + 1) / 2;
  const double comb = detail::binomial(cfg.n, half);
  PhaseBounds out;
  out.eps_target = comb * std::pow(2.0 * cfg.r() * noise.eps + noise.eps, half);
  out.eps_control = comb * std::pow(4.0 * cfg.r() * noise.eps + noise.eps, half);
  return out;
}

// Majority vote over r1 syndrome rounds, each syndrome bit failing with
// probability at most 6*eps.
inline double syndrome_bound(const GadgetConfig& cfg, const NoiseParams& noise) {
  detail::validate(cfg);
  detail::validate(noise);
  const int half = (cfg.r1 + 1) / 2;
  return 2.0 * (cfg.n - 1) * detail::binomial(cfg.r1, half) *
         std::pow(6.0 * noise.eps, half);
}

// ---------------------------------------------------------------------------
// Amplitude jump cascades
// ---------------------------------------------------------------------------

// Exact probability that s independent CNOTs, each contributing 0/1/2 jumps
// with probabilities (1-p1-p2, p1, p2), accumulate at least k_max - k_start
// jumps in total. Dynamic programming over the (capped) jump count.
inline double jump_cascade_prob(int s, int k_max, int k_start, const NoiseParams& noise) {
  if (s < 0) throw std::invalid_argument("jump_cascade_prob: s must be >= 0");
  detail::validate(noise);
  const int need = k_max - k_start;
  if (need <= 0) return 1.0;
  const double p0 = 1.0 - noise.p1 - noise.p2;
  std::vector<double> dist(std::size_t(need) + 1, 0.0);
  dist[0] = 1.0;  // index = accumulated jumps, saturated at `need`
  for (int trial = 0; trial < s; ++trial) {
    std::vector<double> next(dist.size(), 0.0);
    for (int j = 0; j <= need; ++j) {
      if (dist[j] == 0.0) continue;
      next[std::min(j + 0, need)] += dist[j] * p0;
      next[std::min(j + 1, need)] += dist[j] * noise.p1;
      next[std::min(j + 2, need)] += dist[j] * noise.p2;
    }
    dist.swap(next);
  }
  return dist[std::size_t(need)];
}

// ---------------------------------------------------------------------------
// Amplitude-error bounds
// ---------------------------------------------------------------------------

struct AmplitudeBounds {
  double eps_target = 0.0;
  double eps_control = 0.0;
  double eps_ec = 0.0;
};

inline AmplitudeBounds amplitude_bounds(const GadgetConfig& cfg, const NoiseParams& noise) {
  detail::validate(cfg);
  detail::validate(noise);
  const int kmax = cfg.k_max(), s = 2 * cfg.r();
  const double q_block = jump_cascade_prob(s, kmax, 0, noise);
  const double q_cnot = jump_cascade_prob(1, kmax, 0, noise);
  AmplitudeBounds out;
  out.eps_target = 2.0 * cfg.n * q_block + cfg.n * q_cnot;
  out.eps_control = cfg.n * q_block + cfg.n * q_cnot;
  // Imperfect-ancilla mixture: p_k chance of starting k jumps up the ladder.
  double leak = 0.0;
  for (double p : noise.ancilla_leak) leak += p;
  double eps_amp = (1.0 - leak) * q_block;
  for (int k = 1; k <= 4; ++k)
    eps_amp += noise.ancilla_leak[std::size_t(k - 1)] * jump_cascade_prob(s, kmax, k, noise);
  out.eps_ec = 2.0 * cfg.n * cfg.r2 * eps_amp;
  return out;
}

// ---------------------------------------------------------------------------
// Total logical error and threshold scans
// ---------------------------------------------------------------------------

struct LogicalErrorBreakdown {
  PhaseBounds phase;
  double phase_ec = 0.0;
  AmplitudeBounds amp;
  double total = 0.0;
};

inline LogicalErrorBreakdown logical_error_breakdown(const GadgetConfig& cfg,
                                                     const NoiseParams& noise) {
  LogicalErrorBreakdown out;
  out.phase = phase_block_bounds(cfg, noise);
  out.phase_ec = syndrome_bound(cfg, noise);
  out.amp = amplitude_bounds(cfg, noise);
  out.total = out.phase.eps_target + out.phase.eps_control + out.phase_ec +
              out.amp.eps_target + out.amp.eps_control + out.amp.eps_ec;
  return out;
}

inline double total_logical_error(const GadgetConfig& cfg, const NoiseParams& noise) {
  return logical_error_breakdown(cfg, noise).total;
}

// Physical noise models mapped onto the per-CNOT parameters.
using NoiseMapping = std::function<NoiseParams(double)>;

// Small random rotations: amplitude leakage is suppressed by 1/(2J) relative
// to dephasing; at most one jump per gate at first order.
inline NoiseMapping rotation_noise_mapping(SpinQuantum J, double leak_per_level = 0.0) {
  return [J, leak_per_level](double eps) {
    NoiseParams n;
    n.eps = eps;
    n.p1 = eps / double(J.two_j);
    n.p2 = 0.0;
    n.ancilla_leak.fill(leak_per_level);
    return n;
  };
}

// Optical pumping with simplified jump operators: the rank-1 (alpha) and
// rank-2 (beta) channels feed single jumps with weight (2 alpha^2 +
// 1.5 beta^2) relative to the beta^2 dephasing weight.
inline NoiseMapping optical_noise_mapping(double alpha, double beta,
                                          double leak_per_level = 0.0) {
  if (beta == 0.0) throw std::invalid_argument("optical_noise_mapping: beta must be nonzero");
  return [alpha, beta, leak_per_level](double eps) {
    NoiseParams n;
    n.eps = eps;
    n.p1 = eps * (2.0 * alpha * alpha + 1.5 * beta * beta) / (beta * beta);
    n.p2 = 0.0;
    n.ancilla_leak.fill(leak_per_level);
    return n;
  };
}

enum class ThresholdTarget { identity_line, css_line };

struct ScanRow {
  int n = 0;
  bool found = false;
  double crossing = 0.0;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  std::optional<int> best_n;       // sweet spot: n with the largest crossing
  double best_crossing = 0.0;
};

// Bisection for the break-even point eps_logical(eps) = target(eps); the
// logical error is monotone in eps so the first sign change brackets it.
inline std::optional<double> threshold_crossing(const GadgetConfig& cfg,
                                                const NoiseMapping& mapping,
                                                ThresholdTarget target,
                                                double css_threshold = 0.67e-3,
                                                double eps_hi = 0.2) {
  auto excess = [&](double eps) {
    const double logical = total_logical_error(cfg, mapping(eps));
    return logical - (target == ThresholdTarget::identity_line ? eps : css_threshold);
  };
  double lo = 1e-12, hi = eps_hi;
  if (excess(lo) >= 0.0 || excess(hi) <= 0.0) return std::nullopt;
  while ((hi - lo) > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline ScanResult threshold_scan(GadgetConfig cfg, const NoiseMapping& mapping,
                                 ThresholdTarget target, int n_min = 3, int n_max = 41,
                                 double css_threshold = 0.67e-3) {
  ScanResult out;
  for (int n = n_min; n <= n_max; n += 2) {
    cfg.n = n;
    ScanRow row;
    row.n = n;
    if (auto c = threshold_crossing(cfg, mapping, target, css_threshold)) {
      row.found = true;
      row.crossing = *c;
      if (!out.best_n || row.crossing > out.best_crossing) {
        out.best_n = n;
        out.best_crossing = row.crossing;
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace sqc
