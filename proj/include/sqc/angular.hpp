// Exact angular-momentum algebra: spin operators, Clebsch-Gordan and 6j
// coefficients evaluated with exact big-rational arithmetic, Wigner rotations,
// irreducible spherical tensors and the symmetric/antisymmetric error basis.
//
// Half-integer quantum numbers are carried as doubled integers (two_j = 2J)
// so that no floating-point equality on quantum numbers ever occurs.
// Matrix basis convention: row/column index a corresponds to m = J - a,
// i.e. Jz = diag(J, J-1, ..., -J). Clebsch-Gordan coefficients follow the
// Condon-Shortley phase convention.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sqc/linalg.hpp"

namespace sqc {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

struct SpinQuantum {
  int two_j = 0;  // 2J >= 0

  constexpr int dim() const { return two_j + 1; }
  constexpr double j() const { return 0.5 * two_j; }
  constexpr bool half_integer() const { return two_j % 2 == 1; }
};

inline SpinQuantum spin_from_two_j(int two_j) {
  if (two_j < 0) throw std::invalid_argument("spin_from_two_j: 2J must be >= 0");
  return SpinQuantum{two_j};
}

// Row index of |J, m> given doubled m.
inline int m_index(SpinQuantum J, int two_m) {
  if (std::abs(two_m) > J.two_j || (J.two_j - two_m) % 2 != 0)
    throw std::invalid_argument("m_index: invalid magnetic quantum number");
  return (J.two_j - two_m) / 2;
}

namespace detail {

inline BigInt factorial(int n) {
  if (n < 0) throw std::invalid_argument("factorial of negative integer");
  BigInt f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Triangle coefficient Delta(abc) as an exact rational, arguments doubled.
inline BigRational triangle_coeff(int ta, int tb, int tc) {
  const int p = (ta + tb - tc) / 2, q = (ta - tb + tc) / 2, r = (-ta + tb + tc) / 2;
  if (p < 0 || q < 0 || r < 0 || (ta + tb + tc) % 2 != 0)
    throw std::invalid_argument("triangle_coeff: triangle rule violated");
  return BigRational(factorial(p) * factorial(q) * factorial(r),
                     factorial((ta + tb + tc) / 2 + 1));
}

inline bool valid_jm(int tj, int tm) {
  return tj >= 0 && std::abs(tm) <= tj && (tj - tm) % 2 == 0;
}

inline double to_double(const BigRational& r) {
  return r.convert_to<double>();
}

}  // namespace detail

// <J M | j1 m1; j2 m2> via the Racah closed-form sum, exact until the final
// square root. Returns 0 when M != m1 + m2; throws on invalid quantum numbers.
inline double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2,
                             int two_J, int two_M) {
  using detail::factorial;
  if (!detail::valid_jm(two_j1, two_m1) || !detail::valid_jm(two_j2, two_m2) ||
      !detail::valid_jm(two_J, two_M))
    throw std::invalid_argument("clebsch_gordan: invalid quantum numbers");
  if (two_J < std::abs(two_j1 - two_j2) || two_J > two_j1 + two_j2 ||
      (two_j1 + two_j2 + two_J) % 2 != 0)
    throw std::invalid_argument("clebsch_gordan: triangle rule violated");
  if (two_M != two_m1 + two_m2) return 0.0;

  // All factorial arguments below are genuine integers for valid inputs.
  const int j1j2J = (two_j1 + two_j2 - two_J) / 2;
  const int j1m1 = (two_j1 - two_m1) / 2, j1p1 = (two_j1 + two_m1) / 2;
  const int j2m2 = (two_j2 - two_m2) / 2, j2p2 = (two_j2 + two_m2) / 2;
  const int JM = (two_J - two_M) / 2, JP = (two_J + two_M) / 2;
  const int Jj2m1 = (two_J - two_j2 + two_m1) / 2;  // J - j2 + m1
  const int Jj1m2 = (two_J - two_j1 - two_m2) / 2;  // J - j1 - m2

  BigRational sum = 0;
  const int k_min = std::max(0, std::max(-Jj2m1, -Jj1m2));
  const int k_max = std::min(j1j2J, std::min(j1m1, j2p2));
  for (int k = k_min; k <= k_max; ++k) {
    BigInt denom = factorial(k) * factorial(j1j2J - k) * factorial(j1m1 - k) *
                   factorial(j2p2 - k) * factorial(Jj2m1 + k) * factorial(Jj1m2 + k);
    BigRational term(1, denom);
    if (k % 2 != 0) term = -term;
    sum += term;
  }
  if (sum == 0) return 0.0;

  BigRational pref = detail::triangle_coeff(two_j1, two_j2, two_J);
  pref *= two_J + 1;
  pref *= factorial(JM);
  pref *= factorial(JP);
  pref *= factorial(j1m1);
  pref *= factorial(j1p1);
  pref *= factorial(j2m2);
  pref *= factorial(j2p2);

  const BigRational mag2 = pref * sum * sum;  // exact CG^2
  const double value = std::sqrt(detail::to_double(mag2));
  return sum > 0 ? value : -value;
}

// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}, doubled arguments, Racah formula.
inline double wigner_6j(int ta, int tb, int tc, int td, int te, int tf) {
  using detail::factorial;
  auto triangle_ok = [](int x, int y, int z) {
    return z >= std::abs(x - y) && z <= x + y && (x + y + z) % 2 == 0;
  };
  if (!triangle_ok(ta, tb, tc) || !triangle_ok(ta, te, tf) ||
      !triangle_ok(td, tb, tf) || !triangle_ok(td, te, tc))
    return 0.0;

  const int s1 = (ta + tb + tc) / 2, s2 = (ta + te + tf) / 2;
  const int s3 = (td + tb + tf) / 2, s4 = (td + te + tc) / 2;
  const int b1 = (ta + tb + td + te) / 2, b2 = (tb + tc + te + tf) / 2,
            b3 = (ta + tc + td + tf) / 2;

  BigRational sum = 0;
  const int t_min = std::max(std::max(s1, s2), std::max(s3, s4));
  const int t_max = std::min(b1, std::min(b2, b3));
  for (int t = t_min; t <= t_max; ++t) {
    BigInt denom = factorial(t - s1) * factorial(t - s2) * factorial(t - s3) *
                   factorial(t - s4) * factorial(b1 - t) * factorial(b2 - t) *
                   factorial(b3 - t);
    BigRational term(factorial(t + 1), denom);
    if (t % 2 != 0) term = -term;
    sum += term;
  }
  if (sum == 0) return 0.0;

  const BigRational pref = detail::triangle_coeff(ta, tb, tc) *
                           detail::triangle_coeff(ta, te, tf) *
                           detail::triangle_coeff(td, tb, tf) *
                           detail::triangle_coeff(td, te, tc);
  const double value = std::sqrt(detail::to_double(pref * sum * sum));
  return sum > 0 ? value : -value;
}

// Jz, ladder operators, and the Cartesian triple.
inline Matrix jz_op(SpinQuantum J) {
  Matrix m = Matrix::Zero(J.dim(), J.dim());
  for (int a = 0; a < J.dim(); ++a) m(a, a) = 0.5 * (J.two_j - 2 * a);
  return m;
}

inline Matrix jplus_op(SpinQuantum J) {
  Matrix m = Matrix::Zero(J.dim(), J.dim());
  const double j = J.j();
  for (int a = 1; a < J.dim(); ++a) {
    const double mm = j - a;  // J+ |J,m> = sqrt(J(J+1)-m(m+1)) |J,m+1>
    m(a - 1, a) = std::sqrt(j * (j + 1) - mm * (mm + 1));
  }
  return m;
}

inline Matrix jminus_op(SpinQuantum J) { return jplus_op(J).adjoint(); }

inline std::array<Matrix, 3> angular_momentum_ops(SpinQuantum J) {
  const Matrix jp = jplus_op(J), jm = jminus_op(J);
  return {0.5 * (jp + jm), -0.5 * I * (jp - jm), jz_op(J)};
}

// exp(-i alpha Jz) exp(-i beta Jy) exp(-i gamma Jz).
inline Matrix wigner_rotation(SpinQuantum J, double alpha, double beta, double gamma) {
  const auto ops = angular_momentum_ops(J);
  const int d = J.dim();
  Vector za(d), zg(d);
  for (int a = 0; a < d; ++a) {
    const double m = 0.5 * (J.two_j - 2 * a);
    za[a] = std::exp(-I * alpha * m);
    zg[a] = std::exp(-I * gamma * m);
  }
  const Matrix ry = expm_hermitian(ops[1], beta).unitary;
  return za.asDiagonal() * ry * zg.asDiagonal();
}

// exp(-i theta (n . J)) for a unit axis n.
inline Matrix su2_generator(SpinQuantum J, const std::array<double, 3>& axis, double theta) {
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (std::abs(norm - 1.0) > 1e-9)
    throw std::invalid_argument("su2_generator: axis must be a unit vector");
  const auto ops = angular_momentum_ops(J);
  const Matrix h = axis[0] * ops[0] + axis[1] * ops[1] + axis[2] * ops[2];
  return expm_hermitian(h, theta).unitary;
}

struct TensorIndex {
  int k = 0;  // rank, 0..2J (integer)
  int q = 0;  // component, -k..k
};

// Normalized irreducible spherical tensor
//   T^{(k)}_q = sqrt((2k+1)/(2J+1)) sum_m <J,m+q | J,m; k,q> |J,m+q><J,m|.
inline Matrix spherical_tensor(SpinQuantum J, TensorIndex idx) {
  if (idx.k < 0 || idx.k > J.two_j || std::abs(idx.q) > idx.k)
    throw std::invalid_argument("spherical_tensor: invalid (k, q) for this spin");
  const int d = J.dim();
  Matrix t = Matrix::Zero(d, d);
  const double pref = std::sqrt(double(2 * idx.k + 1) / d);
  for (int two_m = -J.two_j; two_m <= J.two_j; two_m += 2) {
    const int two_mq = two_m + 2 * idx.q;
    if (std::abs(two_mq) > J.two_j) continue;
    const double cg = clebsch_gordan(J.two_j, two_m, 2 * idx.k, 2 * idx.q, J.two_j, two_mq);
    t(m_index(J, two_mq), m_index(J, two_m)) = pref * cg;
  }
  return t;
}

// Symmetric/antisymmetric error-basis elements
//   S^{(k)}_q = (T^{(k)}_q + (-1)^k T^{(k)}_{-q})/sqrt(2)   (q > 0),
//   S^{(k)}_0 = T^{(k)}_0,
//   A^{(k)}_q = (T^{(k)}_q - (-1)^k T^{(k)}_{-q})/sqrt(2)   (q > 0 only).
inline Matrix sa_error_s(SpinQuantum J, int k, int q) {
  if (q < 0 || q > k || k > J.two_j)
    throw std::invalid_argument("sa_error_s: invalid (k, q)");
  if (q == 0) return spherical_tensor(J, {k, 0});
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return (spherical_tensor(J, {k, q}) + sign * spherical_tensor(J, {k, -q})) / std::sqrt(2.0);
}

inline Matrix sa_error_a(SpinQuantum J, int k, int q) {
  if (q <= 0 || q > k || k > J.two_j)
    throw std::invalid_argument("sa_error_a: A defined only for q > 0");
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return (spherical_tensor(J, {k, q}) - sign * spherical_tensor(J, {k, -q})) / std::sqrt(2.0);
}

// Expansion coefficients c_{kq} = Tr(T^{(k)+}_q  A) over the full tensor basis.
struct TensorCoefficient {
  TensorIndex idx;
  Complex value;
};

inline std::vector<TensorCoefficient> tensor_decompose(SpinQuantum J, const Matrix& a) {
  std::vector<TensorCoefficient> out;
  for (int k = 0; k <= J.two_j; ++k)
    for (int q = -k; q <= k; ++q) {
      const Matrix t = spherical_tensor(J, {k, q});
      out.push_back({{k, q}, (t.adjoint() * a).trace()});
    }
  return out;
}

// Frobenius weight of A on tensor rank k.
inline double rank_weight(SpinQuantum J, const Matrix& a, int k) {
  double w = 0.0;
  for (int q = -k; q <= k; ++q) {
    const Matrix t = spherical_tensor(J, {k, q});
    w += std::norm(Complex((t.adjoint() * a).trace()));
  }
  return w;
}

}  // namespace sqc
