#pragma once

// Dense polynomial helpers. Coefficients are stored in ascending powers:
// p[0] + p[1] x + ... + p[n] x^n.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fracshape/error.hpp"

namespace fracshape {

using cplx = std::complex<double>;
using RPoly = std::vector<double>;
using CPoly = std::vector<cplx>;

namespace poly {

template <class T>
double magnitude(const T& v) {
  return std::abs(v);
}

/// Drops trailing (highest-power) coefficients that are exactly zero, keeping at least one entry.
template <class T>
std::vector<T> trim(std::vector<T> p) {
  while (p.size() > 1 && p.back() == T{}) p.pop_back();
  if (p.empty()) p.push_back(T{});
  return p;
}

template <class T>
int degree(const std::vector<T>& p) {
  auto t = trim(p);
  return static_cast<int>(t.size()) - 1;
}

template <class T>
std::vector<T> add(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> out(std::max(a.size(), b.size()), T{});
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

template <class T, class S>
std::vector<T> scale(std::vector<T> p, S factor) {
  for (auto& c : p) c *= factor;
  return p;
}

template <class T>
std::vector<T> mul(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<T> out(a.size() + b.size() - 1, T{});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

template <class T>
std::vector<T> pow(const std::vector<T>& p, int n) {
  std::vector<T> out{T(1)};
  for (int i = 0; i < n; ++i) out = mul(out, p);
  return out;
}

/// x^n as a coefficient vector.
template <class T>
std::vector<T> monomial(int n, T coeff = T(1)) {
  std::vector<T> out(static_cast<std::size_t>(n) + 1, T{});
  out.back() = coeff;
  return out;
}

/// Horner evaluation; the argument may be complex for real coefficients.
template <class T, class X>
auto eval(const std::vector<T>& p, X x) {
  using R = decltype(T{} * x);
  R acc{};
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
  return acc;
}

template <class T>
std::vector<T> derivative(const std::vector<T>& p) {
  if (p.size() <= 1) return {T{}};
  std::vector<T> out(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) out[i - 1] = p[i] * static_cast<double>(i);
  return out;
}

/// Substitutes x -> x^m, i.e. q(x) = p(x^m).
template <class T>
std::vector<T> stretch(const std::vector<T>& p, int m) {
  if (m == 1) return p;
  std::vector<T> out((p.size() - 1) * static_cast<std::size_t>(m) + 1, T{});
  for (std::size_t i = 0; i < p.size(); ++i) out[i * static_cast<std::size_t>(m)] = p[i];
  return out;
}

/// gain * prod (x - r_i)
inline CPoly from_roots(std::span<const cplx> roots, cplx gain = 1.0) {
  CPoly out{gain};
  for (const auto& r : roots) out = mul(out, CPoly{-r, 1.0});
  return out;
}

inline CPoly to_complex(const RPoly& p) { return CPoly(p.begin(), p.end()); }

/// Sum |c_i| |x|^i, the natural scale for the backward error of p(x).
template <class T>
double abs_scale(const std::vector<T>& p, double x_mag) {
  double acc = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x_mag + magnitude(*it);
  return acc;
}

template <class T>
double max_abs(const std::vector<T>& p) {
  double m = 0.0;
  for (const auto& c : p) m = std::max(m, magnitude(c));
  return m;
}

/// Rounds a complex-coefficient polynomial to real after checking that the imaginary residue is
/// below `rel_tol` relative to the largest coefficient.
inline RPoly to_real(const CPoly& p, double rel_tol, double* residue = nullptr) {
  const double scale = std::max(max_abs(p), 1e-300);
  double worst = 0.0;
  RPoly out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    worst = std::max(worst, std::abs(p[i].imag()) / scale);
    out[i] = p[i].real();
  }
  if (residue) *residue = worst;
  if (worst > rel_tol)
    throw Error(Errc::conditioning, "polynomial has imaginary residue " + std::to_string(worst) +
                                        " above tolerance; reduce the Oustaloup order or narrow the band");
  return out;
}

namespace detail {

// Diagonal similarity scaling by powers of two (Parlett-Reinsch); leaves eigenvalues unchanged.
// Returns the scaling d with m_balanced = diag(d)^-1 m diag(d).
template <class Mat>
Eigen::VectorXd balance(Mat& m) {
  const Eigen::Index n = m.rows();
  constexpr double radix = 2.0;
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  bool converged = false;
  while (!converged) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(m(j, i));
        r += std::abs(m(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        m.row(i) /= f;
        m.col(i) *= f;
        d(i) *= f;
      }
    }
  }
  return d;
}

}  // namespace detail

/// All roots with multiplicity: balanced companion-matrix eigenvalues followed by one Newton
/// polish step per root (kept only when it lowers the residual).
template <class T>
CPoly roots(const std::vector<T>& coeffs) {
  auto p = trim(coeffs);
  const int n = static_cast<int>(p.size()) - 1;
  if (n < 1) throw Error(Errc::no_roots, "polynomial of degree 0 has no roots");

  // exact zero roots from vanishing low-order coefficients
  std::size_t zeros = 0;
  while (zeros < p.size() - 1 && p[zeros] == T{}) ++zeros;
  CPoly out(zeros, cplx{0.0, 0.0});
  std::vector<cplx> q(p.begin() + static_cast<std::ptrdiff_t>(zeros), p.end());
  const int m = static_cast<int>(q.size()) - 1;
  if (m == 0) return out;

  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(m, m);
  const cplx lead = q.back();
  for (int i = 1; i < m; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < m; ++i) comp(i, m - 1) = -q[static_cast<std::size_t>(i)] / lead;
  detail::balance(comp);

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(comp, false);
  if (solver.info() != Eigen::Success)
    throw Error(Errc::conditioning, "companion eigenvalue iteration did not converge");

  const auto dq = derivative(q);
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    cplx r = solver.eigenvalues()(i);
    const cplx fr = eval(q, r);
    const cplx dfr = eval(dq, r);
    if (std::abs(dfr) > 0.0) {
      const cplx polished = r - fr / dfr;
      if (std::isfinite(polished.real()) && std::isfinite(polished.imag()) &&
          std::abs(eval(q, polished)) < std::abs(fr))
        r = polished;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace poly
}  // namespace fracshape
