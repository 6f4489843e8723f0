#pragma once

// Commensurate fractional-order transfer functions: representation, principal-branch evaluation
// on the imaginary axis, pseudo-polynomial roots and the Matignon sector test.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fracshape/error.hpp"
#include "fracshape/polynomial.hpp"

namespace fracshape {

inline constexpr double pi = std::numbers::pi;

inline double rad2deg(double r) { return r * 180.0 / pi; }
inline double deg2rad(double d) { return d * pi / 180.0; }

/// Argument in (-pi, pi]; a negative-zero imaginary part on the negative real axis maps to +pi.
inline double principal_arg(cplx z) {
  const double a = std::arg(z);
  return a <= -pi ? pi : a;
}

/// Principal-branch power |base|^e * exp(j e Arg(base)).
inline cplx complex_power(cplx base, double exponent) {
  if (base == cplx{0.0, 0.0}) {
    if (exponent > 0.0) return {0.0, 0.0};
    if (exponent == 0.0) return {1.0, 0.0};
    throw Error(Errc::domain, "zero raised to a negative power");
  }
  if (exponent == 0.0) return {1.0, 0.0};
  return std::polar(std::pow(std::abs(base), exponent), exponent * principal_arg(base));
}

/// Base order alpha of a commensurate system. When produced by an expansion it is exactly 1/nu and
/// `nu` holds the integer; otherwise nu == 0 and only the floating value is known.
struct CommensurateOrder {
  double value = 1.0;
  int nu = 1;

  static CommensurateOrder from_nu(int n) {
    if (n < 1) throw Error(Errc::domain, "commensurate order 1/nu needs nu >= 1");
    return {1.0 / n, n};
  }

  /// Recognises 1/nu for nu <= 1000; any other value in (0,1] is kept as a plain double.
  static CommensurateOrder from_value(double a) {
    if (!(a > 0.0 && a <= 1.0)) throw Error(Errc::domain, "commensurate order must lie in (0,1]");
    const double inv = 1.0 / a;
    const double r = std::round(inv);
    if (r <= 1000.0 && std::abs(inv - r) <= 1e-9 * r) return from_nu(static_cast<int>(r));
    return {a, 0};
  }

  /// Sector half-angle alpha*pi/2 of the Matignon stability boundary.
  double half_sector() const { return nu > 0 ? pi / (2.0 * nu) : value * pi / 2.0; }

  bool operator==(const CommensurateOrder&) const = default;
};

/// Polynomial in w = s^alpha, c_0 + c_1 w + ... + c_n w^n.
class PseudoPolynomial {
 public:
  PseudoPolynomial(CommensurateOrder alpha, CPoly coeffs) : alpha_(alpha), coeffs_(poly::trim(std::move(coeffs))) {
    if (!(alpha_.value > 0.0 && alpha_.value <= 1.0))
      throw Error(Errc::domain, "pseudo polynomial order must lie in (0,1]");
    if (coeffs_.back() == cplx{})
      throw Error(Errc::domain, "pseudo polynomial must have a nonzero leading coefficient");
  }

  const CommensurateOrder& alpha() const { return alpha_; }
  const CPoly& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

  bool is_real() const {
    const double scale = poly::max_abs(coeffs_);
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [&](const cplx& c) { return std::abs(c.imag()) <= 1e-12 * scale; });
  }

  cplx eval_w(cplx w) const { return poly::eval(coeffs_, w); }
  cplx operator()(cplx s) const { return eval_w(complex_power(s, alpha_.value)); }

  bool operator==(const PseudoPolynomial&) const = default;

 private:
  CommensurateOrder alpha_;
  CPoly coeffs_;
};

// ---------------------------------------------------------------------------------------------
// Factors

struct Gain {
  double g = 1.0;
  bool operator==(const Gain&) const = default;
};

/// s^beta
struct Monomial {
  double beta = 1.0;
  bool operator==(const Monomial&) const = default;
};

/// (1 - s^alpha / z^alpha)^k, times the same term at conj(z) when `pair` is set.
struct ExplicitX {
  cplx z{1.0, 0.0};
  CommensurateOrder alpha;
  int k = 1;
  bool pair = false;
  bool operator==(const ExplicitX&) const = default;
};

/// Q(s^alpha)^k
struct PseudoPoly {
  PseudoPolynomial poly;
  int k = 1;
  bool operator==(const PseudoPoly&) const = default;
};

/// b(s)^beta with b(s) = (1 - s/z), or (1 + s/z) when mirrored; the pair form uses the real
/// quadratic b_z(s) b_conj(z)(s) as base before taking the power.
struct ImplicitPower {
  cplx z{1.0, 0.0};
  double beta = 1.0;
  bool pair = false;
  bool mirrored = false;
  bool operator==(const ImplicitPower&) const = default;
};

/// num(s)/den(s), real coefficients in ascending powers.
struct IoRational {
  RPoly num{1.0};
  RPoly den{1.0};
  bool operator==(const IoRational&) const = default;
};

using Factor = std::variant<Gain, Monomial, ExplicitX, PseudoPoly, ImplicitPower, IoRational>;

inline std::string kind_name(const Factor& f) {
  static constexpr const char* names[] = {"gain", "monomial", "explicit_x", "pseudo_poly", "implicit_power",
                                          "io_rational"};
  return names[f.index()];
}

inline std::string describe(const Factor& f) {
  std::ostringstream os;
  os.precision(6);
  auto z_str = [](cplx z) {
    std::ostringstream o;
    o.precision(6);
    o << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "j";
    return o.str();
  };
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Gain>) {
          os << "gain(" << v.g << ")";
        } else if constexpr (std::is_same_v<V, Monomial>) {
          os << "s^" << v.beta;
        } else if constexpr (std::is_same_v<V, ExplicitX>) {
          os << "explicit_x(z=" << z_str(v.z) << ", alpha=" << v.alpha.value << ", k=" << v.k
             << (v.pair ? ", pair" : "") << ")";
        } else if constexpr (std::is_same_v<V, PseudoPoly>) {
          os << "pseudo_poly(deg=" << v.poly.degree() << ", alpha=" << v.poly.alpha().value << ", k=" << v.k << ")";
        } else if constexpr (std::is_same_v<V, ImplicitPower>) {
          os << "implicit_power(z=" << z_str(v.z) << ", beta=" << v.beta << (v.pair ? ", pair" : "")
             << (v.mirrored ? ", mirrored" : "") << ")";
        } else {
          os << "io_rational(deg " << poly::degree(v.num) << "/" << poly::degree(v.den) << ")";
        }
      },
      f);
  return os.str();
}

/// Structural checks on the variant parameters.
inline void validate(const Factor& f) {
  auto fail = [&](Errc c, const std::string& msg) { throw Error(c, describe(f) + ": " + msg); };
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, ExplicitX>) {
          if (v.k != 1 && v.k != -1) fail(Errc::domain, "k must be +1 or -1");
          if (!(v.alpha.value > 0.0 && v.alpha.value <= 1.0)) fail(Errc::domain, "alpha must lie in (0,1]");
          if (v.z == cplx{}) fail(Errc::domain, "z must be nonzero");
          if (v.pair && v.z.imag() == 0.0) fail(Errc::degenerate_pair, "pair form needs a complex z");
        } else if constexpr (std::is_same_v<V, PseudoPoly>) {
          if (v.k != 1 && v.k != -1) fail(Errc::domain, "k must be +1 or -1");
        } else if constexpr (std::is_same_v<V, ImplicitPower>) {
          if (v.z == cplx{}) fail(Errc::domain, "z must be nonzero");
          if (v.pair && v.z.imag() == 0.0) fail(Errc::degenerate_pair, "pair form needs a complex z");
        } else if constexpr (std::is_same_v<V, IoRational>) {
          if (poly::trim(v.den) == RPoly{0.0}) fail(Errc::domain, "denominator is identically zero");
          for (double c : v.num)
            if (!std::isfinite(c)) fail(Errc::domain, "non-finite coefficient");
          for (double c : v.den)
            if (!std::isfinite(c)) fail(Errc::domain, "non-finite coefficient");
        }
      },
      f);
}

namespace detail {

inline cplx explicit_term(cplx s, cplx z, double alpha) {
  return 1.0 - complex_power(s, alpha) / complex_power(z, alpha);
}

inline cplx implicit_base(cplx s, cplx z, bool pair, bool mirrored) {
  const double sign = mirrored ? 1.0 : -1.0;
  cplx b = 1.0 + sign * s / z;
  if (pair) b *= 1.0 + sign * s / std::conj(z);
  return b;
}

inline cplx checked_inverse(cplx v, const Factor& f) {
  if (v == cplx{}) throw Error(Errc::singularity, describe(f) + ": division by zero");
  return 1.0 / v;
}

}  // namespace detail

/// Value of a factor at complex frequency s (principal branch everywhere).
inline cplx evaluate(const Factor& f, cplx s) {
  return std::visit(
      [&](const auto& v) -> cplx {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Gain>) {
          return v.g;
        } else if constexpr (std::is_same_v<V, Monomial>) {
          if (s == cplx{} && v.beta < 0.0) throw Error(Errc::singularity, describe(f) + ": pole at s = 0");
          return complex_power(s, v.beta);
        } else if constexpr (std::is_same_v<V, ExplicitX>) {
          cplx x = detail::explicit_term(s, v.z, v.alpha.value);
          if (v.pair) x *= detail::explicit_term(s, std::conj(v.z), v.alpha.value);
          return v.k == 1 ? x : detail::checked_inverse(x, f);
        } else if constexpr (std::is_same_v<V, PseudoPoly>) {
          const cplx q = v.poly(s);
          return v.k == 1 ? q : detail::checked_inverse(q, f);
        } else if constexpr (std::is_same_v<V, ImplicitPower>) {
          const cplx b = detail::implicit_base(s, v.z, v.pair, v.mirrored);
          if (b == cplx{} && v.beta < 0.0) throw Error(Errc::singularity, describe(f) + ": pole on the base");
          return complex_power(b, v.beta);
        } else {
          const cplx d = poly::eval(v.den, s);
          if (std::abs(d) <= 1e-300) throw Error(Errc::singularity, describe(f) + ": denominator vanishes");
          return poly::eval(v.num, s) / d;
        }
      },
      f);
}

/// True when the factor's response is conjugate symmetric, i.e. the factor is "real".
inline bool is_real_factor(const Factor& f) {
  return std::visit(
      [](const auto& v) -> bool {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, ExplicitX> || std::is_same_v<V, ImplicitPower>)
          return v.pair || v.z.imag() == 0.0;
        else if constexpr (std::is_same_v<V, PseudoPoly>)
          return v.poly.is_real();
        else
          return true;
      },
      f);
}

/// Product of factors; `negated` multiplies the whole product by -1 (analysis sign convention).
struct FactoredTf {
  std::vector<Factor> factors;
  bool negated = false;

  cplx operator()(cplx s) const {
    cplx acc = negated ? -1.0 : 1.0;
    for (const auto& f : factors) acc *= evaluate(f, s);
    return acc;
  }

  FactoredTf& operator*=(const FactoredTf& rhs) {
    factors.insert(factors.end(), rhs.factors.begin(), rhs.factors.end());
    negated = negated != rhs.negated;
    return *this;
  }
  FactoredTf& operator*=(const Factor& f) {
    factors.push_back(f);
    return *this;
  }
  friend FactoredTf operator*(FactoredTf lhs, const FactoredTf& rhs) { return lhs *= rhs; }
  friend FactoredTf operator*(FactoredTf lhs, const Factor& f) { return lhs *= f; }

  bool operator==(const FactoredTf&) const = default;
};

// ---------------------------------------------------------------------------------------------
// Frequency response

struct FrequencyResponse {
  std::vector<double> omega;
  std::vector<cplx> values;
  std::vector<double> phase_deg;  ///< unwrapped, continuous from the lowest frequency

  std::size_t size() const { return omega.size(); }
  double magnitude_db(std::size_t i) const { return 20.0 * std::log10(std::abs(values[i])); }
};

/// `points` log-spaced frequencies from wmin to wmax inclusive.
inline std::vector<double> log_grid(double wmin, double wmax, std::size_t points) {
  if (!(wmin > 0.0 && wmax > wmin) || points < 2) throw Error(Errc::domain, "log grid needs 0 < wmin < wmax, >= 2 points");
  std::vector<double> g(points);
  const double a = std::log10(wmin), b = std::log10(wmax);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  g.front() = wmin;
  g.back() = wmax;
  return g;
}

inline std::vector<double> log_grid_per_decade(double wmin, double wmax, double per_decade) {
  const auto n = static_cast<std::size_t>(std::ceil(std::log10(wmax / wmin) * per_decade)) + 1;
  return log_grid(wmin, wmax, std::max<std::size_t>(n, 2));
}

/// Shifts `next` (deg) by multiples of 360 to be within 180 of `prev`.
inline double unwrap_step(double prev, double next) {
  double d = std::remainder(next - prev, 360.0);
  return prev + d;
}

inline std::vector<double> unwrap_deg(std::span<const double> raw) {
  std::vector<double> out(raw.begin(), raw.end());
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = unwrap_step(out[i - 1], raw[i]);
  return out;
}

template <class Tf>
FrequencyResponse eval_freq(const Tf& tf, std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw Error(Errc::domain, "frequency grid must be strictly positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw Error(Errc::domain, "frequency grid must be strictly increasing");
  }
  FrequencyResponse r;
  r.omega.assign(grid.begin(), grid.end());
  r.values.resize(grid.size());
  std::vector<double> raw(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    cplx v;
    try {
      v = tf(cplx{0.0, grid[i]});
    } catch (const Error& e) {
      if (e.code() != Errc::singularity && e.code() != Errc::domain) throw;
      throw Error(Errc::singularity, std::string(e.what()) + " at omega = " + std::to_string(grid[i]));
    }
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(Errc::singularity, "non-finite response at omega = " + std::to_string(grid[i]));
    r.values[i] = v;
    raw[i] = rad2deg(principal_arg(v));
  }
  r.phase_deg = unwrap_deg(raw);
  return r;
}

// ---------------------------------------------------------------------------------------------
// Roots and stability

/// Roots of the pseudo polynomial in the w = s^alpha plane, with multiplicity.
inline CPoly pseudo_roots(const PseudoPolynomial& p) {
  if (p.degree() < 1) throw Error(Errc::no_roots, "pseudo polynomial of degree 0 has no roots");
  auto r = poly::roots(p.coeffs());
  for (const auto& w : r) {
    const double resid = std::abs(p.eval_w(w));
    const double scale = std::max(poly::max_abs(p.coeffs()), poly::abs_scale(p.coeffs(), std::abs(w)));
    if (resid > 1e-8 * scale)
      throw Error(Errc::conditioning, "root residual " + std::to_string(resid) + " exceeds tolerance");
  }
  return r;
}

struct StabilityReport {
  bool stable = true;
  bool indeterminate = false;   ///< some root lies within 1e-10 rad of the sector boundary
  double min_margin = std::numeric_limits<double>::infinity();  ///< min |arg w| - alpha pi/2, radians
  CommensurateOrder alpha;
  CPoly roots;
  std::vector<double> margins;
};

inline constexpr double sector_tolerance = 1e-10;

/// Sector verdict for a given root set.
inline StabilityReport sector_test(CPoly roots, CommensurateOrder alpha) {
  StabilityReport rep;
  rep.alpha = alpha;
  const double bound = alpha.half_sector();
  for (const auto& w : roots) {
    const double m = std::abs(principal_arg(w)) - bound;
    rep.margins.push_back(m);
    rep.min_margin = std::min(rep.min_margin, m);
    if (!(m > 0.0)) rep.stable = false;
    if (std::abs(m) <= sector_tolerance) rep.indeterminate = true;
  }
  rep.roots = std::move(roots);
  return rep;
}

/// Matignon: stable iff every root w of the denominator satisfies |arg w| > alpha pi/2.
inline StabilityReport matignon_stable(const PseudoPolynomial& den) {
  if (den.degree() == 0) return sector_test({}, den.alpha());
  return sector_test(pseudo_roots(den), den.alpha());
}

// ---------------------------------------------------------------------------------------------
// Pseudo-rational form in w = s^(1/nu)

/// num(w)/den(w) with w = s^(1/nu).
struct PseudoRational {
  int nu = 1;
  CPoly num{1.0};
  CPoly den{1.0};

  cplx operator()(cplx s) const {
    const cplx w = complex_power(s, 1.0 / nu);
    return poly::eval(num, w) / poly::eval(den, w);
  }
  PseudoRational& operator*=(const PseudoRational& o) {
    num = poly::mul(num, o.num);
    den = poly::mul(den, o.den);
    return *this;
  }
};

namespace detail {

/// Smallest n <= max_n with value * n integral, or 0.
inline int rational_denominator(double value, int max_n = 1000) {
  for (int n = 1; n <= max_n; ++n) {
    const double x = value * n;
    if (std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::abs(x))) return n;
  }
  return 0;
}

inline int order_nu(const CommensurateOrder& a) { return a.nu > 0 ? a.nu : rational_denominator(a.value); }

/// Integer m with value * nu == m, or throws.
inline int scaled_power(double value, int nu, const Factor& f) {
  const double x = value * nu;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x)))
    throw Error(Errc::not_commensurate, describe(f) + " is not commensurate with base order 1/" + std::to_string(nu));
  return static_cast<int>(r);
}

}  // namespace detail

/// Smallest nu such that every factor is a rational function of s^(1/nu).
inline int commensurate_nu(const FactoredTf& tf) {
  int nu = 1;
  for (const auto& f : tf.factors) {
    const int n = std::visit(
        [&](const auto& v) -> int {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, Monomial>) {
            return detail::rational_denominator(std::abs(v.beta));
          } else if constexpr (std::is_same_v<V, ExplicitX>) {
            return detail::order_nu(v.alpha);
          } else if constexpr (std::is_same_v<V, PseudoPoly>) {
            return detail::order_nu(v.poly.alpha());
          } else if constexpr (std::is_same_v<V, ImplicitPower>) {
            return std::abs(v.beta - std::round(v.beta)) <= 1e-12 ? 1 : 0;
          } else {
            return 1;
          }
        },
        f);
    if (n == 0)
      throw Error(Errc::not_commensurate, describe(f) + " is not a rational function of any s^(1/nu)");
    nu = std::lcm(nu, n);
  }
  return nu;
}

/// Exact rewrite of a factor as a rational function of w = s^(1/nu).
inline PseudoRational to_pseudo_rational(const Factor& f, int nu) {
  PseudoRational r{nu, {1.0}, {1.0}};
  auto place = [&](CPoly p, int k) {
    if (k >= 0)
      r.num = std::move(p);
    else
      r.den = std::move(p);
  };
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Gain>) {
          r.num = {v.g};
        } else if constexpr (std::is_same_v<V, Monomial>) {
          const int m = detail::scaled_power(v.beta, nu, f);
          place(poly::monomial<cplx>(std::abs(m)), m);
        } else if constexpr (std::is_same_v<V, ExplicitX>) {
          const int step = detail::scaled_power(v.alpha.value, nu, f);
          CPoly x = poly::add(CPoly{1.0}, poly::monomial<cplx>(step, -1.0 / complex_power(v.z, v.alpha.value)));
          if (v.pair)
            x = poly::mul(x, poly::add(CPoly{1.0},
                                       poly::monomial<cplx>(step, -1.0 / complex_power(std::conj(v.z), v.alpha.value))));
          place(std::move(x), v.k);
        } else if constexpr (std::is_same_v<V, PseudoPoly>) {
          const int step = detail::scaled_power(v.poly.alpha().value, nu, f);
          place(poly::stretch(v.poly.coeffs(), step), v.k);
        } else if constexpr (std::is_same_v<V, ImplicitPower>) {
          const int m = detail::scaled_power(v.beta, 1, f);
          const double sign = v.mirrored ? 1.0 : -1.0;
          CPoly b{1.0, sign / v.z};
          if (v.pair) b = poly::mul(b, CPoly{1.0, sign / std::conj(v.z)});
          place(poly::stretch(poly::pow(b, std::abs(m)), nu), m);
        } else {
          r.num = poly::stretch(poly::to_complex(v.num), nu);
          r.den = poly::stretch(poly::to_complex(v.den), nu);
        }
      },
      f);
  return r;
}

inline PseudoRational to_pseudo_rational(const FactoredTf& tf, int nu) {
  PseudoRational r{nu, {tf.negated ? -1.0 : 1.0}, {1.0}};
  for (const auto& f : tf.factors) r *= to_pseudo_rational(f, nu);
  return r;
}

inline PseudoRational to_pseudo_rational(const FactoredTf& tf) { return to_pseudo_rational(tf, commensurate_nu(tf)); }

/// Removes denominator roots that are matched one-to-one by numerator roots (pole/zero
/// cancellations) and applies the sector test to what remains.
inline StabilityReport transfer_stability(const PseudoRational& tf, double cancel_tol = 1e-6) {
  const auto alpha = CommensurateOrder::from_nu(tf.nu);
  const auto den = poly::trim(tf.den);
  if (den.size() <= 1) return sector_test({}, alpha);
  CPoly poles = poly::roots(den);
  const auto num = poly::trim(tf.num);
  if (num.size() > 1) {
    CPoly zeros = poly::roots(num);
    CPoly kept;
    for (const auto& p : poles) {
      auto it = std::find_if(zeros.begin(), zeros.end(), [&](const cplx& z) {
        return std::abs(z - p) <= cancel_tol * std::max(1.0, std::abs(p));
      });
      if (it != zeros.end())
        zeros.erase(it);
      else
        kept.push_back(p);
    }
    poles = std::move(kept);
  } else if (num[0] == cplx{}) {
    poles.clear();
  }
  return sector_test(std::move(poles), alpha);
}

}  // namespace fracshape
