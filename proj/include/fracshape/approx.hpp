#pragma once

// Integer-order rational approximation of fractional factors (Oustaloup recursive filter).

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracshape/error.hpp"
#include "fracshape/focore.hpp"
#include "fracshape/polynomial.hpp"

namespace fracshape {

/// Fit band [w_low, w_high] in rad/s and Oustaloup order N (2N+1 zeros and poles).
struct BandSpec {
  double w_low = 1e-3;
  double w_high = 1e3;
  int order = 5;

  void validate() const {
    if (!(w_low > 0.0 && w_high > w_low)) throw Error(Errc::domain, "band needs 0 < w_low < w_high");
    if (order < 1) throw Error(Errc::domain, "Oustaloup order N must be >= 1");
  }
  /// Meaningful fits need at least one decade.
  bool spans_decade() const { return w_high / w_low >= 10.0; }
};

/// gain * prod(s - zeros) / prod(s - poles)
struct Zpk {
  CPoly zeros;
  CPoly poles;
  cplx gain{1.0, 0.0};
};

/// Real-coefficient rational function in s (ascending powers). Constructions that know their
/// roots keep them in a zero/pole/gain cache, used for evaluation and pole queries.
class RationalTf {
 public:
  RationalTf() : zpk_(Zpk{}) {}
  RationalTf(RPoly num, RPoly den) : num_(poly::trim(std::move(num))), den_(poly::trim(std::move(den))) {
    if (den_ == RPoly{0.0}) throw Error(Errc::domain, "rational denominator is identically zero");
    for (double c : num_)
      if (!std::isfinite(c)) throw Error(Errc::conditioning, "non-finite numerator coefficient");
    for (double c : den_)
      if (!std::isfinite(c)) throw Error(Errc::conditioning, "non-finite denominator coefficient");
  }

  /// Expands the factored form; the coefficients must come out real to `real_tol` (relative).
  static RationalTf from_zpk(Zpk z, double real_tol = 1e-10) {
    const auto num = poly::to_real(poly::from_roots(z.zeros, z.gain), real_tol);
    const auto den = poly::to_real(poly::from_roots(z.poles), real_tol);
    RationalTf r(num, den);
    r.zpk_ = std::move(z);
    return r;
  }

  static RationalTf constant(double g) { return RationalTf(RPoly{g}, RPoly{1.0}); }

  const RPoly& num() const { return num_; }
  const RPoly& den() const { return den_; }
  const std::optional<Zpk>& zpk() const { return zpk_; }
  int num_degree() const { return static_cast<int>(num_.size()) - 1; }
  int den_degree() const { return static_cast<int>(den_.size()) - 1; }
  bool proper() const { return num_degree() <= den_degree(); }

  cplx operator()(cplx s) const {
    if (zpk_) {
      cplx v = zpk_->gain;
      for (const auto& z : zpk_->zeros) v *= s - z;
      for (const auto& p : zpk_->poles) {
        if (s == p) throw Error(Errc::singularity, "evaluation at a pole");
        v /= s - p;
      }
      return v;
    }
    const cplx d = poly::eval(den_, s);
    if (d == cplx{}) throw Error(Errc::singularity, "evaluation at a pole");
    return poly::eval(num_, s) / d;
  }

  CPoly poles() const { return zpk_ ? zpk_->poles : (den_.size() > 1 ? poly::roots(den_) : CPoly{}); }
  CPoly zeros() const { return zpk_ ? zpk_->zeros : (num_.size() > 1 ? poly::roots(num_) : CPoly{}); }

  RationalTf reciprocal() const {
    if (num_ == RPoly{0.0}) throw Error(Errc::singularity, "reciprocal of the zero function");
    RationalTf r;
    r.zpk_.reset();
    r.num_ = den_;
    r.den_ = num_;
    if (zpk_) r.zpk_ = Zpk{zpk_->poles, zpk_->zeros, 1.0 / zpk_->gain};
    return r;
  }

  friend RationalTf operator*(const RationalTf& a, const RationalTf& b) {
    RationalTf r;
    r.zpk_.reset();
    r.num_ = poly::mul(a.num_, b.num_);
    r.den_ = poly::mul(a.den_, b.den_);
    if (a.zpk_ && b.zpk_) {
      Zpk z{a.zpk_->zeros, a.zpk_->poles, a.zpk_->gain * b.zpk_->gain};
      z.zeros.insert(z.zeros.end(), b.zpk_->zeros.begin(), b.zpk_->zeros.end());
      z.poles.insert(z.poles.end(), b.zpk_->poles.begin(), b.zpk_->poles.end());
      r.zpk_ = std::move(z);
    }
    return r;
  }
  RationalTf& operator*=(const RationalTf& b) { return *this = *this * b; }

 private:
  RPoly num_{1.0};
  RPoly den_{1.0};
  std::optional<Zpk> zpk_;
};

namespace detail {

inline void check_fraction(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(Errc::domain, std::string(who) + ": order must lie in (0,1); split integer parts first");
}

/// Oustaloup corner frequencies: first = zeros (omega_k^-), second = poles (omega_k^+).
inline std::pair<std::vector<double>, std::vector<double>> oustaloup_corners(double alpha, const BandSpec& band) {
  band.validate();
  const int n = band.order;
  const double ratio = band.w_high / band.w_low;
  const double m = 2.0 * n + 1.0;
  std::vector<double> zeros, poles;
  for (int k = -n; k <= n; ++k) {
    zeros.push_back(band.w_low * std::pow(ratio, (k + n + (1.0 - alpha) / 2.0) / m));
    poles.push_back(band.w_low * std::pow(ratio, (k + n + (1.0 + alpha) / 2.0) / m));
  }
  return {zeros, poles};
}

/// Zpk of H_{1-alpha}(s~)/s~ with s~ = 1 - s/r, i.e. the approximation of (1 - s/r)^-alpha.
/// Each Oustaloup root s~ = -w maps to s = r (1 + w); the -1/r scalings cancel in pairs.
inline Zpk shifted_neg_power(cplx r, double alpha, const BandSpec& band) {
  const auto [zw, pw] = oustaloup_corners(1.0 - alpha, band);
  Zpk z;
  for (double w : zw) z.zeros.push_back(r * (1.0 + w));
  for (double w : pw) z.poles.push_back(r * (1.0 + w));
  z.poles.push_back(r);
  z.gain = std::pow(band.w_high, 1.0 - alpha) * (-r);
  return z;
}

inline Zpk invert(const Zpk& z) { return {z.poles, z.zeros, 1.0 / z.gain}; }

/// (1 - s/r)^m (m may be negative) as exact zpk.
inline Zpk binomial_power(cplx r, int m) {
  Zpk z;
  const int n = std::abs(m);
  for (int i = 0; i < n; ++i) (m > 0 ? z.zeros : z.poles).push_back(r);
  const cplx step = m > 0 ? -1.0 / r : -r;
  for (int i = 0; i < n; ++i) z.gain *= step;
  return z;
}

inline Zpk concat(Zpk a, const Zpk& b) {
  a.zeros.insert(a.zeros.end(), b.zeros.begin(), b.zeros.end());
  a.poles.insert(a.poles.end(), b.poles.begin(), b.poles.end());
  a.gain *= b.gain;
  return a;
}

/// (1 - s/r)^beta for arbitrary real beta: integer part exact, fractional part via the
/// integrator-corrected shifted Oustaloup filter (positive fractions use its reciprocal).
inline Zpk shifted_power(cplx r, double beta, const BandSpec& band) {
  const double ib = std::floor(beta);
  const double frac = beta - ib;
  if (frac < 1e-12 || frac > 1.0 - 1e-12) return binomial_power(r, static_cast<int>(std::round(beta)));
  if (beta > 0.0) {
    // beta = m + a, (1 - s/r)^a = 1 / approx((1 - s/r)^-a)
    return concat(binomial_power(r, static_cast<int>(ib)), invert(shifted_neg_power(r, frac, band)));
  }
  // beta = -(m + a)
  const double a = -beta - std::floor(-beta);
  const int m = static_cast<int>(std::floor(-beta));
  return concat(binomial_power(r, -m), shifted_neg_power(r, a, band));
}

}  // namespace detail

/// Band-limited approximation of s^alpha, alpha in (0,1).
inline RationalTf oustaloup(double alpha, const BandSpec& band) {
  detail::check_fraction(alpha, "oustaloup");
  const auto [zw, pw] = detail::oustaloup_corners(alpha, band);
  Zpk z;
  for (double w : zw) z.zeros.push_back(-w);
  for (double w : pw) z.poles.push_back(-w);
  z.gain = std::pow(band.w_high, alpha);
  return RationalTf::from_zpk(std::move(z));
}

/// s^-alpha ~ H_{1-alpha}(s)/s; the explicit integrator fixes the stationary gain.
inline RationalTf approx_neg_power(double alpha, const BandSpec& band) {
  detail::check_fraction(alpha, "approx_neg_power");
  auto h = oustaloup(1.0 - alpha, band);
  return h * RationalTf::from_zpk(Zpk{{}, {cplx{0.0, 0.0}}, 1.0});
}

/// s^beta for any real beta: s^floor(beta) * H_frac(beta).
inline RationalTf approx_power(double beta, const BandSpec& band) {
  const double ib = std::floor(beta);
  const double frac = beta - ib;
  Zpk z;
  const int n = static_cast<int>(ib);
  for (int i = 0; i < std::abs(n); ++i) (n > 0 ? z.zeros : z.poles).push_back(0.0);
  RationalTf r = RationalTf::from_zpk(std::move(z));
  if (frac > 1e-12 && frac < 1.0 - 1e-12) r *= oustaloup(frac, band);
  return r;
}

/// (1 -/+ s/z)^(exponent_sign * alpha) for real z > 0 via s~ = 1 -/+ s/z:
/// s~^-alpha ~ H_{1-alpha}(s~)/s~ and s~^alpha as its reciprocal. alpha = 1 is exact.
inline RationalTf approx_implicit_real(double z, double alpha, bool mirrored, int exponent_sign, const BandSpec& band) {
  if (!(z > 0.0)) throw Error(Errc::domain, "approx_implicit_real needs z > 0");
  if (exponent_sign != 1 && exponent_sign != -1) throw Error(Errc::domain, "exponent sign must be +1 or -1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(Errc::domain, "alpha must lie in (0,1]");
  band.validate();
  const cplx r = mirrored ? -z : z;
  Zpk zpk = alpha == 1.0 ? detail::binomial_power(r, -1) : detail::shifted_neg_power(r, alpha, band);
  if (exponent_sign > 0) zpk = detail::invert(zpk);
  auto out = RationalTf::from_zpk(std::move(zpk));
  if (mirrored) {
    for (const auto& p : out.poles())
      if (!(p.real() < 0.0))
        throw Error(Errc::conditioning, "mirrored implicit approximation produced a pole at Re = " +
                                            std::to_string(p.real()));
  }
  return out;
}

/// Pairwise approximation of ((1 - s/p)(1 - s/conj p))^(exponent_sign * alpha): each conjugate
/// root gets its own complex-coefficient filter and the product is rounded to real coefficients
/// after a 1e-10 realness check.
inline RationalTf approx_implicit_pair(cplx p, double alpha, int exponent_sign, const BandSpec& band) {
  if (p.imag() == 0.0) throw Error(Errc::degenerate_pair, "pair approximation needs a complex p");
  if (exponent_sign != 1 && exponent_sign != -1) throw Error(Errc::domain, "exponent sign must be +1 or -1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(Errc::domain, "alpha must lie in (0,1]");
  band.validate();
  auto one = [&](cplx r) {
    return alpha == 1.0 ? detail::binomial_power(r, -1) : detail::shifted_neg_power(r, alpha, band);
  };
  Zpk zpk = detail::concat(one(p), one(std::conj(p)));
  if (exponent_sign > 0) zpk = detail::invert(zpk);
  zpk.gain = zpk.gain.real();  // the two gains are conjugates; their product is real
  return RationalTf::from_zpk(std::move(zpk), 1e-10);
}

namespace detail {

/// Sum_m c_m s^(m alpha) with each monomial approximated on its own and combined over the
/// product of the distinct Oustaloup denominators.
inline RationalTf approx_pseudo_polynomial(const PseudoPolynomial& p, const BandSpec& band) {
  struct Term {
    double frac;
    RPoly num, den;
  };
  std::vector<Term> filters;
  auto filter_index = [&](double frac) -> std::size_t {
    for (std::size_t i = 0; i < filters.size(); ++i)
      if (std::abs(filters[i].frac - frac) < 1e-12) return i;
    auto h = oustaloup(frac, band);
    filters.push_back({frac, h.num(), h.den()});
    return filters.size() - 1;
  };

  struct Mono {
    cplx c;
    int int_part;
    std::optional<std::size_t> filter;
  };
  std::vector<Mono> monos;
  const double alpha = p.alpha().value;
  for (std::size_t m = 0; m < p.coeffs().size(); ++m) {
    if (p.coeffs()[m] == cplx{}) continue;
    const double e = alpha * static_cast<double>(m);
    double ip = std::floor(e + 1e-12);
    double frac = e - ip;
    if (frac < 1e-12) frac = 0.0;
    Mono mono{p.coeffs()[m], static_cast<int>(ip), std::nullopt};
    if (frac > 0.0) mono.filter = filter_index(frac);
    monos.push_back(mono);
  }

  RPoly common{1.0};
  for (const auto& f : filters) common = poly::mul(common, f.den);

  CPoly num{0.0};
  for (const auto& mono : monos) {
    CPoly term = poly::monomial<cplx>(mono.int_part, mono.c);
    for (std::size_t i = 0; i < filters.size(); ++i) {
      const RPoly& factor = mono.filter && *mono.filter == i ? filters[i].num : filters[i].den;
      term = poly::mul(term, poly::to_complex(factor));
    }
    num = poly::add(num, term);
  }
  return RationalTf(poly::to_real(num, 1e-10), common);
}

inline RationalTf io_binomial_power(cplx z, bool pair, bool mirrored, int m) {
  const cplx r = mirrored ? -z : z;
  Zpk zpk = binomial_power(r, m);
  if (pair) zpk = concat(zpk, binomial_power(std::conj(r), m));
  return RationalTf::from_zpk(std::move(zpk));
}

}  // namespace detail

/// Integer-order rational approximation of a single factor.
inline RationalTf approximate_factor(const Factor& f, const BandSpec& band) {
  band.validate();
  if (!is_real_factor(f))
    throw Error(Errc::unsupported, describe(f) + ": complex-coefficient factor has no real rational approximation");
  try {
    return std::visit(
        [&](const auto& v) -> RationalTf {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, Gain>) {
            return RationalTf::constant(v.g);
          } else if constexpr (std::is_same_v<V, Monomial>) {
            return approx_power(v.beta, band);
          } else if constexpr (std::is_same_v<V, ExplicitX>) {
            CPoly c{1.0, -1.0 / complex_power(v.z, v.alpha.value)};
            if (v.pair) c = poly::mul(c, CPoly{1.0, -1.0 / complex_power(std::conj(v.z), v.alpha.value)});
            auto r = detail::approx_pseudo_polynomial(PseudoPolynomial(v.alpha, c), band);
            return v.k == 1 ? r : r.reciprocal();
          } else if constexpr (std::is_same_v<V, PseudoPoly>) {
            auto r = detail::approx_pseudo_polynomial(v.poly, band);
            return v.k == 1 ? r : r.reciprocal();
          } else if constexpr (std::is_same_v<V, ImplicitPower>) {
            const double ib = std::round(v.beta);
            if (std::abs(v.beta - ib) < 1e-12) return detail::io_binomial_power(v.z, v.pair, v.mirrored, static_cast<int>(ib));
            if (!v.pair) {
              const cplx r = v.mirrored ? -v.z : v.z;
              auto out = RationalTf::from_zpk(detail::shifted_power(r, v.beta, band));
              if (v.mirrored)
                for (const auto& p : out.poles())
                  if (!(p.real() < 0.0)) throw Error(Errc::conditioning, "mirrored approximation produced an unstable pole");
              return out;
            }
            // pair: integer part exact, fractional part pairwise
            const double fl = std::floor(v.beta);
            const double frac = v.beta - fl;
            const cplx r = v.mirrored ? -v.z : v.z;
            if (v.beta > 0.0) {
              return detail::io_binomial_power(v.z, true, v.mirrored, static_cast<int>(fl)) *
                     approx_implicit_pair(r, frac, +1, band);
            }
            const double a = -v.beta - std::floor(-v.beta);
            return detail::io_binomial_power(v.z, true, v.mirrored, -static_cast<int>(std::floor(-v.beta))) *
                   approx_implicit_pair(r, a, -1, band);
          } else {
            return RationalTf(v.num, v.den);
          }
        },
        f);
  } catch (const Error& e) {
    if (e.code() == Errc::unsupported) throw;
    throw Error(e.code(), describe(f) + ": " + e.what());
  }
}

/// Product of the per-factor approximations; IO factors pass through exactly.
inline RationalTf approximate_tf(const FactoredTf& tf, const BandSpec& band) {
  RationalTf out = RationalTf::constant(tf.negated ? -1.0 : 1.0);
  for (const auto& f : tf.factors) out *= approximate_factor(f, band);
  return out;
}

}  // namespace fracshape
