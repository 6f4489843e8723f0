#pragma once

// Compensator constructions for partial cancellation of an integer-order zero or pole.
//
// A real RHP zero/pole Z^k = (1 - s/z)^k is split as X^k Q^k with X the principal pseudo zero
// 1 - (s/z)^(1/nu) and Q = sum_n (s/z)^(n/nu) collecting the remaining nu-1 pseudo zeros, which
// all lie in the Matignon-stable sector. The controller carries Q^-k; the loop keeps X^k.
// Conjugate pairs use the products of both expansions, which have real coefficients.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "fracshape/error.hpp"
#include "fracshape/focore.hpp"

namespace fracshape {

namespace detail {

inline void check_k(int k) {
  if (k != 1 && k != -1) throw Error(Errc::domain, "k must be +1 (zero) or -1 (pole)");
}

inline void check_nu(int nu) {
  if (nu < 2) throw Error(Errc::domain, "nu must be an integer >= 2");
}

inline void check_rhp_pair(cplx z) {
  if (z.imag() == 0.0) throw Error(Errc::degenerate_pair, "pair form needs a complex z");
  if (!(z.real() > 0.0)) throw Error(Errc::not_rhp, "pair location must lie in the open right half plane");
}

inline void check_stable_pair(cplx p) {
  if (p.imag() == 0.0) throw Error(Errc::degenerate_pair, "pole pair needs a complex p");
  if (!(p.real() < 0.0)) throw Error(Errc::not_stable_pole, "|arg p| must exceed pi/2");
}

/// Q_{z,nu}(w) = sum_{n=0}^{nu-1} (w / lambda0)^n with lambda0 the principal nu-th root of z.
inline CPoly expansion_coeffs(cplx z, int nu) {
  const cplx inv = 1.0 / complex_power(z, 1.0 / nu);
  CPoly c(static_cast<std::size_t>(nu));
  cplx acc = 1.0;
  for (auto& v : c) {
    v = acc;
    acc *= inv;
  }
  return c;
}

/// Q_z Q_conj(z), rounded to real after the realness check.
inline CPoly pair_expansion_coeffs(cplx z, int nu) {
  const auto prod = poly::mul(expansion_coeffs(z, nu), expansion_coeffs(std::conj(z), nu));
  return poly::to_complex(poly::to_real(prod, 1e-10));
}

inline void require_stable(const PseudoPolynomial& q, const char* what) {
  const auto rep = matignon_stable(q);
  if (!rep.stable || rep.indeterminate)
    throw Error(Errc::conditioning, std::string(what) + " has a root outside the stable sector");
}

}  // namespace detail

/// Q_{z,nu} as a pseudo polynomial of order 1/nu (z may be complex).
inline PseudoPolynomial expansion_q(cplx z, int nu) {
  detail::check_nu(nu);
  return PseudoPolynomial(CommensurateOrder::from_nu(nu), detail::expansion_coeffs(z, nu));
}

struct Expansion {
  Factor x;  ///< principal part X^k (or the pair form)
  Factor q;  ///< stable remainder Q^k (or the pair form)
};

/// Z^k = X^k Q^k for a real zero/pole at z > 0.
inline Expansion expand_real(double z, int nu, int k) {
  if (!(z > 0.0)) throw Error(Errc::domain, "expand_real needs z > 0");
  detail::check_nu(nu);
  detail::check_k(k);
  auto q = expansion_q(z, nu);
  detail::require_stable(q, "Q");
  return {ExplicitX{z, CommensurateOrder::from_nu(nu), k, false}, PseudoPoly{std::move(q), k}};
}

/// Z_2^k = X^k Q^k for a conjugate RHP pair z, conj(z).
inline Expansion expand_pair(cplx z, int nu, int k) {
  detail::check_nu(nu);
  detail::check_k(k);
  detail::check_rhp_pair(z);
  PseudoPolynomial q(CommensurateOrder::from_nu(nu), detail::pair_expansion_coeffs(z, nu));
  detail::require_stable(q, "pair Q");
  return {ExplicitX{z, CommensurateOrder::from_nu(nu), k, true}, PseudoPoly{std::move(q), k}};
}

struct CharPoints {
  bool has_minimum = false;  ///< false for alpha = 1 (monotone IO magnitude)
  double omega_min = 0.0;
  double magnitude_min = 0.0;
  double phase_min = 0.0;   ///< rad
  double phase_at_z = 0.0;  ///< rad, k = 1
};

/// Magnitude minimum of X_{z,alpha} and its phase at omega = z.
inline CharPoints explicit_char_points(double z, double alpha) {
  if (!(z > 0.0)) throw Error(Errc::domain, "z must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(Errc::domain, "alpha must lie in (0,1]");
  CharPoints cp;
  cp.phase_at_z = pi / 2.0 * (alpha / 2.0 - 1.0);
  if (alpha == 1.0) return cp;
  const double h = pi * alpha / 2.0;
  cp.has_minimum = true;
  cp.omega_min = z * std::pow(std::cos(h), 1.0 / alpha);
  cp.magnitude_min = std::sin(h);
  cp.phase_min = pi / 2.0 * (alpha - 1.0);
  return cp;
}

struct ImplicitTerms {
  Factor q_tilde;        ///< (1 + s/z)^{k(nu-1)/nu}, pair form when requested
  FactoredTf x_tilde;    ///< Z^k * q_tilde^-1
};

inline ImplicitTerms implicit_terms(cplx z, int nu, int k, bool pair) {
  detail::check_nu(nu);
  detail::check_k(k);
  if (pair) {
    detail::check_rhp_pair(z);
  } else {
    if (z.imag() != 0.0) throw Error(Errc::domain, "single implicit term needs a real z (use the pair form)");
    if (!(z.real() > 0.0)) throw Error(Errc::domain, "implicit_terms needs z > 0");
  }
  const double beta = k * static_cast<double>(nu - 1) / nu;
  ImplicitTerms t{ImplicitPower{z, beta, pair, true}, {}};
  t.x_tilde.factors = {ImplicitPower{z, static_cast<double>(k), pair, false}, ImplicitPower{z, -beta, pair, true}};
  return t;
}

/// D^k: the RHP location reflected into the LHP; pair form for complex z. Unit DC gain.
inline Factor mirror(cplx z, int k) {
  detail::check_k(k);
  if (!(z.real() > 0.0)) throw Error(Errc::domain, "mirror needs Re(z) > 0");
  return ImplicitPower{z, static_cast<double>(k), z.imag() != 0.0, true};
}

struct StablePairCancellation {
  Factor x_p;               ///< cancels the principal pseudo poles lambda0, conj(lambda0)
  Factor q_p;               ///< remaining pseudo poles (real-coefficient pseudo polynomial)
  cplx principal_root;      ///< lambda0 = p^(1/nu)
  CPoly remaining_roots;
  double min_remaining_arg = 0.0;  ///< min |arg| over remaining roots, rad
  bool non_oscillating = true;     ///< every remaining root has |arg| >= pi/nu
};

/// Partial cancellation of a lightly damped stable pole pair P = 1/((1-s/p)(1-s/conj p)):
/// P * X_p = Q_p^-1, leaving only non-principal pseudo poles in the loop.
inline StablePairCancellation stable_pair_cancel(cplx p, int nu) {
  detail::check_nu(nu);
  detail::check_stable_pair(p);
  PseudoPolynomial q(CommensurateOrder::from_nu(nu), detail::pair_expansion_coeffs(p, nu));
  const auto rep = matignon_stable(q);
  if (!rep.stable) throw Error(Errc::conditioning, "pole-pair remainder has a root outside the stable sector");

  StablePairCancellation out{ExplicitX{p, CommensurateOrder::from_nu(nu), 1, true}, PseudoPoly{q, 1},
                             complex_power(p, 1.0 / nu), rep.roots};
  out.min_remaining_arg = pi;
  for (const auto& r : rep.roots) out.min_remaining_arg = std::min(out.min_remaining_arg, std::abs(principal_arg(r)));
  // strict threshold, reported as a warning only
  out.non_oscillating = out.min_remaining_arg >= pi / nu;
  return out;
}

struct ImplicitStablePair {
  Factor x_tilde;  ///< P^-alpha
  Factor q_tilde;  ///< P^((1-nu)/nu)
};

inline ImplicitStablePair stable_pair_implicit(cplx p, int nu) {
  detail::check_nu(nu);
  detail::check_stable_pair(p);
  // P^beta == base^-beta with base = (1 - s/p)(1 - s/conj p)
  return {ImplicitPower{p, 1.0 / nu, true, false}, ImplicitPower{p, static_cast<double>(nu - 1) / nu, true, false}};
}

// ---------------------------------------------------------------------------------------------
// Asymptotics

struct Asymptotics {
  double low_slope = 0.0;   ///< dB/dec
  double low_phase = 0.0;   ///< deg
  double high_slope = 0.0;  ///< dB/dec
  double high_phase = 0.0;  ///< deg, continuous from the low-frequency phase

  Asymptotics& operator+=(const Asymptotics& o) {
    low_slope += o.low_slope;
    low_phase += o.low_phase;
    high_slope += o.high_slope;
    high_phase += o.high_phase;
    return *this;
  }
};

namespace detail {

// Continuous limit of arg(1 - r e^{j theta}) as r runs from 0 to infinity.
inline double ray_limit_arg(double theta, const Factor& f) {
  theta = std::remainder(theta, 2.0 * pi);
  const double s = std::sin(theta);
  if (std::abs(s) < 1e-14) {
    if (std::cos(theta) < 0.0) return 0.0;
    throw Error(Errc::singularity, describe(f) + ": root on the imaginary axis");
  }
  return s > 0.0 ? theta - pi : theta + pi;
}

}  // namespace detail

inline Asymptotics asymptotics(const Factor& f) {
  return std::visit(
      [&](const auto& v) -> Asymptotics {
        using V = std::decay_t<decltype(v)>;
        Asymptotics a;
        if constexpr (std::is_same_v<V, ExplicitX>) {
          const double alpha = v.alpha.value;
          auto term = [&](cplx z) {
            const double theta = alpha * pi / 2.0 - principal_arg(complex_power(z, alpha));
            a.high_phase += v.k * rad2deg(detail::ray_limit_arg(theta, f));
            a.high_slope += v.k * 20.0 * alpha;
          };
          term(v.z);
          if (v.pair) term(std::conj(v.z));
        } else if constexpr (std::is_same_v<V, ImplicitPower>) {
          const double sign = v.mirrored ? 1.0 : -1.0;
          // base term 1 + sign*j*omega/z runs along a ray from 1 with direction sign*j/z
          auto term = [&](cplx z) {
            const cplx dir = sign * cplx{0.0, 1.0} / z;
            a.high_phase += v.beta * rad2deg(principal_arg(dir));
            a.high_slope += v.beta * 20.0;
          };
          term(v.z);
          if (v.pair) term(std::conj(v.z));
        } else if constexpr (std::is_same_v<V, Gain>) {
          if (v.g < 0.0) a.low_phase = a.high_phase = 180.0;
        } else {
          throw Error(Errc::unsupported, "asymptotics not defined for " + describe(f));
        }
        return a;
      },
      f);
}

inline Asymptotics asymptotics(const FactoredTf& tf) {
  Asymptotics a;
  for (const auto& f : tf.factors) a += asymptotics(f);
  if (tf.negated) {
    a.low_phase += 180.0;
    a.high_phase += 180.0;
  }
  return a;
}

// ---------------------------------------------------------------------------------------------
// Cancellation plans

enum class TargetKind { real, rhp_pair, stable_pair };
enum class Method { explicit_split, implicit, mirror, full_io };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::explicit_split: return "explicit";
    case Method::implicit: return "implicit";
    case Method::mirror: return "mirror";
    case Method::full_io: return "full_io";
  }
  return "?";
}

inline const char* to_string(TargetKind t) {
  switch (t) {
    case TargetKind::real: return "real";
    case TargetKind::rhp_pair: return "rhp_pair";
    case TargetKind::stable_pair: return "stable_pair";
  }
  return "?";
}

struct CancellationPlan {
  TargetKind target = TargetKind::real;
  cplx z{1.0, 0.0};
  int k = 1;
  int nu = 2;
  Method method = Method::explicit_split;
  Factor target_term;   ///< the plant's Z^k (or P for a stable pair)
  Factor compensator;   ///< goes into the controller
  FactoredTf residual;  ///< what is left in the loop: target_term * compensator
};

/// Builds the compensator/residual split. For a stable pole pair k is forced to -1.
inline CancellationPlan plan_cancellation(TargetKind target, cplx z, int k, int nu, Method method) {
  CancellationPlan plan;
  plan.target = target;
  plan.z = z;
  plan.k = target == TargetKind::stable_pair ? -1 : k;
  plan.nu = nu;
  plan.method = method;
  detail::check_k(plan.k);
  detail::check_nu(nu);

  const bool pair = target != TargetKind::real;
  if (target == TargetKind::real && (z.imag() != 0.0 || !(z.real() > 0.0)))
    throw Error(Errc::domain, "real target needs z > 0");
  if (target == TargetKind::rhp_pair) detail::check_rhp_pair(z);
  if (target == TargetKind::stable_pair) detail::check_stable_pair(z);

  plan.target_term = ImplicitPower{z, static_cast<double>(plan.k), pair, false};

  if (target == TargetKind::stable_pair) {
    switch (method) {
      case Method::explicit_split: {
        auto c = stable_pair_cancel(z, nu);
        plan.compensator = c.x_p;
        auto q = std::get<PseudoPoly>(c.q_p);
        q.k = -1;
        plan.residual.factors = {q};
        break;
      }
      case Method::implicit: {
        auto c = stable_pair_implicit(z, nu);
        plan.compensator = c.x_tilde;
        auto q = std::get<ImplicitPower>(c.q_tilde);
        q.beta = -q.beta;
        plan.residual.factors = {q};
        break;
      }
      case Method::mirror:
      case Method::full_io:
        plan.compensator = ImplicitPower{z, 1.0, true, false};
        break;
    }
    return plan;
  }

  switch (method) {
    case Method::explicit_split: {
      auto e = target == TargetKind::real ? expand_real(z.real(), nu, plan.k) : expand_pair(z, nu, plan.k);
      auto q = std::get<PseudoPoly>(e.q);
      q.k = -plan.k;
      plan.compensator = q;
      plan.residual.factors = {e.x};
      break;
    }
    case Method::implicit: {
      auto t = implicit_terms(z, nu, plan.k, pair);
      auto q = std::get<ImplicitPower>(t.q_tilde);
      q.beta = -q.beta;
      plan.compensator = q;
      plan.residual = t.x_tilde;
      break;
    }
    case Method::mirror:
      plan.compensator = mirror(z, -plan.k);
      plan.residual.factors = {plan.target_term, plan.compensator};
      break;
    case Method::full_io:
      plan.compensator = ImplicitPower{z, static_cast<double>(-plan.k), pair, false};
      break;
  }
  return plan;
}

}  // namespace fracshape
