#pragma once

// Closed-loop analysis of a unity-feedback loop L = G C: sensitivities, internal stability,
// margins and crossover gain tuning, plus the PI-based comparison controllers.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fracshape/approx.hpp"
#include "fracshape/compensate.hpp"
#include "fracshape/error.hpp"
#include "fracshape/focore.hpp"

namespace fracshape {

/// Plant and controller of a unity-feedback loop. With `negated` set the analysis loop is
/// L = -G C, i.e. the controller sign absorbs a negative plant DC gain.
struct LoopSpec {
  FactoredTf plant;
  FactoredTf controller;
  bool negated = false;

  FactoredTf open_loop() const {
    FactoredTf l = plant * controller;
    l.negated = l.negated != negated;
    return l;
  }
  cplx operator()(cplx s) const { return (negated ? -1.0 : 1.0) * plant(s) * controller(s); }
};

enum class SensitivityKind { complementary, output, input };

/// One closed-loop map of `loop`, evaluable pointwise (and with eval_freq on a grid).
struct FeedbackTf {
  LoopSpec loop;
  SensitivityKind kind = SensitivityKind::complementary;

  cplx operator()(cplx s) const {
    const cplx g = loop.plant(s);
    const cplx l = (loop.negated ? -1.0 : 1.0) * g * loop.controller(s);
    const cplx d = 1.0 + l;
    if (std::abs(d) <= 1e-14 * std::max(1.0, std::abs(l)))
      throw Error(Errc::singularity, "1 + L vanishes");
    switch (kind) {
      case SensitivityKind::complementary: return l / d;
      case SensitivityKind::output: return 1.0 / d;
      case SensitivityKind::input: return g / d;
    }
    return {};
  }
};

struct SensitivityFns {
  FeedbackTf T, Sy, Su;
};

inline SensitivityFns sensitivities(const LoopSpec& loop) {
  return {{loop, SensitivityKind::complementary}, {loop, SensitivityKind::output}, {loop, SensitivityKind::input}};
}

struct Sensitivities {
  FrequencyResponse T;   ///< L/(1+L)
  FrequencyResponse Sy;  ///< 1/(1+L)
  FrequencyResponse Su;  ///< G/(1+L)
};

inline Sensitivities sensitivities(const LoopSpec& loop, std::span<const double> grid) {
  const auto fns = sensitivities(loop);
  return {eval_freq(fns.T, grid), eval_freq(fns.Sy, grid), eval_freq(fns.Su, grid)};
}

// ---------------------------------------------------------------------------------------------
// Internal stability

struct InternalStabilityReport {
  bool stable = false;            ///< T, S_y, S_u and C S_y all stable
  bool used_approximation = false;
  int nu = 1;                     ///< base order 1/nu of the analysed pseudo polynomials
  StabilityReport characteristic; ///< roots of X^-k + G^ C^ (cleared of denominators)
  StabilityReport T, Sy, Su, CSy;
};

namespace detail {

struct ClosedLoopPolys {
  CPoly t_num, sy_num, su_num, cs_num, den;
};

inline ClosedLoopPolys closed_loop_polys(const CPoly& gn, const CPoly& gd, const CPoly& cn, const CPoly& cd,
                                         double sigma) {
  ClosedLoopPolys p;
  const CPoly gc_n = poly::scale(poly::mul(gn, cn), sigma);
  p.sy_num = poly::mul(gd, cd);
  p.den = poly::add(p.sy_num, gc_n);
  p.t_num = gc_n;
  p.su_num = poly::mul(gn, cd);
  p.cs_num = poly::mul(cn, gd);
  return p;
}

inline InternalStabilityReport analyse(const PseudoRational& g, const PseudoRational& c, const PseudoRational& residual_loop,
                                       double sigma) {
  InternalStabilityReport rep;
  rep.nu = g.nu;
  const auto p = closed_loop_polys(g.num, g.den, c.num, c.den, sigma);
  rep.T = transfer_stability({g.nu, p.t_num, p.den});
  rep.Sy = transfer_stability({g.nu, p.sy_num, p.den});
  rep.Su = transfer_stability({g.nu, p.su_num, p.den});
  rep.CSy = transfer_stability({g.nu, p.cs_num, p.den});
  const auto ch = poly::add(residual_loop.den, poly::scale(residual_loop.num, sigma));
  rep.characteristic = matignon_stable(PseudoPolynomial(CommensurateOrder::from_nu(g.nu), ch));
  rep.stable = rep.T.stable && rep.Sy.stable && rep.Su.stable && rep.CSy.stable;
  return rep;
}

inline PseudoRational as_io(const RationalTf& r) { return {1, poly::to_complex(r.num()), poly::to_complex(r.den())}; }

}  // namespace detail

/// Internal stability of the loop G = Z^k G^, C = compensator * C^ built from `plan`. Explicit
/// plans are checked exactly as pseudo polynomials in w = s^(1/nu); plans with implicit powers are
/// approximated over `band` first and checked as integer-order systems.
inline InternalStabilityReport internal_stability(const CancellationPlan& plan, const FactoredTf& plant_hat,
                                                  const FactoredTf& controller_hat, bool negated = false,
                                                  const BandSpec& band = {}) {
  FactoredTf g = FactoredTf{{plan.target_term}} * plant_hat;
  FactoredTf c = FactoredTf{{plan.compensator}} * controller_hat;
  FactoredTf gc_hat = plant_hat * controller_hat;
  FactoredTf residual_loop = plan.residual * gc_hat;
  const double sigma = negated ? -1.0 : 1.0;

  bool exact = true;
  int nu = 1;
  try {
    nu = commensurate_nu(g * c * residual_loop);
  } catch (const Error& e) {
    if (e.code() != Errc::not_commensurate || plan.method != Method::implicit) throw;
    exact = false;
  }
  if (exact) {
    return detail::analyse(to_pseudo_rational(g, nu), to_pseudo_rational(c, nu), to_pseudo_rational(residual_loop, nu),
                           sigma);
  }
  auto rep = detail::analyse(detail::as_io(approximate_tf(g, band)), detail::as_io(approximate_tf(c, band)),
                             detail::as_io(approximate_tf(residual_loop, band)), sigma);
  rep.used_approximation = true;
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Margins

struct MarginOptions {
  double w_min = 1e-3;
  double w_max = 1e3;
  double per_decade = 100.0;
};

struct MarginsReport {
  double omega_c = 0.0;
  double phase_margin_deg = 0.0;
  double omega_pi = std::numeric_limits<double>::quiet_NaN();
  double gain_margin_db = std::numeric_limits<double>::infinity();
  std::vector<std::string> flags;
};

namespace detail {

/// Bisection on a bracketing sign change of f over [lo, hi] in log-frequency.
template <class F>
double bisect_log(F&& f, double lo, double hi, double rel_tol = 1e-12) {
  double flo = f(lo);
  for (int it = 0; it < 200 && (hi - lo) > rel_tol * lo; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo * hi);
}

}  // namespace detail

/// Gain/phase crossings from the unwrapped sampled response, refined by bisection.
inline MarginsReport margins(const LoopSpec& loop, const MarginOptions& opt = {}) {
  const auto grid = log_grid_per_decade(opt.w_min, opt.w_max, opt.per_decade);
  const auto fr = eval_freq(loop, grid);
  MarginsReport rep;

  auto log_mag = [&](double w) { return std::log(std::abs(loop(cplx{0.0, w}))); };

  // gain crossings: choose the one with the smallest phase margin
  int n_gain = 0;
  double best_pm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < fr.size(); ++i) {
    const double a = std::log(std::abs(fr.values[i])), b = std::log(std::abs(fr.values[i + 1]));
    if ((a > 0.0) == (b > 0.0) && a != 0.0) continue;
    if (b == 0.0 && i + 2 < fr.size()) continue;  // counted as the left end of the next interval
    ++n_gain;
    const double wc = a == 0.0 ? fr.omega[i] : detail::bisect_log(log_mag, fr.omega[i], fr.omega[i + 1]);
    const double ph = unwrap_step(fr.phase_deg[i], rad2deg(principal_arg(loop(cplx{0.0, wc}))));
    const double pm = std::remainder(ph + 180.0, 360.0);
    if (pm < best_pm) {
      best_pm = pm;
      rep.omega_c = wc;
    }
  }
  if (n_gain == 0)
    throw Error(Errc::no_crossover, "no gain crossover in [" + std::to_string(opt.w_min) + ", " +
                                        std::to_string(opt.w_max) + "] rad/s; widen the band");
  rep.phase_margin_deg = best_pm;
  if (n_gain > 1) rep.flags.push_back("multiple_gain_crossings");

  // phase crossings of -180 + 360 m on the unwrapped phase
  int n_phase = 0;
  for (std::size_t i = 0; i + 1 < fr.size(); ++i) {
    const double a = fr.phase_deg[i], b = fr.phase_deg[i + 1];
    const double ka = std::floor((a + 180.0) / 360.0), kb = std::floor((b + 180.0) / 360.0);
    if (ka == kb) continue;
    const double target = -180.0 + 360.0 * std::max(ka, kb);
    auto phase_err = [&](double w) {
      return unwrap_step(a, rad2deg(principal_arg(loop(cplx{0.0, w})))) - target;
    };
    const double wp = detail::bisect_log(phase_err, fr.omega[i], fr.omega[i + 1]);
    const double gm = -20.0 * std::log10(std::abs(loop(cplx{0.0, wp})));
    ++n_phase;
    if (n_phase == 1 || gm < rep.gain_margin_db) {
      rep.gain_margin_db = gm;
      rep.omega_pi = wp;
    }
  }
  if (n_phase == 0) rep.flags.push_back("no_phase_crossing");
  if (n_phase > 1) rep.flags.push_back("multiple_phase_crossings");
  return rep;
}

struct TuneResult {
  double k = 1.0;
  double residual = 0.0;  ///< |k L(j omega_c)| - 1
};

/// Proportional gain placing the gain crossover at omega_c.
inline TuneResult tune_gain(const LoopSpec& unit_loop, double omega_c) {
  if (!(omega_c > 0.0)) throw Error(Errc::domain, "target crossover must be positive");
  const double m = std::abs(unit_loop(cplx{0.0, omega_c}));
  if (!(m > 0.0) || !std::isfinite(m))
    throw Error(Errc::zero_magnitude, "|L(j omega_c)| is zero or non-finite at omega_c = " + std::to_string(omega_c));
  TuneResult r;
  r.k = 1.0 / m;
  r.residual = std::abs(r.k * unit_loop(cplx{0.0, omega_c})) - 1.0;
  return r;
}

/// k (tau s + 1) / (tau s)
inline FactoredTf pi_controller(double k, double tau) {
  return FactoredTf{{Gain{k}, IoRational{{1.0, tau}, {0.0, tau}}}};
}

// ---------------------------------------------------------------------------------------------
// Comparison example: plant with a dominant RHP zero at z = 1 and four PI-based controllers.

namespace example {

inline constexpr double zero_location = 1.0;
inline constexpr double crossover = 0.54;
inline constexpr double tau = 2.0;
inline constexpr int nu = 2;
inline constexpr std::array<double, 4> reported_gains{0.68, 0.772, 1.091, 0.7245};

/// G(s) = (s - 1) / ((1 + s/2)(1 + s/3))
inline FactoredTf plant() { return FactoredTf{{IoRational{{-1.0, 1.0}, {1.0, 5.0 / 6.0, 1.0 / 6.0}}}}; }

/// G = Z G^ with Z = 1 - s, G^ = -1 / ((1 + s/2)(1 + s/3))
inline FactoredTf plant_hat() { return FactoredTf{{IoRational{{-1.0}, {1.0, 5.0 / 6.0, 1.0 / 6.0}}}}; }

/// Compensating element of controller i (1-based): none, mirror D^-1, explicit Q^-1, implicit Q~^-1.
inline FactoredTf compensator(int i) {
  switch (i) {
    case 1: return {};
    case 2: return FactoredTf{{plan_cancellation(TargetKind::real, zero_location, 1, nu, Method::mirror).compensator}};
    case 3:
      return FactoredTf{{plan_cancellation(TargetKind::real, zero_location, 1, nu, Method::explicit_split).compensator}};
    case 4: return FactoredTf{{plan_cancellation(TargetKind::real, zero_location, 1, nu, Method::implicit).compensator}};
    default: throw Error(Errc::domain, "controller index must be 1..4");
  }
}

inline Method method(int i) {
  static constexpr Method m[] = {Method::full_io, Method::mirror, Method::explicit_split, Method::implicit};
  return m[i - 1];
}

struct Controllers {
  std::array<FactoredTf, 4> c;
  std::array<double, 4> gains{};
  std::array<double, 4> residuals{};
};

/// C_i = k_i PI(tau) * compensator_i with k_i tuned for |L_i(j 0.54)| = 1 on the negated loop.
inline Controllers build_example_controllers() {
  Controllers out;
  for (int i = 1; i <= 4; ++i) {
    const FactoredTf unit = pi_controller(1.0, tau) * compensator(i);
    const auto t = tune_gain(LoopSpec{plant(), unit, true}, crossover);
    out.gains[i - 1] = t.k;
    out.residuals[i - 1] = t.residual;
    out.c[i - 1] = pi_controller(t.k, tau) * compensator(i);
  }
  return out;
}

inline LoopSpec loop(const Controllers& c, int i) { return LoopSpec{plant(), c.c[i - 1], true}; }

}  // namespace example

}  // namespace fracshape
