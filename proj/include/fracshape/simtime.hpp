#pragma once

// Step responses: zero-order-hold simulation of integer-order approximations and a
// Grunwald-Letnikov solver for commensurate pseudo-rational systems.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "fracshape/approx.hpp"
#include "fracshape/error.hpp"
#include "fracshape/focore.hpp"
#include "fracshape/loopshape.hpp"

namespace fracshape {

/// x' = A x + B u, y = C x + D u (single input, single output).
struct StateSpace {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  double D = 0.0;

  int order() const { return static_cast<int>(A.rows()); }

  cplx transfer(cplx s) const {
    const int n = order();
    if (n == 0) return D;
    Eigen::MatrixXcd m = s * Eigen::MatrixXcd::Identity(n, n) - A.cast<cplx>();
    Eigen::VectorXcd x = m.partialPivLu().solve(B.cast<cplx>());
    return (C.cast<cplx>() * x)(0) + D;
  }
};

namespace detail {

/// Controllable canonical realisation of num/den given in ascending powers.
inline StateSpace canonical(RPoly num, RPoly den) {
  num = poly::trim(std::move(num));
  den = poly::trim(std::move(den));
  const int n = static_cast<int>(den.size()) - 1;
  if (static_cast<int>(num.size()) - 1 > n)
    throw Error(Errc::improper, "improper transfer function (numerator degree " + std::to_string(num.size() - 1) +
                                    " > denominator degree " + std::to_string(n) + ")");
  const double lead = den.back();
  for (auto& c : den) c /= lead;
  for (auto& c : num) c /= lead;
  num.resize(static_cast<std::size_t>(n) + 1, 0.0);

  StateSpace ss;
  ss.D = num[static_cast<std::size_t>(n)];
  ss.A = Eigen::MatrixXd::Zero(n, n);
  ss.B = Eigen::VectorXd::Zero(n);
  ss.C = Eigen::RowVectorXd::Zero(n);
  for (int i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
  for (int i = 0; i < n; ++i) {
    ss.A(n - 1, i) = -den[static_cast<std::size_t>(i)];
    ss.C(i) = num[static_cast<std::size_t>(i)] - ss.D * den[static_cast<std::size_t>(i)];
  }
  if (n > 0) ss.B(n - 1) = 1.0;
  // companion coefficients of wideband filters span many decades; rescale the states
  const Eigen::VectorXd d = poly::detail::balance(ss.A);
  ss.B = ss.B.cwiseQuotient(d);
  ss.C = ss.C.cwiseProduct(d.transpose());
  return ss;
}

}  // namespace detail

inline StateSpace to_state_space(const RationalTf& tf) { return detail::canonical(tf.num(), tf.den()); }

struct TimeSeries {
  std::vector<double> t;
  std::vector<double> y;
  std::string solver;
  std::string scenario;
  double dt = 0.0;
  std::vector<std::string> warnings;
};

struct SimOptions {
  double t_end = 60.0;
  double dt = 1e-3;
  double amplitude = 1.0;
};

namespace detail {

inline void check_sim(const SimOptions& o) {
  if (!(o.dt > 0.0) || !std::isfinite(o.dt)) throw Error(Errc::domain, "time step must be positive");
  if (!(o.t_end > 0.0) || !std::isfinite(o.t_end)) throw Error(Errc::domain, "horizon must be positive");
  if (o.dt > o.t_end) throw Error(Errc::domain, "time step exceeds the horizon");
}

inline std::size_t sample_count(const SimOptions& o) {
  return static_cast<std::size_t>(std::floor(o.t_end / o.dt + 1e-9)) + 1;
}

}  // namespace detail

/// Step response with a zero-order hold, discretised through the matrix exponential of the
/// augmented [A B; 0 0] dt.
inline TimeSeries simulate_lti(const StateSpace& ss, const SimOptions& opt = {}) {
  detail::check_sim(opt);
  const int n = ss.order();
  TimeSeries ts;
  ts.solver = "lti";
  ts.dt = opt.dt;
  const std::size_t steps = detail::sample_count(opt);
  ts.t.resize(steps);
  ts.y.resize(steps);

  Eigen::MatrixXd ad = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd bd = Eigen::VectorXd::Zero(n);
  if (n > 0) {
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = ss.A * opt.dt;
    aug.topRightCorner(n, 1) = ss.B * opt.dt;
    const Eigen::MatrixXd e = aug.exp();
    ad = e.topLeftCorner(n, n);
    bd = e.topRightCorner(n, 1);

    const auto eig = ss.A.eigenvalues();
    double fastest = 0.0, slowest = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      fastest = std::max(fastest, std::abs(eig(i).real()));
      slowest = std::max(slowest, eig(i).real());
    }
    if (fastest * opt.dt > 0.5) ts.warnings.push_back("dt_coarse_for_fastest_pole");
    if (slowest >= 0.0) ts.warnings.push_back("unstable_or_marginal_poles");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double u = opt.amplitude;
  for (std::size_t k = 0; k < steps; ++k) {
    ts.t[k] = static_cast<double>(k) * opt.dt;
    ts.y[k] = (n > 0 ? ss.C.dot(x) : 0.0) + ss.D * u;
    if (n > 0) x = ad * x + bd * u;
  }
  return ts;
}

// ---------------------------------------------------------------------------------------------
// Closed loops

enum class Path { reference, disturbance };

inline const char* to_string(Path p) { return p == Path::reference ? "reference" : "disturbance"; }

/// T = L/(1+L) (reference to output) or S_u = G/(1+L) (input disturbance to output) from
/// rational plant and controller.
inline RationalTf closed_loop(const RationalTf& g, const RationalTf& c, bool negated, Path path) {
  const double sigma = negated ? -1.0 : 1.0;
  const RPoly gc_n = poly::scale(poly::mul(g.num(), c.num()), sigma);
  const RPoly den = poly::add(poly::mul(g.den(), c.den()), gc_n);
  if (path == Path::reference) return RationalTf(gc_n, den);
  return RationalTf(poly::mul(g.num(), c.den()), den);
}

inline RationalTf closed_loop_lti(const LoopSpec& loop, Path path, const BandSpec& band = {}) {
  return closed_loop(approximate_tf(loop.plant, band), approximate_tf(loop.controller, band), loop.negated, path);
}

/// Exact closed loop in w = s^(1/nu); implicit powers are rejected.
inline PseudoRational closed_loop_pseudo(const LoopSpec& loop, Path path) {
  int nu = 1;
  try {
    nu = commensurate_nu(loop.plant * loop.controller);
  } catch (const Error& e) {
    if (e.code() == Errc::not_commensurate)
      throw Error(Errc::unsupported, std::string("Grunwald-Letnikov solver needs commensurate factors: ") + e.what());
    throw;
  }
  const auto g = to_pseudo_rational(loop.plant, nu);
  const auto c = to_pseudo_rational(loop.controller, nu);
  const double sigma = loop.negated ? -1.0 : 1.0;
  const CPoly gc_n = poly::scale(poly::mul(g.num, c.num), sigma);
  PseudoRational out;
  out.nu = nu;
  out.den = poly::add(poly::mul(g.den, c.den), gc_n);
  out.num = path == Path::reference ? gc_n : poly::mul(g.num, c.den);
  return out;
}

/// Step response of num(w)/den(w), w = s^(1/nu), through a pseudo state-space realisation
/// D^(1/nu) x = A x + B u solved with the implicit Grunwald-Letnikov scheme over the full history.
inline TimeSeries simulate_gl(const PseudoRational& sys, const SimOptions& opt = {}) {
  detail::check_sim(opt);
  if (sys.nu < 1) throw Error(Errc::domain, "commensurate order must be 1/nu with nu >= 1");
  const auto ss = detail::canonical(poly::to_real(sys.num, 1e-10), poly::to_real(sys.den, 1e-10));
  const int n = ss.order();
  const double alpha = 1.0 / sys.nu;
  const double ha = std::pow(opt.dt, alpha);
  const std::size_t steps = detail::sample_count(opt);

  TimeSeries ts;
  ts.solver = "gl";
  ts.dt = opt.dt;
  ts.t.resize(steps);
  ts.y.resize(steps);

  // reversed weights: wr[steps - 1 - j] = w_j
  std::vector<double> wr(steps);
  {
    double w = 1.0;
    wr[steps - 1] = w;
    for (std::size_t j = 1; j < steps; ++j) {
      w *= 1.0 - (1.0 + alpha) / static_cast<double>(j);
      wr[steps - 1 - j] = w;
    }
  }

  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - ha * ss.A;
  const auto lu = m.partialPivLu();
  std::vector<double> hist(steps * static_cast<std::size_t>(n), 0.0);  // hist[k * n + i]
  const double u = opt.amplitude;
  Eigen::VectorXd acc(n), x(n);
  for (std::size_t k = 0; k < steps; ++k) {
    ts.t[k] = static_cast<double>(k) * opt.dt;
    // sum_{j=1..k} w_j x_{k-j} = sum_{l=0..k-1} w_{k-l} x_l
    acc.setZero();
    const double* wk = wr.data() + (steps - 1 - k);
    for (std::size_t l = 0; l < k; ++l) {
      const double wl = wk[l];
      const double* xl = hist.data() + l * static_cast<std::size_t>(n);
      for (int i = 0; i < n; ++i) acc[i] += wl * xl[i];
    }
    x = lu.solve(ha * u * ss.B - acc);
    for (int i = 0; i < n; ++i) hist[k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = x[i];
    ts.y[k] = (n > 0 ? ss.C.dot(x) : 0.0) + ss.D * u;
  }
  return ts;
}

// ---------------------------------------------------------------------------------------------
// Metrics

struct ResponseMetrics {
  double undershoot = 0.0;     ///< max(0, -min y)
  double overshoot = 0.0;      ///< max(0, max y - final)
  double settling_time = 0.0;  ///< entry time into the final 2% band; NaN if it never stays there
  bool settled = false;
  bool converged = false;      ///< last sample inside the band
  double band = 0.0;
};

/// The band is 2% of |final|; for a zero final value (disturbance path) 2% of the peak |y|.
inline ResponseMetrics response_metrics(const TimeSeries& ts, double final_value) {
  if (ts.y.empty()) throw Error(Errc::domain, "empty time series");
  ResponseMetrics m;
  double lo = ts.y.front(), hi = ts.y.front(), peak = 0.0;
  for (double v : ts.y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    peak = std::max(peak, std::abs(v));
  }
  m.undershoot = std::max(0.0, -lo);
  m.overshoot = std::max(0.0, hi - final_value);
  m.band = final_value != 0.0 ? 0.02 * std::abs(final_value) : 0.02 * peak;

  std::ptrdiff_t last_out = -1;
  for (std::size_t k = 0; k < ts.y.size(); ++k)
    if (std::abs(ts.y[k] - final_value) > m.band) last_out = static_cast<std::ptrdiff_t>(k);
  m.converged = std::abs(ts.y.back() - final_value) <= m.band;
  if (last_out < 0) {
    m.settled = true;
    m.settling_time = ts.t.front();
  } else if (static_cast<std::size_t>(last_out) + 1 < ts.y.size()) {
    m.settled = true;
    m.settling_time = ts.t[static_cast<std::size_t>(last_out) + 1];
  } else {
    m.settled = false;
    m.settling_time = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

}  // namespace fracshape
