#include <catch_amalgamated.hpp>

#include <random>

#include "fracshape.hpp"

using namespace fracshape;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

cplx at(const Factor& f, double w) { return evaluate(f, cplx{0.0, w}); }

}  // namespace

TEST_CASE("expand_real, z = 1, nu = 2") {
  const auto e = expand_real(1.0, 2, 1);
  const auto& q = std::get<PseudoPoly>(e.q);
  REQUIRE(q.poly.coeffs().size() == 2);
  CHECK_THAT(q.poly.coeffs()[0].real(), WithinAbs(1.0, 1e-15));
  CHECK_THAT(q.poly.coeffs()[1].real(), WithinAbs(1.0, 1e-15));
  CHECK(q.k == 1);
  const auto& x = std::get<ExplicitX>(e.x);
  CHECK(x.alpha.nu == 2);
  for (double w : {0.1, 1.0, 10.0}) {
    const cplx prod = at(e.x, w) * at(e.q, w);
    CHECK(std::abs(prod - cplx{1.0, -w}) <= 1e-12 * std::abs(cplx{1.0, -w}));
  }
}

TEST_CASE("expand_real, z = 1, nu = 3: Q roots are the non-trivial cube roots of unity") {
  const auto e = expand_real(1.0, 3, 1);
  const auto rep = matignon_stable(std::get<PseudoPoly>(e.q).poly);
  CHECK(rep.stable);
  REQUIRE(rep.roots.size() == 2);
  for (const auto& r : rep.roots) {
    CHECK_THAT(std::abs(principal_arg(r)), WithinAbs(2.0 * pi / 3.0, 1e-12));
    CHECK_THAT(std::abs(r), WithinAbs(1.0, 1e-12));
  }
  // margin over the 30 deg sector edge
  CHECK_THAT(rep.min_margin, WithinAbs(deg2rad(120.0 - 30.0), 1e-12));
}

TEST_CASE("factorisation identities on random zeros") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> logmag(-2.0, 2.0), ang(-0.49 * pi, 0.49 * pi);
  std::uniform_int_distribution<int> nud(2, 10);
  const auto grid = log_grid(1e-3, 1e3, 100);
  for (int trial = 0; trial < 200; ++trial) {
    const double mag = std::pow(10.0, logmag(rng));
    const int nu = nud(rng);
    const int k = trial % 2 ? 1 : -1;
    // real zero
    {
      const auto e = expand_real(mag, nu, k);
      for (double w : grid) {
        const cplx zk = std::pow(cplx{1.0, -w / mag}, k);
        CHECK(rel_err(at(e.x, w) * at(e.q, w), zk) < 1e-10);
      }
    }
    // conjugate pair
    {
      const cplx zc = std::polar(mag, ang(rng));
      if (std::abs(zc.imag()) < 1e-6) continue;
      const auto e = expand_pair(zc, nu, k);
      CHECK(std::get<PseudoPoly>(e.q).poly.is_real());
      for (double w : grid) {
        const cplx s{0.0, w};
        const cplx z2 = std::pow((1.0 - s / zc) * (1.0 - s / std::conj(zc)), k);
        CHECK(rel_err(at(e.x, w) * at(e.q, w), z2) < 1e-10);
      }
    }
  }
}

TEST_CASE("explicit characteristic points") {
  const auto cp = explicit_char_points(1.0, 0.5);
  CHECK(cp.has_minimum);
  CHECK_THAT(cp.omega_min, WithinAbs(0.5, 1e-15));
  CHECK_THAT(cp.magnitude_min, WithinAbs(0.70711, 1e-5));
  CHECK_THAT(rad2deg(cp.phase_min), WithinAbs(-45.0, 1e-12));
  CHECK_THAT(rad2deg(cp.phase_at_z), WithinAbs(-67.5, 1e-12));

  CHECK_FALSE(explicit_char_points(1.0, 1.0).has_minimum);

  for (int nu = 2; nu <= 10; ++nu) {
    const double a = 1.0 / nu;
    const double z = 0.3 * nu;
    const auto c = explicit_char_points(z, a);
    const Factor x = ExplicitX{z, CommensurateOrder::from_nu(nu), 1, false};
    const cplx v = at(x, c.omega_min);
    CHECK_THAT(std::abs(v), WithinAbs(c.magnitude_min, 1e-10));
    CHECK_THAT(std::arg(v), WithinAbs(c.phase_min, 1e-10));
    CHECK_THAT(std::arg(at(x, z)), WithinAbs(c.phase_at_z, 1e-9));
    // implicit counterpart coincides in phase at omega = z
    const auto t = implicit_terms(z, nu, 1, false);
    CHECK_THAT(std::arg(t.x_tilde(cplx{0.0, z})), WithinAbs(c.phase_at_z, 1e-9));
    // the minimum is a global minimum of |X|
    for (double w : log_grid(1e-3 * z, 1e3 * z, 400)) CHECK(std::abs(at(x, w)) >= c.magnitude_min - 1e-12);
  }
}

TEST_CASE("implicit terms") {
  const auto t = implicit_terms(1.0, 2, 1, false);
  const cplx v = t.x_tilde(cplx{0.0, 1.0});
  CHECK_THAT(std::abs(v), WithinAbs(std::pow(2.0, 0.25), 1e-12));
  CHECK_THAT(rad2deg(std::arg(v)), WithinAbs(-67.5, 1e-10));

  // closed forms for magnitude and phase
  for (int nu : {2, 3, 5}) {
    for (int k : {1, -1}) {
      const double a = 1.0 / nu, z = 2.0;
      const auto tt = implicit_terms(z, nu, k, false);
      for (double w : log_grid(1e-2, 1e2, 50)) {
        const cplx xv = tt.x_tilde(cplx{0.0, w});
        CHECK_THAT(std::abs(xv), WithinRel(std::pow(1.0 + (w / z) * (w / z), k * a / 2.0), 1e-10));
        const double ph = k * std::atan(-w / z) - k * (1.0 - a) * std::atan(w / z);
        CHECK_THAT(std::arg(xv), WithinAbs(ph, 1e-10));
      }
    }
  }

  // nu -> infinity: Q~ tends to the mirror D
  const auto big = implicit_terms(1.0, 1000, 1, false);
  CHECK_THAT(std::abs(at(big.q_tilde, 1.0)), WithinAbs(std::pow(2.0, 999.0 / 2000.0), 1e-12));
  CHECK_THAT(std::abs(at(big.q_tilde, 1.0)), WithinAbs(std::sqrt(2.0), 1e-3));

  try {
    implicit_terms(2.0, 2, 1, true);
    FAIL("expected degenerate pair");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_pair);
  }
}

TEST_CASE("conjugate pair forms") {
  const cplx z = std::polar(1.0, pi / 3.0);
  const auto e = expand_pair(z, 2, 1);
  // X = s - sqrt(3) s^(1/2) + 1
  const auto pr = to_pseudo_rational(FactoredTf{{e.x}}, 2);
  REQUIRE(pr.num.size() == 3);
  CHECK_THAT(pr.num[0].real(), WithinAbs(1.0, 1e-12));
  CHECK_THAT(pr.num[1].real(), WithinAbs(-std::sqrt(3.0), 1e-12));
  CHECK_THAT(pr.num[2].real(), WithinAbs(1.0, 1e-12));
  for (const auto& c : pr.num) CHECK(std::abs(c.imag()) < 1e-12);

  // Q pair roots at arg +-150 deg
  const auto rep = matignon_stable(std::get<PseudoPoly>(e.q).poly);
  CHECK(rep.stable);
  for (const auto& r : rep.roots) CHECK_THAT(std::abs(principal_arg(r)), WithinAbs(deg2rad(150.0), 1e-10));

  // closed form of the pair X with omega0, phi
  for (int nu : {2, 3, 4}) {
    const cplx zz = std::polar(2.0, 1.1);
    const auto ep = expand_pair(zz, nu, 1);
    const double a = 1.0 / nu, w0 = std::abs(zz), phi = std::arg(zz);
    for (double w : log_grid(1e-2, 1e2, 40)) {
      const cplx s{0.0, w};
      const cplx sa = complex_power(s, a);
      const cplx closed = std::pow(w0, -2.0 * a) * (sa * sa - 2.0 * sa * std::pow(w0, a) * std::cos(phi * a) +
                                                    std::pow(w0, 2.0 * a));
      CHECK(rel_err(at(ep.x, w), closed) < 1e-10);
    }
  }

  // worst case arg z -> pi/2
  const auto worst = expand_pair(std::polar(1.0, pi / 2.0 - 1e-9), 4, 1);
  CHECK(matignon_stable(std::get<PseudoPoly>(worst.q).poly).min_margin > 0.0);

  try {
    expand_pair(cplx{-1.0, 1.0}, 2, 1);
    FAIL("expected not_rhp");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::not_rhp);
  }
}

TEST_CASE("mirror compensation") {
  const Factor d = mirror(1.0, 1);
  CHECK_THAT(std::abs(at(d, 1.0)), WithinAbs(std::sqrt(2.0), 1e-14));
  CHECK_THAT(rad2deg(std::arg(at(d, 1.0))), WithinAbs(45.0, 1e-12));
  CHECK_THAT(std::abs(at(d, 1e-9)), WithinAbs(1.0, 1e-12));

  const auto plan = plan_cancellation(TargetKind::real, 1.0, 1, 2, Method::mirror);
  const cplx allpass = plan.residual(cplx{0.0, 1.0});
  CHECK_THAT(std::abs(allpass), WithinAbs(1.0, 1e-14));
  CHECK_THAT(rad2deg(std::arg(allpass)), WithinAbs(-90.0, 1e-12));
  for (double w : log_grid(1e-3, 1e3, 100)) CHECK_THAT(std::abs(plan.residual(cplx{0.0, w})), WithinAbs(1.0, 1e-12));

  // pair mirror: D2 = w0^-2 (s^2 + 2 s w0 cos phi + w0^2)
  const cplx z = std::polar(2.0, 0.7);
  const Factor d2 = mirror(z, 1);
  for (double w : {0.1, 1.0, 7.0}) {
    const cplx s{0.0, w};
    const cplx closed = (s * s + 2.0 * s * 2.0 * std::cos(0.7) + 4.0) / 4.0;
    CHECK(rel_err(at(d2, w), closed) < 1e-12);
  }
}

TEST_CASE("stable pole pair cancellation") {
  const cplx p = std::polar(1.0, 11.0 * pi / 20.0);
  const auto c = stable_pair_cancel(p, 2);
  CHECK_THAT(rad2deg(principal_arg(c.principal_root)), WithinAbs(49.5, 1e-10));
  CHECK(rad2deg(principal_arg(c.principal_root)) > 45.0);
  REQUIRE(c.remaining_roots.size() == 2);
  for (const auto& r : c.remaining_roots) CHECK_THAT(rad2deg(std::abs(principal_arg(r))), WithinAbs(130.5, 1e-9));

  // P X_p = Q_p^-1 on a grid
  const auto plan = plan_cancellation(TargetKind::stable_pair, p, -1, 2, Method::explicit_split);
  for (double w : log_grid(1e-2, 1e2, 100)) {
    const cplx s{0.0, w};
    const cplx pv = 1.0 / ((1.0 - s / p) * (1.0 - s / std::conj(p)));
    CHECK(rel_err(pv * evaluate(plan.compensator, s), plan.residual(s)) < 1e-10);
  }

  // implicit forms
  const auto imp = stable_pair_implicit(p, 3);
  for (double w : {0.3, 3.0}) {
    const cplx s{0.0, w};
    const cplx base = (1.0 - s / p) * (1.0 - s / std::conj(p));
    CHECK(rel_err(evaluate(imp.x_tilde, s), complex_power(base, 1.0 / 3.0)) < 1e-12);
    CHECK(rel_err(evaluate(imp.q_tilde, s), complex_power(base, 2.0 / 3.0)) < 1e-12);
  }

  // oscillation warning for a very lightly damped pair and larger nu
  const auto light = stable_pair_cancel(std::polar(1.0, 0.51 * pi), 4);
  CHECK(light.min_remaining_arg > pi / 8.0);

  try {
    stable_pair_cancel(cplx{1.0, 1.0}, 2);
    FAIL("expected not_stable_pole");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_stable_pole);
  }
}

TEST_CASE("asymptotics") {
  SECTION("pseudo zero, alpha 1/2") {
    const auto a = asymptotics(ExplicitX{1.0, CommensurateOrder::from_nu(2), 1, false});
    CHECK_THAT(a.high_slope, WithinAbs(10.0, 1e-12));
    CHECK_THAT(a.high_phase, WithinAbs(-135.0, 1e-10));
  }
  SECTION("pair of pseudo poles, alpha 1/4") {
    const auto a = asymptotics(ExplicitX{std::polar(1.0, 1.0), CommensurateOrder::from_nu(4), -1, true});
    CHECK_THAT(a.high_slope, WithinAbs(-10.0, 1e-12));
    CHECK_THAT(a.high_phase, WithinAbs(315.0, 1e-10));
  }
  SECTION("classical RHP zero") {
    const auto a = asymptotics(ExplicitX{1.0, CommensurateOrder::from_nu(1), 1, false});
    CHECK_THAT(a.high_slope, WithinAbs(20.0, 1e-12));
    CHECK_THAT(a.high_phase, WithinAbs(-90.0, 1e-10));
  }
  SECTION("implicit X~, k = 1") {
    for (int nu : {2, 4}) {
      const double alpha = 1.0 / nu;
      const auto t = implicit_terms(1.0, nu, 1, false);
      const auto a = asymptotics(t.x_tilde);
      CHECK_THAT(a.high_slope, WithinAbs(20.0 * alpha, 1e-12));
      CHECK_THAT(a.high_phase, WithinAbs(-180.0 + 90.0 * alpha, 1e-10));
    }
  }
  SECTION("finite-difference slopes agree") {
    const std::vector<Factor> fs{ExplicitX{2.0, CommensurateOrder::from_nu(2), 1, false},
                                 ExplicitX{std::polar(1.5, 0.9), CommensurateOrder::from_nu(2), -1, true},
                                 ImplicitPower{1.0, 0.5, false, true}, ImplicitPower{std::polar(1.0, 0.4), -0.75, true, false}};
    for (const auto& f : fs) {
      const auto a = asymptotics(f);
      const double w = 1e3 * std::visit([](const auto& v) -> double {
        if constexpr (requires { v.z; }) return std::abs(v.z);
        return 1.0;
      }, f);
      const double slope = 20.0 * std::log10(std::abs(at(f, w * 1.1)) / std::abs(at(f, w))) / std::log10(1.1);
      CHECK_THAT(slope, WithinAbs(a.high_slope, 0.5));
      // phase of the continuous curve at high frequency approaches the limit
      const auto fr = eval_freq(FactoredTf{{f}}, log_grid_per_decade(1e-4, 1e6, 100));
      CHECK_THAT(fr.phase_deg.back(), WithinAbs(a.high_phase, 2.0));
    }
  }
  SECTION("unsupported factor") {
    try {
      asymptotics(Factor{Monomial{0.5}});
      FAIL("expected unsupported");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unsupported);
    }
  }
}

TEST_CASE("cancellation plans") {
  SECTION("explicit") {
    const auto plan = plan_cancellation(TargetKind::real, 1.0, 1, 2, Method::explicit_split);
    const auto& q = std::get<PseudoPoly>(plan.compensator);
    CHECK(q.k == -1);
    // compensator (1 + s^(1/2))^-1
    CHECK(rel_err(evaluate(plan.compensator, cplx{0.0, 1.0}), 1.0 / (1.0 + complex_power(cplx{0.0, 1.0}, 0.5))) < 1e-14);
    CHECK(std::holds_alternative<ExplicitX>(plan.residual.factors.at(0)));
  }
  SECTION("every method leaves target * compensator == residual") {
    struct Case {
      TargetKind t;
      cplx z;
      int k;
    };
    const std::vector<Case> cases{{TargetKind::real, 2.0, 1},
                                  {TargetKind::real, 0.5, -1},
                                  {TargetKind::rhp_pair, std::polar(1.0, 0.8), 1},
                                  {TargetKind::rhp_pair, std::polar(3.0, -1.2), -1},
                                  {TargetKind::stable_pair, std::polar(1.0, 1.9), -1}};
    for (const auto& c : cases) {
      for (Method m : {Method::explicit_split, Method::implicit, Method::mirror, Method::full_io}) {
        const auto plan = plan_cancellation(c.t, c.z, c.k, 3, m);
        for (double w : log_grid(1e-2, 1e2, 30)) {
          const cplx s{0.0, w};
          const cplx lhs = evaluate(plan.target_term, s) * evaluate(plan.compensator, s);
          CHECK(rel_err(lhs, plan.residual(s)) < 1e-10);
        }
      }
    }
  }
  SECTION("full IO cancellation leaves nothing") {
    const auto plan = plan_cancellation(TargetKind::real, 1.0, -1, 2, Method::full_io);
    CHECK(plan.residual.factors.empty());
  }
  SECTION("bad arguments") {
    CHECK_THROWS_AS(plan_cancellation(TargetKind::real, -1.0, 1, 2, Method::explicit_split), Error);
    CHECK_THROWS_AS(plan_cancellation(TargetKind::real, 1.0, 2, 2, Method::explicit_split), Error);
    CHECK_THROWS_AS(plan_cancellation(TargetKind::real, 1.0, 1, 1, Method::explicit_split), Error);
  }
}
