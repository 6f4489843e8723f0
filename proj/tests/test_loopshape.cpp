#include <catch_amalgamated.hpp>

#include "fracshape.hpp"

using namespace fracshape;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const example::Controllers& controllers() {
  static const auto c = example::build_example_controllers();
  return c;
}

}  // namespace

TEST_CASE("sensitivities") {
  const auto grid = log_grid_per_decade(1e-3, 1e3, 50);
  SECTION("open controller") {
    const LoopSpec loop{example::plant(), FactoredTf{{Gain{0.0}}}, true};
    const auto s = sensitivities(loop, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(std::abs(s.T.values[i]) == 0.0);
      CHECK(s.Sy.values[i] == cplx{1.0, 0.0});
      CHECK(std::abs(s.Su.values[i] - example::plant()(cplx{0.0, grid[i]})) < 1e-15);
    }
  }
  SECTION("integral action drives T to one at DC") {
    const auto loop = example::loop(controllers(), 1);
    const auto f = sensitivities(loop);
    CHECK_THAT(std::abs(f.T(cplx{0.0, 1e-6})), WithinAbs(1.0, 1e-5));
  }
  SECTION("T + S_y = 1 on every example loop") {
    for (int i = 1; i <= 4; ++i) {
      const auto s = sensitivities(example::loop(controllers(), i), grid);
      for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(s.T.values[k] + s.Sy.values[k] - 1.0) <= 1e-12);
    }
  }
  SECTION("S_y of L3 at the crossover") {
    const auto loop = example::loop(controllers(), 3);
    const cplx l = loop(cplx{0.0, 0.54});
    CHECK_THAT(std::abs(l), WithinAbs(1.0, 1e-10));
    const double oracle = 1.0 / std::abs(1.0 + std::polar(1.0, std::arg(l)));
    const auto f = sensitivities(loop);
    CHECK_THAT(std::abs(f.Sy(cplx{0.0, 0.54})), WithinRel(oracle, 1e-12));
  }
  SECTION("1 + L = 0 is a singularity naming the frequency") {
    const LoopSpec loop{FactoredTf{{Gain{-1.0}}}, FactoredTf{}, false};
    const std::vector<double> g{0.5, 2.0};
    try {
      sensitivities(loop, g);
      FAIL("expected singularity");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::singularity);
      CHECK(std::string(e.what()).find("omega") != std::string::npos);
    }
  }
}

TEST_CASE("margins") {
  SECTION("example L1") {
    const auto m = margins(example::loop(controllers(), 1));
    CHECK_THAT(m.omega_c, WithinAbs(0.54, 1e-6));
    CHECK_THAT(m.gain_margin_db, WithinAbs(1.26, 0.05));
    CHECK_THAT(m.omega_pi, WithinAbs(2.88, 0.05));
    // direct evaluation: angle L1(j0.54) = -96.5 deg
    CHECK_THAT(m.phase_margin_deg, WithinAbs(83.5, 0.1));
    CHECK(m.flags.empty());
  }
  SECTION("all example loops") {
    for (int i = 1; i <= 4; ++i) {
      const auto m = margins(example::loop(controllers(), i));
      CHECK_THAT(m.omega_c, WithinAbs(0.54, 5e-3));
      CHECK(m.phase_margin_deg > 55.0);
      if (i > 1) CHECK(m.gain_margin_db > 3.0);
      // refined crossing: |L| = 1 and angle L = -180 deg
      const auto loop = example::loop(controllers(), i);
      CHECK_THAT(std::abs(loop(cplx{0.0, m.omega_c})), WithinAbs(1.0, 1e-6));
      CHECK_THAT(std::abs(std::remainder(rad2deg(std::arg(loop(cplx{0.0, m.omega_pi}))) + 180.0, 360.0)),
                 WithinAbs(0.0, 1e-6));
    }
  }
  SECTION("pure integrator") {
    const LoopSpec loop{FactoredTf{{IoRational{{1.0}, {0.0, 1.0}}}}, FactoredTf{}, false};
    const auto m = margins(loop);
    CHECK_THAT(m.omega_c, WithinRel(1.0, 1e-6));
    CHECK_THAT(m.phase_margin_deg, WithinAbs(90.0, 1e-6));
    CHECK(std::isinf(m.gain_margin_db));
    REQUIRE(m.flags.size() == 1);
    CHECK(m.flags[0] == "no_phase_crossing");
  }
  SECTION("no crossover") {
    const LoopSpec loop{FactoredTf{{Gain{0.5}}}, FactoredTf{}, false};
    try {
      margins(loop);
      FAIL("expected no_crossover");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::no_crossover);
      CHECK(std::string(e.what()).find("widen") != std::string::npos);
    }
  }
  SECTION("gain scaling") {
    for (int i = 1; i <= 4; ++i) {
      const double k = controllers().gains[i - 1];
      const auto unit = pi_controller(1.0, example::tau) * example::compensator(i);
      double prev_wc = 0.0, prev_pm = 1e9;
      const double wpi0 = margins(LoopSpec{example::plant(), FactoredTf{{Gain{k}}} * unit, true}).omega_pi;
      for (double f : {0.5, 0.7, 1.0, 1.4, 2.0}) {
        const auto m = margins(LoopSpec{example::plant(), FactoredTf{{Gain{f * k}}} * unit, true});
        CHECK_THAT(m.omega_pi, WithinRel(wpi0, 1e-6));
        CHECK(m.omega_c > prev_wc);
        CHECK(m.phase_margin_deg < prev_pm);
        prev_wc = m.omega_c;
        prev_pm = m.phase_margin_deg;
      }
    }
  }
}

TEST_CASE("tune_gain") {
  const auto unit1 = pi_controller(1.0, example::tau);
  const auto t = tune_gain(LoopSpec{example::plant(), unit1, true}, example::crossover);
  CHECK_THAT(t.k, WithinRel(0.680, 5e-3));
  CHECK(std::abs(t.residual) <= 1e-10);
  // closed-form cross-check: 1 / (|G| |PI|) at 0.54
  const cplx s{0.0, 0.54};
  const double oracle = 1.0 / (std::abs((s - 1.0) / ((1.0 + s / 2.0) * (1.0 + s / 3.0))) * std::abs((2.0 * s + 1.0) / (2.0 * s)));
  CHECK_THAT(t.k, WithinRel(oracle, 1e-12));

  const auto unit4 = pi_controller(1.0, example::tau) * example::compensator(4);
  CHECK_THAT(tune_gain(LoopSpec{example::plant(), unit4, true}, 0.54).k, WithinRel(0.7245, 5e-3));

  // homogeneity: doubling the plant halves k
  const auto t2 = tune_gain(LoopSpec{example::plant() * FactoredTf{{Gain{2.0}}}, unit1, true}, 0.54);
  CHECK_THAT(t2.k, WithinRel(t.k / 2.0, 1e-12));

  try {
    tune_gain(LoopSpec{FactoredTf{{Gain{0.0}}}, unit1, false}, 0.54);
    FAIL("expected zero_magnitude");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::zero_magnitude);
  }
}

TEST_CASE("example controllers") {
  const auto& c = controllers();
  for (int i = 0; i < 4; ++i) {
    CHECK_THAT(c.gains[i], WithinRel(example::reported_gains[i], 5e-3));
    CHECK_THAT(std::abs(example::loop(c, i + 1)(cplx{0.0, 0.54})), WithinAbs(1.0, 1e-8));
  }
  // structure: C2 = C1 (1 + s)^-1, C3 = C1 (1 + s^(1/2))^-1, C4 = C1 (1 + s)^-1/2
  for (double w : {0.1, 1.0, 10.0}) {
    const cplx s{0.0, w};
    const cplx c1 = c.c[0](s) / c.gains[0];
    CHECK(std::abs(c.c[1](s) / c.gains[1] - c1 / (1.0 + s)) < 1e-12);
    CHECK(std::abs(c.c[2](s) / c.gains[2] - c1 / (1.0 + complex_power(s, 0.5))) < 1e-12);
    CHECK(std::abs(c.c[3](s) / c.gains[3] - c1 * complex_power(1.0 + s, -0.5)) < 1e-12);
  }
}

TEST_CASE("internal stability") {
  SECTION("stable plant, zero controller") {
    const auto plan = plan_cancellation(TargetKind::real, 1.0, 1, 2, Method::explicit_split);
    const FactoredTf g{{IoRational{{1.0}, {1.0, 1.0}}}};
    const auto r = internal_stability(plan, g, FactoredTf{{Gain{0.0}}});
    CHECK(r.stable);
    CHECK_FALSE(r.used_approximation);
  }
  SECTION("example C3 loop in w = s^(1/2)") {
    const auto plan = plan_cancellation(TargetKind::real, 1.0, 1, 2, Method::explicit_split);
    const auto chat = pi_controller(controllers().gains[2], example::tau);
    const auto r = internal_stability(plan, example::plant_hat(), chat, true);
    CHECK(r.nu == 2);
    CHECK(r.characteristic.stable);
    CHECK(r.stable);
    // oracle: characteristic polynomial built by hand, roots by companion matrix.
    // L = -k (1 - w)(2 w^2 + 1) / (2 w^2 (1 + w^2/2)(1 + w^2/3)) with w = s^(1/2), G^ = -1/(...)
    const double k = controllers().gains[2];
    const CPoly den = poly::scale(poly::mul(CPoly{0.0, 0.0, 2.0}, poly::mul(CPoly{1.0, 0.0, 0.5}, CPoly{1.0, 0.0, 1.0 / 3.0})), 1.0);
    const CPoly num = poly::scale(poly::mul(CPoly{1.0, -1.0}, CPoly{1.0, 0.0, 2.0}), k);
    const auto ch = poly::add(den, num);  // 1 + L = 0 with the sign absorbed: -G^ = +1/(...)
    const auto rep = sector_test(poly::roots(ch), CommensurateOrder::from_nu(2));
    CHECK(rep.stable);
    CHECK_THAT(rep.min_margin, WithinAbs(r.characteristic.min_margin, 1e-8));
    // the IO check through the Oustaloup approximation agrees
    const auto t = closed_loop_lti(example::loop(controllers(), 3), Path::reference);
    for (const auto& p : t.poles()) CHECK(p.real() < 0.0);
  }
  SECTION("implicit plan goes through the approximation") {
    const auto plan = plan_cancellation(TargetKind::real, 1.0, 1, 2, Method::implicit);
    const auto chat = pi_controller(controllers().gains[3], example::tau);
    const auto r = internal_stability(plan, example::plant_hat(), chat, true);
    CHECK(r.used_approximation);
    CHECK(r.stable);
  }
  SECTION("full IO cancellation of an unstable pole") {
    // G = (1 - s)^-1, C = -2 (1 - s): T = 2 is fine, S_u = -1/(1 - s) is not.
    // Partial: 1 + L = (-1 - w)/(1 - w), closed-loop root at w = -1.
    const FactoredTf ghat{{Gain{1.0}}};
    const FactoredTf chat{{Gain{-2.0}}};
    const auto full = internal_stability(plan_cancellation(TargetKind::real, 1.0, -1, 2, Method::full_io), ghat, chat);
    CHECK(full.T.stable);
    CHECK_FALSE(full.Su.stable);
    CHECK_FALSE(full.stable);
    const auto part =
        internal_stability(plan_cancellation(TargetKind::real, 1.0, -1, 2, Method::explicit_split), ghat, chat);
    CHECK(part.T.stable);
    CHECK(part.Su.stable);
    CHECK(part.stable);
    CHECK(part.characteristic.stable);
  }
  SECTION("mixed orders are rejected for explicit plans") {
    const auto plan = plan_cancellation(TargetKind::real, 1.0, 1, 2, Method::explicit_split);
    const FactoredTf odd{{ImplicitPower{2.0, -0.5, false, true}}};
    try {
      internal_stability(plan, odd, FactoredTf{});
      FAIL("expected not_commensurate");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::not_commensurate);
    }
  }
}
