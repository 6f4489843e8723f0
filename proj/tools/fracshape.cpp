// fracshape command line: Bode data, margins, stability, compensator construction,
// rational approximation, step responses and the comparison-example reproduction.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fracshape.hpp"
#include "fracshape/io.hpp"
#include "fracshape/reproduce.hpp"

namespace fs = std::filesystem;
using namespace fracshape;
using io::json;

namespace {

enum Exit { ok = 0, other = 1, parse = 2, singular = 3, assertion = 4, unsupported = 5 };

int exit_code(Errc e) {
  switch (e) {
    case Errc::parse: return parse;
    case Errc::singularity:
    case Errc::zero_magnitude: return singular;
    case Errc::unsupported:
    case Errc::not_commensurate:
    case Errc::improper: return unsupported;
    default: return other;
  }
}

void emit(const std::optional<std::string>& out, const std::string& content) {
  if (out)
    io::write_atomic(*out, content);
  else
    std::cout << content;
}

FactoredTf read_tf(const std::string& path) {
  const auto j = io::read_json(path);
  if (j.contains("kind")) return FactoredTf{{io::factor_from_json(j)}};
  return io::tf_from_json(j);
}

TargetKind target_from(const std::string& t) {
  if (t == "zero") return TargetKind::real;
  if (t == "zero-pair") return TargetKind::rhp_pair;
  if (t == "pole-pair") return TargetKind::stable_pair;
  throw Error(Errc::parse, "unknown target '" + t + "' (zero, zero-pair, pole-pair)");
}

Method method_from(const std::string& m) {
  if (m == "explicit") return Method::explicit_split;
  if (m == "implicit") return Method::implicit;
  if (m == "mirror") return Method::mirror;
  if (m == "full_io") return Method::full_io;
  throw Error(Errc::parse, "unknown method '" + m + "' (explicit, implicit, mirror, full_io)");
}

json internal_json(const InternalStabilityReport& r) {
  return {{"stable", r.stable},
          {"used_approximation", r.used_approximation},
          {"nu", r.nu},
          {"characteristic", io::stability_to_json(r.characteristic)},
          {"T", io::stability_to_json(r.T)},
          {"S_y", io::stability_to_json(r.Sy)},
          {"S_u", io::stability_to_json(r.Su)},
          {"C_S_y", io::stability_to_json(r.CSy)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional-order partial cancellation of RHP zeros and poles"};
  app.require_subcommand(1);

  // bode
  std::string bode_file;
  double bode_wmin = 1e-3, bode_wmax = 1e3;
  std::size_t bode_points = 601;
  std::optional<std::string> bode_out;
  auto* bode = app.add_subcommand("bode", "frequency response CSV (omega, dB, deg) of a transfer function");
  bode->add_option("tf", bode_file, "transfer function JSON")->required();
  bode->add_option("--wmin", bode_wmin, "lowest frequency [rad/s]");
  bode->add_option("--wmax", bode_wmax, "highest frequency [rad/s]");
  bode->add_option("--points", bode_points, "log-spaced grid points");
  bode->add_option("--out", bode_out, "output CSV (stdout if omitted)");

  // margins
  std::string margins_file;
  MarginOptions mopt;
  std::optional<std::string> margins_out;
  auto* marg = app.add_subcommand("margins", "crossover, phase and gain margin of a loop");
  marg->add_option("loop", margins_file, "loop JSON {plant, controller, negated}")->required();
  marg->add_option("--wmin", mopt.w_min);
  marg->add_option("--wmax", mopt.w_max);
  marg->add_option("--ppd", mopt.per_decade, "grid points per decade");
  marg->add_option("--out", margins_out);

  // stability
  std::string stab_file;
  std::optional<std::string> stab_out;
  auto* stab = app.add_subcommand("stability", "Matignon test of a pseudo polynomial or a transfer function");
  stab->add_option("file", stab_file, "{alpha|nu, coeffs} denominator or transfer function JSON")->required();
  stab->add_option("--out", stab_out);

  // compensate
  std::string comp_target = "zero", comp_method = "explicit";
  double comp_re = 1.0, comp_im = 0.0;
  int comp_nu = 2, comp_k = 1;
  std::optional<std::string> comp_plant, comp_ctrl;
  std::string comp_out = ".";
  bool comp_negated = false;
  auto* comp = app.add_subcommand("compensate", "split a zero or pole into compensator and residual");
  comp->add_option("--target", comp_target, "zero | zero-pair | pole-pair");
  comp->add_option("--z", comp_re, "real part of the zero/pole");
  comp->add_option("--zim", comp_im, "imaginary part of the zero/pole");
  comp->add_option("--nu", comp_nu, "order 1/nu of the pseudo factors");
  comp->add_option("--k", comp_k, "multiplicity sign, +1 zero, -1 pole");
  comp->add_option("--method", comp_method, "explicit | implicit | mirror | full_io");
  comp->add_option("--plant", comp_plant, "remaining plant G^ (JSON) for the internal-stability check");
  comp->add_option("--controller", comp_ctrl, "base controller C^ (JSON)");
  comp->add_flag("--negated", comp_negated, "analyse L = -G C");
  comp->add_option("--out", comp_out, "output directory");

  // approx
  std::string approx_file;
  BandSpec approx_band;
  std::optional<std::string> approx_out;
  auto* appr = app.add_subcommand("approx", "Oustaloup-based integer-order approximation");
  appr->add_option("tf", approx_file, "factor or transfer function JSON")->required();
  appr->add_option("--wlow", approx_band.w_low);
  appr->add_option("--whigh", approx_band.w_high);
  appr->add_option("--order", approx_band.order, "N (2N+1 corner pairs)");
  appr->add_option("--out", approx_out);

  // step
  std::string step_file, step_solver = "lti", step_path = "reference";
  SimOptions sim;
  BandSpec step_band;
  std::optional<std::string> step_out;
  auto* step = app.add_subcommand("step", "closed-loop step response CSV (t, y)");
  step->add_option("loop", step_file, "loop JSON")->required();
  step->add_option("--solver", step_solver, "lti | gl")->check(CLI::IsMember({"lti", "gl"}));
  step->add_option("--path", step_path, "reference | disturbance")->check(CLI::IsMember({"reference", "disturbance"}));
  step->add_option("--T", sim.t_end, "horizon [s]");
  step->add_option("--dt", sim.dt, "step [s]");
  step->add_option("--wlow", step_band.w_low);
  step->add_option("--whigh", step_band.w_high);
  step->add_option("--order", step_band.order);
  step->add_option("--out", step_out, "output CSV; metrics go next to it as <out>.metrics.json");

  // reproduce
  std::string rep_figure = "all";
  std::optional<std::string> rep_out;
  auto* rep = app.add_subcommand("reproduce", "regenerate the comparison-example data");
  rep->add_option("--figure", rep_figure, "bode | margins | step | all")
      ->check(CLI::IsMember({"bode", "margins", "step", "all"}));
  rep->add_option("--out", rep_out, "output directory (default $FRACSHAPE_OUT_DIR or ./fracshape_out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : parse;
  }

  try {
    if (*bode) {
      const auto tf = read_tf(bode_file);
      if (bode_points < 2) throw Error(Errc::domain, "need at least 2 points");
      emit(bode_out, io::bode_csv(eval_freq(tf, log_grid(bode_wmin, bode_wmax, bode_points))));
    } else if (*marg) {
      const auto loop = io::loop_from_json(io::read_json(margins_file));
      emit(margins_out, io::margins_to_json(margins(loop, mopt)).dump(2) + "\n");
    } else if (*stab) {
      const auto j = io::read_json(stab_file);
      json out;
      if (j.contains("coeffs")) {
        CPoly c;
        try {
          for (const auto& x : j.at("coeffs")) c.push_back(io::complex_from_json(x));
        } catch (const json::exception& e) {
          throw Error(Errc::parse, std::string("malformed coefficients: ") + e.what());
        }
        out = io::stability_to_json(matignon_stable(PseudoPolynomial(io::order_from_json(j), c)));
      } else {
        out = io::stability_to_json(transfer_stability(to_pseudo_rational(io::tf_from_json(j))));
      }
      emit(stab_out, out.dump(2) + "\n");
    } else if (*comp) {
      const auto plan = plan_cancellation(target_from(comp_target), cplx{comp_re, comp_im}, comp_k, comp_nu,
                                          method_from(comp_method));
      const fs::path dir = comp_out;
      io::write_json(dir / "controller.json", io::tf_to_json(FactoredTf{{plan.compensator}}));
      io::write_json(dir / "residual.json", io::tf_to_json(plan.residual));
      io::write_json(dir / "target.json", io::tf_to_json(FactoredTf{{plan.target_term}}));
      json summary = {{"target", to_string(plan.target)},
                      {"method", to_string(plan.method)},
                      {"z", io::complex_to_json(plan.z)},
                      {"k", plan.k},
                      {"nu", plan.nu},
                      {"compensator", io::factor_to_json(plan.compensator)},
                      {"residual", io::tf_to_json(plan.residual)}};
      if (comp_plant) {
        const auto g = read_tf(*comp_plant);
        const auto c = comp_ctrl ? read_tf(*comp_ctrl) : FactoredTf{};
        summary["internal_stability"] = internal_json(internal_stability(plan, g, c, comp_negated));
      }
      io::write_json(dir / "plan.json", summary);
      std::cout << summary.dump(2) << "\n";
    } else if (*appr) {
      emit(approx_out, io::rational_to_json(approximate_tf(read_tf(approx_file), approx_band)).dump(2) + "\n");
    } else if (*step) {
      const auto loop = io::loop_from_json(io::read_json(step_file));
      const Path path = step_path == "reference" ? Path::reference : Path::disturbance;
      TimeSeries ts = step_solver == "gl" ? simulate_gl(closed_loop_pseudo(loop, path), sim)
                                          : simulate_lti(to_state_space(closed_loop_lti(loop, path, step_band)), sim);
      ts.scenario = to_string(path);
      emit(step_out, io::timeseries_csv(ts));
      if (step_out) {
        auto m = io::metrics_to_json(response_metrics(ts, path == Path::reference ? 1.0 : 0.0));
        m["solver"] = ts.solver;
        m["dt"] = ts.dt;
        m["warnings"] = ts.warnings;
        io::write_json(*step_out + ".metrics.json", m);
      }
      for (const auto& w : ts.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*rep) {
      reproduce::Options o;
      o.figure = reproduce::figure_from_string(rep_figure);
      if (rep_out) {
        o.out = *rep_out;
      } else if (const char* env = std::getenv("FRACSHAPE_OUT_DIR")) {
        o.out = env;
      } else {
        o.out = "fracshape_out";
      }
      const auto r = reproduce::run(o);
      for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
      std::cout << "wrote " << r.files.size() << " files to " << o.out.string() << "\n";
      if (!r.ok()) {
        std::cerr << "reproduction checks failed:";
        for (const auto& c : r.checks)
          if (!c.pass) std::cerr << " [" << c.name << "]";
        std::cerr << "\n";
        return assertion;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return other;
  }
  return ok;
}
