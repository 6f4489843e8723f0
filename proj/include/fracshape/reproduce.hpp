#pragma once

// The comparison example end to end: controller gains, margins, Bode data, step and
// disturbance responses, and a Grunwald-Letnikov cross-check of the C3 loop.

#include <array>
#include <filesystem>
#include <future>
#include <string>
#include <vector>

#include "fracshape/io.hpp"
#include "fracshape/loopshape.hpp"
#include "fracshape/simtime.hpp"

namespace fracshape::reproduce {

enum class Figure { bode, margins, step, all };

inline Figure figure_from_string(const std::string& s) {
  if (s == "bode") return Figure::bode;
  if (s == "margins") return Figure::margins;
  if (s == "step") return Figure::step;
  if (s == "all") return Figure::all;
  throw Error(Errc::parse, "unknown figure '" + s + "' (expected bode, margins, step or all)");
}

struct Options {
  std::filesystem::path out = "out";
  Figure figure = Figure::all;
  BandSpec band{1e-3, 1e3, 5};
  double t_end = 60.0;
  double dt = 1e-3;
  double gl_t_end = 30.0;
  MarginOptions margin_opts{};
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Result {
  std::vector<Check> checks;
  std::vector<std::filesystem::path> files;
  std::array<double, 4> gains{};
  std::array<MarginsReport, 4> margins{};
  std::array<ResponseMetrics, 4> step_metrics{};
  std::array<ResponseMetrics, 4> disturbance_metrics{};
  double gl_deviation = 0.0;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace detail {

inline std::string num(double v) { return io::fmt9(v); }

inline void check(Result& r, std::string name, bool pass, std::string detail) {
  r.checks.push_back({std::move(name), pass, std::move(detail)});
}

inline std::string loop_name(int i) { return "L" + std::to_string(i); }
inline std::string ctrl_name(int i) { return "C" + std::to_string(i); }

inline void run_margins(const Options& o, const example::Controllers& c, Result& r) {
  io::json j;
  j["crossover_target"] = example::crossover;
  j["tau"] = example::tau;
  j["negated"] = true;
  io::json loops = io::json::array();
  for (int i = 1; i <= 4; ++i) {
    const double k = c.gains[i - 1], ref = example::reported_gains[i - 1];
    const double rel = std::abs(k - ref) / ref;
    check(r, "gain " + ctrl_name(i), rel <= 5e-3, "k = " + num(k) + ", reported " + num(ref) + ", rel " + num(rel));

    const auto m = margins(example::loop(c, i), o.margin_opts);
    r.margins[i - 1] = m;
    check(r, "crossover " + loop_name(i), std::abs(m.omega_c - example::crossover) <= 5e-3,
          "omega_c = " + num(m.omega_c));
    check(r, "phase margin " + loop_name(i), m.phase_margin_deg > 55.0, "PM = " + num(m.phase_margin_deg) + " deg");
    if (i == 1) {
      check(r, "gain margin L1", std::abs(m.gain_margin_db - 1.26) <= 0.05, "GM = " + num(m.gain_margin_db) + " dB");
      check(r, "phase crossover L1", std::abs(m.omega_pi - 2.88) <= 0.05, "omega_pi = " + num(m.omega_pi));
    } else {
      check(r, "gain margin " + loop_name(i), m.gain_margin_db > 3.0, "GM = " + num(m.gain_margin_db) + " dB");
    }
    auto mj = io::margins_to_json(m);
    mj["loop"] = loop_name(i);
    mj["gain"] = k;
    mj["tune_residual"] = c.residuals[i - 1];
    loops.push_back(mj);
  }
  j["loops"] = loops;
  const auto p = o.out / "margins.json";
  io::write_json(p, j);
  r.files.push_back(p);
}

inline void run_bode(const Options& o, const example::Controllers& c, Result& r) {
  const auto grid = log_grid_per_decade(o.margin_opts.w_min, o.margin_opts.w_max, o.margin_opts.per_decade);
  for (int i = 1; i <= 4; ++i) {
    const auto fr = eval_freq(example::loop(c, i), grid);
    const auto p = o.out / ("bode_" + loop_name(i) + ".csv");
    io::write_atomic(p, io::bode_csv(fr));
    r.files.push_back(p);
  }
}

inline void run_step(const Options& o, const example::Controllers& c, Result& r) {
  const SimOptions sim{o.t_end, o.dt, 1.0};
  std::vector<std::future<TimeSeries>> jobs;
  for (int i = 1; i <= 4; ++i) {
    for (Path path : {Path::reference, Path::disturbance}) {
      jobs.push_back(std::async(std::launch::async, [&, i, path] {
        auto ts = simulate_lti(to_state_space(closed_loop_lti(example::loop(c, i), path, o.band)), sim);
        ts.scenario = std::string(path == Path::reference ? "step_" : "disturbance_") + ctrl_name(i);
        return ts;
      }));
    }
  }
  auto gl_job = std::async(std::launch::async, [&] {
    auto ts = simulate_gl(closed_loop_pseudo(example::loop(c, 3), Path::reference), {o.gl_t_end, o.dt, 1.0});
    ts.scenario = "step_C3_gl";
    return ts;
  });

  std::vector<TimeSeries> runs;
  for (auto& j : jobs) runs.push_back(j.get());
  const TimeSeries gl = gl_job.get();

  io::json metrics;
  for (int i = 1; i <= 4; ++i) {
    const auto& step = runs[static_cast<std::size_t>(2 * (i - 1))];
    const auto& dist = runs[static_cast<std::size_t>(2 * (i - 1) + 1)];
    for (const auto* ts : {&step, &dist}) {
      const auto p = o.out / (ts->scenario + ".csv");
      io::write_atomic(p, io::timeseries_csv(*ts));
      r.files.push_back(p);
    }
    r.step_metrics[i - 1] = response_metrics(step, 1.0);
    r.disturbance_metrics[i - 1] = response_metrics(dist, 0.0);
    check(r, "step converges " + ctrl_name(i), std::abs(step.y.back() - 1.0) <= 2e-3,
          "y(" + num(step.t.back()) + ") = " + num(step.y.back()));
    check(r, "disturbance decays " + ctrl_name(i), r.disturbance_metrics[i - 1].converged,
          "y(" + num(dist.t.back()) + ") = " + num(dist.y.back()));
    io::json m;
    m["step"] = io::metrics_to_json(r.step_metrics[i - 1]);
    m["step"]["final_sample"] = step.y.back();
    m["step"]["warnings"] = step.warnings;
    m["disturbance"] = io::metrics_to_json(r.disturbance_metrics[i - 1]);
    m["disturbance"]["final_sample"] = dist.y.back();
    metrics[ctrl_name(i)] = m;
  }
  const auto& sm = r.step_metrics;
  check(r, "undershoot C1 > C3", sm[0].undershoot > sm[2].undershoot,
        num(sm[0].undershoot) + " vs " + num(sm[2].undershoot));
  check(r, "undershoot C1 > C4", sm[0].undershoot > sm[3].undershoot,
        num(sm[0].undershoot) + " vs " + num(sm[3].undershoot));
  check(r, "overshoot C2 > C3", sm[1].overshoot > sm[2].overshoot, num(sm[1].overshoot) + " vs " + num(sm[2].overshoot));

  const auto& lti3 = runs[4];
  double dev = 0.0;
  for (std::size_t k = 0; k < gl.y.size() && k < lti3.y.size(); ++k) dev = std::max(dev, std::abs(gl.y[k] - lti3.y[k]));
  r.gl_deviation = dev;
  check(r, "GL vs Oustaloup C3", dev <= 0.02, "sup |y_gl - y_lti| over [0, " + num(o.gl_t_end) + "] s = " + num(dev));
  {
    const auto p = o.out / "step_C3_gl.csv";
    io::write_atomic(p, io::timeseries_csv(gl));
    r.files.push_back(p);
  }

  metrics["gl_deviation_C3"] = dev;
  metrics["orderings"] = {{"undershoot_C1_gt_C3", sm[0].undershoot > sm[2].undershoot},
                          {"undershoot_C1_gt_C4", sm[0].undershoot > sm[3].undershoot},
                          {"overshoot_C2_gt_C3", sm[1].overshoot > sm[2].overshoot}};
  metrics["settings"] = {{"dt", o.dt},
                         {"t_end", o.t_end},
                         {"gl_t_end", o.gl_t_end},
                         {"band", {o.band.w_low, o.band.w_high}},
                         {"oustaloup_order", o.band.order}};
  const auto p = o.out / "metrics.json";
  io::write_json(p, metrics);
  r.files.push_back(p);
}

inline void write_metadata(const Options& o, Result& r) {
  io::json j;
  j["bode"] = {{"files", {"bode_L1.csv", "bode_L2.csv", "bode_L3.csv", "bode_L4.csv"}},
               {"x", "frequency omega [rad/s] (log)"},
               {"y", {"magnitude [dB]", "phase [deg]"}},
               {"title", "open loops L_i = -G C_i"}};
  j["step"] = {{"files", {"step_C1.csv", "step_C2.csv", "step_C3.csv", "step_C4.csv", "step_C3_gl.csv"}},
               {"x", "time t [s]"},
               {"y", "output y"},
               {"title", "closed-loop step responses"}};
  j["disturbance"] = {
      {"files", {"disturbance_C1.csv", "disturbance_C2.csv", "disturbance_C3.csv", "disturbance_C4.csv"}},
      {"x", "time t [s]"},
      {"y", "output y"},
      {"title", "closed-loop responses to a step disturbance at the plant input"}};
  const auto p = o.out / "figures.json";
  io::write_json(p, j);
  r.files.push_back(p);
}

}  // namespace detail

inline Result run(const Options& o) {
  Result r;
  const auto c = example::build_example_controllers();
  r.gains = c.gains;
  std::filesystem::create_directories(o.out);
  const bool all = o.figure == Figure::all;
  if (all || o.figure == Figure::margins) detail::run_margins(o, c, r);
  if (all || o.figure == Figure::bode) detail::run_bode(o, c, r);
  if (all || o.figure == Figure::step) detail::run_step(o, c, r);
  detail::write_metadata(o, r);

  io::json checks = io::json::array();
  for (const auto& ch : r.checks) checks.push_back({{"name", ch.name}, {"pass", ch.pass}, {"detail", ch.detail}});
  const auto p = o.out / "checks.json";
  io::write_json(p, {{"checks", checks}, {"ok", r.ok()}});
  r.files.push_back(p);
  return r;
}

}  // namespace fracshape::reproduce
