#pragma once

// JSON and CSV formats for transfer functions, reports and time series.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "fracshape/approx.hpp"
#include "fracshape/error.hpp"
#include "fracshape/focore.hpp"
#include "fracshape/loopshape.hpp"
#include "fracshape/simtime.hpp"

namespace fracshape::io {

using json = nlohmann::json;

inline json complex_to_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  return {j.at("re").get<double>(), j.value("im", 0.0)};
}

inline json order_to_json(const CommensurateOrder& a, json& j) {
  j["alpha"] = a.value;
  if (a.nu > 0) j["nu"] = a.nu;
  return j;
}

inline CommensurateOrder order_from_json(const json& j) {
  if (j.contains("nu")) return CommensurateOrder::from_nu(j.at("nu").get<int>());
  return CommensurateOrder::from_value(j.at("alpha").get<double>());
}

inline json factor_to_json(const Factor& f) {
  json j;
  j["kind"] = kind_name(f);
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Gain>) {
          j["g"] = v.g;
        } else if constexpr (std::is_same_v<V, Monomial>) {
          j["beta"] = v.beta;
        } else if constexpr (std::is_same_v<V, ExplicitX>) {
          j["z"] = complex_to_json(v.z);
          order_to_json(v.alpha, j);
          j["k"] = v.k;
          j["pair"] = v.pair;
        } else if constexpr (std::is_same_v<V, PseudoPoly>) {
          order_to_json(v.poly.alpha(), j);
          json c = json::array();
          for (const auto& x : v.poly.coeffs()) c.push_back(complex_to_json(x));
          j["coeffs"] = c;
          j["k"] = v.k;
        } else if constexpr (std::is_same_v<V, ImplicitPower>) {
          j["z"] = complex_to_json(v.z);
          j["beta"] = v.beta;
          j["pair"] = v.pair;
          j["mirrored"] = v.mirrored;
        } else {
          j["num"] = v.num;
          j["den"] = v.den;
        }
      },
      f);
  return j;
}

inline Factor factor_from_json(const json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    Factor f;
    if (kind == "gain") {
      f = Gain{j.at("g").get<double>()};
    } else if (kind == "monomial") {
      f = Monomial{j.at("beta").get<double>()};
    } else if (kind == "explicit_x") {
      f = ExplicitX{complex_from_json(j.at("z")), order_from_json(j), j.value("k", 1), j.value("pair", false)};
    } else if (kind == "pseudo_poly") {
      CPoly c;
      for (const auto& x : j.at("coeffs")) c.push_back(complex_from_json(x));
      f = PseudoPoly{PseudoPolynomial(order_from_json(j), std::move(c)), j.value("k", 1)};
    } else if (kind == "implicit_power") {
      f = ImplicitPower{complex_from_json(j.at("z")), j.at("beta").get<double>(), j.value("pair", false),
                        j.value("mirrored", false)};
    } else if (kind == "io_rational") {
      f = IoRational{j.at("num").get<RPoly>(), j.at("den").get<RPoly>()};
    } else {
      throw Error(Errc::parse, "unknown factor kind '" + kind + "'");
    }
    validate(f);
    return f;
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("malformed factor: ") + e.what());
  }
}

inline json tf_to_json(const FactoredTf& tf) {
  json fs = json::array();
  for (const auto& f : tf.factors) fs.push_back(factor_to_json(f));
  return {{"factors", fs}, {"negated", tf.negated}};
}

inline FactoredTf tf_from_json(const json& j) {
  try {
    FactoredTf tf;
    for (const auto& f : j.at("factors")) tf.factors.push_back(factor_from_json(f));
    tf.negated = j.value("negated", false);
    return tf;
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("malformed transfer function: ") + e.what());
  }
}

inline json rational_to_json(const RationalTf& r) { return {{"num", r.num()}, {"den", r.den()}}; }

inline RationalTf rational_from_json(const json& j) {
  try {
    return RationalTf(j.at("num").get<RPoly>(), j.at("den").get<RPoly>());
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("malformed rational: ") + e.what());
  }
}

inline json loop_to_json(const LoopSpec& l) {
  return {{"plant", tf_to_json(l.plant)}, {"controller", tf_to_json(l.controller)}, {"negated", l.negated}};
}

inline LoopSpec loop_from_json(const json& j) {
  try {
    return LoopSpec{tf_from_json(j.at("plant")), tf_from_json(j.at("controller")), j.value("negated", false)};
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("malformed loop: ") + e.what());
  }
}

/// Non-finite values become null (JSON has no infinity); `flags` says why.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json margins_to_json(const MarginsReport& m) {
  return {{"omega_c", m.omega_c},
          {"phase_margin_deg", m.phase_margin_deg},
          {"omega_pi", finite_or_null(m.omega_pi)},
          {"gain_margin_db", finite_or_null(m.gain_margin_db)},
          {"flags", m.flags}};
}

inline json stability_to_json(const StabilityReport& r) {
  json roots = json::array(), margins = json::array();
  for (const auto& w : r.roots) roots.push_back(complex_to_json(w));
  for (double m : r.margins) margins.push_back(m);
  return {{"stable", r.stable},
          {"indeterminate", r.indeterminate},
          {"min_margin_rad", finite_or_null(r.min_margin)},
          {"alpha", r.alpha.value},
          {"roots", roots},
          {"margins_rad", margins}};
}

inline json metrics_to_json(const ResponseMetrics& m) {
  return {{"undershoot", m.undershoot},   {"overshoot", m.overshoot}, {"settling_time", finite_or_null(m.settling_time)},
          {"settled", m.settled},         {"converged", m.converged}, {"band", m.band}};
}

inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string timeseries_csv(const TimeSeries& ts) {
  std::string out = "t,y\n";
  out.reserve(ts.t.size() * 24);
  for (std::size_t i = 0; i < ts.t.size(); ++i) out += fmt9(ts.t[i]) + "," + fmt9(ts.y[i]) + "\n";
  return out;
}

inline std::string bode_csv(const FrequencyResponse& fr) {
  std::string out = "omega,magnitude_db,phase_deg\n";
  for (std::size_t i = 0; i < fr.size(); ++i)
    out += fmt9(fr.omega[i]) + "," + fmt9(fr.magnitude_db(i)) + "," + fmt9(fr.phase_deg[i]) + "\n";
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::parse, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const std::filesystem::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw Error(Errc::parse, p.string() + ": " + e.what());
  }
}

/// Writes to a sibling temporary and renames it over the target.
inline void write_atomic(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_atomic(p, j.dump(2) + "\n"); }

}  // namespace fracshape::io
