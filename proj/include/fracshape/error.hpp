#pragma once

#include <stdexcept>
#include <string>

namespace fracshape {

/// Failure categories raised by the library. The CLI maps these onto its exit codes.
enum class Errc {
  domain,            ///< precondition on an argument violated
  singularity,       ///< evaluation hit a pole / zero of a denominator
  no_roots,          ///< root finding on a degree-0 polynomial
  degenerate_pair,   ///< pair form requested for a real location
  not_rhp,           ///< expected a right-half-plane location
  not_stable_pole,   ///< expected a left-half-plane pole
  unsupported,       ///< factor variant not handled by the requested operation
  conditioning,      ///< numerical verification failed (residual, realness)
  not_commensurate,  ///< orders do not share a common base 1/nu
  no_crossover,      ///< no gain crossover inside the scanned band
  zero_magnitude,    ///< gain tuning against a vanishing response
  improper,          ///< numerator degree exceeds denominator degree
  parse,             ///< malformed input file
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::domain: return "domain";
    case Errc::singularity: return "singularity";
    case Errc::no_roots: return "no_roots";
    case Errc::degenerate_pair: return "degenerate_pair";
    case Errc::not_rhp: return "not_rhp";
    case Errc::not_stable_pole: return "not_stable_pole";
    case Errc::unsupported: return "unsupported";
    case Errc::conditioning: return "conditioning";
    case Errc::not_commensurate: return "not_commensurate";
    case Errc::no_crossover: return "no_crossover";
    case Errc::zero_magnitude: return "zero_magnitude";
    case Errc::improper: return "improper";
    case Errc::parse: return "parse";
  }
  return "unknown";
}

}  // namespace fracshape
