#pragma once

#include <stdexcept>
#include <string>

namespace covest {

/// Failure categories raised by the library. Every throw site uses exactly one.
enum class ErrorCode {
  input,                    // malformed or non-finite input
  dimension,                // incompatible sizes (e.g. N < L)
  infeasible_multiplicity,  // a population eigenvalue would get zero copies
  convergence,              // iterative solver did not reach tolerance
  pole_proximity,           // evaluation point too close to an eigenvalue
  bracket_failure,          // secular root bracket without sign change
  contour,                  // contour passes through a zero of m or misses the spectrum
  quadrature,               // imaginary leakage above bound; refine the node count
  ill_conditioned_residue,  // nearly coincident secular roots
  conditioning,             // Hankel matrix numerically singular
  invalid_roots,            // complex, negative or coincident polynomial roots
  invalid_weights,          // recovered weights outside [-0.05, 1.05]
  geometry,                 // CLT contours overlap or do not nest
  separability,             // limiting support has fewer clusters than L
  io,                       // file read/write failure
  internal,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::input: return "input";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::infeasible_multiplicity: return "infeasible_multiplicity";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::pole_proximity: return "pole_proximity";
    case ErrorCode::bracket_failure: return "bracket_failure";
    case ErrorCode::contour: return "contour";
    case ErrorCode::quadrature: return "quadrature";
    case ErrorCode::ill_conditioned_residue: return "ill_conditioned_residue";
    case ErrorCode::conditioning: return "conditioning";
    case ErrorCode::invalid_roots: return "invalid_roots";
    case ErrorCode::invalid_weights: return "invalid_weights";
    case ErrorCode::geometry: return "geometry";
    case ErrorCode::separability: return "separability";
    case ErrorCode::io: return "io";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, double value = 0.0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), value_(value) {}

  ErrorCode code() const noexcept { return code_; }

  /// Diagnostic attached to the failure (last residual, condition number, ...).
  double value() const noexcept { return value_; }

 private:
  ErrorCode code_;
  double value_;
};

}  // namespace covest
