#pragma once

#include <stdexcept>
#include <string>

namespace mxbias {

// Failure taxonomy shared by every module. CLI maps invalid_argument-class
// codes to exit 2 and everything else to exit 1.
enum class Errc {
  invalid_argument,       // parameter violates a documented precondition
  no_bracket,             // f(lo), f(hi) do not straddle zero
  max_iterations,         // iteration budget exhausted before convergence
  eval_failure,           // callback returned NaN/inf or threw
  no_convergence,         // damped iteration could not reduce the residual
  consistency_violation,  // arm metrics disagree with the global metric
  price_below_cost,       // p < c where a margin is required
  degenerate_demand,      // D <= 0 or D' >= 0 where a sign is required
  degenerate_delta,       // p1 == p0 in a finite-difference estimator
  assumption_violation,   // valuation/demand shape check failed
};

const char* to_string(Errc c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace mxbias
