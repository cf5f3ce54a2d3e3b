#pragma once

#include <functional>
#include <string>

#include "mxbias/errors.hpp"

namespace mxbias {

// Customer valuation weight v(p) in the logit choice model. The theory
// needs, on (cost, price_hi]:
//   (1) v > 0,
//   (2) v strictly decreasing and differentiable,
//   (3) (p - cost) * (-v'(p)/v(p)) strictly increasing (single crossing:
//       the profit derivative changes sign at most once in p).
// check_valuation() verifies all three on a sample grid.
struct ValuationSpec {
  std::function<double(double)> value;  // v(p)
  std::function<double(double)> slope;  // v'(p)
  std::string family;                   // "exponential" | "linear" | "custom"

  // v(p) = exp(peak - p): the logit benchmark; single-crossing term is
  // exactly (p - cost).
  static ValuationSpec exponential(double peak);

  // v(p) = a - b p with b > 0; valid while v stays positive.
  static ValuationSpec linear(double a, double b);

  static ValuationSpec custom(std::function<double(double)> value,
                              std::function<double(double)> slope);

  double operator()(double p) const { return value(p); }
};

struct ValuationCheck {
  bool positive = true;         // v > 0 on the grid
  bool decreasing = true;       // v' < 0 on the grid
  bool single_crossing = true;  // (p - c)(-v'/v) strictly increasing
  double worst_p = 0.0;         // leftmost grid point of the first failure
  bool ok() const { return positive && decreasing && single_crossing; }
};

// Samples n points on [cost + 1e-9, price_hi] (the open left endpoint is
// nudged inward; v may legitimately blow up or vanish *at* cost).
ValuationCheck check_valuation(const ValuationSpec& v, double cost,
                               double price_hi, int n = 129);

// Throwing wrapper: Error(assumption_violation) naming the failed property.
void require_valuation(const ValuationSpec& v, double cost, double price_hi,
                       int n = 129);

}  // namespace mxbias
