#pragma once

#include <functional>

#include "mxbias/errors.hpp"

namespace mxbias {

// Shared numerical controls. residual_tol and step_tol drive the root
// finders; fd_step is the *relative* step of every finite-difference
// operator (absolute step = fd_step * max(1, |x|)).
struct Tolerances {
  double residual_tol = 1e-12;
  double step_tol = 1e-12;
  int max_iter = 200;
  double fd_step = 1e-6;

  void validate() const;  // throws Error(invalid_argument)
};

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

// Brent-style bracketed root find (inverse quadratic / secant with a
// bisection safeguard). Requires f(lo) and f(hi) of opposite sign (a zero
// endpoint is returned as-is). Stops when |f| <= residual_tol or the
// bracket shrinks to step_tol * max(1, |x|); with both tolerances zero it
// runs to the floating-point floor of the bracket, which is what the
// steady-state solvers need so that finite differences across solves stay
// quiet. Throws Error(no_bracket / max_iterations / eval_failure).
double find_root_bracketed(const Fn1& f, double lo, double hi,
                           const Tolerances& tol = {});

// Newton iteration with step halving on |f| and an optional clamp to
// [lo, hi]. Used where a derivative is cheap and a bracket is not.
// Throws Error(no_convergence) if the residual cannot be reduced,
// Error(max_iterations) otherwise on budget exhaustion.
double newton_damped(const Fn1& f, const Fn1& df, double x0,
                     const Tolerances& tol = {},
                     double lo = -1e308, double hi = 1e308);

// Symmetric difference (f(x+h) - f(x-h)) / 2h with h = h_rel * max(1, |x|).
// richardson_levels = 0 gives the plain O(h^2) stencil; each extra level
// halves h and cancels the leading error term. Throws Error(eval_failure)
// on a non-finite sample.
double central_diff(const Fn1& f, double x, double h_rel,
                    int richardson_levels = 1);

struct CrossPartials {
  double d_dx;  // partial of f in the first argument
  double d_dy;  // partial of f in the second argument
};

// Both first partials of a bivariate f at (x, y), each by the same
// central-difference rule as central_diff (one axis held fixed).
CrossPartials cross_partial_fd(const Fn2& f, double x, double y, double h_rel,
                               int richardson_levels = 1);

}  // namespace mxbias
