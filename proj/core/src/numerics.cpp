#include "mxbias/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mxbias {

const char* to_string(Errc c) noexcept {
  switch (c) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::no_bracket: return "no bracket";
    case Errc::max_iterations: return "max iterations";
    case Errc::eval_failure: return "evaluation failure";
    case Errc::no_convergence: return "no convergence";
    case Errc::consistency_violation: return "consistency violation";
    case Errc::price_below_cost: return "price below cost";
    case Errc::degenerate_demand: return "degenerate demand";
    case Errc::degenerate_delta: return "degenerate delta";
    case Errc::assumption_violation: return "assumption violation";
  }
  return "unknown error";
}

void Tolerances::validate() const {
  if (!(residual_tol >= 0.0) || !(step_tol >= 0.0))
    raise(Errc::invalid_argument, "tolerances must be non-negative");
  if (max_iter < 1)
    raise(Errc::invalid_argument, "max_iter must be >= 1");
  if (!(fd_step > 0.0) || !(fd_step < 1.0))
    raise(Errc::invalid_argument, "fd_step must lie in (0, 1)");
}

namespace {

double eval_checked(const Fn1& f, double x) {
  const double y = f(x);
  if (!std::isfinite(y))
    raise(Errc::eval_failure, "objective returned a non-finite value");
  return y;
}

}  // namespace

double find_root_bracketed(const Fn1& f, double lo, double hi,
                           const Tolerances& tol) {
  tol.validate();
  if (lo > hi) std::swap(lo, hi);

  double a = lo, b = hi;
  double fa = eval_checked(f, a);
  double fb = eval_checked(f, b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    raise(Errc::no_bracket, "f(lo) and f(hi) have the same sign");

  // Classic Brent: b is the best iterate, a its predecessor, c keeps the
  // bracket so that f(b) and f(c) straddle the root.
  double c = a, fc = fa;
  double d = b - a, e = d;
  const double eps = std::numeric_limits<double>::epsilon();

  for (int iter = 0; iter < tol.max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a; fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double t =
        2.0 * eps * std::abs(b) + 0.5 * tol.step_tol * std::max(1.0, std::abs(b));
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= t || fb == 0.0 || std::abs(fb) <= tol.residual_tol)
      return b;

    if (std::abs(e) >= t && std::abs(fa) > std::abs(fb)) {
      // Secant / inverse quadratic step.
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc, r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(t * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m; e = m;  // interpolation rejected: bisect
      }
    } else {
      d = m; e = m;
    }
    a = b; fa = fb;
    b += (std::abs(d) > t) ? d : (m > 0.0 ? t : -t);
    fb = eval_checked(f, b);
  }
  raise(Errc::max_iterations, "root find exceeded max_iter");
}

double newton_damped(const Fn1& f, const Fn1& df, double x0,
                     const Tolerances& tol, double lo, double hi) {
  tol.validate();
  double x = std::clamp(x0, lo, hi);
  double fx = eval_checked(f, x);
  for (int iter = 0; iter < tol.max_iter; ++iter) {
    if (std::abs(fx) <= tol.residual_tol) return x;
    const double g = df(x);
    if (!std::isfinite(g) || g == 0.0)
      raise(Errc::eval_failure, "derivative vanished or is non-finite");
    const double step = fx / g;
    double alpha = 1.0;
    for (;;) {
      const double xn = std::clamp(x - alpha * step, lo, hi);
      const double fn = f(xn);
      if (std::isfinite(fn) && std::abs(fn) < std::abs(fx)) {
        if (std::abs(xn - x) <= tol.step_tol * std::max(1.0, std::abs(xn))) {
          return xn;
        }
        x = xn; fx = fn;
        break;
      }
      alpha *= 0.5;
      if (alpha < 1e-12)
        raise(Errc::no_convergence, "damped step could not reduce |f|");
    }
  }
  raise(Errc::max_iterations, "newton exceeded max_iter");
}

namespace {

double symmetric_diff(const Fn1& f, double x, double h) {
  const double fp = f(x + h);
  const double fm = f(x - h);
  if (!std::isfinite(fp) || !std::isfinite(fm))
    raise(Errc::eval_failure, "derivative sample is non-finite");
  return (fp - fm) / (2.0 * h);
}

}  // namespace

double central_diff(const Fn1& f, double x, double h_rel,
                    int richardson_levels) {
  if (!(h_rel > 0.0)) raise(Errc::invalid_argument, "h_rel must be > 0");
  if (richardson_levels < 0 || richardson_levels > 3)
    raise(Errc::invalid_argument, "richardson_levels must be in [0, 3]");
  const double h = h_rel * std::max(1.0, std::abs(x));

  // Richardson table over halved steps: column j kills the h^(2j) term,
  // so row L has error O(h^(2L+2)).
  const int L = richardson_levels;
  double table[4];
  for (int k = 0; k <= L; ++k) {
    table[k] = symmetric_diff(f, x, std::ldexp(h, -k));
    for (int j = k; j > 0; --j) {
      const double w = std::ldexp(1.0, 2 * (k - j + 1));  // 4^(column)
      table[j - 1] = (w * table[j] - table[j - 1]) / (w - 1.0);
    }
  }
  return table[0];
}

CrossPartials cross_partial_fd(const Fn2& f, double x, double y, double h_rel,
                               int richardson_levels) {
  const auto fx = [&](double t) { return f(t, y); };
  const auto fy = [&](double t) { return f(x, t); };
  return CrossPartials{central_diff(fx, x, h_rel, richardson_levels),
                       central_diff(fy, y, h_rel, richardson_levels)};
}

}  // namespace mxbias
