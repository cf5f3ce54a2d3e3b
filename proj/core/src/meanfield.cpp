#include "mxbias/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mxbias {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Internal solves always run to bracket collapse: the cross-partial
// oracles difference these solutions at steps ~1e-6, so solver noise has
// to sit at round-off, not at a user tolerance.
Tolerances solve_tol(const Tolerances& tol) {
  Tolerances t = tol;
  t.residual_tol = 0.0;
  t.step_tol = 0.0;
  t.max_iter = std::max(tol.max_iter, 2000);
  return t;
}

double valuation_at(const MarketParams& m, double p) {
  const double v = m.valuation.value(p);
  if (!std::isfinite(v))
    raise(Errc::eval_failure, "valuation is non-finite at p = " + std::to_string(p));
  if (!(v > 0.0))
    raise(Errc::assumption_violation,
          "valuation must be positive at p = " + std::to_string(p));
  return v;
}

double slope_at(const MarketParams& m, double p) {
  const double d = m.valuation.slope(p);
  if (!std::isfinite(d))
    raise(Errc::eval_failure, "valuation slope is non-finite");
  return d;
}

void check_q(double q) {
  if (!(q > 0.0 && q < 1.0))
    raise(Errc::invalid_argument, "treatment share q must lie in (0, 1)");
}

double balance_residual(const MarketParams& m, double v, double s) {
  return (m.rho - s) * m.tau - m.lambda * s * v / (m.epsilon + s * v);
}

}  // namespace

void MarketParams::validate() const {
  const auto pos = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!pos(rho)) raise(Errc::invalid_argument, "rho must be > 0");
  if (!pos(lambda)) raise(Errc::invalid_argument, "lambda must be > 0");
  if (!pos(tau)) raise(Errc::invalid_argument, "tau must be > 0");
  if (!pos(epsilon)) raise(Errc::invalid_argument, "epsilon must be > 0");
  if (!(std::isfinite(cost) && cost >= 0.0))
    raise(Errc::invalid_argument, "cost must be >= 0");
  if (!valuation.value || !valuation.slope)
    raise(Errc::invalid_argument, "valuation callbacks are empty");
}

SteadyState steady_state(const MarketParams& m, double p,
                         const Tolerances& tol) {
  m.validate();
  tol.validate();
  const double v = valuation_at(m, p);

  // Balance equation as a quadratic: v s^2 + b s - rho eps = 0 with
  // b = eps + (beta - rho) v. The conjugate form avoids the b ~ sqrt(disc)
  // cancellation when b > 0 (tight markets / tiny v).
  const double beta = m.beta();
  const double b = m.epsilon + (beta - m.rho) * v;
  const double disc = b * b + 4.0 * v * m.rho * m.epsilon;
  const double root = std::sqrt(disc);
  double s = b >= 0.0 ? 2.0 * m.rho * m.epsilon / (b + root)
                      : (root - b) / (2.0 * v);
  s = std::clamp(s, 0.0, m.rho);

  SteadyState out;
  out.s = s;
  out.residual = balance_residual(m, v, s);
  out.method = SolveMethod::closed_form;

  // Round-off scale of the residual evaluation; anything above it means
  // the closed form lost digits and the bracketed solver should decide.
  const double noise = 64.0 * kEps * (m.tau * m.rho + m.lambda);
  if (std::abs(out.residual) > std::max(noise, tol.residual_tol)) {
    const auto f = [&](double x) { return balance_residual(m, v, x); };
    out.s = find_root_bracketed(f, 0.0, m.rho, solve_tol(tol));
    out.residual = balance_residual(m, v, out.s);
    out.method = SolveMethod::bracketed;
  }
  return out;
}

double s_star_price_derivative(const MarketParams& m, double p,
                               const Tolerances& tol) {
  const double s = steady_state(m, p, tol).s;
  const double v = valuation_at(m, p);
  const double vp = slope_at(m, p);
  const double sv = s * v;
  return -s * vp * m.epsilon /
         ((m.tau / m.lambda) * (m.epsilon + sv) * (m.epsilon + sv) +
          v * m.epsilon);
}

double demand(const MarketParams& m, double p, const Tolerances& tol) {
  return (m.rho - steady_state(m, p, tol).s) * m.tau;
}

double demand_price_derivative(const MarketParams& m, double p,
                               const Tolerances& tol) {
  return -m.tau * s_star_price_derivative(m, p, tol);
}

double gte_profit_mf(const MarketParams& m, double p, const Tolerances& tol) {
  const double s = steady_state(m, p, tol).s;
  const double sp = s_star_price_derivative(m, p, tol);
  return m.tau * (m.rho - s - (p - m.cost) * sp);
}

namespace {

// Group availability given the aggregate attraction W = s0 v0 + s1 v1:
// each group's balance is linear in its own s once W is fixed.
double group_s(double share_rho, double eps_plus_w, double beta_v) {
  return share_rho * eps_plus_w / (eps_plus_w + beta_v);
}

}  // namespace

LRSteadyState lr_steady_state(const MarketParams& m, double q, double p0,
                              double p1, const Tolerances& tol) {
  m.validate();
  tol.validate();
  check_q(q);
  const double v0 = valuation_at(m, p0);
  const double v1 = valuation_at(m, p1);
  const double beta = m.beta();
  const double mass0 = (1.0 - q) * m.rho;
  const double mass1 = q * m.rho;

  const auto gap = [&](double w) {
    const double ew = m.epsilon + w;
    return group_s(mass0, ew, beta * v0) * v0 +
           group_s(mass1, ew, beta * v1) * v1 - w;
  };
  // gap(0) > 0 and gap(rho max(v0,v1)) < 0: group availabilities are
  // bounded by the group masses with strict logit slack.
  const double w_hi = m.rho * std::max(v0, v1);
  const double w = find_root_bracketed(gap, 0.0, w_hi, solve_tol(tol));

  const double ew = m.epsilon + w;
  LRSteadyState out;
  out.s0 = group_s(mass0, ew, beta * v0);
  out.s1 = group_s(mass1, ew, beta * v1);
  out.residual0 = (mass0 - out.s0) * m.tau - m.lambda * out.s0 * v0 / ew;
  out.residual1 = (mass1 - out.s1) * m.tau - m.lambda * out.s1 * v1 / ew;
  return out;
}

GroupDemands lr_demands(const MarketParams& m, double q, double p0, double p1,
                        const Tolerances& tol) {
  const LRSteadyState st = lr_steady_state(m, q, p0, p1, tol);
  const double v0 = valuation_at(m, p0);
  const double v1 = valuation_at(m, p1);
  const double ew = m.epsilon + st.s0 * v0 + st.s1 * v1;
  return GroupDemands{m.lambda / (1.0 - q) * st.s0 * v0 / ew,
                      m.lambda / q * st.s1 * v1 / ew};
}

SteadyState cr_steady_state(const MarketParams& m, double q, double p0,
                            double p1, const Tolerances& tol) {
  m.validate();
  tol.validate();
  check_q(q);
  const double v0 = valuation_at(m, p0);
  const double v1 = valuation_at(m, p1);

  const auto f = [&](double s) {
    return (m.rho - s) * m.tau -
           m.lambda * (q * s * v1 / (m.epsilon + s * v1) +
                       (1.0 - q) * s * v0 / (m.epsilon + s * v0));
  };
  SteadyState out;
  out.s = find_root_bracketed(f, 0.0, m.rho, solve_tol(tol));
  out.residual = f(out.s);
  out.method = SolveMethod::bracketed;
  return out;
}

GroupDemands cr_demands(const MarketParams& m, double q, double p0, double p1,
                        const Tolerances& tol) {
  const double s = cr_steady_state(m, q, p0, p1, tol).s;
  const double v0 = valuation_at(m, p0);
  const double v1 = valuation_at(m, p1);
  return GroupDemands{m.lambda * s * v0 / (m.epsilon + s * v0),
                      m.lambda * s * v1 / (m.epsilon + s * v1)};
}

InterferencePartials lr_cross_partials(const MarketParams& m, double q,
                                       double p, const Tolerances& tol) {
  check_q(q);
  const double s = steady_state(m, p, tol).s;
  const double v = valuation_at(m, p);
  const double vp = slope_at(m, p);
  const double sv = s * v;
  const double ev = m.epsilon + sv;

  // d s0 / d p1 at p0 = p1 = p; symmetric in the group labels, so
  // d s1 / d p0 carries the same value.
  const double s_cross = m.lambda * (1.0 - q) * q * m.tau * s * s * v * vp *
                         ev /
                         ((v * (m.lambda + m.tau * s) + m.tau * m.epsilon) *
                          (m.tau * ev * ev + m.lambda * v * m.epsilon));
  return InterferencePartials{-(m.tau / (1.0 - q)) * s_cross,
                              -(m.tau / q) * s_cross};
}

InterferencePartials cr_cross_partials(const MarketParams& m, double q,
                                       double p, const Tolerances& tol) {
  check_q(q);
  const double s = steady_state(m, p, tol).s;
  const double v = valuation_at(m, p);
  const double vp = slope_at(m, p);
  const double ev = m.epsilon + s * v;

  const double d1_dp0 =
      -m.lambda * m.lambda * (1.0 - q) * m.epsilon * m.epsilon * v * vp * s /
      (ev * ev *
       (v * (m.tau * s * (s * v + 2.0 * m.epsilon) + m.lambda * m.epsilon) +
        m.tau * m.epsilon * m.epsilon));
  return InterferencePartials{q / (1.0 - q) * d1_dp0, d1_dp0};
}

double bias_lr(const MarketParams& m, double p, const Tolerances& tol) {
  const double s = steady_state(m, p, tol).s;
  const double v = valuation_at(m, p);
  const double vp = slope_at(m, p);
  const double beta = m.beta();
  const double ev = m.epsilon + s * v;
  return (p - m.cost) * (-m.lambda * s * s * v * vp * ev) /
         ((ev + beta * v) * (ev * ev + beta * v * m.epsilon));
}

double bias_cr(const MarketParams& m, double p, const Tolerances& tol) {
  const double s = steady_state(m, p, tol).s;
  const double v = valuation_at(m, p);
  const double vp = slope_at(m, p);
  const double beta = m.beta();
  const double ev = m.epsilon + s * v;
  return -(p - m.cost) * m.lambda * beta * m.epsilon * m.epsilon * v * vp *
         s / (ev * ev * (ev * ev + beta * v * m.epsilon));
}

LimitValues limit_values(const MarketParams& m, double p) {
  m.validate();
  const double v = valuation_at(m, p);
  const double vp = slope_at(m, p);
  const double margin = p - m.cost;
  const double ev = m.epsilon + m.rho * v;

  LimitValues out;
  out.gte_low = m.rho * v / ev + margin * m.rho * vp * m.epsilon / (ev * ev);
  out.bias_lr_low = -margin * m.rho * m.rho * v * vp / (ev * ev);
  out.bias_cr_low = 0.0;
  out.gte_high = m.rho;
  out.bias_lr_high = 0.0;
  out.bias_cr_high = -m.rho * margin * vp / v;
  return out;
}

DemandSystem lr_demand_system(const MarketParams& m, double price_lo,
                              double price_hi) {
  m.validate();
  if (!(price_lo < price_hi))
    raise(Errc::invalid_argument, "empty price window");
  DemandSystem sys;
  sys.cost = m.cost;
  sys.price_lo = price_lo;
  sys.price_hi = price_hi;
  sys.market_demand = [m](double p) { return demand(m, p); };
  sys.control_demand = [m](double p0, double p1, double q) {
    return lr_demands(m, q, p0, p1).d0;
  };
  sys.treatment_demand = [m](double p0, double p1, double q) {
    return lr_demands(m, q, p0, p1).d1;
  };
  return sys;
}

DemandSystem cr_demand_system(const MarketParams& m, double price_lo,
                              double price_hi) {
  m.validate();
  if (!(price_lo < price_hi))
    raise(Errc::invalid_argument, "empty price window");
  DemandSystem sys;
  sys.cost = m.cost;
  sys.price_lo = price_lo;
  sys.price_hi = price_hi;
  sys.market_demand = [m](double p) { return demand(m, p); };
  sys.control_demand = [m](double p0, double p1, double q) {
    return cr_demands(m, q, p0, p1).d0;
  };
  sys.treatment_demand = [m](double p0, double p1, double q) {
    return cr_demands(m, q, p0, p1).d1;
  };
  return sys;
}

namespace {

MetricSystem profit_system(const MarketParams& m, DemandSystem d) {
  MetricSystem sys;
  sys.domain_lo = d.price_lo;
  sys.domain_hi = d.price_hi;
  const double c = m.cost;
  sys.global_metric = [d, c](double p) { return (p - c) * d.market_demand(p); };
  // Arm metric = arm profit rate including the arm's mass share, so the
  // q-scaling convention of MetricSystem holds on the diagonal.
  sys.control_metric = [d, c](double p0, double p1, double q) {
    return (1.0 - q) * (p0 - c) * d.control_demand(p0, p1, q);
  };
  sys.treatment_metric = [d, c](double p0, double p1, double q) {
    return q * (p1 - c) * d.treatment_demand(p0, p1, q);
  };
  return sys;
}

}  // namespace

MetricSystem lr_profit_system(const MarketParams& m, double price_lo,
                              double price_hi) {
  return profit_system(m, lr_demand_system(m, price_lo, price_hi));
}

MetricSystem cr_profit_system(const MarketParams& m, double price_lo,
                              double price_hi) {
  return profit_system(m, cr_demand_system(m, price_lo, price_hi));
}

}  // namespace mxbias
