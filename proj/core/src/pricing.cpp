#include "mxbias/pricing.hpp"

#include <cmath>
#include <string>

namespace mxbias {

namespace {

void check_system(const DemandSystem& sys) {
  if (!sys.market_demand || !sys.control_demand || !sys.treatment_demand)
    raise(Errc::invalid_argument, "demand system has empty callbacks");
  if (!(sys.price_lo < sys.price_hi))
    raise(Errc::invalid_argument, "demand system price window is empty");
  if (!(sys.cost >= 0.0))
    raise(Errc::invalid_argument, "cost must be >= 0");
}

void check_price(const DemandSystem& sys, double p, double h_rel) {
  if (p < sys.cost)
    raise(Errc::price_below_cost, "p = " + std::to_string(p) + " < cost");
  const double margin = 2.0 * h_rel * std::max(1.0, std::abs(p));
  if (!(p - margin >= sys.price_lo && p + margin <= sys.price_hi))
    raise(Errc::invalid_argument,
          "p too close to the price window boundary for finite differences");
}

void check_q(double q) {
  if (!(q > 0.0 && q < 1.0))
    raise(Errc::invalid_argument, "treatment share q must lie in (0, 1)");
}

double market_at(const DemandSystem& sys, double p) {
  const double d = sys.market_demand(p);
  if (!std::isfinite(d))
    raise(Errc::eval_failure, "market demand is non-finite");
  return d;
}

// Arm demands must reproduce the market demand on the diagonal; estimator
// algebra silently breaks otherwise.
void require_consistent_at(const DemandSystem& sys, double p, double q,
                           const Tolerances& tol) {
  const double d = market_at(sys, p);
  const double d0 = sys.control_demand(p, p, q);
  const double d1 = sys.treatment_demand(p, p, q);
  if (!std::isfinite(d0) || !std::isfinite(d1))
    raise(Errc::eval_failure, "arm demand is non-finite");
  const double thresh = tol.residual_tol * (1.0 + std::abs(d));
  if (std::abs(d0 - d) > thresh || std::abs(d1 - d) > thresh)
    raise(Errc::consistency_violation,
          "arm demands disagree with market demand at p = " +
              std::to_string(p));
}

struct ArmPartials {
  double d0_dy;  // control demand response to the treatment price
  double d1_dx;  // treatment demand response to the control price
  double d1_dy;  // treatment own-price response
};

ArmPartials arm_partials(const DemandSystem& sys, double p, double q,
                         const Tolerances& tol) {
  const auto d0 = [&](double x, double y) { return sys.control_demand(x, y, q); };
  const auto d1 = [&](double x, double y) { return sys.treatment_demand(x, y, q); };
  const double d0_dy = cross_partial_fd(d0, p, p, tol.fd_step).d_dy;
  const CrossPartials c1 = cross_partial_fd(d1, p, p, tol.fd_step);
  return ArmPartials{d0_dy, c1.d_dx, c1.d_dy};
}

}  // namespace

double profit(const DemandSystem& sys, double p) {
  check_system(sys);
  if (p < sys.cost)
    raise(Errc::price_below_cost, "p = " + std::to_string(p) + " < cost");
  return (p - sys.cost) * market_at(sys, p);
}

double gte_demand(const DemandSystem& sys, double p, const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  check_price(sys, p, tol.fd_step);
  return central_diff(sys.market_demand, p, tol.fd_step);
}

double gte_profit(const DemandSystem& sys, double p, const Tolerances& tol) {
  return market_at(sys, p) + (p - sys.cost) * gte_demand(sys, p, tol);
}

double naive_gte_demand(const DemandSystem& sys, double p, double q,
                        const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  check_q(q);
  check_price(sys, p, tol.fd_step);
  require_consistent_at(sys, p, q, tol);
  const ArmPartials a = arm_partials(sys, p, q, tol);
  return a.d1_dy - a.d0_dy;
}

double naive_gte_profit(const DemandSystem& sys, double p, double q,
                        const Tolerances& tol) {
  return market_at(sys, p) +
         (p - sys.cost) * naive_gte_demand(sys, p, q, tol);
}

double bias_demand(const DemandSystem& sys, double p, double q,
                   const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  check_q(q);
  check_price(sys, p, tol.fd_step);
  require_consistent_at(sys, p, q, tol);
  const ArmPartials a = arm_partials(sys, p, q, tol);
  return a.d0_dy + a.d1_dx;
}

double bias_profit(const DemandSystem& sys, double p, double q,
                   const Tolerances& tol) {
  return (p - sys.cost) * bias_demand(sys, p, q, tol);
}

SignClassification classify_sign(const DemandSystem& sys, double p, double q,
                                 const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  check_q(q);
  check_price(sys, p, tol.fd_step);
  require_consistent_at(sys, p, q, tol);

  SignClassification r;
  r.p = p;
  r.q = q;
  r.demand = market_at(sys, p);
  r.demand_slope = gte_demand(sys, p, tol);
  if (!(r.demand > 0.0))
    raise(Errc::degenerate_demand, "D(p) <= 0 at p = " + std::to_string(p));
  if (!(r.demand_slope < 0.0))
    raise(Errc::degenerate_demand, "D'(p) >= 0 at p = " + std::to_string(p));

  const ArmPartials a = arm_partials(sys, p, q, tol);
  const double margin = p - sys.cost;
  const double exp_slope = a.d1_dy - a.d0_dy;  // what the experiment sees

  r.gte_pi = r.demand + margin * r.demand_slope;
  r.est_pi = r.demand + margin * exp_slope;
  r.bias_pi = margin * (a.d0_dy + a.d1_dx);
  r.elasticity = r.demand_slope * p / r.demand;
  r.experiment_elasticity = exp_slope * p / r.demand;
  r.lerner = p > 0.0 ? margin / p : 0.0;
  r.inv_elasticity = -1.0 / r.elasticity;
  r.naive_bound = r.lerner * exp_slope / r.demand_slope;

  // bias >= 0 is the same statement as lerner <= naive_bound; allow only
  // finite-difference round-off below zero.
  if (r.bias_pi < -1e-9 * (1.0 + std::abs(r.gte_pi)))
    raise(Errc::consistency_violation,
          "negative interference bias at p = " + std::to_string(p) +
              " (bias_pi = " + std::to_string(r.bias_pi) + ")");

  r.cond_a = r.gte_pi >= 0.0;
  r.cond_b = r.est_pi <= 0.0;
  r.change_of_sign = r.cond_a && r.cond_b;
  r.boundary = r.gte_pi == 0.0 || r.est_pi == 0.0;
  return r;
}

DemandCheck check_demand_system(const DemandSystem& sys,
                                std::span<const double> qs, int grid_n,
                                const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  if (grid_n < 3)
    raise(Errc::invalid_argument, "demand check needs grid_n >= 3");

  DemandCheck out;
  const double lo = sys.price_lo;
  const double hi = sys.price_hi;
  double prev_d = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    const double p = lo + (hi - lo) * static_cast<double>(i) / (grid_n - 1);
    const double d = sys.market_demand(p);
    if (!std::isfinite(d)) {
      out.issues.push_back({p, "market demand non-finite"});
      continue;
    }
    if (!(d > 0.0)) out.issues.push_back({p, "market demand <= 0"});
    if (i > 0 && !(d < prev_d))
      out.issues.push_back({p, "market demand not strictly decreasing"});
    prev_d = d;

    for (const double q : qs) {
      check_q(q);
      const double d0 = sys.control_demand(p, p, q);
      const double d1 = sys.treatment_demand(p, p, q);
      if (!std::isfinite(d0) || !std::isfinite(d1)) {
        out.issues.push_back({p, "arm demand non-finite"});
        continue;
      }
      const double r = std::max(std::abs(d0 - d), std::abs(d1 - d));
      out.max_consistency_residual =
          std::max(out.max_consistency_residual, r);
      if (r > tol.residual_tol * (1.0 + std::abs(d)))
        out.issues.push_back({p, "arm demands inconsistent with market"});
    }
  }
  return out;
}

}  // namespace mxbias
