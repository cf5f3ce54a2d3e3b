#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mxbias/numerics.hpp"

namespace mxbias {

// Price experiment on a demand system. market_demand D(p) is the demand
// rate with every seller at p; the arm demands are normalized so that at
// p0 = p1 they both equal D (each arm's rate divided by its mass share):
//   D0(p, p, q) = D1(p, p, q) = D(p).
// Profit rate is pi(p) = (p - cost) D(p).
struct DemandSystem {
  std::function<double(double)> market_demand;                   // D(p)
  std::function<double(double, double, double)> control_demand;  // D0(p0,p1,q)
  std::function<double(double, double, double)> treatment_demand; // D1
  double cost = 0.0;
  double price_lo = 0.0;
  double price_hi = 0.0;
};

double profit(const DemandSystem& sys, double p);

// True marginal effects of a global price move.
double gte_demand(const DemandSystem& sys, double p, const Tolerances& tol = {}); // D'
double gte_profit(const DemandSystem& sys, double p, const Tolerances& tol = {}); // D + (p-c) D'

// What the A/B test reports: the experiment's demand slope is
// d/dp1 [D1 - D0] at p1 = p0, and the profit readout adds the margin.
double naive_gte_demand(const DemandSystem& sys, double p, double q,
                        const Tolerances& tol = {});
double naive_gte_profit(const DemandSystem& sys, double p, double q,
                        const Tolerances& tol = {});

// gte - naive, via the interference cross-partials. Non-negative whenever
// demand is cannibalistic (one arm's price cut steals the other's demand).
double bias_demand(const DemandSystem& sys, double p, double q,
                   const Tolerances& tol = {});
double bias_profit(const DemandSystem& sys, double p, double q,
                   const Tolerances& tol = {});

// Sign diagnosis of the worst case: the test can recommend the exact
// opposite of the truth. With e_p = D' p / D (price elasticity) and
// lerner = (p - c)/p (margin share):
//   cond_a: lerner <= -1/e_p        <=> gte_profit >= 0
//   cond_b: -1/e_p <= naive_bound   <=> naive_gte_profit <= 0
// change_of_sign = both: the truth says raise, the experiment says lower.
struct SignClassification {
  double p = 0.0;
  double q = 0.0;
  double demand = 0.0;
  double demand_slope = 0.0;           // D'(p)
  double gte_pi = 0.0;
  double est_pi = 0.0;                 // naive_gte_profit
  double bias_pi = 0.0;
  double elasticity = 0.0;             // e_p
  double experiment_elasticity = 0.0;  // slope the experiment sees, x p/D
  double lerner = 0.0;                 // (p - c) / p
  double inv_elasticity = 0.0;         // -1 / e_p
  double naive_bound = 0.0;            // lerner * (exp. slope / true slope)
  bool cond_a = false;
  bool cond_b = false;
  bool change_of_sign = false;
  bool boundary = false;  // exact tie (gte_pi == 0 or est_pi == 0)
};

// Evaluates the table above at (p, q). Throws Error(price_below_cost) for
// p < cost, Error(degenerate_demand) if D <= 0 or D' >= 0, and
// Error(consistency_violation) if bias_profit < 0 beyond round-off (the
// bound ordering lerner <= naive_bound is equivalent to bias >= 0).
SignClassification classify_sign(const DemandSystem& sys, double p, double q,
                                 const Tolerances& tol = {});

struct DemandCheckIssue {
  double p;
  std::string what;
};

struct DemandCheck {
  std::vector<DemandCheckIssue> issues;
  double max_consistency_residual = 0.0;
  bool ok() const { return issues.empty(); }
};

// Grid audit of the system's standing assumptions on [price_lo, price_hi]:
// D finite and > 0, D strictly decreasing, arm demands consistent with D
// at p0 = p1 for each sampled q.
DemandCheck check_demand_system(const DemandSystem& sys,
                                std::span<const double> qs, int grid_n = 33,
                                const Tolerances& tol = {});

}  // namespace mxbias
