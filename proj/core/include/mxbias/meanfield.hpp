#pragma once

#include "mxbias/metric_bias.hpp"
#include "mxbias/numerics.hpp"
#include "mxbias/pricing.hpp"
#include "mxbias/valuation.hpp"

namespace mxbias {

// Mean-field two-sided rental market.
//
// A mass rho of listings is either available or occupied. Customers arrive
// at rate lambda; an arriving customer facing available mass s at price p
// books with logit probability s v(p) / (epsilon + s v(p)), and an occupied
// listing frees at rate tau. The stationary available mass s*(p) solves
//
//   (rho - s) tau = lambda s v(p) / (epsilon + s v(p)),
//
// demand (booking rate) is D(p) = (rho - s*) tau, and profit rate is
// pi(p) = (p - cost) D(p). beta = lambda / tau is the demand/supply
// pressure: beta -> 0 is a supply-glut market, beta -> inf a shortage.
//
// Two experiment designs split this market:
//  * LR (listing-randomized): a q-share of listings is priced at p1, the
//    rest at p0; a customer books group g with logit weight s_g v(p_g).
//  * CR (customer-randomized): a q-share of customers sees the whole
//    market at p1, the rest at p0.
// Both create interference through the shared availability state, which
// is what bias_lr / bias_cr quantify.
struct MarketParams {
  double rho = 1.0;      // listing mass
  double lambda = 1.0;   // customer arrival rate
  double tau = 1.0;      // rate at which an occupied listing frees up
  double epsilon = 1.0;  // outside-option weight in the logit choice
  double cost = 0.0;     // marginal cost of a booking
  ValuationSpec valuation = ValuationSpec::exponential(5.0);

  double beta() const { return lambda / tau; }
  void validate() const;  // throws Error(invalid_argument)
};

enum class SolveMethod { closed_form, bracketed };

struct SteadyState {
  double s = 0.0;         // available mass, in [0, rho]
  double residual = 0.0;  // balance-equation defect at s
  SolveMethod method = SolveMethod::closed_form;
};

// Stationary availability with every listing at p. The balance equation is
// a quadratic in s solved in closed form (with the conjugate formulation
// where the naive one cancels); if its residual is not at round-off level
// the bracketed solver on [0, rho] takes over.
SteadyState steady_state(const MarketParams& m, double p,
                         const Tolerances& tol = {});

// ds*/dp, analytic (implicit differentiation of the balance equation);
// positive: raising the price leaves more listings available.
double s_star_price_derivative(const MarketParams& m, double p,
                               const Tolerances& tol = {});

double demand(const MarketParams& m, double p, const Tolerances& tol = {});
double demand_price_derivative(const MarketParams& m, double p,
                               const Tolerances& tol = {});

// Marginal profit of a global price move:
//   gte_profit = tau (rho - s* - (p - cost) ds*/dp).
double gte_profit_mf(const MarketParams& m, double p,
                     const Tolerances& tol = {});

struct LRSteadyState {
  double s0 = 0.0;  // available mass in the control group (mass (1-q) rho)
  double s1 = 0.0;  // available mass in the treatment group (mass q rho)
  double residual0 = 0.0;
  double residual1 = 0.0;
};

// Coupled availability of an LR experiment at prices (p0, p1). Solved as a
// single bracketed scalar problem in W = s0 v0 + s1 v1 (the group balance
// equations invert in closed form given W). At p0 = p1 the split is exactly
// proportional: s0 = (1-q) s*, s1 = q s*.
LRSteadyState lr_steady_state(const MarketParams& m, double q, double p0,
                              double p1, const Tolerances& tol = {});

struct GroupDemands {
  double d0 = 0.0;  // control demand, normalized by the (1-q) share
  double d1 = 0.0;  // treatment demand, normalized by the q share
};

GroupDemands lr_demands(const MarketParams& m, double q, double p0, double p1,
                        const Tolerances& tol = {});

// CR experiment: one availability state, two customer streams. The single
// balance equation is solved on [0, rho].
SteadyState cr_steady_state(const MarketParams& m, double q, double p0,
                            double p1, const Tolerances& tol = {});
GroupDemands cr_demands(const MarketParams& m, double q, double p0, double p1,
                        const Tolerances& tol = {});

struct InterferencePartials {
  double d0_dp1 = 0.0;  // control demand response to the treatment price
  double d1_dp0 = 0.0;  // treatment demand response to the control price
};

// Analytic cross-partials at p0 = p1 = p (implicit differentiation of the
// coupled balance systems). They obey q d1_dp0 = (1-q) d0_dp1, which is
// why the bias below does not depend on q.
InterferencePartials lr_cross_partials(const MarketParams& m, double q,
                                       double p, const Tolerances& tol = {});
InterferencePartials cr_cross_partials(const MarketParams& m, double q,
                                       double p, const Tolerances& tol = {});

// Closed-form interference bias of the naive profit estimator,
// (p - cost) * (d0_dp1 + d1_dp0); q-free, and >= 0 for p >= cost.
double bias_lr(const MarketParams& m, double p, const Tolerances& tol = {});
double bias_cr(const MarketParams& m, double p, const Tolerances& tol = {});

// Extreme-market limits at price p. Low pressure (beta -> 0) normalizes by
// lambda, shortage (beta -> inf) by tau:
//   gte_low     = lim gte/lambda = rho v/(e + rho v) + (p-c) rho v' e/(e + rho v)^2
//   bias_lr_low = lim bias_lr/lambda = -(p-c) rho^2 v v'/(e + rho v)^2
//   bias_cr_low = 0        (CR is unbiased in a supply glut)
//   gte_high    = lim gte/tau = rho
//   bias_lr_high= 0        (LR is unbiased in a shortage)
//   bias_cr_high= lim bias_cr/tau = -rho (p-c) v'/v
struct LimitValues {
  double gte_low = 0.0;
  double bias_lr_low = 0.0;
  double bias_cr_low = 0.0;
  double gte_high = 0.0;
  double bias_lr_high = 0.0;
  double bias_cr_high = 0.0;
};

LimitValues limit_values(const MarketParams& m, double p);

// Bridges into the generic experiment calculus. Price window for the
// systems below: [max(cost, lo), hi]; every call re-solves the market.
DemandSystem lr_demand_system(const MarketParams& m, double price_lo,
                              double price_hi);
DemandSystem cr_demand_system(const MarketParams& m, double price_lo,
                              double price_hi);
MetricSystem lr_profit_system(const MarketParams& m, double price_lo,
                              double price_hi);
MetricSystem cr_profit_system(const MarketParams& m, double price_lo,
                              double price_hi);

}  // namespace mxbias
