#pragma once

#include <functional>
#include <span>

#include "mxbias/numerics.hpp"

namespace mxbias {

// An experiment on a scalar treatment knob x (here: price). The platform
// cares about the global metric rate T(x) with every unit at x; during an
// A/B test a fraction q is treated at x1 while control stays at x0, and
// the two arms generate metric rates T0(x0, x1, q), T1(x0, x1, q).
//
// Scaling convention (required for the estimator algebra): when both arms
// sit at the same x, each arm's metric is its share of the global one,
//   T0(x, x, q) = (1 - q) T(x),  T1(x, x, q) = q T(x).
// check_consistency() measures how far a system is from that identity.
struct MetricSystem {
  std::function<double(double)> global_metric;                  // T(x)
  std::function<double(double, double, double)> control_metric; // T0
  std::function<double(double, double, double)> treatment_metric; // T1
  double domain_lo = 0.0;
  double domain_hi = 0.0;
};

// d/dx T(x): the global treatment effect of a marginal move of x.
double gte(const MetricSystem& sys, double x0, const Tolerances& tol = {});

// The standard difference-in-means slope a naive analysis reads off the
// experiment: d/dx1 [ T1/q - T0/(1-q) ] at x1 = x0. Interference makes it
// differ from gte(). Throws Error(consistency_violation) if the arm
// metrics break the scaling convention at x0.
double naive_estimator(const MetricSystem& sys, double x0, double q,
                       const Tolerances& tol = {});

// gte - naive_estimator, computed from the arm cross-partials:
//   bias = (d/dx1 T0)/(1-q) + (d/dx0 T1)/q  at x1 = x0.
double bias(const MetricSystem& sys, double x0, double q,
            const Tolerances& tol = {});

struct ConsistencyReport {
  double max_residual = 0.0;  // worst |T_arm/share - T| over the samples
  double worst_x = 0.0;
  double worst_q = 0.0;
  bool ok = true;             // max_residual within threshold
  double threshold = 0.0;
};

// Evaluates the scaling identity on the product grid xs x qs. The pass
// threshold is residual_tol * (1 + |T(x)|), i.e. relative for large
// metrics, absolute near zero.
ConsistencyReport check_consistency(const MetricSystem& sys,
                                    std::span<const double> xs,
                                    std::span<const double> qs,
                                    const Tolerances& tol = {});

}  // namespace mxbias
