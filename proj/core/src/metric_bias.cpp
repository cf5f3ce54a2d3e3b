#include "mxbias/metric_bias.hpp"

#include <cmath>
#include <string>

namespace mxbias {

namespace {

void check_system(const MetricSystem& sys) {
  if (!sys.global_metric || !sys.control_metric || !sys.treatment_metric)
    raise(Errc::invalid_argument, "metric system has empty callbacks");
  if (!(sys.domain_lo < sys.domain_hi))
    raise(Errc::invalid_argument, "metric system domain is empty");
}

void check_interior(const MetricSystem& sys, double x0, double h_rel) {
  const double margin = h_rel * std::max(1.0, std::abs(x0));
  if (!(x0 - 2.0 * margin >= sys.domain_lo &&
        x0 + 2.0 * margin <= sys.domain_hi))
    raise(Errc::invalid_argument,
          "x0 too close to the domain boundary for finite differences");
}

void check_q(double q) {
  if (!(q > 0.0 && q < 1.0))
    raise(Errc::invalid_argument, "treatment share q must lie in (0, 1)");
}

// Enforces the scaling identity at x0 before any estimator math.
void require_consistent_at(const MetricSystem& sys, double x0, double q,
                           const Tolerances& tol) {
  const double t = sys.global_metric(x0);
  const double t0 = sys.control_metric(x0, x0, q);
  const double t1 = sys.treatment_metric(x0, x0, q);
  if (!std::isfinite(t) || !std::isfinite(t0) || !std::isfinite(t1))
    raise(Errc::eval_failure, "metric returned a non-finite value");
  const double thresh = tol.residual_tol * (1.0 + std::abs(t));
  const double r0 = std::abs(t0 / (1.0 - q) - t);
  const double r1 = std::abs(t1 / q - t);
  if (r0 > thresh || r1 > thresh)
    raise(Errc::consistency_violation,
          "arm metrics break T0/(1-q) = T1/q = T at x0 = " +
              std::to_string(x0) + " (residuals " + std::to_string(r0) +
              ", " + std::to_string(r1) + ")");
}

}  // namespace

double gte(const MetricSystem& sys, double x0, const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  check_interior(sys, x0, tol.fd_step);
  return central_diff(sys.global_metric, x0, tol.fd_step);
}

double naive_estimator(const MetricSystem& sys, double x0, double q,
                       const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  check_q(q);
  check_interior(sys, x0, tol.fd_step);
  require_consistent_at(sys, x0, q, tol);

  // Both arms are differentiated in the *treatment* coordinate x1.
  const auto t0 = [&](double x, double y) { return sys.control_metric(x, y, q); };
  const auto t1 = [&](double x, double y) { return sys.treatment_metric(x, y, q); };
  const double d_t1_dy = cross_partial_fd(t1, x0, x0, tol.fd_step).d_dy;
  const double d_t0_dy = cross_partial_fd(t0, x0, x0, tol.fd_step).d_dy;
  return d_t1_dy / q - d_t0_dy / (1.0 - q);
}

double bias(const MetricSystem& sys, double x0, double q,
            const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  check_q(q);
  check_interior(sys, x0, tol.fd_step);
  require_consistent_at(sys, x0, q, tol);

  // Interference terms: control's response to the treatment price and
  // treatment's response to the control price.
  const auto t0 = [&](double x, double y) { return sys.control_metric(x, y, q); };
  const auto t1 = [&](double x, double y) { return sys.treatment_metric(x, y, q); };
  const double d_t0_dy = cross_partial_fd(t0, x0, x0, tol.fd_step).d_dy;
  const double d_t1_dx = cross_partial_fd(t1, x0, x0, tol.fd_step).d_dx;
  return d_t0_dy / (1.0 - q) + d_t1_dx / q;
}

ConsistencyReport check_consistency(const MetricSystem& sys,
                                    std::span<const double> xs,
                                    std::span<const double> qs,
                                    const Tolerances& tol) {
  check_system(sys);
  tol.validate();
  if (xs.empty() || qs.empty())
    raise(Errc::invalid_argument, "consistency check needs sample points");

  ConsistencyReport rep;
  rep.threshold = tol.residual_tol;
  double worst_scaled = 0.0;
  for (const double x : xs) {
    const double t = sys.global_metric(x);
    if (!std::isfinite(t))
      raise(Errc::eval_failure, "global metric is non-finite");
    for (const double q : qs) {
      check_q(q);
      const double t0 = sys.control_metric(x, x, q);
      const double t1 = sys.treatment_metric(x, x, q);
      if (!std::isfinite(t0) || !std::isfinite(t1))
        raise(Errc::eval_failure, "arm metric is non-finite");
      const double r = std::max(std::abs(t0 / (1.0 - q) - t),
                                std::abs(t1 / q - t));
      const double scaled = r / (1.0 + std::abs(t));
      if (r > rep.max_residual) rep.max_residual = r;
      if (scaled > worst_scaled) {
        worst_scaled = scaled;
        rep.worst_x = x;
        rep.worst_q = q;
      }
    }
  }
  rep.ok = worst_scaled <= tol.residual_tol;
  return rep;
}

}  // namespace mxbias
