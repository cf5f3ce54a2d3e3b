#pragma once

#include <string>
#include <vector>

#include "mxbias/meanfield.hpp"

namespace mxbias {

enum class AxisScale { linear, log };
enum class SweepDesign { lr, cr, both };

// Region class of one grid cell per design, from the signs of the true and
// naive profit slopes:
//   change_of_sign: gte >= 0 and naive <= 0 (experiment flips the verdict)
//   cond_a_fails:   gte <  0, naive <= 0
//   cond_b_fails:   gte >= 0, naive >  0
//   both_fail:      gte <  0, naive >  0 (estimator at least agrees in sign)
enum class RegionClass { change_of_sign, cond_a_fails, cond_b_fails, both_fail };

const char* to_string(RegionClass c) noexcept;
const char* to_string(SweepDesign d) noexcept;

// Grid of (p, lambda) cells. Axis 2 may be specified as lambda directly or
// as beta = lambda/tau (converted on expansion). Rows are emitted axis2
// outermost, axis1 innermost.
struct SweepAxis {
  double lo = 0.0;
  double hi = 0.0;
  int n = 2;
  AxisScale scale = AxisScale::linear;

  std::vector<double> expand() const;  // throws Error(invalid_argument)
};

struct SweepSpec {
  MarketParams params;      // lambda is overridden by axis2
  double q = 0.5;           // recorded; the analytic columns are q-free
  SweepAxis price_axis;
  SweepAxis rate_axis;      // lambda (or beta when rate_is_beta)
  bool rate_is_beta = false;
  SweepDesign design = SweepDesign::both;
  int threads = 1;
  Tolerances tol;
};

struct RegionCell {
  double p = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
  double s_star = 0.0;
  double demand = 0.0;
  double gte_pi = 0.0;
  double bias_lr = 0.0;
  double bias_cr = 0.0;
  double est_lr = 0.0;   // gte_pi - bias_lr
  double est_cr = 0.0;
  bool cond_a = false;
  bool cond_b_lr = false;
  bool cond_b_cr = false;
  RegionClass class_lr = RegionClass::both_fail;
  RegionClass class_cr = RegionClass::both_fail;
  std::string status = "ok";  // error tag when the cell failed; the sweep
                              // itself never aborts on a cell
};

// Evaluates every cell (deterministically, any thread count). Cells whose
// evaluation throws carry the error in `status` and NaN values.
std::vector<RegionCell> run_sweep(const SweepSpec& spec);

// Fixed CSV schema (documented in docs/output-schemas.md): header +
// one row per cell, floats with 12 significant digits, LF line ends.
// Columns of a design excluded by spec.design hold "na".
std::string sweep_csv(const std::vector<RegionCell>& cells, SweepDesign design);

// "%.12g" float formatting shared by every CSV/JSON writer, so output
// bytes are stable across platforms and thread counts.
std::string format_double(double x);

}  // namespace mxbias
