#include "mxbias/valuation.hpp"

#include <cmath>

namespace mxbias {

ValuationSpec ValuationSpec::exponential(double peak) {
  if (!std::isfinite(peak))
    raise(Errc::invalid_argument, "exponential valuation peak must be finite");
  return ValuationSpec{
      [peak](double p) { return std::exp(peak - p); },
      [peak](double p) { return -std::exp(peak - p); },
      "exponential"};
}

ValuationSpec ValuationSpec::linear(double a, double b) {
  if (!(b > 0.0))
    raise(Errc::invalid_argument, "linear valuation needs slope b > 0");
  return ValuationSpec{
      [a, b](double p) { return a - b * p; },
      [b](double) { return -b; },
      "linear"};
}

ValuationSpec ValuationSpec::custom(std::function<double(double)> value,
                                    std::function<double(double)> slope) {
  if (!value || !slope)
    raise(Errc::invalid_argument, "custom valuation needs v and v'");
  return ValuationSpec{std::move(value), std::move(slope), "custom"};
}

ValuationCheck check_valuation(const ValuationSpec& v, double cost,
                               double price_hi, int n) {
  if (n < 3) raise(Errc::invalid_argument, "valuation check needs n >= 3");
  if (!(price_hi > cost))
    raise(Errc::invalid_argument, "price_hi must exceed cost");

  const double lo = cost + 1e-9;
  ValuationCheck out;
  bool have_failure = false;
  const auto fail = [&](bool& flag, double p) {
    flag = false;
    if (!have_failure) {
      out.worst_p = p;
      have_failure = true;
    }
  };

  double prev_g = 0.0;
  bool have_prev_g = false;
  for (int i = 0; i < n; ++i) {
    const double p =
        lo + (price_hi - lo) * static_cast<double>(i) / (n - 1);
    const double val = v.value(p);
    const double slp = v.slope(p);
    if (!std::isfinite(val) || !std::isfinite(slp))
      raise(Errc::eval_failure, "valuation sample is non-finite");
    if (out.positive && !(val > 0.0)) fail(out.positive, p);
    if (out.decreasing && !(slp < 0.0)) fail(out.decreasing, p);
    if (!(val > 0.0)) continue;  // g undefined without positivity

    const double g = (p - cost) * (-slp / val);
    if (have_prev_g && out.single_crossing) {
      // Strict increase with only a round-off allowance: a constant g
      // (e.g. v = 1/p) must fail.
      if (!(g - prev_g > 1e-10 * (1.0 + std::abs(g))))
        fail(out.single_crossing, p);
    }
    prev_g = g;
    have_prev_g = true;
  }
  return out;
}

void require_valuation(const ValuationSpec& v, double cost, double price_hi,
                       int n) {
  const ValuationCheck c = check_valuation(v, cost, price_hi, n);
  if (c.ok()) return;
  std::string what = "valuation fails on (" + std::to_string(cost) + ", " +
                     std::to_string(price_hi) + "]:";
  if (!c.positive) what += " v <= 0";
  if (!c.decreasing) what += " v' >= 0";
  if (!c.single_crossing) what += " (p-c)(-v'/v) not strictly increasing";
  what += " near p = " + std::to_string(c.worst_p);
  raise(Errc::assumption_violation, what);
}

}  // namespace mxbias
