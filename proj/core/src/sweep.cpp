#include "mxbias/sweep.hpp"

#include <cmath>
#include <cstdio>

#include "mxbias/parallel.hpp"

namespace mxbias {

const char* to_string(RegionClass c) noexcept {
  switch (c) {
    case RegionClass::change_of_sign: return "change_of_sign";
    case RegionClass::cond_a_fails: return "cond_a_fails";
    case RegionClass::cond_b_fails: return "cond_b_fails";
    case RegionClass::both_fail: return "both_fail";
  }
  return "unknown";
}

const char* to_string(SweepDesign d) noexcept {
  switch (d) {
    case SweepDesign::lr: return "lr";
    case SweepDesign::cr: return "cr";
    case SweepDesign::both: return "both";
  }
  return "unknown";
}

std::vector<double> SweepAxis::expand() const {
  if (n < 1) raise(Errc::invalid_argument, "axis needs n >= 1");
  if (n == 1) {
    if (!(std::isfinite(lo))) raise(Errc::invalid_argument, "axis lo must be finite");
    return {lo};
  }
  if (!(lo < hi)) raise(Errc::invalid_argument, "axis needs lo < hi");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (scale == AxisScale::log) {
    if (!(lo > 0.0))
      raise(Errc::invalid_argument, "log axis needs lo > 0");
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] =
          std::exp(llo + (lhi - llo) * i / (n - 1));
    out.front() = lo;
    out.back() = hi;
  } else {
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    out.back() = hi;
  }
  return out;
}

namespace {

RegionClass classify(bool cond_a, bool cond_b) {
  if (cond_a && cond_b) return RegionClass::change_of_sign;
  if (!cond_a && cond_b) return RegionClass::cond_a_fails;
  if (cond_a && !cond_b) return RegionClass::cond_b_fails;
  return RegionClass::both_fail;
}

RegionCell eval_cell(const SweepSpec& spec, double p, double lambda) {
  RegionCell cell;
  cell.p = p;
  cell.lambda = lambda;
  cell.beta = lambda / spec.params.tau;
  try {
    if (p < spec.params.cost)
      raise(Errc::price_below_cost,
            "region classes are undefined below cost");
    MarketParams m = spec.params;
    m.lambda = lambda;
    const SteadyState st = steady_state(m, p, spec.tol);
    cell.s_star = st.s;
    cell.demand = (m.rho - st.s) * m.tau;
    cell.gte_pi = gte_profit_mf(m, p, spec.tol);
    cell.bias_lr = bias_lr(m, p, spec.tol);
    cell.bias_cr = bias_cr(m, p, spec.tol);
    cell.est_lr = cell.gte_pi - cell.bias_lr;
    cell.est_cr = cell.gte_pi - cell.bias_cr;
    cell.cond_a = cell.gte_pi >= 0.0;
    cell.cond_b_lr = cell.est_lr <= 0.0;
    cell.cond_b_cr = cell.est_cr <= 0.0;
    cell.class_lr = classify(cell.cond_a, cell.cond_b_lr);
    cell.class_cr = classify(cell.cond_a, cell.cond_b_cr);
  } catch (const Error& e) {
    cell.status = std::string("error: ") + to_string(e.code());
    const double nan = std::nan("");
    cell.s_star = cell.demand = cell.gte_pi = nan;
    cell.bias_lr = cell.bias_cr = cell.est_lr = cell.est_cr = nan;
  }
  return cell;
}

}  // namespace

std::vector<RegionCell> run_sweep(const SweepSpec& spec) {
  spec.params.validate();
  spec.tol.validate();
  if (!(spec.q > 0.0 && spec.q < 1.0))
    raise(Errc::invalid_argument, "q must lie in (0, 1)");

  const std::vector<double> prices = spec.price_axis.expand();
  std::vector<double> lambdas = spec.rate_axis.expand();
  if (spec.rate_is_beta)
    for (double& x : lambdas) x *= spec.params.tau;

  std::vector<RegionCell> cells(prices.size() * lambdas.size());
  parallel_for(cells.size(), spec.threads, [&](std::size_t i) {
    // axis2 (lambda) outermost, axis1 (price) innermost
    const std::size_t li = i / prices.size();
    const std::size_t pi = i % prices.size();
    cells[i] = eval_cell(spec, prices[pi], lambdas[li]);
  });
  return cells;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "na";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string sweep_csv(const std::vector<RegionCell>& cells,
                      SweepDesign design) {
  const bool lr = design != SweepDesign::cr;
  const bool cr = design != SweepDesign::lr;
  std::string out =
      "p,lambda,beta,s_star,demand,gte_pi,bias_lr,bias_cr,est_lr,est_cr,"
      "cond_a,cond_b_lr,cond_b_cr,class_lr,class_cr,status\n";
  const auto num = [](double x) { return format_double(x); };
  const auto flag = [](bool b) { return b ? "1" : "0"; };
  for (const RegionCell& c : cells) {
    const bool ok = c.status == "ok";
    out += num(c.p) + ',' + num(c.lambda) + ',' + num(c.beta) + ',' +
           num(c.s_star) + ',' + num(c.demand) + ',' + num(c.gte_pi) + ',';
    out += (lr ? num(c.bias_lr) : "na") + ',';
    out += (cr ? num(c.bias_cr) : "na") + ',';
    out += (lr ? num(c.est_lr) : "na") + ',';
    out += (cr ? num(c.est_cr) : "na") + ',';
    out += ok ? flag(c.cond_a) : "na";
    out += ',';
    out += ok && lr ? flag(c.cond_b_lr) : "na";
    out += ',';
    out += ok && cr ? flag(c.cond_b_cr) : "na";
    out += ',';
    out += ok && lr ? to_string(c.class_lr) : "na";
    out += ',';
    out += ok && cr ? to_string(c.class_cr) : "na";
    out += ',';
    out += c.status;
    out += '\n';
  }
  return out;
}

}  // namespace mxbias
