// mxbias: steady states, treatment effects, and interference bias of
// marketplace price experiments, plus the finite-N simulator.
//
// Subcommands: steady, gte, bias, sweep, limits, simulate, check.
// Exit codes: 0 success, 1 property/computation failure, 2 invalid input.
// Output schemas are documented in docs/output-schemas.md.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mxbias/meanfield.hpp"
#include "mxbias/sim.hpp"
#include "mxbias/sweep.hpp"

using nlohmann::json;
using namespace mxbias;

namespace {

constexpr int kSchemaVersion = 1;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::invalid_argument:
    case Errc::price_below_cost:
    case Errc::degenerate_delta:
    case Errc::assumption_violation:
      return 2;
    default:
      return 1;
  }
}

[[noreturn]] void config_error(const std::string& path,
                               const std::string& what) {
  raise(Errc::invalid_argument, "config field '" + path + "': " + what);
}

double get_num(const json& j, const std::string& path, double fallback,
               bool* found = nullptr) {
  const json* cur = &j;
  std::string walked;
  std::istringstream keys(path);
  std::string key;
  while (std::getline(keys, key, '.')) {
    if (!cur->is_object() || !cur->contains(key)) {
      if (found) *found = false;
      return fallback;
    }
    walked += walked.empty() ? key : "." + key;
    cur = &(*cur)[key];
  }
  if (!cur->is_number()) config_error(walked, "expected a number");
  if (found) *found = true;
  return cur->get<double>();
}

std::string get_str(const json& j, const std::string& path,
                    const std::string& fallback) {
  const json* cur = &j;
  std::istringstream keys(path);
  std::string key;
  while (std::getline(keys, key, '.')) {
    if (!cur->is_object() || !cur->contains(key)) return fallback;
    cur = &(*cur)[key];
  }
  if (!cur->is_string()) config_error(path, "expected a string");
  return cur->get<std::string>();
}

// All tunables of every subcommand; CLI flags override config-file values.
struct Options {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: one worker per hardware thread
  double tol = -1.0;

  // market
  std::optional<double> rho, lambda, tau, epsilon, cost, peak, va, vb;
  std::optional<std::string> valuation;

  // experiment point
  std::optional<double> p, q, p0, p1;
  std::optional<std::string> design;

  // simulate
  std::optional<int> n_listings, replications;
  std::optional<double> horizon, burn_in;

  // limits
  std::optional<std::string> beta_ladder;

  json config;  // parsed config file ({} when absent)

  void load_config() {
    if (config_path.empty()) {
      config = json::object();
      return;
    }
    std::ifstream in(config_path);
    if (!in) raise(Errc::invalid_argument, "cannot open config " + config_path);
    try {
      in >> config;
    } catch (const json::exception& e) {
      raise(Errc::invalid_argument,
            "config " + config_path + " is not valid JSON: " + e.what());
    }
    if (!config.is_object())
      raise(Errc::invalid_argument, "config root must be a JSON object");
  }

  int effective_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }

  Tolerances tolerances() const {
    Tolerances t;
    if (tol >= 0.0) {
      t.residual_tol = tol;
      t.step_tol = tol;
    }
    return t;
  }

  MarketParams market() const {
    MarketParams m;
    m.rho = rho.value_or(get_num(config, "market.rho", 1.0));
    m.lambda = lambda.value_or(get_num(config, "market.lambda", 1.0));
    m.tau = tau.value_or(get_num(config, "market.tau", 1.0));
    m.epsilon = epsilon.value_or(get_num(config, "market.epsilon", 1.0));
    m.cost = cost.value_or(get_num(config, "market.cost", 1.0));
    const std::string family = valuation.value_or(
        get_str(config, "market.valuation.family", "exponential"));
    if (family == "exponential") {
      m.valuation = ValuationSpec::exponential(
          peak.value_or(get_num(config, "market.valuation.peak", 5.0)));
    } else if (family == "linear") {
      bool have_a = false, have_b = false;
      const double a =
          va.value_or(get_num(config, "market.valuation.a", 0.0, &have_a));
      const double b =
          vb.value_or(get_num(config, "market.valuation.b", 0.0, &have_b));
      if (!va && !have_a)
        config_error("market.valuation.a", "required for the linear family");
      if (!vb && !have_b)
        config_error("market.valuation.b", "required for the linear family");
      m.valuation = ValuationSpec::linear(a, b);
    } else {
      config_error("market.valuation.family",
                   "unknown family '" + family + "'");
    }
    return m;
  }

  double point_p() const { return p.value_or(get_num(config, "p", 5.0)); }
  double point_q() const { return q.value_or(get_num(config, "q", 0.5)); }
  std::string design_name(const std::string& fallback) const {
    return design.value_or(get_str(config, "design", fallback));
  }
};

json market_json(const MarketParams& m) {
  json v{{"family", m.valuation.family}};
  return json{{"rho", m.rho},         {"lambda", m.lambda},
              {"tau", m.tau},         {"epsilon", m.epsilon},
              {"cost", m.cost},       {"beta", m.beta()},
              {"valuation", v}};
}

void emit(const json& j, const Options& opt) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!opt.out_path.empty()) {
    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out) raise(Errc::invalid_argument, "cannot write " + opt.out_path);
    out << text;
  }
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::invalid_argument, "cannot write " + path);
  out << bytes;
}

// Price window wide enough for every finite-difference stencil at p.
void window_around(double p, double cost, double& lo, double& hi) {
  lo = std::min(p - 1.0, cost);
  hi = p + 1.0;
}

int cmd_steady(const Options& opt) {
  const MarketParams m = opt.market();
  const double p = opt.point_p();
  const Tolerances tol = opt.tolerances();
  const SteadyState st = steady_state(m, p, tol);
  emit(json{{"schema_version", kSchemaVersion},
            {"command", "steady"},
            {"market", market_json(m)},
            {"p", p},
            {"s_star", st.s},
            {"residual", st.residual},
            {"method", st.method == SolveMethod::closed_form ? "closed_form"
                                                             : "bracketed"},
            {"demand", (m.rho - st.s) * m.tau}},
       opt);
  return 0;
}

int cmd_gte(const Options& opt) {
  const MarketParams m = opt.market();
  const double p = opt.point_p();
  const Tolerances tol = opt.tolerances();
  const SteadyState st = steady_state(m, p, tol);
  emit(json{{"schema_version", kSchemaVersion},
            {"command", "gte"},
            {"market", market_json(m)},
            {"p", p},
            {"s_star", st.s},
            {"demand", (m.rho - st.s) * m.tau},
            {"demand_slope", demand_price_derivative(m, p, tol)},
            {"gte_pi", gte_profit_mf(m, p, tol)}},
       opt);
  return 0;
}

json bias_report(const MarketParams& m, bool lr, double p, double q,
                 const Tolerances& tol) {
  double lo, hi;
  window_around(p, m.cost, lo, hi);
  const DemandSystem sys =
      lr ? lr_demand_system(m, lo, hi) : cr_demand_system(m, lo, hi);
  const SignClassification c = classify_sign(sys, p, q, tol);
  return json{{"s_star", steady_state(m, p, tol).s},
              {"demand", c.demand},
              {"demand_slope", c.demand_slope},
              {"gte_pi", c.gte_pi},
              {"est_pi", c.est_pi},
              {"bias_pi", c.bias_pi},
              {"bias_pi_closed_form", lr ? bias_lr(m, p, tol) : bias_cr(m, p, tol)},
              {"elasticity", c.elasticity},
              {"experiment_elasticity", c.experiment_elasticity},
              {"lerner", c.lerner},
              {"inv_elasticity", c.inv_elasticity},
              {"naive_bound", c.naive_bound},
              {"cond_a", c.cond_a},
              {"cond_b", c.cond_b},
              {"change_of_sign", c.change_of_sign},
              {"boundary", c.boundary},
              {"class", to_string(c.change_of_sign
                                      ? RegionClass::change_of_sign
                                      : (!c.cond_a && c.cond_b)
                                            ? RegionClass::cond_a_fails
                                            : (c.cond_a && !c.cond_b)
                                                  ? RegionClass::cond_b_fails
                                                  : RegionClass::both_fail)}};
}

int cmd_bias(const Options& opt) {
  const MarketParams m = opt.market();
  const double p = opt.point_p();
  const double q = opt.point_q();
  const Tolerances tol = opt.tolerances();
  const std::string design = opt.design_name("both");
  json out{{"schema_version", kSchemaVersion},
           {"command", "bias"},
           {"market", market_json(m)},
           {"p", p},
           {"q", q},
           {"design", design}};
  if (design == "lr" || design == "cr") {
    out.update(bias_report(m, design == "lr", p, q, tol));
  } else if (design == "both") {
    out["lr"] = bias_report(m, true, p, q, tol);
    out["cr"] = bias_report(m, false, p, q, tol);
  } else {
    raise(Errc::invalid_argument,
          "design must be lr, cr or both (got '" + design + "')");
  }
  emit(out, opt);
  return 0;
}

int cmd_limits(const Options& opt) {
  const MarketParams m = opt.market();
  const double p = opt.point_p();
  const Tolerances tol = opt.tolerances();
  const LimitValues lv = limit_values(m, p);

  std::vector<double> low{1.0, 1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<double> high{1.0, 1e1, 1e2, 1e3, 1e4};
  if (const std::string ladder = opt.beta_ladder.value_or(""); !ladder.empty()) {
    std::vector<double> values;
    std::istringstream ss(ladder);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t pos = 0;
      double value = 0.0;
      try {
        value = std::stod(item, &pos);
      } catch (...) {
        pos = 0;
      }
      if (pos != item.size() || !(value > 0.0))
        raise(Errc::invalid_argument,
              "--beta-ladder entry '" + item + "' is not a positive number");
      values.push_back(value);
    }
    if (values.empty())
      raise(Errc::invalid_argument, "empty --beta-ladder");
    low = high = values;
  }

  const auto rung = [&](double beta, bool low_side) {
    MarketParams mm = m;
    mm.lambda = beta * m.tau;
    const double scale = low_side ? mm.lambda : mm.tau;
    return json{{"beta", beta},
                {"gte_pi", gte_profit_mf(mm, p, tol) / scale},
                {"bias_lr", bias_lr(mm, p, tol) / scale},
                {"bias_cr", bias_cr(mm, p, tol) / scale}};
  };
  json low_ladder = json::array();
  for (double b : low) low_ladder.push_back(rung(b, true));
  json high_ladder = json::array();
  for (double b : high) high_ladder.push_back(rung(b, false));

  emit(json{{"schema_version", kSchemaVersion},
            {"command", "limits"},
            {"market", market_json(m)},
            {"p", p},
            {"low_pressure",
             {{"normalized_by", "lambda"},
              {"target_gte_pi", lv.gte_low},
              {"target_bias_lr", lv.bias_lr_low},
              {"target_bias_cr", lv.bias_cr_low},
              {"ladder", low_ladder}}},
            {"high_pressure",
             {{"normalized_by", "tau"},
              {"target_gte_pi", lv.gte_high},
              {"target_bias_lr", lv.bias_lr_high},
              {"target_bias_cr", lv.bias_cr_high},
              {"ladder", high_ladder}}}},
       opt);
  return 0;
}

SweepAxis axis_from_config(const json& cfg, const std::string& key,
                           const SweepAxis& fallback) {
  SweepAxis ax = fallback;
  if (!cfg.contains(key)) return ax;
  const json& a = cfg.at(key);
  ax.lo = get_num(a, "lo", ax.lo);
  ax.hi = get_num(a, "hi", ax.hi);
  ax.n = static_cast<int>(get_num(a, "n", ax.n));
  const std::string scale = get_str(a, "scale", "");
  if (scale == "linear") ax.scale = AxisScale::linear;
  else if (scale == "log") ax.scale = AxisScale::log;
  else if (!scale.empty())
    config_error(key + ".scale", "expected 'linear' or 'log'");
  return ax;
}

int cmd_sweep(const Options& opt) {
  SweepSpec spec;
  spec.params = opt.market();
  spec.q = opt.point_q();
  spec.threads = opt.effective_threads();
  spec.tol = opt.tolerances();

  const json sweep_cfg = opt.config.contains("sweep") ? opt.config.at("sweep")
                                                      : json::object();
  spec.price_axis = axis_from_config(
      sweep_cfg, "price", SweepAxis{0.5, 8.0, 64, AxisScale::linear});
  spec.rate_axis = axis_from_config(
      sweep_cfg, "rate", SweepAxis{1e-2, 1e2, 64, AxisScale::log});
  const std::string kind = get_str(sweep_cfg, "rate.kind", "lambda");
  if (kind == "beta") spec.rate_is_beta = true;
  else if (kind != "lambda")
    config_error("sweep.rate.kind", "expected 'lambda' or 'beta'");

  const std::string design =
      opt.design_name(get_str(sweep_cfg, "design", "both"));
  if (design == "lr") spec.design = SweepDesign::lr;
  else if (design == "cr") spec.design = SweepDesign::cr;
  else if (design == "both") spec.design = SweepDesign::both;
  else
    raise(Errc::invalid_argument,
          "design must be lr, cr or both (got '" + design + "')");

  const std::vector<RegionCell> cells = run_sweep(spec);
  const std::string csv = sweep_csv(cells, spec.design);

  std::size_t failed = 0;
  for (const auto& c : cells)
    if (c.status != "ok") ++failed;

  if (opt.out_path.empty()) {
    std::cout << csv;
  } else {
    write_file(opt.out_path, csv);
    std::cout << json{{"schema_version", kSchemaVersion},
                      {"command", "sweep"},
                      {"rows", cells.size()},
                      {"cells_failed", failed},
                      {"design", design},
                      {"out", opt.out_path}}
                     .dump(2)
              << "\n";
  }
  return 0;
}

int cmd_simulate(const Options& opt) {
  SimConfig cfg;
  cfg.params = [&] {
    // Market construction without MarketParams::validate(): the simulator
    // legitimately accepts lambda == 0.
    MarketParams m;
    m.rho = opt.rho.value_or(get_num(opt.config, "market.rho", 1.0));
    m.lambda = opt.lambda.value_or(get_num(opt.config, "market.lambda", 1.0));
    m.tau = opt.tau.value_or(get_num(opt.config, "market.tau", 1.0));
    m.epsilon = opt.epsilon.value_or(get_num(opt.config, "market.epsilon", 1.0));
    m.cost = opt.cost.value_or(get_num(opt.config, "market.cost", 1.0));
    m.valuation = ValuationSpec::exponential(
        opt.peak.value_or(get_num(opt.config, "market.valuation.peak", 5.0)));
    const std::string family = opt.valuation.value_or(
        get_str(opt.config, "market.valuation.family", "exponential"));
    if (family == "linear") {
      m.valuation = ValuationSpec::linear(
          opt.va.value_or(get_num(opt.config, "market.valuation.a", 0.0)),
          opt.vb.value_or(get_num(opt.config, "market.valuation.b", 0.0)));
    } else if (family != "exponential") {
      config_error("market.valuation.family", "unknown family '" + family + "'");
    }
    return m;
  }();

  const std::string design = opt.design_name("global");
  if (design == "global") cfg.design = Design::global;
  else if (design == "lr") cfg.design = Design::lr;
  else if (design == "cr") cfg.design = Design::cr;
  else
    raise(Errc::invalid_argument,
          "design must be global, lr or cr (got '" + design + "')");

  cfg.q = opt.point_q();
  cfg.p0 = opt.p0.value_or(get_num(opt.config, "p0", opt.point_p()));
  cfg.p1 = opt.p1.value_or(get_num(opt.config, "p1", cfg.p0));
  cfg.n_listings =
      opt.n_listings.value_or(static_cast<int>(get_num(opt.config, "sim.n_listings", 500)));
  cfg.horizon = opt.horizon.value_or(get_num(opt.config, "sim.horizon", 1000.0));
  cfg.burn_in = opt.burn_in.value_or(get_num(opt.config, "sim.burn_in", -1.0));
  cfg.replications =
      opt.replications.value_or(static_cast<int>(get_num(opt.config, "sim.replications", 20)));
  cfg.seed = opt.seed;
  cfg.threads = opt.effective_threads();

  const SimOutcome out = simulate(cfg);

  // Mean-field predictions for side-by-side comparison (skipped for the
  // degenerate lambda == 0 chain, whose limits are trivially s = rho, d = 0).
  json mf;
  double mf_a0 = cfg.params.rho, mf_a1 = cfg.params.rho;
  double mf_r0 = 0.0, mf_r1 = 0.0;
  double mf_naive = std::numeric_limits<double>::quiet_NaN();
  const Tolerances tol = opt.tolerances();
  if (cfg.params.lambda > 0.0) {
    if (cfg.design == Design::lr) {
      const LRSteadyState st =
          lr_steady_state(cfg.params, cfg.q, cfg.p0, cfg.p1, tol);
      const GroupDemands d = lr_demands(cfg.params, cfg.q, cfg.p0, cfg.p1, tol);
      mf_a0 = st.s0; mf_a1 = st.s1; mf_r0 = d.d0; mf_r1 = d.d1;
    } else if (cfg.design == Design::cr) {
      const SteadyState st = cr_steady_state(cfg.params, cfg.q, cfg.p0, cfg.p1, tol);
      const GroupDemands d = cr_demands(cfg.params, cfg.q, cfg.p0, cfg.p1, tol);
      mf_a0 = mf_a1 = st.s; mf_r0 = d.d0; mf_r1 = d.d1;
    } else {
      const SteadyState st = steady_state(cfg.params, cfg.p0, tol);
      mf_a0 = mf_a1 = st.s;
      mf_r0 = mf_r1 = (cfg.params.rho - st.s) * cfg.params.tau;
    }
    if (cfg.design != Design::global && cfg.p1 != cfg.p0) {
      mf_naive = ((cfg.p1 - cfg.params.cost) * mf_r1 -
                  (cfg.p0 - cfg.params.cost) * mf_r0) /
                 (cfg.p1 - cfg.p0);
    }
  }
  mf = json{{"avail0", mf_a0}, {"avail1", mf_a1},
            {"rate0", mf_r0},  {"rate1", mf_r1},
            {"naive_finite_delta", mf_naive}};

  if (!opt.out_path.empty()) {
    std::string csv =
        "rep,avail0,avail1,rate0,rate1,bookings0,bookings1,arrivals,frees,"
        "naive_hat,mf_avail0,mf_avail1,mf_rate0,mf_rate1\n";
    for (std::size_t i = 0; i < out.reps.size(); ++i) {
      const ReplicationStats& r = out.reps[i];
      const double naive = i < out.naive_per_rep.size()
                               ? out.naive_per_rep[i]
                               : std::numeric_limits<double>::quiet_NaN();
      csv += std::to_string(i) + ',' + format_double(r.avail0) + ',' +
             format_double(r.avail1) + ',' + format_double(r.rate0) + ',' +
             format_double(r.rate1) + ',' + std::to_string(r.bookings0) +
             ',' + std::to_string(r.bookings1) + ',' +
             std::to_string(r.arrivals) + ',' + std::to_string(r.frees) +
             ',' + format_double(naive) + ',' + format_double(mf_a0) + ',' +
             format_double(mf_a1) + ',' + format_double(mf_r0) + ',' +
             format_double(mf_r1) + '\n';
    }
    write_file(opt.out_path, csv);
  }

  emit(json{{"schema_version", kSchemaVersion},
            {"command", "simulate"},
            {"market", market_json(cfg.params)},
            {"design", design},
            {"q", cfg.q},
            {"p0", cfg.p0},
            {"p1", cfg.p1},
            {"n_listings", cfg.n_listings},
            {"horizon", cfg.horizon},
            {"burn_in", cfg.effective_burn_in()},
            {"replications", cfg.replications},
            {"seed", cfg.seed},
            {"mean_avail0", out.mean_avail0},
            {"se_avail0", out.se_avail0},
            {"mean_avail1", out.mean_avail1},
            {"se_avail1", out.se_avail1},
            {"mean_rate0", out.mean_rate0},
            {"se_rate0", out.se_rate0},
            {"mean_rate1", out.mean_rate1},
            {"se_rate1", out.se_rate1},
            {"naive_mean", out.naive_mean},
            {"naive_ci_halfwidth", out.naive_ci_halfwidth},
            {"meanfield", mf}},
       [&] {
         Options o = opt;
         o.out_path.clear();  // --out holds the CSV; JSON goes to stdout
         return o;
       }());
  return 0;
}

// ---------------------------------------------------------------------------
// check: the self-diagnosis battery. Prints one line per property.

struct Checker {
  int failures = 0;
  void report(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << "\n";
    if (!ok) ++failures;
  }
};

int cmd_check(const Options& opt) {
  const MarketParams base = opt.market();
  base.validate();
  const double q = opt.point_q();
  const Tolerances tol = opt.tolerances();
  const double wlo = base.cost + 0.25;
  const double whi = base.cost + 7.0;
  Checker ck;

  const auto linspace = [](double lo, double hi, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return xs;
  };
  const auto logspace = [&](double lo, double hi, int n) {
    std::vector<double> xs = linspace(std::log(lo), std::log(hi), n);
    for (double& x : xs) x = std::exp(x);
    return xs;
  };

  // 1. valuation shape
  {
    const ValuationCheck vc = check_valuation(base.valuation, base.cost, whi);
    ck.report(vc.ok(), "valuation_shape",
              vc.ok() ? "positive, decreasing, single-crossing"
                      : "fails near p = " + format_double(vc.worst_p));
  }

  // 2. steady-state residuals and solver agreement
  {
    double worst_res = 0.0, worst_gap = 0.0;
    for (double lam : logspace(0.01, 100.0, 9)) {
      MarketParams m = base;
      m.lambda = lam;
      for (double p : linspace(wlo, whi, 9)) {
        const SteadyState st = steady_state(m, p, tol);
        worst_res = std::max(worst_res, std::abs(st.residual));
        const double v = m.valuation.value(p);
        const auto f = [&](double s) {
          return (m.rho - s) * m.tau - m.lambda * s * v / (m.epsilon + s * v);
        };
        Tolerances exact = tol;
        exact.residual_tol = 0.0;
        exact.step_tol = 0.0;
        exact.max_iter = 2000;
        const double sb = find_root_bracketed(f, 0.0, m.rho, exact);
        worst_gap = std::max(worst_gap, std::abs(sb - st.s));
      }
    }
    const bool ok = worst_res <= 1e-10 && worst_gap <= 1e-12;
    ck.report(ok, "steady_state",
              "max residual " + format_double(worst_res) +
                  ", closed-form vs bracketed gap " + format_double(worst_gap));
  }

  // 3. analytic first derivatives vs finite differences
  {
    double worst = 0.0;
    for (double lam : logspace(0.01, 100.0, 7)) {
      MarketParams m = base;
      m.lambda = lam;
      for (double p : linspace(wlo, whi, 7)) {
        const double an = s_star_price_derivative(m, p, tol);
        const double fd = central_diff(
            [&](double x) { return steady_state(m, x, tol).s; }, p,
            tol.fd_step);
        worst = std::max(worst, std::abs(an - fd) /
                                    std::max({std::abs(an), std::abs(fd), 1e-12}));
      }
    }
    ck.report(worst <= 1e-5, "first_derivatives",
              "worst relative gap " + format_double(worst));
  }

  // 4. analytic cross-partials vs finite differences. The partials decay far
  // below the O(1) demand scale at extreme utilization, where a central
  // difference bottoms out at eps*|demand|/h of absolute noise; the wider
  // step keeps that noise near 4e-12, and the 1e-4 scale floor makes the
  // comparison absolute once a partial drops below the oracle's resolution.
  {
    const double h = 1e-4;
    double worst = 0.0;
    for (double lam : {0.1, 1.0, 10.0}) {
      MarketParams m = base;
      m.lambda = lam;
      for (double p : linspace(wlo + 0.5, whi - 0.5, 4)) {
        const InterferencePartials lr = lr_cross_partials(m, q, p, tol);
        const InterferencePartials cr = cr_cross_partials(m, q, p, tol);
        const double lr_fd = central_diff(
            [&](double y) { return lr_demands(m, q, p, y, tol).d0; }, p, h);
        const double cr_fd = central_diff(
            [&](double y) { return cr_demands(m, q, p, y, tol).d0; }, p, h);
        worst = std::max(worst, std::abs(lr.d0_dp1 - lr_fd) /
                                    std::max(std::abs(lr_fd), 1e-4));
        worst = std::max(worst, std::abs(cr.d0_dp1 - cr_fd) /
                                    std::max(std::abs(cr_fd), 1e-4));
      }
    }
    ck.report(worst <= 1e-5, "cross_partials",
              "worst relative gap " + format_double(worst));
  }

  // 5. gte = naive + bias (both designs)
  {
    double worst = 0.0;
    for (double lam : {0.05, 1.0, 20.0}) {
      MarketParams m = base;
      m.lambda = lam;
      double lo, hi;
      for (double p : linspace(wlo + 0.5, whi - 0.5, 3)) {
        window_around(p, m.cost, lo, hi);
        for (bool lr : {true, false}) {
          const MetricSystem sys = lr ? lr_profit_system(m, lo, hi)
                                      : cr_profit_system(m, lo, hi);
          const double g = gte(sys, p, tol);
          const double n = naive_estimator(sys, p, q, tol);
          const double b = bias(sys, p, q, tol);
          worst = std::max(worst, std::abs(g - n - b));
        }
      }
    }
    ck.report(worst <= 1e-6, "decomposition_identity",
              "worst |gte - naive - bias| = " + format_double(worst));
  }

  // 6. arm/global consistency across (p, q)
  {
    const std::vector<double> xs = linspace(wlo, whi, 5);
    const std::vector<double> qs = linspace(0.1, 0.9, 5);
    const ConsistencyReport lr =
        check_consistency(lr_profit_system(base, wlo - 1.0, whi + 1.0), xs, qs, tol);
    const ConsistencyReport cr =
        check_consistency(cr_profit_system(base, wlo - 1.0, whi + 1.0), xs, qs, tol);
    ck.report(lr.ok && cr.ok, "arm_consistency",
              "max residuals lr " + format_double(lr.max_residual) + ", cr " +
                  format_double(cr.max_residual));
  }

  // 7. bias is non-negative
  {
    double worst = 0.0;
    for (double lam : logspace(0.01, 100.0, 7)) {
      MarketParams m = base;
      m.lambda = lam;
      for (double p : linspace(wlo, whi, 7)) {
        worst = std::min(worst, bias_lr(m, p, tol));
        worst = std::min(worst, bias_cr(m, p, tol));
      }
    }
    ck.report(worst >= -1e-12, "bias_nonnegative",
              "most negative closed-form bias " + format_double(worst));
  }

  // 8. bias does not depend on q; arm partials obey the q-scaling
  {
    double spread = 0.0, scale_gap = 0.0;
    MarketParams m = base;
    for (double p : linspace(wlo + 0.5, whi - 0.5, 3)) {
      double blr_lo = 1e300, blr_hi = -1e300;
      for (double qq : linspace(0.1, 0.9, 9)) {
        const InterferencePartials lr = lr_cross_partials(m, qq, p, tol);
        const InterferencePartials cr = cr_cross_partials(m, qq, p, tol);
        const double blr = (p - m.cost) * (lr.d0_dp1 + lr.d1_dp0);
        blr_lo = std::min(blr_lo, blr);
        blr_hi = std::max(blr_hi, blr);
        scale_gap = std::max(
            scale_gap, std::abs(qq * lr.d1_dp0 - (1.0 - qq) * lr.d0_dp1));
        scale_gap = std::max(
            scale_gap, std::abs(qq * cr.d1_dp0 - (1.0 - qq) * cr.d0_dp1));
      }
      spread = std::max(spread, blr_hi - blr_lo);
    }
    ck.report(spread <= 1e-8 && scale_gap <= 1e-12, "q_invariance",
              "bias spread over q " + format_double(spread) +
                  ", scaling defect " + format_double(scale_gap));
  }

  // 9. bound ordering lerner <= naive_bound (equivalent to bias >= 0)
  {
    bool ok = true;
    double lo, hi;
    for (double p : linspace(wlo + 0.5, whi - 0.5, 4)) {
      window_around(p, base.cost, lo, hi);
      const SignClassification c =
          classify_sign(lr_demand_system(base, lo, hi), p, q, tol);
      if (!(c.lerner <= c.naive_bound + 1e-9)) ok = false;
    }
    ck.report(ok, "bound_ordering", "");
  }

  // 10. extreme-market limits
  {
    const double p = std::min(base.cost + 4.0, whi - 0.5);
    const LimitValues lv = limit_values(base, p);
    MarketParams low = base;
    low.lambda = 1e-4 * base.tau;
    MarketParams high = base;
    high.lambda = 1e4 * base.tau;
    const double lr_gap =
        std::abs(bias_lr(low, p, tol) / low.lambda - lv.bias_lr_low) /
        std::max(std::abs(lv.bias_lr_low), 1e-12);
    const double cr_level = std::abs(bias_cr(low, p, tol) / low.lambda);
    const double cr_gap =
        std::abs(bias_cr(high, p, tol) / high.tau - lv.bias_cr_high) /
        std::max(std::abs(lv.bias_cr_high), 1e-12);
    const double lr_level = std::abs(bias_lr(high, p, tol) / high.tau);
    const bool ok =
        lr_gap <= 0.01 && cr_level <= 1e-3 && cr_gap <= 0.01 && lr_level <= 1e-3;
    ck.report(ok, "extreme_limits",
              "low-pressure lr gap " + format_double(lr_gap) +
                  ", high-pressure cr gap " + format_double(cr_gap));
  }

  std::cout << (ck.failures == 0 ? "all checks passed\n"
                                 : std::to_string(ck.failures) +
                                       " check(s) failed\n");
  return ck.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "marketplace price-experiment bias: steady states, treatment effects, "
      "interference bias, region maps, and a finite-N simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "JSON config file");
  app.add_option("--out", opt.out_path, "output file (CSV or JSON)");
  app.add_option("--seed", opt.seed, "RNG seed (simulate)");
  app.add_option("--threads", opt.threads, "worker threads (0 = auto)");
  app.add_option("--tol", opt.tol, "residual/step tolerance override");

  // Callback-backed options so the targets can stay std::optional (absent
  // means "defer to the config file"). A false return becomes a CLI11
  // conversion error, hence exit code 2.
  const auto num_cb = [](std::optional<double>& slot) {
    return [&slot](const CLI::results_t& v) {
      std::size_t pos = 0;
      try {
        slot = std::stod(v.at(0), &pos);
      } catch (...) {
        return false;
      }
      return pos == v.at(0).size();
    };
  };
  const auto int_cb = [](std::optional<int>& slot) {
    return [&slot](const CLI::results_t& v) {
      std::size_t pos = 0;
      try {
        slot = std::stoi(v.at(0), &pos);
      } catch (...) {
        return false;
      }
      return pos == v.at(0).size();
    };
  };
  const auto str_cb = [](std::optional<std::string>& slot) {
    return [&slot](const CLI::results_t& v) {
      slot = v.at(0);
      return true;
    };
  };

  const auto add_market = [&](CLI::App* cmd) {
    cmd->add_option("--rho", num_cb(opt.rho), "listing mass");
    cmd->add_option("--lambda", num_cb(opt.lambda), "customer arrival rate");
    cmd->add_option("--tau", num_cb(opt.tau), "listing free-up rate");
    cmd->add_option("--epsilon", num_cb(opt.epsilon), "outside-option weight");
    cmd->add_option("--cost", num_cb(opt.cost), "marginal cost");
    cmd->add_option("--valuation", str_cb(opt.valuation),
                    "valuation family (exponential|linear)");
    cmd->add_option("--peak", num_cb(opt.peak), "exponential valuation peak");
    cmd->add_option("--va", num_cb(opt.va), "linear valuation intercept");
    cmd->add_option("--vb", num_cb(opt.vb), "linear valuation slope");
  };
  const auto add_point = [&](CLI::App* cmd) {
    cmd->add_option("--p", num_cb(opt.p), "price");
    cmd->add_option("--q", num_cb(opt.q), "treated share");
    cmd->add_option("--design", str_cb(opt.design), "experiment design");
  };

  CLI::App* steady = app.add_subcommand("steady", "stationary availability and demand");
  add_market(steady); add_point(steady);
  CLI::App* gte_cmd = app.add_subcommand("gte", "true effect of a global price move");
  add_market(gte_cmd); add_point(gte_cmd);
  CLI::App* bias_cmd = app.add_subcommand("bias", "experiment bias report at a price point");
  add_market(bias_cmd); add_point(bias_cmd);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "region map over a (price, rate) grid");
  add_market(sweep_cmd); add_point(sweep_cmd);
  CLI::App* limits_cmd = app.add_subcommand("limits", "extreme-market ladders vs closed-form targets");
  add_market(limits_cmd); add_point(limits_cmd);
  limits_cmd->add_option("--beta-ladder", str_cb(opt.beta_ladder),
                         "comma-separated beta values");
  CLI::App* sim_cmd = app.add_subcommand("simulate", "finite-N event simulation");
  add_market(sim_cmd); add_point(sim_cmd);
  sim_cmd->add_option("--p0", num_cb(opt.p0), "control price");
  sim_cmd->add_option("--p1", num_cb(opt.p1), "treatment price");
  sim_cmd->add_option("--n-listings", int_cb(opt.n_listings), "listing count");
  sim_cmd->add_option("--horizon", num_cb(opt.horizon), "simulated time");
  sim_cmd->add_option("--burn-in", num_cb(opt.burn_in), "warm-up time");
  sim_cmd->add_option("--replications", int_cb(opt.replications),
                      "replication count");
  CLI::App* check_cmd = app.add_subcommand("check", "self-diagnosis battery");
  add_market(check_cmd); add_point(check_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    opt.load_config();
    if (steady->parsed()) return cmd_steady(opt);
    if (gte_cmd->parsed()) return cmd_gte(opt);
    if (bias_cmd->parsed()) return cmd_bias(opt);
    if (sweep_cmd->parsed()) return cmd_sweep(opt);
    if (limits_cmd->parsed()) return cmd_limits(opt);
    if (sim_cmd->parsed()) return cmd_simulate(opt);
    if (check_cmd->parsed()) return cmd_check(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
