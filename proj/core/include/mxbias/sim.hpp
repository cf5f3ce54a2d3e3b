#pragma once

#include <cstdint>
#include <vector>

#include "mxbias/meanfield.hpp"

namespace mxbias {

enum class Design { global, lr, cr };

// Finite-N continuous-time Markov chain whose mean-field limit is the
// market in meanfield.hpp. N listings each carry mass rho/N; customers
// arrive as a Poisson stream of rate lambda N / rho (so booked mass per
// time matches lambda x booking probability); an occupied listing frees at
// rate tau. Arrivals see the current available mass s = k rho / N in the
// logit rule. Everything is sampled with the exact (Gillespie) clock.
struct SimConfig {
  MarketParams params;
  Design design = Design::global;
  double q = 0.5;      // treated share (listings for lr, customers for cr)
  double p0 = 0.0;     // control price (the only price for global)
  double p1 = 0.0;     // treatment price
  int n_listings = 500;
  double horizon = 1000.0;  // total simulated time per replication
  double burn_in = -1.0;    // <0: default 10 / min(tau, lambda) (10 / tau
                            // when lambda == 0)
  int replications = 20;
  std::uint64_t seed = 1;
  int threads = 1;

  // Permissive on purpose: degenerate dynamics (lambda == 0) are valid
  // sims with trivial outcomes, not errors. Throws invalid_argument for
  // structural problems only.
  void validate() const;
  double effective_burn_in() const;
};

// Per-replication measurements over [burn_in, horizon). Group 0/1 are the
// control/treatment arms; the global design reports the whole market in
// both slots. Availability is in mass units; rates are booking mass per
// time, normalized by the arm share (so they estimate the normalized
// demands d0/d1 of the mean-field model).
struct ReplicationStats {
  double avail0 = 0.0;
  double avail1 = 0.0;
  double rate0 = 0.0;
  double rate1 = 0.0;
  std::int64_t bookings0 = 0;
  std::int64_t bookings1 = 0;
  std::int64_t arrivals = 0;
  std::int64_t frees = 0;
  std::int64_t open_bookings = 0;  // bookings - frees over the whole run;
                                   // must equal the occupied count at the end
};

struct SimOutcome {
  std::vector<ReplicationStats> reps;
  double mean_avail0 = 0.0, se_avail0 = 0.0;
  double mean_avail1 = 0.0, se_avail1 = 0.0;
  double mean_rate0 = 0.0, se_rate0 = 0.0;
  double mean_rate1 = 0.0, se_rate1 = 0.0;
  // Naive profit-slope readout ((p1-c) r1 - (p0-c) r0) / (p1 - p0) per
  // replication; NaN for the global design or p1 == p0.
  double naive_mean = 0.0;
  double naive_ci_halfwidth = 0.0;  // 95%, Student t across replications
  std::vector<double> naive_per_rep;
};

// Runs `replications` independent chains. Each replication draws from its
// own counter-derived RNG stream (seed, replication index), so results are
// byte-identical for a given config regardless of thread count.
SimOutcome simulate(const SimConfig& cfg);

// simulate() restricted to the naive estimate; requires a real price gap
// (throws Error(degenerate_delta) when |p1 - p0| is at round-off).
SimOutcome estimate_naive(const SimConfig& cfg);

}  // namespace mxbias
