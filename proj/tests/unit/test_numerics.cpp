#include <cmath>
#include <vector>

#include <doctest.h>

#include "mxbias/numerics.hpp"
#include "mxbias/parallel.hpp"
#include "test_helpers.hpp"

using namespace mxbias;
using mxtest::thrown_code;

TEST_SUITE_BEGIN("numerics");

TEST_CASE("bracketed root of a smooth function hits machine precision") {
  Tolerances exact;
  exact.residual_tol = 0.0;
  exact.step_tol = 0.0;
  const auto f = [](double x) { return x * x - 2.0; };
  const double r = find_root_bracketed(f, 0.0, 2.0, exact);
  CHECK(std::abs(r - std::sqrt(2.0)) <= 1e-15);
}

TEST_CASE("bracketed root accepts a reversed bracket and exact endpoints") {
  const auto f = [](double x) { return std::cos(x) - x; };
  const double r = find_root_bracketed(f, 1.5, 0.0);
  CHECK(std::abs(std::cos(r) - r) <= 1e-11);

  const auto g = [](double x) { return x - 1.0; };
  CHECK(find_root_bracketed(g, 1.0, 5.0) == 1.0);
  CHECK(find_root_bracketed(g, -3.0, 1.0) == 1.0);
}

TEST_CASE("bracketed root survives hard curvature") {
  // Flat near the root; classic stress case for interpolation steps. The
  // residual criterion is useless here (|f| < 1e-12 within 0.05 of the
  // root), so only the step criterion may stop the solver.
  const auto f = [](double x) { return std::pow(x - 0.7, 9.0); };
  Tolerances tol;
  tol.residual_tol = 0.0;
  const double r = find_root_bracketed(f, 0.0, 1.0, tol);
  CHECK(std::abs(r - 0.7) <= 1e-8);
}

TEST_CASE("bracketed root error codes") {
  const auto same_sign = [](double x) { return x * x + 1.0; };
  CHECK(thrown_code([&] { find_root_bracketed(same_sign, -1.0, 1.0); }) ==
        Errc::no_bracket);

  const auto bad = [](double) { return std::nan(""); };
  CHECK(thrown_code([&] { find_root_bracketed(bad, -1.0, 1.0); }) ==
        Errc::eval_failure);

  Tolerances tight;
  tight.max_iter = 2;
  tight.residual_tol = 0.0;
  tight.step_tol = 0.0;
  const auto f = [](double x) { return std::cos(x) - x; };
  CHECK(thrown_code([&] { find_root_bracketed(f, 0.0, 1.5, tight); }) ==
        Errc::max_iterations);
}

TEST_CASE("residual tolerance alone can stop the bracketed solver") {
  Tolerances loose;
  loose.residual_tol = 1e-3;
  loose.step_tol = 0.0;
  const auto f = [](double x) { return x * x * x - 2.0; };
  const double r = find_root_bracketed(f, 0.0, 2.0, loose);
  CHECK(std::abs(f(r)) <= 1e-3);
}

TEST_CASE("damped newton converges and reports failures") {
  const auto f = [](double x) { return x * x - 2.0; };
  const auto df = [](double x) { return 2.0 * x; };
  CHECK(std::abs(newton_damped(f, df, 1.0) - std::sqrt(2.0)) <= 1e-12);

  // Undamped Newton diverges on atan from 3; damping must rescue it.
  const auto g = [](double x) { return std::atan(x); };
  const auto dg = [](double x) { return 1.0 / (1.0 + x * x); };
  CHECK(std::abs(newton_damped(g, dg, 3.0)) <= 1e-10);

  const auto zero_slope = [](double) { return 1.0; };
  const auto dzero = [](double) { return 0.0; };
  CHECK(thrown_code([&] { newton_damped(zero_slope, dzero, 1.0); }) ==
        Errc::eval_failure);
}

TEST_CASE("newton respects the clamp window") {
  const auto f = [](double x) { return x * x - 2.0; };
  const auto df = [](double x) { return 2.0 * x; };
  const double r = newton_damped(f, df, 1.9, {}, 0.0, 10.0);
  CHECK(std::abs(r - std::sqrt(2.0)) <= 1e-12);
  CHECK(r >= 0.0);
  CHECK(r <= 10.0);
}

TEST_CASE("central difference with richardson extrapolation") {
  const auto f = [](double x) { return std::exp(x); };
  CHECK(std::abs(central_diff(f, 0.0, 1e-4, 1) - 1.0) <= 1e-11);
  CHECK(std::abs(central_diff(f, 1.0, 1e-4, 2) - std::exp(1.0)) <= 1e-11);

  // Cubic: the h^2 term is the only error term, one level removes it.
  const auto cubic = [](double x) { return x * x * x; };
  CHECK(std::abs(central_diff(cubic, 2.0, 1e-3, 1) - 12.0) <= 1e-9);

  // Deeper tables help while truncation still dominates round-off; at the
  // round-off floor the ordering would be noise.
  const auto s = [](double x) { return std::sin(x); };
  const double e1 = std::abs(central_diff(s, 1.0, 1e-2, 1) - std::cos(1.0));
  const double e3 = std::abs(central_diff(s, 1.0, 1e-2, 3) - std::cos(1.0));
  CHECK(e1 <= 1e-8);
  CHECK(e3 <= 1e-11);
  CHECK(e3 < e1);
}

TEST_CASE("central difference uses a relative step for large arguments") {
  const auto f = [](double x) { return x * x; };
  const double x = 1e6;
  CHECK(std::abs(central_diff(f, x, 1e-6) - 2.0 * x) <= 1e-2);
}

TEST_CASE("cross partials of a separable polynomial") {
  const auto f = [](double x, double y) { return x * x * y * y * y; };
  const CrossPartials cp = cross_partial_fd(f, 2.0, 3.0, 1e-5, 2);
  CHECK(std::abs(cp.d_dx - 2.0 * 2.0 * 27.0) <= 1e-7);
  CHECK(std::abs(cp.d_dy - 3.0 * 4.0 * 9.0) <= 1e-7);
}

TEST_CASE("tolerance validation") {
  Tolerances t;
  t.fd_step = 0.0;
  CHECK(thrown_code([&] { t.validate(); }) == Errc::invalid_argument);
  t = Tolerances{};
  t.fd_step = 1.5;
  CHECK(thrown_code([&] { t.validate(); }) == Errc::invalid_argument);
  t = Tolerances{};
  t.max_iter = 0;
  CHECK(thrown_code([&] { t.validate(); }) == Errc::invalid_argument);
  t = Tolerances{};
  t.residual_tol = -1.0;
  CHECK(thrown_code([&] { t.validate(); }) == Errc::invalid_argument);
}

TEST_CASE("error text carries the code name") {
  try {
    raise(Errc::no_bracket, "f(lo) and f(hi) agree in sign");
    FAIL("raise returned");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_bracket);
    CHECK(std::string(e.what()).find("no bracket") != std::string::npos);
  }
}

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4,
               [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("parallel_for rethrows a worker exception") {
  CHECK(thrown_code([&] {
          parallel_for(64, 4, [&](std::size_t i) {
            if (i == 17) raise(Errc::eval_failure, "boom");
          });
        }) == Errc::eval_failure);
}

TEST_SUITE_END();
