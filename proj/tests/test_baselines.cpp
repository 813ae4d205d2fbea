#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "clm/baselines.hpp"
#include "clm/problems.hpp"
#include "clm/rng.hpp"

using namespace clm;
using Catch::Approx;

TEST_CASE("finite difference oracle", "[baselines]") {
  Problem sq;
  sq.dim = 1;
  sq.cost = [](std::span<const double> x) { return x[0] * x[0]; };
  sq.gradient = [](std::span<const double> x, std::span<double> g) { g[0] = 2 * x[0]; };
  CHECK(finite_diff_grad(sq, std::vector<double>{1.0})[0] == Approx(2.0).epsilon(1e-9));

  Problem lin;
  lin.dim = 3;
  lin.cost = [](std::span<const double> x) { return 2 * x[0] - 3 * x[1] + 0.5 * x[2]; };
  lin.gradient = [](std::span<const double>, std::span<double> g) {
    g[0] = 2, g[1] = -3, g[2] = 0.5;
  };
  const auto fd = finite_diff_grad(lin, std::vector<double>{4.0, -1.0, 7.0});
  CHECK(fd[0] == Approx(2.0).epsilon(1e-10));
  CHECK(fd[1] == Approx(-3.0).epsilon(1e-10));
  CHECK(fd[2] == Approx(0.5).epsilon(1e-10));
}

TEST_CASE("multistart descent", "[baselines]") {
  SECTION("every start of a convex bowl reaches the bottom") {
    Problem quad = make_quadratic(3);
    std::vector<std::vector<double>> starts{{1, 2, 3}, {-4, 0, 1}, {10, -10, 5}};
    const auto results = multistart_descent(quad, starts);
    for (const auto& r : results) {
      CHECK(r.converged);
      for (double v : r.argmin) CHECK(std::abs(v) < 1e-6);
    }
  }
  SECTION("double well from both valleys finds both minima, best first") {
    Problem dw = make_double_well();
    const auto results = multistart_descent(dw, {{3.0}, {-3.0}});
    REQUIRE(results.size() == 2);
    CHECK(results[0].argmin[0] == Approx(-2.9035340278).margin(1e-4));
    CHECK(results[1].argmin[0] == Approx(2.7468027710).margin(1e-4));
    CHECK(results[0].cost < results[1].cost);
  }
  SECTION("sorted output ignores start order") {
    Problem dw = make_double_well();
    const auto a = multistart_descent(dw, {{3.0}, {-3.0}});
    const auto b = multistart_descent(dw, {{-3.0}, {3.0}});
    CHECK(a[0].cost == Approx(b[0].cost));
    CHECK(a[1].cost == Approx(b[1].cost));
  }
  SECTION("one poisoned start does not spoil the rest") {
    Problem mostly;
    mostly.dim = 1;
    mostly.cost = [](std::span<const double> x) {
      if (x[0] > 50.0) return std::numeric_limits<double>::quiet_NaN();
      return (x[0] - 1.0) * (x[0] - 1.0);
    };
    mostly.gradient = [](std::span<const double> x, std::span<double> g) {
      g[0] = 2.0 * (x[0] - 1.0);
    };
    const auto results = multistart_descent(mostly, {{100.0}, {0.0}});
    REQUIRE(results.size() == 2);
    CHECK(results[0].converged);
    CHECK(results[0].argmin[0] == Approx(1.0).margin(1e-5));
    CHECK_FALSE(results[1].converged);  // the NaN start, sorted last
    CHECK(!std::isfinite(results[1].cost));
  }
}

TEST_CASE("quasi-newton minimizer", "[baselines]") {
  SECTION("identity quadratic converges within n+1 iterations") {
    Problem quad = make_quadratic(4);
    const auto r = quasi_newton(quad, std::vector<double>{3.0, -2.0, 1.0, 0.5}, 1e-12, 100);
    CHECK(r.converged);
    CHECK(r.iterations <= 5);
    CHECK(r.grad_norm <= 1e-12);
    CHECK(r.cost == Approx(0.0).margin(1e-20));
  }
  SECTION("pair of atoms relaxes to the analytic minimum") {
    Problem lj = make_lj(2);
    const std::vector<double> start{0.0, 0.0, 0.0, 1.5, 0.0, 0.0};
    const auto r = quasi_newton(lj, start, 1e-10, 200);
    CHECK(r.converged);
    CHECK(r.cost == Approx(-1.0).margin(1e-8));
    const double dx = r.argmin[3] - r.argmin[0];
    const double dy = r.argmin[4] - r.argmin[1];
    const double dz = r.argmin[5] - r.argmin[2];
    CHECK(std::sqrt(dx * dx + dy * dy + dz * dz) == Approx(std::pow(2.0, 1.0 / 6.0)).margin(1e-6));
  }
  SECTION("rosenbrock valley") {
    Problem rb = make_rosenbrock();
    const auto r = quasi_newton(rb, std::vector<double>{-1.2, 1.0}, 1e-10, 500);
    CHECK(r.converged);
    CHECK(r.argmin[0] == Approx(1.0).margin(1e-6));
    CHECK(r.argmin[1] == Approx(1.0).margin(1e-6));
  }
  SECTION("never ends above the starting cost") {
    Problem mm = make_multimodal(4);
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x0(4);
      for (double& v : x0) v = uniform(rng, -15.0, 15.0);
      const double f0 = mm.cost(x0);
      const auto r = quasi_newton(mm, x0, 1e-8, 50);
      CHECK(r.cost <= f0 + 1e-12);
    }
  }
  SECTION("iteration cap reports no convergence") {
    Problem rb = make_rosenbrock();
    const auto r = quasi_newton(rb, std::vector<double>{-1.2, 1.0}, 1e-12, 3);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
  }
}
