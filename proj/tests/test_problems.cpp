#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "clm/baselines.hpp"
#include "clm/problems.hpp"
#include "clm/rng.hpp"

using namespace clm;
using Catch::Approx;

namespace {

double rel_grad_error(const Problem& p, std::span<const double> x) {
  const auto g = grad_of(p, x);
  const auto fd = finite_diff_grad(p, x);
  double diff2 = 0.0, g2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    diff2 += (fd[i] - g[i]) * (fd[i] - g[i]);
    g2 += g[i] * g[i];
  }
  return std::sqrt(diff2) / std::max(1.0, std::sqrt(g2));
}

std::vector<double> pair_coords(double r) { return {0.0, 0.0, 0.0, r, 0.0, 0.0}; }

constexpr double kPairMinDist = 1.1224620483093730;  // 2^(1/6)

}  // namespace

TEST_CASE("double well", "[problems]") {
  CHECK(double_well(0.0) == 100.0);
  CHECK(double_well_grad(0.0) == 5.0);
  // global minimum sits near -2.90
  const double xstar = -2.9035340278;
  CHECK(std::abs(double_well_grad(xstar)) < 1e-6);
  CHECK(double_well(xstar) == Approx(21.6676685925));
  CHECK(double_well(xstar) < double_well(2.7468027710));  // beats the right-hand valley

  Problem p = make_double_well();
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{uniform(rng, -5.0, 5.0)};
    CHECK(rel_grad_error(p, x) < 1e-6);
  }
}

TEST_CASE("multimodal benchmark", "[problems]") {
  Problem p = make_multimodal(10);
  const std::vector<double> origin(10, 0.0);
  CHECK(p.cost(origin) == 0.0);
  for (double g : grad_of(p, origin)) CHECK(g == 0.0);

  SECTION("even symmetry") {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(10), nx(10);
      for (int k = 0; k < 10; ++k) {
        x[k] = uniform(rng, -20.0, 20.0);
        nx[k] = -x[k];
      }
      CHECK(p.cost(x) == Approx(p.cost(nx)).epsilon(1e-14));
    }
  }
  SECTION("gradient against finite differences") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(10);
      for (double& v : x) v = uniform(rng, -20.0, 20.0);
      CHECK(rel_grad_error(p, x) < 1e-6);
    }
  }
  SECTION("origin is the best of many local minima") {
    // dense multi-start cannot beat U(0) = 0
    Problem small = make_multimodal(2);
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> x(2);
      for (double& v : x) v = uniform(rng, -20.0, 20.0);
      CHECK(small.cost(x) >= 0.0);
    }
  }
}

TEST_CASE("lennard-jones clusters", "[problems]") {
  SECTION("pair values") {
    CHECK(lj_cost({2, pair_coords(kPairMinDist)}) == Approx(-1.0).margin(1e-12));
    CHECK(lj_cost({2, pair_coords(1.0)}) == Approx(0.0).margin(1e-14));
  }
  SECTION("equilateral triangle and regular tetrahedron at the pair distance") {
    const double s = kPairMinDist;
    LJCluster tri{3, {0.0, 0.0, 0.0, s, 0.0, 0.0, s / 2, s * std::sqrt(3.0) / 2, 0.0}};
    CHECK(lj_cost(tri) == Approx(-3.0).margin(1e-10));

    const double a = s / (2.0 * std::sqrt(2.0));
    LJCluster tet{4, {a, a, a, a, -a, -a, -a, a, -a, -a, -a, a}};
    CHECK(lj_cost(tet) == Approx(-6.0).margin(1e-10));
  }
  SECTION("coincident atoms are a domain error") {
    LJCluster c{2, {1.0, 2.0, 3.0, 1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(lj_cost(c), std::domain_error);
  }
  SECTION("rigid motions leave the energy unchanged") {
    Rng rng(5);
    Problem p = make_lj(5);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> c(15);
      for (double& v : c) v = uniform(rng, 0.0, 2.5);
      const double e = p.cost(c);
      if (!std::isfinite(e)) continue;

      // Rodrigues rotation about a random axis plus a random shift
      double ax = normal01(rng), ay = normal01(rng), az = normal01(rng);
      const double norm = std::sqrt(ax * ax + ay * ay + az * az);
      ax /= norm, ay /= norm, az /= norm;
      const double th = uniform(rng, 0.0, 6.28);
      const double ct = std::cos(th), st = std::sin(th);
      const double tx = uniform(rng, -3.0, 3.0), ty = uniform(rng, -3.0, 3.0),
                   tz = uniform(rng, -3.0, 3.0);
      std::vector<double> moved(15);
      for (int i = 0; i < 5; ++i) {
        const double x = c[3 * i], y = c[3 * i + 1], z = c[3 * i + 2];
        const double dot = ax * x + ay * y + az * z;
        moved[3 * i] = x * ct + (ay * z - az * y) * st + ax * dot * (1 - ct) + tx;
        moved[3 * i + 1] = y * ct + (az * x - ax * z) * st + ay * dot * (1 - ct) + ty;
        moved[3 * i + 2] = z * ct + (ax * y - ay * x) * st + az * dot * (1 - ct) + tz;
      }
      CHECK(p.cost(moved) == Approx(e).epsilon(1e-10));
    }
  }
}

TEST_CASE("shifted lennard-jones", "[problems]") {
  SECTION("mu = 0, nu = 6 degenerates to the plain potential") {
    Problem plain = make_lj(3);
    Problem shifted = make_lj_shifted(3, 0.0, 6.0);
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> c(9);
      for (double& v : c) v = uniform(rng, 0.0, 2.0);
      CHECK(shifted.cost(c) == plain.cost(c));
    }
  }
  SECTION("pair minimum moves to 2^(1/3) - mu") {
    const double r = std::cbrt(2.0) - 0.1;
    Problem p = make_lj_shifted(2, 0.1, 3.0);
    CHECK(p.cost(pair_coords(r)) == Approx(-1.0).margin(1e-12));
    const auto g = grad_of(p, pair_coords(r));
    for (double v : g) CHECK(std::abs(v) < 1e-10);
  }
  SECTION("gradient against finite differences") {
    Problem p = make_lj_shifted(4, 0.1, 3.0);
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> c(12);
      for (double& v : c) v = uniform(rng, 0.0, 2.0);
      if (!std::isfinite(p.cost(c))) continue;
      CHECK(rel_grad_error(p, c) < 1e-5);
    }
  }
}

TEST_CASE("constant cost offset", "[problems]") {
  Problem base = make_lj(2);
  SECTION("delta zero is the identity") {
    Problem same = offset_cost(base, 0.0);
    CHECK(same.cost(pair_coords(1.4)) == base.cost(pair_coords(1.4)));
  }
  SECTION("pair minimum moves up by delta") {
    Problem shifted = offset_cost(base, 200.0);
    CHECK(shifted.cost(pair_coords(kPairMinDist)) == Approx(199.0).margin(1e-10));
  }
  SECTION("gradients are untouched") {
    Problem shifted = offset_cost(base, 123.0);
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      const auto c = pair_coords(uniform(rng, 0.9, 2.5));
      CHECK(grad_of(shifted, c) == grad_of(base, c));
    }
  }
}

TEST_CASE("perceptron forward pass", "[problems]") {
  SECTION("shape arithmetic") {
    CHECK(MLPShape{1, 10}.param_count() == 30);
    CHECK(MLPShape{3, 4}.param_count() == 20);
  }
  SECTION("zero output weights give zero output") {
    MLPShape s{2, 3};
    std::vector<double> theta(s.param_count(), 0.5);
    theta[0] = theta[1] = theta[2] = 0.0;  // w block
    CHECK(mlp_forward(s, theta, std::vector<double>{0.3, -1.0}) == 0.0);
  }
  SECTION("single unit pins the output through atanh") {
    MLPShape s{1, 1};
    const std::vector<double> theta{1.0, 0.0, std::atanh(0.5)};  // w, V, beta
    CHECK(mlp_forward(s, theta, std::vector<double>{0.77}) == Approx(0.5));
  }
  SECTION("wrong parameter count throws") {
    CHECK_THROWS_AS(mlp_forward(MLPShape{1, 2}, std::vector<double>(5), std::vector<double>{1.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("perceptron training cost", "[problems]") {
  MLPShape shape{1, 10};
  Rng rng(9);
  auto data = std::make_shared<Dataset>();
  for (int k = 0; k < 20; ++k) {
    data->inputs.push_back({uniform(rng, -3.0, 3.0)});
    data->targets.push_back(uniform(rng, -1.5, 1.5));
  }
  Problem sse = make_mlp_sse(shape, data);

  SECTION("perfect fit costs nothing") {
    std::vector<double> theta(shape.param_count());
    for (double& v : theta) v = uniform(rng, -1.0, 1.0);
    auto fitted = std::make_shared<Dataset>(*data);
    for (std::size_t k = 0; k < fitted->size(); ++k)
      fitted->targets[k] = mlp_forward(shape, theta, fitted->inputs[k]);
    Problem perfect = make_mlp_sse(shape, fitted);
    CHECK(perfect.cost(theta) == Approx(0.0).margin(1e-20));
  }
  SECTION("dead network on one unit sample") {
    auto one = std::make_shared<Dataset>();
    one->inputs.push_back({0.4});
    one->targets.push_back(1.0);
    MLPShape s{1, 2};
    Problem p = make_mlp_sse(s, one);
    std::vector<double> theta(s.param_count(), 0.3);
    theta[0] = theta[1] = 0.0;  // w = 0 so y = 0
    CHECK(p.cost(theta) == Approx(0.5));
  }
  SECTION("backpropagated gradient against finite differences") {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> theta(shape.param_count());
      for (double& v : theta) v = uniform(rng, -2.0, 2.0);
      CHECK(rel_grad_error(sse, theta) < 1e-6);
    }
  }
  SECTION("regularized variant") {
    Problem reg0 = make_mlp_sse_regularized(shape, data, 0.0, 1.0);
    Problem reg = make_mlp_sse_regularized(shape, data, 0.3, 0.7);
    std::vector<double> theta(shape.param_count());
    for (double& v : theta) v = uniform(rng, -1.0, 1.0);
    CHECK(reg0.cost(theta) == Approx(sse.cost(theta)));

    const std::vector<double> zero(shape.param_count(), 0.0);
    CHECK(reg.cost(zero) == Approx(0.7 * sse.cost(zero)));
    for (int trial = 0; trial < 10; ++trial) {
      for (double& v : theta) v = uniform(rng, -2.0, 2.0);
      CHECK(rel_grad_error(reg, theta) < 1e-6);
    }
  }
}

TEST_CASE("gaussian initial-state sampling", "[problems]") {
  SECTION("multipliers start at zero and seeds reproduce") {
    Rng a(42), b(42);
    const auto ens1 = sample_initial_states(InitialPrior{0.5}, 6, 3, a);
    const auto ens2 = sample_initial_states(InitialPrior{0.5}, 6, 3, b);
    CHECK(ens1.flat() == ens2.flat());
    for (int i = 0; i < 6; ++i)
      for (double v : ens1.lambda(i)) CHECK(v == 0.0);
  }
  SECTION("sample mean concentrates at zero") {
    const int q = 5, n = 2, draws = 10000;
    const double sigma = 1.3;
    Rng rng(100);
    double sum = 0.0;
    std::size_t count = 0;
    for (int d = 0; d < draws; ++d) {
      const auto ens = sample_initial_states(InitialPrior{sigma}, q, n, rng);
      for (int i = 0; i < q; ++i)
        for (double v : ens.x(i)) {
          sum += v;
          ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    CHECK(std::abs(mean) < 4.0 * sigma / std::sqrt(static_cast<double>(q * n * draws)));
  }
  SECTION("norms scale linearly with sigma") {
    const int q = 4, n = 5, draws = 2000;
    auto mean_norm = [&](double sigma, std::uint64_t seed) {
      Rng rng(seed);
      double acc = 0.0;
      for (int d = 0; d < draws; ++d) {
        const auto ens = sample_initial_states(InitialPrior{sigma}, q, n, rng);
        for (int i = 0; i < q; ++i) {
          double s2 = 0.0;
          for (double v : ens.x(i)) s2 += v * v;
          acc += std::sqrt(s2);
        }
      }
      return acc / (draws * q);
    };
    const double ratio = mean_norm(2.0, 7) / mean_norm(0.5, 7);
    CHECK(ratio == Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("sine regression data", "[problems]") {
  SECTION("noiseless targets are exactly the sine") {
    Rng rng(1);
    const auto d = gen_sine_dataset(20, 0.0, rng);
    REQUIRE(d.train.size() == 20);
    for (std::size_t k = 0; k < d.train.size(); ++k)
      CHECK(d.train.targets[k] == std::sin(d.train.inputs[k][0]));
  }
  SECTION("defaults and the noiseless evaluation grid") {
    Rng rng(2);
    const auto d = gen_sine_dataset(20, 0.4, rng);
    CHECK(d.train.size() == 20);
    CHECK(d.test.size() == 500);
    CHECK(d.train.inputs.front()[0] == Approx(-std::numbers::pi));
    CHECK(d.train.inputs.back()[0] == Approx(std::numbers::pi));
    for (std::size_t k = 0; k < d.test.size(); ++k)
      CHECK(d.test.targets[k] == std::sin(d.test.inputs[k][0]));
  }
  SECTION("seeded generation reproduces") {
    Rng a(9), b(9);
    const auto d1 = gen_sine_dataset(20, 0.4, a);
    const auto d2 = gen_sine_dataset(20, 0.4, b);
    CHECK(d1.train.targets == d2.train.targets);
  }
}
