#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "clm/core.hpp"
#include "clm/rng.hpp"

namespace clm {

// ---------------------------------------------------------------------------
// scalar double well

/// U(x) = x^4 - 16 x^2 + 5 x + 100. Global minimum near x = -2.9035,
/// a shallower local minimum near x = 2.7468, barrier near x = 0.157.
inline double double_well(double x) { return ((x * x - 16.0) * x + 5.0) * x + 100.0; }
inline double double_well_grad(double x) { return (4.0 * x * x - 32.0) * x + 5.0; }

inline Problem make_double_well() {
  Problem p;
  p.name = "double_well";
  p.dim = 1;
  p.cost = [](std::span<const double> x) { return double_well(x[0]); };
  p.gradient = [](std::span<const double> x, std::span<double> g) {
    g[0] = double_well_grad(x[0]);
  };
  return p;
}

// ---------------------------------------------------------------------------
// separable-product multimodal benchmark

/// U(x) = a/(2n) sum x_i^2 + 8n - 4n prod cos(w1 x_i) - 4n prod cos(w2 x_i),
/// global minimum U(0) = 0. The cosine-product gradients use prefix/suffix
/// products so no division by a near-zero cosine ever happens.
inline Problem make_multimodal(int n, double a = 0.01, double w1 = 0.2, double w2 = 1.0) {
  if (n < 1) throw std::invalid_argument("multimodal: need n >= 1");
  Problem p;
  p.name = "multimodal" + std::to_string(n);
  p.dim = n;
  p.cost = [n, a, w1, w2](std::span<const double> x) {
    double sq = 0.0, p1 = 1.0, p2 = 1.0;
    for (int i = 0; i < n; ++i) {
      sq += x[i] * x[i];
      p1 *= std::cos(w1 * x[i]);
      p2 *= std::cos(w2 * x[i]);
    }
    return a / (2.0 * n) * sq + 8.0 * n - 4.0 * n * p1 - 4.0 * n * p2;
  };
  p.gradient = [n, a, w1, w2](std::span<const double> x, std::span<double> g) {
    // prefix[i] = prod_{j<i} cos(w x_j), suffix[i] = prod_{j>i} cos(w x_j)
    std::vector<double> pre1(n), pre2(n), suf1(n), suf2(n);
    double acc1 = 1.0, acc2 = 1.0;
    for (int i = 0; i < n; ++i) {
      pre1[i] = acc1;
      pre2[i] = acc2;
      acc1 *= std::cos(w1 * x[i]);
      acc2 *= std::cos(w2 * x[i]);
    }
    acc1 = acc2 = 1.0;
    for (int i = n - 1; i >= 0; --i) {
      suf1[i] = acc1;
      suf2[i] = acc2;
      acc1 *= std::cos(w1 * x[i]);
      acc2 *= std::cos(w2 * x[i]);
    }
    for (int i = 0; i < n; ++i) {
      g[i] = a / n * x[i] + 4.0 * n * w1 * std::sin(w1 * x[i]) * pre1[i] * suf1[i] +
             4.0 * n * w2 * std::sin(w2 * x[i]) * pre2[i] * suf2[i];
    }
  };
  return p;
}

// ---------------------------------------------------------------------------
// Lennard-Jones clusters

/// N atoms in reduced units, coordinates flattened as [x0 y0 z0 x1 ...].
struct LJCluster {
  int atoms = 0;
  std::vector<double> coords;
};

namespace detail {

// cost and gradient of the shifted pair potential
//   u(r) = 4 [ (r + mu)^(-2 nu) - (r + mu)^(-nu) ]
// over all pairs; mu = 0, nu = 6 is the plain 12-6 form.
inline double lj_pair_accumulate(int atoms, std::span<const double> c, double mu, double nu,
                                 std::span<double> grad) {
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  double energy = 0.0;
  for (int i = 0; i < atoms; ++i) {
    for (int j = i + 1; j < atoms; ++j) {
      const double dx = c[3 * i] - c[3 * j];
      const double dy = c[3 * i + 1] - c[3 * j + 1];
      const double dz = c[3 * i + 2] - c[3 * j + 2];
      const double r2 = dx * dx + dy * dy + dz * dz;
      if (r2 == 0.0) throw std::domain_error("coincident atoms " + std::to_string(i) + " and " +
                                             std::to_string(j));
      const double r = std::sqrt(r2);
      const double s = std::pow(r + mu, -nu);
      energy += 4.0 * (s * s - s);
      if (want_grad) {
        // du/dr = 4 nu [ s - 2 s^2 ] / (r + mu); project on the unit separation
        const double dudr = 4.0 * nu * (s - 2.0 * s * s) / (r + mu);
        const double f = dudr / r;
        grad[3 * i] += f * dx;
        grad[3 * i + 1] += f * dy;
        grad[3 * i + 2] += f * dz;
        grad[3 * j] -= f * dx;
        grad[3 * j + 1] -= f * dy;
        grad[3 * j + 2] -= f * dz;
      }
    }
  }
  return energy;
}

}  // namespace detail

inline double lj_cost(const LJCluster& c) {
  return detail::lj_pair_accumulate(c.atoms, c.coords, 0.0, 6.0, {});
}

inline std::vector<double> lj_grad(const LJCluster& c) {
  std::vector<double> g(c.coords.size());
  detail::lj_pair_accumulate(c.atoms, c.coords, 0.0, 6.0, g);
  return g;
}

inline Problem make_lj(int atoms) {
  if (atoms < 2) throw std::invalid_argument("lj: need at least 2 atoms");
  Problem p;
  p.name = "lj" + std::to_string(atoms);
  p.dim = 3 * atoms;
  p.cost = [atoms](std::span<const double> x) {
    return detail::lj_pair_accumulate(atoms, x, 0.0, 6.0, {});
  };
  p.gradient = [atoms](std::span<const double> x, std::span<double> g) {
    detail::lj_pair_accumulate(atoms, x, 0.0, 6.0, g);
  };
  return p;
}

/// Softened cluster potential used to precondition large runs:
/// 4 sum_{i<j} [ (r+mu)^(-2 nu) - (r+mu)^(-nu) ].
inline Problem make_lj_shifted(int atoms, double mu = 0.1, double nu = 3.0) {
  if (atoms < 2) throw std::invalid_argument("lj_shifted: need at least 2 atoms");
  Problem p;
  p.name = "lj" + std::to_string(atoms) + "_shifted";
  p.dim = 3 * atoms;
  p.cost = [atoms, mu, nu](std::span<const double> x) {
    return detail::lj_pair_accumulate(atoms, x, mu, nu, {});
  };
  p.gradient = [atoms, mu, nu](std::span<const double> x, std::span<double> g) {
    detail::lj_pair_accumulate(atoms, x, mu, nu, g);
  };
  return p;
}

/// Same landscape raised by a constant, so the cost can be made positive
/// everywhere and the target law can use U* = 0. Gradient is untouched.
inline Problem offset_cost(const Problem& p, double delta) {
  Problem out = p;
  if (delta != 0.0) out.name = p.name + "+" + std::to_string(delta);
  auto base = p.cost;
  out.cost = [base, delta](std::span<const double> x) { return base(x) + delta; };
  return out;
}

// ---------------------------------------------------------------------------
// one-hidden-layer perceptron, scalar output

/// Parameters are stacked as theta = [w; V row-major; beta], so
/// dim = n_h * (m + 2) for input dimension m and n_h hidden units.
struct MLPShape {
  int input_dim = 1;
  int hidden = 10;
  int param_count() const { return hidden * (input_dim + 2); }
};

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  std::size_t size() const { return targets.size(); }
};

/// y = w^T tanh(V u + beta)
inline double mlp_forward(const MLPShape& s, std::span<const double> theta,
                          std::span<const double> u) {
  if (theta.size() != static_cast<std::size_t>(s.param_count()))
    throw std::invalid_argument("mlp_forward: parameter vector has wrong length");
  const int m = s.input_dim;
  const int nh = s.hidden;
  const double* w = theta.data();
  const double* V = theta.data() + nh;
  const double* beta = theta.data() + nh + static_cast<std::size_t>(nh) * m;
  double y = 0.0;
  for (int j = 0; j < nh; ++j) {
    double z = beta[j];
    for (int l = 0; l < m; ++l) z += V[static_cast<std::size_t>(j) * m + l] * u[l];
    y += w[j] * std::tanh(z);
  }
  return y;
}

/// Sum-squared-error cost J(theta) = 1/2 sum_k (d_k - y_k)^2 with the
/// gradient assembled by reverse-mode differentiation through tanh.
inline Problem make_mlp_sse(const MLPShape& shape, std::shared_ptr<const Dataset> data) {
  if (!data || data->size() == 0) throw std::invalid_argument("mlp_sse: empty dataset");
  Problem p;
  p.name = "mlp_sse";
  p.dim = shape.param_count();
  p.cost = [shape, data](std::span<const double> theta) {
    double j = 0.0;
    for (std::size_t k = 0; k < data->size(); ++k) {
      const double e = data->targets[k] - mlp_forward(shape, theta, data->inputs[k]);
      j += 0.5 * e * e;
    }
    return j;
  };
  p.gradient = [shape, data](std::span<const double> theta, std::span<double> g) {
    const int m = shape.input_dim;
    const int nh = shape.hidden;
    const double* w = theta.data();
    const double* V = theta.data() + nh;
    const double* beta = theta.data() + nh + static_cast<std::size_t>(nh) * m;
    double* gw = g.data();
    double* gV = g.data() + nh;
    double* gbeta = g.data() + nh + static_cast<std::size_t>(nh) * m;
    std::fill(g.begin(), g.end(), 0.0);
    std::vector<double> th(nh);
    for (std::size_t k = 0; k < data->size(); ++k) {
      const auto& u = data->inputs[k];
      double y = 0.0;
      for (int j = 0; j < nh; ++j) {
        double z = beta[j];
        for (int l = 0; l < m; ++l) z += V[static_cast<std::size_t>(j) * m + l] * u[l];
        th[j] = std::tanh(z);
        y += w[j] * th[j];
      }
      const double err = y - data->targets[k];  // dJ/dy
      for (int j = 0; j < nh; ++j) {
        gw[j] += err * th[j];
        const double back = err * w[j] * (1.0 - th[j] * th[j]);
        gbeta[j] += back;
        for (int l = 0; l < m; ++l) gV[static_cast<std::size_t>(j) * m + l] += back * u[l];
      }
    }
  };
  return p;
}

/// zeta * J(theta) + mu/2 theta^T theta, the classical weight-decay
/// comparator for the sum-squared-error cost.
inline Problem make_mlp_sse_regularized(const MLPShape& shape, std::shared_ptr<const Dataset> data,
                                        double mu, double zeta) {
  if (mu < 0.0 || zeta < 0.0)
    throw std::invalid_argument("mlp_sse_regularized: mu, zeta must be nonnegative");
  Problem sse = make_mlp_sse(shape, std::move(data));
  Problem p;
  p.name = "mlp_sse_reg";
  p.dim = sse.dim;
  auto base_cost = sse.cost;
  auto base_grad = sse.gradient;
  p.cost = [base_cost, mu, zeta](std::span<const double> theta) {
    double t2 = 0.0;
    for (double v : theta) t2 += v * v;
    return zeta * base_cost(theta) + 0.5 * mu * t2;
  };
  p.gradient = [base_grad, mu, zeta](std::span<const double> theta, std::span<double> g) {
    base_grad(theta, g);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = zeta * g[i] + mu * theta[i];
  };
  return p;
}

// ---------------------------------------------------------------------------
// initial-state sampling and data generation

/// Width of the zero-mean Gaussian the member states are drawn from.
struct InitialPrior {
  double sigma = 0.1;
};

/// Draws every member state i.i.d. from N(0, sigma^2 I); multipliers
/// start at zero.
inline EnsembleState sample_initial_states(const InitialPrior& prior, int q, int n, Rng& rng) {
  if (!(prior.sigma > 0.0)) throw std::invalid_argument("initial prior: need sigma > 0");
  EnsembleState ens(q, n);
  for (int i = 0; i < q; ++i) {
    auto xi = ens.x(i);
    for (int k = 0; k < n; ++k) xi[k] = prior.sigma * normal01(rng);
  }
  return ens;
}

/// Member states uniform on the box [lo, hi]^n; multipliers zero.
inline EnsembleState sample_uniform_states(double lo, double hi, int q, int n, Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("uniform init: need lo < hi");
  EnsembleState ens(q, n);
  for (int i = 0; i < q; ++i) {
    auto xi = ens.x(i);
    for (int k = 0; k < n; ++k) xi[k] = uniform(rng, lo, hi);
  }
  return ens;
}

struct SineData {
  Dataset train;
  Dataset test;  // noiseless dense grid for generalization measurement
};

/// Noisy sine regression set: n_points inputs on a uniform grid over
/// [lo, hi] (default [-pi, pi]), targets sin(u) plus Gaussian noise.
/// The test set is a noiseless 500-point grid over the same interval.
inline SineData gen_sine_dataset(int n_points, double noise_std, Rng& rng,
                                 double lo = -std::numbers::pi, double hi = std::numbers::pi,
                                 int test_points = 500) {
  if (n_points < 1) throw std::invalid_argument("sine dataset: need at least one point");
  SineData out;
  for (int k = 0; k < n_points; ++k) {
    const double u = n_points == 1 ? lo : lo + (hi - lo) * k / (n_points - 1.0);
    out.train.inputs.push_back({u});
    out.train.targets.push_back(std::sin(u) + noise_std * normal01(rng));
  }
  for (int k = 0; k < test_points; ++k) {
    const double u = lo + (hi - lo) * k / (test_points - 1.0);
    out.test.inputs.push_back({u});
    out.test.targets.push_back(std::sin(u));
  }
  return out;
}

/// Mean squared prediction error of the parameter vector on a dataset.
inline double mlp_mse(const MLPShape& shape, std::span<const double> theta, const Dataset& data) {
  double sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double e = data.targets[k] - mlp_forward(shape, theta, data.inputs[k]);
    sum += e * e;
  }
  return sum / static_cast<double>(data.size());
}

// simple fixtures shared by the baselines and tests
inline Problem make_quadratic(int n) {
  Problem p;
  p.name = "quadratic" + std::to_string(n);
  p.dim = n;
  p.cost = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return 0.5 * s;
  };
  p.gradient = [](std::span<const double> x, std::span<double> g) {
    std::copy(x.begin(), x.end(), g.begin());
  };
  return p;
}

inline Problem make_rosenbrock() {
  Problem p;
  p.name = "rosenbrock2";
  p.dim = 2;
  p.cost = [](std::span<const double> x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  p.gradient = [](std::span<const double> x, std::span<double> g) {
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
  };
  return p;
}

}  // namespace clm
