#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "clm/core.hpp"

namespace clm {

struct LocalMinResult {
  std::vector<double> argmin;
  double cost = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
};

/// Central finite differences with per-component step h = 1e-5 (1 + |x_i|).
/// The independent check every analytic gradient in the library is held to.
inline std::vector<double> finite_diff_grad(const Problem& p, std::span<const double> x) {
  std::vector<double> g(x.size());
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = p.cost(xp);
    xp[i] = xi - h;
    const double fm = p.cost(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

namespace detail {

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

struct DescentOptions {
  double init_step = 1.0;
  double grad_tol = 1e-8;
  int max_iter = 5000;
  double armijo_c = 1e-4;
};

/// Steepest descent with Armijo backtracking (halving) from one start.
inline LocalMinResult gradient_descent(const Problem& p, std::span<const double> start,
                                       const DescentOptions& opt = {}) {
  LocalMinResult res;
  res.argmin.assign(start.begin(), start.end());
  const int n = p.dim;
  std::vector<double> g(n), trial(n);
  double f = p.cost(res.argmin);
  if (!std::isfinite(f)) {
    res.cost = f;
    return res;  // failed start, recorded as-is
  }
  double step = opt.init_step;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    p.gradient(res.argmin, g);
    const double gnorm = detail::norm2(g);
    res.grad_norm = gnorm;
    if (!std::isfinite(gnorm)) break;
    if (gnorm <= opt.grad_tol) {
      res.converged = true;
      break;
    }
    const double g2 = gnorm * gnorm;
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      for (int k = 0; k < n; ++k) trial[k] = res.argmin[k] - step * g[k];
      const double ft = p.cost(trial);
      if (std::isfinite(ft) && ft <= f - opt.armijo_c * step * g2) {
        res.argmin = trial;
        f = ft;
        accepted = true;
        step *= 2.0;  // optimistic growth, backtracking trims it again
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no acceptable step at this scale
  }
  res.iterations = it;
  res.cost = f;
  p.gradient(res.argmin, g);
  res.grad_norm = detail::norm2(g);
  return res;
}

/// Independent descent from every start, results sorted best-first.
/// A start whose cost turns non-finite is recorded as unconverged with its
/// last good iterate; the other starts are unaffected.
inline std::vector<LocalMinResult> multistart_descent(const Problem& p,
                                                      const std::vector<std::vector<double>>& starts,
                                                      const DescentOptions& opt = {}) {
  if (starts.empty()) throw std::invalid_argument("multistart_descent: no starting points");
  std::vector<LocalMinResult> out;
  out.reserve(starts.size());
  for (const auto& s : starts) out.push_back(gradient_descent(p, s, opt));
  std::stable_sort(out.begin(), out.end(), [](const LocalMinResult& a, const LocalMinResult& b) {
    const bool fa = std::isfinite(a.cost), fb = std::isfinite(b.cost);
    if (fa != fb) return fa;
    return a.cost < b.cost;
  });
  return out;
}

namespace detail {

// cubic/bisection zoom for the strong Wolfe conditions (c1 = 1e-4, c2 = 0.9)
template <typename Phi>
double wolfe_zoom(Phi&& phi, double a_lo, double a_hi, double f_lo, double f0, double d0,
                  double c1, double c2, double* f_out, double* d_out) {
  for (int iter = 0; iter < 30; ++iter) {
    const double a = 0.5 * (a_lo + a_hi);
    double fa, da;
    phi(a, &fa, &da);
    if (!std::isfinite(fa) || fa > f0 + c1 * a * d0 || fa >= f_lo) {
      a_hi = a;
    } else {
      if (std::abs(da) <= -c2 * d0) {
        *f_out = fa;
        *d_out = da;
        return a;
      }
      if (da * (a_hi - a_lo) >= 0.0) a_hi = a_lo;
      a_lo = a;
      f_lo = fa;
    }
  }
  *f_out = f_lo;
  *d_out = 0.0;
  return a_lo;
}

}  // namespace detail

/// Limited-memory BFGS (memory 10) with a strong-Wolfe line search.
/// Never returns an iterate costlier than the starting point.
inline LocalMinResult quasi_newton(const Problem& p, std::span<const double> x0, double grad_tol,
                                   int max_iter) {
  const int n = p.dim;
  const int memory = 10;
  const double c1 = 1e-4, c2 = 0.9;

  LocalMinResult res;
  res.argmin.assign(x0.begin(), x0.end());
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> g(n), d(n), x_new(n), g_new(n);
  double f = p.cost(x);
  res.cost = f;
  if (!std::isfinite(f)) return res;
  p.gradient(x, g);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  int it = 0;
  for (; it < max_iter; ++it) {
    const double gnorm = detail::norm2(g);
    res.grad_norm = gnorm;
    if (gnorm <= grad_tol) {
      res.converged = true;
      break;
    }

    // two-loop recursion
    d.assign(g.begin(), g.end());
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * detail::dot(s_hist[i], d);
      for (int k = 0; k < n; ++k) d[k] -= alpha[i] * y_hist[i][k];
    }
    if (!s_hist.empty()) {
      const double gamma =
          detail::dot(s_hist.back(), y_hist.back()) / detail::dot(y_hist.back(), y_hist.back());
      for (int k = 0; k < n; ++k) d[k] *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * detail::dot(y_hist[i], d);
      for (int k = 0; k < n; ++k) d[k] += (alpha[i] - beta) * s_hist[i][k];
    }
    for (int k = 0; k < n; ++k) d[k] = -d[k];

    double d0 = detail::dot(g, d);
    if (!(d0 < 0.0)) {  // not a descent direction, fall back to steepest
      for (int k = 0; k < n; ++k) d[k] = -g[k];
      d0 = -gnorm * gnorm;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    auto phi = [&](double a, double* fa, double* da) {
      for (int k = 0; k < n; ++k) x_new[k] = x[k] + a * d[k];
      *fa = p.cost(x_new);
      if (std::isfinite(*fa)) {
        p.gradient(x_new, g_new);
        *da = detail::dot(g_new, d);
      } else {
        *da = std::numeric_limits<double>::quiet_NaN();
      }
    };

    // strong Wolfe search, unit trial step first
    double a_prev = 0.0, f_prev = f, a = 1.0;
    double fa, da;
    double step = 0.0;
    bool found = false;
    for (int ls = 0; ls < 20; ++ls) {
      phi(a, &fa, &da);
      if (!std::isfinite(fa) || fa > f + c1 * a * d0 || (ls > 0 && fa >= f_prev)) {
        step = detail::wolfe_zoom(phi, a_prev, a, f_prev, f, d0, c1, c2, &fa, &da);
        found = true;
        break;
      }
      if (std::abs(da) <= -c2 * d0) {
        step = a;
        found = true;
        break;
      }
      if (da >= 0.0) {
        step = detail::wolfe_zoom(phi, a, a_prev, fa, f, d0, c1, c2, &fa, &da);
        found = true;
        break;
      }
      a_prev = a;
      f_prev = fa;
      a *= 2.0;
    }
    if (!found || !(step > 0.0)) break;  // line search failed, keep best iterate

    for (int k = 0; k < n; ++k) x_new[k] = x[k] + step * d[k];
    phi(step, &fa, &da);  // recompute f/g at the accepted point
    if (!std::isfinite(fa) || fa > f) break;

    std::vector<double> s_vec(n), y_vec(n);
    for (int k = 0; k < n; ++k) {
      s_vec[k] = x_new[k] - x[k];
      y_vec[k] = g_new[k] - g[k];
    }
    const double sy = detail::dot(s_vec, y_vec);
    if (sy > 1e-12 * detail::norm2(s_vec) * detail::norm2(y_vec)) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = x_new;
    g = g_new;
    f = fa;
    if (f < res.cost) {
      res.cost = f;
      res.argmin = x;
    }
  }
  res.iterations = it;
  if (f <= res.cost) {
    res.cost = f;
    res.argmin = x;
  }
  res.grad_norm = detail::norm2(g);
  if (res.grad_norm <= grad_tol) res.converged = true;
  return res;
}

}  // namespace clm
