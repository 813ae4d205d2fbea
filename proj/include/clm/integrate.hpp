#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "clm/core.hpp"
#include "clm/rng.hpp"
#include "clm/schedule.hpp"

namespace clm {

struct IntegratorStats {
  std::uint64_t steps = 0;
  std::uint64_t rejected = 0;
  std::uint64_t rhs_evals = 0;
};

/// Thrown when the adaptive step size collapses (stiffness or a
/// persistently non-finite right-hand side). Carries the last accepted
/// state and how far the integration got.
struct IntegrationError : std::runtime_error {
  std::vector<double> last_state;
  double t_reached;
  IntegrationError(const std::string& what, std::vector<double> state, double t)
      : std::runtime_error(what), last_state(std::move(state)), t_reached(t) {}
};

namespace detail {

// Dormand-Prince 5(4) coefficients
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace detail

/// Advances y0 by exactly delta_t using the embedded Dormand-Prince 5(4)
/// pair with per-component mixed absolute/relative error control:
/// each step is accepted when the RMS of e_d / (abs_tol + rel_tol *
/// max(|y_d|, |y_new_d|)) is at most one.
///
/// The callable has signature rhs(t, y, dydt) and writes the derivative.
template <typename RhsFn>
std::vector<double> integrate_window(std::vector<double> y, RhsFn&& rhs, double delta_t,
                                     double abs_tol, double rel_tol,
                                     IntegratorStats* stats = nullptr) {
  using namespace detail;
  if (!(delta_t > 0.0)) throw std::invalid_argument("integrate_window: need delta_t > 0");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
    throw std::invalid_argument("integrate_window: tolerances must be positive");

  const std::size_t dim = y.size();
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  std::vector<double> ytmp(dim), ynew(dim);

  IntegratorStats local;
  IntegratorStats& st = stats ? *stats : local;

  double t = 0.0;
  double h = delta_t;  // first trial step: the whole window; rejections shrink it

  rhs(0.0, std::span<const double>(y), std::span<double>(k1));
  ++st.rhs_evals;

  bool rejected_last = false;
  while (t < delta_t) {
    // stuck: the controller step vanished relative to the current time
    if (h < 1e-300 || h <= std::numeric_limits<double>::epsilon() * t)
      throw IntegrationError("step size underflow at t = " + std::to_string(t), y, t);
    double h_try = h;
    const bool last = t + 1.01 * h_try >= delta_t;
    if (last) h_try = delta_t - t;  // stretch the final step to the boundary

    auto stage = [&](const std::vector<double>& coeffs_sum, double tc, std::vector<double>& k) {
      rhs(t + tc * h_try, std::span<const double>(coeffs_sum), std::span<double>(k));
      ++st.rhs_evals;
    };

    for (std::size_t d = 0; d < dim; ++d) ytmp[d] = y[d] + h_try * a21 * k1[d];
    stage(ytmp, c2, k2);
    for (std::size_t d = 0; d < dim; ++d) ytmp[d] = y[d] + h_try * (a31 * k1[d] + a32 * k2[d]);
    stage(ytmp, c3, k3);
    for (std::size_t d = 0; d < dim; ++d)
      ytmp[d] = y[d] + h_try * (a41 * k1[d] + a42 * k2[d] + a43 * k3[d]);
    stage(ytmp, c4, k4);
    for (std::size_t d = 0; d < dim; ++d)
      ytmp[d] = y[d] + h_try * (a51 * k1[d] + a52 * k2[d] + a53 * k3[d] + a54 * k4[d]);
    stage(ytmp, c5, k5);
    for (std::size_t d = 0; d < dim; ++d)
      ytmp[d] = y[d] + h_try * (a61 * k1[d] + a62 * k2[d] + a63 * k3[d] + a64 * k4[d] + a65 * k5[d]);
    stage(ytmp, 1.0, k6);
    for (std::size_t d = 0; d < dim; ++d)
      ynew[d] = y[d] + h_try * (a71 * k1[d] + a73 * k3[d] + a74 * k4[d] + a75 * k5[d] + a76 * k6[d]);
    stage(ynew, 1.0, k7);

    double err = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double ee =
          h_try * (e1 * k1[d] + e3 * k3[d] + e4 * k4[d] + e5 * k5[d] + e6 * k6[d] + e7 * k7[d]);
      const double scale = abs_tol + rel_tol * std::max(std::abs(y[d]), std::abs(ynew[d]));
      const double r = ee / scale;
      err += r * r;
    }
    err = std::sqrt(err / static_cast<double>(dim));

    if (err <= 1.0) {  // NaN fails this test and rejects the step
      t += h_try;
      std::swap(y, ynew);
      std::swap(k1, k7);  // FSAL
      ++st.steps;
      double factor = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
      if (rejected_last) factor = std::min(factor, 1.0);
      rejected_last = false;
      // a stretched final step must not shrink the controller step
      if (!last) h = h_try * factor;
    } else {
      ++st.rejected;
      rejected_last = true;
      const double factor =
          std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h = h_try * factor;
    }
  }
  return y;
}

/// Full configuration of one coupled-minimizer run.
struct CLMConfig {
  int q = 20;
  double delta_t = 1e-2;
  ScheduleConfig schedule;
  double abs_tol = 1e-2;  // adaptive integrator tolerances
  double rel_tol = 1e-2;
  int max_windows = 1000;
  double stop_sync_tol = 0.0;  // <= 0 disables early stopping
  std::uint64_t seed = 1;

  void validate() const {
    if (q < 2) throw std::invalid_argument("config: need q >= 2");
    if (!(delta_t > 0.0)) throw std::invalid_argument("config: need delta_t > 0");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
      throw std::invalid_argument("config: tolerances must be positive");
    if (max_windows < 1) throw std::invalid_argument("config: need max_windows >= 1");
    schedule.validate();
  }
};

/// One completed scheduling window.
struct WindowRecord {
  int window = 0;  // 1-based
  double t = 0.0;  // flow time at the end of the window
  std::vector<double> member_costs;
  double avg_cost = 0.0;
  double sync = 0.0;
  std::vector<double> gamma;
  double eta = 0.0;
  double eta_raw = 0.0;
  bool eta_clamped = false;
  bool stationary = false;
  bool renumbered = false;
  std::vector<int> permutation;  // only set on renumber windows
  std::uint64_t rk_steps = 0;
  std::uint64_t rk_rejected = 0;
};

struct RunTrace {
  std::vector<WindowRecord> windows;
  bool stopped_early = false;
};

struct RunResult {
  EnsembleState final_state;
  RunTrace trace;
};

/// Thrown when a run aborts mid-way; carries everything recorded so far.
struct RunFailure : std::runtime_error {
  RunTrace partial;
  std::vector<double> last_state;
  double t_reached;
  RunFailure(const std::string& what, RunTrace trace, std::vector<double> state, double t)
      : std::runtime_error(what), partial(std::move(trace)), last_state(std::move(state)),
        t_reached(t) {}
};

struct BestMember {
  int index = 0;
  std::vector<double> x;
  double cost = 0.0;
};

/// Member with the smallest cost (first index wins ties).
inline BestMember best_member(const EnsembleState& ens, const Problem& p) {
  detail::check_dims(ens, p);
  BestMember best;
  best.index = 0;
  best.cost = p.cost(ens.x(0));
  for (int i = 1; i < ens.q(); ++i) {
    const double c = p.cost(ens.x(i));
    if (c < best.cost) {
      best.cost = c;
      best.index = i;
    }
  }
  auto xs = ens.x(best.index);
  best.x.assign(xs.begin(), xs.end());
  return best;
}

namespace detail {

inline void eval_members(const EnsembleState& ens, const Problem& p, std::vector<double>& costs,
                         std::vector<double>& grads, const RunTrace& trace, double t) {
  const int q = ens.q();
  const int n = ens.n();
  costs.resize(q);
  grads.resize(static_cast<std::size_t>(q) * n);
  for (int i = 0; i < q; ++i) {
    costs[i] = p.cost(ens.x(i));
    if (!std::isfinite(costs[i]))
      throw RunFailure("non-finite cost for member " + std::to_string(i), trace, ens.flat(), t);
    p.gradient(ens.x(i), std::span<double>(grads.data() + static_cast<std::size_t>(i) * n,
                                           static_cast<std::size_t>(n)));
  }
}

}  // namespace detail

/// The outer optimization loop. Each window: evaluate member costs and
/// gradients, pick the coupling weights by the linear program, pick the
/// step size from the target law, integrate the flow over delta_t with
/// those values held fixed, and renumber every renumber_period-th window.
///
/// Stops early once the sync residual falls below stop_sync_tol and the
/// relative change of <U> over the last 10 windows is under 1e-6.
inline RunResult run_clm(const Problem& p, const CLMConfig& cfg, const EnsembleState& init) {
  cfg.validate();
  if (init.q() != cfg.q) throw std::invalid_argument("run_clm: init ensemble size != config q");
  detail::check_dims(init, p);

  const int q = cfg.q;
  const int n = init.n();
  Rng rng(cfg.seed);

  EnsembleState state = init;
  RunTrace trace;
  trace.windows.reserve(cfg.max_windows);
  double t = 0.0;

  std::vector<double> costs, grads;
  detail::eval_members(state, p, costs, grads, trace, t);

  for (int w = 1; w <= cfg.max_windows; ++w) {
    const auto coeff = gamma_coefficients(state, grads);
    const auto gamma = schedule_gamma(coeff, cfg.schedule);
    const EtaResult eta = schedule_eta(state, grads, costs, gamma, cfg.schedule);

    IntegratorStats stats;
    std::vector<double> scratch(n);
    std::vector<double> flat = state.flat();
    try {
      flat = integrate_window(
          std::move(flat),
          [&](double, std::span<const double> y, std::span<double> dydt) {
            clm_rhs_flat(q, n, y, p, gamma, eta.eta, dydt, scratch);
          },
          cfg.delta_t, cfg.abs_tol, cfg.rel_tol, &stats);
    } catch (const IntegrationError& e) {
      throw RunFailure(std::string("integration failed in window ") + std::to_string(w) + ": " +
                           e.what(),
                       trace, e.last_state, t + e.t_reached);
    }
    state = EnsembleState::from_flat(q, n, std::move(flat));
    t += cfg.delta_t;

    WindowRecord rec;
    rec.window = w;
    rec.t = t;
    rec.gamma = gamma;
    rec.eta = eta.eta;
    rec.eta_raw = eta.eta_raw;
    rec.eta_clamped = eta.clamped;
    rec.stationary = eta.stationary;
    rec.rk_steps = stats.steps;
    rec.rk_rejected = stats.rejected;

    if (cfg.schedule.renumber_fraction > 0.0 && w % cfg.schedule.renumber_period == 0) {
      RenumberEvent event;
      state = renumber(state, cfg.schedule, rng, &event);
      rec.renumbered = true;
      rec.permutation = std::move(event.permutation);
    }

    detail::eval_members(state, p, costs, grads, trace, t);
    rec.member_costs = costs;
    double sum = 0.0;
    for (double c : costs) sum += c;
    rec.avg_cost = sum / q;
    rec.sync = sync_residual(state);
    trace.windows.push_back(std::move(rec));

    const auto& win = trace.windows;
    if (cfg.stop_sync_tol > 0.0 && win.size() >= 10 && win.back().sync < cfg.stop_sync_tol) {
      const double now = win.back().avg_cost;
      const double then = win[win.size() - 10].avg_cost;
      if (std::abs(now - then) / std::max(1.0, std::abs(now)) < 1e-6) {
        trace.stopped_early = true;
        break;
      }
    }
  }
  return RunResult{std::move(state), std::move(trace)};
}

}  // namespace clm
