#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "clm/core.hpp"
#include "clm/rng.hpp"

namespace clm {

/// Knobs for the per-window parameter schedules.
///
/// gamma_lo/gamma_hi bound the coupling weights chosen by the linear
/// program, eta_lo/eta_hi bound the step size from the target evolution
/// law, alpha is the demanded decay rate of the average excess cost and
/// u_star the estimate of the cost at the global minimum. Every
/// renumber_period windows a renumber_fraction share of the members is
/// re-indexed at random.
struct ScheduleConfig {
  double gamma_lo = 1.0;
  double gamma_hi = 10.0;
  double eta_lo = 1e-2;
  double eta_hi = 1e3;
  double alpha = 1.0;
  double u_star = 0.0;
  int renumber_period = 5;
  double renumber_fraction = 0.0;

  void validate() const {
    if (!(gamma_lo > 0.0) || !(gamma_lo < gamma_hi))
      throw std::invalid_argument("schedule: need 0 < gamma_lo < gamma_hi");
    if (!(eta_lo > 0.0) || !(eta_lo < eta_hi))
      throw std::invalid_argument("schedule: need 0 < eta_lo < eta_hi");
    if (!(alpha > 0.0)) throw std::invalid_argument("schedule: need alpha > 0");
    if (renumber_period < 1) throw std::invalid_argument("schedule: need renumber_period >= 1");
    if (renumber_fraction < 0.0 || renumber_fraction > 1.0)
      throw std::invalid_argument("schedule: renumber_fraction must lie in [0, 1]");
  }
};

/// Coefficients c of the coupling weights in the expansion of d<U>/dt.
/// Along the flow, d<U>/dt = const + sum_i c_i gamma_i with
///   c_i = (1/q) <grads[i+1] - grads[i], x(i) - x(i+1)>   (ring).
/// grads is the flat q*n matrix of member gradients, row i = grad U[x(i)].
inline std::vector<double> gamma_coefficients(const EnsembleState& ens,
                                              std::span<const double> grads) {
  const int q = ens.q();
  const int n = ens.n();
  if (grads.size() != static_cast<std::size_t>(q) * n)
    throw std::invalid_argument("gamma_coefficients: need q*n gradient entries");
  std::vector<double> c(q);
  for (int i = 0; i < q; ++i) {
    const int next = (i + 1) % q;
    auto xi = ens.x(i);
    auto xn = ens.x(next);
    const double* gi = grads.data() + static_cast<std::size_t>(i) * n;
    const double* gn = grads.data() + static_cast<std::size_t>(next) * n;
    double dot = 0.0;
    for (int k = 0; k < n; ++k) dot += (gn[k] - gi[k]) * (xi[k] - xn[k]);
    c[i] = dot / q;
  }
  return c;
}

/// Minimizer of sum_i c_i gamma_i over the box [gamma_lo, gamma_hi]^q.
/// The objective is separable, so each weight sits at a box corner:
/// the upper bound where its coefficient is negative, the lower bound
/// otherwise (ties go to the lower bound, keeping coupling weak when it
/// is value-neutral).
inline std::vector<double> schedule_gamma(std::span<const double> c, const ScheduleConfig& cfg) {
  std::vector<double> gamma(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    gamma[i] = c[i] < 0.0 ? cfg.gamma_hi : cfg.gamma_lo;
  return gamma;
}

struct EtaResult {
  double eta = 0.0;       // clamped value actually applied
  double eta_raw = 0.0;   // solution of the target law before clamping
  bool stationary = false;  // all member gradients were zero
  bool clamped = false;
};

/// Step size from the target evolution law d(<U> - U*)/dt = -alpha (<U> - U*).
/// Substituting the flow into d<U>/dt and solving for eta gives
///   eta = [ q sum_i <g_i, h(i)> + q alpha (sum_i U_i - q U*) ] / sum_i <g_i, g_i>
/// which is then clamped to [eta_lo, eta_hi]. A stationary ensemble
/// (all gradients zero) has no defined eta; the lower bound is returned
/// and flagged.
inline EtaResult schedule_eta(const EnsembleState& ens, std::span<const double> grads,
                              std::span<const double> costs, std::span<const double> gamma,
                              const ScheduleConfig& cfg) {
  const int q = ens.q();
  const int n = ens.n();
  if (grads.size() != static_cast<std::size_t>(q) * n)
    throw std::invalid_argument("schedule_eta: need q*n gradient entries");
  if (costs.size() != static_cast<std::size_t>(q))
    throw std::invalid_argument("schedule_eta: need q member costs");

  double gh = 0.0;       // sum_i <g_i, h(i)>
  double gg = 0.0;       // sum_i ||g_i||^2
  double cost_sum = 0.0;
  std::vector<double> h(n);
  for (int i = 0; i < q; ++i) {
    detail::coupling_term(ens, gamma, i, h);
    const double* gi = grads.data() + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < n; ++k) {
      gh += gi[k] * h[k];
      gg += gi[k] * gi[k];
    }
    cost_sum += costs[i];
  }

  EtaResult r;
  if (gg == 0.0) {
    r.eta = cfg.eta_lo;
    r.eta_raw = 0.0;
    r.stationary = true;
    r.clamped = true;
    return r;
  }
  r.eta_raw = (q * gh + q * cfg.alpha * (cost_sum - q * cfg.u_star)) / gg;
  r.eta = std::clamp(r.eta_raw, cfg.eta_lo, cfg.eta_hi);
  r.clamped = r.eta != r.eta_raw;
  return r;
}

struct RenumberEvent {
  std::vector<int> selected;     // the positions that took part, ascending
  std::vector<int> permutation;  // permutation[i] = source position now at slot i
};

/// Re-indexes a random subset of the ensemble, moving each selected
/// member's state together with its multiplier. round(fraction * q)
/// distinct positions are chosen and their (x, lambda) pairs permuted
/// uniformly at random; everything else stays put, so the multiset of
/// pairs is preserved.
inline EnsembleState renumber(const EnsembleState& ens, const ScheduleConfig& cfg, Rng& rng,
                              RenumberEvent* event = nullptr) {
  const int q = ens.q();
  const int k = static_cast<int>(std::llround(cfg.renumber_fraction * q));

  std::vector<int> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> chosen;

  if (k >= 1) {
    // choose k distinct positions by partial Fisher-Yates
    std::vector<int> pool(q);
    std::iota(pool.begin(), pool.end(), 0);
    for (int j = 0; j < k; ++j) {
      const std::size_t pick = j + uniform_index(rng, static_cast<std::size_t>(q - j));
      std::swap(pool[j], pool[pick]);
    }
    chosen.assign(pool.begin(), pool.begin() + k);
    std::sort(chosen.begin(), chosen.end());

    // uniform random permutation of the chosen slots
    std::vector<int> shuffled = chosen;
    for (int j = k - 1; j > 0; --j) {
      const std::size_t pick = uniform_index(rng, static_cast<std::size_t>(j + 1));
      std::swap(shuffled[j], shuffled[pick]);
    }
    for (int j = 0; j < k; ++j) perm[chosen[j]] = shuffled[j];
  }

  EnsembleState out(q, ens.n());
  for (int i = 0; i < q; ++i) {
    auto xs = ens.x(perm[i]);
    auto ls = ens.lambda(perm[i]);
    std::copy(xs.begin(), xs.end(), out.x(i).begin());
    std::copy(ls.begin(), ls.end(), out.lambda(i).begin());
  }
  if (event) {
    event->selected = std::move(chosen);
    event->permutation = std::move(perm);
  }
  return out;
}

}  // namespace clm
