#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace clm {

/// Thrown when a cost or gradient evaluation produces a non-finite value.
/// member_index identifies the ensemble member whose evaluation failed,
/// or -1 when the failure is not tied to a particular member.
struct NumericalError : std::runtime_error {
  int member_index;
  NumericalError(const std::string& what, int index = -1)
      : std::runtime_error(what), member_index(index) {}
};

/// A differentiable cost U: R^n -> R with its analytic gradient.
/// `gradient` writes grad U(x) into the output span (same length as x).
struct Problem {
  std::string name;
  int dim = 0;
  std::function<double(std::span<const double>)> cost;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

inline std::vector<double> grad_of(const Problem& p, std::span<const double> x) {
  std::vector<double> g(x.size());
  p.gradient(x, g);
  return g;
}

/// Per-window coupling parameters: one penalty weight per ring constraint
/// plus the scalar step size applied to the cost gradient.
struct ScheduleParams {
  std::vector<double> gamma;
  double eta = 1.0;
};

/// An ensemble of q member states x(i) in R^n together with their
/// Lagrange multipliers lambda(i) in R^n. Members sit on a ring:
/// index arithmetic wraps modulo q, so member q couples back to member 0.
///
/// Storage is one flat vector laid out as
///   [x(0); x(1); ...; x(q-1); lambda(0); ...; lambda(q-1)]
/// which is also the layout handed to the ODE integrator.
class EnsembleState {
 public:
  EnsembleState(int q, int n) : q_(q), n_(n), flat_(2 * static_cast<std::size_t>(q) * n, 0.0) {
    check_shape(q, n);
  }

  static EnsembleState from_flat(int q, int n, std::vector<double> flat) {
    check_shape(q, n);
    if (flat.size() != 2 * static_cast<std::size_t>(q) * n)
      throw std::invalid_argument("EnsembleState: flat vector has wrong length");
    EnsembleState s(q, n);
    s.flat_ = std::move(flat);
    return s;
  }

  int q() const { return q_; }
  int n() const { return n_; }
  std::size_t flat_size() const { return flat_.size(); }

  std::span<const double> x(int i) const { return {flat_.data() + slot(i), static_cast<std::size_t>(n_)}; }
  std::span<double> x(int i) { return {flat_.data() + slot(i), static_cast<std::size_t>(n_)}; }
  std::span<const double> lambda(int i) const {
    return {flat_.data() + slot(i) + static_cast<std::size_t>(q_) * n_, static_cast<std::size_t>(n_)};
  }
  std::span<double> lambda(int i) {
    return {flat_.data() + slot(i) + static_cast<std::size_t>(q_) * n_, static_cast<std::size_t>(n_)};
  }

  const std::vector<double>& flat() const { return flat_; }
  std::vector<double>& flat() { return flat_; }

 private:
  static void check_shape(int q, int n) {
    if (q < 2) throw std::invalid_argument("EnsembleState: need q >= 2 members");
    if (n < 1) throw std::invalid_argument("EnsembleState: need dimension n >= 1");
  }
  std::size_t slot(int i) const { return static_cast<std::size_t>(i) * n_; }

  int q_;
  int n_;
  std::vector<double> flat_;
};

namespace detail {

inline void check_dims(const EnsembleState& ens, const Problem& p) {
  if (p.dim != ens.n())
    throw std::invalid_argument("problem dimension " + std::to_string(p.dim) +
                                " does not match ensemble dimension " + std::to_string(ens.n()));
}

inline void check_dims(const EnsembleState& ens, const Problem& p, const ScheduleParams& s) {
  check_dims(ens, p);
  if (s.gamma.size() != static_cast<std::size_t>(ens.q()))
    throw std::invalid_argument("need one coupling weight per ensemble member");
}

}  // namespace detail

/// <U> = (1/q) sum_i U[x(i)]
inline double average_cost(const EnsembleState& ens, const Problem& p) {
  detail::check_dims(ens, p);
  double sum = 0.0;
  for (int i = 0; i < ens.q(); ++i) sum += p.cost(ens.x(i));
  return sum / ens.q();
}

/// max over ring-adjacent pairs of ||x(i) - x(i+1)||_2; zero iff synchronized
inline double sync_residual(const EnsembleState& ens) {
  const int q = ens.q();
  double worst = 0.0;
  for (int i = 0; i < q; ++i) {
    auto a = ens.x(i);
    auto b = ens.x((i + 1) % q);
    double d2 = 0.0;
    for (int k = 0; k < ens.n(); ++k) {
      const double d = a[k] - b[k];
      d2 += d * d;
    }
    worst = std::max(worst, std::sqrt(d2));
  }
  return worst;
}

/// Augmented Lagrangian of the constrained ensemble objective:
/// (eta/q) sum_i U[x(i)]
///   + 1/2 sum_i gamma_i ||x(i) - x(i+1)||^2
///   + sum_i <lambda(i), x(i) - x(i+1)>
/// with all three sums wrapping around the ring at i = q-1.
inline double augmented_lagrangian(const EnsembleState& ens, const Problem& p,
                                   const ScheduleParams& s) {
  detail::check_dims(ens, p, s);
  const int q = ens.q();
  const int n = ens.n();
  double obj = 0.0, soft = 0.0, hard = 0.0;
  for (int i = 0; i < q; ++i) {
    obj += p.cost(ens.x(i));
    auto xi = ens.x(i);
    auto xn = ens.x((i + 1) % q);
    auto li = ens.lambda(i);
    double d2 = 0.0, ld = 0.0;
    for (int k = 0; k < n; ++k) {
      const double d = xi[k] - xn[k];
      d2 += d * d;
      ld += li[k] * d;
    }
    soft += 0.5 * s.gamma[i] * d2;
    hard += ld;
  }
  return s.eta / q * obj + soft + hard;
}

namespace detail {

/// Coupling part of the state velocity for member i:
///   h(i) = gamma_{i-1} [x(i-1) - x(i)] - gamma_i [x(i) - x(i+1)]
///          + lambda(i-1) - lambda(i)
/// Shared between the flow itself and the step-size schedule so both see
/// bitwise-identical values. y points at a flat [x; lambda] layout.
inline void coupling_term_flat(int q, int n, const double* y, std::span<const double> gamma, int i,
                               double* out) {
  const int prev = (i + q - 1) % q;
  const int next = (i + 1) % q;
  const double* xp = y + static_cast<std::size_t>(prev) * n;
  const double* xi = y + static_cast<std::size_t>(i) * n;
  const double* xn = y + static_cast<std::size_t>(next) * n;
  const double* lbase = y + static_cast<std::size_t>(q) * n;
  const double* lp = lbase + static_cast<std::size_t>(prev) * n;
  const double* li = lbase + static_cast<std::size_t>(i) * n;
  const double gp = gamma[prev];
  const double gi = gamma[i];
  for (int k = 0; k < n; ++k)
    out[k] = gp * (xp[k] - xi[k]) - gi * (xi[k] - xn[k]) + lp[k] - li[k];
}

inline void coupling_term(const EnsembleState& ens, std::span<const double> gamma, int i,
                          std::span<double> out) {
  coupling_term_flat(ens.q(), ens.n(), ens.flat().data(), gamma, i, out.data());
}

}  // namespace detail

/// Flat-layout right-hand side, the form handed to the integrator.
/// y and dydt are [x(0..q-1); lambda(0..q-1)] vectors of length 2qn;
/// grad_scratch must hold n doubles.
inline void clm_rhs_flat(int q, int n, std::span<const double> y, const Problem& p,
                         std::span<const double> gamma, double eta, std::span<double> dydt,
                         std::span<double> grad_scratch) {
  const double scale = eta / q;
  const std::size_t loff = static_cast<std::size_t>(q) * n;
  for (int i = 0; i < q; ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * n;
    std::span<const double> xi = y.subspan(off, n);
    p.gradient(xi, grad_scratch);
    for (int k = 0; k < n; ++k) {
      if (!std::isfinite(grad_scratch[k]))
        throw NumericalError("non-finite gradient for ensemble member " + std::to_string(i), i);
    }
    double* dx = dydt.data() + off;
    detail::coupling_term_flat(q, n, y.data(), gamma, i, dx);
    for (int k = 0; k < n; ++k) dx[k] -= scale * grad_scratch[k];

    const double* xn = y.data() + static_cast<std::size_t>((i + 1) % q) * n;
    double* dl = dydt.data() + loff + off;
    for (int k = 0; k < n; ++k) dl[k] = xi[k] - xn[k];
  }
}

/// Right-hand side of the coupled-minimizer flow. Descends the augmented
/// Lagrangian in the states and ascends it in the multipliers:
///   xdot(i)      = -(eta/q) grad U[x(i)] + h(i)
///   lambdadot(i) = x(i) - x(i+1)
/// Returns the derivative packed in EnsembleState layout.
inline EnsembleState clm_rhs(const EnsembleState& ens, const Problem& p, const ScheduleParams& s) {
  detail::check_dims(ens, p, s);
  EnsembleState deriv(ens.q(), ens.n());
  std::vector<double> scratch(ens.n());
  clm_rhs_flat(ens.q(), ens.n(), ens.flat(), p, s.gamma, s.eta, deriv.flat(), scratch);
  return deriv;
}

}  // namespace clm
