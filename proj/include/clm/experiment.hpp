#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clm/baselines.hpp"
#include "clm/integrate.hpp"
#include "clm/io.hpp"
#include "clm/problems.hpp"

namespace clm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// experiment configuration

struct ProblemSpec {
  std::string name = "multimodal";
  // multimodal
  int n = 10;
  double a = 0.01, omega1 = 0.2, omega2 = 1.0;
  // lj family
  int atoms = 13;
  double mu = 0.1, nu = 3.0;
  // constant added to the cost (any problem)
  double delta = 0.0;
  // mlp_sine
  int hidden = 10;
  int data_points = 20;
  double noise_std = 0.4;
  std::uint64_t data_seed = 7;
  std::string dataset_path;  // optional CSV overriding the generated training set
};

struct InitSpec {
  std::string kind = "gaussian";  // "gaussian" or "uniform"
  double sigma = 0.1;
  double lo = -1.0, hi = 1.0;
};

struct PolishSpec {
  bool enabled = true;
  double grad_tol = 1e-9;
  int max_iter = 1000;
};

struct BaselineSpec {
  int descent_max_iter = 5000;
  int quasi_newton_max_iter = 1000;
};

struct PhaseSpec;  // optional second stage, e.g. softened potential then plain

struct ExperimentConfig {
  ProblemSpec problem;
  CLMConfig clm;
  InitSpec init;
  PolishSpec polish;
  BaselineSpec baselines;
  std::shared_ptr<PhaseSpec> second_phase;  // null when single-phase
  std::string output_dir = "clm_out";
};

struct PhaseSpec {
  ProblemSpec problem;
  std::optional<CLMConfig> clm;  // defaults to the first-phase settings
};

// ---------------------------------------------------------------------------
// JSON (de)serialization; unknown problem names and inconsistent bounds throw

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (auto it = j.find(key); it != j.end()) return it->get<T>();
  return fallback;
}

}  // namespace detail

inline void from_json(const json& j, ProblemSpec& p) {
  p.name = j.at("name").get<std::string>();
  p.n = detail::get_or(j, "n", p.n);
  p.a = detail::get_or(j, "a", p.a);
  p.omega1 = detail::get_or(j, "omega1", p.omega1);
  p.omega2 = detail::get_or(j, "omega2", p.omega2);
  p.atoms = detail::get_or(j, "atoms", p.atoms);
  p.mu = detail::get_or(j, "mu", p.mu);
  p.nu = detail::get_or(j, "nu", p.nu);
  p.delta = detail::get_or(j, "delta", p.delta);
  p.hidden = detail::get_or(j, "hidden", p.hidden);
  p.data_points = detail::get_or(j, "data_points", p.data_points);
  p.noise_std = detail::get_or(j, "noise_std", p.noise_std);
  p.data_seed = detail::get_or(j, "data_seed", p.data_seed);
  p.dataset_path = detail::get_or(j, "dataset_path", p.dataset_path);
}

inline void to_json(json& j, const ProblemSpec& p) {
  j = json{{"name", p.name}};
  if (p.name == "multimodal") {
    j["n"] = p.n;
    j["a"] = p.a;
    j["omega1"] = p.omega1;
    j["omega2"] = p.omega2;
  } else if (p.name == "lj" || p.name == "lj_shifted") {
    j["atoms"] = p.atoms;
    if (p.name == "lj_shifted") {
      j["mu"] = p.mu;
      j["nu"] = p.nu;
    }
  } else if (p.name == "quadratic") {
    j["n"] = p.n;
  } else if (p.name == "mlp_sine") {
    j["hidden"] = p.hidden;
    j["data_points"] = p.data_points;
    j["noise_std"] = p.noise_std;
    j["data_seed"] = p.data_seed;
    if (!p.dataset_path.empty()) j["dataset_path"] = p.dataset_path;
  }
  if (p.delta != 0.0) j["delta"] = p.delta;
}

inline void from_json(const json& j, CLMConfig& c) {
  c.q = detail::get_or(j, "q", c.q);
  c.delta_t = detail::get_or(j, "delta_t", c.delta_t);
  c.abs_tol = detail::get_or(j, "abs_tol", c.abs_tol);
  c.rel_tol = detail::get_or(j, "rel_tol", c.rel_tol);
  c.max_windows = detail::get_or(j, "max_windows", c.max_windows);
  c.stop_sync_tol = detail::get_or(j, "stop_sync_tol", c.stop_sync_tol);
  c.seed = detail::get_or(j, "seed", c.seed);
  c.schedule.gamma_lo = detail::get_or(j, "gamma_lo", c.schedule.gamma_lo);
  c.schedule.gamma_hi = detail::get_or(j, "gamma_hi", c.schedule.gamma_hi);
  c.schedule.eta_lo = detail::get_or(j, "eta_lo", c.schedule.eta_lo);
  c.schedule.eta_hi = detail::get_or(j, "eta_hi", c.schedule.eta_hi);
  c.schedule.alpha = detail::get_or(j, "alpha", c.schedule.alpha);
  c.schedule.u_star = detail::get_or(j, "u_star", c.schedule.u_star);
  c.schedule.renumber_period = detail::get_or(j, "renumber_period", c.schedule.renumber_period);
  c.schedule.renumber_fraction =
      detail::get_or(j, "renumber_fraction", c.schedule.renumber_fraction);
  c.validate();
}

inline void to_json(json& j, const CLMConfig& c) {
  j = json{{"q", c.q},
           {"delta_t", c.delta_t},
           {"abs_tol", c.abs_tol},
           {"rel_tol", c.rel_tol},
           {"max_windows", c.max_windows},
           {"stop_sync_tol", c.stop_sync_tol},
           {"seed", c.seed},
           {"gamma_lo", c.schedule.gamma_lo},
           {"gamma_hi", c.schedule.gamma_hi},
           {"eta_lo", c.schedule.eta_lo},
           {"eta_hi", c.schedule.eta_hi},
           {"alpha", c.schedule.alpha},
           {"u_star", c.schedule.u_star},
           {"renumber_period", c.schedule.renumber_period},
           {"renumber_fraction", c.schedule.renumber_fraction}};
}

inline void from_json(const json& j, InitSpec& s) {
  s.kind = detail::get_or<std::string>(j, "kind", s.kind);
  s.sigma = detail::get_or(j, "sigma", s.sigma);
  s.lo = detail::get_or(j, "lo", s.lo);
  s.hi = detail::get_or(j, "hi", s.hi);
  if (s.kind != "gaussian" && s.kind != "uniform")
    throw std::invalid_argument("init.kind must be \"gaussian\" or \"uniform\"");
}

inline void to_json(json& j, const InitSpec& s) {
  j = json{{"kind", s.kind}};
  if (s.kind == "gaussian")
    j["sigma"] = s.sigma;
  else {
    j["lo"] = s.lo;
    j["hi"] = s.hi;
  }
}

inline void from_json(const json& j, PolishSpec& s) {
  s.enabled = detail::get_or(j, "enabled", s.enabled);
  s.grad_tol = detail::get_or(j, "grad_tol", s.grad_tol);
  s.max_iter = detail::get_or(j, "max_iter", s.max_iter);
}

inline void to_json(json& j, const PolishSpec& s) {
  j = json{{"enabled", s.enabled}, {"grad_tol", s.grad_tol}, {"max_iter", s.max_iter}};
}

inline void from_json(const json& j, BaselineSpec& s) {
  s.descent_max_iter = detail::get_or(j, "descent_max_iter", s.descent_max_iter);
  s.quasi_newton_max_iter = detail::get_or(j, "quasi_newton_max_iter", s.quasi_newton_max_iter);
}

inline void to_json(json& j, const BaselineSpec& s) {
  j = json{{"descent_max_iter", s.descent_max_iter},
           {"quasi_newton_max_iter", s.quasi_newton_max_iter}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  j.at("problem").get_to(c.problem);
  j.at("clm").get_to(c.clm);
  if (auto it = j.find("init"); it != j.end()) it->get_to(c.init);
  if (auto it = j.find("polish"); it != j.end()) it->get_to(c.polish);
  if (auto it = j.find("baselines"); it != j.end()) it->get_to(c.baselines);
  if (auto it = j.find("second_phase"); it != j.end()) {
    auto phase = std::make_shared<PhaseSpec>();
    it->at("problem").get_to(phase->problem);
    if (auto cl = it->find("clm"); cl != it->end()) {
      CLMConfig base = c.clm;
      cl->get_to(base);
      phase->clm = base;
    }
    c.second_phase = std::move(phase);
  }
  c.output_dir = detail::get_or(j, "output_dir", c.output_dir);
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"problem", c.problem},
           {"clm", c.clm},
           {"init", c.init},
           {"polish", c.polish},
           {"baselines", c.baselines},
           {"output_dir", c.output_dir}};
  if (c.second_phase) {
    json ph{{"problem", c.second_phase->problem}};
    if (c.second_phase->clm) ph["clm"] = *c.second_phase->clm;
    j["second_phase"] = ph;
  }
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j = json::parse(in);
  return j.get<ExperimentConfig>();
}

// ---------------------------------------------------------------------------
// problem construction

struct BuiltProblem {
  Problem problem;  // includes the delta offset when one is configured
  double delta = 0.0;
  int lj_atoms = 0;  // nonzero when states are cluster geometries
  std::optional<MLPShape> mlp_shape;
  std::shared_ptr<SineData> sine;  // set for mlp_sine
};

inline BuiltProblem build_problem(const ProblemSpec& spec) {
  BuiltProblem out;
  if (spec.name == "double_well") {
    out.problem = make_double_well();
  } else if (spec.name == "multimodal") {
    out.problem = make_multimodal(spec.n, spec.a, spec.omega1, spec.omega2);
  } else if (spec.name == "lj") {
    out.problem = make_lj(spec.atoms);
    out.lj_atoms = spec.atoms;
  } else if (spec.name == "lj_shifted") {
    out.problem = make_lj_shifted(spec.atoms, spec.mu, spec.nu);
    out.lj_atoms = spec.atoms;
  } else if (spec.name == "quadratic") {
    out.problem = make_quadratic(spec.n);
  } else if (spec.name == "mlp_sine") {
    MLPShape shape{1, spec.hidden};
    auto sine = std::make_shared<SineData>();
    Rng rng(spec.data_seed);
    *sine = gen_sine_dataset(spec.data_points, spec.noise_std, rng);
    if (!spec.dataset_path.empty()) sine->train = read_dataset_csv(spec.dataset_path);
    out.problem = make_mlp_sse(shape, std::shared_ptr<const Dataset>(sine, &sine->train));
    out.mlp_shape = shape;
    out.sine = sine;
  } else {
    throw std::invalid_argument("unknown problem \"" + spec.name + "\"");
  }
  if (spec.delta != 0.0) {
    out.problem = offset_cost(out.problem, spec.delta);
    out.delta = spec.delta;
  }
  return out;
}

inline EnsembleState make_init(const InitSpec& spec, int q, int n, std::uint64_t seed) {
  Rng rng(seed);
  if (spec.kind == "gaussian") return sample_initial_states(InitialPrior{spec.sigma}, q, n, rng);
  return sample_uniform_states(spec.lo, spec.hi, q, n, rng);
}

// ---------------------------------------------------------------------------
// single experiment run

struct ExperimentOutcome {
  ExperimentConfig config;  // fully resolved
  BuiltProblem built;       // final-phase problem
  RunResult run;            // trace spans all phases
  BestMember best_pre;
  std::optional<LocalMinResult> polished;
  double wall_seconds = 0.0;

  double best_cost() const { return polished ? polished->cost : best_pre.cost; }
  double best_cost_base() const { return best_cost() - built.delta; }
  const std::vector<double>& best_x() const { return polished ? polished->argmin : best_pre.x; }
};

inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentOutcome out{cfg,
                        build_problem(cfg.problem),
                        RunResult{EnsembleState(2, 1), RunTrace{}},
                        {},
                        std::nullopt,
                        0.0};

  EnsembleState init = make_init(cfg.init, cfg.clm.q, out.built.problem.dim, cfg.clm.seed);
  out.run = run_clm(out.built.problem, cfg.clm, init);

  if (cfg.second_phase) {
    BuiltProblem second = build_problem(cfg.second_phase->problem);
    if (second.problem.dim != out.built.problem.dim)
      throw std::invalid_argument("second phase changes the state dimension");
    CLMConfig c2 = cfg.second_phase->clm.value_or(cfg.clm);
    c2.seed = cfg.clm.seed + 1;  // the second phase always derives its seed
    // carry the states over, restart the multipliers
    EnsembleState carry = out.run.final_state;
    for (int i = 0; i < carry.q(); ++i) std::fill(carry.lambda(i).begin(), carry.lambda(i).end(), 0.0);
    RunResult r2 = run_clm(second.problem, c2, carry);
    const int offset_w = static_cast<int>(out.run.trace.windows.size());
    const double offset_t = out.run.trace.windows.empty() ? 0.0 : out.run.trace.windows.back().t;
    for (auto& w : r2.trace.windows) {
      w.window += offset_w;
      w.t += offset_t;
      out.run.trace.windows.push_back(std::move(w));
    }
    out.run.trace.stopped_early = r2.trace.stopped_early;
    out.run.final_state = std::move(r2.final_state);
    out.built = std::move(second);
  }

  out.best_pre = best_member(out.run.final_state, out.built.problem);
  if (cfg.polish.enabled)
    out.polished =
        quasi_newton(out.built.problem, out.best_pre.x, cfg.polish.grad_tol, cfg.polish.max_iter);

  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// output files

inline json summary_json(const ExperimentOutcome& o) {
  const auto& trace = o.run.trace;
  std::uint64_t steps = 0, rejected = 0;
  int renumbers = 0;
  for (const auto& w : trace.windows) {
    steps += w.rk_steps;
    rejected += w.rk_rejected;
    renumbers += w.renumbered ? 1 : 0;
  }
  json best_pre{{"index", o.best_pre.index},
                {"cost", o.best_pre.cost},
                {"cost_base", o.best_pre.cost - o.built.delta},
                {"x", o.best_pre.x}};
  json j{{"problem", o.built.problem.name},
         {"dim", o.built.problem.dim},
         {"windows_run", trace.windows.size()},
         {"stopped_early", trace.stopped_early},
         {"flow_time", trace.windows.empty() ? 0.0 : trace.windows.back().t},
         {"final_avg_cost", trace.windows.empty() ? 0.0 : trace.windows.back().avg_cost},
         {"final_sync_residual", trace.windows.empty() ? 0.0 : trace.windows.back().sync},
         {"integrator", json{{"steps", steps}, {"rejected", rejected}}},
         {"renumber_events", renumbers},
         {"best_pre_polish", best_pre},
         {"wall_seconds", o.wall_seconds},
         {"config", o.config}};
  if (o.polished) {
    j["best_post_polish"] = json{{"cost", o.polished->cost},
                                 {"cost_base", o.polished->cost - o.built.delta},
                                 {"iterations", o.polished->iterations},
                                 {"converged", o.polished->converged},
                                 {"grad_norm", o.polished->grad_norm},
                                 {"x", o.polished->argmin}};
  }
  return j;
}

inline const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plot a CLM trace.csv produced by `clm run` (usage: plot_trace.py [trace.csv])."""
import csv, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "trace.csv"
rows = list(csv.DictReader(open(path)))
q = sum(1 for k in rows[0] if k.startswith("U_"))
t = [float(r["t"]) for r in rows]
fig, axes = plt.subplots(3, 1, figsize=(8, 10), sharex=True)
for i in range(1, q + 1):
    axes[0].plot(t, [float(r[f"U_{i}"]) for r in rows], lw=0.5, alpha=0.5)
axes[0].plot(t, [float(r["avgU"]) for r in rows], "k", lw=1.5, label="avg")
axes[0].set_ylabel("member costs")
axes[0].legend()
axes[1].semilogy(t, [max(float(r["sync_residual"]), 1e-300) for r in rows])
axes[1].set_ylabel("sync residual")
axes[2].semilogy(t, [float(r["eta"]) for r in rows])
axes[2].set_ylabel("eta")
axes[2].set_xlabel("flow time")
fig.tight_layout()
fig.savefig(path.replace(".csv", "") + ".png", dpi=120)
print("wrote", path.replace(".csv", "") + ".png")
)PY";

/// Writes trace.csv, summary.json, a plotting script, and for cluster
/// problems the best geometry as best.xyz.
inline void write_outputs(const ExperimentOutcome& o, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_trace_csv((dir / "trace.csv").string(), o.run.trace, o.config.clm.q);
  {
    std::ofstream out(dir / "summary.json");
    out << summary_json(o).dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "plot_trace.py");
    out << kPlotScript;
  }
  if (o.built.lj_atoms > 0) {
    LJCluster best{o.built.lj_atoms, o.best_x()};
    write_xyz((dir / "best.xyz").string(), best, o.best_cost_base());
  }
}

// ---------------------------------------------------------------------------
// CLM vs multistart benchmark

struct BenchRow {
  std::uint64_t seed = 0;
  double clm_best = 0.0;
  double multistart_best = 0.0;
  double quasi_newton_best = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  int clm_wins_vs_multistart = 0;
  int clm_wins_vs_quasi_newton = 0;
};

/// Runs CLM and the independent baselines from identical initial states
/// for `seeds` consecutive seeds. Costs are reported on the base
/// landscape (any delta offset removed).
inline BenchResult bench_experiment(const ExperimentConfig& cfg, int seeds) {
  if (seeds < 1) throw std::invalid_argument("bench: need at least one seed");
  BenchResult result;
  for (int s = 0; s < seeds; ++s) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.clm.seed = cfg.clm.seed + static_cast<std::uint64_t>(s);
    ExperimentOutcome outcome = run_experiment(run_cfg);

    // identical starts for the independent baselines
    EnsembleState init =
        make_init(run_cfg.init, run_cfg.clm.q, outcome.built.problem.dim, run_cfg.clm.seed);
    std::vector<std::vector<double>> starts;
    starts.reserve(init.q());
    for (int i = 0; i < init.q(); ++i)
      starts.emplace_back(init.x(i).begin(), init.x(i).end());

    // first-phase problem: the baselines see what CLM started from
    BuiltProblem first = build_problem(cfg.problem);
    DescentOptions dopt;
    dopt.max_iter = cfg.baselines.descent_max_iter;
    auto descent = multistart_descent(first.problem, starts, dopt);

    double qn_best = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
      auto r = quasi_newton(first.problem, start, 1e-9, cfg.baselines.quasi_newton_max_iter);
      if (std::isfinite(r.cost)) qn_best = std::min(qn_best, r.cost);
    }

    BenchRow row;
    row.seed = run_cfg.clm.seed;
    row.clm_best = outcome.best_cost_base();
    row.multistart_best = descent.front().cost - first.delta;
    row.quasi_newton_best = qn_best - first.delta;
    if (row.clm_best <= row.multistart_best) ++result.clm_wins_vs_multistart;
    if (row.clm_best <= row.quasi_newton_best) ++result.clm_wins_vs_quasi_newton;
    result.rows.push_back(row);
  }
  return result;
}

inline void write_bench_outputs(const BenchResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "comparison.csv");
    out << "seed,clm_best,multistart_best,quasi_newton_best\n";
    for (const auto& row : r.rows)
      out << row.seed << "," << detail::fmt_double(row.clm_best) << ","
          << detail::fmt_double(row.multistart_best) << ","
          << detail::fmt_double(row.quasi_newton_best) << "\n";
  }
  double mean_clm = 0.0, mean_ms = 0.0, mean_qn = 0.0;
  for (const auto& row : r.rows) {
    mean_clm += row.clm_best;
    mean_ms += row.multistart_best;
    mean_qn += row.quasi_newton_best;
  }
  const double n = static_cast<double>(r.rows.size());
  json j{{"seeds", r.rows.size()},
         {"clm_wins_vs_multistart", r.clm_wins_vs_multistart},
         {"clm_wins_vs_quasi_newton", r.clm_wins_vs_quasi_newton},
         {"clm_win_rate_vs_multistart", r.clm_wins_vs_multistart / n},
         {"mean_clm_best", mean_clm / n},
         {"mean_multistart_best", mean_ms / n},
         {"mean_quasi_newton_best", mean_qn / n}};
  std::ofstream out(dir / "bench_summary.json");
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// gradient verification across every registered problem

struct RegisteredProblem {
  std::string name;
  Problem problem;
  std::function<std::vector<double>(Rng&)> sample_point;
};

namespace detail {

/// Random cluster geometry with no pair closer than min_sep.
inline std::vector<double> sample_cluster(Rng& rng, int atoms, double min_sep = 0.9) {
  const double side = 1.3 * std::cbrt(2.0 * atoms);
  std::vector<double> c;
  while (true) {
    c.clear();
    bool ok = true;
    for (int i = 0; i < atoms && ok; ++i) {
      int tries = 0;
      while (true) {
        const double x = uniform(rng, 0.0, side);
        const double y = uniform(rng, 0.0, side);
        const double z = uniform(rng, 0.0, side);
        bool clash = false;
        for (int jj = 0; jj < i; ++jj) {
          const double dx = x - c[3 * jj], dy = y - c[3 * jj + 1], dz = z - c[3 * jj + 2];
          if (dx * dx + dy * dy + dz * dz < min_sep * min_sep) {
            clash = true;
            break;
          }
        }
        if (!clash) {
          c.insert(c.end(), {x, y, z});
          break;
        }
        if (++tries > 200) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return c;
  }
}

inline std::function<std::vector<double>(Rng&)> box_sampler(int n, double lo, double hi) {
  return [n, lo, hi](Rng& rng) {
    std::vector<double> x(n);
    for (auto& v : x) v = uniform(rng, lo, hi);
    return x;
  };
}

}  // namespace detail

/// The problems `clm gradcheck` and the verification suite run over.
inline std::vector<RegisteredProblem> gradcheck_registry() {
  std::vector<RegisteredProblem> reg;
  reg.push_back({"double_well", make_double_well(), detail::box_sampler(1, -5.0, 5.0)});
  reg.push_back({"multimodal10", make_multimodal(10), detail::box_sampler(10, -20.0, 20.0)});
  auto cluster6 = [](Rng& rng) { return detail::sample_cluster(rng, 6); };
  reg.push_back({"lj6", make_lj(6), cluster6});
  reg.push_back({"lj6_shifted", make_lj_shifted(6, 0.1, 3.0), cluster6});
  reg.push_back({"lj6_offset", offset_cost(make_lj(6), 200.0), cluster6});

  MLPShape shape{1, 10};
  auto sine = std::make_shared<SineData>();
  Rng data_rng(7);
  *sine = gen_sine_dataset(20, 0.4, data_rng);
  auto train = std::shared_ptr<const Dataset>(sine, &sine->train);
  reg.push_back({"mlp_sse", make_mlp_sse(shape, train),
                 detail::box_sampler(shape.param_count(), -2.0, 2.0)});
  reg.push_back({"mlp_sse_reg", make_mlp_sse_regularized(shape, train, 0.1, 1.0),
                 detail::box_sampler(shape.param_count(), -2.0, 2.0)});
  return reg;
}

struct GradCheckEntry {
  std::string name;
  double worst_rel_error = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool all_pass = true;
};

/// Analytic vs central-difference gradients at `points` random states per
/// problem. The error is ||g_fd - g||_2 / max(1, ||g||_2), so it reads as
/// a relative error for large gradients and an absolute one near
/// stationary points.
inline GradCheckReport run_gradcheck(const std::vector<RegisteredProblem>& problems,
                                     int points = 100, double tol = 1e-5,
                                     std::uint64_t seed = 20250101) {
  GradCheckReport report;
  for (const auto& rp : problems) {
    Rng rng(seed);
    GradCheckEntry entry;
    entry.name = rp.name;
    for (int k = 0; k < points; ++k) {
      const auto x = rp.sample_point(rng);
      const auto g = grad_of(rp.problem, x);
      const auto fd = finite_diff_grad(rp.problem, x);
      double diff2 = 0.0, g2 = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        diff2 += (fd[i] - g[i]) * (fd[i] - g[i]);
        g2 += g[i] * g[i];
      }
      const double rel = std::sqrt(diff2) / std::max(1.0, std::sqrt(g2));
      entry.worst_rel_error = std::max(entry.worst_rel_error, rel);
    }
    entry.pass = entry.worst_rel_error < tol;
    report.all_pass = report.all_pass && entry.pass;
    report.entries.push_back(entry);
  }
  return report;
}

/// Resolves where run artifacts go: $CLM_OUTPUT_ROOT when set, else the
/// current directory, with the config's output_dir appended.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg,
                                                const std::string& override_dir = "") {
  if (!override_dir.empty()) return override_dir;
  const char* root = std::getenv("CLM_OUTPUT_ROOT");
  return std::filesystem::path(root ? root : ".") / cfg.output_dir;
}

}  // namespace clm
