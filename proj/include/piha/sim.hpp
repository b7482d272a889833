#pragma once

// Simulation of PIHA: an embedded Runge-Kutta 4(5) integrator, guard
// crossing localization by bisection, hybrid trace assembly, and labeling
// of traces produced by an external simulator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "piha/error.hpp"
#include "piha/geometry.hpp"
#include "piha/model.hpp"

namespace piha {

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double h_init = 1e-6;
  double h_min = 1e-14;
  double h_max = 1e-4;
  double event_tol = 1e-9;
  std::size_t max_events = 100000;

  void validate() const {
    const bool positive = rel_tol > 0 && abs_tol > 0 && h_init > 0 && h_min > 0 && h_max > 0 && event_tol > 0;
    if (!positive || !(h_min <= h_init && h_init <= h_max) || max_events == 0) {
      throw Error(ErrorCode::invalid_argument, "integrator config needs positive values with h_min <= h_init <= h_max");
    }
  }
};

struct TraceSample {
  double t = 0.0;
  Vector x;
  std::string mode;
};

struct TraceEvent {
  double t = 0.0;
  std::string from;
  std::string to;
};

enum class Termination { horizon, left_region };

struct HybridTrace {
  std::vector<TraceSample> samples;
  std::vector<TraceEvent> events;
  Termination termination = Termination::horizon;

  std::vector<std::string> mode_sequence() const {
    std::vector<std::string> seq;
    for (const auto& s : samples) {
      if (seq.empty() || seq.back() != s.mode) seq.push_back(s.mode);
    }
    return seq;
  }
};

inline Vector eval_derivative(const Mode& m, const Vector& x) {
  if (!m.dynamics.well_formed() || static_cast<Eigen::Index>(m.dynamics.dim()) != x.size()) {
    throw Error(ErrorCode::dimension_mismatch, "state length does not match dynamics of mode '" + m.id + "'");
  }
  return m.dynamics(x);
}

struct StepResult {
  Vector x;
  double t = 0.0;
  double h_used = 0.0;
  double h_next = 0.0;
  double err = 0.0;
};

namespace detail {

struct RawStep {
  Vector x;
  Vector err;
};

// One Dormand-Prince 5(4) step without error control.
template <class F>
RawStep dopri_step(F&& f, const Vector& x, double t, double h) {
  const Vector k1 = f(t, x);
  const Vector k2 = f(t + h / 5.0, x + h * (k1 / 5.0));
  const Vector k3 = f(t + 3.0 * h / 10.0, x + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
  const Vector k4 = f(t + 4.0 * h / 5.0, x + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
  const Vector k5 = f(t + 8.0 * h / 9.0,
                      x + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
  const Vector k6 = f(t + h, x + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3 +
                                      49.0 / 176.0 * k4 - 5103.0 / 18656.0 * k5));
  const Vector x5 =
      x + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
  const Vector k7 = f(t + h, x5);
  // Difference between the 5th- and 4th-order weights.
  const Vector e = h * ((35.0 / 384.0 - 5179.0 / 57600.0) * k1 + (500.0 / 1113.0 - 7571.0 / 16695.0) * k3 +
                        (125.0 / 192.0 - 393.0 / 640.0) * k4 + (-2187.0 / 6784.0 + 92097.0 / 339200.0) * k5 +
                        (11.0 / 84.0 - 187.0 / 2100.0) * k6 - 1.0 / 40.0 * k7);
  return {x5, e};
}

}  // namespace detail

/// One accepted step of the embedded 4(5) pair. Rejected attempts shrink h
/// and retry; failing at h_min raises Error(stiffness).
/// A final step clipped below h_min (to land on a horizon) is taken as is.
template <class F>
StepResult rk45_adaptive_step(F&& f, const Vector& x, double t, double h, const IntegratorConfig& cfg) {
  if (!(h > 0.0) || h > cfg.h_max * (1.0 + 1e-12)) {
    throw Error(ErrorCode::invalid_argument, "step size outside (0, h_max]");
  }
  while (true) {
    const detail::RawStep raw = detail::dopri_step(f, x, t, h);
    const double err = raw.err.lpNorm<Eigen::Infinity>();
    const double scale = std::max(x.lpNorm<Eigen::Infinity>(), raw.x.lpNorm<Eigen::Infinity>());
    const double tol = cfg.rel_tol * scale + cfg.abs_tol;
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(tol / err, 0.2), 0.2, 5.0);
    if (err <= tol && raw.x.allFinite()) {
      return {raw.x, t + h, h, std::clamp(h * factor, cfg.h_min, cfg.h_max), err};
    }
    if (h <= cfg.h_min) {
      throw Error(ErrorCode::stiffness, "step rejected at minimum step size (t = " + std::to_string(t) + ")");
    }
    h = std::max(cfg.h_min, h * std::min(factor, 0.5));
  }
}

enum class ExitKind { guard_hit, horizon, invariant_exit_unmatched, left_region };

struct ModeRun {
  std::vector<TraceSample> samples;  // all labeled with the running mode
  ExitKind exit = ExitKind::horizon;
  std::optional<std::size_t> transition;
  double t_end = 0.0;
  Vector x_end;
};

namespace detail {

// (offset - normal.x)/|normal| for every facet; >= 0 inside.
inline double min_slack(const Polytope& p, const Vector& x) {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& c : p.constraints()) {
    const double n = c.normal.norm();
    if (n == 0.0) continue;
    s = std::min(s, (c.offset - c.normal.dot(x)) / n);
  }
  return s;
}

inline double state_tol(const Vector& x) { return 1e-6 * (1.0 + x.lpNorm<Eigen::Infinity>()); }

}  // namespace detail

/// Integrates mode `mode` from (t0, x0) until an invariant facet or an
/// analysis-region facet is crossed, or t_max is reached.
inline ModeRun simulate_until_event(const PIHA& h, std::size_t mode, const Vector& x0, double t0, double t_max,
                                    const IntegratorConfig& cfg) {
  cfg.validate();
  if (mode >= h.modes.size()) throw Error(ErrorCode::invalid_argument, "mode index out of range");
  const Mode& m = h.modes[mode];
  if (static_cast<std::size_t>(x0.size()) != h.dim) throw Error(ErrorCode::dimension_mismatch, "initial state dimension");
  if (!contains_point(m.invariant, x0, detail::state_tol(x0))) {
    throw Error(ErrorCode::precondition, "initial state is outside the invariant of mode '" + m.id + "'");
  }

  auto f = [&m](double, const Vector& x) -> Vector { return m.dynamics(x); };
  auto slack = [&](const Vector& x) {
    return std::min(detail::min_slack(m.invariant, x), detail::min_slack(h.analysis_region, x));
  };

  ModeRun run;
  run.samples.push_back({t0, x0, m.id});
  double t = t0;
  Vector x = x0;
  double step = cfg.h_init;

  while (true) {
    const double remaining = t_max - t;
    if (remaining <= 0.0) {
      run.exit = ExitKind::horizon;
      run.t_end = t;
      run.x_end = x;
      return run;
    }
    StepResult s;
    if (remaining < cfg.h_min) {
      const auto raw = detail::dopri_step(f, x, t, remaining);
      s = {raw.x, t_max, remaining, step, raw.err.lpNorm<Eigen::Infinity>()};
    } else {
      s = rk45_adaptive_step(f, x, t, std::min(step, remaining), cfg);
      if (remaining - s.h_used < 1e-3 * cfg.h_min) s.t = t_max;
    }

    if (slack(s.x) >= 0.0) {
      t = s.t;
      x = s.x;
      step = s.h_next;
      run.samples.push_back({t, x, m.id});
      continue;
    }

    // Crossing inside this step: bisect on the step length from (t, x).
    double lo = 0.0;
    double hi = s.h_used;
    while (hi - lo > cfg.event_tol) {
      const double mid = 0.5 * (lo + hi);
      if (slack(detail::dopri_step(f, x, t, mid).x) < 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    const Vector x_hit = hi == s.h_used ? s.x : detail::dopri_step(f, x, t, hi).x;
    if (lo > 0.0 && t + lo > t) {
      run.samples.push_back({t + lo, detail::dopri_step(f, x, t, lo).x, m.id});
    }
    run.t_end = hi == s.h_used ? s.t : t + hi;
    run.x_end = x_hit;

    if (detail::min_slack(h.analysis_region, x_hit) < 0.0) {
      run.exit = ExitKind::left_region;
      run.samples.push_back({run.t_end, x_hit, m.id});
      return run;
    }
    const double tol = detail::state_tol(x_hit);
    for (std::size_t i = 0; i < h.transitions.size(); ++i) {
      const auto& tr = h.transitions[i];
      if (tr.source != m.id) continue;
      if (!contains_point(tr.guard, x_hit, tol)) continue;
      if (!contains_point(h.mode(tr.target).invariant, x_hit, tol)) continue;
      run.exit = ExitKind::guard_hit;
      run.transition = i;
      return run;
    }
    run.exit = ExitKind::invariant_exit_unmatched;
    return run;
  }
}

/// Chains mode runs from x0 (which must lie in the ICS) up to time T.
inline HybridTrace simulate_hybrid(const PIHA& h, const Vector& x0, double T, const IntegratorConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != h.dim) throw Error(ErrorCode::dimension_mismatch, "initial state dimension");
  if (!contains_point(h.ics, x0, 1e-9)) throw Error(ErrorCode::precondition, "initial state is not in the initial continuous set");
  if (T < 0.0 || T > h.horizon * (1.0 + 1e-12)) throw Error(ErrorCode::precondition, "T must lie in [0, horizon]");

  HybridTrace trace;
  std::size_t mode = select_mode(h, x0);
  trace.samples.push_back({0.0, x0, h.modes[mode].id});
  double t = 0.0;
  Vector x = x0;
  std::size_t zero_duration = 0;

  while (true) {
    const auto run = simulate_until_event(h, mode, x, t, T, cfg);
    for (std::size_t i = 1; i < run.samples.size(); ++i) trace.samples.push_back(run.samples[i]);

    switch (run.exit) {
      case ExitKind::horizon:
        return trace;
      case ExitKind::left_region:
        trace.termination = Termination::left_region;
        return trace;
      case ExitKind::invariant_exit_unmatched:
        throw Error(ErrorCode::invariant_exit_unmatched,
                    "trajectory left the invariant of mode '" + h.modes[mode].id + "' where no guard matches (t = " +
                        std::to_string(run.t_end) + ")");
      case ExitKind::guard_hit:
        break;
    }

    const auto& tr = h.transitions[*run.transition];
    if (run.t_end - t <= cfg.event_tol) {
      if (++zero_duration >= 2) {
        throw Error(ErrorCode::zeno_suspected, "two consecutive zero-duration mode switches at t = " + std::to_string(t));
      }
    } else {
      zero_duration = 0;
    }
    trace.events.push_back({run.t_end, tr.source, tr.target});
    if (trace.events.size() > cfg.max_events) {
      throw Error(ErrorCode::zeno_suspected, "more than " + std::to_string(cfg.max_events) + " mode switches");
    }
    if (run.t_end > trace.samples.back().t) {
      trace.samples.push_back({run.t_end, run.x_end, tr.target});
    } else {
      trace.samples.back() = {trace.samples.back().t, run.x_end, tr.target};
    }
    mode = h.mode_index(tr.target);
    t = trace.samples.back().t;
    x = run.x_end;
  }
}

struct TraceRow {
  double t = 0.0;
  Vector x;
};

/// Labels externally produced samples with modes and places an event at the
/// linearly interpolated guard crossing between every pair of differently
/// labeled neighbours.
inline HybridTrace ingest_external_trace(const PIHA& h, std::span<const TraceRow> rows) {
  HybridTrace trace;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (static_cast<std::size_t>(r.x.size()) != h.dim) {
      throw Error(ErrorCode::dimension_drift, "row " + std::to_string(i) + " has " + std::to_string(r.x.size()) +
                                                  " state entries, expected " + std::to_string(h.dim));
    }
    if (i > 0 && !(r.t > rows[i - 1].t)) {
      throw Error(ErrorCode::non_monotone_time, "time does not increase at row " + std::to_string(i));
    }
    trace.samples.push_back({r.t, r.x, h.modes[select_mode(h, r.x)].id});
  }

  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const auto& a = trace.samples[i - 1];
    const auto& b = trace.samples[i];
    if (a.mode == b.mode) continue;
    double t_event = b.t;
    for (const auto& c : h.mode(a.mode).invariant.constraints()) {
      const double ga = c.offset - c.normal.dot(a.x);
      const double gb = c.offset - c.normal.dot(b.x);
      if (ga >= 0.0 && gb < 0.0) {
        t_event = std::min(t_event, a.t + (b.t - a.t) * ga / (ga - gb));
      }
    }
    if (!(t_event > a.t)) t_event = std::nextafter(a.t, b.t);
    trace.events.push_back({t_event, a.mode, b.mode});
  }
  for (const auto& s : trace.samples) {
    if (!contains_point(h.analysis_region, s.x, 1e-9)) {
      trace.termination = Termination::left_region;
      break;
    }
  }
  return trace;
}

}  // namespace piha
