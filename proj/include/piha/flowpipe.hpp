#pragma once

// Reachable-set over-approximation. Each mode's flow-pipe is a chain of
// overlapping template polyhedra, one per time window; crossings into other
// modes are collected into entry sets and processed from a worklist.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "piha/error.hpp"
#include "piha/geometry.hpp"
#include "piha/model.hpp"
#include "piha/sim.hpp"

namespace piha {

/// Region reachable in `mode` at some time inside [t_lo, t_hi].
struct FlowpipeSegment {
  std::string mode;
  double t_lo = 0.0;
  double t_hi = 0.0;
  Polytope region;
};

struct ReachConfig {
  double dt = 1e-4;                 // window width (seconds)
  std::size_t max_segments = 50000;
  double bloat_factor = 2.0;
  std::vector<Vector> directions;   // empty: octagonal template
  std::size_t substeps = 10;        // recorded states per window and trajectory
  bool subsumption = true;
  // Containment slack for subsumption, as a fraction of the widest side of
  // the analysis region's bounding box.
  double subsumption_tol = 1e-4;
  // Consecutive guard pieces merged into one entry. Long runs merged as a
  // single hull lose the phase/amplitude correlation of oscillating states.
  std::size_t guard_chunk = 4;
  IntegratorConfig integrator{1e-10, 1e-12, 1e-7, 1e-14, 1e-4, 1e-9, 100000};

  void validate() const {
    if (!(dt > 0.0) || max_segments == 0 || !(bloat_factor >= 1.0) || substeps == 0 || guard_chunk == 0 || !(subsumption_tol >= 0.0)) {
      throw Error(ErrorCode::invalid_argument,
                  "reach config needs dt > 0, max_segments > 0, bloat_factor >= 1, substeps > 0, guard_chunk > 0, subsumption_tol >= 0");
    }
    integrator.validate();
  }

  std::vector<Vector> template_for(std::size_t dim) const {
    return directions.empty() ? octagonal_template(dim) : directions;
  }
};

namespace detail {

inline double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

struct Track {
  Vector x;
  double step = 0.0;
  double err_sum = 0.0;
};

}  // namespace detail

/// Segments of the flow-pipe of mode `m` from the entry set P0 whose entry
/// time is only known to lie in [t0_lo, t0_hi]. Segment k covers flow
/// durations [k dt, (k+1) dt], so its time window is
/// [t0_lo + k dt, t0_hi + (k+1) dt], clipped at the horizon.
///
/// Window k's region is the template hull of every recorded state of every
/// sample trajectory (vertices of P0 plus its center) over the window,
/// padded by bloat_factor * (accumulated integrator error + the chord
/// deviation bound gap^2 * |A| * max|Ax + b| / 2), and clipped to the
/// equally padded invariant. The pipe ends when that clipped region is
/// empty or at the horizon; needing more than max_segments windows throws
/// Error(budget_exhausted).
inline std::vector<FlowpipeSegment> flowpipe_mode_segments(const Mode& m, const Polytope& P0, double t0_lo, double t0_hi,
                                                          const ReachConfig& cfg, const PIHA& h) {
  cfg.validate();
  if (P0.dim() != h.dim) throw Error(ErrorCode::dimension_mismatch, "entry set dimension");
  if (t0_hi < t0_lo) throw Error(ErrorCode::invalid_argument, "entry window is reversed");
  const auto samples = sample_points(P0, SampleStrategy::vertices_plus_center());
  if (!m.invariant.is_universe() && !is_subset(P0, bloat(m.invariant, 1e-6), 1e-9)) {
    throw Error(ErrorCode::precondition, "entry set is not inside the invariant of mode '" + m.id + "'");
  }

  const auto dirs = cfg.template_for(h.dim);
  const double norm_a = detail::spectral_norm(m.dynamics.A);
  auto f = [&m](double, const Vector& x) -> Vector { return m.dynamics(x); };
  const double sub = cfg.dt / static_cast<double>(cfg.substeps);
  const auto& icfg = cfg.integrator;

  std::vector<detail::Track> tracks;
  for (const auto& s : samples) tracks.push_back({s, std::min(icfg.h_init, sub), 0.0});

  std::vector<FlowpipeSegment> out;
  std::vector<Vector> points;
  for (std::size_t k = 0;; ++k) {
    const double t_lo = t0_lo + static_cast<double>(k) * cfg.dt;
    // A window starting at the horizon adds nothing past the previous one.
    if (t_lo > h.horizon || (k > 0 && t_lo >= h.horizon)) break;

    points.clear();
    double gap = 0.0;
    for (const auto& tr : tracks) points.push_back(tr.x);
    for (std::size_t j = 0; j < cfg.substeps; ++j) {
      for (auto& tr : tracks) {
        double remaining = sub;
        while (remaining > 0.0) {
          StepResult s;
          if (remaining < icfg.h_min) {
            const auto raw = detail::dopri_step(f, tr.x, 0.0, remaining);
            s = {raw.x, remaining, remaining, tr.step, raw.err.lpNorm<Eigen::Infinity>()};
          } else {
            s = rk45_adaptive_step(f, tr.x, 0.0, std::min({tr.step, remaining, icfg.h_max}), icfg);
            tr.step = s.h_next;
          }
          remaining -= s.h_used;
          if (remaining < 1e-3 * icfg.h_min) remaining = 0.0;
          tr.x = s.x;
          tr.err_sum += s.err;
          gap = std::max(gap, s.h_used);
          points.push_back(tr.x);
        }
      }
    }

    double err_max = 0.0;
    for (const auto& tr : tracks) err_max = std::max(err_max, tr.err_sum);
    double rate_max = 0.0;
    for (const auto& p : points) rate_max = std::max(rate_max, m.dynamics(p).norm());
    const double eps = cfg.bloat_factor * (err_max + gap * gap * norm_a * rate_max / 2.0);

    Polytope region = intersect(bloat(template_hull(points, dirs), eps), bloat(m.invariant, eps));
    if (is_empty(region).empty) break;
    if (out.size() == cfg.max_segments) {
      throw Error(ErrorCode::budget_exhausted, "mode '" + m.id + "' needs more than " + std::to_string(cfg.max_segments) +
                                                   " flow-pipe segments");
    }
    const double t_hi = std::min(t0_hi + static_cast<double>(k + 1) * cfg.dt, std::max(h.horizon, t_lo));
    out.push_back({m.id, t_lo, t_hi, std::move(region)});
  }
  return out;
}

inline std::vector<FlowpipeSegment> flowpipe_mode_segments(const Mode& m, const Polytope& P0, double t0,
                                                          const ReachConfig& cfg, const PIHA& h) {
  return flowpipe_mode_segments(m, P0, t0, t0, cfg, h);
}

/// Called for every new segment; returning true stops the computation.
using SegmentHook = std::function<bool(const FlowpipeSegment&)>;

struct ReachOutcome {
  std::vector<FlowpipeSegment> segments;
  std::size_t entries_processed = 0;
  std::size_t entries_subsumed = 0;
  bool stopped_by_hook = false;
};

namespace detail {

struct Entry {
  std::size_t mode = 0;
  Polytope region;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

// Worklist node. `children` holds (node, index of the last segment of the
// guard run that produced it) so a later t_hi can be pushed downstream.
struct Node {
  Entry entry;
  bool processed = false;
  std::size_t seg_begin = 0;
  std::size_t seg_end = 0;
  std::vector<std::pair<std::size_t, std::size_t>> children;
};

inline bool subsumes(const Entry& big, const Entry& small, double tol) {
  if (big.mode != small.mode) return false;
  if (small.t_lo < big.t_lo - 1e-12) return false;
  return is_subset(small.region, big.region, tol);
}

// Template hull of a run of guard pieces, cut back to the guard and the
// target invariant.
inline Polytope merge_pieces(const std::vector<Polytope>& pieces, const std::vector<Vector>& dirs, const Polytope& guard,
                             const Polytope& target_inv) {
  const auto dim = pieces.front().dim();
  std::vector<Halfspace> hs;
  for (const auto& d : dirs) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) {
      const auto s = support(p, d);
      if (!s) throw Error(ErrorCode::unbounded_polytope, "guard piece is unbounded");
      best = std::max(best, *s);
    }
    hs.push_back({d, best});
  }
  return intersect(intersect(Polytope(dim, std::move(hs)), guard), target_inv);
}

// A trajectory can leave the invariant through facet n.x <= c only where
// n.(Ax + b) >= 0. When the piece lies on exactly one invariant facet that
// condition is a halfspace and is added; otherwise the piece is unchanged.
inline Polytope restrict_to_exit(const Polytope& piece, const Mode& m) {
  const Halfspace* facet = nullptr;
  for (const auto& c : m.invariant.constraints()) {
    const double n = c.normal.norm();
    if (n == 0.0) continue;
    const auto low = support(piece, -c.normal);
    if (!low || -*low < c.offset - 1e-7 * n) continue;
    if (facet) return piece;
    facet = &c;
  }
  if (!facet) return piece;
  const Vector row = -(m.dynamics.A.transpose() * facet->normal);
  const double off = facet->normal.dot(m.dynamics.b);
  if (row.norm() == 0.0) return off >= 0.0 ? piece : piece.with(Halfspace{Vector::Unit(row.size(), 0), -1e300});
  return piece.with(Halfspace{row, off});
}

}  // namespace detail

/// Worklist reachability over all modes, starting from ics intersected with
/// each mode invariant at time 0. Throws Error(budget_exhausted) when the
/// total number of segments exceeds cfg.max_segments.
///
/// An entry is dropped when an earlier entry of the same mode starts no
/// later and contains it up to the subsumption slack. If the dropped entry
/// could arrive later than the kept one, the kept entry's window, its
/// segments and everything downstream are widened instead.
inline ReachOutcome compute_reach(const PIHA& h, const SegmentHook& hook, const ReachConfig& cfg) {
  cfg.validate();
  const auto dirs = cfg.template_for(h.dim);
  const auto box = bounding_box(h.analysis_region);
  const double tol = std::max(lp_tolerance, cfg.subsumption_tol * (box.hi - box.lo).maxCoeff());
  ReachOutcome out;
  std::vector<detail::Node> nodes;
  std::deque<std::size_t> work;

  auto widen = [&](std::size_t first, double t_hi) {
    std::vector<std::pair<std::size_t, double>> stack{{first, t_hi}};
    while (!stack.empty()) {
      auto [id, hi] = stack.back();
      stack.pop_back();
      hi = std::min(hi, h.horizon);
      auto& n = nodes[id];
      if (hi <= n.entry.t_hi + 1e-12) continue;
      n.entry.t_hi = hi;
      if (!n.processed) continue;
      for (std::size_t k = n.seg_begin; k < n.seg_end; ++k) {
        auto& seg = out.segments[k];
        seg.t_hi = std::max(seg.t_hi, std::min(hi + static_cast<double>(k - n.seg_begin + 1) * cfg.dt, h.horizon));
      }
      for (const auto& [child, last] : n.children) {
        stack.push_back({child, hi + static_cast<double>(last + 1) * cfg.dt});
      }
    }
  };

  // Returns the node that now accounts for `e`.
  auto enqueue = [&](detail::Entry e) -> std::optional<std::size_t> {
    if (e.t_lo > h.horizon) return std::nullopt;
    if (cfg.subsumption) {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!detail::subsumes(nodes[i].entry, e, tol)) continue;
        ++out.entries_subsumed;
        widen(i, e.t_hi);
        return i;
      }
    }
    nodes.push_back({std::move(e)});
    work.push_back(nodes.size() - 1);
    return nodes.size() - 1;
  };

  for (std::size_t i = 0; i < h.modes.size(); ++i) {
    Polytope start = intersect(h.ics, h.modes[i].invariant);
    if (!is_empty(start).empty) enqueue({i, std::move(start), 0.0, 0.0});
  }

  while (!work.empty()) {
    const std::size_t id = work.front();
    work.pop_front();
    const detail::Entry e = nodes[id].entry;
    const Mode& mode = h.modes[e.mode];
    auto segs = flowpipe_mode_segments(mode, e.region, e.t_lo, e.t_hi, cfg, h);
    ++out.entries_processed;
    if (out.segments.size() + segs.size() > cfg.max_segments) {
      throw Error(ErrorCode::budget_exhausted, "more than " + std::to_string(cfg.max_segments) + " flow-pipe segments");
    }

    std::vector<std::pair<detail::Entry, std::size_t>> children;
    for (const auto& tr : h.transitions) {
      if (tr.source != mode.id) continue;
      const std::size_t target = h.mode_index(tr.target);
      const Polytope& target_inv = h.modes[target].invariant;
      std::vector<Polytope> run;
      std::size_t run_first = 0;
      std::size_t run_last = 0;
      auto flush = [&] {
        if (run.empty()) return;
        children.push_back({{target, detail::merge_pieces(run, dirs, tr.guard, target_inv), segs[run_first].t_lo,
                             segs[run_last].t_hi},
                            run_last});
        run.clear();
      };
      for (std::size_t k = 0; k < segs.size(); ++k) {
        Polytope piece = intersect(intersect(segs[k].region, tr.guard), target_inv);
        if (!is_empty(piece).empty) piece = detail::restrict_to_exit(piece, mode);
        if (is_empty(piece).empty) {
          flush();
          continue;
        }
        if (run.empty()) run_first = k;
        run_last = k;
        run.push_back(std::move(piece));
        if (run.size() == cfg.guard_chunk) flush();
      }
      flush();
    }

    nodes[id].processed = true;
    nodes[id].seg_begin = out.segments.size();
    nodes[id].seg_end = out.segments.size() + segs.size();
    bool stop = false;
    for (auto& s : segs) {
      if (!stop && hook && hook(s)) stop = true;
      out.segments.push_back(std::move(s));
    }
    if (stop) {
      out.stopped_by_hook = true;
      return out;
    }
    // Enqueueing a child can widen this node through a cycle before the
    // child is linked, so each link re-applies the current window.
    for (auto& [child, last] : children) {
      if (const auto c = enqueue(std::move(child))) {
        nodes[id].children.push_back({*c, last});
        widen(*c, nodes[id].entry.t_hi + static_cast<double>(last + 1) * cfg.dt);
      }
    }
  }
  return out;
}

inline std::vector<FlowpipeSegment> reach_sets(const PIHA& h, const SegmentHook& hook, const ReachConfig& cfg) {
  return compute_reach(h, hook, cfg).segments;
}

/// True when some segment whose time window contains t contains x.
inline bool covered_by(std::span<const FlowpipeSegment> segs, double t, const Vector& x, double tol = 1e-9) {
  return std::any_of(segs.begin(), segs.end(), [&](const FlowpipeSegment& s) {
    return t >= s.t_lo - 1e-12 && t <= s.t_hi + 1e-12 && contains_point(s.region, x, tol);
  });
}

}  // namespace piha
