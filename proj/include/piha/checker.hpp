#pragma once

// Explore and verify phases: trace-level checking of AG-safety, flow-pipe
// checking, and refinement of the initial set when a flow-pipe violation
// cannot be confirmed by simulation.

#include <chrono>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "piha/error.hpp"
#include "piha/flowpipe.hpp"
#include "piha/geometry.hpp"
#include "piha/model.hpp"
#include "piha/sim.hpp"

namespace piha {

enum class Conjunct { avoid, out_of_bound };

constexpr std::string_view to_string(Conjunct c) { return c == Conjunct::avoid ? "avoid" : "out_of_bound"; }

struct Violation {
  double t = 0.0;
  Conjunct which = Conjunct::avoid;
  std::size_t sample = 0;
};

struct TraceVerdict {
  bool safe = true;
  std::optional<Violation> first_violation;
};

namespace detail {

inline bool in_avoid(const SafetySpec& spec, const std::string& mode, const Vector& x) {
  for (const auto& a : spec.avoid) {
    if (a.mode && *a.mode != mode) continue;
    if (contains_point(a.region, x, 0.0)) return true;
  }
  return false;
}

}  // namespace detail

inline TraceVerdict check_trace_safety(const HybridTrace& tr, const SafetySpec& spec, const PIHA& h) {
  for (const auto& a : spec.avoid) {
    if (a.region.dim() != h.dim) throw Error(ErrorCode::dimension_mismatch, "avoid region of '" + spec.name + "'");
  }
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    const auto& s = tr.samples[i];
    if (static_cast<std::size_t>(s.x.size()) != h.dim) throw Error(ErrorCode::dimension_mismatch, "trace sample dimension");
    if (detail::in_avoid(spec, s.mode, s.x)) return {false, Violation{s.t, Conjunct::avoid, i}};
    if (!contains_point(h.analysis_region, s.x, lp_tolerance)) return {false, Violation{s.t, Conjunct::out_of_bound, i}};
  }
  return {true, std::nullopt};
}

struct PointReport {
  Vector x0;
  std::optional<HybridTrace> trace;
  TraceVerdict verdict;
  std::optional<std::string> error;
};

struct ExploreResult {
  bool all_safe = true;
  std::vector<PointReport> reports;

  const PointReport* first_unsafe() const {
    for (const auto& r : reports) {
      if (r.trace && !r.verdict.safe) return &r;
    }
    return nullptr;
  }
};

/// Simulates from every vertex of the ICS plus its center and checks each
/// trace. A failed simulation is reported on its point only.
inline ExploreResult explore(const PIHA& h, const SafetySpec& spec, const IntegratorConfig& cfg) {
  ExploreResult out;
  for (auto& x0 : sample_points(h.ics, SampleStrategy::vertices_plus_center())) {
    PointReport rep;
    rep.x0 = x0;
    try {
      auto tr = simulate_hybrid(h, x0, h.horizon, cfg);
      rep.verdict = check_trace_safety(tr, spec, h);
      rep.trace = std::move(tr);
    } catch (const Error& e) {
      rep.error = e.what();
      rep.verdict.safe = false;
    }
    if (!rep.verdict.safe) out.all_safe = false;
    out.reports.push_back(std::move(rep));
  }
  return out;
}

enum class SplitRule { widest_axis, round_robin };

struct RefineConfig {
  std::size_t max_depth = 6;
  SplitRule rule = SplitRule::widest_axis;
};

/// Bisects the bounding box of P along one axis. `depth` selects the axis
/// for round_robin (skipping zero-width axes).
inline std::pair<Polytope, Polytope> refine_ics(const Polytope& P, SplitRule rule, std::size_t depth = 0) {
  const auto box = bounding_box(P);
  const Vector width = box.hi - box.lo;
  const auto d = width.size();
  const double flat = 1e-12 * (1.0 + std::max(box.lo.cwiseAbs().maxCoeff(), box.hi.cwiseAbs().maxCoeff()));
  Eigen::Index axis = -1;
  if (rule == SplitRule::widest_axis) {
    Eigen::Index best = 0;
    width.maxCoeff(&best);
    if (width(best) > flat) axis = best;
  } else {
    for (Eigen::Index k = 0; k < d; ++k) {
      const Eigen::Index cand = (static_cast<Eigen::Index>(depth) + k) % d;
      if (width(cand) > flat) {
        axis = cand;
        break;
      }
    }
  }
  if (axis < 0) throw Error(ErrorCode::unsplittable, "polytope has zero width on every axis");

  const double mid = 0.5 * (box.lo(axis) + box.hi(axis));
  Vector e = Vector::Zero(d);
  e(axis) = 1.0;
  return {P.with(Halfspace{e, mid}), P.with(Halfspace{-e, -mid})};
}

enum class Verdict { pass, fail, inconclusive };

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "Pass";
    case Verdict::fail: return "Fail";
    case Verdict::inconclusive: return "Inconclusive";
  }
  return "";
}

struct VerificationResult {
  std::string spec_name;
  Verdict verdict = Verdict::inconclusive;
  std::optional<HybridTrace> counterexample;
  std::size_t iterations = 0;
  std::size_t segments_total = 0;
  std::size_t partitions_processed = 0;
  std::size_t avoid_intersections = 0;
  double wall_time = 0.0;
};

struct SegmentCheck {
  bool hits_avoid = false;
  bool leaves_region = false;
  bool violates() const { return hits_avoid || leaves_region; }
};

inline SegmentCheck check_segment(const FlowpipeSegment& seg, const SafetySpec& spec, const PIHA& h) {
  SegmentCheck c;
  for (const auto& a : spec.avoid) {
    if (a.mode && *a.mode != seg.mode) continue;
    if (!is_empty(intersect(seg.region, a.region)).empty) {
      c.hits_avoid = true;
      break;
    }
  }
  for (const auto& f : h.analysis_region.constraints()) {
    const auto s = support(seg.region, f.normal);
    if (!s || *s > f.offset + lp_tolerance * f.normal.norm()) {
      c.leaves_region = true;
      break;
    }
  }
  return c;
}

/// Flow-pipe verification of `spec` with ICS refinement.
///
/// Each partition (initially the whole ICS) is flow-piped. A partition whose
/// segments never meet an avoid region nor leave the analysis region passes.
/// Otherwise explore runs on the partition: a concrete violating trace gives
/// Fail, else the partition is split and its halves are queued, up to
/// max_depth. Unresolved leaves make the result Inconclusive.
inline VerificationResult verify_safety(const PIHA& h, const SafetySpec& spec, const ReachConfig& reach_cfg,
                                        const RefineConfig& refine_cfg) {
  const auto start = std::chrono::steady_clock::now();
  VerificationResult res;
  res.spec_name = spec.name;
  auto finish = [&](Verdict v) {
    res.verdict = v;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
  };

  struct Partition {
    Polytope region;
    std::size_t depth = 0;
  };
  std::deque<Partition> work{{h.ics, 0}};
  bool unresolved = false;

  while (!work.empty()) {
    Partition part = std::move(work.front());
    work.pop_front();
    ++res.partitions_processed;

    PIHA sub = h;
    sub.ics = part.region;

    bool violation = false;
    try {
      ++res.iterations;
      std::size_t hits = 0;
      const auto outcome = compute_reach(
          sub,
          [&](const FlowpipeSegment& s) {
            const auto c = check_segment(s, spec, sub);
            if (c.hits_avoid) ++hits;
            return c.violates();
          },
          reach_cfg);
      res.segments_total += outcome.segments.size();
      res.avoid_intersections += hits;
      violation = outcome.stopped_by_hook;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::budget_exhausted) throw;
      violation = true;
    }
    if (!violation) continue;

    const auto ex = explore(sub, spec, reach_cfg.integrator);
    if (const auto* bad = ex.first_unsafe()) {
      res.counterexample = bad->trace;
      return finish(Verdict::fail);
    }

    if (part.depth < refine_cfg.max_depth) {
      try {
        auto [a, b] = refine_ics(part.region, refine_cfg.rule, part.depth);
        work.push_back({std::move(a), part.depth + 1});
        work.push_back({std::move(b), part.depth + 1});
        continue;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::unsplittable) throw;
      }
    }
    unresolved = true;
  }
  return finish(unresolved ? Verdict::inconclusive : Verdict::pass);
}

}  // namespace piha
