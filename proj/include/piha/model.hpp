#pragma once

// Polyhedral-invariant hybrid automata: modes with affine dynamics and
// polyhedral invariants, guarded transitions without resets, an initial
// continuous set, an analysis region and AG-safety specifications.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "piha/error.hpp"
#include "piha/geometry.hpp"

namespace piha {

/// dx/dt = A x + b
struct AffineDynamics {
  Matrix A;
  Vector b;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(b.size()); }

  bool well_formed() const noexcept {
    return A.rows() == A.cols() && A.rows() == b.size();
  }

  Vector operator()(const Vector& x) const { return A * x + b; }
};

struct Mode {
  std::string id;
  AffineDynamics dynamics;
  Polytope invariant;
};

/// Reset is the identity map; there is no field for it.
struct Transition {
  std::string source;
  std::string target;
  Polytope guard;
};

struct PIHA {
  std::size_t dim = 0;
  std::vector<Mode> modes;
  std::vector<Transition> transitions;
  Polytope ics;
  Polytope analysis_region;
  double horizon = 0.0;

  std::optional<std::size_t> find_mode(const std::string& id) const {
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if (modes[i].id == id) return i;
    }
    return std::nullopt;
  }

  std::size_t mode_index(const std::string& id) const {
    if (auto i = find_mode(id)) return *i;
    throw Error(ErrorCode::invalid_argument, "unknown mode '" + id + "'");
  }

  const Mode& mode(const std::string& id) const { return modes[mode_index(id)]; }
};

struct AvoidRegion {
  std::optional<std::string> mode;  // nullopt: any mode
  Polytope region;
};

/// Conjunction of AG !avoid_i, plus the implicit AG !out_of_bound where
/// out_of_bound is the complement of the analysis region.
struct SafetySpec {
  std::string name;
  std::vector<AvoidRegion> avoid;
};

struct Diagnostic {
  std::string rule;
  std::string element;
  std::string message;
};

namespace detail {

inline void push(std::vector<Diagnostic>& out, std::string rule, std::string element, std::string message) {
  out.push_back({std::move(rule), std::move(element), std::move(message)});
}

}  // namespace detail

/// Checks every structural rule of a PIHA. Empty result means well-formed.
inline std::vector<Diagnostic> validate_piha(const PIHA& h) {
  std::vector<Diagnostic> out;
  if (h.dim == 0) detail::push(out, "dimension", "piha", "dimension must be positive");
  if (h.modes.empty()) detail::push(out, "no-modes", "piha", "automaton has no modes");
  if (!(h.horizon > 0.0) || !std::isfinite(h.horizon)) {
    detail::push(out, "horizon", "piha", "horizon must be positive and finite");
  }

  std::unordered_set<std::string> ids;
  bool dims_ok = true;
  for (const auto& m : h.modes) {
    if (!ids.insert(m.id).second) detail::push(out, "duplicate-mode", m.id, "mode id declared more than once");
    if (!m.dynamics.well_formed() || m.dynamics.dim() != h.dim) {
      detail::push(out, "dimension-mismatch", m.id, "dynamics must be " + std::to_string(h.dim) + "x" + std::to_string(h.dim));
      dims_ok = false;
    }
    if (m.invariant.dim() != h.dim) {
      detail::push(out, "dimension-mismatch", m.id, "invariant dimension differs from automaton dimension");
      dims_ok = false;
    }
  }

  for (std::size_t i = 0; i < h.transitions.size(); ++i) {
    const auto& t = h.transitions[i];
    const std::string name = t.source + "->" + t.target;
    if (!h.find_mode(t.source)) detail::push(out, "unresolved-source", name, "unknown source mode '" + t.source + "'");
    if (!h.find_mode(t.target)) detail::push(out, "unresolved-target", name, "unknown target mode '" + t.target + "'");
    if (t.source == t.target) detail::push(out, "self-loop", name, "source and target coincide");
    if (t.guard.dim() != h.dim) {
      detail::push(out, "dimension-mismatch", name, "guard dimension differs from automaton dimension");
      dims_ok = false;
    }
  }

  if (h.ics.dim() != h.dim || h.analysis_region.dim() != h.dim) {
    detail::push(out, "dimension-mismatch", "ics/AR", "initial set or analysis region has the wrong dimension");
    return out;
  }

  if (is_empty(h.ics).empty) {
    detail::push(out, "ics-empty", "ics", "initial continuous set is empty");
  } else {
    for (std::size_t i = 0; i < h.analysis_region.size(); ++i) {
      const auto& c = h.analysis_region.constraints()[i];
      const double n = c.normal.norm();
      if (n == 0.0) continue;
      // Points of the ICS strictly beyond this AR facet.
      const Polytope beyond = h.ics.with(Halfspace{-c.normal, -c.offset - lp_tolerance * n});
      if (!is_empty(beyond).empty) {
        detail::push(out, "ics-outside-AR", "ics", "initial set crosses analysis-region constraint " + std::to_string(i));
        break;
      }
    }
  }

  if (dims_ok && !h.modes.empty() && h.dim <= max_vertex_dim) {
    std::vector<Vector> probe;
    try {
      probe = sample_points(h.analysis_region, SampleStrategy::grid(h.dim <= 2 ? 21 : 7));
      const auto vs = vertices(h.analysis_region);
      probe.insert(probe.end(), vs.begin(), vs.end());
    } catch (const Error& e) {
      detail::push(out, "AR-unbounded", "analysis_region", e.what());
    }
    for (const auto& x : probe) {
      bool covered = false;
      for (const auto& m : h.modes) {
        if (contains_point(m.invariant, x, lp_tolerance)) {
          covered = true;
          break;
        }
      }
      if (!covered) {
        detail::push(out, "coverage-gap", "analysis_region", "a sampled AR point lies in no mode invariant");
        break;
      }
    }
  }
  return out;
}

inline std::vector<Diagnostic> validate_spec(const PIHA& h, const SafetySpec& spec) {
  std::vector<Diagnostic> out;
  for (const auto& a : spec.avoid) {
    if (a.region.dim() != h.dim) detail::push(out, "dimension-mismatch", spec.name, "avoid region dimension differs from automaton dimension");
    if (a.mode && !h.find_mode(*a.mode)) detail::push(out, "unresolved-mode", spec.name, "avoid region names unknown mode '" + *a.mode + "'");
  }
  return out;
}

/// Index of the first declared mode whose closed invariant contains x.
/// Boundary points therefore go to the lowest-index candidate.
inline std::size_t select_mode(const PIHA& h, const Vector& x) {
  for (std::size_t i = 0; i < h.modes.size(); ++i) {
    if (contains_point(h.modes[i].invariant, x, 0.0)) return i;
  }
  throw Error(ErrorCode::coverage_gap, "no mode invariant contains the state");
}

/// Transitions between modes whose invariants share exactly one facet
/// hyperplane with opposite orientation and meet inside `region`. The guard
/// is the intersection of the two invariants.
inline std::vector<Transition> derive_transitions(const std::vector<Mode>& modes, const Polytope& region) {
  auto opposite = [](const Halfspace& a, const Halfspace& b) {
    const double na = a.normal.norm();
    const double nb = b.normal.norm();
    if (na == 0.0 || nb == 0.0) return false;
    return (a.normal / na + b.normal / nb).norm() < 1e-9 && std::abs(a.offset / na + b.offset / nb) < 1e-9;
  };
  std::vector<Transition> out;
  for (const auto& src : modes) {
    for (const auto& tgt : modes) {
      if (&src == &tgt) continue;
      std::size_t shared = 0;
      for (const auto& a : src.invariant.constraints()) {
        for (const auto& b : tgt.invariant.constraints()) {
          if (opposite(a, b)) ++shared;
        }
      }
      if (shared != 1) continue;
      Polytope guard = intersect(src.invariant, tgt.invariant);
      if (is_empty(intersect(guard, region)).empty) continue;
      out.push_back({src.id, tgt.id, std::move(guard)});
    }
  }
  return out;
}

}  // namespace piha
