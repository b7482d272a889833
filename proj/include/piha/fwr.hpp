#pragma once

// Full-wave rectifier: two ideal diodes (forward resistance Rf, reverse
// leakage I0) feeding an RC load from a sinusoidal source.
//
// State is (x1, x2, vout). The source vin = A sin(2 pi f t) is generated by
// the harmonic pair x1' = w x2, x2' = -w x1 started at (0, A), so every mode
// is affine and the diode voltages
//   v1 = x1 - vout,  v2 = -x1 - vout
// are linear in the state.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include "piha/error.hpp"
#include "piha/geometry.hpp"
#include "piha/model.hpp"

namespace piha::fwr {

struct CircuitParams {
  double R = 1e3;     // load resistance, ohm
  double C = 100e-6;  // load capacitance, F
  double Rf = 10.0;   // diode forward resistance, ohm
  double I0 = 1e-6;   // diode reverse current, A
  double A = 5.0;     // source amplitude, V
  double f = 50.0;    // source frequency, Hz

  void validate() const {
    for (double v : {R, C, Rf, I0, A, f}) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "circuit parameters must be positive and finite");
    }
  }

  double omega() const { return 2.0 * std::numbers::pi * f; }
  double period() const { return 1.0 / f; }
};

/// Declaration order matters: it is the tie-break order on shared boundaries.
enum class DiodeMode { OnOn, OnOff, OffOn, OffOff };

inline constexpr std::array<DiodeMode, 4> all_modes{DiodeMode::OnOn, DiodeMode::OnOff, DiodeMode::OffOn, DiodeMode::OffOff};

constexpr std::string_view name(DiodeMode m) {
  switch (m) {
    case DiodeMode::OnOn: return "OnOn";
    case DiodeMode::OnOff: return "OnOff";
    case DiodeMode::OffOn: return "OffOn";
    case DiodeMode::OffOff: return "OffOff";
  }
  return "";
}

inline constexpr std::size_t state_dim = 3;
inline constexpr Eigen::Index ix_vin = 0;
inline constexpr Eigen::Index ix_quad = 1;
inline constexpr Eigen::Index ix_vout = 2;

inline double v1_of(const Vector& x) { return x(ix_vin) - x(ix_vout); }
inline double v2_of(const Vector& x) { return -x(ix_vin) - x(ix_vout); }

/// Boundary values go to the >= side.
constexpr DiodeMode fwr_mode_of(double v1, double v2) {
  if (v1 >= 0.0) return v2 >= 0.0 ? DiodeMode::OnOn : DiodeMode::OnOff;
  return v2 >= 0.0 ? DiodeMode::OffOn : DiodeMode::OffOff;
}

inline AffineDynamics build_fwr_dynamics(const CircuitParams& p, DiodeMode mode) {
  p.validate();
  const double w = p.omega();
  Matrix a = Matrix::Zero(3, 3);
  Vector b = Vector::Zero(3);
  a(ix_vin, ix_quad) = w;
  a(ix_quad, ix_vin) = -w;

  // vout' = -vout/(RC) + (i1 + i2)/C, with each diode current either
  // v/Rf (on) or -I0 (off).
  const double g = 1.0 / (p.Rf * p.C);
  a(ix_vout, ix_vout) = -1.0 / (p.R * p.C);
  switch (mode) {
    case DiodeMode::OnOn:  // i1 + i2 = (v1 + v2)/Rf = -2 vout/Rf
      a(ix_vout, ix_vout) -= 2.0 * g;
      break;
    case DiodeMode::OnOff:  // i1 = (x1 - vout)/Rf, i2 = -I0
      a(ix_vout, ix_vin) += g;
      a(ix_vout, ix_vout) -= g;
      b(ix_vout) = -p.I0 / p.C;
      break;
    case DiodeMode::OffOn:  // i1 = -I0, i2 = (-x1 - vout)/Rf
      a(ix_vout, ix_vin) -= g;
      a(ix_vout, ix_vout) -= g;
      b(ix_vout) = -p.I0 / p.C;
      break;
    case DiodeMode::OffOff:
      b(ix_vout) = -2.0 * p.I0 / p.C;
      break;
  }
  return {a, b};
}

namespace detail {

// Halfspace rows in (x1, x2, vout) for v1 >= 0, v1 <= 0, v2 >= 0, v2 <= 0.
inline Halfspace v1_nonneg() { return {(Vector(3) << -1.0, 0.0, 1.0).finished(), 0.0}; }
inline Halfspace v1_nonpos() { return {(Vector(3) << 1.0, 0.0, -1.0).finished(), 0.0}; }
inline Halfspace v2_nonneg() { return {(Vector(3) << 1.0, 0.0, 1.0).finished(), 0.0}; }
inline Halfspace v2_nonpos() { return {(Vector(3) << -1.0, 0.0, -1.0).finished(), 0.0}; }

}  // namespace detail

/// Closed invariant of a diode mode; strict inequalities become closed
/// complements sharing the boundary.
inline Polytope fwr_invariant(DiodeMode m) {
  using namespace detail;
  switch (m) {
    case DiodeMode::OnOn: return Polytope(3, {v1_nonneg(), v2_nonneg()});
    case DiodeMode::OnOff: return Polytope(3, {v1_nonneg(), v2_nonpos()});
    case DiodeMode::OffOn: return Polytope(3, {v1_nonpos(), v2_nonneg()});
    case DiodeMode::OffOff: return Polytope(3, {v1_nonpos(), v2_nonpos()});
  }
  return Polytope(3);
}

inline Polytope fwr_analysis_region(const CircuitParams& p) {
  const double r = p.A + 1.0;
  return Polytope::box((Vector(3) << -r, -r, -1.0).finished(), (Vector(3) << r, r, r).finished());
}

inline Polytope fwr_ics(const CircuitParams& p, double vout_lo, double vout_hi) {
  return Polytope::box((Vector(3) << 0.0, p.A, vout_lo).finished(), (Vector(3) << 0.0, p.A, vout_hi).finished());
}

/// Four diode modes and the eight sign-adjacent transitions (no diagonal
/// edges). Guards are the shared boundary of source and target invariants.
inline PIHA build_fwr_piha(const CircuitParams& p, double ics_vout_lo, double ics_vout_hi, double horizon) {
  p.validate();
  if (!(ics_vout_lo <= ics_vout_hi)) throw Error(ErrorCode::invalid_argument, "ICS vout interval is reversed");
  PIHA h;
  h.dim = state_dim;
  h.horizon = horizon;
  h.analysis_region = fwr_analysis_region(p);
  h.ics = fwr_ics(p, ics_vout_lo, ics_vout_hi);
  for (auto m : all_modes) h.modes.push_back({std::string(name(m)), build_fwr_dynamics(p, m), fwr_invariant(m)});

  constexpr std::array<std::pair<DiodeMode, DiodeMode>, 8> edges{{
      {DiodeMode::OnOn, DiodeMode::OnOff},
      {DiodeMode::OnOff, DiodeMode::OnOn},
      {DiodeMode::OnOn, DiodeMode::OffOn},
      {DiodeMode::OffOn, DiodeMode::OnOn},
      {DiodeMode::OnOff, DiodeMode::OffOff},
      {DiodeMode::OffOff, DiodeMode::OnOff},
      {DiodeMode::OffOn, DiodeMode::OffOff},
      {DiodeMode::OffOff, DiodeMode::OffOn},
  }};
  for (const auto& [s, t] : edges) {
    h.transitions.push_back({std::string(name(s)), std::string(name(t)), intersect(fwr_invariant(s), fwr_invariant(t))});
  }

  const auto diags = validate_piha(h);
  if (!diags.empty()) {
    throw Error(ErrorCode::invalid_argument, "rectifier automaton failed validation: " + diags.front().rule + " (" +
                                                 diags.front().message + ")");
  }
  return h;
}

inline PIHA build_fwr_piha(const CircuitParams& p) { return build_fwr_piha(p, 3.8, 4.2, 2.0 * p.period()); }

inline constexpr double p1_margin = 1e-6;
inline constexpr double default_p2_threshold = 3.0;

/// P1: vout never negative (avoid vout <= -1e-6).
/// P2: vout never at or below `p2_threshold`.
inline std::pair<SafetySpec, SafetySpec> fwr_properties(const CircuitParams& p, double p2_threshold) {
  p.validate();
  if (!(p2_threshold < p.A)) throw Error(ErrorCode::invalid_argument, "P2 threshold must be below the source amplitude");
  const Vector up = (Vector(3) << 0.0, 0.0, 1.0).finished();
  SafetySpec p1{"P1", {{std::nullopt, Polytope(3, {{up, -p1_margin}})}}};
  SafetySpec p2{"P2", {{std::nullopt, Polytope(3, {{up, p2_threshold}})}}};
  return {std::move(p1), std::move(p2)};
}

}  // namespace piha::fwr
