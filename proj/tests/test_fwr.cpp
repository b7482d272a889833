#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "piha/checker.hpp"
#include "piha/fwr.hpp"

using namespace piha;
using Catch::Approx;

namespace {

Vector state(double x1, double x2, double vout) { return (Vector(3) << x1, x2, vout).finished(); }

// dvout/dt straight from the circuit law, no matrices.
double direct_rate(const fwr::CircuitParams& p, fwr::DiodeMode m, const Vector& x) {
  const double v1 = x(0) - x(2);
  const double v2 = -x(0) - x(2);
  const bool on1 = m == fwr::DiodeMode::OnOn || m == fwr::DiodeMode::OnOff;
  const bool on2 = m == fwr::DiodeMode::OnOn || m == fwr::DiodeMode::OffOn;
  const double i1 = on1 ? v1 / p.Rf : -p.I0;
  const double i2 = on2 ? v2 / p.Rf : -p.I0;
  return (-x(2) / p.R + i1 + i2) / p.C;
}

}  // namespace

TEST_CASE("rectifier derivative examples", "[fwr][dynamics]") {
  const fwr::CircuitParams p;
  const auto off = fwr::build_fwr_dynamics(p, fwr::DiodeMode::OffOff);
  CHECK(off(state(0, 0, 0))(2) == Approx(-0.02));
  CHECK(off(state(0, 0, 4))(2) == Approx(-40.02));
  const auto on = fwr::build_fwr_dynamics(p, fwr::DiodeMode::OnOff);
  CHECK(on(state(5, 0, 4))(2) == Approx(-40.0 + (1.0 / p.Rf - p.I0) / p.C));
  CHECK(on(state(5, 0, 4))(2) == Approx(959.99));
}

TEST_CASE("affine dynamics equal the circuit law in every mode", "[fwr][dynamics][oracle]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  std::uniform_real_distribution<double> amp(1.0, 10.0);
  std::uniform_real_distribution<double> freq(10.0, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    fwr::CircuitParams p;
    p.A = amp(rng);
    p.f = freq(rng);
    const Vector x = state(u(rng), u(rng), u(rng));
    for (auto m : fwr::all_modes) {
      const Vector dx = fwr::build_fwr_dynamics(p, m)(x);
      const double w = 2.0 * std::numbers::pi * p.f;
      CHECK(dx(0) == Approx(w * x(1)).epsilon(1e-12));
      CHECK(dx(1) == Approx(-w * x(0)).epsilon(1e-12));
      const double ref = direct_rate(p, m, x);
      CHECK(std::abs(dx(2) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)) + 1e-9);
    }
  }
}

TEST_CASE("mode classification by diode voltages", "[fwr][modes]") {
  using fwr::DiodeMode;
  CHECK(fwr::fwr_mode_of(0.5, 0.3) == DiodeMode::OnOn);
  CHECK(fwr::fwr_mode_of(-0.2, 0.7) == DiodeMode::OffOn);
  CHECK(fwr::fwr_mode_of(0.0, -1.0) == DiodeMode::OnOff);
  CHECK(fwr::fwr_mode_of(-1.0, -1.0) == DiodeMode::OffOff);
  CHECK(fwr::fwr_mode_of(0.0, 0.0) == DiodeMode::OnOn);
}

TEST_CASE("the four invariants partition the diode-voltage plane", "[fwr][modes][property]") {
  const auto h = fwr::build_fwr_piha(fwr::CircuitParams{});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 100000; ++i) {
    const double v1 = i % 17 == 0 ? 0.0 : u(rng);
    const double v2 = i % 13 == 0 ? 0.0 : u(rng);
    const Vector x = state((v1 - v2) / 2.0, u(rng), -(v1 + v2) / 2.0);
    // Closed invariants cover the point; the tie-break picks the quadrant.
    std::size_t containing = 0;
    for (const auto& m : h.modes) containing += contains_point(m.invariant, x, 0.0) ? 1 : 0;
    REQUIRE(containing >= 1);
    REQUIRE(h.modes[select_mode(h, x)].id == fwr::name(fwr::fwr_mode_of(v1, v2)));
  }
}

TEST_CASE("rectifier automaton structure", "[fwr][build]") {
  const fwr::CircuitParams p;
  const auto h = fwr::build_fwr_piha(p);
  CHECK(h.dim == 3);
  CHECK(h.modes.size() == 4);
  CHECK(h.transitions.size() == 8);
  CHECK(validate_piha(h).empty());
  CHECK(h.horizon == Approx(0.04));
  CHECK(h.modes[select_mode(h, state(0, p.A, 4))].id == "OffOff");

  const auto point = fwr::build_fwr_piha(p, 4.0, 4.0, 2.0 * p.period());
  CHECK(validate_piha(point).empty());
  CHECK(vertices(point.ics).size() == 1);
}

TEST_CASE("rectifier parameter and threshold validation", "[fwr][build]") {
  fwr::CircuitParams p;
  CHECK_THROWS_AS(fwr::build_fwr_piha(p, 4.2, 3.8, 0.04), Error);
  CHECK_THROWS_AS(fwr::fwr_properties(p, 5.0), Error);
  CHECK_THROWS_AS(fwr::fwr_properties(p, 6.0), Error);
  p.C = 0.0;
  CHECK_THROWS_AS(fwr::build_fwr_piha(p), Error);
  p = {};
  p.Rf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(fwr::build_fwr_dynamics(p, fwr::DiodeMode::OnOn), Error);
}

TEST_CASE("rectifier properties", "[fwr][spec]") {
  const auto [p1, p2] = fwr::fwr_properties(fwr::CircuitParams{}, 3.0);
  CHECK(p1.name == "P1");
  CHECK(p2.name == "P2");
  REQUIRE(p1.avoid.size() == 1);
  CHECK(contains_point(p1.avoid[0].region, state(0, 0, -0.1), 0.0));
  CHECK_FALSE(contains_point(p1.avoid[0].region, state(0, 0, 0.0), 0.0));
  CHECK(contains_point(p2.avoid[0].region, state(0, 0, 3.0), 0.0));
  CHECK_FALSE(contains_point(p2.avoid[0].region, state(0, 0, 3.01), 0.0));
}

TEST_CASE("rectifier P1 and P2 verify", "[fwr][verify][slow]") {
  const fwr::CircuitParams p;
  const auto h = fwr::build_fwr_piha(p);
  const auto [p1, p2] = fwr::fwr_properties(p, 3.0);
  ReachConfig cfg;
  cfg.dt = p.period() / 200.0;
  const auto r1 = verify_safety(h, p1, cfg, RefineConfig{});
  CHECK(r1.verdict == Verdict::pass);
  CHECK(r1.avoid_intersections == 0);
  const auto r2 = verify_safety(h, p2, cfg, RefineConfig{});
  CHECK(r2.verdict == Verdict::pass);
}

TEST_CASE("threshold 4.8 fails at the ripple trough", "[fwr][verify]") {
  const fwr::CircuitParams p;
  const auto h = fwr::build_fwr_piha(p);
  const auto spec = fwr::fwr_properties(p, 4.8).second;
  ReachConfig cfg;
  cfg.dt = p.period() / 200.0;
  const auto r = verify_safety(h, spec, cfg, RefineConfig{});
  REQUIRE(r.verdict == Verdict::fail);
  REQUIRE(r.counterexample);
  const auto& tr = *r.counterexample;
  double trough = tr.samples.front().x(2);
  for (const auto& s : tr.samples) trough = std::min(trough, s.x(2));
  const Vector& x0 = tr.samples.front().x;
  const auto dense = oracle::dense_rectifier({}, x0(0), x0(1), x0(2), h.horizon, 1e-7);
  CHECK(trough == Approx(dense.min_vout).margin(1e-3));
  CHECK(trough < 4.8);
}

TEST_CASE("steady-state trough lies between the thresholds", "[fwr][oracle]") {
  // Ten periods of the dense oracle settle the ripple: the trough sits
  // above 3 V (P2 holds) and below 4.8 V (the counter-test can fail).
  const fwr::CircuitParams p;
  const auto run = oracle::dense_rectifier({}, 0.0, p.A, 4.0, 10.0 * p.period(), 1e-6);
  CHECK(run.min_vout > 3.0);
  const auto late = oracle::dense_rectifier({}, 0.0, p.A, run.final_vout, p.period(), 1e-6);
  CHECK(late.min_vout < 4.8);
  CHECK(late.min_vout > 3.0);
}
