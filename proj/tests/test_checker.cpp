#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "piha/checker.hpp"
#include "piha/fwr.hpp"

using namespace piha;
using Catch::Approx;

namespace {

Vector v1(double a) { return (Vector(1) << a).finished(); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }
Vector state(double x1, double x2, double vout) { return (Vector(3) << x1, x2, vout).finished(); }

auto code_is(ErrorCode c) {
  return Catch::Matchers::Predicate<Error>([c](const Error& e) { return e.code() == c; });
}

ReachConfig rectifier_config(const fwr::CircuitParams& p) {
  ReachConfig cfg;
  cfg.dt = p.period() / 200.0;
  return cfg;
}

// x' = -x from [1, 1.1] over one time unit.
PIHA decay() {
  PIHA h;
  h.dim = 1;
  h.modes.push_back({"m", {Matrix::Constant(1, 1, -1.0), Vector::Zero(1)}, Polytope::universe(1)});
  h.ics = Polytope::box(v1(1.0), v1(1.1));
  h.analysis_region = Polytope::box(v1(-2.0), v1(2.0));
  h.horizon = 1.0;
  return h;
}

SafetySpec below(double level) { return {"below", {{std::nullopt, Polytope(1, {{v1(1.0), level}})}}}; }

}  // namespace

TEST_CASE("trace checks", "[checker][trace]") {
  const fwr::CircuitParams p;
  const auto h = fwr::build_fwr_piha(p);
  const auto [p1, p2] = fwr::fwr_properties(p, 3.0);
  const auto tr = simulate_hybrid(h, state(0, p.A, 4.0), h.horizon, IntegratorConfig{});
  CHECK(check_trace_safety(tr, p1, h).safe);
  CHECK(check_trace_safety(tr, p2, h).safe);

  HybridTrace bad;
  bad.samples = {{0.0, state(0, 5, 4), "OffOff"}, {1e-3, state(0, 5, -0.1), "OffOff"}, {2e-3, state(0, 5, -0.2), "OffOff"}};
  const auto v = check_trace_safety(bad, p1, h);
  REQUIRE_FALSE(v.safe);
  CHECK(v.first_violation->which == Conjunct::avoid);
  CHECK(v.first_violation->t == 1e-3);
  CHECK(v.first_violation->sample == 1);

  HybridTrace out;
  out.samples = {{0.0, state(0, 5, 4), "OffOff"}, {1e-3, state(7.0, 5, 4), "OffOff"}};
  const auto w = check_trace_safety(out, p1, h);
  REQUIRE_FALSE(w.safe);
  CHECK(w.first_violation->which == Conjunct::out_of_bound);

  HybridTrace flat;
  flat.samples = {{0.0, v1(0.0), "OffOff"}};
  CHECK_THROWS_MATCHES(check_trace_safety(flat, p1, h), Error, code_is(ErrorCode::dimension_mismatch));
}

TEST_CASE("mode-restricted avoid regions", "[checker][trace]") {
  const auto h = fwr::build_fwr_piha(fwr::CircuitParams{});
  const SafetySpec s{"on", {{std::string("OnOff"), Polytope(3, {{state(0, 0, 1), 10.0}})}}};
  HybridTrace tr;
  tr.samples = {{0.0, state(0, 5, 4), "OffOff"}};
  CHECK(check_trace_safety(tr, s, h).safe);
  tr.samples.push_back({1e-3, state(4.5, 2, 4), "OnOff"});
  CHECK_FALSE(check_trace_safety(tr, s, h).safe);
}

TEST_CASE("explore over the initial set", "[checker][explore]") {
  const fwr::CircuitParams p;
  const auto h = fwr::build_fwr_piha(p);
  const auto [p1, p2] = fwr::fwr_properties(p, 3.0);
  const auto ex = explore(h, p1, IntegratorConfig{});
  CHECK(ex.all_safe);
  CHECK(ex.reports.size() == 3);

  const auto high = fwr::fwr_properties(p, 4.8).second;
  const auto bad = explore(h, high, IntegratorConfig{});
  CHECK_FALSE(bad.all_safe);
  const auto* first = bad.first_unsafe();
  REQUIRE(first);
  double trough = 10.0;
  for (const auto& s : first->trace->samples) trough = std::min(trough, s.x(2));
  CHECK(trough < 4.8);
  const auto dense = oracle::dense_rectifier({}, first->x0(0), first->x0(1), first->x0(2), h.horizon, 1e-7);
  CHECK(trough == Approx(dense.min_vout).margin(1e-3));

  const auto point = fwr::build_fwr_piha(p, 4.0, 4.0, h.horizon);
  CHECK(explore(point, p1, IntegratorConfig{}).reports.size() == 1);
}

TEST_CASE("explore reports failures per point", "[checker][explore]") {
  // The start at x = 2 sits on the invariant boundary and has no guard to take.
  PIHA h;
  h.dim = 1;
  h.modes.push_back({"m", {Matrix::Zero(1, 1), v1(1.0)}, Polytope(1, {{v1(1.0), 2.0}})});
  h.ics = Polytope::box(v1(0.0), v1(2.0));
  h.analysis_region = Polytope::box(v1(-1.0), v1(3.0));
  h.horizon = 0.75;
  const auto ex = explore(h, below(-0.5), IntegratorConfig{});
  REQUIRE(ex.reports.size() == 3);
  std::size_t errors = 0;
  for (const auto& r : ex.reports) errors += r.error ? 1 : 0;
  CHECK(errors == 1);
  CHECK_FALSE(ex.all_safe);
  CHECK(ex.first_unsafe() == nullptr);
}

TEST_CASE("refinement examples", "[checker][refine]") {
  const auto [a, b] = refine_ics(Polytope::box(v1(0), v1(1)), SplitRule::widest_axis);
  CHECK(*support(a, v1(1)) == Approx(0.5));
  CHECK(-*support(a, v1(-1)) == Approx(0.0));
  CHECK(-*support(b, v1(-1)) == Approx(0.5));
  CHECK(*support(b, v1(1)) == Approx(1.0));

  const auto [l, r] = refine_ics(Polytope::box(v2(0, 0), v2(1, 1)), SplitRule::widest_axis);
  const auto lb = bounding_box(l);
  const auto rb = bounding_box(r);
  CHECK((lb.hi - lb.lo).prod() == Approx(0.5));
  CHECK((rb.hi - rb.lo).prod() == Approx(0.5));

  const auto tall = Polytope::box(v2(0, 0), v2(1, 4));
  CHECK(bounding_box(refine_ics(tall, SplitRule::widest_axis).first).hi(1) == Approx(2.0));
  CHECK(bounding_box(refine_ics(tall, SplitRule::round_robin, 0).first).hi(0) == Approx(0.5));
  CHECK(bounding_box(refine_ics(tall, SplitRule::round_robin, 1).first).hi(1) == Approx(2.0));

  // The rectifier ICS is flat in two axes; round robin skips them.
  const auto ics = fwr::fwr_ics(fwr::CircuitParams{}, 3.8, 4.2);
  CHECK(bounding_box(refine_ics(ics, SplitRule::round_robin, 0).first).hi(2) == Approx(4.0));

  CHECK_THROWS_MATCHES(refine_ics(Polytope::box(v2(1, 1), v2(1, 1)), SplitRule::widest_axis), Error,
                       code_is(ErrorCode::unsplittable));
  CHECK_THROWS_MATCHES(refine_ics(Polytope(1, {{v1(1), 1.0}}), SplitRule::widest_axis), Error,
                       code_is(ErrorCode::unbounded_polytope));
}

TEST_CASE("refinement children union to the parent", "[checker][refine][property]") {
  std::mt19937_64 rng(17);
  int polys = 0;
  while (polys < 100) {
    const auto p = oracle::random_polytope(rng, 3, 3);
    if (oracle::brute_empty(p)) continue;
    const auto rule = polys % 2 == 0 ? SplitRule::widest_axis : SplitRule::round_robin;
    const auto [a, b] = refine_ics(p, rule, static_cast<std::size_t>(polys));
    ++polys;
    const auto box = bounding_box(p);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      Vector x(3);
      for (Eigen::Index i = 0; i < 3; ++i) x(i) = box.lo(i) - 0.1 + (box.hi(i) - box.lo(i) + 0.2) * u(rng);
      const bool parent = oracle::satisfies(p, x, 0.0);
      const bool in_a = oracle::satisfies(a, x, 0.0);
      const bool in_b = oracle::satisfies(b, x, 0.0);
      REQUIRE(parent == (in_a || in_b));
      REQUIRE_FALSE((oracle::satisfies(a, x, -1e-12) && oracle::satisfies(b, x, -1e-12)));
    }
  }
}

TEST_CASE("segment checks", "[checker][segment]") {
  const auto h = decay();
  FlowpipeSegment seg{"m", 0.0, 0.1, Polytope::box(v1(0.5), v1(1.0))};
  CHECK_FALSE(check_segment(seg, below(0.2), h).violates());
  CHECK(check_segment(seg, below(0.6), h).hits_avoid);
  FlowpipeSegment wide{"m", 0.0, 0.1, Polytope::box(v1(0.5), v1(2.5))};
  CHECK(check_segment(wide, below(0.2), h).leaves_region);
  const SafetySpec other{"other", {{std::string("elsewhere"), Polytope::universe(1)}}};
  CHECK_FALSE(check_segment(seg, other, h).hits_avoid);
}

TEST_CASE("verify outcomes on a decaying state", "[checker][verify]") {
  const auto h = decay();
  ReachConfig cfg;
  cfg.dt = 0.01;
  // Minimum over all traces is e^-1 ~ 0.3679.
  const auto pass = verify_safety(h, below(0.35), cfg, RefineConfig{});
  CHECK(pass.verdict == Verdict::pass);
  CHECK(pass.partitions_processed == 1);
  CHECK(pass.avoid_intersections == 0);
  CHECK_FALSE(pass.counterexample);

  const auto fail = verify_safety(h, below(0.38), cfg, RefineConfig{});
  REQUIRE(fail.verdict == Verdict::fail);
  REQUIRE(fail.counterexample);
  CHECK_FALSE(check_trace_safety(*fail.counterexample, below(0.38), h).safe);

  // A budget too small for any partition: never Pass, never Fail.
  cfg.max_segments = 5;
  RefineConfig shallow;
  shallow.max_depth = 1;
  const auto inc = verify_safety(h, below(0.35), cfg, shallow);
  CHECK(inc.verdict == Verdict::inconclusive);
  CHECK(inc.partitions_processed == 3);
}

TEST_CASE("refinement resolves a spurious hit", "[checker][verify]") {
  // Starts below 0.40 e ~ 1.087 reach x <= 0.40 before t = 1.
  const auto h = decay();
  ReachConfig cfg;
  cfg.dt = 0.01;
  const auto r = verify_safety(h, below(0.40), cfg, RefineConfig{});
  REQUIRE(r.verdict == Verdict::fail);
  CHECK(r.counterexample->samples.back().x(0) <= 0.40);

  // The single trajectory stops just short of the avoid set. Bloat may touch
  // it, but a concrete trace must never be reported.
  auto narrow = h;
  narrow.ics = Polytope::box(v1(1.0), v1(1.0));
  const auto ok = verify_safety(narrow, below(std::exp(-1.0) - 1e-6), cfg, RefineConfig{});
  CHECK(ok.verdict != Verdict::fail);
}

TEST_CASE("a pass is confirmed by random traces", "[checker][verify][property]") {
  const fwr::CircuitParams p;
  auto h = fwr::build_fwr_piha(p);
  h.horizon = 0.012;
  for (double threshold : {3.0, 3.5}) {
    const auto spec = fwr::fwr_properties(p, threshold).second;
    const auto r = verify_safety(h, spec, rectifier_config(p), RefineConfig{});
    REQUIRE(r.verdict == Verdict::pass);
    std::mt19937_64 rng(static_cast<unsigned>(threshold * 10));
    std::uniform_real_distribution<double> u(3.8, 4.2);
    for (int i = 0; i < 100; ++i) {
      const auto tr = simulate_hybrid(h, state(0, p.A, u(rng)), h.horizon, IntegratorConfig{});
      REQUIRE(check_trace_safety(tr, spec, h).safe);
    }
  }
}

TEST_CASE("a smaller bloat factor never turns a pass into a fail", "[checker][verify][property]") {
  const auto h = decay();
  for (double level : {0.2, 0.3, 0.36}) {
    ReachConfig cfg;
    cfg.dt = 0.01;
    cfg.bloat_factor = 4.0;
    const auto base = verify_safety(h, below(level), cfg, RefineConfig{});
    REQUIRE(base.verdict == Verdict::pass);
    for (double beta : {1.0, 2.0}) {
      cfg.bloat_factor = beta;
      CHECK(verify_safety(h, below(level), cfg, RefineConfig{}).verdict != Verdict::fail);
    }
  }
}
