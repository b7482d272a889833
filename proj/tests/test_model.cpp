#include <catch_amalgamated.hpp>

#include "piha/fwr.hpp"
#include "piha/model.hpp"

using namespace piha;

namespace {

Vector v1(double a) { return (Vector(1) << a).finished(); }

// x' = +1 on x <= 1, x' = -1 on x >= 1.
PIHA two_mode_line() {
  PIHA h;
  h.dim = 1;
  h.modes.push_back({"up", {Matrix::Zero(1, 1), v1(1.0)}, Polytope(1, {{v1(1.0), 1.0}})});
  h.modes.push_back({"down", {Matrix::Zero(1, 1), v1(-1.0)}, Polytope(1, {{v1(-1.0), -1.0}})});
  h.transitions.push_back({"up", "down", Polytope::box(v1(1.0), v1(1.0))});
  h.transitions.push_back({"down", "up", Polytope::box(v1(1.0), v1(1.0))});
  h.ics = Polytope::box(v1(0.0), v1(0.0));
  h.analysis_region = Polytope::box(v1(-1.0), v1(3.0));
  h.horizon = 2.0;
  return h;
}

std::vector<std::string> rules(const std::vector<Diagnostic>& ds) {
  std::vector<std::string> out;
  for (const auto& d : ds) out.push_back(d.rule);
  return out;
}

Vector fwr_state(double v1, double v2, double x2 = 0.0) {
  return (Vector(3) << (v1 - v2) / 2.0, x2, -(v1 + v2) / 2.0).finished();
}

}  // namespace

TEST_CASE("well-formed automata validate cleanly", "[model][validate]") {
  CHECK(validate_piha(fwr::build_fwr_piha(fwr::CircuitParams{})).empty());
  CHECK(validate_piha(two_mode_line()).empty());
}

TEST_CASE("unknown transition target", "[model][validate]") {
  auto h = two_mode_line();
  h.transitions.push_back({"up", "sideways", Polytope(1)});
  const auto ds = validate_piha(h);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].rule == "unresolved-target");
  CHECK(ds[0].element == "up->sideways");
}

TEST_CASE("initial set reaching outside the analysis region", "[model][validate]") {
  auto h = two_mode_line();
  h.ics = Polytope::box(v1(2.5), v1(3.5));
  CHECK(rules(validate_piha(h)) == std::vector<std::string>{"ics-outside-AR"});
}

TEST_CASE("structural rule violations", "[model][validate]") {
  {
    auto h = two_mode_line();
    h.modes.push_back(h.modes[0]);
    CHECK(rules(validate_piha(h)) == std::vector<std::string>{"duplicate-mode"});
  }
  {
    auto h = two_mode_line();
    h.transitions.push_back({"up", "up", Polytope(1)});
    CHECK(rules(validate_piha(h)) == std::vector<std::string>{"self-loop"});
  }
  {
    auto h = two_mode_line();
    h.transitions.push_back({"ghost", "up", Polytope(1)});
    CHECK(rules(validate_piha(h)) == std::vector<std::string>{"unresolved-source"});
  }
  {
    auto h = two_mode_line();
    h.horizon = 0.0;
    CHECK(rules(validate_piha(h)) == std::vector<std::string>{"horizon"});
  }
  {
    auto h = two_mode_line();
    h.ics = Polytope(1, {{v1(1.0), 0.0}, {v1(-1.0), -1.0}});
    CHECK(rules(validate_piha(h)) == std::vector<std::string>{"ics-empty"});
  }
  {
    auto h = two_mode_line();
    h.modes[1].invariant = Polytope(1, {{v1(-1.0), -2.0}});
    CHECK(rules(validate_piha(h)) == std::vector<std::string>{"coverage-gap"});
  }
  {
    auto h = two_mode_line();
    h.modes[0].dynamics.A = Matrix::Zero(2, 2);
    const auto ds = validate_piha(h);
    REQUIRE_FALSE(ds.empty());
    CHECK(ds[0].rule == "dimension-mismatch");
    CHECK(ds[0].element == "up");
  }
  {
    auto h = two_mode_line();
    h.analysis_region = Polytope(1, {{v1(1.0), 3.0}});
    CHECK(rules(validate_piha(h)) == std::vector<std::string>{"AR-unbounded"});
  }
  {
    PIHA h;
    CHECK_FALSE(validate_piha(h).empty());
  }
}

TEST_CASE("validation is repeatable and leaves the automaton alone", "[model][validate][property]") {
  auto h = two_mode_line();
  h.transitions.push_back({"up", "nowhere", Polytope(1)});
  const auto before = h.transitions.size();
  const auto a = validate_piha(h);
  const auto b = validate_piha(h);
  CHECK(rules(a) == rules(b));
  CHECK(h.transitions.size() == before);
}

TEST_CASE("spec validation", "[model][validate]") {
  const auto h = two_mode_line();
  SafetySpec ok{"ok", {{std::string("up"), Polytope::box(v1(2.0), v1(3.0))}}};
  CHECK(validate_spec(h, ok).empty());
  SafetySpec bad{"bad", {{std::string("left"), Polytope(2)}}};
  CHECK(rules(validate_spec(h, bad)) == std::vector<std::string>{"dimension-mismatch", "unresolved-mode"});
}

TEST_CASE("mode selection follows the rectifier sign quadrants", "[model][select]") {
  const auto h = fwr::build_fwr_piha(fwr::CircuitParams{});
  CHECK(h.modes[select_mode(h, fwr_state(0.5, -0.3))].id == "OnOff");
  CHECK(h.modes[select_mode(h, fwr_state(-1.0, -1.0))].id == "OffOff");
  CHECK(h.modes[select_mode(h, fwr_state(0.0, 0.0))].id == "OnOn");
  CHECK(h.modes[select_mode(h, fwr_state(-0.2, 0.7))].id == "OffOn");
  CHECK(h.modes[select_mode(h, fwr_state(0.0, -1.0))].id == "OnOff");
}

TEST_CASE("mode selection reports coverage gaps", "[model][select]") {
  auto h = two_mode_line();
  h.modes[1].invariant = Polytope(1, {{v1(-1.0), -2.0}});
  CHECK(select_mode(h, v1(0.5)) == 0);
  CHECK(select_mode(h, v1(1.0)) == 0);
  CHECK_THROWS_MATCHES(select_mode(h, v1(1.5)), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::coverage_gap; }));
}

TEST_CASE("derived transitions follow shared facets", "[model][derive]") {
  const auto h = fwr::build_fwr_piha(fwr::CircuitParams{});
  const auto derived = derive_transitions(h.modes, h.analysis_region);
  REQUIRE(derived.size() == h.transitions.size());
  for (const auto& t : h.transitions) {
    const bool found = std::any_of(derived.begin(), derived.end(), [&](const Transition& d) {
      return d.source == t.source && d.target == t.target && is_subset(d.guard, t.guard) && is_subset(t.guard, d.guard);
    });
    CHECK(found);
  }
  // Diagonal neighbours touch only on a line and are not adjacent.
  for (const auto& d : derived) {
    CHECK_FALSE((d.source == "OnOn" && d.target == "OffOff"));
    CHECK_FALSE((d.source == "OnOff" && d.target == "OffOn"));
  }

  const auto line = two_mode_line();
  const auto lt = derive_transitions(line.modes, line.analysis_region);
  CHECK(lt.size() == 2);
}
