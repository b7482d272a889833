#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "piha/fwr.hpp"
#include "piha/trace_io.hpp"

using namespace piha;

namespace {

auto code_is(ErrorCode c) {
  return Catch::Matchers::Predicate<Error>([c](const Error& e) { return e.code() == c; });
}

HybridTrace small_trace() {
  HybridTrace tr;
  tr.samples.push_back({0.0, (Vector(2) << 0.1, 1.0 / 3.0).finished(), "a"});
  tr.samples.push_back({1e-7, (Vector(2) << -2.5e-300, 6.02214076e23).finished(), "b"});
  tr.samples.push_back({0.30000000000000004, (Vector(2) << 1.0, -0.0).finished(), "b"});
  return tr;
}

}  // namespace

TEST_CASE("trace CSV layout", "[trace_io]") {
  std::ostringstream os;
  write_trace_csv(small_trace(), os);
  const auto text = os.str();
  CHECK(text.rfind("t,x1,x2,mode\n", 0) == 0);
  CHECK(text.find("\n0,0.10000000000000001,0.33333333333333331,a\n") != std::string::npos);
}

TEST_CASE("trace CSV round trip is exact", "[trace_io][property]") {
  const auto tr = small_trace();
  std::stringstream ss;
  write_trace_csv(tr, ss);
  const auto back = read_trace_csv(ss);
  REQUIRE(back.rows.size() == tr.samples.size());
  REQUIRE(back.modes.size() == tr.samples.size());
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    CHECK(back.rows[i].t == tr.samples[i].t);
    CHECK(back.rows[i].x == tr.samples[i].x);
    CHECK(back.modes[i] == tr.samples[i].mode);
  }
}

TEST_CASE("simulated rectifier trace survives the file system", "[trace_io]") {
  const fwr::CircuitParams p;
  const auto h = fwr::build_fwr_piha(p);
  const auto tr = simulate_hybrid(h, (Vector(3) << 0, p.A, 4).finished(), h.horizon, IntegratorConfig{});
  const auto path = (std::filesystem::temp_directory_path() / "piha_trace_io.csv").string();
  write_trace_csv(tr, path);
  const auto back = read_trace_csv(path);
  REQUIRE(back.rows.size() == tr.samples.size());
  for (std::size_t i = 0; i < tr.samples.size(); ++i) CHECK(back.rows[i].x == tr.samples[i].x);
  std::filesystem::remove(path);
}

TEST_CASE("mode column is optional", "[trace_io]") {
  std::istringstream is("t,x1\r\n0,1\r\n\r\n0.5,2\r\n");
  const auto csv = read_trace_csv(is);
  CHECK(csv.modes.empty());
  REQUIRE(csv.rows.size() == 2);
  CHECK(csv.rows[1].t == 0.5);
  CHECK(csv.rows[1].x(0) == 2.0);
}

TEST_CASE("malformed trace files", "[trace_io]") {
  std::istringstream empty("");
  CHECK_THROWS_MATCHES(read_trace_csv(empty), Error, code_is(ErrorCode::parse_error));
  std::istringstream header("time,x1\n0,1\n");
  CHECK_THROWS_MATCHES(read_trace_csv(header), Error, code_is(ErrorCode::parse_error));
  std::istringstream no_state("t,mode\n0,a\n");
  CHECK_THROWS_MATCHES(read_trace_csv(no_state), Error, code_is(ErrorCode::parse_error));
  std::istringstream bad_number("t,x1\n0,1\n1,abc\n");
  CHECK_THROWS_WITH(read_trace_csv(bad_number), Catch::Matchers::ContainsSubstring("line 3"));
  std::istringstream short_row("t,x1,x2\n0,1\n");
  CHECK_THROWS_MATCHES(read_trace_csv(short_row), Error, code_is(ErrorCode::dimension_drift));
  CHECK_THROWS_MATCHES(read_trace_csv(std::string("/nonexistent/dir/trace.csv")), Error, code_is(ErrorCode::io_error));
  CHECK_THROWS_WITH(write_trace_csv(small_trace(), std::string("/nonexistent/dir/out.csv")),
                    Catch::Matchers::ContainsSubstring("/nonexistent/dir/out.csv"));
}
