#pragma once

// Command-line front end: simulate, explore, verify and ingest.
//
// Exit codes: 0 pass/safe, 1 fail/violation, 2 inconclusive,
// 3 usage or model error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "piha/checker.hpp"
#include "piha/error.hpp"
#include "piha/fwr.hpp"
#include "piha/model_file.hpp"
#include "piha/report.hpp"
#include "piha/sim.hpp"
#include "piha/trace_io.hpp"

namespace piha::cli {

inline constexpr int exit_pass = 0;
inline constexpr int exit_fail = 1;
inline constexpr int exit_inconclusive = 2;
inline constexpr int exit_usage = 3;

constexpr int exit_code(Verdict v) {
  switch (v) {
    case Verdict::pass: return exit_pass;
    case Verdict::fail: return exit_fail;
    case Verdict::inconclusive: return exit_inconclusive;
  }
  return exit_usage;
}

struct Options {
  std::string model;
  bool fwr = false;
  fwr::CircuitParams params;
  double p2_threshold = fwr::default_p2_threshold;
  std::vector<double> ics_vout;
  std::string spec;
  std::vector<double> x0;
  double horizon = 0.0;
  bool horizon_set = false;
  std::string out;
  std::size_t max_depth = 0;
  bool max_depth_set = false;
  bool deterministic = false;
  std::string trace;
};

namespace detail {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ModelFile load(const Options& o) {
  if (o.fwr == !o.model.empty()) throw UsageError("give exactly one of --fwr and --model");
  ModelFile m;
  if (o.fwr) {
    double lo = 3.8;
    double hi = 4.2;
    if (!o.ics_vout.empty()) {
      if (o.ics_vout.size() != 2) throw UsageError("--ics-vout takes LO,HI");
      lo = o.ics_vout[0];
      hi = o.ics_vout[1];
    }
    m.piha = fwr::build_fwr_piha(o.params, lo, hi, 2.0 * o.params.period());
    auto [p1, p2] = fwr::fwr_properties(o.params, o.p2_threshold);
    m.specs = {std::move(p1), std::move(p2)};
    m.reach.dt = o.params.period() / 200.0;
  } else {
    m = load_model_file(o.model);
  }
  if (o.horizon_set) {
    if (!(o.horizon >= 0.0)) throw UsageError("--horizon must be non-negative");
    m.piha.horizon = o.horizon;
  }
  if (o.max_depth_set) m.refine.max_depth = o.max_depth;
  return m;
}

inline const SafetySpec& pick_spec(const ModelFile& m, const Options& o) {
  if (o.spec.empty()) throw UsageError("--spec is required");
  if (const auto* s = m.find_spec(o.spec)) return *s;
  std::string names;
  for (const auto& s : m.specs) names += (names.empty() ? "" : ", ") + s.name;
  throw UsageError("unknown spec '" + o.spec + "' (available: " + names + ")");
}

inline std::string out_dir(const Options& o) {
  const std::string dir = o.out.empty() ? "." : o.out;
  std::filesystem::create_directories(dir);
  return dir;
}

inline int simulate(const Options& o, std::ostream& out) {
  const auto m = load(o);
  Vector x0;
  if (o.x0.empty()) {
    x0 = chebyshev_center(m.piha.ics);
  } else {
    if (o.x0.size() != m.piha.dim) throw UsageError("--x0 needs " + std::to_string(m.piha.dim) + " values");
    x0 = Eigen::Map<const Vector>(o.x0.data(), static_cast<Eigen::Index>(o.x0.size()));
  }
  const auto trace = simulate_hybrid(m.piha, x0, m.piha.horizon, m.sim);
  if (o.out.empty()) {
    write_trace_csv(trace, out);
  } else {
    const auto path = (std::filesystem::path(out_dir(o)) / "trace.csv").string();
    write_trace_csv(trace, path);
    out << path << '\n';
  }
  return exit_pass;
}

inline int explore_cmd(const Options& o, std::ostream& out) {
  const auto m = load(o);
  const auto& spec = pick_spec(m, o);
  const auto ex = explore(m.piha, spec, m.sim);
  const auto dir = out_dir(o);
  write_explore_report(ex, spec.name, dir);
  std::size_t unsafe = 0;
  std::size_t errors = 0;
  for (const auto& r : ex.reports) {
    if (r.error) ++errors;
    else if (!r.verdict.safe) ++unsafe;
  }
  out << spec.name << ": " << ex.reports.size() << " points, " << unsafe << " unsafe, " << errors << " failed\n";
  if (unsafe > 0) return exit_fail;
  return errors > 0 ? exit_inconclusive : exit_pass;
}

inline int verify_cmd(const Options& o, std::ostream& out) {
  const auto m = load(o);
  const auto& spec = pick_spec(m, o);
  const auto res = verify_safety(m.piha, spec, m.reach, m.refine);
  const auto path = (std::filesystem::path(out_dir(o)) / (spec.name + "_result.json")).string();
  const auto rec = write_result(res, path, o.deterministic);
  out << spec.name << ' ' << to_string(res.verdict) << " (partitions " << res.partitions_processed << ", segments "
      << res.segments_total << ", avoid intersections " << res.avoid_intersections << ")\n";
  out << "result: " << path << '\n';
  if (rec.counterexample_csv_path) out << "counterexample: " << *rec.counterexample_csv_path << '\n';
  return exit_code(res.verdict);
}

inline int ingest_cmd(const Options& o, std::ostream& out) {
  const auto m = load(o);
  if (o.trace.empty()) throw UsageError("--trace is required");
  const auto csv = read_trace_csv(o.trace);
  const auto trace = ingest_external_trace(m.piha, csv.rows);
  if (!o.out.empty()) write_trace_csv(trace, (std::filesystem::path(out_dir(o)) / "ingested.csv").string());

  out << "modes:";
  for (const auto& s : trace.mode_sequence()) out << ' ' << s;
  out << '\n';
  for (const auto& e : trace.events) out << "event " << format_double(e.t) << ' ' << e.from << " -> " << e.to << '\n';

  const SafetySpec empty{"AR", {}};
  const SafetySpec& spec = o.spec.empty() ? empty : pick_spec(m, o);
  const auto v = check_trace_safety(trace, spec, m.piha);
  if (v.safe) {
    out << spec.name << ": safe\n";
    return exit_pass;
  }
  out << spec.name << ": violation (" << to_string(v.first_violation->which) << ") at t = "
      << format_double(v.first_violation->t) << '\n';
  return exit_fail;
}

inline void add_model_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "Model file");
  cmd->add_flag("--fwr", o.fwr, "Use the built-in full-wave rectifier");
  cmd->add_option("--amp", o.params.A, "Rectifier source amplitude (V)");
  cmd->add_option("--freq", o.params.f, "Rectifier source frequency (Hz)");
  cmd->add_option("--r", o.params.R, "Rectifier load resistance (ohm)");
  cmd->add_option("--c", o.params.C, "Rectifier load capacitance (F)");
  cmd->add_option("--rf", o.params.Rf, "Diode forward resistance (ohm)");
  cmd->add_option("--i0", o.params.I0, "Diode reverse current (A)");
  cmd->add_option("--p2-threshold", o.p2_threshold, "Rectifier P2 threshold (V)");
  cmd->add_option("--ics-vout", o.ics_vout, "Rectifier initial vout interval LO,HI")->delimiter(',')->expected(2);
  cmd->add_option("--horizon", o.horizon, "Time horizon (s)")->each([&o](const std::string&) { o.horizon_set = true; });
}

}  // namespace detail

/// Runs one command; `args` excludes the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Safety verification for polyhedral-invariant hybrid automata", "piha"};
  app.require_subcommand(1, 1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Simulate one trajectory and write it as CSV");
  detail::add_model_options(sim, o);
  sim->add_option("--x0", o.x0, "Initial state, comma separated")->delimiter(',');
  sim->add_option("--out", o.out, "Output directory (default: CSV on stdout)");

  auto* exp = app.add_subcommand("explore", "Simulate from the initial-set vertices and check a spec");
  detail::add_model_options(exp, o);
  exp->add_option("--spec", o.spec, "Spec name");
  exp->add_option("--out", o.out, "Output directory");

  auto* ver = app.add_subcommand("verify", "Flow-pipe verification with initial-set refinement");
  detail::add_model_options(ver, o);
  ver->add_option("--spec", o.spec, "Spec name");
  ver->add_option("--max-depth", o.max_depth, "Refinement depth")->each([&o](const std::string&) { o.max_depth_set = true; });
  ver->add_option("--out", o.out, "Output directory");
  ver->add_flag("--deterministic", o.deterministic, "Write wall_time_s as 0");

  auto* ing = app.add_subcommand("ingest", "Label and check an externally produced trace");
  detail::add_model_options(ing, o);
  ing->add_option("--trace", o.trace, "Trace CSV (t,x1..xn[,mode])");
  ing->add_option("--spec", o.spec, "Spec name (default: analysis region only)");
  ing->add_option("--out", o.out, "Output directory for the labelled trace");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_pass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_usage;
  }

  try {
    if (sim->parsed()) return detail::simulate(o, out);
    if (exp->parsed()) return detail::explore_cmd(o, out);
    if (ver->parsed()) return detail::verify_cmd(o, out);
    return detail::ingest_cmd(o, out);
  } catch (const detail::UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
  }
  return exit_usage;
}

}  // namespace piha::cli
