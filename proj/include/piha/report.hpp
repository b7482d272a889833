#pragma once

// Result and explore reports. Keys are written in a fixed order so equal
// results give byte-identical files.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "piha/checker.hpp"
#include "piha/error.hpp"
#include "piha/trace_io.hpp"

namespace piha {

/// What a result file holds.
struct ResultRecord {
  std::string spec_name;
  Verdict verdict = Verdict::inconclusive;
  std::size_t iterations = 0;
  std::size_t partitions_processed = 0;
  std::size_t segments_total = 0;
  double wall_time_s = 0.0;
  std::optional<std::string> counterexample_csv_path;

  bool operator==(const ResultRecord&) const = default;
};

inline Verdict parse_verdict(std::string_view s) {
  if (s == "Pass") return Verdict::pass;
  if (s == "Fail") return Verdict::fail;
  if (s == "Inconclusive") return Verdict::inconclusive;
  throw Error(ErrorCode::parse_error, "unknown verdict '" + std::string(s) + "'");
}

/// `result.json` -> `result_counterexample.csv`, in the same directory.
inline std::string counterexample_path_for(const std::string& json_path) {
  std::filesystem::path p(json_path);
  const std::string stem = p.extension() == ".json" ? p.stem().string() : p.filename().string();
  return (p.parent_path() / (stem + "_counterexample.csv")).string();
}

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw Error(ErrorCode::io_error, "write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const ResultRecord& r) {
  nlohmann::ordered_json j;
  j["spec_name"] = r.spec_name;
  j["verdict"] = std::string(to_string(r.verdict));
  j["iterations"] = r.iterations;
  j["partitions_processed"] = r.partitions_processed;
  j["segments_total"] = r.segments_total;
  j["wall_time_s"] = r.wall_time_s;
  if (r.counterexample_csv_path) j["counterexample_csv_path"] = *r.counterexample_csv_path;
  return j;
}

/// Writes `res` as JSON to `path` and, for a result with a counterexample,
/// the trace CSV beside it. With `zero_wall_time` the timing field is 0 so
/// repeated runs produce identical files.
inline ResultRecord write_result(const VerificationResult& res, const std::string& path, bool zero_wall_time = false) {
  ResultRecord r{res.spec_name, res.verdict,    res.iterations, res.partitions_processed,
                 res.segments_total, zero_wall_time ? 0.0 : res.wall_time, std::nullopt};
  if (res.counterexample) {
    r.counterexample_csv_path = counterexample_path_for(path);
    write_trace_csv(*res.counterexample, *r.counterexample_csv_path);
  }
  detail::write_text(path, to_json(r).dump(2) + "\n");
  return r;
}

inline ResultRecord read_result(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(path));
    ResultRecord r;
    r.spec_name = j.at("spec_name").get<std::string>();
    r.verdict = parse_verdict(j.at("verdict").get<std::string>());
    r.iterations = j.at("iterations").get<std::size_t>();
    r.partitions_processed = j.at("partitions_processed").get<std::size_t>();
    r.segments_total = j.at("segments_total").get<std::size_t>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    if (j.contains("counterexample_csv_path")) r.counterexample_csv_path = j["counterexample_csv_path"].get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, path + ": " + e.what());
  }
}

/// `explore.json` plus `point_<i>.csv` for every point that produced a trace.
inline void write_explore_report(const ExploreResult& ex, const std::string& spec_name, const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::ordered_json j;
  j["spec_name"] = spec_name;
  j["all_safe"] = ex.all_safe;
  auto points = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ex.reports.size(); ++i) {
    const auto& rep = ex.reports[i];
    nlohmann::ordered_json p;
    auto x0 = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < rep.x0.size(); ++k) x0.push_back(rep.x0(k));
    p["x0"] = x0;
    p["safe"] = rep.verdict.safe;
    if (rep.verdict.first_violation) {
      const auto& v = *rep.verdict.first_violation;
      p["violation"] = {{"t", v.t}, {"conjunct", std::string(to_string(v.which))}};
    }
    if (rep.error) p["error"] = *rep.error;
    if (rep.trace) {
      const std::string name = "point_" + std::to_string(i) + ".csv";
      write_trace_csv(*rep.trace, (fs::path(dir) / name).string());
      p["trace_csv"] = name;
    }
    points.push_back(std::move(p));
  }
  j["points"] = std::move(points);
  detail::write_text((fs::path(dir) / "explore.json").string(), j.dump(2) + "\n");
}

}  // namespace piha
