#pragma once

// Trace CSV: header `t,x1,...,xn,mode`, one sample per line, 17 significant
// digits so that values survive a write/read cycle bit for bit.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "piha/error.hpp"
#include "piha/sim.hpp"

namespace piha {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trace_csv(const HybridTrace& trace, std::ostream& os) {
  const std::size_t n = trace.samples.empty() ? 0 : static_cast<std::size_t>(trace.samples.front().x.size());
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  os << ",mode\n";
  for (const auto& s : trace.samples) {
    os << format_double(s.t);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) os << ',' << format_double(s.x(i));
    os << ',' << s.mode << '\n';
  }
}

inline void write_trace_csv(const HybridTrace& trace, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  write_trace_csv(trace, os);
  if (!os) throw Error(ErrorCode::io_error, "write to '" + path + "' failed");
}

struct CsvTrace {
  std::vector<TraceRow> rows;
  std::vector<std::string> modes;  // empty when the file has no mode column
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_number(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

}  // namespace detail

/// Reads `t,x1..xn[,mode]`. The mode column, when present, is returned
/// separately; ingest relabels from the model regardless.
inline CsvTrace read_trace_csv(std::istream& is) {
  CsvTrace out;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw Error(ErrorCode::parse_error, "line 1: empty trace file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_commas(line);
  if (header.size() < 2 || header.front() != "t") {
    throw Error(ErrorCode::parse_error, "line 1: header must start with 't' followed by state columns");
  }
  const bool has_mode = header.back() == "mode";
  const std::size_t n = header.size() - 1 - (has_mode ? 1 : 0);
  if (n == 0) throw Error(ErrorCode::parse_error, "line 1: no state columns");

  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::dimension_drift, "line " + std::to_string(lineno) + ": expected " +
                                                  std::to_string(header.size()) + " columns, got " +
                                                  std::to_string(cells.size()));
    }
    TraceRow row;
    row.t = detail::parse_number(cells[0], lineno);
    row.x.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) row.x(static_cast<Eigen::Index>(i)) = detail::parse_number(cells[i + 1], lineno);
    out.rows.push_back(std::move(row));
    if (has_mode) out.modes.emplace_back(cells.back());
  }
  return out;
}

inline CsvTrace read_trace_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  return read_trace_csv(is);
}

}  // namespace piha
