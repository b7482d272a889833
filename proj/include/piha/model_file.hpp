#pragma once

// Line-oriented model files.
//
//   # comment
//   dim 3
//   param w = 2*pi*50
//   horizon 0.04
//   mode Name            A <row> (dim times), b <row>, inv <row> <= <rhs> ...
//   end
//   transition S -> T    guard <row> <= <rhs> ... (no guard: S inv & T inv)
//   end
//   transitions auto     derive from invariants sharing one facet
//   ics / region         row <coeffs> <= <rhs>, lo <values>, hi <values>
//   end
//   spec Name            avoid [mode M], then row lines for that region
//   end
//   config reach.dt 1e-4
//
// Every whitespace-separated token is one arithmetic expression over
// numbers, earlier params and pi.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "piha/checker.hpp"
#include "piha/error.hpp"
#include "piha/flowpipe.hpp"
#include "piha/geometry.hpp"
#include "piha/model.hpp"
#include "piha/sim.hpp"
#include "piha/trace_io.hpp"

namespace piha {

struct ModelFile {
  PIHA piha;
  std::vector<SafetySpec> specs;
  ReachConfig reach;
  RefineConfig refine;
  IntegratorConfig sim;
  std::vector<std::pair<std::string, double>> params;

  const SafetySpec* find_spec(std::string_view name) const {
    for (const auto& s : specs) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
};

namespace detail {

struct Token {
  std::string_view text;
  std::size_t col = 0;  // 1-based
};

[[noreturn]] inline void fail_at(std::size_t line, std::size_t col, const std::string& msg) {
  throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '#') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

// Recursive descent: expr := term (('+'|'-') term)*, term := unary (('*'|'/') unary)*,
// unary := '-' unary | '+' unary | power, power := atom ('^' unary)?
class ExprParser {
 public:
  ExprParser(std::string_view s, const std::map<std::string, double, std::less<>>& vars, std::size_t line, std::size_t col)
      : s_(s), vars_(vars), line_(line), col_(col) {}

  double parse() {
    const double v = expr();
    if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    if (!std::isfinite(v)) error("expression '" + std::string(s_) + "' is not finite");
    return v;
  }

 private:
  std::string_view s_;
  const std::map<std::string, double, std::less<>>& vars_;
  std::size_t line_;
  std::size_t col_;
  std::size_t pos_ = 0;

  [[noreturn]] void error(const std::string& msg) const { fail_at(line_, col_ + pos_, msg); }

  bool eat(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double expr() {
    double v = term();
    while (pos_ < s_.size()) {
      if (eat('+')) v += term();
      else if (eat('-')) v -= term();
      else break;
    }
    return v;
  }

  double term() {
    double v = unary();
    while (pos_ < s_.size()) {
      if (eat('*')) v *= unary();
      else if (eat('/')) v /= unary();
      else break;
    }
    return v;
  }

  double unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }

  double power() {
    const double base = atom();
    if (eat('^')) return std::pow(base, unary());
    return base;
  }

  double atom() {
    if (pos_ >= s_.size()) error("expression ends early");
    if (eat('(')) {
      const double v = expr();
      if (!eat(')')) error("missing ')'");
      return v;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const auto name = s_.substr(start, pos_ - start);
      if (name == "pi") return std::numbers::pi;
      const auto it = vars_.find(name);
      if (it == vars_.end()) {
        pos_ = start;
        error("unknown name '" + std::string(name) + "'");
      }
      return it->second;
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  double number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    const std::string text(s_.substr(start, pos_ - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size()) {
      pos_ = start;
      error("malformed number '" + text + "'");
    }
    return v;
  }
};

enum class Block { none, mode, transition, ics, region, spec };

struct PendingTransition {
  std::string source;
  std::string target;
  std::vector<Halfspace> guard;
  std::size_t line = 0;
};

struct PendingAvoid {
  std::optional<std::string> mode;
  std::vector<Halfspace> rows;
};

struct PendingSpec {
  std::string name;
  std::vector<PendingAvoid> avoid;
  std::size_t line = 0;
};

class ModelParser {
 public:
  ModelFile parse(std::string_view text) {
    std::size_t lineno = 0;
    std::size_t start = 0;
    bool any = false;
    while (start <= text.size()) {
      const auto nl = text.find('\n', start);
      auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      ++lineno;
      const auto toks = tokenize(line);
      if (!toks.empty()) {
        any = true;
        statement(lineno, toks);
      }
      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
    if (!any) fail_at(1, 1, "empty model");
    if (block_ != Block::none) fail_at(block_line_, 1, "block is not closed with 'end'");
    return finish(lineno);
  }

 private:
  std::map<std::string, double, std::less<>> vars_;
  ModelFile out_;
  std::optional<std::size_t> dim_;
  std::optional<double> horizon_;
  Block block_ = Block::none;
  std::size_t block_line_ = 0;

  Mode mode_;
  std::vector<Vector> a_rows_;
  std::optional<Vector> b_;
  std::vector<Halfspace> rows_;
  PendingTransition trans_;
  PendingSpec spec_;

  std::vector<PendingTransition> transitions_;
  bool auto_transitions_ = false;
  std::size_t auto_line_ = 0;
  std::optional<Polytope> ics_;
  std::optional<Polytope> region_;
  std::size_t ics_line_ = 0;
  std::size_t region_line_ = 0;
  std::map<std::string, std::size_t, std::less<>> mode_lines_;
  std::vector<std::pair<std::string, std::size_t>> config_seen_;

  double eval(std::size_t line, const Token& t) const { return ExprParser(t.text, vars_, line, t.col).parse(); }

  std::size_t need_dim(std::size_t line, const Token& t) const {
    if (!dim_) fail_at(line, t.col, "'dim' must come before '" + std::string(t.text) + "'");
    return *dim_;
  }

  static void expect_count(std::size_t line, const std::vector<Token>& toks, std::size_t n) {
    if (toks.size() != n) {
      fail_at(line, toks.size() > n ? toks[n].col : toks.back().col + toks.back().text.size(),
              "'" + std::string(toks[0].text) + "' takes " + std::to_string(n - 1) + " argument(s)");
    }
  }

  static bool valid_id(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
  }

  Vector values(std::size_t line, const std::vector<Token>& toks, std::size_t from, std::size_t n, const std::string& what) {
    if (toks.size() - from != n) {
      fail_at(line, toks[0].col,
              what + " has " + std::to_string(toks.size() - from) + " entries, expected " + std::to_string(n));
    }
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = eval(line, toks[from + i]);
    return v;
  }

  // <kw> c1 .. cn <= rhs
  Halfspace constraint(std::size_t line, const std::vector<Token>& toks, const std::string& what) {
    const std::size_t n = need_dim(line, toks[0]);
    std::size_t le = 0;
    for (std::size_t i = 1; i < toks.size(); ++i) {
      if (toks[i].text == "<=") le = i;
    }
    if (le == 0 || le + 2 != toks.size()) fail_at(line, toks[0].col, what + " must read '<coefficients> <= <rhs>'");
    if (le - 1 != n) {
      fail_at(line, toks[1].col, what + " has " + std::to_string(le - 1) + " coefficients, expected " + std::to_string(n));
    }
    Vector a(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) a(static_cast<Eigen::Index>(i)) = eval(line, toks[1 + i]);
    return {a, eval(line, toks[le + 1])};
  }

  void open(Block b, std::size_t line) {
    block_ = b;
    block_line_ = line;
    rows_.clear();
  }

  void statement(std::size_t line, const std::vector<Token>& toks) {
    const auto kw = toks[0].text;
    switch (block_) {
      case Block::mode: return mode_line(line, toks);
      case Block::transition: return transition_line(line, toks);
      case Block::ics:
      case Block::region: return region_line(line, toks);
      case Block::spec: return spec_line(line, toks);
      case Block::none: break;
    }

    if (kw == "dim") {
      expect_count(line, toks, 2);
      if (dim_) fail_at(line, 1, "'dim' given twice");
      const double d = eval(line, toks[1]);
      if (!(d >= 1.0) || d != std::floor(d)) fail_at(line, toks[1].col, "dimension must be a positive integer");
      dim_ = static_cast<std::size_t>(d);
    } else if (kw == "param") {
      if (toks.size() != 4 || toks[2].text != "=") fail_at(line, toks[0].col, "expected 'param <name> = <expr>'");
      if (!valid_id(toks[1].text) || toks[1].text == "pi") fail_at(line, toks[1].col, "invalid parameter name");
      if (vars_.count(toks[1].text)) fail_at(line, toks[1].col, "parameter '" + std::string(toks[1].text) + "' redefined");
      const double v = eval(line, toks[3]);
      vars_.emplace(std::string(toks[1].text), v);
      out_.params.emplace_back(std::string(toks[1].text), v);
    } else if (kw == "horizon") {
      expect_count(line, toks, 2);
      if (horizon_) fail_at(line, 1, "'horizon' given twice");
      horizon_ = eval(line, toks[1]);
    } else if (kw == "mode") {
      expect_count(line, toks, 2);
      need_dim(line, toks[0]);
      if (!valid_id(toks[1].text)) fail_at(line, toks[1].col, "invalid mode name");
      if (mode_lines_.count(toks[1].text)) fail_at(line, toks[1].col, "mode '" + std::string(toks[1].text) + "' declared twice");
      mode_ = Mode{std::string(toks[1].text), {}, Polytope(*dim_)};
      mode_lines_.emplace(mode_.id, line);
      a_rows_.clear();
      b_.reset();
      open(Block::mode, line);
    } else if (kw == "transition") {
      if (toks.size() != 4 || toks[2].text != "->") fail_at(line, toks[0].col, "expected 'transition <source> -> <target>'");
      need_dim(line, toks[0]);
      trans_ = {std::string(toks[1].text), std::string(toks[3].text), {}, line};
      open(Block::transition, line);
    } else if (kw == "transitions") {
      expect_count(line, toks, 2);
      if (toks[1].text != "auto") fail_at(line, toks[1].col, "only 'transitions auto' is supported");
      auto_transitions_ = true;
      auto_line_ = line;
    } else if (kw == "ics" || kw == "region") {
      expect_count(line, toks, 1);
      need_dim(line, toks[0]);
      const bool ics = kw == "ics";
      if (ics ? ics_.has_value() : region_.has_value()) fail_at(line, 1, "'" + std::string(kw) + "' given twice");
      (ics ? ics_line_ : region_line_) = line;
      lo_.reset();
      hi_.reset();
      open(ics ? Block::ics : Block::region, line);
    } else if (kw == "spec") {
      expect_count(line, toks, 2);
      need_dim(line, toks[0]);
      if (!valid_id(toks[1].text)) fail_at(line, toks[1].col, "invalid spec name");
      for (const auto& s : out_.specs) {
        if (s.name == toks[1].text) fail_at(line, toks[1].col, "spec '" + s.name + "' declared twice");
      }
      spec_ = {std::string(toks[1].text), {}, line};
      open(Block::spec, line);
    } else if (kw == "config") {
      expect_count(line, toks, 3);
      config(line, toks[1], toks[2]);
    } else if (kw == "end") {
      fail_at(line, toks[0].col, "'end' outside a block");
    } else {
      fail_at(line, toks[0].col, "unknown statement '" + std::string(kw) + "'");
    }
  }

  void mode_line(std::size_t line, const std::vector<Token>& toks) {
    const auto kw = toks[0].text;
    const std::size_t n = *dim_;
    const std::string where = "mode '" + mode_.id + "': ";
    if (kw == "A") {
      if (a_rows_.size() == n) fail_at(line, toks[0].col, where + "more than " + std::to_string(n) + " A rows");
      a_rows_.push_back(values(line, toks, 1, n, where + "A row"));
    } else if (kw == "b") {
      if (b_) fail_at(line, toks[0].col, where + "'b' given twice");
      b_ = values(line, toks, 1, n, where + "b");
    } else if (kw == "inv") {
      rows_.push_back(constraint(line, toks, where + "invariant row"));
    } else if (kw == "end") {
      expect_count(line, toks, 1);
      if (a_rows_.size() != n) {
        fail_at(line, 1, where + "has " + std::to_string(a_rows_.size()) + " A rows, expected " + std::to_string(n));
      }
      Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) a.row(static_cast<Eigen::Index>(i)) = a_rows_[i].transpose();
      mode_.dynamics = {a, b_ ? *b_ : Vector::Zero(static_cast<Eigen::Index>(n)).eval()};
      mode_.invariant = Polytope(n, rows_);
      out_.piha.modes.push_back(std::move(mode_));
      block_ = Block::none;
    } else {
      fail_at(line, toks[0].col, where + "unknown key '" + std::string(kw) + "'");
    }
  }

  void transition_line(std::size_t line, const std::vector<Token>& toks) {
    const auto kw = toks[0].text;
    if (kw == "guard") {
      trans_.guard.push_back(constraint(line, toks, "guard row"));
    } else if (kw == "end") {
      expect_count(line, toks, 1);
      transitions_.push_back(std::move(trans_));
      block_ = Block::none;
    } else {
      fail_at(line, toks[0].col, "transition: unknown key '" + std::string(kw) + "'");
    }
  }

  std::optional<Vector> lo_;
  std::optional<Vector> hi_;

  void region_line(std::size_t line, const std::vector<Token>& toks) {
    const auto kw = toks[0].text;
    const bool ics = block_ == Block::ics;
    const std::string where = ics ? "ics: " : "region: ";
    if (kw == "row") {
      rows_.push_back(constraint(line, toks, where + "row"));
    } else if (kw == "lo" || kw == "hi") {
      auto& slot = kw == "lo" ? lo_ : hi_;
      if (slot) fail_at(line, toks[0].col, where + "'" + std::string(kw) + "' given twice");
      slot = values(line, toks, 1, *dim_, where + std::string(kw));
    } else if (kw == "end") {
      expect_count(line, toks, 1);
      if (lo_.has_value() != hi_.has_value()) fail_at(line, 1, where + "'lo' and 'hi' must be given together");
      std::vector<Halfspace> rows = rows_;
      if (lo_) {
        const auto b = Polytope::box(*lo_, *hi_);
        rows.insert(rows.end(), b.constraints().begin(), b.constraints().end());
      }
      (ics ? ics_ : region_) = Polytope(*dim_, std::move(rows));
      block_ = Block::none;
    } else {
      fail_at(line, toks[0].col, where + "unknown key '" + std::string(kw) + "'");
    }
  }

  void spec_line(std::size_t line, const std::vector<Token>& toks) {
    const auto kw = toks[0].text;
    const std::string where = "spec '" + spec_.name + "': ";
    if (kw == "avoid") {
      PendingAvoid a;
      if (toks.size() == 3 && toks[1].text == "mode") {
        a.mode = std::string(toks[2].text);
      } else if (toks.size() != 1) {
        fail_at(line, toks[1].col, where + "expected 'avoid' or 'avoid mode <name>'");
      }
      spec_.avoid.push_back(std::move(a));
    } else if (kw == "row") {
      if (spec_.avoid.empty()) fail_at(line, toks[0].col, where + "'row' before any 'avoid'");
      spec_.avoid.back().rows.push_back(constraint(line, toks, where + "row"));
    } else if (kw == "end") {
      expect_count(line, toks, 1);
      SafetySpec s{spec_.name, {}};
      for (auto& a : spec_.avoid) s.avoid.push_back({a.mode, Polytope(*dim_, std::move(a.rows))});
      out_.specs.push_back(std::move(s));
      spec_lines_.push_back(spec_.line);
      block_ = Block::none;
    } else {
      fail_at(line, toks[0].col, where + "unknown key '" + std::string(kw) + "'");
    }
  }

  std::vector<std::size_t> spec_lines_;

  template <class Real, class Count>
  static bool integrator_key(std::string_view k, IntegratorConfig& c, Real real, Count count) {
    if (k == "rel_tol") c.rel_tol = real();
    else if (k == "abs_tol") c.abs_tol = real();
    else if (k == "h_init") c.h_init = real();
    else if (k == "h_min") c.h_min = real();
    else if (k == "h_max") c.h_max = real();
    else if (k == "event_tol") c.event_tol = real();
    else if (k == "max_events") c.max_events = count();
    else return false;
    return true;
  }

  void config(std::size_t line, const Token& key, const Token& value) {
    for (const auto& [k, l] : config_seen_) {
      if (k == key.text) fail_at(line, key.col, "config key '" + k + "' already set on line " + std::to_string(l));
    }
    config_seen_.emplace_back(std::string(key.text), line);
    auto real = [&] { return eval(line, value); };
    auto count = [&] {
      const double v = real();
      if (!(v >= 0.0) || v != std::floor(v)) fail_at(line, value.col, "expected a non-negative integer");
      return static_cast<std::size_t>(v);
    };
    auto& r = out_.reach;
    auto& s = out_.sim;
    const auto k = key.text;
    if (k == "reach.template" && !dim_) fail_at(line, key.col, "'dim' must come before reach.template");
    if (k == "reach.dt") r.dt = real();
    else if (k == "reach.max_segments") r.max_segments = count();
    else if (k == "reach.bloat_factor") r.bloat_factor = real();
    else if (k == "reach.substeps") r.substeps = count();
    else if (k == "reach.subsumption") r.subsumption = count() != 0;
    else if (k == "reach.subsumption_tol") r.subsumption_tol = real();
    else if (k == "reach.guard_chunk") r.guard_chunk = count();
    else if (k == "reach.template") {
      if (value.text == "box") r.directions = box_template(*dim_);
      else if (value.text == "octagonal") r.directions.clear();
      else fail_at(line, value.col, "template must be 'box' or 'octagonal'");
    } else if (k == "refine.max_depth") out_.refine.max_depth = count();
    else if (k == "refine.rule") {
      if (value.text == "widest_axis") out_.refine.rule = SplitRule::widest_axis;
      else if (value.text == "round_robin") out_.refine.rule = SplitRule::round_robin;
      else fail_at(line, value.col, "rule must be 'widest_axis' or 'round_robin'");
    } else if (k.starts_with("sim.") && integrator_key(k.substr(4), s, real, count)) {
    } else if (k.starts_with("reach.sim.") && integrator_key(k.substr(10), r.integrator, real, count)) {
    }
    else fail_at(line, key.col, "unknown config key '" + std::string(k) + "'");
  }

  std::size_t line_of(const Diagnostic& d) const {
    if (const auto it = mode_lines_.find(d.element); it != mode_lines_.end()) return it->second;
    if (d.element == "ics" || d.element == "ics/AR") return ics_line_;
    if (d.element == "analysis_region") return region_line_;
    for (const auto& t : transitions_) {
      if (t.source + "->" + t.target == d.element) return t.line;
    }
    for (std::size_t i = 0; i < out_.specs.size(); ++i) {
      if (out_.specs[i].name == d.element) return spec_lines_[i];
    }
    return auto_transitions_ ? auto_line_ : 1;
  }

  ModelFile finish(std::size_t last_line) {
    if (!dim_) fail_at(1, 1, "missing 'dim'");
    if (!horizon_) fail_at(last_line, 1, "missing 'horizon'");
    if (!ics_) fail_at(last_line, 1, "missing 'ics' block");
    if (!region_) fail_at(last_line, 1, "missing 'region' block");
    if (auto_transitions_ && !transitions_.empty()) {
      fail_at(auto_line_, 1, "'transitions auto' cannot be combined with explicit transitions");
    }
    auto& h = out_.piha;
    h.dim = *dim_;
    h.horizon = *horizon_;
    h.ics = *ics_;
    h.analysis_region = *region_;
    for (const auto& t : transitions_) {
      Polytope guard(h.dim, t.guard);
      if (t.guard.empty()) {
        const auto s = h.find_mode(t.source);
        const auto g = h.find_mode(t.target);
        if (s && g) guard = intersect(h.modes[*s].invariant, h.modes[*g].invariant);
      }
      h.transitions.push_back({t.source, t.target, std::move(guard)});
    }
    if (auto_transitions_) h.transitions = derive_transitions(h.modes, h.analysis_region);

    auto diags = validate_piha(h);
    for (const auto& s : out_.specs) {
      const auto more = validate_spec(h, s);
      diags.insert(diags.end(), more.begin(), more.end());
    }
    if (!diags.empty()) {
      std::string msg;
      for (const auto& d : diags) {
        if (!msg.empty()) msg += "; ";
        msg += "line " + std::to_string(line_of(d)) + ": " + d.rule + " (" + d.element + "): " + d.message;
      }
      throw Error(ErrorCode::invalid_argument, msg);
    }
    out_.reach.validate();
    out_.sim.validate();
    return std::move(out_);
  }
};

}  // namespace detail

inline ModelFile parse_model_file(std::string_view text) { return detail::ModelParser().parse(text); }

inline ModelFile load_model_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_model_file(ss.str());
}

namespace detail {

inline void write_row(std::ostream& os, const char* kw, const Halfspace& h) {
  os << "  " << kw;
  for (Eigen::Index i = 0; i < h.normal.size(); ++i) os << ' ' << format_double(h.normal(i));
  os << " <= " << format_double(h.offset) << '\n';
}

}  // namespace detail

/// Writes a model with every value numeric, so parameters are not kept.
/// Transitions are always written explicitly.
inline std::string serialize_model(const ModelFile& m) {
  std::ostringstream os;
  const auto& h = m.piha;
  os << "dim " << h.dim << '\n';
  os << "horizon " << format_double(h.horizon) << '\n';
  for (const auto& md : h.modes) {
    os << "\nmode " << md.id << '\n';
    for (Eigen::Index r = 0; r < md.dynamics.A.rows(); ++r) {
      os << "  A";
      for (Eigen::Index c = 0; c < md.dynamics.A.cols(); ++c) os << ' ' << format_double(md.dynamics.A(r, c));
      os << '\n';
    }
    os << "  b";
    for (Eigen::Index i = 0; i < md.dynamics.b.size(); ++i) os << ' ' << format_double(md.dynamics.b(i));
    os << '\n';
    for (const auto& c : md.invariant.constraints()) detail::write_row(os, "inv", c);
    os << "end\n";
  }
  for (const auto& t : h.transitions) {
    os << "\ntransition " << t.source << " -> " << t.target << '\n';
    for (const auto& c : t.guard.constraints()) detail::write_row(os, "guard", c);
    os << "end\n";
  }
  os << "\nics\n";
  for (const auto& c : h.ics.constraints()) detail::write_row(os, "row", c);
  os << "end\n\nregion\n";
  for (const auto& c : h.analysis_region.constraints()) detail::write_row(os, "row", c);
  os << "end\n";
  for (const auto& s : m.specs) {
    os << "\nspec " << s.name << '\n';
    for (const auto& a : s.avoid) {
      os << "  avoid";
      if (a.mode) os << " mode " << *a.mode;
      os << '\n';
      for (const auto& c : a.region.constraints()) detail::write_row(os, "row", c);
    }
    os << "end\n";
  }

  const auto& r = m.reach;
  os << '\n';
  os << "config reach.dt " << format_double(r.dt) << '\n';
  os << "config reach.max_segments " << r.max_segments << '\n';
  os << "config reach.bloat_factor " << format_double(r.bloat_factor) << '\n';
  os << "config reach.substeps " << r.substeps << '\n';
  os << "config reach.subsumption " << (r.subsumption ? 1 : 0) << '\n';
  os << "config reach.subsumption_tol " << format_double(r.subsumption_tol) << '\n';
  os << "config reach.guard_chunk " << r.guard_chunk << '\n';
  if (!r.directions.empty()) os << "config reach.template box\n";
  auto integrator = [&os](const char* prefix, const IntegratorConfig& c) {
    os << "config " << prefix << "rel_tol " << format_double(c.rel_tol) << '\n';
    os << "config " << prefix << "abs_tol " << format_double(c.abs_tol) << '\n';
    os << "config " << prefix << "h_init " << format_double(c.h_init) << '\n';
    os << "config " << prefix << "h_min " << format_double(c.h_min) << '\n';
    os << "config " << prefix << "h_max " << format_double(c.h_max) << '\n';
    os << "config " << prefix << "event_tol " << format_double(c.event_tol) << '\n';
    os << "config " << prefix << "max_events " << c.max_events << '\n';
  };
  integrator("reach.sim.", r.integrator);
  os << "config refine.max_depth " << m.refine.max_depth << '\n';
  os << "config refine.rule " << (m.refine.rule == SplitRule::widest_axis ? "widest_axis" : "round_robin") << '\n';
  integrator("sim.", m.sim);
  return os.str();
}

}  // namespace piha
