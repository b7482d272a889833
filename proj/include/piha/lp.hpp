#pragma once

// Dense two-phase primal simplex for the small LPs the polytope code needs:
//
//   maximize c.x  subject to  A x <= b,  x free.
//
// Problems here have a handful of variables and a few dozen rows, so a
// tableau with Bland's anti-cycling rule is plenty.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "piha/error.hpp"

namespace piha::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
};

namespace detail {

constexpr double pivot_eps = 1e-11;
constexpr double cost_eps = 1e-11;
constexpr double feas_eps = 1e-9;

class Tableau {
 public:
  // Rows 0..m-1 are constraints, row m is the phase-2 objective, row m+1
  // the phase-1 objective. Last column is the right-hand side.
  Tableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), t_(Eigen::MatrixXd::Zero(rows + 2, cols + 1)), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return t_(r, c); }
  double at(std::size_t r, std::size_t c) const { return t_(r, c); }
  double& rhs(std::size_t r) { return t_(r, n_); }
  double rhs(std::size_t r) const { return t_(r, n_); }
  std::size_t& basic(std::size_t r) { return basis_[r]; }
  std::size_t basic(std::size_t r) const { return basis_[r]; }

  void pivot(std::size_t row, std::size_t col) {
    const double p = t_(row, col);
    t_.row(row) /= p;
    for (Eigen::Index r = 0; r < t_.rows(); ++r) {
      if (r == static_cast<Eigen::Index>(row)) continue;
      const double f = t_(r, col);
      if (f != 0.0) t_.row(r) -= f * t_.row(row);
    }
    basis_[row] = col;
  }

  // Optimizes the objective stored in `obj_row` over columns [0, allowed).
  // Returns false when the problem is unbounded in that objective.
  bool optimize(std::size_t obj_row, std::size_t allowed) {
    const std::size_t max_iter = 50 * (m_ + n_) + 1000;
    for (std::size_t it = 0; it < max_iter; ++it) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (t_(obj_row, j) < -cost_eps) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return true;

      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a <= pivot_eps) continue;
        const double ratio = rhs(i) / a;
        if (ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && leave < m_ && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
    }
    throw Error(ErrorCode::solver_failure, "simplex iteration limit reached");
  }

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

 private:
  std::size_t m_;
  std::size_t n_;
  Eigen::MatrixXd t_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

/// Solves max c.x s.t. A x <= b with x unrestricted in sign.
/// Throws Error(solver_failure) when the simplex does not converge or the
/// returned point fails an a-posteriori feasibility check.
inline Result maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const auto n = static_cast<std::size_t>(c.size());
  const auto m = static_cast<std::size_t>(A.rows());
  if (static_cast<std::size_t>(A.cols()) != n || static_cast<std::size_t>(b.size()) != m) {
    throw Error(ErrorCode::dimension_mismatch, "lp: inconsistent problem dimensions");
  }

  Result res;
  if (m == 0) {
    if (c.norm() > 0.0) {
      res.status = Status::unbounded;
      return res;
    }
    res.status = Status::optimal;
    res.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    return res;
  }

  // Columns: x+ (n), x- (n), slack (m), artificial (one per negative rhs).
  std::vector<std::size_t> art_rows;
  for (std::size_t i = 0; i < m; ++i) {
    if (b(static_cast<Eigen::Index>(i)) < 0.0) art_rows.push_back(i);
  }
  const std::size_t n_struct = 2 * n + m;
  const std::size_t n_cols = n_struct + art_rows.size();
  detail::Tableau tab(m, n_cols);

  std::size_t next_art = n_struct;
  for (std::size_t i = 0; i < m; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double sign = b(ii) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = A(ii, static_cast<Eigen::Index>(j));
      tab.at(i, j) = sign * a;
      tab.at(i, n + j) = -sign * a;
    }
    tab.at(i, 2 * n + i) = sign;
    tab.rhs(i) = sign * b(ii);
    if (sign < 0.0) {
      tab.at(i, next_art) = 1.0;
      tab.basic(i) = next_art++;
    } else {
      tab.basic(i) = 2 * n + i;
    }
  }

  // Phase-2 objective row holds -c (maximization in reduced-cost form).
  for (std::size_t j = 0; j < n; ++j) {
    const double cj = c(static_cast<Eigen::Index>(j));
    tab.at(m, j) = -cj;
    tab.at(m, n + j) = cj;
  }

  if (!art_rows.empty()) {
    // Phase 1: maximize -sum(artificials).
    for (std::size_t j = n_struct; j < n_cols; ++j) tab.at(m + 1, j) = 1.0;
    for (std::size_t i : art_rows) {
      for (std::size_t j = 0; j <= n_cols; ++j) tab.at(m + 1, j) -= tab.at(i, j);
    }
    tab.optimize(m + 1, n_cols);
    if (tab.rhs(m + 1) < -detail::feas_eps * std::max<double>(1.0, static_cast<double>(m))) {
      res.status = Status::infeasible;
      return res;
    }
    // Drive remaining zero-level artificials out of the basis.
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basic(i) < n_struct) continue;
      for (std::size_t j = 0; j < n_struct; ++j) {
        if (std::abs(tab.at(i, j)) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  if (!tab.optimize(m, n_struct)) {
    res.status = Status::unbounded;
    return res;
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_cols));
  for (std::size_t i = 0; i < m; ++i) y(static_cast<Eigen::Index>(tab.basic(i))) = tab.rhs(i);
  res.x = y.head(static_cast<Eigen::Index>(n)) - y.segment(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  res.value = c.dot(res.x);
  res.status = Status::optimal;

  const Eigen::VectorXd viol = A * res.x - b;
  const double scale = 1.0 + res.x.lpNorm<Eigen::Infinity>();
  if (viol.size() > 0 && viol.maxCoeff() > 1e-7 * scale) {
    throw Error(ErrorCode::solver_failure,
                "lp: returned point violates a constraint by " + std::to_string(viol.maxCoeff()));
  }
  return res;
}

}  // namespace piha::lp
