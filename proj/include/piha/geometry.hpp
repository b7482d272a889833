#pragma once

// Convex polytopes in halfspace form and the LP-backed operations used by
// the reachability and checking code. Polytope values are immutable; every
// free function here is pure.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "piha/error.hpp"
#include "piha/lp.hpp"

namespace piha {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// normal . x <= offset
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

class Polytope {
 public:
  /// The universe polytope (all of R^dim).
  explicit Polytope(std::size_t dim = 0) : dim_(dim) {}

  Polytope(std::size_t dim, std::vector<Halfspace> constraints)
      : dim_(dim), constraints_(std::move(constraints)) {
    for (const auto& h : constraints_) {
      if (static_cast<std::size_t>(h.normal.size()) != dim_) {
        throw Error(ErrorCode::dimension_mismatch,
                    "constraint normal has length " + std::to_string(h.normal.size()) +
                        ", polytope dimension is " + std::to_string(dim_));
      }
      if (!h.normal.allFinite() || !std::isfinite(h.offset)) {
        throw Error(ErrorCode::invalid_argument, "constraint has non-finite entries");
      }
    }
  }

  static Polytope universe(std::size_t dim) { return Polytope(dim); }

  static Polytope box(const Vector& lo, const Vector& hi) {
    if (lo.size() != hi.size()) throw Error(ErrorCode::dimension_mismatch, "box bounds differ in length");
    const auto d = static_cast<std::size_t>(lo.size());
    std::vector<Halfspace> hs;
    hs.reserve(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
      Vector e = Vector::Zero(lo.size());
      e(static_cast<Eigen::Index>(i)) = 1.0;
      hs.push_back({e, hi(static_cast<Eigen::Index>(i))});
      hs.push_back({-e, -lo(static_cast<Eigen::Index>(i))});
    }
    return Polytope(d, std::move(hs));
  }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Halfspace>& constraints() const noexcept { return constraints_; }
  std::size_t size() const noexcept { return constraints_.size(); }
  bool is_universe() const noexcept { return constraints_.empty(); }

  /// Copy with extra constraints appended.
  Polytope with(std::span<const Halfspace> extra) const {
    std::vector<Halfspace> hs = constraints_;
    hs.insert(hs.end(), extra.begin(), extra.end());
    return Polytope(dim_, std::move(hs));
  }

  Polytope with(const Halfspace& extra) const { return with(std::span<const Halfspace>(&extra, 1)); }

  Matrix normals() const {
    Matrix a(static_cast<Eigen::Index>(constraints_.size()), static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < constraints_.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = constraints_[i].normal.transpose();
    return a;
  }

  Vector offsets() const {
    Vector b(static_cast<Eigen::Index>(constraints_.size()));
    for (std::size_t i = 0; i < constraints_.size(); ++i) b(static_cast<Eigen::Index>(i)) = constraints_[i].offset;
    return b;
  }

 private:
  std::size_t dim_;
  std::vector<Halfspace> constraints_;
};

inline constexpr double lp_tolerance = 1e-9;

namespace detail {

inline void check_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(what) + ": dimensions " + std::to_string(a) + " and " + std::to_string(b));
  }
}

// Unit-normal rows; zero rows are kept as 0.x <= offset (decided below).
struct Normalized {
  Matrix a;
  Vector b;
  bool trivially_infeasible = false;
};

inline Normalized normalize(const Polytope& p) {
  Normalized out;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& h = p.constraints()[i];
    if (h.normal.norm() == 0.0) {
      if (h.offset < -lp_tolerance) out.trivially_infeasible = true;
    } else {
      keep.push_back(i);
    }
  }
  out.a.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(p.dim()));
  out.b.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto& h = p.constraints()[keep[r]];
    const double n = h.normal.norm();
    out.a.row(static_cast<Eigen::Index>(r)) = h.normal.transpose() / n;
    out.b(static_cast<Eigen::Index>(r)) = h.offset / n;
  }
  return out;
}

}  // namespace detail

struct EmptinessResult {
  bool empty = true;
  std::optional<Vector> witness;
};

/// Decides emptiness by maximizing the uniform slack t of the normalized
/// system a_i.x + t <= b_i (capped at t <= 1). Nonempty iff t* >= -1e-9.
inline EmptinessResult is_empty(const Polytope& p) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  if (p.is_universe()) return {false, Vector::Zero(d)};
  const auto nrm = detail::normalize(p);
  if (nrm.trivially_infeasible) return {true, std::nullopt};
  const Eigen::Index m = nrm.a.rows();
  if (m == 0) return {false, Vector::Zero(d)};

  Matrix a = Matrix::Zero(m + 1, d + 1);
  Vector b(m + 1);
  a.topLeftCorner(m, d) = nrm.a;
  a.block(0, d, m, 1).setOnes();
  b.head(m) = nrm.b;
  a(m, d) = 1.0;
  b(m) = 1.0;
  Vector c = Vector::Zero(d + 1);
  c(d) = 1.0;

  const auto r = lp::maximize(c, a, b);
  if (r.status != lp::Status::optimal) {
    throw Error(ErrorCode::solver_failure, "emptiness LP did not reach an optimum");
  }
  if (r.x(d) < -lp_tolerance) return {true, std::nullopt};
  return {false, r.x.head(d)};
}

inline Polytope intersect(const Polytope& p, const Polytope& q) {
  detail::check_dim(p.dim(), q.dim(), "intersect");
  return p.with(std::span<const Halfspace>(q.constraints()));
}

inline bool contains_point(const Polytope& p, const Vector& x, double tol) {
  detail::check_dim(p.dim(), static_cast<std::size_t>(x.size()), "contains_point");
  if (tol < 0.0) throw Error(ErrorCode::invalid_argument, "negative tolerance");
  for (const auto& h : p.constraints()) {
    if (h.normal.dot(x) > h.offset + tol * h.normal.norm()) return false;
  }
  return true;
}

/// max d.x over p; nullopt when unbounded. Throws empty_polytope when p is empty.
inline std::optional<double> support(const Polytope& p, const Vector& direction) {
  detail::check_dim(p.dim(), static_cast<std::size_t>(direction.size()), "support");
  const auto nrm = detail::normalize(p);
  if (nrm.trivially_infeasible) throw Error(ErrorCode::empty_polytope, "support of an empty polytope");
  const auto r = lp::maximize(direction, nrm.a, nrm.b);
  if (r.status == lp::Status::infeasible) throw Error(ErrorCode::empty_polytope, "support of an empty polytope");
  if (r.status == lp::Status::unbounded) return std::nullopt;
  return r.value;
}

/// Axis directions +-e_i.
inline std::vector<Vector> box_template(std::size_t dim) {
  std::vector<Vector> dirs;
  for (std::size_t i = 0; i < dim; ++i) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(dim));
    e(static_cast<Eigen::Index>(i)) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  return dirs;
}

/// Box directions plus every +-e_i +-e_j with i < j.
inline std::vector<Vector> octagonal_template(std::size_t dim) {
  auto dirs = box_template(dim);
  const auto d = static_cast<Eigen::Index>(dim);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          Vector v = Vector::Zero(d);
          v(i) = si;
          v(j) = sj;
          dirs.push_back(v);
        }
      }
    }
  }
  return dirs;
}

inline Polytope template_hull(std::span<const Vector> points, std::span<const Vector> directions) {
  if (points.empty()) throw Error(ErrorCode::empty_input, "template_hull needs at least one point");
  if (directions.empty()) throw Error(ErrorCode::empty_input, "template_hull needs at least one direction");
  const auto dim = static_cast<std::size_t>(points.front().size());
  for (const auto& p : points) detail::check_dim(dim, static_cast<std::size_t>(p.size()), "template_hull point");
  std::vector<Halfspace> hs;
  hs.reserve(directions.size());
  for (const auto& d : directions) {
    detail::check_dim(dim, static_cast<std::size_t>(d.size()), "template_hull direction");
    if (d.norm() == 0.0) throw Error(ErrorCode::zero_direction, "template direction is the zero vector");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::max(best, d.dot(p));
    hs.push_back({d, best});
  }
  return Polytope(dim, std::move(hs));
}

inline Polytope bloat(const Polytope& p, double eps) {
  if (eps < 0.0 || !std::isfinite(eps)) throw Error(ErrorCode::negative_bloat, "bloat amount must be finite and >= 0");
  std::vector<Halfspace> hs = p.constraints();
  for (auto& h : hs) {
    const double n = h.normal.norm();
    if (n == 0.0) throw Error(ErrorCode::zero_direction, "cannot bloat a constraint with a zero normal");
    h.offset += eps * n;
  }
  return Polytope(p.dim(), std::move(hs));
}

/// p is contained in q (within tol in q's normalized units). p must be nonempty.
inline bool is_subset(const Polytope& p, const Polytope& q, double tol = lp_tolerance) {
  detail::check_dim(p.dim(), q.dim(), "is_subset");
  for (const auto& h : q.constraints()) {
    const auto s = support(p, h.normal);
    if (!s) return false;
    if (*s > h.offset + tol * h.normal.norm()) return false;
  }
  return true;
}

struct BoundingBox {
  Vector lo;
  Vector hi;
};

/// Tight axis-aligned box; throws for empty or unbounded input.
inline BoundingBox bounding_box(const Polytope& p) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  if (is_empty(p).empty) throw Error(ErrorCode::empty_polytope, "bounding box of an empty polytope");
  BoundingBox box{Vector(d), Vector(d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e(i) = 1.0;
    const auto up = support(p, e);
    const auto down = support(p, -e);
    if (!up || !down) throw Error(ErrorCode::unbounded_polytope, "polytope is unbounded along axis " + std::to_string(i));
    box.hi(i) = *up;
    box.lo(i) = -*down;
  }
  return box;
}

namespace detail {

// Vertices by recursion over faces: starting from the whole polytope, a face
// is pinned by a linearly independent set of tight constraints (added in
// increasing index order), parametrized over its affine hull, and pruned by
// an LP feasibility test. Rank-d faces are the vertices.
class VertexEnumerator {
 public:
  explicit VertexEnumerator(const Normalized& nrm) : a_(nrm.a), b_(nrm.b), d_(a_.cols()) {}

  std::vector<Vector> run() {
    std::vector<Eigen::Index> active;
    visit(active, 0);
    return std::move(found_);
  }

 private:
  void visit(std::vector<Eigen::Index>& active, Eigen::Index next) {
    const auto k = static_cast<Eigen::Index>(active.size());
    Vector x0 = Vector::Zero(d_);
    Matrix basis = Matrix::Identity(d_, d_);
    if (k > 0) {
      Matrix ae(k, d_);
      Vector be(k);
      for (Eigen::Index r = 0; r < k; ++r) {
        ae.row(r) = a_.row(active[static_cast<std::size_t>(r)]);
        be(r) = b_(active[static_cast<std::size_t>(r)]);
      }
      Eigen::JacobiSVD<Matrix> svd(ae, Eigen::ComputeFullU | Eigen::ComputeFullV);
      x0 = svd.solve(be);
      basis = svd.matrixV().rightCols(d_ - k);
    }

    if (k == d_) {
      if (((a_ * x0 - b_).array() <= lp_tolerance).all()) add(x0);
      return;
    }

    // Face feasibility over its affine hull x = x0 + basis*y.
    {
      std::vector<Halfspace> hs;
      for (Eigen::Index i = 0; i < a_.rows(); ++i) {
        if (std::find(active.begin(), active.end(), i) != active.end()) continue;
        const Vector row = (a_.row(i) * basis).transpose();
        const double off = b_(i) - a_.row(i).dot(x0);
        if (row.norm() < 1e-12) {
          if (off < -lp_tolerance) return;
          continue;
        }
        hs.push_back({row, off});
      }
      if (is_empty(Polytope(static_cast<std::size_t>(d_ - k), std::move(hs))).empty) return;
    }

    for (Eigen::Index j = next; j < a_.rows(); ++j) {
      const Eigen::RowVectorXd projected = a_.row(j) * basis;
      if (projected.norm() < 1e-9) continue;
      active.push_back(j);
      visit(active, j + 1);
      active.pop_back();
    }
  }

  void add(const Vector& v) {
    for (const auto& w : found_) {
      if ((w - v).lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + v.lpNorm<Eigen::Infinity>())) return;
    }
    found_.push_back(v);
  }

  Matrix a_;
  Vector b_;
  Eigen::Index d_;
  std::vector<Vector> found_;
};

}  // namespace detail

inline constexpr std::size_t max_vertex_dim = 4;

/// All vertices of a nonempty bounded polytope with dim <= 4.
inline std::vector<Vector> vertices(const Polytope& p) {
  if (p.dim() > max_vertex_dim) {
    throw Error(ErrorCode::dimension_unsupported, "vertex enumeration supports dim <= 4, got " + std::to_string(p.dim()));
  }
  (void)bounding_box(p);  // rejects empty and unbounded input
  const auto nrm = detail::normalize(p);
  if (p.dim() == 0) return {Vector(0)};
  return detail::VertexEnumerator(nrm).run();
}

/// Center of the largest inscribed ball. For lower-dimensional polytopes
/// (radius ~ 0) the vertex centroid is returned instead.
inline Vector chebyshev_center(const Polytope& p) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  (void)bounding_box(p);
  const auto nrm = detail::normalize(p);
  const Eigen::Index m = nrm.a.rows();
  Matrix a = Matrix::Zero(m + 1, d + 1);
  Vector b(m + 1);
  a.topLeftCorner(m, d) = nrm.a;
  a.block(0, d, m, 1).setOnes();
  b.head(m) = nrm.b;
  a(m, d) = -1.0;  // r >= 0
  b(m) = 0.0;
  Vector c = Vector::Zero(d + 1);
  c(d) = 1.0;
  const auto r = lp::maximize(c, a, b);
  if (r.status != lp::Status::optimal) throw Error(ErrorCode::solver_failure, "Chebyshev LP did not reach an optimum");
  if (r.x(d) > lp_tolerance) return r.x.head(d);
  const auto vs = vertices(p);
  Vector mean = Vector::Zero(d);
  for (const auto& v : vs) mean += v;
  return mean / static_cast<double>(vs.size());
}

enum class SampleKind { vertices, vertices_plus_center, grid };

struct SampleStrategy {
  SampleKind kind = SampleKind::vertices;
  std::size_t grid_points = 0;  // per axis, used by `grid`

  static SampleStrategy vertices() { return {SampleKind::vertices, 0}; }
  static SampleStrategy vertices_plus_center() { return {SampleKind::vertices_plus_center, 0}; }
  static SampleStrategy grid(std::size_t k) { return {SampleKind::grid, k}; }
};

inline std::vector<Vector> sample_points(const Polytope& p, SampleStrategy strategy) {
  switch (strategy.kind) {
    case SampleKind::vertices:
      return vertices(p);
    case SampleKind::vertices_plus_center: {
      auto pts = vertices(p);
      const Vector c = chebyshev_center(p);
      const bool dup = std::any_of(pts.begin(), pts.end(), [&](const Vector& v) {
        return (v - c).lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + c.lpNorm<Eigen::Infinity>());
      });
      if (!dup) pts.push_back(c);
      return pts;
    }
    case SampleKind::grid: {
      if (strategy.grid_points == 0) throw Error(ErrorCode::invalid_argument, "grid needs at least one point per axis");
      const auto box = bounding_box(p);
      const auto d = static_cast<std::size_t>(p.dim());
      std::vector<Vector> pts;
      std::vector<std::size_t> idx(d, 0);
      const std::size_t k = strategy.grid_points;
      while (true) {
        Vector x(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          const double frac = k == 1 ? 0.5 : static_cast<double>(idx[i]) / static_cast<double>(k - 1);
          x(ii) = box.lo(ii) + frac * (box.hi(ii) - box.lo(ii));
        }
        if (contains_point(p, x, lp_tolerance)) pts.push_back(x);
        std::size_t i = 0;
        while (i < d && ++idx[i] == k) idx[i++] = 0;
        if (i == d) break;
      }
      return pts;
    }
  }
  return {};
}

}  // namespace piha
