#include "degenlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "degenlab/error.hpp"

namespace degenlab {

namespace {

constexpr double kGeomTol = 1e-12;

// Calls visit(offset) for every offset in [-r, r]^n.
template <typename Visit>
void for_each_offset(int n, int r, Visit&& visit) {
  Eigen::VectorXi off = Eigen::VectorXi::Constant(n, -r);
  while (true) {
    visit(off);
    int k = 0;
    while (k < n && ++off[k] > r) off[k++] = -r;
    if (k == n) break;
  }
}

}  // namespace

Grid::Grid(DomainSpec domain, double h, int stencil_radius)
    : domain_(std::move(domain)), h_(h), radius_(stencil_radius) {
  const int n = domain_.dim();
  if (n < 1 || n > 3) throw ConfigurationError("build_grid: dimension must be 1, 2 or 3");
  if (!(h > 0)) throw ConfigurationError("build_grid: h must be positive");
  if (stencil_radius < 1) throw ConfigurationError("build_grid: stencil radius must be >= 1");

  extents_.resize(n);
  strides_.resize(n);
  size_ = 1;
  for (int i = 0; i < n; ++i) {
    const double cells = (domain_.upper[i] - domain_.lower[i]) / h;
    const double rounded = std::round(cells);
    if (rounded < 1 || std::abs(cells - rounded) > 1e-12 * std::max(1.0, cells)) {
      throw ConfigurationError("build_grid: h must divide the box extents");
    }
    extents_[i] = static_cast<Index>(rounded) + 1;
    strides_[i] = size_;
    size_ *= extents_[i];
  }

  kinds_.assign(size_, NodeKind::Exterior);
  std::vector<char> near_interior(size_, 0);
  std::vector<double> heights(size_);
  for (Index node = 0; node < size_; ++node) {
    const IndexVec idx = multi_index(node);
    heights[node] = domain_.height_above_graph(point(node));
    bool full_stencil = true;
    for (int i = 0; i < n; ++i) full_stencil = full_stencil && idx[i] >= radius_ && idx[i] < extents_[i] - radius_;
    if (full_stencil && heights[node] > kGeomTol) kinds_[node] = NodeKind::Interior;
  }
  for (Index node = 0; node < size_; ++node) {
    if (kinds_[node] != NodeKind::Interior) continue;
    interior_.push_back(node);
    for_each_offset(n, radius_, [&](const Eigen::VectorXi& off) {
      const Index nb = neighbor(node, off);
      if (nb >= 0) near_interior[nb] = 1;
    });
  }
  if (interior_.empty()) throw ConfigurationError("build_grid: h too coarse, no interior nodes");

  trace_slot_.assign(size_, -1);
  for (Index node = 0; node < size_; ++node) {
    if (kinds_[node] == NodeKind::Interior) continue;
    if (heights[node] < -kGeomTol && !near_interior[node]) continue;
    kinds_[node] = NodeKind::Dirichlet;
    dirichlet_.push_back(node);

    const Point x = point(node);
    double face_dist = std::numeric_limits<double>::infinity();
    int face_axis = 0;
    double face_value = 0;
    for (int i = 0; i < n; ++i) {
      const double lo = x[i] - domain_.lower[i], hi = domain_.upper[i] - x[i];
      if (lo < face_dist) face_dist = lo, face_axis = i, face_value = domain_.lower[i];
      if (hi < face_dist) face_dist = hi, face_axis = i, face_value = domain_.upper[i];
    }
    Point t = x;
    if (domain_.boundary_graph && heights[node] <= face_dist) {
      t[n - 1] = (*domain_.boundary_graph)(Point(x.head(n - 1)));
    } else {
      t[face_axis] = face_value;
    }
    trace_slot_[node] = static_cast<Index>(traces_.size());
    traces_.push_back(t);
  }
}

IndexVec Grid::multi_index(Index node) const {
  IndexVec idx(dim());
  for (int i = 0; i < dim(); ++i) {
    idx[i] = node % extents_[i];
    node /= extents_[i];
  }
  return idx;
}

Index Grid::linear_index(const IndexVec& idx) const { return idx.dot(strides_); }

Point Grid::point(Index node) const {
  const IndexVec idx = multi_index(node);
  Point x(dim());
  for (int i = 0; i < dim(); ++i) x[i] = domain_.lower[i] + static_cast<double>(idx[i]) * h_;
  return x;
}

Index Grid::neighbor(Index node, const Eigen::VectorXi& v) const {
  Index out = node;
  for (int i = 0; i < dim(); ++i) {
    const Index c = (node / strides_[i]) % extents_[i] + v[i];
    if (c < 0 || c >= extents_[i]) return -1;
    out += v[i] * strides_[i];
  }
  return out;
}

Index Grid::nearest_node(const Point& x) const {
  IndexVec idx(dim());
  for (int i = 0; i < dim(); ++i) {
    const auto k = static_cast<Index>(std::llround((x[i] - domain_.lower[i]) / h_));
    idx[i] = std::clamp<Index>(k, 0, extents_[i] - 1);
  }
  return linear_index(idx);
}

bool Grid::is_node(const Point& x, double tol) const {
  if (x.size() != dim()) return false;
  return (point(nearest_node(x)) - x).cwiseAbs().maxCoeff() <= tol;
}

const Point& Grid::trace(Index node) const {
  if (trace_slot_[node] < 0) throw DomainError("trace: node is not a Dirichlet node");
  return traces_[trace_slot_[node]];
}

GridPtr build_grid(const DomainSpec& domain, double h, int stencil_radius) {
  return std::make_shared<const Grid>(domain, h, stencil_radius);
}

GridFunction sample(const GridPtr& grid, const ScalarField& f) {
  GridFunction out(grid);
  for (Index node = 0; node < grid->size(); ++node) {
    if (grid->kind(node) != NodeKind::Exterior) out[node] = f(grid->point(node));
  }
  require_finite(out, "sample");
  return out;
}

GridFunction sample_boundary(const GridPtr& grid, const ScalarField& g) {
  GridFunction out(grid);
  for (Index node : grid->dirichlet()) out[node] = g(grid->trace(node));
  require_finite(out, "sample_boundary");
  return out;
}

GridFunction sample_with_boundary(const GridPtr& grid, const ScalarField& interior_field, const ScalarField& g) {
  GridFunction out = sample_boundary(grid, g);
  for (Index node : grid->interior()) out[node] = interior_field(grid->point(node));
  require_finite(out, "sample_with_boundary");
  return out;
}

void require_finite(const GridFunction& u, const char* where) {
  for (Index node = 0; node < u.grid->size(); ++node) {
    if (u.grid->kind(node) != NodeKind::Exterior && !std::isfinite(u[node])) {
      throw NumericFailure(std::string(where) + ": non-finite value at node " + std::to_string(node));
    }
  }
}

namespace {

void require_interior(const Grid& grid, Index node, const char* where) {
  if (node < 0 || node >= grid.size() || grid.kind(node) != NodeKind::Interior) {
    throw DomainError(std::string(where) + ": node is not interior");
  }
}

}  // namespace

Point gradient(const GridFunction& u, Index node) {
  const Grid& grid = *u.grid;
  require_interior(grid, node, "gradient");
  Point g(grid.dim());
  Eigen::VectorXi e = Eigen::VectorXi::Zero(grid.dim());
  for (int i = 0; i < grid.dim(); ++i) {
    e[i] = 1;
    g[i] = (u[grid.neighbor(node, e)] - u[grid.neighbor(node, -e)]) / (2 * grid.h());
    e[i] = 0;
  }
  return g;
}

double shifted_slope(const GridFunction& u, Index node, const Point& zeta) {
  const Grid& grid = *u.grid;
  Eigen::VectorXi e = Eigen::VectorXi::Zero(grid.dim());
  double sum = 0;
  for (int i = 0; i < grid.dim(); ++i) {
    e[i] = 1;
    const double fwd = (u[grid.neighbor(node, e)] - u[node]) / grid.h() + zeta[i];
    const double bwd = (u[node] - u[grid.neighbor(node, -e)]) / grid.h() + zeta[i];
    e[i] = 0;
    const double s = 0.5 * (std::abs(fwd) + std::abs(bwd));
    sum += s * s;
  }
  return std::sqrt(sum);
}

double second_difference(const GridFunction& u, Index node, const Eigen::VectorXi& v) {
  const Grid& grid = *u.grid;
  require_interior(grid, node, "second_difference");
  const Index fwd = grid.neighbor(node, v), bwd = grid.neighbor(node, -v);
  if (fwd < 0 || bwd < 0 || grid.kind(fwd) == NodeKind::Exterior || grid.kind(bwd) == NodeKind::Exterior) {
    throw DomainError("second_difference: stencil leaves the grid");
  }
  const double h = grid.h();
  return (u[fwd] - 2 * u[node] + u[bwd]) / (h * h * v.squaredNorm());
}

std::vector<Index> ball_nodes(const Grid& grid, const Point& x0, double r, bool shell_only) {
  const double h = grid.h();
  if (!(r > 0)) throw ValidationError("ball_nodes: radius must be positive");
  if (shell_only && r < 2 * h - kGeomTol) throw ValidationError("ball_nodes: shell needs r >= 2h");
  const int n = grid.dim();
  IndexVec lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const double a = (x0[i] - r - grid.domain().lower[i]) / h, b = (x0[i] + r - grid.domain().lower[i]) / h;
    lo[i] = std::clamp<Index>(static_cast<Index>(std::floor(a)), 0, grid.extents()[i] - 1);
    hi[i] = std::clamp<Index>(static_cast<Index>(std::ceil(b)), 0, grid.extents()[i] - 1);
  }
  std::vector<Index> out;
  IndexVec idx = lo;
  const double outer = r + kGeomTol * std::max(1.0, r), inner = r - h + kGeomTol * std::max(1.0, r);
  while (true) {
    const Index node = grid.linear_index(idx);
    if (grid.kind(node) != NodeKind::Exterior) {
      const double d = (grid.point(node) - x0).norm();
      if (d <= outer && (!shell_only || d > inner)) out.push_back(node);
    }
    int k = 0;
    while (k < n && ++idx[k] > hi[k]) idx[k] = lo[k], ++k;
    if (k == n) break;
  }
  if (out.empty()) throw EmptySetError("ball_nodes: no nodes in the requested set");
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace degenlab
