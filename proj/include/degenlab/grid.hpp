#pragma once

// Structured lattice on a box (optionally cut by a graph), node classes and
// the finite-difference primitives used by the operators.

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "degenlab/model.hpp"

namespace degenlab {

using Index = std::ptrdiff_t;
using IndexVec = Eigen::Matrix<Index, Eigen::Dynamic, 1>;

enum class NodeKind : std::uint8_t { Interior, Dirichlet, Exterior };

class Grid {
 public:
  Grid(DomainSpec domain, double h, int stencil_radius);

  int dim() const { return static_cast<int>(extents_.size()); }
  double h() const { return h_; }
  int stencil_radius() const { return radius_; }
  const DomainSpec& domain() const { return domain_; }
  /// Number of lattice nodes per axis.
  const IndexVec& extents() const { return extents_; }
  Index size() const { return size_; }

  IndexVec multi_index(Index node) const;
  Index linear_index(const IndexVec& idx) const;
  Point point(Index node) const;
  /// Node reached from `node` by the integer offset v, or -1 if it leaves the lattice.
  Index neighbor(Index node, const Eigen::VectorXi& v) const;
  /// Nearest lattice node to x (clamped), and whether x sits on it within tol.
  Index nearest_node(const Point& x) const;
  bool is_node(const Point& x, double tol = 1e-9) const;

  NodeKind kind(Index node) const { return kinds_[node]; }
  const std::vector<Index>& interior() const { return interior_; }
  const std::vector<Index>& dirichlet() const { return dirichlet_; }
  /// Boundary point represented by a Dirichlet node.
  const Point& trace(Index node) const;

 private:
  DomainSpec domain_;
  double h_;
  int radius_;
  IndexVec extents_;
  IndexVec strides_;
  Index size_ = 0;
  std::vector<NodeKind> kinds_;
  std::vector<Index> interior_;
  std::vector<Index> dirichlet_;
  std::vector<Index> trace_slot_;
  std::vector<Point> traces_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Throws ConfigurationError when h does not divide the box or leaves no interior node.
GridPtr build_grid(const DomainSpec& domain, double h, int stencil_radius);

/// Nodal values on every lattice node; Exterior entries are kept at 0.
struct GridFunction {
  GridPtr grid;
  Eigen::VectorXd values;

  GridFunction() = default;
  explicit GridFunction(GridPtr g) : grid(std::move(g)), values(Eigen::VectorXd::Zero(grid->size())) {}
  GridFunction(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {}

  double operator[](Index node) const { return values[node]; }
  double& operator[](Index node) { return values[node]; }
};

/// f at every non-Exterior node; Dirichlet nodes are evaluated at the node itself.
GridFunction sample(const GridPtr& grid, const ScalarField& f);
/// g at the trace point of every Dirichlet node, zero elsewhere.
GridFunction sample_boundary(const GridPtr& grid, const ScalarField& g);
/// Interior nodes from `interior_field`, Dirichlet nodes from g at the traces.
GridFunction sample_with_boundary(const GridPtr& grid, const ScalarField& interior_field, const ScalarField& g);

/// Throws NumericFailure if any non-Exterior value is NaN or Inf.
void require_finite(const GridFunction& u, const char* where);

Point gradient(const GridFunction& u, Index node);
/// Euclidean norm over axes of (|D+u + zeta_i| + |D-u + zeta_i|) / 2.
double shifted_slope(const GridFunction& u, Index node, const Point& zeta);
double second_difference(const GridFunction& u, Index node, const Eigen::VectorXi& v);

/// Nodes with |x - x0| <= r (or r - h < |x - x0| <= r for the shell), non-Exterior only.
std::vector<Index> ball_nodes(const Grid& grid, const Point& x0, double r, bool shell_only);

}  // namespace degenlab
