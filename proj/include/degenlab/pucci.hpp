#pragma once

// Pucci extremal operators: the eigenvalue formula and the monotone
// wide-stencil scheme (max/min over orthogonal lattice bases).

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "degenlab/error.hpp"
#include "degenlab/grid.hpp"
#include "degenlab/model.hpp"

namespace degenlab {

enum class PucciSign { Plus, Minus };

using Direction = Eigen::VectorXi;
using StencilBasis = std::vector<Direction>;

struct StencilBasisSet {
  std::vector<StencilBasis> bases;  // bases[0] is the axis basis
  int max_radius = 1;
};

StencilBasisSet axis_basis(int dim);
/// 2D: axis, diagonals, and the two knight-move frames (radius >= 2). 3D: axis plus face diagonals.
StencilBasisSet default_bases(int dim, int max_radius = 2);
/// Throws ValidationError unless every basis is orthogonal, within max_radius, and bases[0] is the axis basis.
void check_basis_set(const StencilBasisSet& set);

template <typename Derived>
typename Derived::Scalar pucci_matrix(const Eigen::MatrixBase<Derived>& X, const EllipticityPair& ell,
                                      PucciSign sign) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (X.rows() != X.cols()) throw ValidationError("pucci_matrix: matrix must be square");
  if (X.rows() == 0) return Scalar(0);
  const Mat A = X;
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12)) {
    throw ValidationError("pucci_matrix: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const Scalar pos = ev.cwiseMax(Scalar(0)).sum();
  const Scalar neg = ev.cwiseMin(Scalar(0)).sum();
  const Scalar lo(ell.lambda), hi(ell.Lambda);
  return sign == PucciSign::Plus ? hi * pos + lo * neg : lo * pos + hi * neg;
}

/// Discrete M+ / M- at an interior node; lambda == Lambda uses the axis basis only.
double pucci_apply(const GridFunction& u, Index node, const StencilBasisSet& set, const EllipticityPair& ell,
                   PucciSign sign);
/// sum_i A_ii(x) * second difference along e_i.
double linear_trace_apply(const GridFunction& u, Index node, const MatrixField& A);
/// Largest angle from an orthogonal frame to the nearest basis of the set (exact in 2D, sampled in 3D).
double directional_resolution(const StencilBasisSet& set);

/// Active control of the scheme at one node: basis index and coefficient per direction.
struct Control {
  int basis = -1;
  std::array<double, 3> coeff{};
  bool operator==(const Control& o) const { return basis == o.basis && coeff == o.coeff; }
  bool operator!=(const Control& o) const { return !(*this == o); }
};

/// F_h realized on a grid with precomputed stencils, shared by the solver and the checks.
class StencilOperator {
 public:
  StencilOperator(GridPtr grid, const Operator& op, StencilBasisSet set);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const StencilBasisSet& bases() const { return set_; }

  /// F_h u at an interior node; writes the maximizing (minimizing) control when asked.
  double apply(const Eigen::VectorXd& u, Index node, Control* control = nullptr) const;

  /// Calls emit(neighbor, weight) for the linear stencil of a fixed control and returns the
  /// center weight, so that F_h u = sum weight * u[neighbor] + center * u[node].
  template <typename Emit>
  double linear_form(Index node, const Control& control, Emit&& emit) const {
    const Index s = slot(node);
    const int n = grid_->dim();
    double center = 0;
    for (int i = 0; i < n; ++i) {
      const std::size_t k = entry(s, control.basis, i);
      const double w = control.coeff[i] * inv_[k];
      emit(plus_[k], w);
      emit(minus_[k], w);
      center -= 2 * w;
    }
    return center;
  }

 private:
  Index slot(Index node) const;
  std::size_t entry(Index slot, int basis, int dir) const {
    return (static_cast<std::size_t>(slot) * set_.bases.size() + basis) * grid_->dim() + dir;
  }

  GridPtr grid_;
  OperatorKind kind_;
  EllipticityPair ell_;
  StencilBasisSet set_;
  std::vector<Index> slot_of_;
  std::vector<char> admissible_;  // per slot and basis
  std::vector<Index> plus_, minus_;
  std::vector<double> inv_;
  std::vector<double> trace_coeff_;  // LinearTrace: A_ii per slot
};

}  // namespace degenlab
