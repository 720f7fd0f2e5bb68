#include "degenlab/pucci.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace degenlab {

namespace {

Direction dir(std::initializer_list<int> c) {
  Direction v(static_cast<int>(c.size()));
  int i = 0;
  for (int x : c) v[i++] = x;
  return v;
}

}  // namespace

StencilBasisSet axis_basis(int dim) {
  StencilBasisSet set;
  StencilBasis axis;
  for (int i = 0; i < dim; ++i) axis.push_back(Direction::Unit(dim, i));
  set.bases.push_back(axis);
  set.max_radius = 1;
  return set;
}

StencilBasisSet default_bases(int dim, int max_radius) {
  if (max_radius < 1) throw ValidationError("default_bases: radius must be >= 1");
  StencilBasisSet set = axis_basis(dim);
  set.max_radius = max_radius;
  if (dim == 2) {
    set.bases.push_back({dir({1, 1}), dir({1, -1})});
    if (max_radius >= 2) {
      set.bases.push_back({dir({2, 1}), dir({-1, 2})});
      set.bases.push_back({dir({1, 2}), dir({-2, 1})});
    }
  } else if (dim == 3) {
    set.bases.push_back({dir({1, 1, 0}), dir({1, -1, 0}), dir({0, 0, 1})});
    set.bases.push_back({dir({1, 0, 1}), dir({1, 0, -1}), dir({0, 1, 0})});
    set.bases.push_back({dir({0, 1, 1}), dir({0, 1, -1}), dir({1, 0, 0})});
  }
  return set;
}

void check_basis_set(const StencilBasisSet& set) {
  if (set.bases.empty()) throw ValidationError("stencil basis set is empty");
  const int n = static_cast<int>(set.bases[0].size());
  const StencilBasis axis = axis_basis(n).bases[0];
  if (set.bases[0] != axis) throw ValidationError("stencil basis set must start with the axis basis");
  for (const auto& basis : set.bases) {
    if (static_cast<int>(basis.size()) != n) throw ValidationError("stencil basis has the wrong size");
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const int len = basis[i].cwiseAbs().maxCoeff();
      if (basis[i].size() != n || len == 0 || len > set.max_radius) {
        throw ValidationError("stencil direction is zero or exceeds the radius");
      }
      for (std::size_t j = i + 1; j < basis.size(); ++j) {
        if (basis[i].dot(basis[j]) != 0) throw ValidationError("stencil basis is not orthogonal");
      }
    }
  }
}

namespace {

double weighted(double d2, const EllipticityPair& ell, PucciSign sign) {
  if (sign == PucciSign::Plus) return d2 >= 0 ? ell.Lambda * d2 : ell.lambda * d2;
  return d2 >= 0 ? ell.lambda * d2 : ell.Lambda * d2;
}

}  // namespace

double pucci_apply(const GridFunction& u, Index node, const StencilBasisSet& set, const EllipticityPair& ell,
                   PucciSign sign) {
  const Grid& grid = *u.grid;
  if (grid.kind(node) != NodeKind::Interior) throw DomainError("pucci_apply: node is not interior");
  const std::size_t nb = ell.lambda == ell.Lambda ? 1 : set.bases.size();
  double best = sign == PucciSign::Plus ? -std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t b = 0; b < nb; ++b) {
    double val = 0;
    bool ok = true;
    for (const auto& v : set.bases[b]) {
      const Index f = grid.neighbor(node, v), r = grid.neighbor(node, -v);
      if (f < 0 || r < 0 || grid.kind(f) == NodeKind::Exterior || grid.kind(r) == NodeKind::Exterior) {
        ok = false;
        break;
      }
      val += weighted(second_difference(u, node, v), ell, sign);
    }
    if (!ok) continue;
    any = true;
    if (sign == PucciSign::Plus ? val > best : val < best) best = val;
  }
  if (!any) throw DomainError("pucci_apply: no stencil basis fits at this node");
  return best;
}

double linear_trace_apply(const GridFunction& u, Index node, const MatrixField& A) {
  const Grid& grid = *u.grid;
  const Eigen::MatrixXd a = A(grid.point(node));
  const int n = grid.dim();
  if (a.rows() != n || a.cols() != n) throw ValidationError("linear_trace_apply: coefficient has the wrong size");
  if ((a - Eigen::MatrixXd(a.diagonal().asDiagonal())).cwiseAbs().maxCoeff() > 0) {
    throw UnsupportedOperatorError("linear_trace_apply: only diagonal coefficients are supported");
  }
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += a(i, i) * second_difference(u, node, Direction::Unit(n, i));
  return sum;
}

namespace {

// Angle between the lines spanned by a and b.
double line_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c));
}

double frame_distance(const Eigen::MatrixXd& frame, const StencilBasis& basis) {
  double worst = 0;
  for (int j = 0; j < frame.cols(); ++j) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& v : basis) nearest = std::min(nearest, line_angle(frame.col(j), v.cast<double>()));
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace

double directional_resolution(const StencilBasisSet& set) {
  if (set.bases.empty()) throw ValidationError("directional_resolution: empty basis set");
  const int n = static_cast<int>(set.bases[0].size());
  if (n <= 1) return 0.0;
  constexpr double quarter = std::numbers::pi / 2;
  if (n == 2) {
    std::vector<double> angles;
    for (const auto& basis : set.bases) {
      const double a = std::atan2(static_cast<double>(basis[0][1]), static_cast<double>(basis[0][0]));
      angles.push_back(std::fmod(std::fmod(a, quarter) + quarter, quarter));
    }
    std::sort(angles.begin(), angles.end());
    double gap = angles.front() + quarter - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
    return gap / 2;
  }
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  double worst = 0;
  for (int s = 0; s < 4000; ++s) {
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < g.size(); ++i) g(i) = normal(rng);
    const Eigen::MatrixXd frame = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& basis : set.bases) nearest = std::min(nearest, frame_distance(frame, basis));
    worst = std::max(worst, nearest);
  }
  return worst;
}

StencilOperator::StencilOperator(GridPtr grid, const Operator& op, StencilBasisSet set)
    : grid_(std::move(grid)), kind_(op.kind), ell_(op.ellipticity), set_(std::move(set)) {
  check_basis_set(set_);
  const int n = grid_->dim();
  if (static_cast<int>(set_.bases[0].size()) != n) throw ValidationError("StencilOperator: basis dimension mismatch");
  if (kind_ == OperatorKind::LinearTrace || ell_.lambda == ell_.Lambda) set_.bases.resize(1);
  if (kind_ == OperatorKind::LinearTrace && !op.coefficients) {
    throw ValidationError("StencilOperator: linear-trace operator needs coefficients");
  }

  const auto& interior = grid_->interior();
  const std::size_t nb = set_.bases.size();
  slot_of_.assign(grid_->size(), -1);
  admissible_.assign(interior.size() * nb, 0);
  plus_.assign(interior.size() * nb * n, -1);
  minus_.assign(plus_.size(), -1);
  inv_.assign(plus_.size(), 0.0);
  const double h2 = grid_->h() * grid_->h();
  for (std::size_t s = 0; s < interior.size(); ++s) {
    const Index node = interior[s];
    slot_of_[node] = static_cast<Index>(s);
    for (std::size_t b = 0; b < nb; ++b) {
      bool ok = true;
      for (int i = 0; i < n; ++i) {
        const Direction& v = set_.bases[b][i];
        const Index f = grid_->neighbor(node, v), r = grid_->neighbor(node, -v);
        if (f < 0 || r < 0 || grid_->kind(f) == NodeKind::Exterior || grid_->kind(r) == NodeKind::Exterior) {
          ok = false;
          break;
        }
        const std::size_t k = entry(static_cast<Index>(s), static_cast<int>(b), i);
        plus_[k] = f;
        minus_[k] = r;
        inv_[k] = 1.0 / (h2 * v.squaredNorm());
      }
      admissible_[s * nb + b] = ok;
    }
    if (!admissible_[s * nb]) throw ConfigurationError("StencilOperator: axis stencil leaves the grid");
  }

  if (kind_ == OperatorKind::LinearTrace) {
    trace_coeff_.resize(interior.size() * n);
    for (std::size_t s = 0; s < interior.size(); ++s) {
      const Eigen::MatrixXd a = (*op.coefficients)(grid_->point(interior[s]));
      if (a.rows() != n || a.cols() != n) throw ValidationError("StencilOperator: coefficient has the wrong size");
      if ((a - Eigen::MatrixXd(a.diagonal().asDiagonal())).cwiseAbs().maxCoeff() > 0) {
        throw UnsupportedOperatorError("StencilOperator: only diagonal coefficients are supported");
      }
      for (int i = 0; i < n; ++i) trace_coeff_[s * n + i] = a(i, i);
    }
  }
}

Index StencilOperator::slot(Index node) const {
  const Index s = node >= 0 && node < grid_->size() ? slot_of_[node] : -1;
  if (s < 0) throw DomainError("StencilOperator: node is not interior");
  return s;
}

double StencilOperator::apply(const Eigen::VectorXd& u, Index node, Control* control) const {
  const Index s = slot(node);
  const int n = grid_->dim();
  const double center = u[node];

  if (kind_ == OperatorKind::LinearTrace) {
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      const std::size_t k = entry(s, 0, i);
      const double a = trace_coeff_[s * n + i];
      sum += a * (u[plus_[k]] + u[minus_[k]] - 2 * center) * inv_[k];
      if (control) control->coeff[i] = a;
    }
    if (control) control->basis = 0;
    return sum;
  }

  const PucciSign sign = kind_ == OperatorKind::PucciPlus ? PucciSign::Plus : PucciSign::Minus;
  const std::size_t nb = set_.bases.size();
  double best = sign == PucciSign::Plus ? -std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::infinity();
  int best_basis = -1;
  for (std::size_t b = 0; b < nb; ++b) {
    if (!admissible_[s * nb + b]) continue;
    double val = 0;
    for (int i = 0; i < n; ++i) {
      const std::size_t k = entry(s, static_cast<int>(b), i);
      val += weighted((u[plus_[k]] + u[minus_[k]] - 2 * center) * inv_[k], ell_, sign);
    }
    if (sign == PucciSign::Plus ? val > best : val < best) {
      best = val;
      best_basis = static_cast<int>(b);
    }
  }
  if (control) {
    control->basis = best_basis;
    control->coeff.fill(0.0);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = entry(s, best_basis, i);
      const double d2 = (u[plus_[k]] + u[minus_[k]] - 2 * center) * inv_[k];
      const bool up = d2 >= 0;
      control->coeff[i] = (sign == PucciSign::Plus) == up ? ell_.Lambda : ell_.lambda;
    }
  }
  return best;
}

}  // namespace degenlab
