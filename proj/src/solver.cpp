#include "degenlab/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace degenlab {

const char* to_string(SweepMode mode) { return mode == SweepMode::Jacobi ? "jacobi" : "gauss_seidel"; }
const char* to_string(LinearSolver solver) { return solver == LinearSolver::Direct ? "direct" : "relaxation"; }

void SolveOptions::validate() const {
  if (!(h > 0)) throw ValidationError("SolveOptions: h must be positive");
  if (stencil_radius < 1) throw ValidationError("SolveOptions: stencil_radius must be >= 1");
  if (!(eps_min > 0) || !(eps_min <= eps_start)) throw ValidationError("SolveOptions: need 0 < eps_min <= eps_start");
  if (!(eps_factor > 0 && eps_factor < 1)) throw ValidationError("SolveOptions: eps_factor must lie in (0, 1)");
  if (!(damping > 0 && damping <= 1)) throw ValidationError("SolveOptions: damping must lie in (0, 1]");
  if (outer_max < 1 || inner_max < 1) throw ValidationError("SolveOptions: iteration limits must be positive");
  if (!(tol_residual > 0) || !(tol_increment > 0)) throw ValidationError("SolveOptions: tolerances must be positive");
  if (threads < 1) throw ValidationError("SolveOptions: threads must be >= 1");
  if (relaxation_max_sweeps < 1) throw ValidationError("SolveOptions: relaxation_max_sweeps must be positive");
}

int effective_stencil_radius(const ProblemSpec& spec, const SolveOptions& opts) {
  const bool axis_only = spec.dim() == 1 || spec.op.kind == OperatorKind::LinearTrace ||
                         spec.op.ellipticity.lambda == spec.op.ellipticity.Lambda;
  return axis_only ? 1 : opts.stencil_radius;
}

GridPtr build_problem_grid(const ProblemSpec& spec, const SolveOptions& opts) {
  return build_grid(spec.domain, opts.h, effective_stencil_radius(spec, opts));
}

StencilOperator make_operator(const ProblemSpec& spec, const GridPtr& grid) {
  return StencilOperator(grid, spec.op, default_bases(grid->dim(), grid->stencil_radius()));
}

namespace {

enum class Kind { Plain, DeadCore, Obstacle };

constexpr double kDeadCoreFloor = 1e-12;

// Grid samples of the problem data, shared by the residual and the iterations.
struct Discrete {
  const ProblemSpec& spec;
  GridPtr grid;
  StencilOperator op;
  Kind kind = Kind::Plain;
  std::vector<Index> interior;
  Eigen::VectorXd g;         // Dirichlet values on every node (0 elsewhere)
  Eigen::VectorXd f;         // per interior slot
  Eigen::VectorXd p, q, a;   // per interior slot
  Eigen::VectorXd f0;        // dead core, per interior slot
  double sigma = 0;
  Eigen::VectorXd obstacle;  // per node
  Point zeta;
  double q_max = 0;
  double L1 = 1;
  double eps_scale = 1;
  double properness = 1;

  Discrete(const ProblemSpec& s, GridPtr gr)
      : spec(s), grid(std::move(gr)), op(make_operator(s, grid)), interior(grid->interior()) {
    const auto m = static_cast<Index>(interior.size());
    g = sample_boundary(grid, spec.boundary).values;
    f.resize(m);
    p.resize(m);
    q.resize(m);
    a.resize(m);
    const auto& ex = spec.law.exponents;
    for (Index k = 0; k < m; ++k) {
      const Point x = grid->point(interior[k]);
      f[k] = spec.source ? spec.source(x) : 0.0;
      p[k] = ex.p(x);
      q[k] = ex.q(x);
      a[k] = ex.a(x);
    }
    zeta = spec.zeta();
    q_max = ex.bounds.q_max;
    L1 = spec.law.L1;
    eps_scale = spec.law.eps_gradient_scale;
    properness = spec.properness_scale;
    if (const auto* dc = std::get_if<DeadCoreVariant>(&spec.variant)) {
      kind = Kind::DeadCore;
      sigma = dc->sigma;
      f0.resize(m);
      for (Index k = 0; k < m; ++k) f0[k] = dc->f0(grid->point(interior[k]));
    } else if (const auto* ob = std::get_if<ObstacleVariant>(&spec.variant)) {
      kind = Kind::Obstacle;
      obstacle = sample(grid, ob->obstacle).values;
    }
    if (!f.allFinite() || !p.allFinite() || !q.allFinite() || !a.allFinite()) {
      throw NumericFailure("problem data is not finite on the grid");
    }
  }

  Index size() const { return static_cast<Index>(interior.size()); }

  double degeneracy(const GridFunction& u, Index k, double eps) const {
    const double eg = eps * eps_scale;
    const double s = shifted_slope(u, interior[k], zeta);
    const double H = degeneracy_kernel(p[k], q[k], a[k], s, eg);
    const double floor = eg > 0 ? std::pow(eg, q_max) * L1 : 0.0;
    return std::max(H, floor);
  }

  // |d r / d u_k| with H frozen: puts the obstacle residual max(phi - u, r / D) in units of u.
  double row_scale(const GridFunction& u, Index k, double eps) const {
    Control control;
    op.apply(u.values, interior[k], &control);
    const double center = op.linear_form(interior[k], control, [](Index, double) {});
    return degeneracy(u, k, eps) * std::abs(center + eps * properness);
  }

  // Right-hand side of the full equation at slot k for the state u.
  double source(const GridFunction& u, Index k) const {
    if (kind != Kind::DeadCore) return f[k];
    const double v = u[interior[k]];
    if (v <= 0) return 0.0;
    return f0[k] * (sigma == 0 ? 1.0 : std::pow(v, sigma));
  }
};

struct ThreadSpec {
  int threads;
};

ThreadSpec thread_spec(const SolveOptions& opts) {
  return {opts.sweep_mode == SweepMode::GaussSeidel ? 1 : opts.threads};
}

Eigen::VectorXd equation_residual(const Discrete& d, const GridFunction& u, double eps, int threads) {
  Eigen::VectorXd r(d.size());
  const double ep = eps * d.properness;
#pragma omp parallel for num_threads(threads) schedule(static)
  for (Index k = 0; k < d.size(); ++k) {
    const Index node = d.interior[k];
    const double H = d.degeneracy(u, k, eps);
    r[k] = H * (ep * u[node] + d.op.apply(u.values, node)) - d.source(u, k);
  }
  return r;
}

GridFunction residual_field(const Discrete& d, const GridFunction& u, double eps, int threads) {
  GridFunction out(d.grid);
  const Eigen::VectorXd r = equation_residual(d, u, eps, threads);
  for (Index k = 0; k < d.size(); ++k) {
    const Index node = d.interior[k];
    out[node] = d.kind == Kind::Obstacle ? std::max(d.obstacle[node] - u[node], r[k] / d.row_scale(u, k, eps)) : r[k];
  }
  for (Index node : d.grid->dirichlet()) out[node] = u[node] - d.g[node];
  require_finite(out, "residual");
  return out;
}

double sup_norm(const GridFunction& r) {
  double m = 0;
  for (Index node = 0; node < r.grid->size(); ++node) {
    if (r.grid->kind(node) != NodeKind::Exterior) m = std::max(m, std::abs(r[node]));
  }
  return m;
}

// Policy-iteration state kept across outer steps so the factorization can be reused.
struct InnerCache {
  std::vector<Control> policy;
  std::vector<char> contact;
  double eps = -1;
  Eigen::VectorXd absorption;
  bool valid = false;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

struct InnerProblem {
  Eigen::VectorXd rhs;         // per slot: f / H (0 for the dead core)
  Eigen::VectorXd absorption;  // per slot, subtracted on the diagonal
};

class InnerSolver {
 public:
  InnerSolver(const Discrete& d, const SolveOptions& opts, InnerCache& cache)
      : d_(d), opts_(opts), cache_(cache), threads_(thread_spec(opts).threads) {}

  int iterations() const { return iterations_; }

  // u holds the starting guess and the Dirichlet data on entry.
  // constrained = false ignores the obstacle (used for the starting guess).
  void run(GridFunction& u, const InnerProblem& P, double eps, bool constrained = true) {
    iterations_ = 0;
    constrained_ = constrained && d_.kind == Kind::Obstacle;
    const Index m = d_.size();
    const double ep = eps * d_.properness;
    const double scale = std::max(1.0, P.rhs.cwiseAbs().maxCoeff());
    std::vector<Control> policy(m);
    std::vector<char> contact(m, 0);
    while (true) {
      const double worst = select(u, P, ep, policy, contact);
      if (iterations_ > 0 && (worst <= opts_.tol_residual * scale * 1e-3 ||
                              (policy == cache_.policy && contact == cache_.contact))) {
        if (worst <= opts_.tol_residual * scale) return;
      }
      if (iterations_ >= opts_.inner_max) {
        std::ostringstream msg;
        msg << "inner_solve: policy iteration did not settle in " << opts_.inner_max
            << " iterations (residual " << worst << ")";
        throw NonConvergence(msg.str(), SolveReport{}, u);
      }
      const bool same = cache_.valid && cache_.eps == ep && policy == cache_.policy && contact == cache_.contact &&
                        cache_.absorption.size() == P.absorption.size() && cache_.absorption == P.absorption;
      Eigen::VectorXd b;
      Eigen::SparseMatrix<double> A;
      assemble(u, P, ep, policy, contact, A, b);
      Eigen::VectorXd x;
      if (opts_.linear_solver == LinearSolver::Direct) {
        if (!same) {
          cache_.lu.compute(A);
          if (cache_.lu.info() != Eigen::Success) throw NumericFailure("inner_solve: sparse LU failed");
          cache_.valid = true;
        }
        x = cache_.lu.solve(b);
      } else {
        x = relax(A, b, u);
      }
      cache_.policy = policy;
      cache_.contact = contact;
      cache_.eps = ep;
      cache_.absorption = P.absorption;
      for (Index k = 0; k < m; ++k) u[d_.interior[k]] = x[k];
      require_finite(u, "inner_solve");
      ++iterations_;
    }
  }

 private:
  // Picks the optimal control at every node; returns the sup of the nonlinear residual.
  double select(const GridFunction& u, const InnerProblem& P, double ep, std::vector<Control>& policy,
                std::vector<char>& contact) const {
    const Index m = d_.size();
    Eigen::VectorXd res(m);
#pragma omp parallel for num_threads(threads_) schedule(static)
    for (Index k = 0; k < m; ++k) {
      const Index node = d_.interior[k];
      const double Fu = d_.op.apply(u.values, node, &policy[k]);
      const double pde = P.rhs[k] - (ep - P.absorption[k]) * u[node] - Fu;
      if (constrained_) {
        const double gap = u[node] - d_.obstacle[node];
        contact[k] = gap < pde;
        res[k] = std::abs(std::min(gap, pde));
      } else {
        res[k] = std::abs(pde);
      }
    }
    return m > 0 ? res.maxCoeff() : 0.0;
  }

  void assemble(const GridFunction& u, const InnerProblem& P, double ep, const std::vector<Control>& policy,
                const std::vector<char>& contact, Eigen::SparseMatrix<double>& A, Eigen::VectorXd& b) const {
    const Index m = d_.size();
    const Grid& grid = *d_.grid;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * (2 * grid.dim() + 1));
    b.resize(m);
    std::vector<Index> slot(grid.size(), -1);
    for (Index k = 0; k < m; ++k) slot[d_.interior[k]] = k;
    for (Index k = 0; k < m; ++k) {
      const Index node = d_.interior[k];
      if (constrained_ && contact[k]) {
        trip.emplace_back(k, k, 1.0);
        b[k] = d_.obstacle[node];
        continue;
      }
      double rhs = P.rhs[k];
      const double center = d_.op.linear_form(node, policy[k], [&](Index nb, double w) {
        if (slot[nb] >= 0) {
          trip.emplace_back(k, slot[nb], w);
        } else {
          rhs -= w * u[nb];
        }
      });
      trip.emplace_back(k, k, center + ep - P.absorption[k]);
      b[k] = rhs;
    }
    A.resize(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
  }

  // Jacobi (double-buffered, data-parallel) or Gauss-Seidel sweeps on A x = b.
  Eigen::VectorXd relax(const Eigen::SparseMatrix<double>& A_col, const Eigen::VectorXd& b,
                        const GridFunction& u) const {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> A = A_col;
    const Index m = A.rows();
    Eigen::VectorXd x(m), next(m), diag(m);
    for (Index k = 0; k < m; ++k) x[k] = u[d_.interior[k]];
    diag = A.diagonal();
    const double target = 1e-2 * opts_.tol_residual * std::max(1.0, b.cwiseAbs().maxCoeff());
    for (int sweep = 0; sweep < opts_.relaxation_max_sweeps; ++sweep) {
      if (opts_.sweep_mode == SweepMode::GaussSeidel) {
        for (Index k = 0; k < m; ++k) {
          double s = b[k];
          for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, k); it; ++it) {
            if (it.col() != k) s -= it.value() * x[it.col()];
          }
          x[k] = s / diag[k];
        }
      } else {
#pragma omp parallel for num_threads(threads_) schedule(static)
        for (Index k = 0; k < m; ++k) {
          double s = b[k];
          for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, k); it; ++it) {
            if (it.col() != k) s -= it.value() * x[it.col()];
          }
          next[k] = s / diag[k];
        }
        x.swap(next);
      }
      if (sweep % 16 == 15 && (A * x - b).cwiseAbs().maxCoeff() <= target) return x;
    }
    if ((A * x - b).cwiseAbs().maxCoeff() <= target) return x;
    throw NonConvergence("inner_solve: relaxation did not reach the linear tolerance", SolveReport{}, u);
  }

  const Discrete& d_;
  const SolveOptions& opts_;
  InnerCache& cache_;
  int threads_;
  int iterations_ = 0;
  bool constrained_ = true;
};

void project(const Discrete& d, GridFunction& u) {
  if (d.kind != Kind::Obstacle) return;
  for (Index node : d.interior) u[node] = std::max(u[node], d.obstacle[node]);
}

std::vector<double> eps_schedule(const SolveOptions& opts) {
  std::vector<double> path{opts.eps_start};
  while (path.back() > opts.eps_min) path.push_back(std::max(path.back() * opts.eps_factor, opts.eps_min));
  return path;
}

void require_valid(const ProblemSpec& spec) {
  const auto diagnostics = validate_problem(spec);
  if (diagnostics.empty()) return;
  std::string msg = "invalid problem:";
  for (const auto& d : diagnostics) msg += " [" + d + "]";
  throw ValidationError(msg);
}

void require_same_grid(const GridPtr& grid, const GridFunction& u, const char* where) {
  if (!u.grid || u.grid->size() != grid->size() || u.values.size() != grid->size()) {
    throw ValidationError(std::string(where) + ": grid mismatch");
  }
}

InnerProblem frozen_problem(const Discrete& d, const GridFunction& u, double eps, int threads) {
  InnerProblem P;
  const Index m = d.size();
  P.rhs.resize(m);
  P.absorption = Eigen::VectorXd::Zero(m);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (Index k = 0; k < m; ++k) {
    const double H = d.degeneracy(u, k, eps);
    if (d.kind == Kind::DeadCore) {
      const double v = std::max(u[d.interior[k]], kDeadCoreFloor);
      P.rhs[k] = 0.0;
      P.absorption[k] = d.f0[k] * std::pow(v, d.sigma - 1) / H;
    } else {
      P.rhs[k] = d.f[k] / H;
    }
  }
  return P;
}

// Newton correction: the Jacobian carries the active policy of F_h and the derivative of H
// through the one-sided slope. Obstacle rows where phi - u dominates pin u to phi
// (semismooth Newton on max(phi - u, r)). mu > 0 inflates the diagonal of the free rows,
// trading Newton's reach for a more local, Jacobi-like correction. Empty when singular.
Eigen::VectorXd newton_step(const Discrete& d, const GridFunction& u, double eps, double mu) {
  const Index m = d.size();
  const Grid& grid = *d.grid;
  const int n = grid.dim();
  const double h = grid.h();
  const double ep = eps * d.properness;
  const double eg = eps * d.eps_scale;
  std::vector<Index> slot(grid.size(), -1);
  for (Index k = 0; k < m; ++k) slot[d.interior[k]] = k;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m) * (4 * n + 1));
  Eigen::VectorXd rhs(m);
  std::vector<std::pair<Index, double>> row;
  for (Index k = 0; k < m; ++k) {
    const Index node = d.interior[k];
    Control control;
    const double Fu = d.op.apply(u.values, node, &control);
    const double H = d.degeneracy(u, k, eps);
    const double Lu = ep * u[node] + Fu;
    rhs[k] = -(H * Lu - d.source(u, k));

    row.clear();
    auto add = [&](Index nb, double w) {
      if (slot[nb] >= 0) row.emplace_back(slot[nb], w);
    };
    const double center = d.op.linear_form(node, control, [&](Index nb, double w) { add(nb, H * w); });
    double diag = H * (center + ep);
    if (d.kind == Kind::DeadCore && u[node] > kDeadCoreFloor && d.sigma > 0) {
      // Below sigma = 1 the derivative of u^sigma blows up at the free boundary; the secant
      // slope u^(sigma-1) keeps the step bounded there.
      diag -= d.f0[k] * std::max(d.sigma, 1.0) * std::pow(u[node], d.sigma - 1);
    }

    // dH/du through s = |(s_1, ..., s_n)|, s_i = (|fwd_i| + |bwd_i|)/2.
    const double s = shifted_slope(u, node, d.zeta);
    const double base = eg + s;
    const double K = degeneracy_kernel(d.p[k], d.q[k], d.a[k], s, eg);
    const double floor = eg > 0 ? std::pow(eg, d.q_max) * d.L1 : 0.0;
    if (s > 0 && K > floor) {
      const double dK = d.p[k] * std::pow(base, d.p[k] - 1) + d.a[k] * d.q[k] * std::pow(base, d.q[k] - 1);
      Eigen::VectorXi e = Eigen::VectorXi::Zero(n);
      for (int i = 0; i < n; ++i) {
        e[i] = 1;
        const Index up = grid.neighbor(node, e), down = grid.neighbor(node, -e);
        e[i] = 0;
        const double fwd = (u[up] - u[node]) / h + d.zeta[i];
        const double bwd = (u[node] - u[down]) / h + d.zeta[i];
        const double si = 0.5 * (std::abs(fwd) + std::abs(bwd));
        const double w = dK * Lu * si / s * 0.5 / h;
        const double sf = fwd > 0 ? 1.0 : fwd < 0 ? -1.0 : 0.0;
        const double sb = bwd > 0 ? 1.0 : bwd < 0 ? -1.0 : 0.0;
        add(up, w * sf);
        add(down, -w * sb);
        diag += w * (sb - sf);
      }
    }
    // Active set of max(phi - u, r / D), the same function the residual reports.
    if (d.kind == Kind::Obstacle && d.obstacle[node] - u[node] >= -rhs[k] / d.row_scale(u, k, eps)) {
      trip.emplace_back(k, k, 1.0);
      rhs[k] = d.obstacle[node] - u[node];
      continue;
    }
    for (const auto& [j, w] : row) trip.emplace_back(k, j, w);
    trip.emplace_back(k, k, diag * (1 + mu));
  }
  Eigen::SparseMatrix<double> J(m, m);
  J.setFromTriplets(trip.begin(), trip.end());
  J.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) return {};
  Eigen::VectorXd step = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !step.allFinite()) return {};
  return step;
}

// Unscaled equation residual on the non-contact set {u > phi + 10 tol}.
double complementarity(const Discrete& d, const GridFunction& u, double eps, const SolveOptions& opts, int threads) {
  const Eigen::VectorXd r = equation_residual(d, u, eps, threads);
  double worst = 0;
  for (Index k = 0; k < d.size(); ++k) {
    const Index node = d.interior[k];
    if (u[node] > d.obstacle[node] + 10 * opts.tol_residual) worst = std::max(worst, std::abs(r[k]));
  }
  return worst;
}

SolveResult run_continuation(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts) {
  opts.validate();
  require_valid(spec);
  const auto t0 = std::chrono::steady_clock::now();
  const Discrete d(spec, grid);
  const int threads = thread_spec(opts).threads;

  SolveReport report;
  report.variant = d.kind == Kind::Plain ? "plain" : d.kind == Kind::DeadCore ? "deadcore" : "obstacle";
  report.sweep_mode = opts.sweep_mode;
  report.linear_solver = opts.linear_solver;
  report.threads = threads;
  report.eps_path = eps_schedule(opts);

  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  auto fail = [&](const std::string& what, const GridFunction& u) {
    report.wall_time = elapsed();
    throw NonConvergence(what, report, u);
  };

  // Initial guess: Dirichlet data, then one inner solve with H = 1 at the first level
  // (the dead core starts from the harmonic-like extension without absorption). The
  // obstacle starts from the unconstrained solve: policy iteration started at full
  // contact releases only one node per side and sweep.
  GridFunction u(grid, d.g);
  InnerCache cache;
  InnerSolver inner(d, opts, cache);
  {
    InnerProblem P;
    P.rhs = d.kind == Kind::DeadCore ? Eigen::VectorXd::Zero(d.size()) : d.f;
    P.absorption = Eigen::VectorXd::Zero(d.size());
    try {
      if (d.kind == Kind::Obstacle) {
        inner.run(u, P, report.eps_path.front(), false);
        report.inner_iterations_total += inner.iterations();
      }
      inner.run(u, P, report.eps_path.front());
      project(d, u);
    } catch (const NonConvergence& e) {
      fail(e.what(), e.partial());
    }
    report.inner_iterations_total += inner.iterations();
  }

  GridFunction previous_level = u;
  for (std::size_t level = 0; level < report.eps_path.size(); ++level) {
    const double eps = report.eps_path[level];
    const bool last = level + 1 == report.eps_path.size();
    double damping = opts.damping;
    double r_prev = sup_norm(residual_field(d, u, eps, threads));
    report.residual_history.push_back(r_prev);
    report.residual_level.push_back(static_cast<int>(level));
    // The obstacle residual is scaled to units of u; the last level also asks the unscaled
    // equation residual off the contact set to meet the tolerance.
    auto settled = [&](double r, const GridFunction& v) {
      if (r > opts.tol_residual) return false;
      return d.kind != Kind::Obstacle || !last || complementarity(d, v, eps, opts, threads) <= opts.tol_residual;
    };
    bool done = settled(r_prev, u);
    while (!done) {
      if (report.outer_iterations >= opts.outer_max) {
        std::ostringstream msg;
        msg << "solve: outer iteration limit reached at eps = " << eps << " (residual " << r_prev << ")";
        fail(msg.str(), u);
      }
      {
        // Newton with backtracking first, then with an inflated diagonal; the damped
        // frozen-coefficient step is the fallback.
        bool accepted = false;
        for (double mu : {0.0, 1.0, 10.0, 100.0}) {
          if (accepted) break;
          const Eigen::VectorXd step = newton_step(d, u, eps, mu);
          for (double theta = 1; step.size() > 0 && theta >= 1.0 / 64; theta *= 0.5) {
          GridFunction next = u;
          for (Index k = 0; k < d.size(); ++k) next[d.interior[k]] += theta * step[k];
          project(d, next);
          const double r_next = sup_norm(residual_field(d, next, eps, threads));
          if (r_next < r_prev) {
            const double increment = (next.values - u.values).cwiseAbs().maxCoeff();
            ++report.outer_iterations;
            u = std::move(next);
            r_prev = r_next;
            report.residual_history.push_back(r_next);
            report.residual_level.push_back(static_cast<int>(level));
            done = settled(r_next, u) || (!last && increment <= opts.tol_increment);
            accepted = true;
            break;
          }
          report.rejected_residuals.push_back(r_next);
          }
        }
        if (accepted) continue;
      }
      const InnerProblem P = frozen_problem(d, u, eps, threads);
      GridFunction trial = u;
      try {
        inner.run(trial, P, eps);
        project(d, trial);
      } catch (const NonConvergence& e) {
        fail(e.what(), e.partial());
      }
      report.inner_iterations_total += inner.iterations();
      ++report.outer_iterations;

      GridFunction next = u;
      double increment = 0;
      for (Index node : d.interior) {
        next[node] = (1 - damping) * u[node] + damping * trial[node];
        increment = std::max(increment, std::abs(next[node] - u[node]));
      }
      project(d, next);
      const double r_next = sup_norm(residual_field(d, next, eps, threads));
      if (r_next > r_prev) {
        report.rejected_residuals.push_back(r_next);
        damping *= 0.5;
        if (damping < 1e-8) {
          std::ostringstream msg;
          msg << "solve: damping collapsed at eps = " << eps << " (residual " << r_prev << ")";
          fail(msg.str(), u);
        }
        continue;
      }
      u = std::move(next);
      r_prev = r_next;
      report.residual_history.push_back(r_next);
      report.residual_level.push_back(static_cast<int>(level));
      done = settled(r_next, u) || (!last && increment <= opts.tol_increment);
      if (last && !done && increment <= opts.tol_increment * 1e-4) {
        std::ostringstream msg;
        msg << "solve: iteration stagnated at eps = " << eps << " with residual " << r_next;
        fail(msg.str(), u);
      }
    }
    if (level > 0) {
      report.level_distances.push_back((u.values - previous_level.values).cwiseAbs().maxCoeff());
    }
    previous_level = u;
  }

  if (d.kind == Kind::DeadCore) {
    double undershoot = 0;
    for (Index node : d.interior) {
      undershoot = std::max(undershoot, -u[node]);
      u[node] = std::max(u[node], 0.0);
    }
    report.clamped_undershoot = undershoot;
  }
  const double eps_final = report.eps_path.back();
  report.final_residual = sup_norm(residual_field(d, u, eps_final, threads));
  if (d.kind == Kind::Obstacle) report.complementarity_residual = complementarity(d, u, eps_final, opts, threads);
  report.converged = true;
  report.wall_time = elapsed();
  return {u, report};
}

}  // namespace

GridFunction degeneracy_field(const ProblemSpec& spec, const GridFunction& u, double eps, int threads) {
  const Discrete d(spec, u.grid);
  GridFunction out(u.grid);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (Index k = 0; k < d.size(); ++k) out[d.interior[k]] = d.degeneracy(u, k, eps);
  return out;
}

GridFunction residual(const ProblemSpec& spec, const GridFunction& u, double eps) {
  if (!(eps >= 0)) throw ValidationError("residual: eps must be nonnegative");
  const Discrete d(spec, u.grid);
  return residual_field(d, u, eps, 1);
}

GridFunction inner_solve(const ProblemSpec& spec, const GridFunction& H_frozen, double eps, const GridFunction& u0,
                         const SolveOptions& opts) {
  opts.validate();
  if (!(eps > 0)) throw ValidationError("inner_solve: eps must be positive");
  require_same_grid(u0.grid, H_frozen, "inner_solve");
  const Discrete d(spec, u0.grid);
  InnerProblem P;
  P.rhs.resize(d.size());
  P.absorption = Eigen::VectorXd::Zero(d.size());
  for (Index k = 0; k < d.size(); ++k) {
    const double H = H_frozen[d.interior[k]];
    if (!(H > 0)) throw ValidationError("inner_solve: frozen degeneracy must be positive");
    P.rhs[k] = d.f[k] / H;
  }
  GridFunction u = u0;
  for (Index node : d.grid->dirichlet()) u[node] = d.g[node];
  InnerCache cache;
  InnerSolver inner(d, opts, cache);
  inner.run(u, P, eps);
  return u;
}

SolveResult solve(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts) {
  if (!std::holds_alternative<PlainVariant>(spec.variant)) {
    throw ValidationError("solve: use solve_deadcore or solve_obstacle for this variant");
  }
  return run_continuation(spec, grid, opts);
}

SolveResult solve(const ProblemSpec& spec, const SolveOptions& opts) {
  return solve(spec, build_problem_grid(spec, opts), opts);
}

SolveResult solve_deadcore(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts) {
  if (!std::holds_alternative<DeadCoreVariant>(spec.variant)) throw ValidationError("solve_deadcore: not a dead-core problem");
  return run_continuation(spec, grid, opts);
}

SolveResult solve_deadcore(const ProblemSpec& spec, const SolveOptions& opts) {
  return solve_deadcore(spec, build_problem_grid(spec, opts), opts);
}

SolveResult solve_obstacle(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts) {
  if (!std::holds_alternative<ObstacleVariant>(spec.variant)) throw ValidationError("solve_obstacle: not an obstacle problem");
  return run_continuation(spec, grid, opts);
}

SolveResult solve_obstacle(const ProblemSpec& spec, const SolveOptions& opts) {
  return solve_obstacle(spec, build_problem_grid(spec, opts), opts);
}

SolveResult solve_any(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts) {
  return run_continuation(spec, grid, opts);
}

ComparisonResult comparison_check(const GridFunction& u1, const GridFunction& u2, double tol) {
  if (u1.grid != u2.grid && (!u1.grid || !u2.grid || u1.grid->size() != u2.grid->size() ||
                             u1.grid->h() != u2.grid->h())) {
    throw ValidationError("comparison_check: grid mismatch");
  }
  ComparisonResult out;
  for (Index node = 0; node < u1.grid->size(); ++node) {
    if (u1.grid->kind(node) == NodeKind::Exterior) continue;
    const double violation = u2[node] - u1[node];
    if (violation > out.worst_violation) {
      out.worst_violation = violation;
      out.location = node;
    }
  }
  out.holds = out.worst_violation <= tol;
  return out;
}

}  // namespace degenlab
