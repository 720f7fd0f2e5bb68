#pragma once

// eps-continuation solver: an outer damped fixed point on the frozen
// degeneracy factor around Howard policy iteration for eps u + F_h u = f / H.

#include <string>
#include <vector>

#include "degenlab/error.hpp"
#include "degenlab/grid.hpp"
#include "degenlab/model.hpp"
#include "degenlab/pucci.hpp"

namespace degenlab {

enum class SweepMode { Jacobi, GaussSeidel };
enum class LinearSolver { Direct, Relaxation };

const char* to_string(SweepMode mode);
const char* to_string(LinearSolver solver);

struct SolveOptions {
  double h = 1.0 / 32;
  int stencil_radius = 2;
  double eps_start = 1e-1;
  double eps_min = 1e-4;
  double eps_factor = 0.5;
  double damping = 0.5;
  int outer_max = 500;
  int inner_max = 50;
  double tol_residual = 1e-8;
  double tol_increment = 1e-10;
  SweepMode sweep_mode = SweepMode::Jacobi;
  LinearSolver linear_solver = LinearSolver::Direct;
  /// Relaxation only: sweep budget per policy system.
  int relaxation_max_sweeps = 200000;
  int threads = 1;

  void validate() const;
};

struct SolveReport {
  bool converged = false;
  std::string variant = "plain";
  std::vector<double> eps_path;
  /// Accepted outer steps: sup-norm residual at the current eps level.
  std::vector<double> residual_history;
  /// eps level index of each residual_history entry.
  std::vector<int> residual_level;
  /// Steps rejected because the residual grew; each halves the damping.
  std::vector<double> rejected_residuals;
  /// Sup-norm distance between solutions of consecutive eps levels.
  std::vector<double> level_distances;
  int outer_iterations = 0;
  int inner_iterations_total = 0;
  double final_residual = 0;
  double wall_time = 0;
  SweepMode sweep_mode = SweepMode::Jacobi;
  LinearSolver linear_solver = LinearSolver::Direct;
  int threads = 1;
  /// Dead core: largest negative part removed by the final clamp.
  double clamped_undershoot = 0;
  /// Obstacle: sup of the equation residual on {u > obstacle + 10 tol}.
  double complementarity_residual = 0;
};

struct SolveResult {
  GridFunction u;
  SolveReport report;
};

/// Thrown when a level or an inner solve runs out of iterations; carries the partial state.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, SolveReport report, GridFunction partial)
      : Error(what), report_(std::move(report)), partial_(std::move(partial)) {}
  const SolveReport& report() const { return report_; }
  const GridFunction& partial() const { return partial_; }

 private:
  SolveReport report_;
  GridFunction partial_;
};

/// Stencil radius actually used: 1 when the scheme only needs the axis basis.
int effective_stencil_radius(const ProblemSpec& spec, const SolveOptions& opts);
GridPtr build_problem_grid(const ProblemSpec& spec, const SolveOptions& opts);
StencilOperator make_operator(const ProblemSpec& spec, const GridPtr& grid);

/// H_eps(x, zeta + slope) at every interior node (zero elsewhere).
GridFunction degeneracy_field(const ProblemSpec& spec, const GridFunction& u, double eps, int threads = 1);

/// Interior: H_eps * (eps u + F_h u) - f, Dirichlet: u - g. Dead-core specs use f0 (u+)^sigma as f.
/// Obstacle specs report max(phi - u, r / D) with D = H_eps |center + eps| of the active stencil,
/// so both branches are in units of u.
GridFunction residual(const ProblemSpec& spec, const GridFunction& u, double eps);

/// Solves eps u + F_h u = f / H_frozen with Dirichlet data g by policy iteration.
GridFunction inner_solve(const ProblemSpec& spec, const GridFunction& H_frozen, double eps, const GridFunction& u0,
                         const SolveOptions& opts);

SolveResult solve(const ProblemSpec& spec, const SolveOptions& opts);
SolveResult solve(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts);
SolveResult solve_deadcore(const ProblemSpec& spec, const SolveOptions& opts);
SolveResult solve_deadcore(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts);
SolveResult solve_obstacle(const ProblemSpec& spec, const SolveOptions& opts);
SolveResult solve_obstacle(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts);
/// Dispatches on the variant.
SolveResult solve_any(const ProblemSpec& spec, const GridPtr& grid, const SolveOptions& opts);

struct ComparisonResult {
  bool holds = true;
  double worst_violation = 0;
  Index location = -1;
};

/// holds iff u1 >= u2 - tol at every non-Exterior node.
ComparisonResult comparison_check(const GridFunction& u1, const GridFunction& u2, double tol);

}  // namespace degenlab
