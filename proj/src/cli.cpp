#include "degenlab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "degenlab/barriers.hpp"
#include "degenlab/config.hpp"
#include "degenlab/error.hpp"
#include "degenlab/reglab.hpp"

namespace degenlab {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

json to_json(const SolveReport& r) {
  return json{{"converged", r.converged},
              {"variant", r.variant},
              {"eps_path", r.eps_path},
              {"residual_history", r.residual_history},
              {"residual_level", r.residual_level},
              {"rejected_residuals", r.rejected_residuals},
              {"level_distances", r.level_distances},
              {"outer_iterations", r.outer_iterations},
              {"inner_iterations_total", r.inner_iterations_total},
              {"final_residual", r.final_residual},
              {"wall_time", r.wall_time},
              {"sweep_mode", to_string(r.sweep_mode)},
              {"linear_solver", to_string(r.linear_solver)},
              {"threads", r.threads},
              {"clamped_undershoot", r.clamped_undershoot},
              {"complementarity_residual", r.complementarity_residual}};
}

namespace {

const std::vector<std::string> kCommands = {"solve", "probe", "deadcore", "obstacle", "barriers", "scaling", "validate"};

Point to_point(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

json inequalities_to_json(const std::vector<BarrierInequality>& checks) {
  json out = json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"strict", c.strict}, {"margin", c.margin()},
                   {"holds", c.holds()}});
  }
  return out;
}

json params_to_json(const BarrierParams& p) {
  const auto again = reverify(p);
  return json{{"kind", to_string(p.kind)},
              {"values", p.values},
              {"provenance", inequalities_to_json(p.provenance)},
              {"reverified", inequalities_to_json(again)},
              {"all_hold", all_hold(again)},
              {"notes", p.notes}};
}

json check_to_json(const SupersolutionCheck& c, double tol) {
  return json{{"pass", c.pass}, {"worst_margin", c.worst_margin}, {"location", c.location}, {"checked", c.checked},
              {"tol", tol}};
}

struct CsvTable {
  std::string text;
  explicit CsvTable(const std::string& header) : text(header + "\r\n") {}
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text += (i ? "," : "") + cells[i];
    text += "\r\n";
  }
};

// One run of one command; `report` accumulates everything that ends up in report.json.
class Session {
 public:
  Session(std::string command, ExperimentConfig config, fs::path out, std::uint64_t seed)
      : command_(std::move(command)), config_(std::move(config)), out_(std::move(out)), seed_(seed) {
    report_["command"] = command_;
    report_["seed"] = seed_;
    report_["threads"] = config_.solve.threads;
    report_["config"] = config_to_json(config_);
  }

  json& report() { return report_; }

  void run() {
    if (config_.experiment && *config_.experiment != command_) {
      throw ValidationError("config.experiment is '" + *config_.experiment + "' but the command is '" + command_ + "'");
    }
    spec_ = build_problem(config_.problem);
    const auto diagnostics = validate_problem(spec_);
    config_.solve.validate();
    if (command_ == "validate") {
      report_["valid"] = diagnostics.empty();
      report_["diagnostics"] = diagnostics;
      if (!diagnostics.empty()) throw ValidationFailure(diagnostics);
      return;
    }
    if (!diagnostics.empty()) throw ValidationFailure(diagnostics);

    if (command_ == "barriers") return barriers();
    if (command_ == "scaling") return scaling();
    if (command_ == "deadcore" && !std::holds_alternative<DeadCoreVariant>(spec_.variant)) {
      throw ValidationError("deadcore: problem.variant.kind must be deadcore");
    }
    if (command_ == "obstacle" && !std::holds_alternative<ObstacleVariant>(spec_.variant)) {
      throw ValidationError("obstacle: problem.variant.kind must be obstacle");
    }
    solve_and_probe();
  }

  void write_outputs() {
    if (profiles_) write_atomic((out_ / "profiles.csv").string(), profiles_->text);
    if (estimates_) write_atomic((out_ / "estimates.csv").string(), estimates_->text);
    if (!barriers_.is_null()) write_atomic((out_ / "barriers.json").string(), barriers_.dump(2) + "\n");
    write_report();
  }

  void write_report() { write_atomic((out_ / "report.json").string(), report_.dump(2) + "\n"); }

  struct ValidationFailure : ValidationError {
    explicit ValidationFailure(std::vector<std::string> d)
        : ValidationError("problem fails validation"), diagnostics(std::move(d)) {}
    std::vector<std::string> diagnostics;
  };

 private:
  void solve_and_probe() {
    const GridPtr grid = build_problem_grid(spec_, config_.solve);
    SolveResult res;
    try {
      res = solve_any(spec_, grid, config_.solve);
    } catch (const NonConvergence& e) {
      report_["solve"] = to_json(e.report());
      throw;
    }
    report_["solve"] = to_json(res.report);
    report_["grid"] = {{"h", grid->h()},
                       {"stencil_radius", grid->stencil_radius()},
                       {"interior_nodes", grid->interior().size()},
                       {"dirichlet_nodes", grid->dirichlet().size()}};
    const GridFunction& u = res.u;
    const double tol = config_.solve.tol_residual;

    if (const auto* dc = std::get_if<DeadCoreVariant>(&spec_.variant)) {
      std::size_t core = 0;
      for (Index node : grid->interior()) core += u[node] < 10 * tol;
      report_["deadcore"] = {{"sigma", dc->sigma},
                             {"exponent", deadcore_exponent(spec_.law.exponents.bounds.p_max, dc->sigma)},
                             {"dead_core_nodes", core},
                             {"clamped_undershoot", res.report.clamped_undershoot}};
    }
    if (const auto* ob = std::get_if<ObstacleVariant>(&spec_.variant)) {
      std::size_t contact = 0;
      double gap = std::numeric_limits<double>::infinity();
      for (Index node : grid->interior()) {
        const double d = u[node] - ob->obstacle(grid->point(node));
        contact += d <= 10 * tol;
        gap = std::min(gap, d);
      }
      report_["obstacle"] = {{"contact_nodes", contact},
                             {"min_gap", gap},
                             {"complementarity_residual", res.report.complementarity_residual}};
    }

    const auto lip = lipschitz_quotient(u, grid->interior(), seed_);
    report_["lipschitz"] = {{"value", lip.value}, {"seed", lip.seed}, {"pairs", lip.pairs}, {"warnings", lip.warnings}};

    const ProbeConfig& probe = config_.probe;
    if (probe.centers.empty()) return;
    const auto& bounds = spec_.law.exponents.bounds;
    std::optional<NondegeneracyConstant> ndc;
    if (probe.nondegeneracy) ndc = nondegeneracy_constant(spec_, probe.nondegeneracy->m);

    profiles_.emplace("center_id,r,osc0,osc1_grad,osc1_lsq");
    estimates_.emplace("center_id,order,slope,alpha,r2");
    json centers = json::array();
    for (std::size_t id = 0; id < probe.centers.size(); ++id) {
      const Point x0 = to_point(probe.centers[id]);
      if (x0.size() != spec_.dim()) throw ValidationError("probe.centers: wrong dimension");
      const std::vector<double> radii = probe.radii.empty() ? default_radii(*grid, x0) : probe.radii;
      const OscillationProfile prof = oscillation_profile(u, x0, radii);
      const std::string cid = std::to_string(id);
      for (std::size_t k = 0; k < radii.size(); ++k) {
        profiles_->row({cid, format_number(radii[k]), format_number(prof.osc0[k]), format_number(prof.osc1_grad[k]),
                        format_number(prof.osc1_lsq[k])});
      }
      json entry{{"center_id", id}, {"center", probe.centers[id]}, {"gradient_norm", prof.gradient_norm}};
      const double p_x0 = spec_.law.exponents.p(x0);
      const double alpha_pt = pointwise_alpha(p_x0);
      entry["pointwise_alpha"] = alpha_pt;
      entry["sharp_alpha"] = sharp_alpha(probe.alpha_F, bounds.p_max, spec_.beta_g, probe.alpha_F_attained);
      // Singular-zone probe: |grad u(x0)| beside r^alpha, no membership verdict.
      json zone = json::array();
      for (double r : radii) zone.push_back({{"r", r}, {"r_pow_alpha", std::pow(r, alpha_pt)}});
      entry["singular_zone"] = zone;
      json fits = json::array();
      for (int order : {0, 1}) {
        try {
          const ExponentEstimate e = fit_exponent(prof, order);
          estimates_->row({cid, std::to_string(order), format_number(e.slope), format_number(e.alpha),
                           format_number(e.r_squared)});
          fits.push_back({{"order", order}, {"slope", e.slope}, {"intercept", e.intercept}, {"alpha", e.alpha},
                          {"r2", e.r_squared}, {"r_min", e.r_min}, {"r_max", e.r_max}, {"used", e.used}});
        } catch (const DegenerateFitError& e) {
          fits.push_back({{"order", order}, {"error", e.what()}});
        }
      }
      entry["fits"] = fits;
      if (ndc) {
        const auto nd = nondegeneracy_check(u, x0, probe.nondegeneracy->radii, ndc->c_frak, bounds.p_min);
        json verdicts = json::array();
        for (const auto& v : nd.verdicts) {
          verdicts.push_back({{"r", v.r}, {"quotient", v.quotient}, {"pass", v.pass}, {"skipped", v.skipped}});
        }
        entry["nondegeneracy"] = {{"c0", ndc->c_frak}, {"T0", ndc->T0}, {"branch", ndc->branch},
                                  {"verdicts", verdicts}, {"warnings", nd.warnings}, {"all_pass", nd.all_pass()}};
      }
      centers.push_back(entry);
    }
    report_["probe"] = centers;
  }

  void barriers() {
    const GridPtr grid = build_problem_grid(spec_, config_.solve);
    const BarrierConfig& bc = config_.barriers;
    const double tol = 10 * grid->h();
    barriers_ = json{{"barriers", json::array()}};
    if (bc.global_center) {
      const auto res = global_supersolution(spec_, grid, to_point(*bc.global_center));
      json entry = params_to_json(res.params);
      entry["verification"] = check_to_json(verify_supersolution(res.v, spec_, BarrierSide::Upper, tol), tol);
      barriers_["barriers"].push_back(entry);
    }
    for (const auto& s : bc.spheres) {
      const auto res = exterior_sphere_barrier(spec_, grid, to_point(s.z), to_point(s.center), s.r);
      json entry = params_to_json(res.params);
      entry["verification"] = check_to_json(verify_supersolution(res.v, spec_, BarrierSide::Upper, tol), tol);
      barriers_["barriers"].push_back(entry);
    }
    if (bc.distance) {
      const double K = bc.distance->K_geom ? *bc.distance->K_geom : graph_curvature_bound(spec_.domain, *grid);
      const DistanceDelta dd = distance_barrier_delta(spec_, bc.distance->gamma, bc.distance->r, K, bc.distance->eta);
      const GridFunction v = distance_barrier(spec_, grid, dd.delta0, bc.distance->gamma, bc.distance->r);
      std::vector<Index> collar;
      for (Index node : grid->interior()) {
        if (boundary_distance(spec_.domain, grid->point(node)) < dd.delta0) collar.push_back(node);
      }
      json entry = params_to_json(dd.params);
      entry["delta"] = {{"delta0", dd.delta0}, {"bracket", dd.bracket}, {"cap", dd.cap},
                        {"cap_limited", dd.cap_limited}, {"margin_at_half", dd.margin_at_half}};
      entry["verification"] =
          check_to_json(verify_supersolution(v, spec_, BarrierSide::Upper, tol, &collar), tol);
      barriers_["barriers"].push_back(entry);
    }
    const AbpBound abp = abp_bound(spec_, *grid, bc.abp_C);
    barriers_["abp"] = {{"bound", abp.bound},         {"g_plus_sup", abp.g_plus_sup}, {"norm", abp.norm},
                        {"term_pmin", abp.term_pmin}, {"term_qmax", abp.term_qmax},   {"C", bc.abp_C}};
    if (bc.nondegeneracy_m) {
      const auto nd = nondegeneracy_constant(spec_, *bc.nondegeneracy_m);
      barriers_["nondegeneracy"] = {{"m", *bc.nondegeneracy_m}, {"T0", nd.T0},     {"c", nd.c_frak},
                                    {"branch", nd.branch},       {"residual", nd.residual},
                                    {"xi2", nd.xi2},             {"xi3", nd.xi3}};
    }
    bool ok = true;
    for (const auto& b : barriers_["barriers"]) ok = ok && b["all_hold"].get<bool>() && b["verification"]["pass"].get<bool>();
    report_["barriers_all_pass"] = ok;
  }

  void scaling() {
    const ScalingConfig& sc = config_.scaling;
    const Point x0 = sc.x0.empty() ? Point::Zero(spec_.dim()) : to_point(sc.x0);
    const EquivarianceReport rep = scale_equivariance_test(spec_, sc.kappa, sc.tau, x0, config_.solve);
    report_["scaling"] = {{"kappa", sc.kappa},           {"tau", sc.tau},
                          {"max_mismatch", rep.max_mismatch}, {"compared", rep.compared},
                          {"original", to_json(rep.original)}, {"scaled", to_json(rep.scaled)}};
  }

  std::string command_;
  ExperimentConfig config_;
  fs::path out_;
  std::uint64_t seed_;
  ProblemSpec spec_;
  json report_;
  std::optional<CsvTable> profiles_;
  std::optional<CsvTable> estimates_;
  json barriers_;
};

// Best effort: the diagnostics file must not mask the original failure.
void write_failure(const fs::path& out, json report, const std::string& status, const std::string& message,
                   const std::vector<std::string>& diagnostics = {}) {
  report["status"] = status;
  report["error"] = message;
  if (!diagnostics.empty()) report["diagnostics"] = diagnostics;
  try {
    fs::create_directories(out);
    write_atomic((out / "report.json").string(), report.dump(2) + "\n");
  } catch (const std::exception&) {
  }
}

std::optional<int> env_threads() {
  const char* s = std::getenv("DEGENLAB_THREADS");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1) throw ValidationError("DEGENLAB_THREADS must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"degenlab: degenerate fully nonlinear elliptic experiments"};
  std::string command, config_path, out_dir;
  int threads = 0;
  std::uint64_t seed = kDefaultSeed;
  app.add_option("command", command, "solve | probe | deadcore | obstacle | barriers | scaling | validate")
      ->required()
      ->check(CLI::IsMember(kCommands));
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (default: config 'out', else degenlab_out)");
  app.add_option("--threads", threads, "worker threads (fallback: DEGENLAB_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for sampled Lipschitz pairs");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  fs::path out = out_dir.empty() ? fs::path("degenlab_out") : fs::path(out_dir);
  json partial{{"command", command}, {"config_path", config_path}};
  try {
    ExperimentConfig config = load_config(config_path);
    if (out_dir.empty() && !config.out.empty()) out = config.out;
    if (threads > 0) {
      config.solve.threads = threads;
    } else if (const auto t = env_threads()) {
      config.solve.threads = *t;
    }
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory '" + out.string() + "': " + ec.message());

    Session session(command, config, out, seed);
    try {
      session.run();
    } catch (const Session::ValidationFailure& e) {
      session.report()["status"] = "validation_error";
      session.report()["diagnostics"] = e.diagnostics;
      session.write_report();
      for (const auto& d : e.diagnostics) std::fprintf(stderr, "degenlab: %s\n", d.c_str());
      return kExitValidation;
    } catch (const NonConvergence& e) {
      session.report()["status"] = "nonconvergence";
      session.report()["error"] = e.what();
      session.write_report();
      std::fprintf(stderr, "degenlab: %s\n", e.what());
      return kExitNonConvergence;
    } catch (const Error& e) {
      if (dynamic_cast<const IoError*>(&e)) throw;
      const bool numeric = dynamic_cast<const NumericFailure*>(&e) != nullptr;
      session.report()["status"] = numeric ? "numeric_failure" : "validation_error";
      session.report()["error"] = e.what();
      session.write_report();
      std::fprintf(stderr, "degenlab: %s\n", e.what());
      return numeric ? kExitNonConvergence : kExitValidation;
    }
    session.report()["status"] = "ok";
    session.write_outputs();
    return kExitOk;
  } catch (const IoError& e) {
    std::fprintf(stderr, "degenlab: %s\n", e.what());
    write_failure(out, partial, "io_error", e.what());
    return kExitIo;
  } catch (const Error& e) {
    std::fprintf(stderr, "degenlab: %s\n", e.what());
    write_failure(out, partial, "validation_error", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "degenlab: internal error: %s\n", e.what());
    write_failure(out, partial, "internal_error", e.what());
    return kExitInternal;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace degenlab
