#include "degenlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "degenlab/error.hpp"
#include "degenlab/expression.hpp"

namespace degenlab {

using nlohmann::json;

namespace {

// Strict view of one JSON object: unknown keys fail at construction.
class Reader {
 public:
  Reader(const json& j, std::string where, std::set<std::string> keys) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ValidationError(where_ + ": expected an object");
    for (const auto& [key, value] : j.items()) {
      if (!keys.count(key)) throw ValidationError(where_ + ": unknown key '" + key + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return where_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ValidationError(path(key) + ": expected an integer");
    }
    try {
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(path(key) + ": " + e.what());
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) const {
    if (!has(key)) return;
    T value{};
    get(key, value);
    out = value;
  }

 private:
  const json& j_;
  std::string where_;
};

FieldSource field_from_json(const json& j, const std::string& where) {
  Reader r(j, where, {"const", "expr"});
  if (r.has("const") == r.has("expr")) throw ValidationError(where + ": give exactly one of 'const' or 'expr'");
  FieldSource f;
  if (r.has("const")) {
    if (!r.at("const").is_number()) throw ValidationError(where + ".const: expected a number");
    f.constant = r.at("const").get<double>();
  } else {
    if (!r.at("expr").is_string()) throw ValidationError(where + ".expr: expected a string");
    f.expr = r.at("expr").get<std::string>();
  }
  return f;
}

json field_to_json(const FieldSource& f) {
  if (f.constant) return json{{"const", *f.constant}};
  return json{{"expr", f.expr}};
}

void read_field(const Reader& r, const std::string& key, FieldSource& out) {
  if (r.has(key)) out = field_from_json(r.at(key), r.path(key));
}

void read_field(const Reader& r, const std::string& key, std::optional<FieldSource>& out) {
  if (r.has(key)) out = field_from_json(r.at(key), r.path(key));
}

SweepMode sweep_from_string(const std::string& s) {
  if (s == "jacobi") return SweepMode::Jacobi;
  if (s == "gauss_seidel") return SweepMode::GaussSeidel;
  throw ValidationError("solve.sweep_mode: expected jacobi or gauss_seidel, got '" + s + "'");
}

LinearSolver linear_from_string(const std::string& s) {
  if (s == "direct") return LinearSolver::Direct;
  if (s == "relaxation") return LinearSolver::Relaxation;
  throw ValidationError("solve.linear_solver: expected direct or relaxation, got '" + s + "'");
}

ProblemConfig problem_from_json(const json& j) {
  Reader r(j, "problem",
           {"domain", "operator", "law", "source", "boundary", "beta_g", "shift", "variant", "properness_scale"});
  ProblemConfig p;
  if (!r.has("domain")) throw ValidationError("problem.domain: required");
  {
    Reader d(r.at("domain"), "problem.domain", {"lower", "upper", "graph"});
    d.get("lower", p.domain.lower);
    d.get("upper", p.domain.upper);
    read_field(d, "graph", p.domain.graph);
  }
  if (r.has("operator")) {
    Reader o(r.at("operator"), "problem.operator", {"kind", "lambda", "Lambda", "diagonal"});
    o.get("kind", p.op.kind);
    o.get("lambda", p.op.lambda);
    o.get("Lambda", p.op.Lambda);
    if (o.has("diagonal")) {
      if (!o.at("diagonal").is_array()) throw ValidationError("problem.operator.diagonal: expected an array");
      int k = 0;
      for (const json& e : o.at("diagonal")) {
        p.op.diagonal.push_back(field_from_json(e, "problem.operator.diagonal[" + std::to_string(k++) + "]"));
      }
    }
  }
  if (r.has("law")) {
    Reader l(r.at("law"), "problem.law", {"p", "q", "a", "L1", "L2", "eps_gradient_scale"});
    read_field(l, "p", p.law.p);
    read_field(l, "q", p.law.q);
    read_field(l, "a", p.law.a);
    l.get("L1", p.law.L1);
    l.get("L2", p.law.L2);
    l.get("eps_gradient_scale", p.law.eps_gradient_scale);
  }
  read_field(r, "source", p.source);
  read_field(r, "boundary", p.boundary);
  r.get("beta_g", p.beta_g);
  r.get("shift", p.shift);
  if (r.has("variant")) {
    Reader v(r.at("variant"), "problem.variant", {"kind", "sigma", "f0", "obstacle"});
    v.get("kind", p.variant.kind);
    v.get("sigma", p.variant.sigma);
    read_field(v, "f0", p.variant.f0);
    read_field(v, "obstacle", p.variant.obstacle);
  }
  r.get("properness_scale", p.properness_scale);
  return p;
}

json problem_to_json(const ProblemConfig& p) {
  json domain{{"lower", p.domain.lower}, {"upper", p.domain.upper}};
  if (p.domain.graph) domain["graph"] = field_to_json(*p.domain.graph);
  json op{{"kind", p.op.kind}, {"lambda", p.op.lambda}, {"Lambda", p.op.Lambda}};
  if (!p.op.diagonal.empty()) {
    json diag = json::array();
    for (const auto& f : p.op.diagonal) diag.push_back(field_to_json(f));
    op["diagonal"] = diag;
  }
  json variant{{"kind", p.variant.kind}, {"sigma", p.variant.sigma}};
  if (p.variant.f0) variant["f0"] = field_to_json(*p.variant.f0);
  if (p.variant.obstacle) variant["obstacle"] = field_to_json(*p.variant.obstacle);
  return json{{"domain", domain},
              {"operator", op},
              {"law",
               {{"p", field_to_json(p.law.p)},
                {"q", field_to_json(p.law.q)},
                {"a", field_to_json(p.law.a)},
                {"L1", p.law.L1},
                {"L2", p.law.L2},
                {"eps_gradient_scale", p.law.eps_gradient_scale}}},
              {"source", field_to_json(p.source)},
              {"boundary", field_to_json(p.boundary)},
              {"beta_g", p.beta_g},
              {"shift", p.shift},
              {"variant", variant},
              {"properness_scale", p.properness_scale}};
}

SolveOptions solve_from_json(const json& j) {
  Reader r(j, "solve",
           {"h", "stencil_radius", "eps_start", "eps_min", "eps_factor", "damping", "outer_max", "inner_max",
            "tol_residual", "tol_increment", "sweep_mode", "linear_solver", "relaxation_max_sweeps", "threads"});
  SolveOptions o;
  r.get("h", o.h);
  r.get("stencil_radius", o.stencil_radius);
  r.get("eps_start", o.eps_start);
  r.get("eps_min", o.eps_min);
  r.get("eps_factor", o.eps_factor);
  r.get("damping", o.damping);
  r.get("outer_max", o.outer_max);
  r.get("inner_max", o.inner_max);
  r.get("tol_residual", o.tol_residual);
  r.get("tol_increment", o.tol_increment);
  std::string s;
  r.get("sweep_mode", s);
  if (!s.empty()) o.sweep_mode = sweep_from_string(s);
  s.clear();
  r.get("linear_solver", s);
  if (!s.empty()) o.linear_solver = linear_from_string(s);
  r.get("relaxation_max_sweeps", o.relaxation_max_sweeps);
  r.get("threads", o.threads);
  return o;
}

json solve_to_json(const SolveOptions& o) {
  return json{{"h", o.h},
              {"stencil_radius", o.stencil_radius},
              {"eps_start", o.eps_start},
              {"eps_min", o.eps_min},
              {"eps_factor", o.eps_factor},
              {"damping", o.damping},
              {"outer_max", o.outer_max},
              {"inner_max", o.inner_max},
              {"tol_residual", o.tol_residual},
              {"tol_increment", o.tol_increment},
              {"sweep_mode", to_string(o.sweep_mode)},
              {"linear_solver", to_string(o.linear_solver)},
              {"relaxation_max_sweeps", o.relaxation_max_sweeps},
              {"threads", o.threads}};
}

ProbeConfig probe_from_json(const json& j) {
  Reader r(j, "probe", {"centers", "radii", "alpha_F", "alpha_F_attained", "nondegeneracy"});
  ProbeConfig p;
  r.get("centers", p.centers);
  r.get("radii", p.radii);
  r.get("alpha_F", p.alpha_F);
  r.get("alpha_F_attained", p.alpha_F_attained);
  if (r.has("nondegeneracy")) {
    Reader n(r.at("nondegeneracy"), "probe.nondegeneracy", {"m", "radii"});
    NondegeneracyConfig nd;
    n.get("m", nd.m);
    n.get("radii", nd.radii);
    p.nondegeneracy = nd;
  }
  return p;
}

json probe_to_json(const ProbeConfig& p) {
  json j{{"centers", p.centers}, {"radii", p.radii}, {"alpha_F", p.alpha_F}, {"alpha_F_attained", p.alpha_F_attained}};
  if (p.nondegeneracy) j["nondegeneracy"] = {{"m", p.nondegeneracy->m}, {"radii", p.nondegeneracy->radii}};
  return j;
}

BarrierConfig barriers_from_json(const json& j) {
  Reader r(j, "barriers", {"global_center", "spheres", "distance", "abp_C", "nondegeneracy_m"});
  BarrierConfig b;
  r.get("global_center", b.global_center);
  if (r.has("spheres")) {
    if (!r.at("spheres").is_array()) throw ValidationError("barriers.spheres: expected an array");
    int k = 0;
    for (const json& e : r.at("spheres")) {
      Reader s(e, "barriers.spheres[" + std::to_string(k++) + "]", {"z", "center", "r"});
      SphereConfig sc;
      s.get("z", sc.z);
      s.get("center", sc.center);
      s.get("r", sc.r);
      b.spheres.push_back(sc);
    }
  }
  if (r.has("distance")) {
    Reader d(r.at("distance"), "barriers.distance", {"gamma", "r", "K_geom", "eta"});
    DistanceConfig dc;
    d.get("gamma", dc.gamma);
    d.get("r", dc.r);
    d.get("K_geom", dc.K_geom);
    d.get("eta", dc.eta);
    b.distance = dc;
  }
  r.get("abp_C", b.abp_C);
  r.get("nondegeneracy_m", b.nondegeneracy_m);
  return b;
}

json barriers_to_json(const BarrierConfig& b) {
  json j{{"abp_C", b.abp_C}};
  if (b.global_center) j["global_center"] = *b.global_center;
  json spheres = json::array();
  for (const auto& s : b.spheres) spheres.push_back({{"z", s.z}, {"center", s.center}, {"r", s.r}});
  j["spheres"] = spheres;
  if (b.distance) {
    json d{{"gamma", b.distance->gamma}, {"r", b.distance->r}};
    if (b.distance->K_geom) d["K_geom"] = *b.distance->K_geom;
    if (b.distance->eta) d["eta"] = *b.distance->eta;
    j["distance"] = d;
  }
  if (b.nondegeneracy_m) j["nondegeneracy_m"] = *b.nondegeneracy_m;
  return j;
}

Point to_point(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

}  // namespace

FieldSource FieldSource::of(double value) {
  FieldSource f;
  f.constant = value;
  return f;
}

FieldSource FieldSource::formula(std::string text) {
  FieldSource f;
  f.expr = std::move(text);
  return f;
}

ScalarField FieldSource::build(int dim) const {
  if (constant) return constant_field(*constant);
  return Expression::parse(expr, dim).field();
}

ExperimentConfig config_from_json(const json& j) {
  Reader r(j, "config", {"schema_version", "experiment", "problem", "solve", "probe", "barriers", "scaling", "out"});
  ExperimentConfig c;
  if (!r.has("schema_version")) throw ValidationError("config.schema_version: required");
  r.get("schema_version", c.schema_version);
  if (c.schema_version != kSchemaVersion) {
    throw ValidationError("config.schema_version: unsupported version " + std::to_string(c.schema_version));
  }
  r.get("experiment", c.experiment);
  if (!r.has("problem")) throw ValidationError("config.problem: required");
  c.problem = problem_from_json(r.at("problem"));
  if (r.has("solve")) c.solve = solve_from_json(r.at("solve"));
  if (r.has("probe")) c.probe = probe_from_json(r.at("probe"));
  if (r.has("barriers")) c.barriers = barriers_from_json(r.at("barriers"));
  if (r.has("scaling")) {
    Reader s(r.at("scaling"), "scaling", {"kappa", "tau", "x0"});
    s.get("kappa", c.scaling.kappa);
    s.get("tau", c.scaling.tau);
    s.get("x0", c.scaling.x0);
  }
  r.get("out", c.out);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"schema_version", c.schema_version},
         {"problem", problem_to_json(c.problem)},
         {"solve", solve_to_json(c.solve)},
         {"probe", probe_to_json(c.probe)},
         {"barriers", barriers_to_json(c.barriers)},
         {"scaling", {{"kappa", c.scaling.kappa}, {"tau", c.scaling.tau}, {"x0", c.scaling.x0}}},
         {"out", c.out}};
  if (c.experiment) j["experiment"] = *c.experiment;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

ProblemSpec build_problem(const ProblemConfig& c) {
  const int n = static_cast<int>(c.domain.lower.size());
  if (n < 1 || n > 3) throw ValidationError("problem.domain: dimension must be 1, 2 or 3");
  if (static_cast<int>(c.domain.upper.size()) != n) throw ValidationError("problem.domain: lower/upper size mismatch");
  for (int i = 0; i < n; ++i) {
    if (!(c.domain.lower[i] < c.domain.upper[i])) throw ValidationError("problem.domain: need lower < upper");
  }
  ProblemSpec spec;
  spec.domain = make_box(to_point(c.domain.lower), to_point(c.domain.upper));
  if (c.domain.graph) {
    if (n < 2) throw ValidationError("problem.domain.graph: needs dimension >= 2");
    spec.domain.boundary_graph = c.domain.graph->build(n - 1);
  }

  if (c.op.kind == "pucci_plus") spec.op.kind = OperatorKind::PucciPlus;
  else if (c.op.kind == "pucci_minus") spec.op.kind = OperatorKind::PucciMinus;
  else if (c.op.kind == "linear_trace") spec.op.kind = OperatorKind::LinearTrace;
  else throw ValidationError("problem.operator.kind: unknown '" + c.op.kind + "'");
  spec.op.ellipticity = {c.op.lambda, c.op.Lambda};
  if (spec.op.kind == OperatorKind::LinearTrace) {
    if (static_cast<int>(c.op.diagonal.size()) != n) {
      throw ValidationError("problem.operator.diagonal: linear_trace needs one entry per dimension");
    }
    std::vector<ScalarField> diag;
    for (const auto& f : c.op.diagonal) diag.push_back(f.build(n));
    spec.op.coefficients = [diag](const Point& x) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(diag.size(), diag.size());
      for (std::size_t i = 0; i < diag.size(); ++i) A(i, i) = diag[i](x);
      return A;
    };
  } else if (!c.op.diagonal.empty()) {
    throw ValidationError("problem.operator.diagonal: only for linear_trace");
  }

  spec.law.exponents = make_exponents(c.law.p.build(n), c.law.q.build(n), c.law.a.build(n), spec.domain);
  spec.law.L1 = c.law.L1;
  spec.law.L2 = c.law.L2;
  spec.law.eps_gradient_scale = c.law.eps_gradient_scale;
  spec.source = c.source.build(n);
  spec.boundary = c.boundary.build(n);
  spec.beta_g = c.beta_g;
  if (!c.shift.empty()) spec.shift = to_point(c.shift);
  spec.properness_scale = c.properness_scale;

  if (c.variant.kind == "deadcore") {
    if (!c.variant.f0) throw ValidationError("problem.variant.f0: required for deadcore");
    spec.variant = DeadCoreVariant{c.variant.sigma, c.variant.f0->build(n)};
  } else if (c.variant.kind == "obstacle") {
    if (!c.variant.obstacle) throw ValidationError("problem.variant.obstacle: required for obstacle");
    spec.variant = ObstacleVariant{c.variant.obstacle->build(n)};
  } else if (c.variant.kind != "plain") {
    throw ValidationError("problem.variant.kind: unknown '" + c.variant.kind + "'");
  }
  return spec;
}

}  // namespace degenlab
