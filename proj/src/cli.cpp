#include "pulsedpg/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pulsedpg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr char kCsvHeader[] = "sqrt_n,rel_L2_error,res,extslp";

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

Regime parse_regime(const std::string& s) {
  if (s == "hyperbolic") return Regime::Hyperbolic;
  if (s == "elliptic") return Regime::Elliptic;
  fail("regime must be \"hyperbolic\" or \"elliptic\", got \"" + s + "\"");
}

MarkPolicy parse_policy(const std::string& s) {
  if (s == "tau") return MarkPolicy::TauOnly;
  if (s == "xi") return MarkPolicy::XiOnly;
  if (s == "both") return MarkPolicy::Both;
  fail("policy must be \"tau\", \"xi\" or \"both\", got \"" + s + "\"");
}

MeshSpec parse_mesh(const nlohmann::json& j) {
  MeshSpec m;
  for (const auto& [key, val] : j.items()) {
    if (key == "n_tau") m.n_tau = val.get<int>();
    else if (key == "n_xi") m.n_xi = val.get<int>();
    else if (key == "T") m.T = val.get<double>();
    else if (key == "Z") m.Z = val.get<double>();
    else fail("unknown mesh key \"" + key + "\"");
  }
  if (m.n_tau < 1 || m.n_xi < 1) fail("mesh counts must be at least 1");
  if (!(m.T > 0.0) || !(m.Z > 0.0)) fail("mesh extents must be positive");
  return m;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail("cannot open output file \"" + path + "\"");
  return f;
}

std::string csv_stem(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
    return path.substr(0, path.size() - 4);
  return path;
}

void log_rows(const StudyResult& res, std::ostream& log) {
  char buf[160];
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    const ConvergenceRow& r = res.rows[k];
    std::snprintf(buf, sizeof buf,
                  "  level %zu: sqrt_n=%.4g rel_L2_error=%.6g res=%.6g\n", k,
                  r.sqrt_n, r.rel_L2_error, r.res);
    log << buf;
  }
  if (res.solver_failed)
    log << "  solver failure at level " << res.failed_level << "\n";
  else if (res.rows.size() >= 2)
    log << "  fitted rate " << res.rate << "\n";
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  if (!j.is_object()) fail("config root must be an object");
  for (const auto& [key, val] : j.items()) {
    if (key == "regime") cfg.regime = parse_regime(val.get<std::string>());
    else if (key == "case") cfg.case_name = val.get<std::string>();
    else if (key == "p") cfg.p = val.get<int>();
    else if (key == "dp") cfg.dp = val.get<int>();
    else if (key == "c") cfg.c = val.get<double>();
    else if (key == "beta0") cfg.beta0 = val.get<double>();
    else if (key == "beta1") cfg.beta1 = val.get<double>();
    else if (key == "beta2") cfg.beta2 = val.get<double>();
    else if (key == "omega") cfg.omega = val.get<double>();
    else if (key == "a0") cfg.a0 = val.get<double>();
    else if (key == "mesh") cfg.mesh = parse_mesh(val);
    else if (key == "refinements") cfg.refinements = val.get<int>();
    else if (key == "theta") cfg.theta = val.get<double>();
    else if (key == "policy") cfg.policy = parse_policy(val.get<std::string>());
    else if (key == "max_steps") cfg.max_steps = val.get<int>();
    else if (key == "dof_budget") cfg.dof_budget = val.get<long>();
    else if (key == "target_residual") cfg.target_residual = val.get<double>();
    else if (key == "s_graph") cfg.s_graph = val.get<double>();
    else if (key == "zero_order_rescaled") cfg.zero_order_rescaled = val.get<bool>();
    else if (key == "adjoint_conjugate_zero_order")
      cfg.adjoint_conjugate_zero_order = val.get<bool>();
    else if (key == "gram_equilibrate")
      cfg.gram_equilibrate = val.get<bool>();
    else if (key == "full_complex_norm") cfg.full_complex_norm = val.get<bool>();
    else if (key == "out") cfg.out = val.get<std::string>();
    else if (key == "resolution") cfg.resolution = val.get<int>();
    else if (key == "c_list") cfg.c_list = val.get<std::vector<double>>();
    else if (key == "exact") cfg.dump_exact = val.get<bool>();
    else if (key == "matrix_out") cfg.matrix_out = val.get<std::string>();
    else fail("unknown config key \"" + key + "\"");
  }

  if (cfg.case_name != "soliton1" && cfg.case_name != "soliton2" &&
      cfg.case_name != "gaussian_beam")
    fail("unknown case \"" + cfg.case_name + "\"");
  if (cfg.p < 1) fail("p must be at least 1");
  if (cfg.dp && (*cfg.dp < 1 || *cfg.dp > 3)) fail("dp must lie in [1, 3]");
  if (cfg.refinements < 0) fail("refinements must be nonnegative");
  if (!(cfg.theta > 0.0) || cfg.theta > 1.0) fail("theta must lie in (0, 1]");
  if (cfg.max_steps < 0) fail("max_steps must be nonnegative");
  if (cfg.dof_budget < 0) fail("dof_budget must be nonnegative");
  if (cfg.target_residual < 0.0) fail("target_residual must be nonnegative");
  if (!(cfg.s_graph > 0.0)) fail("s_graph must be positive");
  if (cfg.resolution < 2) fail("resolution must be at least 2");
  for (const double c : cfg.c_list)
    if (!(c > 0.0)) fail("c_list entries must be positive");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail("cannot open config file \"" + path + "\"");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    fail("config parse error: " + std::string(e.what()));
  }
  return config_from_json(j);
}

ModelParams params_from(const RunConfig& cfg) {
  const double beta2 =
      cfg.beta2 ? *cfg.beta2
                : (cfg.regime == Regime::Hyperbolic ? 1e-4 : -1e-4);
  const ModelParams p = derive_params(cfg.beta0, cfg.beta1, beta2, cfg.c);
  if (p.regime != cfg.regime)
    fail("the coefficients produce the opposite regime; adjust beta2");
  return p;
}

int enrichment_order(const RunConfig& cfg) {
  if (cfg.dp) return *cfg.dp;
  return cfg.regime == Regime::Hyperbolic ? 3 : 2;
}

ElementSpaces spaces_from(const RunConfig& cfg, const ModelParams& params) {
  ElementSpaces s = make_spaces(cfg.regime, cfg.p, enrichment_order(cfg),
                                params, cfg.zero_order_rescaled);
  s.s_graph = cfg.s_graph;
  s.adjoint_conjugate_zero_order = cfg.adjoint_conjugate_zero_order;
  s.gram_equilibrate = cfg.gram_equilibrate;
  return s;
}

CaseData case_from(const RunConfig& cfg, const ModelParams& params,
                   const ElementSpaces& spaces) {
  ExactField u;
  if (cfg.case_name == "soliton1")
    u = soliton_first(cfg.omega.value_or(8.0 * kPi), cfg.a0);
  else if (cfg.case_name == "soliton2")
    u = soliton_second(cfg.omega.value_or(kPi));
  else if (cfg.case_name == "gaussian_beam")
    u = gaussian_beam(cfg.omega.value_or(0.001));
  else
    fail("unknown case \"" + cfg.case_name + "\"");
  ExactField v;
  if (cfg.regime == Regime::Hyperbolic) v = auxiliary_v();
  CaseData cs = build_case(cfg.regime, u, v, params, spaces.zero);
  cs.name = cfg.case_name;
  return cs;
}

double estimate_rate(const std::vector<double>& errors,
                     const std::vector<double>& sqrt_ns) {
  if (errors.size() != sqrt_ns.size())
    fail("rate fit needs matching value lists");
  if (errors.size() < 2) fail("rate fit needs at least two points");
  const int n = static_cast<int>(errors.size());
  double mx = 0.0, my = 0.0;
  std::vector<double> x(n), y(n);
  for (int k = 0; k < n; ++k) {
    if (!(errors[k] > 0.0) || !(sqrt_ns[k] > 0.0))
      fail("rate fit needs positive values");
    x[k] = std::log(sqrt_ns[k]);
    y[k] = std::log(errors[k]);
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) fail("rate fit needs at least two distinct mesh sizes");
  return -sxy / sxx;
}

StudyResult run_convergence(const RunConfig& cfg) {
  const ModelParams params = params_from(cfg);
  const ElementSpaces spaces = spaces_from(cfg, params);
  const CaseData cs = case_from(cfg, params, spaces);

  StudyResult out;
  std::vector<double> errs, sns;
  for (int k = 0; k <= cfg.refinements; ++k) {
    const int scale = 1 << k;
    const TensorMesh mesh = uniform_mesh(cfg.mesh.n_tau * scale,
                                         cfg.mesh.n_xi * scale, cfg.mesh.T,
                                         cfg.mesh.Z);
    ConvergenceRow row;
    row.sqrt_n = std::sqrt(static_cast<double>(mesh.n_elements()));
    try {
      const GlobalSystem sys = build_global(mesh, params, spaces, cs);
      const Solution sol = solve_system(sys);
      row.rel_L2_error = error_norms(sys, sol, cfg.full_complex_norm).rel;
      row.res = recover_residual(sys, sol).total;
    } catch (const SolverFailure&) {
      out.solver_failed = true;
      out.failed_level = k;
      break;
    }
    out.rows.push_back(row);
    errs.push_back(row.rel_L2_error);
    sns.push_back(row.sqrt_n);
  }

  if (!out.rows.empty()) {
    const double ae = out.rows.back().rel_L2_error;
    const double an = out.rows.back().sqrt_n;
    for (ConvergenceRow& r : out.rows)
      r.extslp = ae * std::pow(r.sqrt_n / an, -static_cast<double>(cfg.p + 1));
  }
  if (errs.size() >= 2) {
    try {
      out.rate = estimate_rate(errs, sns);
    } catch (const std::invalid_argument&) {
      out.rate = 0.0;  // a level converged exactly; no meaningful fit
    }
  }
  return out;
}

void write_convergence_csv(const std::vector<ConvergenceRow>& rows,
                           std::ostream& os, int failed_level) {
  os << kCsvHeader << "\n";
  char buf[200];
  for (const ConvergenceRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.sqrt_n,
                  r.rel_L2_error, r.res, r.extslp);
    os << buf;
  }
  if (failed_level >= 0) os << "# solver failure at level " << failed_level << "\n";
}

std::vector<ConvergenceRow> read_convergence_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    fail("missing or wrong CSV header");
  std::vector<ConvergenceRow> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    ConvergenceRow r;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg", &r.sqrt_n,
                    &r.rel_L2_error, &r.res, &r.extslp) != 4)
      fail("malformed CSV row: " + line);
    rows.push_back(r);
  }
  return rows;
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const ModelParams params = params_from(cfg);
  const ElementSpaces spaces = spaces_from(cfg, params);
  const CaseData cs = case_from(cfg, params, spaces);
  const TensorMesh mesh =
      uniform_mesh(cfg.mesh.n_tau, cfg.mesh.n_xi, cfg.mesh.T, cfg.mesh.Z);

  GlobalSystem sys = build_global(mesh, params, spaces, cs);
  Solution sol;
  try {
    sol = solve_system(sys);
  } catch (const SolverFailure& e) {
    log << "solver failure: " << e.what() << "\n";
    return 3;
  }
  const ErrorReport err = error_norms(sys, sol, cfg.full_complex_norm);
  const ElementResiduals res = recover_residual(sys, sol);

  char buf[240];
  std::snprintf(buf, sizeof buf,
                "case=%s mesh=%dx%d p=%d n_free=%d rel_L2_error=%.6g res=%.6g%s\n",
                cs.name.c_str(), mesh.n_tau(), mesh.n_xi(), cfg.p,
                sys.map.n_free(), err.rel, res.total,
                sol.used_fallback ? " (iterative fallback)" : "");
  log << buf;

  if (!cfg.matrix_out.empty()) {
    std::ofstream f = open_output(cfg.matrix_out);
    dump_matrix(sys, f);
  }
  if (!cfg.out.empty()) {
    std::ofstream f = open_output(cfg.out);
    ConvergenceRow row{std::sqrt(static_cast<double>(mesh.n_elements())),
                       err.rel, res.total, err.rel};
    write_convergence_csv({row}, f);
  }
  return 0;
}

int cmd_convergence(const RunConfig& cfg, std::ostream& log) {
  if (cfg.out.empty()) fail("convergence needs an output path (out)");
  const StudyResult res = run_convergence(cfg);
  std::ofstream f = open_output(cfg.out);
  write_convergence_csv(res.rows, f, res.solver_failed ? res.failed_level : -1);
  log << "convergence: " << cfg.case_name << " p=" << cfg.p << "\n";
  log_rows(res, log);
  return res.solver_failed ? 3 : 0;
}

int cmd_cstudy(const RunConfig& cfg, std::ostream& log) {
  if (cfg.regime != Regime::Elliptic)
    fail("the scaling study applies to the elliptic regime");
  if (cfg.out.empty()) fail("cstudy needs an output path (out)");
  std::vector<double> cs = cfg.c_list;
  if (cs.empty()) cs = {1.0, 100.0, 1000.0, 10000.0};

  const std::string stem = csv_stem(cfg.out);
  bool any_failed = false;
  char buf[240];
  for (const double c : cs) {
    RunConfig sub = cfg;
    sub.c = c;
    const StudyResult res = run_convergence(sub);
    std::snprintf(buf, sizeof buf, "%s_c%g.csv", stem.c_str(), c);
    std::ofstream f = open_output(buf);
    write_convergence_csv(res.rows, f, res.solver_failed ? res.failed_level : -1);
    any_failed = any_failed || res.solver_failed;

    bool monotone = true;
    for (std::size_t k = 1; k < res.rows.size(); ++k)
      monotone = monotone &&
                 res.rows[k].rel_L2_error < res.rows[k - 1].rel_L2_error;
    double cond = 0.0;
    if (!res.rows.empty()) {
      const int scale = 1 << (static_cast<int>(res.rows.size()) - 1);
      const ModelParams params = params_from(sub);
      const ElementSpaces spaces = spaces_from(sub, params);
      const CaseData kase = case_from(sub, params, spaces);
      const TensorMesh mesh = uniform_mesh(sub.mesh.n_tau * scale,
                                           sub.mesh.n_xi * scale, sub.mesh.T,
                                           sub.mesh.Z);
      cond = condition_estimate(build_global(mesh, params, spaces, kase));
    }
    std::snprintf(buf, sizeof buf,
                  "c=%g final_rel_L2_error=%.6g monotone=%d cond_estimate=%.3g\n",
                  c, res.rows.empty() ? 0.0 : res.rows.back().rel_L2_error,
                  monotone ? 1 : 0, cond);
    log << buf;
  }
  return any_failed ? 3 : 0;
}

int cmd_adapt(const RunConfig& cfg, std::ostream& log) {
  if (cfg.out.empty()) fail("adapt needs an output path (out)");
  const ModelParams params = params_from(cfg);
  const ElementSpaces spaces = spaces_from(cfg, params);
  const CaseData cs = case_from(cfg, params, spaces);
  const TensorMesh start =
      uniform_mesh(cfg.mesh.n_tau, cfg.mesh.n_xi, cfg.mesh.T, cfg.mesh.Z);

  AdaptConfig acfg;
  acfg.theta = cfg.theta;
  acfg.policy = cfg.policy;
  acfg.max_steps = cfg.max_steps;
  acfg.dof_budget = cfg.dof_budget;
  acfg.target_residual = cfg.target_residual;
  acfg.full_complex_norm = cfg.full_complex_norm;
  const AdaptResult ar = adapt_loop(start, params, spaces, cs, acfg);

  std::vector<ConvergenceRow> rows;
  for (const AdaptStep& s : ar.history)
    rows.push_back({std::sqrt(static_cast<double>(s.n_free)), s.rel_error,
                    s.total_residual, 0.0});
  if (!rows.empty()) {
    const double ae = rows.back().rel_L2_error;
    const double an = rows.back().sqrt_n;
    for (ConvergenceRow& r : rows)
      r.extslp = ae * std::pow(r.sqrt_n / an, -static_cast<double>(cfg.p + 1));
  }
  std::ofstream f = open_output(cfg.out);
  write_convergence_csv(rows, f,
                        ar.solver_failed
                            ? static_cast<int>(ar.history.size())
                            : -1);

  char buf[240];
  if (!ar.history.empty()) {
    const AdaptStep& last = ar.history.back();
    std::snprintf(buf, sizeof buf,
                  "adapt: steps=%zu final mesh=%dx%d n_free=%d "
                  "rel_L2_error=%.6g res=%.6g%s\n",
                  ar.history.size(), ar.mesh.n_tau(), ar.mesh.n_xi(),
                  last.n_free, last.rel_error, last.total_residual,
                  ar.reached_target ? " (target reached)" : "");
    log << buf;
  }
  return ar.solver_failed ? 3 : 0;
}

int cmd_dump(const RunConfig& cfg, std::ostream& log) {
  if (cfg.out.empty()) fail("dump needs an output path (out)");
  const ModelParams params = params_from(cfg);
  const ElementSpaces spaces = spaces_from(cfg, params);
  const CaseData cs = case_from(cfg, params, spaces);
  const TensorMesh mesh =
      uniform_mesh(cfg.mesh.n_tau, cfg.mesh.n_xi, cfg.mesh.T, cfg.mesh.Z);

  GlobalSystem sys;
  Solution sol;
  if (!cfg.dump_exact) {
    sys = build_global(mesh, params, spaces, cs);
    try {
      sol = solve_system(sys);
    } catch (const SolverFailure& e) {
      log << "solver failure: " << e.what() << "\n";
      return 3;
    }
  }

  std::ofstream f = open_output(cfg.out);
  f << "tau,xi,re,im\n";
  char buf[200];
  const int n = cfg.resolution;
  for (int j = 0; j < n; ++j) {
    const double xi = cfg.mesh.Z * j / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double tau = cfg.mesh.T * i / (n - 1);
      const Complex val = cfg.dump_exact
                              ? cs.u.eval(tau, xi).value
                              : evaluate_field(sys, sol, 0, tau, xi);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", tau, xi,
                    val.real(), val.imag());
      f << buf;
    }
  }
  log << "dump: " << cfg.resolution * cfg.resolution << " samples to "
      << cfg.out << "\n";
  return 0;
}

}  // namespace pulsedpg
