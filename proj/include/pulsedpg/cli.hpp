#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulsedpg/adaptivity.hpp"
#include "pulsedpg/manufactured.hpp"

namespace pulsedpg {

struct MeshSpec {
  int n_tau = 4;
  int n_xi = 4;
  double T = 1.0;
  double Z = 1.0;
};

// One run description: regime and coefficients, case selection, orders,
// the mesh or mesh sequence, and the output knobs. beta2 and omega are
// optional so the regime and the case can pick their defaults.
struct RunConfig {
  Regime regime = Regime::Hyperbolic;
  std::string case_name = "soliton1";  // soliton1 | soliton2 | gaussian_beam
  int p = 1;
  // Test-space enrichment order. Unset means regime-dependent: 3 for the
  // hyperbolic pair, 2 for the elliptic triple. The hyperbolic broken test
  // space has exactly as many dofs as the element's trial unknowns at
  // enrichment 2 (the counts tie for every p), and that zero margin costs
  // the scheme its discrete stability; one extra order restores it.
  std::optional<int> dp;
  double c = 1.0;
  double beta0 = 1e6;
  double beta1 = 1.0;
  std::optional<double> beta2;  // default 1e-4 hyperbolic, -1e-4 elliptic
  std::optional<double> omega;  // default 8*pi / pi / 0.001 by case
  double a0 = 5.0;
  MeshSpec mesh;
  int refinements = 4;  // uniform levels beyond the initial mesh
  double theta = 0.5;
  MarkPolicy policy = MarkPolicy::TauOnly;
  int max_steps = 12;
  long dof_budget = 0;
  double target_residual = 0.0;
  double s_graph = 1.0;
  bool zero_order_rescaled = false;
  // Conjugate the zero-order coefficients inside the adjoint that builds
  // the test norm (the proper formal adjoint of a complex zero-order
  // term). The plain-sign variant is still a valid norm but measurably
  // loses convergence order on fine hyperbolic meshes, so runs default to
  // the conjugated form.
  bool adjoint_conjugate_zero_order = true;
  bool gram_equilibrate = false;
  bool full_complex_norm = false;
  std::string out;
  int resolution = 65;
  std::vector<double> c_list;  // cstudy; default {1, 100, 1000, 10000}
  bool dump_exact = false;
  std::string matrix_out;
};

// Strict parse: unknown keys and out-of-range values throw
// std::invalid_argument (json type errors propagate as such too).
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

ModelParams params_from(const RunConfig& cfg);
// Effective test-space enrichment: the explicit config value if present,
// otherwise 3 (hyperbolic) or 2 (elliptic).
int enrichment_order(const RunConfig& cfg);
ElementSpaces spaces_from(const RunConfig& cfg, const ModelParams& params);
CaseData case_from(const RunConfig& cfg, const ModelParams& params,
                   const ElementSpaces& spaces);

struct ConvergenceRow {
  double sqrt_n = 0.0;
  double rel_L2_error = 0.0;
  double res = 0.0;
  double extslp = 0.0;
};

struct StudyResult {
  std::vector<ConvergenceRow> rows;
  double rate = 0.0;  // least-squares fit over all completed levels
  bool solver_failed = false;
  int failed_level = -1;
};

// Uniform refinement sequence: level k solves on the initial mesh scaled
// by 2^k, k = 0 .. refinements. A solver failure keeps the completed rows
// and flags the level. extslp is the (p+1)-slope reference line anchored
// at the last completed row.
StudyResult run_convergence(const RunConfig& cfg);

// Least-squares rate: -slope of log(error) against log(sqrt_n).
// Throws std::invalid_argument for fewer than two points, size mismatch,
// or non-positive entries.
double estimate_rate(const std::vector<double>& errors,
                     const std::vector<double>& sqrt_ns);

// Header exactly "sqrt_n,rel_L2_error,res,extslp"; 17 significant digits
// so parsing gives back the doubles bit for bit. A failed level appends a
// "# solver failure ..." comment line that the reader skips.
void write_convergence_csv(const std::vector<ConvergenceRow>& rows,
                           std::ostream& os, int failed_level = -1);
std::vector<ConvergenceRow> read_convergence_csv(std::istream& is);

// Subcommand drivers; each returns the process exit code (0 success,
// 2 validation problem, 3 solver failure) and logs a short summary.
int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_convergence(const RunConfig& cfg, std::ostream& log);
int cmd_cstudy(const RunConfig& cfg, std::ostream& log);
int cmd_adapt(const RunConfig& cfg, std::ostream& log);
int cmd_dump(const RunConfig& cfg, std::ostream& log);

}  // namespace pulsedpg
