#include "pulsedpg/adaptivity.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace pulsedpg {

MarkedStrips mark(const TensorMesh& mesh, const Eigen::VectorXd& eta,
                  double theta, MarkPolicy policy) {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("bulk fraction must lie in (0, 1]");
  if (eta.size() != mesh.n_elements())
    throw std::invalid_argument("indicator count does not match the mesh");
  if ((eta.array() < 0.0).any())
    throw std::invalid_argument("indicators must be nonnegative");

  const double total2 = eta.squaredNorm();
  MarkedStrips out;
  if (total2 == 0.0) return out;

  std::vector<int> idx(mesh.n_elements());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (eta[a] != eta[b]) return eta[a] > eta[b];
    return a < b;
  });

  std::set<int> tau_strips, xi_strips;
  double acc = 0.0;
  for (const int e : idx) {
    acc += eta[e] * eta[e];
    const int i = e % mesh.n_tau();
    const int j = e / mesh.n_tau();
    if (policy != MarkPolicy::XiOnly) tau_strips.insert(i);
    if (policy != MarkPolicy::TauOnly) xi_strips.insert(j);
    if (acc >= theta * theta * total2) break;
  }
  out.tau.assign(tau_strips.begin(), tau_strips.end());
  out.xi.assign(xi_strips.begin(), xi_strips.end());
  return out;
}

AdaptResult adapt_loop(const TensorMesh& start, const ModelParams& params,
                       const ElementSpaces& spaces, const CaseData& cs,
                       const AdaptConfig& cfg) {
  if (!(cfg.theta > 0.0) || cfg.theta > 1.0)
    throw std::invalid_argument("bulk fraction must lie in (0, 1]");
  if (cfg.max_steps < 0)
    throw std::invalid_argument("max_steps must be nonnegative");

  AdaptResult res;
  res.mesh = start;
  for (int step = 0;; ++step) {
    GlobalSystem sys;
    Solution sol;
    try {
      sys = build_global(res.mesh, params, spaces, cs);
      sol = solve_system(sys);
    } catch (const SolverFailure&) {
      res.solver_failed = true;
      return res;
    }
    const ErrorReport err = error_norms(sys, sol, cfg.full_complex_norm);
    const ElementResiduals ind = recover_residual(sys, sol);

    AdaptStep rec;
    rec.step = step;
    rec.n_elements = res.mesh.n_elements();
    rec.n_free = sys.map.n_free();
    rec.rel_error = err.rel;
    rec.total_residual = ind.total;
    res.history.push_back(rec);

    if (cfg.target_residual > 0.0 && ind.total <= cfg.target_residual) {
      res.reached_target = true;
      return res;
    }
    if (cfg.dof_budget > 0 && rec.n_free >= cfg.dof_budget) return res;
    if (step == cfg.max_steps) return res;

    const MarkedStrips m = mark(res.mesh, ind.eta, cfg.theta, cfg.policy);
    if (m.tau.empty() && m.xi.empty()) return res;
    res.mesh = refine_lines(res.mesh, m.tau, m.xi);
  }
}

}  // namespace pulsedpg
