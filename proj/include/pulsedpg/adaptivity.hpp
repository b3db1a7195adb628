#pragma once

#include <vector>

#include "pulsedpg/solve.hpp"

namespace pulsedpg {

// Refinement direction filter: which strips of a marked element get
// bisected. The sharp-pulse cases vary rapidly in tau only, so TauOnly is
// the default there.
enum class MarkPolicy { TauOnly, XiOnly, Both };

struct MarkedStrips {
  std::vector<int> tau;
  std::vector<int> xi;
};

// Bulk marking: the smallest element set whose squared indicators reach
// theta^2 times the squared total, greedy by descending indicator with
// the element index as tie-break, projected onto mesh strips per the
// policy. All-zero indicators mark nothing.
// Throws std::invalid_argument for theta outside (0, 1], a size mismatch,
// or negative indicators.
MarkedStrips mark(const TensorMesh& mesh, const Eigen::VectorXd& eta,
                  double theta, MarkPolicy policy);

struct AdaptStep {
  int step = 0;
  int n_elements = 0;
  int n_free = 0;
  double rel_error = 0.0;
  double total_residual = 0.0;
};

struct AdaptConfig {
  double theta = 0.5;
  MarkPolicy policy = MarkPolicy::TauOnly;
  int max_steps = 12;        // number of refinement rounds
  long dof_budget = 0;       // stop once n_free reaches this; 0 = no cap
  double target_residual = 0.0;  // stop once reached; 0 = no target
  bool full_complex_norm = false;
};

struct AdaptResult {
  std::vector<AdaptStep> history;  // one entry per solve
  TensorMesh mesh;                 // the last mesh solved on
  bool reached_target = false;
  bool solver_failed = false;      // history holds the completed steps
};

// Solve, estimate, mark, refine, repeat. Each round re-solves on the
// refined mesh; the history records the solve before each refinement and
// the final one.
AdaptResult adapt_loop(const TensorMesh& start, const ModelParams& params,
                       const ElementSpaces& spaces, const CaseData& cs,
                       const AdaptConfig& cfg);

}  // namespace pulsedpg
