#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>

#include "pulsedpg/assembly.hpp"
#include "pulsedpg/manufactured.hpp"
#include "pulsedpg/mesh.hpp"

namespace pulsedpg {

struct SolverFailure : std::runtime_error {
  SolverFailure(const std::string& what, double residual)
      : std::runtime_error(what), final_residual(residual) {}
  double final_residual = 0.0;
};

// Global numbering of the condensed unknowns: element-private field
// coefficients first, then the edge unknowns. Hyperbolic edges carry the
// characteristic pair (r, t), discontinuous across mesh vertices.
// Elliptic edges carry the scalar trace, continuous through shared vertex
// dofs plus per-edge bubbles, and the per-edge normal flux. Boundary
// conditions are realized as constrained dofs whose values come from
// collocation of the prescribed data on each boundary edge.
class GlobalDofMap {
 public:
  GlobalDofMap() = default;
  GlobalDofMap(const TensorMesh& mesh, const ElementSpaces& spaces);

  // Fills the constrained values from the case boundary data. Hyperbolic:
  // both characteristic traces on the bottom, r on the left, t on the
  // right. Elliptic: the scalar trace on bottom and sides, the normal
  // flux on top.
  void set_boundary_values(const CaseData& cs);

  int n_dofs() const { return n_dofs_; }
  int n_free() const { return n_free_; }
  // Field dofs precede the edge dofs and are never constrained, so they
  // occupy the reduced indices [0, n_field_global).
  int n_field_global() const { return mesh_.n_elements() * layout_.n_field; }
  bool constrained(int dof) const { return reduced_[dof] < 0; }
  int reduced_index(int dof) const { return reduced_[dof]; }
  const Eigen::VectorXcd& boundary_values() const { return bc_values_; }

  // Global dofs of one element in the local condensed ordering.
  std::vector<int> element_global_dofs(int elem) const;
  int field_dof(int elem, int comp, int k) const;

  const DofLayout& layout() const { return layout_; }

 private:
  TensorMesh mesh_;
  ElementSpaces spaces_;
  DofLayout layout_;
  int n_dofs_ = 0;
  int n_free_ = 0;
  // Offsets into the global vector; unused ones stay at -1.
  int base_fields_ = -1;
  int base_vtrace_ = -1;  // hyperbolic vertical edges
  int base_htrace_ = -1;  // hyperbolic horizontal edges
  int base_vertex_ = -1;  // elliptic scalar-trace vertex dofs
  int base_vbub_ = -1;    // elliptic scalar-trace bubbles, vertical edges
  int base_hbub_ = -1;
  int base_vflux_ = -1;   // elliptic normal flux, vertical edges
  int base_hflux_ = -1;
  std::vector<int> reduced_;
  Eigen::VectorXcd bc_values_;

  void mark_constrained(int dof) { reduced_[dof] = -1; }
  void renumber();
};

struct GlobalSystem {
  TensorMesh mesh;
  ModelParams params;
  ElementSpaces spaces;
  CaseData problem;
  GlobalDofMap map;
  Eigen::SparseMatrix<Complex> K;  // reduced; lower triangle unless full_matrix
  Eigen::VectorXcd rhs;
  bool full_matrix = false;
  // With fields_condensed, K and rhs couple only the free edge unknowns;
  // the element-private field coefficients are recovered per element as
  // w - R * uhat from the stored factors below.
  bool fields_condensed = false;
  std::vector<Eigen::MatrixXcd> recover_R;
  std::vector<Eigen::VectorXcd> recover_w;
  // Extended-precision copy of the condensed system. The double rounding
  // of K would otherwise cap the accuracy of the edge solve; the solver
  // refines its factorization against this copy.
  Eigen::SparseMatrix<std::complex<long double>> K_refine;
  Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, 1> rhs_refine;
};

struct BuildOptions {
  bool full_matrix = false;  // assemble both triangles (debug and tests)
  // Eliminate the element-private field dofs at the element level and
  // assemble the edge Schur complement. The zero-order modulation weights
  // the field block by (2 beta0)^2, so the edge operator emerges from a
  // twelve-digit cancellation; doing that elimination element-wise in
  // extended precision keeps it out of the global factorization, which
  // would otherwise set a relative accuracy floor around 1e-4. Ignored
  // when full_matrix is set.
  bool condense_fields = true;
  const std::vector<int>* element_order = nullptr;
};

GlobalSystem build_global(const TensorMesh& mesh, const ModelParams& params,
                          const ElementSpaces& spaces, const CaseData& cs,
                          const BuildOptions& opt = {});

struct Solution {
  Eigen::VectorXcd dofs;  // all global dofs, constrained entries filled in
  int n_free = 0;
  bool used_fallback = false;
  int iterations = 0;
};

// Direct Hermitian factorization with an iterative fallback: if the
// Cholesky-type factorization fails or returns non-finite values, a
// diagonally preconditioned conjugate gradient retries; if that misses a
// relative residual of 1e-10, SolverFailure carries the final residual.
Solution solve_system(const GlobalSystem& sys);

struct ElementResiduals {
  Eigen::VectorXd eta;                  // per-element energy residual
  double total = 0.0;                   // sqrt of the sum of squares
  std::vector<Eigen::VectorXcd> psi;    // residual representatives
};

// Re-assembles each element and evaluates the discrete energy residual
// eta_K^2 = r^H G^{-1} r with r = l - B u - Bhat uhat.
ElementResiduals recover_residual(const GlobalSystem& sys, const Solution& sol);

// Ratio of the extremal Ritz values of a short Lanczos run on the reduced
// matrix; a cheap lower estimate of the spectral condition number.
double condition_estimate(const GlobalSystem& sys, int steps = 60);

// Coordinate-format dump (CSV: row, col, re, im) of the stored triangle.
void dump_matrix(const GlobalSystem& sys, std::ostream& os);

// Field evaluation of the solved coefficients at a physical point;
// points on element boundaries resolve like TensorMesh::locate.
Complex evaluate_field(const GlobalSystem& sys, const Solution& sol, int comp,
                       double tau, double xi);

}  // namespace pulsedpg
