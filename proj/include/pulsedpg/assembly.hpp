#pragma once

#include <functional>

#include <Eigen/Dense>

#include "pulsedpg/fem.hpp"
#include "pulsedpg/mesh.hpp"
#include "pulsedpg/model.hpp"

namespace pulsedpg {

// Volume sources sampled at physical points. The hyperbolic pair uses
// (f1, f2); the elliptic system uses the flux-equation source g and the
// balance source f. Unused members may stay empty.
struct SourceSet {
  std::function<Complex(double, double)> f1;
  std::function<Complex(double, double)> f2;
  std::function<Eigen::Vector2cd(double, double)> g;
  std::function<Complex(double, double)> f;
};

// Element operators of the ultraweak form: B tests the field unknowns,
// Bhat the edge unknowns, l is the load. Rows run over the enriched test
// basis, columns follow the DofLayout ordering.
struct ElementOperators {
  Eigen::MatrixXcd B;
  Eigen::MatrixXcd Bhat;
  Eigen::VectorXcd l;
};

// Volume rule used for all element integrals: p + dp + 3 Gauss points per
// direction (edges use the same 1D rule).
QuadratureRule assembly_quadrature(const ElementSpaces& s);

// Gram matrix of the adjoint graph inner product on the enriched test
// space: (A* w, A* w') + s_graph (w, w'). Hermitian positive definite.
Eigen::MatrixXcd element_gram(const ElementRef& e, const ModelParams& p,
                              const ElementSpaces& s);

ElementOperators element_stiffness_hyperbolic(const ElementRef& e,
                                              const ModelParams& p,
                                              const FriedrichsDecomposition& d,
                                              const ElementSpaces& s,
                                              const SourceSet& src);

ElementOperators element_stiffness_elliptic(const ElementRef& e,
                                            const ModelParams& p,
                                            const EllipticTensors& t,
                                            const ElementSpaces& s,
                                            const SourceSet& src);

// Regime dispatch over the two assemblers above.
ElementOperators element_stiffness(const ElementRef& e, const ModelParams& p,
                                   const ElementSpaces& s, const SourceSet& src);

// Cholesky factorization of the Gram with symmetric diagonal
// equilibration. The equilibration only rescales the test basis, so
// condensation and residual evaluation are unchanged mathematically, but
// it keeps the factorization accurate when the graph norm mixes widely
// different coefficient scales.
class GramSolver {
 public:
  GramSolver(const Eigen::MatrixXcd& G, int element_id = -1,
             bool equilibrate = false);

  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const;
  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& rhs) const;

  // True when plain Cholesky rejected the matrix and the pivoted
  // factorization took over. A sign of a badly conditioned test norm.
  bool used_pivoting() const { return pivoted_; }

 private:
  Eigen::VectorXd scale_;
  Eigen::LLT<Eigen::MatrixXcd> llt_;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt_;
  bool pivoted_ = false;
};

// Statically condensed element system
//   K = [B Bhat]^H G^{-1} [B Bhat],  f = [B Bhat]^H G^{-1} l.
// K is Hermitian positive semidefinite by construction.
struct CondensedElement {
  Eigen::MatrixXcd K;
  Eigen::VectorXcd f;
};

CondensedElement condense(const Eigen::MatrixXcd& G, const ElementOperators& ops,
                          int element_id = -1, bool equilibrate = false);

}  // namespace pulsedpg
