#pragma once

#include <Eigen/Dense>

#include "pulsedpg/model.hpp"

namespace pulsedpg {

// 1D reference bases on [-1, 1]. Lobatto is the hierarchical H1 family:
// the two linear vertex functions followed by integrated-Legendre bubbles
// that vanish at both endpoints. Legendre is the L2-orthogonal family.
enum class BasisKind { Lobatto, Legendre };

struct Shape1D {
  int order = 0;  // polynomial degree; the basis has order + 1 members
  BasisKind kind = BasisKind::Legendre;

  int size() const { return order + 1; }
};

// Values and first derivatives of all basis members at x.
// Lobatto ordering: [vertex at -1, vertex at +1, bubbles by degree].
void shape_eval(const Shape1D& s, double x, Eigen::VectorXd& values,
                Eigen::VectorXd& derivs);

// Rows: evaluation points, columns: basis members.
Eigen::MatrixXd shape_values(const Shape1D& s, const Eigen::VectorXd& pts);
Eigen::MatrixXd shape_derivs(const Shape1D& s, const Eigen::VectorXd& pts);

// Gauss-Legendre rule with n points on [-1, 1], exact through degree 2n-1.
struct QuadratureRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
  int size() const { return static_cast<int>(points.size()); }
};

QuadratureRule gauss_rule(int n);

// Discretization choices shared by every element: trial order p, test
// enrichment dp, the weight of the L2 term in the adjoint graph norm, the
// zero-order block (hyperbolic), and whether the graph norm uses the
// conjugated zero-order entries.
struct ElementSpaces {
  Regime regime = Regime::Hyperbolic;
  int p = 1;
  int dp = 2;
  double s_graph = 1.0;
  bool adjoint_conjugate_zero_order = false;
  // Symmetric diagonal scaling of the Gram matrix before factorization.
  // Off by default: the raw factorization is what makes badly scaled
  // first-order systems (elliptic with c = 1) visibly non-convergent.
  bool gram_equilibrate = false;
  ZeroOrderTerm zero;
};

// Spaces with the zero-order block derived from the params (standard form
// unless rescaled_zero_order). Validates p >= 1 and 1 <= dp <= 3.
ElementSpaces make_spaces(Regime regime, int p, int dp, const ModelParams& params,
                          bool rescaled_zero_order = false);

// Per-element dof bookkeeping for the condensed system. Local ordering:
// field components first (u, then v or sigma1, sigma2), each a tensor
// grid of (p+1)^2 coefficients with the tau index fastest; then the four
// edges in the order bottom, right, top, left, each edge component-major.
// Per-edge components: hyperbolic carries the characteristic pair (r, t)
// of order p+1; elliptic carries the scalar trace of order p+1 followed
// by the normal flux of order p.
struct DofLayout {
  Regime regime = Regime::Hyperbolic;
  int p = 0;
  int n_field_comp = 0;
  int n_field_per_comp = 0;
  int n_field = 0;
  int n_trace_a = 0;  // per edge: r (hyperbolic) or scalar trace (elliptic)
  int n_trace_b = 0;  // per edge: t (hyperbolic) or normal flux (elliptic)
  int n_trace_per_edge = 0;
  int n_trace = 0;
  int n_test = 0;
  int n_total = 0;  // n_field + n_trace

  int field_index(int comp, int i, int j) const {
    return comp * n_field_per_comp + j * (p + 1) + i;
  }
  // edge: 0 bottom, 1 right, 2 top, 3 left; comp: 0 or 1.
  int trace_index(int edge, int comp, int k) const {
    return n_field + edge * n_trace_per_edge + comp * n_trace_a + k;
  }
};

// Throws std::invalid_argument if the test space is smaller than the
// per-element trial space (fields plus traces), which makes the local
// least-squares systems singular.
DofLayout element_dofs(const ElementSpaces& s);

}  // namespace pulsedpg
