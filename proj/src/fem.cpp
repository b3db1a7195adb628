#include "pulsedpg/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace pulsedpg {

namespace {

// Legendre values and derivatives up to degree n at x, via the three-term
// recurrence and L'_{k+1} = L'_{k-1} + (2k+1) L_k.
void legendre_eval(int n, double x, Eigen::VectorXd& val, Eigen::VectorXd& der) {
  val.resize(n + 1);
  der.resize(n + 1);
  val(0) = 1.0;
  der(0) = 0.0;
  if (n == 0) return;
  val(1) = x;
  der(1) = 1.0;
  for (int k = 1; k < n; ++k) {
    val(k + 1) = ((2 * k + 1) * x * val(k) - k * val(k - 1)) / (k + 1);
    der(k + 1) = der(k - 1) + (2 * k + 1) * val(k);
  }
}

}  // namespace

void shape_eval(const Shape1D& s, double x, Eigen::VectorXd& values,
                Eigen::VectorXd& derivs) {
  if (s.order < 0) throw std::invalid_argument("shape_eval: negative order");
  if (s.kind == BasisKind::Legendre) {
    legendre_eval(s.order, x, values, derivs);
    return;
  }
  if (s.order < 1)
    throw std::invalid_argument("shape_eval: Lobatto needs order >= 1");
  Eigen::VectorXd lv, ld;
  legendre_eval(s.order, x, lv, ld);
  values.resize(s.order + 1);
  derivs.resize(s.order + 1);
  values(0) = 0.5 * (1.0 - x);
  derivs(0) = -0.5;
  values(1) = 0.5 * (1.0 + x);
  derivs(1) = 0.5;
  for (int k = 2; k <= s.order; ++k) {
    // Integrated Legendre bubble: (L_k - L_{k-2}) / sqrt(2(2k-1)), whose
    // derivative collapses to sqrt((2k-1)/2) L_{k-1}.
    const double scale = 1.0 / std::sqrt(2.0 * (2.0 * k - 1.0));
    values(k) = (lv(k) - lv(k - 2)) * scale;
    derivs(k) = std::sqrt((2.0 * k - 1.0) / 2.0) * lv(k - 1);
  }
}

Eigen::MatrixXd shape_values(const Shape1D& s, const Eigen::VectorXd& pts) {
  Eigen::MatrixXd out(pts.size(), s.size());
  Eigen::VectorXd v, d;
  for (int q = 0; q < pts.size(); ++q) {
    shape_eval(s, pts(q), v, d);
    out.row(q) = v.transpose();
  }
  return out;
}

Eigen::MatrixXd shape_derivs(const Shape1D& s, const Eigen::VectorXd& pts) {
  Eigen::MatrixXd out(pts.size(), s.size());
  Eigen::VectorXd v, d;
  for (int q = 0; q < pts.size(); ++q) {
    shape_eval(s, pts(q), v, d);
    out.row(q) = d.transpose();
  }
  return out;
}

QuadratureRule gauss_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule: need n >= 1");
  QuadratureRule r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on L_n from the Chebyshev-based initial guess; converges in a
    // handful of iterations for all n used here.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // Recompute the derivative at the converged root for the weight.
    {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.points(i) = -x;
    r.points(n - 1 - i) = x;
    r.weights(i) = w;
    r.weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) r.points((n - 1) / 2) = 0.0;
  return r;
}

ElementSpaces make_spaces(Regime regime, int p, int dp,
                          const ModelParams& params, bool rescaled_zero_order) {
  if (p < 1) throw std::invalid_argument("make_spaces: p must be >= 1");
  if (dp < 1 || dp > 3)
    throw std::invalid_argument("make_spaces: dp must be in [1, 3]");
  ElementSpaces s;
  s.regime = regime;
  s.p = p;
  s.dp = dp;
  if (regime == Regime::Hyperbolic)
    s.zero = rescaled_zero_order ? ZeroOrderTerm::rescaled(params)
                                 : ZeroOrderTerm::standard(params);
  return s;
}

DofLayout element_dofs(const ElementSpaces& s) {
  if (s.p < 1) throw std::invalid_argument("element_dofs: p must be >= 1");
  if (s.dp < 1 || s.dp > 3)
    throw std::invalid_argument("element_dofs: dp must be in [1, 3]");
  DofLayout d;
  d.regime = s.regime;
  d.p = s.p;
  d.n_field_per_comp = (s.p + 1) * (s.p + 1);
  const int q = s.p + s.dp;  // H1 test order per direction
  if (s.regime == Regime::Hyperbolic) {
    d.n_field_comp = 2;
    d.n_trace_a = s.p + 2;  // characteristic traces of order p + 1
    d.n_trace_b = s.p + 2;
    d.n_test = 2 * (q + 1) * (q + 1);
  } else {
    d.n_field_comp = 3;
    d.n_trace_a = s.p + 2;  // scalar trace of order p + 1
    d.n_trace_b = s.p + 1;  // normal flux of order p
    // H1 scalar plus a Raviart-Thomas style pair Q_{q+1,q} x Q_{q,q+1}.
    d.n_test = (q + 1) * (q + 1) + 2 * (q + 2) * (q + 1);
  }
  d.n_field = d.n_field_comp * d.n_field_per_comp;
  d.n_trace_per_edge = d.n_trace_a + d.n_trace_b;
  d.n_trace = 4 * d.n_trace_per_edge;
  d.n_total = d.n_field + d.n_trace;
  // The local least-squares system needs at least as many test functions
  // as condensed unknowns. The hyperbolic pair at dp = 2 meets this with
  // equality for every p; dp = 1 falls short and is rejected.
  if (d.n_test < d.n_total)
    throw std::invalid_argument(
        "element_dofs: test space smaller than fields plus traces; "
        "increase dp");
  return d;
}

}  // namespace pulsedpg
