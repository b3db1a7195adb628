#include "pulsedpg/assembly.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pulsedpg {

namespace {

// 1D evaluations of a tensor-product factor pair at the quadrature points
// and at the interval endpoints.
struct Basis2D {
  int nx = 0, ny = 0;
  Eigen::MatrixXd vx, dx, vy, dy;          // nq x n
  Eigen::VectorXd vx_lo, vx_hi, vy_lo, vy_hi;
};

Basis2D make_basis(const Shape1D& sx, const Shape1D& sy,
                   const QuadratureRule& q) {
  Basis2D b;
  b.nx = sx.size();
  b.ny = sy.size();
  b.vx = shape_values(sx, q.points);
  b.dx = shape_derivs(sx, q.points);
  b.vy = shape_values(sy, q.points);
  b.dy = shape_derivs(sy, q.points);
  Eigen::VectorXd v, d;
  shape_eval(sx, -1.0, v, d);
  b.vx_lo = v;
  shape_eval(sx, 1.0, v, d);
  b.vx_hi = v;
  shape_eval(sy, -1.0, v, d);
  b.vy_lo = v;
  shape_eval(sy, 1.0, v, d);
  b.vy_hi = v;
  return b;
}

// 2D index convention everywhere: idx = j * nx + i, x index fastest.
// Volume points follow q = qy * nq + qx.
enum TensorPart { Value, DX, DY };

Eigen::MatrixXd tensor(const Basis2D& b, TensorPart part) {
  const int nq = static_cast<int>(b.vx.rows());
  Eigen::MatrixXd out(nq * nq, b.nx * b.ny);
  const Eigen::MatrixXd& fx = (part == DX) ? b.dx : b.vx;
  const Eigen::MatrixXd& fy = (part == DY) ? b.dy : b.vy;
  for (int qy = 0; qy < nq; ++qy)
    for (int qx = 0; qx < nq; ++qx)
      for (int j = 0; j < b.ny; ++j)
        for (int i = 0; i < b.nx; ++i)
          out(qy * nq + qx, j * b.nx + i) = fx(qx, i) * fy(qy, j);
  return out;
}

// Edge order: 0 bottom (y = -1), 1 right (x = +1), 2 top (y = +1),
// 3 left (x = -1). Horizontal edges are parametrized by x, vertical by y,
// matching the global edge parametrization by the increasing coordinate.
Eigen::MatrixXd edge_values(const Basis2D& b, int edge) {
  const bool horizontal = (edge == 0 || edge == 2);
  const int nq = static_cast<int>(b.vx.rows());
  Eigen::MatrixXd out(nq, b.nx * b.ny);
  if (horizontal) {
    const Eigen::VectorXd& fy = (edge == 0) ? b.vy_lo : b.vy_hi;
    for (int q = 0; q < nq; ++q)
      for (int j = 0; j < b.ny; ++j)
        for (int i = 0; i < b.nx; ++i)
          out(q, j * b.nx + i) = b.vx(q, i) * fy(j);
  } else {
    const Eigen::VectorXd& fx = (edge == 3) ? b.vx_lo : b.vx_hi;
    for (int q = 0; q < nq; ++q)
      for (int j = 0; j < b.ny; ++j)
        for (int i = 0; i < b.nx; ++i)
          out(q, j * b.nx + i) = fx(i) * b.vy(q, j);
  }
  return out;
}

double edge_sign(int edge) { return (edge == 1 || edge == 2) ? 1.0 : -1.0; }

struct EdgeGeometry {
  bool horizontal;
  double jac;                   // half edge length
  double t0, t1;                // parametrized span
  double fixed;                 // the other coordinate
};

EdgeGeometry edge_geometry(const ElementRef& e, int edge) {
  switch (edge) {
    case 0: return {true, 0.5 * e.h_tau(), e.tau0, e.tau1, e.xi0};
    case 1: return {false, 0.5 * e.h_xi(), e.xi0, e.xi1, e.tau1};
    case 2: return {true, 0.5 * e.h_tau(), e.tau0, e.tau1, e.xi1};
    default: return {false, 0.5 * e.h_xi(), e.xi0, e.xi1, e.tau0};
  }
}

Eigen::VectorXd volume_weights(const QuadratureRule& q, const ElementRef& e) {
  const int nq = q.size();
  Eigen::VectorXd w(nq * nq);
  const double jac = 0.25 * e.h_tau() * e.h_xi();
  for (int qy = 0; qy < nq; ++qy)
    for (int qx = 0; qx < nq; ++qx)
      w(qy * nq + qx) = q.weights(qx) * q.weights(qy) * jac;
  return w;
}

template <typename F>
Eigen::VectorXcd sample_volume(const QuadratureRule& q, const ElementRef& e,
                               const F& f) {
  const int nq = q.size();
  Eigen::VectorXcd out(nq * nq);
  for (int qy = 0; qy < nq; ++qy) {
    const double xi = e.xi0 + 0.5 * (q.points(qy) + 1.0) * e.h_xi();
    for (int qx = 0; qx < nq; ++qx) {
      const double tau = e.tau0 + 0.5 * (q.points(qx) + 1.0) * e.h_tau();
      out(qy * nq + qx) = f(tau, xi);
    }
  }
  return out;
}

}  // namespace

QuadratureRule assembly_quadrature(const ElementSpaces& s) {
  return gauss_rule(s.p + s.dp + 3);
}

Eigen::MatrixXcd element_gram(const ElementRef& e, const ModelParams& p,
                              const ElementSpaces& s) {
  const DofLayout layout = element_dofs(s);
  const QuadratureRule quad = assembly_quadrature(s);
  const int q = s.p + s.dp;
  const double ct = 2.0 / e.h_tau();
  const double cx = 2.0 / e.h_xi();
  const Eigen::VectorXd w = volume_weights(quad, e);
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const double sg = std::sqrt(s.s_graph);

  if (s.regime == Regime::Hyperbolic) {
    const Basis2D h1 = make_basis({q, BasisKind::Lobatto},
                                  {q, BasisKind::Lobatto}, quad);
    const Eigen::MatrixXd val = tensor(h1, Value);
    const Eigen::MatrixXd dtau = ct * tensor(h1, DX);
    const Eigen::MatrixXd dxi = cx * tensor(h1, DY);
    const int nh = h1.nx * h1.ny;
    const int nq2 = static_cast<int>(val.rows());
    const Complex z11 = s.adjoint_conjugate_zero_order ? std::conj(s.zero.z11)
                                                       : s.zero.z11;
    const Complex z22 = s.adjoint_conjugate_zero_order ? std::conj(s.zero.z22)
                                                       : s.zero.z22;
    // Stacked rows: the two adjoint slots plus the weighted L2 blocks;
    // G = M^H M is Hermitian positive definite by construction.
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(4 * nq2, layout.n_test);
    M.block(0, 0, nq2, nh) =
        (-dxi + 2.0 * p.beta1 * dtau).cast<Complex>() + z11 * val.cast<Complex>();
    M.block(0, nh, nq2, nh) = (p.alpha * dtau).cast<Complex>();
    M.block(nq2, 0, nq2, nh) = (p.alpha * dtau).cast<Complex>();
    M.block(nq2, nh, nq2, nh) =
        (-p.alpha * dxi).cast<Complex>() + z22 * val.cast<Complex>();
    M.block(2 * nq2, 0, nq2, nh) = (sg * val).cast<Complex>();
    M.block(3 * nq2, nh, nq2, nh) = (sg * val).cast<Complex>();
    for (int b = 0; b < 4; ++b)
      M.middleRows(b * nq2, nq2).array().colwise() *=
          sw.array().cast<Complex>();
    return M.adjoint() * M;
  }

  const EllipticTensors t = elliptic_tensors(p);
  const Basis2D h1 = make_basis({q, BasisKind::Lobatto},
                                {q, BasisKind::Lobatto}, quad);
  const Basis2D f1 = make_basis({q + 1, BasisKind::Legendre},
                                {q, BasisKind::Legendre}, quad);
  const Basis2D f2 = make_basis({q, BasisKind::Legendre},
                                {q + 1, BasisKind::Legendre}, quad);
  const Eigen::MatrixXd val = tensor(h1, Value);
  const Eigen::MatrixXd dtau = ct * tensor(h1, DX);
  const Eigen::MatrixXd dxi = cx * tensor(h1, DY);
  // Piola map on the axis-aligned element: first component scales by
  // 2/h_xi, second by 2/h_tau, divergence by 4/(h_tau h_xi).
  const double c1p = cx, c2p = ct, cdiv = ct * cx;
  const Eigen::MatrixXd t1 = c1p * tensor(f1, Value);
  const Eigen::MatrixXd t2 = c2p * tensor(f2, Value);
  const Eigen::MatrixXd div1 = cdiv * tensor(f1, DX);
  const Eigen::MatrixXd div2 = cdiv * tensor(f2, DY);
  const int nh = h1.nx * h1.ny;
  const int n1 = f1.nx * f1.ny;
  const int n2 = f2.nx * f2.ny;
  const int nq2 = static_cast<int>(val.rows());
  const Complex imod(0.0, 2.0 * p.beta0 / p.c);

  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(6 * nq2, layout.n_test);
  // Slot 1: 2 beta0 i / c * v_xi + div tau.
  M.block(0, 0, nq2, nh) = imod * dxi.cast<Complex>();
  M.block(0, nh, nq2, n1) = div1.cast<Complex>();
  M.block(0, nh + n1, nq2, n2) = div2.cast<Complex>();
  // Slots 2 and 3: -grad v + c A^{-1} tau.
  M.block(nq2, 0, nq2, nh) = (-dtau).cast<Complex>();
  M.block(nq2, nh, nq2, n1) = (p.c * t.A_inv(0, 0) * t1).cast<Complex>();
  M.block(nq2, nh + n1, nq2, n2) = (p.c * t.A_inv(0, 1) * t2).cast<Complex>();
  M.block(2 * nq2, 0, nq2, nh) = (-dxi).cast<Complex>();
  M.block(2 * nq2, nh, nq2, n1) = (p.c * t.A_inv(1, 0) * t1).cast<Complex>();
  M.block(2 * nq2, nh + n1, nq2, n2) =
      (p.c * t.A_inv(1, 1) * t2).cast<Complex>();
  // Weighted L2 blocks.
  M.block(3 * nq2, 0, nq2, nh) = (sg * val).cast<Complex>();
  M.block(4 * nq2, nh, nq2, n1) = (sg * t1).cast<Complex>();
  M.block(5 * nq2, nh + n1, nq2, n2) = (sg * t2).cast<Complex>();
  for (int b = 0; b < 6; ++b)
    M.middleRows(b * nq2, nq2).array().colwise() *= sw.array().cast<Complex>();
  return M.adjoint() * M;
}

ElementOperators element_stiffness_hyperbolic(const ElementRef& e,
                                              const ModelParams& p,
                                              const FriedrichsDecomposition& d,
                                              const ElementSpaces& s,
                                              const SourceSet& src) {
  const DofLayout layout = element_dofs(s);
  const QuadratureRule quad = assembly_quadrature(s);
  const int q = s.p + s.dp;
  const double ct = 2.0 / e.h_tau();
  const double cx = 2.0 / e.h_xi();
  const Eigen::VectorXd w = volume_weights(quad, e);

  const Basis2D h1 = make_basis({q, BasisKind::Lobatto},
                                {q, BasisKind::Lobatto}, quad);
  const Basis2D trial = make_basis({s.p, BasisKind::Legendre},
                                   {s.p, BasisKind::Legendre}, quad);
  const Eigen::MatrixXd val = tensor(h1, Value);
  const Eigen::MatrixXd dtau = ct * tensor(h1, DX);
  const Eigen::MatrixXd dxi = cx * tensor(h1, DY);
  const Eigen::MatrixXd P = tensor(trial, Value);
  const Eigen::MatrixXd WP = w.asDiagonal() * P;
  const int nh = h1.nx * h1.ny;
  const int np = layout.n_field_per_comp;

  // Ultraweak volume form: all derivatives sit on the test pair.
  const Eigen::MatrixXd M0 = val.transpose() * WP;
  const Eigen::MatrixXd M1 = dtau.transpose() * WP;
  const Eigen::MatrixXd M2 = dxi.transpose() * WP;

  ElementOperators ops;
  ops.B = Eigen::MatrixXcd::Zero(layout.n_test, layout.n_field);
  ops.B.block(0, 0, nh, np) =
      (-M2 + 2.0 * p.beta1 * M1).cast<Complex>() + s.zero.z11 * M0.cast<Complex>();
  ops.B.block(0, np, nh, np) = (p.alpha * M1).cast<Complex>();
  ops.B.block(nh, 0, nh, np) = (p.alpha * M1).cast<Complex>();
  ops.B.block(nh, np, nh, np) =
      (-p.alpha * M2).cast<Complex>() + s.zero.z22 * M0.cast<Complex>();

  ops.l = Eigen::VectorXcd::Zero(layout.n_test);
  if (src.f1) {
    const Eigen::VectorXcd fv = sample_volume(quad, e, src.f1);
    ops.l.segment(0, nh) = val.transpose().cast<Complex>() *
                           (w.cast<Complex>().asDiagonal() * fv);
  }
  if (src.f2) {
    const Eigen::VectorXcd fv = sample_volume(quad, e, src.f2);
    ops.l.segment(nh, nh) = val.transpose().cast<Complex>() *
                            (w.cast<Complex>().asDiagonal() * fv);
  }

  // Edge terms: the characteristic pair (r, t) enters through the element
  // boundary with outward-limit signs. On vertical edges the combination
  // u = t - r, alpha v = lambda2 t - lambda1 r feeds both the transport
  // and the coupling rows; on horizontal edges it feeds the xi-flux rows.
  ops.Bhat = Eigen::MatrixXcd::Zero(layout.n_test, layout.n_trace);
  const Shape1D trace_shape{s.p + 1, BasisKind::Legendre};
  const Eigen::MatrixXd R = shape_values(trace_shape, quad.points);
  for (int edge = 0; edge < 4; ++edge) {
    const EdgeGeometry g = edge_geometry(e, edge);
    const double sn = edge_sign(edge);
    const Eigen::MatrixXd E = edge_values(h1, edge);
    const Eigen::MatrixXd EWR = E.transpose() *
                                (g.jac * quad.weights).asDiagonal() * R;
    const int col_r = layout.trace_index(edge, 0, 0) - layout.n_field;
    const int col_t = layout.trace_index(edge, 1, 0) - layout.n_field;
    const int ntr = layout.n_trace_a;
    if (g.horizontal) {
      ops.Bhat.block(0, col_r, nh, ntr) = (-sn * EWR).cast<Complex>();
      ops.Bhat.block(0, col_t, nh, ntr) = (sn * EWR).cast<Complex>();
      ops.Bhat.block(nh, col_r, nh, ntr) = (-sn * d.lambda1 * EWR).cast<Complex>();
      ops.Bhat.block(nh, col_t, nh, ntr) = (sn * d.lambda2 * EWR).cast<Complex>();
    } else {
      ops.Bhat.block(0, col_r, nh, ntr) =
          (sn * (2.0 * p.beta1 + d.lambda1) * EWR).cast<Complex>();
      ops.Bhat.block(0, col_t, nh, ntr) =
          (-sn * (2.0 * p.beta1 + d.lambda2) * EWR).cast<Complex>();
      ops.Bhat.block(nh, col_r, nh, ntr) = (sn * p.alpha * EWR).cast<Complex>();
      ops.Bhat.block(nh, col_t, nh, ntr) = (-sn * p.alpha * EWR).cast<Complex>();
    }
  }
  return ops;
}

ElementOperators element_stiffness_elliptic(const ElementRef& e,
                                            const ModelParams& p,
                                            const EllipticTensors& t,
                                            const ElementSpaces& s,
                                            const SourceSet& src) {
  const DofLayout layout = element_dofs(s);
  const QuadratureRule quad = assembly_quadrature(s);
  const int q = s.p + s.dp;
  const double ct = 2.0 / e.h_tau();
  const double cx = 2.0 / e.h_xi();
  const Eigen::VectorXd w = volume_weights(quad, e);

  const Basis2D h1 = make_basis({q, BasisKind::Lobatto},
                                {q, BasisKind::Lobatto}, quad);
  const Basis2D f1 = make_basis({q + 1, BasisKind::Legendre},
                                {q, BasisKind::Legendre}, quad);
  const Basis2D f2 = make_basis({q, BasisKind::Legendre},
                                {q + 1, BasisKind::Legendre}, quad);
  const Basis2D trial = make_basis({s.p, BasisKind::Legendre},
                                   {s.p, BasisKind::Legendre}, quad);
  const Eigen::MatrixXd dtau = ct * tensor(h1, DX);
  const Eigen::MatrixXd dxi = cx * tensor(h1, DY);
  const Eigen::MatrixXd val = tensor(h1, Value);
  const double c1p = cx, c2p = ct, cdiv = ct * cx;
  const Eigen::MatrixXd t1 = c1p * tensor(f1, Value);
  const Eigen::MatrixXd t2 = c2p * tensor(f2, Value);
  const Eigen::MatrixXd div1 = cdiv * tensor(f1, DX);
  const Eigen::MatrixXd div2 = cdiv * tensor(f2, DY);
  const Eigen::MatrixXd P = tensor(trial, Value);
  const Eigen::MatrixXd WP = w.asDiagonal() * P;
  const int nh = h1.nx * h1.ny;
  const int n1 = f1.nx * f1.ny;
  const int n2 = f2.nx * f2.ny;
  const int np = layout.n_field_per_comp;
  const Complex imod(0.0, 2.0 * p.beta0 / p.c);

  ElementOperators ops;
  ops.B = Eigen::MatrixXcd::Zero(layout.n_test, layout.n_field);
  // u columns: -2 beta0 i / c (u, v_xi) + (u, div tau).
  ops.B.block(0, 0, nh, np) = -imod * (dxi.transpose() * WP).cast<Complex>();
  ops.B.block(nh, 0, n1, np) = (div1.transpose() * WP).cast<Complex>();
  ops.B.block(nh + n1, 0, n2, np) = (div2.transpose() * WP).cast<Complex>();
  // sigma columns: -(sigma, grad v) + c (A^{-1} sigma, tau).
  ops.B.block(0, np, nh, np) = (-dtau.transpose() * WP).cast<Complex>();
  ops.B.block(0, 2 * np, nh, np) = (-dxi.transpose() * WP).cast<Complex>();
  ops.B.block(nh, np, n1, np) =
      (p.c * t.A_inv(0, 0) * (t1.transpose() * WP)).cast<Complex>();
  ops.B.block(nh + n1, np, n2, np) =
      (p.c * t.A_inv(1, 0) * (t2.transpose() * WP)).cast<Complex>();
  ops.B.block(nh, 2 * np, n1, np) =
      (p.c * t.A_inv(0, 1) * (t1.transpose() * WP)).cast<Complex>();
  ops.B.block(nh + n1, 2 * np, n2, np) =
      (p.c * t.A_inv(1, 1) * (t2.transpose() * WP)).cast<Complex>();

  ops.l = Eigen::VectorXcd::Zero(layout.n_test);
  if (src.f) {
    const Eigen::VectorXcd fv = sample_volume(quad, e, src.f);
    ops.l.segment(0, nh) = (1.0 / p.c) * val.transpose().cast<Complex>() *
                           (w.cast<Complex>().asDiagonal() * fv);
  }
  if (src.g) {
    // The consistent load tests A^{-1} g against the flux pair.
    const Eigen::VectorXcd g1 = sample_volume(quad, e, [&](double a, double b) {
      return (t.A_inv.cast<Complex>() * src.g(a, b))(0);
    });
    const Eigen::VectorXcd g2 = sample_volume(quad, e, [&](double a, double b) {
      return (t.A_inv.cast<Complex>() * src.g(a, b))(1);
    });
    ops.l.segment(nh, n1) = t1.transpose().cast<Complex>() *
                            (w.cast<Complex>().asDiagonal() * g1);
    ops.l.segment(nh + n1, n2) = t2.transpose().cast<Complex>() *
                                 (w.cast<Complex>().asDiagonal() * g2);
  }

  ops.Bhat = Eigen::MatrixXcd::Zero(layout.n_test, layout.n_trace);
  const Shape1D trace_shape{s.p + 1, BasisKind::Lobatto};
  const Shape1D flux_shape{s.p, BasisKind::Legendre};
  const Eigen::MatrixXd Ru = shape_values(trace_shape, quad.points);
  const Eigen::MatrixXd Rs = shape_values(flux_shape, quad.points);
  for (int edge = 0; edge < 4; ++edge) {
    const EdgeGeometry g = edge_geometry(e, edge);
    const double sn = edge_sign(edge);
    const Eigen::DiagonalMatrix<double, Eigen::Dynamic> We(
        (g.jac * quad.weights).eval());
    const Eigen::MatrixXd Ev = edge_values(h1, edge);
    const int col_u = layout.trace_index(edge, 0, 0) - layout.n_field;
    const int col_s = layout.trace_index(edge, 1, 0) - layout.n_field;
    // Normal flux unknowns are stored against the global normal (+tau for
    // vertical, +xi for horizontal edges), which coincides with the
    // outward normal exactly on right and top edges.
    ops.Bhat.block(0, col_s, nh, layout.n_trace_b) =
        (sn * (Ev.transpose() * We * Rs)).cast<Complex>();
    if (g.horizontal) {
      ops.Bhat.block(0, col_u, nh, layout.n_trace_a) +=
          (sn * (Ev.transpose() * We * Ru)).cast<Complex>() * imod;
      const Eigen::MatrixXd Et2 = c2p * edge_values(f2, edge);
      ops.Bhat.block(nh + n1, col_u, n2, layout.n_trace_a) =
          (-sn * (Et2.transpose() * We * Ru)).cast<Complex>();
    } else {
      const Eigen::MatrixXd Et1 = c1p * edge_values(f1, edge);
      ops.Bhat.block(nh, col_u, n1, layout.n_trace_a) =
          (-sn * (Et1.transpose() * We * Ru)).cast<Complex>();
    }
  }
  return ops;
}

ElementOperators element_stiffness(const ElementRef& e, const ModelParams& p,
                                   const ElementSpaces& s,
                                   const SourceSet& src) {
  if (s.regime == Regime::Hyperbolic)
    return element_stiffness_hyperbolic(e, p, friedrichs_decomposition(p), s,
                                        src);
  return element_stiffness_elliptic(e, p, elliptic_tensors(p), s, src);
}

GramSolver::GramSolver(const Eigen::MatrixXcd& G, int element_id,
                       bool equilibrate) {
  if (equilibrate) {
    scale_ = G.diagonal().real().cwiseMax(0.0).cwiseSqrt().cwiseInverse();
    for (int i = 0; i < scale_.size(); ++i)
      if (!std::isfinite(scale_(i))) scale_(i) = 1.0;
  } else {
    scale_ = Eigen::VectorXd::Ones(G.rows());
  }
  const Eigen::MatrixXcd scaled =
      scale_.asDiagonal() * G * scale_.asDiagonal();
  if (!scaled.allFinite())
    throw std::runtime_error("gram matrix has non-finite entries on element " +
                             std::to_string(element_id));
  llt_.compute(scaled);
  if (llt_.info() == Eigen::Success) return;
  // A theoretically HPD Gram matrix can land past plain Cholesky when the
  // test norm is badly scaled (the regularizing mass terms drop below
  // machine precision relative to the adjoint terms). The pivoted
  // factorization still completes; accuracy is whatever the conditioning
  // leaves, which is the honest answer here.
  pivoted_ = true;
  ldlt_.compute(scaled);
}

Eigen::VectorXcd GramSolver::solve(const Eigen::VectorXcd& rhs) const {
  const Eigen::VectorXcd s = (scale_.asDiagonal() * rhs).eval();
  const Eigen::VectorXcd y = pivoted_ ? ldlt_.solve(s).eval() : llt_.solve(s).eval();
  return scale_.asDiagonal() * y;
}

Eigen::MatrixXcd GramSolver::solve(const Eigen::MatrixXcd& rhs) const {
  const Eigen::MatrixXcd s = (scale_.asDiagonal() * rhs).eval();
  const Eigen::MatrixXcd y = pivoted_ ? ldlt_.solve(s).eval() : llt_.solve(s).eval();
  return scale_.asDiagonal() * y;
}

CondensedElement condense(const Eigen::MatrixXcd& G,
                          const ElementOperators& ops, int element_id,
                          bool equilibrate) {
  const GramSolver gram(G, element_id, equilibrate);
  Eigen::MatrixXcd N(ops.B.rows(), ops.B.cols() + ops.Bhat.cols());
  N << ops.B, ops.Bhat;
  const Eigen::MatrixXcd GiN = gram.solve(N);
  CondensedElement out;
  out.K = N.adjoint() * GiN;
  out.K = 0.5 * (out.K + out.K.adjoint()).eval();  // strip roundoff skew
  out.f = GiN.adjoint() * ops.l;
  return out;
}

}  // namespace pulsedpg
