#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "doctest.h"
#include "pulsedpg/assembly.hpp"
#include "pulsedpg/fem.hpp"
#include "pulsedpg/mesh.hpp"
#include "pulsedpg/model.hpp"

using namespace pulsedpg;

namespace {

ElementRef sample_element() {
  ElementRef e;
  e.id = 0;
  e.i = e.j = 0;
  e.tau0 = 0.2;
  e.tau1 = 0.65;
  e.xi0 = 0.1;
  e.xi1 = 0.4;
  return e;
}

Eigen::VectorXd random_vector(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = dist(rng);
  return v;
}

// Tensor-product evaluation matrices at the volume quadrature points,
// following the element convention: dof = j * nx + i (x fastest), volume
// point = qy * nq + qx.
struct TensorEval {
  Eigen::MatrixXd val, dx, dy;  // (nq*nq) x (nx*ny), reference derivatives
};

TensorEval tensor_eval(const Shape1D& sx, const Shape1D& sy,
                       const QuadratureRule& q) {
  const Eigen::MatrixXd vx = shape_values(sx, q.points);
  const Eigen::MatrixXd dxm = shape_derivs(sx, q.points);
  const Eigen::MatrixXd vy = shape_values(sy, q.points);
  const Eigen::MatrixXd dym = shape_derivs(sy, q.points);
  const int nq = q.size();
  TensorEval t;
  t.val.resize(nq * nq, sx.size() * sy.size());
  t.dx.resize(nq * nq, sx.size() * sy.size());
  t.dy.resize(nq * nq, sx.size() * sy.size());
  for (int qy = 0; qy < nq; ++qy)
    for (int qx = 0; qx < nq; ++qx)
      for (int j = 0; j < sy.size(); ++j)
        for (int i = 0; i < sx.size(); ++i) {
          const int row = qy * nq + qx;
          const int col = j * sx.size() + i;
          t.val(row, col) = vx(qx, i) * vy(qy, j);
          t.dx(row, col) = dxm(qx, i) * vy(qy, j);
          t.dy(row, col) = vx(qx, i) * dym(qy, j);
        }
  return t;
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

// Quadrature of the adjoint graph norm of the hyperbolic test pair given
// by real coefficient vectors wu, wv over the H1 tensor basis of order q.
double graph_norm_hyperbolic(const ElementRef& e, const ModelParams& p,
                             const ElementSpaces& s,
                             const Eigen::VectorXd& wu,
                             const Eigen::VectorXd& wv) {
  const QuadratureRule quad = assembly_quadrature(s);
  const int q = s.p + s.dp;
  const TensorEval t =
      tensor_eval({q, BasisKind::Lobatto}, {q, BasisKind::Lobatto}, quad);
  const Eigen::VectorXd w = volume_weights(quad, e);
  const double ct = 2.0 / e.h_tau();
  const double cx = 2.0 / e.h_xi();
  double acc = 0.0;
  for (int k = 0; k < w.size(); ++k) {
    PointSample du, dv;
    du.value = t.val.row(k).dot(wu);
    du.d_tau = ct * (t.dx.row(k).dot(wu));
    du.d_xi = cx * (t.dy.row(k).dot(wu));
    dv.value = t.val.row(k).dot(wv);
    dv.d_tau = ct * (t.dx.row(k).dot(wv));
    dv.d_xi = cx * (t.dy.row(k).dot(wv));
    const Eigen::Vector2cd a = apply_adjoint_hyperbolic(
        p, s.zero, du, dv, s.adjoint_conjugate_zero_order);
    acc += w[k] * (std::norm(a[0]) + std::norm(a[1]) +
                   s.s_graph * (std::norm(du.value) + std::norm(dv.value)));
  }
  return acc;
}

// Same for the elliptic pair (v, tau). tau lives in the Piola-mapped
// Raviart-Thomas style space Q_{q+1,q} x Q_{q,q+1}.
double graph_norm_elliptic(const ElementRef& e, const ModelParams& p,
                           const ElementSpaces& s, const Eigen::VectorXd& wv,
                           const Eigen::VectorXd& w1,
                           const Eigen::VectorXd& w2) {
  const QuadratureRule quad = assembly_quadrature(s);
  const int q = s.p + s.dp;
  const TensorEval tv =
      tensor_eval({q, BasisKind::Lobatto}, {q, BasisKind::Lobatto}, quad);
  const TensorEval t1 =
      tensor_eval({q + 1, BasisKind::Legendre}, {q, BasisKind::Legendre}, quad);
  const TensorEval t2 =
      tensor_eval({q, BasisKind::Legendre}, {q + 1, BasisKind::Legendre}, quad);
  const Eigen::VectorXd w = volume_weights(quad, e);
  const double ct = 2.0 / e.h_tau();
  const double cx = 2.0 / e.h_xi();
  const EllipticTensors tens = elliptic_tensors(p);
  double acc = 0.0;
  for (int k = 0; k < w.size(); ++k) {
    PointSample v;
    v.value = tv.val.row(k).dot(wv);
    v.d_tau = ct * (tv.dx.row(k).dot(wv));
    v.d_xi = cx * (tv.dy.row(k).dot(wv));
    FluxSample tau;
    tau.v1 = cx * (t1.val.row(k).dot(w1));
    tau.v2 = ct * (t2.val.row(k).dot(w2));
    tau.div = ct * cx * (t1.dx.row(k).dot(w1) + t2.dy.row(k).dot(w2));
    const Eigen::Vector3cd a = apply_adjoint_elliptic(p, tens, v, tau);
    acc += w[k] * (std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2]) +
                   s.s_graph * (std::norm(v.value) + std::norm(tau.v1) +
                                std::norm(tau.v2)));
  }
  return acc;
}

}  // namespace

TEST_CASE("assembly quadrature resolves the enriched test space") {
  const ModelParams p = derive_params(1.0, 0.3, 1.0);
  const ElementSpaces s = make_spaces(Regime::Hyperbolic, 2, 2, p);
  CHECK(assembly_quadrature(s).size() == 7);  // p + dp + 3
}

TEST_CASE("gram matrix is Hermitian positive definite") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  for (const bool elliptic : {false, true}) {
    const ModelParams p = elliptic ? derive_params(1e6, 1.0, -1e-4, 1e4)
                                   : derive_params(1e6, 1.0, 1e-4);
    const ElementSpaces s = make_spaces(p.regime, 1, 2, p);
    for (int trial = 0; trial < 3; ++trial) {
      ElementRef e = sample_element();
      e.tau1 = e.tau0 + dist(rng);
      e.xi1 = e.xi0 + dist(rng);
      const Eigen::MatrixXcd G = element_gram(e, p, s);
      CHECK((G - G.adjoint()).norm() <= 1e-12 * G.norm());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(G);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("hyperbolic gram equals the quadrature of the adjoint graph norm") {
  std::mt19937 rng(11);
  for (const bool conj : {false, true}) {
    for (const bool defaults : {false, true}) {
      const ModelParams p = defaults ? derive_params(1e6, 1.0, 1e-4)
                                     : derive_params(1.0, 0.3, 1.0);
      ElementSpaces s = make_spaces(Regime::Hyperbolic, 2, 2, p);
      s.adjoint_conjugate_zero_order = conj;
      const ElementRef e = sample_element();
      const Eigen::MatrixXcd G = element_gram(e, p, s);
      const DofLayout layout = element_dofs(s);
      const int nh = layout.n_test / 2;
      for (int trial = 0; trial < 3; ++trial) {
        const Eigen::VectorXd wu = random_vector(nh, rng);
        const Eigen::VectorXd wv = random_vector(nh, rng);
        Eigen::VectorXcd w(layout.n_test);
        w << wu.cast<Complex>(), wv.cast<Complex>();
        const double quad_form = std::real(Complex(w.adjoint() * (G * w)));
        const double direct = graph_norm_hyperbolic(e, p, s, wu, wv);
        CHECK(std::abs(quad_form - direct) <= 1e-12 * std::abs(direct));
      }
    }
  }
}

TEST_CASE("elliptic gram equals the quadrature of the adjoint graph norm") {
  std::mt19937 rng(13);
  for (const bool defaults : {false, true}) {
    const ModelParams p = defaults ? derive_params(1e6, 1.0, -1e-4, 1e4)
                                   : derive_params(1.0, 0.3, -1.0, 2.0);
    const ElementSpaces s = make_spaces(Regime::Elliptic, 1, 2, p);
    const ElementRef e = sample_element();
    const Eigen::MatrixXcd G = element_gram(e, p, s);
    const DofLayout layout = element_dofs(s);
    const int q = s.p + s.dp;
    const int nh = (q + 1) * (q + 1);
    const int n1 = (q + 2) * (q + 1);
    const int n2 = (q + 1) * (q + 2);
    REQUIRE(layout.n_test == nh + n1 + n2);
    for (int trial = 0; trial < 3; ++trial) {
      const Eigen::VectorXd wv = random_vector(nh, rng);
      const Eigen::VectorXd w1 = random_vector(n1, rng);
      const Eigen::VectorXd w2 = random_vector(n2, rng);
      Eigen::VectorXcd w(layout.n_test);
      w << wv.cast<Complex>(), w1.cast<Complex>(), w2.cast<Complex>();
      const double quad_form = std::real(Complex(w.adjoint() * (G * w)));
      const double direct = graph_norm_elliptic(e, p, s, wv, w1, w2);
      CHECK(std::abs(quad_form - direct) <= 1e-12 * std::abs(direct));
    }
  }
}

TEST_CASE("hyperbolic field block pairs trial fields with the adjoint") {
  // w^T B ufield must equal the quadrature of sum_i u_i * (A' w)_i where
  // A' is the unconjugated formal adjoint: the basis is real, so the only
  // complex entries come from the zero-order term.
  std::mt19937 rng(17);
  const ModelParams p = derive_params(1e6, 1.0, 1e-4);
  const ElementSpaces s = make_spaces(Regime::Hyperbolic, 1, 2, p);
  const ElementRef e = sample_element();
  const FriedrichsDecomposition d = friedrichs_decomposition(p);
  const ElementOperators ops = element_stiffness_hyperbolic(e, p, d, s, {});
  const DofLayout layout = element_dofs(s);
  const int q = s.p + s.dp;
  const QuadratureRule quad = assembly_quadrature(s);
  const TensorEval tw =
      tensor_eval({q, BasisKind::Lobatto}, {q, BasisKind::Lobatto}, quad);
  const TensorEval tu =
      tensor_eval({s.p, BasisKind::Legendre}, {s.p, BasisKind::Legendre}, quad);
  const Eigen::VectorXd w = volume_weights(quad, e);
  const double ct = 2.0 / e.h_tau();
  const double cx = 2.0 / e.h_xi();
  const int nh = layout.n_test / 2;
  const int np = layout.n_field_per_comp;
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::VectorXd wu = random_vector(nh, rng);
    const Eigen::VectorXd wv = random_vector(nh, rng);
    const Eigen::VectorXd cu = random_vector(np, rng);
    const Eigen::VectorXd cv = random_vector(np, rng);
    Eigen::VectorXcd wt(layout.n_test), ut(layout.n_field);
    wt << wu.cast<Complex>(), wv.cast<Complex>();
    ut << cu.cast<Complex>(), cv.cast<Complex>();
    const Complex got = wt.transpose() * (ops.B * ut);
    Complex want(0, 0);
    for (int k = 0; k < w.size(); ++k) {
      PointSample du, dv;
      du.value = tw.val.row(k).dot(wu);
      du.d_tau = ct * (tw.dx.row(k).dot(wu));
      du.d_xi = cx * (tw.dy.row(k).dot(wu));
      dv.value = tw.val.row(k).dot(wv);
      dv.d_tau = ct * (tw.dx.row(k).dot(wv));
      dv.d_xi = cx * (tw.dy.row(k).dot(wv));
      const Eigen::Vector2cd a =
          apply_adjoint_hyperbolic(p, s.zero, du, dv, false);
      const Complex uval = tu.val.row(k).dot(cu);
      const Complex vval = tu.val.row(k).dot(cv);
      want += w[k] * (uval * a[0] + vval * a[1]);
    }
    CHECK(std::abs(got - want) <= 1e-12 * std::abs(want));
  }
}

TEST_CASE("condensed element matches the dense-inverse normal equations") {
  std::mt19937 rng(23);
  for (const bool elliptic : {false, true}) {
    const ModelParams p = elliptic ? derive_params(1.0, 0.3, -1.0, 2.0)
                                   : derive_params(1.0, 0.3, 1.0);
    const ElementSpaces s = make_spaces(p.regime, 1, 2, p);
    const ElementRef e = sample_element();
    const Eigen::MatrixXcd G = element_gram(e, p, s);
    SourceSet src;
    src.f1 = [](double tau, double xi) { return Complex(tau, xi); };
    src.f2 = [](double tau, double xi) { return Complex(xi, -tau); };
    src.f = [](double tau, double xi) { return Complex(tau * xi, 1.0); };
    const ElementOperators ops = element_stiffness(e, p, s, src);
    const DofLayout layout = element_dofs(s);
    REQUIRE(ops.B.rows() == layout.n_test);
    REQUIRE(ops.Bhat.cols() == layout.n_trace);

    Eigen::MatrixXcd J(layout.n_test, layout.n_total);
    J << ops.B, ops.Bhat;
    const Eigen::MatrixXcd Ginv = G.inverse();
    const Eigen::MatrixXcd Kref = J.adjoint() * Ginv * J;
    const Eigen::VectorXcd fref = J.adjoint() * (Ginv * ops.l);

    const CondensedElement ce = condense(G, ops, e.id);
    CHECK((ce.K - Kref).norm() <= 1e-10 * Kref.norm());
    CHECK((ce.f - fref).norm() <= 1e-10 * (fref.norm() + 1.0));
    CHECK((ce.K - ce.K.adjoint()).norm() <= 1e-12 * ce.K.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(ce.K);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * ce.K.norm());

    // Equilibration rescales the test basis only; the condensed system
    // must not move.
    const CondensedElement cq = condense(G, ops, e.id, true);
    CHECK((cq.K - ce.K).norm() <= 1e-10 * ce.K.norm());
    CHECK((cq.f - ce.f).norm() <= 1e-10 * (ce.f.norm() + 1.0));
    (void)rng;
  }
}

TEST_CASE("gram solver matches a dense LU solve and flags bad input") {
  std::mt19937 rng(29);
  const ModelParams p = derive_params(1.0, 0.3, 1.0);
  const ElementSpaces s = make_spaces(Regime::Hyperbolic, 1, 2, p);
  const ElementRef e = sample_element();
  const Eigen::MatrixXcd G = element_gram(e, p, s);
  const GramSolver solver(G, e.id);
  CHECK_FALSE(solver.used_pivoting());
  const Eigen::VectorXd rr = random_vector(G.rows(), rng);
  const Eigen::VectorXcd rhs = rr.cast<Complex>();
  const Eigen::VectorXcd got = solver.solve(rhs);
  const Eigen::VectorXcd want = G.fullPivLu().solve(rhs);
  CHECK((got - want).norm() <= 1e-10 * want.norm());

  Eigen::MatrixXcd bad = G;
  bad(2, 2) = Complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(GramSolver(bad, 5), std::runtime_error);
}
