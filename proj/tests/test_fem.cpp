#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "pulsedpg/fem.hpp"

using namespace pulsedpg;

namespace {
double integrate(const QuadratureRule& q, double (*f)(double)) {
  double s = 0.0;
  for (int k = 0; k < q.size(); ++k) s += q.weights[k] * f(q.points[k]);
  return s;
}
}  // namespace

TEST_CASE("gauss rules integrate polynomials exactly through degree 2n-1") {
  for (int n = 1; n <= 8; ++n) {
    const QuadratureRule q = gauss_rule(n);
    REQUIRE(q.size() == n);
    CHECK(q.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
    // x^(2n-1) is odd: integral 0; x^(2n-2) has a closed form.
    double odd = 0.0, even = 0.0;
    for (int k = 0; k < n; ++k) {
      odd += q.weights[k] * std::pow(q.points[k], 2 * n - 1);
      even += q.weights[k] * std::pow(q.points[k], 2 * n - 2);
    }
    CHECK(std::abs(odd) <= 1e-14);
    CHECK(even == doctest::Approx(2.0 / (2.0 * n - 1.0)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(gauss_rule(0), std::invalid_argument);
}

TEST_CASE("gauss rule resolves a trigonometric integral") {
  const QuadratureRule q = gauss_rule(12);
  const double got = integrate(q, [](double x) { return std::cos(3.0 * x); });
  CHECK(got == doctest::Approx(2.0 * std::sin(3.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("legendre basis is L2-orthogonal with the standard norms") {
  const Shape1D s{4, BasisKind::Legendre};
  const QuadratureRule q = gauss_rule(6);
  const Eigen::MatrixXd V = shape_values(s, q.points);
  for (int a = 0; a < s.size(); ++a)
    for (int b = 0; b < s.size(); ++b) {
      double dot = 0.0;
      for (int k = 0; k < q.size(); ++k)
        dot += q.weights[k] * V(k, a) * V(k, b);
      const double expect = a == b ? 2.0 / (2.0 * a + 1.0) : 0.0;
      CHECK(std::abs(dot - expect) <= 1e-13);
    }
  // P_n(1) = 1, P_n(-1) = (-1)^n.
  Eigen::VectorXd v, d;
  shape_eval(s, 1.0, v, d);
  for (int a = 0; a < s.size(); ++a) CHECK(v[a] == doctest::Approx(1.0));
  shape_eval(s, -1.0, v, d);
  for (int a = 0; a < s.size(); ++a)
    CHECK(v[a] == doctest::Approx(a % 2 == 0 ? 1.0 : -1.0));
}

TEST_CASE("lobatto basis: vertex functions partition unity, bubbles vanish") {
  const Shape1D s{4, BasisKind::Lobatto};
  Eigen::VectorXd v, d;
  shape_eval(s, -1.0, v, d);
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(0.0));
  for (int a = 2; a < s.size(); ++a) CHECK(std::abs(v[a]) <= 1e-14);
  shape_eval(s, 1.0, v, d);
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(1.0));
  for (int a = 2; a < s.size(); ++a) CHECK(std::abs(v[a]) <= 1e-14);
  // Linear part partitions unity everywhere.
  shape_eval(s, 0.37, v, d);
  CHECK(v[0] + v[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("shape derivatives match central differences") {
  const double h = 1e-6;
  for (const BasisKind kind : {BasisKind::Legendre, BasisKind::Lobatto}) {
    const Shape1D s{5, kind};
    for (const double x : {-0.83, -0.2, 0.41, 0.98}) {
      Eigen::VectorXd v0, d0, vp, vm, dd;
      shape_eval(s, x, v0, d0);
      shape_eval(s, x + h, vp, dd);
      shape_eval(s, x - h, vm, dd);
      for (int a = 0; a < s.size(); ++a) {
        const double fd = (vp[a] - vm[a]) / (2.0 * h);
        CHECK(std::abs(d0[a] - fd) <= 1e-7 * std::max(1.0, std::abs(d0[a])));
      }
    }
  }
}

TEST_CASE("shape matrices agree with pointwise evaluation") {
  const Shape1D s{3, BasisKind::Lobatto};
  Eigen::VectorXd pts(3);
  pts << -0.5, 0.0, 0.7;
  const Eigen::MatrixXd V = shape_values(s, pts);
  const Eigen::MatrixXd D = shape_derivs(s, pts);
  REQUIRE(V.rows() == 3);
  REQUIRE(V.cols() == s.size());
  Eigen::VectorXd v, d;
  for (int k = 0; k < 3; ++k) {
    shape_eval(s, pts[k], v, d);
    CHECK((V.row(k).transpose() - v).norm() <= 1e-14);
    CHECK((D.row(k).transpose() - d).norm() <= 1e-14);
  }
}

TEST_CASE("dof counts for the default discretizations") {
  const ModelParams hyp = derive_params(1e6, 1.0, 1e-4);
  const ModelParams ell = derive_params(1e6, 1.0, -1e-4, 1e4);

  const DofLayout lh = element_dofs(make_spaces(Regime::Hyperbolic, 1, 2, hyp));
  CHECK(lh.n_field == 8);        // 2 components x (p+1)^2
  CHECK(lh.n_trace_per_edge == 6);  // (r, t), each order p+1
  CHECK(lh.n_trace == 24);
  CHECK(lh.n_total == 32);
  CHECK(lh.n_test == 32);        // 2 x (p+dp+1)^2

  const DofLayout le = element_dofs(make_spaces(Regime::Elliptic, 1, 2, ell));
  CHECK(le.n_field == 12);       // u, sigma1, sigma2
  CHECK(le.n_trace_a == 3);      // scalar trace order p+1
  CHECK(le.n_trace_b == 2);      // normal flux order p
  CHECK(le.n_trace == 20);
  CHECK(le.n_total == 32);
  CHECK(le.n_test == 56);        // (q+1)^2 scalar + Q_{q+1,q} x Q_{q,q+1} pair

  CHECK(lh.field_index(1, 0, 1) == 4 + 2);
  CHECK(lh.trace_index(0, 0, 0) == lh.n_field);
  CHECK(lh.trace_index(3, 1, 2) == lh.n_field + 3 * 6 + 3 + 2);
}

TEST_CASE("hyperbolic test space must dominate the trial space") {
  const ModelParams hyp = derive_params(1e6, 1.0, 1e-4);
  CHECK_THROWS_AS(element_dofs(make_spaces(Regime::Hyperbolic, 1, 1, hyp)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_spaces(Regime::Hyperbolic, 0, 2, hyp),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_spaces(Regime::Hyperbolic, 1, 4, hyp),
                  std::invalid_argument);
}
