#pragma once

#include <complex>
#include <limits>
#include <utility>

#include <Eigen/Dense>

namespace pulsedpg {

using Complex = std::complex<double>;

enum class Regime { Hyperbolic, Elliptic };

// Coefficients of the first-order space-time model on coordinates (tau, xi).
// The sign of alpha = beta0*beta2 - beta1^2 selects the regime: alpha > 0
// gives a symmetric hyperbolic (Friedrichs) pair, alpha < 0 an elliptic
// diffusion tensor with a = -alpha. c rescales the elliptic flux variable
// and is ignored in the hyperbolic regime.
struct ModelParams {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double c = 1.0;
  double alpha = 0.0;
  double a = 0.0;  // -alpha, meaningful in the elliptic regime only
  Regime regime = Regime::Hyperbolic;
};

// Validates inputs and derives alpha, a and the regime.
// Throws std::invalid_argument for beta0 <= 0, c <= 0, a degenerate
// alpha == 0, or an elliptic tensor that fails a - beta1^2 > 0.
ModelParams derive_params(double beta0, double beta1, double beta2,
                          double c = 1.0);

// Characteristic structure of the hyperbolic pair: eigenvalues
// lambda1 < 0 < lambda2 of the tau-flux relative to the xi-flux inner
// product (U, V) = U1 conj(V1) + alpha U2 conj(V2), the eigenvectors
// b1, b2 orthonormal in that inner product, and the characteristic
// directions c_i = (lambda_i, 1) in the (tau, xi) plane.
struct FriedrichsDecomposition {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Eigen::Vector2d b1{0, 0};
  Eigen::Vector2d b2{0, 0};
  Eigen::Vector2d c1{0, 0};
  Eigen::Vector2d c2{0, 0};
};

// Requires the hyperbolic regime. lambda1 = -beta1 - sqrt(beta0*beta2),
// lambda2 = -beta1 + sqrt(beta0*beta2); both are nonzero because
// |beta1| != sqrt(beta0*beta2) whenever alpha != 0.
FriedrichsDecomposition friedrichs_decomposition(const ModelParams& p);

// Components of a state (u, v) in the characteristic basis: the
// weighted projections U_i = u*b_i[0] + alpha*v*b_i[1].
std::pair<Complex, Complex> spectral_components(
    Complex u, Complex v, const FriedrichsDecomposition& d,
    const ModelParams& p);

// Diffusion tensor of the elliptic regime, acting on gradients ordered
// (d_tau, d_xi): A = [[a, -beta1], [-beta1, 1]].
struct EllipticTensors {
  Eigen::Matrix2d A;
  Eigen::Matrix2d A_inv;
};

EllipticTensors elliptic_tensors(const ModelParams& p);

// Diagonal zero-order block of the hyperbolic system. The standard form
// keeps only the modulation term 2*beta0*i on the first equation; the
// rescaled form adds the identity weights (1, alpha) of the rebalanced
// system.
struct ZeroOrderTerm {
  Complex z11{0.0, 0.0};
  Complex z22{0.0, 0.0};

  static ZeroOrderTerm standard(const ModelParams& p);
  static ZeroOrderTerm rescaled(const ModelParams& p);
};

// Pointwise sample of a scalar field. Members default to NaN so that a
// forgotten derivative is detected instead of silently propagated.
struct PointSample {
  Complex value{std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN()};
  Complex d_tau{std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN()};
  Complex d_xi{std::numeric_limits<double>::quiet_NaN(),
               std::numeric_limits<double>::quiet_NaN()};
};

// Pointwise sample of a flux pair (first component, second component)
// together with its divergence d_tau(v1) + d_xi(v2).
struct FluxSample {
  Complex v1{std::numeric_limits<double>::quiet_NaN(),
             std::numeric_limits<double>::quiet_NaN()};
  Complex v2{std::numeric_limits<double>::quiet_NaN(),
             std::numeric_limits<double>::quiet_NaN()};
  Complex div{std::numeric_limits<double>::quiet_NaN(),
              std::numeric_limits<double>::quiet_NaN()};
};

// Strong residual of the hyperbolic first-order system at a point:
//   r1 = u_xi - 2 beta1 u_tau - alpha v_tau + z11 u - f1
//   r2 = alpha v_xi - alpha u_tau + z22 v - f2
// Throws std::invalid_argument if a required sample member is NaN.
Eigen::Vector2cd apply_forward_hyperbolic(const ModelParams& p,
                                          const ZeroOrderTerm& z,
                                          const PointSample& u,
                                          const PointSample& v,
                                          Complex f1 = Complex(0, 0),
                                          Complex f2 = Complex(0, 0));

// Strong residual of the rescaled elliptic first-order system:
//   (r1, r2) = c sigma - A grad(u) - g
//   r3       = div sigma + 2 beta0 i / c * u_xi - f / c
Eigen::Vector3cd apply_forward_elliptic(
    const ModelParams& p, const EllipticTensors& t, const PointSample& u,
    const FluxSample& sigma,
    const Eigen::Vector2cd& g = Eigen::Vector2cd::Zero(),
    Complex f = Complex(0, 0));

// Formal adjoint of the hyperbolic operator applied to a test pair:
//   s1 = -du_xi + 2 beta1 du_tau + z11 du + alpha dv_tau
//   s2 = -alpha dv_xi + alpha du_tau + z22 dv
// With conjugate_zero_order the zero-order entries are conjugated, which
// turns the formal transpose into the true complex adjoint.
Eigen::Vector2cd apply_adjoint_hyperbolic(const ModelParams& p,
                                          const ZeroOrderTerm& z,
                                          const PointSample& du,
                                          const PointSample& dv,
                                          bool conjugate_zero_order = false);

// Formal adjoint of the elliptic operator applied to a test pair (v, tau):
//   s1       = 2 beta0 i / c * v_xi + div tau
//   (s2, s3) = -grad(v) + c A^{-1} tau
Eigen::Vector3cd apply_adjoint_elliptic(const ModelParams& p,
                                        const EllipticTensors& t,
                                        const PointSample& v,
                                        const FluxSample& tau);

}  // namespace pulsedpg
