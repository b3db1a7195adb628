#include "pulsedpg/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pulsedpg {

namespace {

bool finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

void require_sample(const PointSample& s, bool need_derivs,
                    const char* name) {
  if (!finite(s.value) || (need_derivs && (!finite(s.d_tau) || !finite(s.d_xi))))
    throw std::invalid_argument(std::string("incomplete point sample for ") +
                                name);
}

void require_flux(const FluxSample& s, bool need_div, const char* name) {
  if (!finite(s.v1) || !finite(s.v2) || (need_div && !finite(s.div)))
    throw std::invalid_argument(std::string("incomplete flux sample for ") +
                                name);
}

}  // namespace

ModelParams derive_params(double beta0, double beta1, double beta2, double c) {
  if (!(beta0 > 0.0))
    throw std::invalid_argument("derive_params: beta0 must be positive");
  if (!(c > 0.0))
    throw std::invalid_argument("derive_params: c must be positive");
  ModelParams p;
  p.beta0 = beta0;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.c = c;
  p.alpha = beta0 * beta2 - beta1 * beta1;
  if (p.alpha == 0.0)
    throw std::invalid_argument(
        "derive_params: alpha = beta0*beta2 - beta1^2 vanishes, the "
        "first-order system is degenerate");
  if (p.alpha > 0.0) {
    p.regime = Regime::Hyperbolic;
    p.a = 0.0;
  } else {
    p.regime = Regime::Elliptic;
    p.a = -p.alpha;
    // Positivity of A = [[a, -beta1], [-beta1, 1]] needs det = a - beta1^2 > 0.
    if (!(p.a - beta1 * beta1 > 0.0))
      throw std::invalid_argument(
          "derive_params: elliptic tensor is not positive definite "
          "(a - beta1^2 <= 0)");
  }
  return p;
}

FriedrichsDecomposition friedrichs_decomposition(const ModelParams& p) {
  if (p.regime != Regime::Hyperbolic)
    throw std::invalid_argument(
        "friedrichs_decomposition: requires the hyperbolic regime");
  const double root = std::sqrt(p.beta0 * p.beta2);
  FriedrichsDecomposition d;
  d.lambda1 = -p.beta1 - root;
  d.lambda2 = -p.beta1 + root;
  // Eigenvectors (-lambda_i, 1) normalized in the xi-flux inner product,
  // whose weight matrix is diag(1, alpha): |b_i|^2 = lambda_i^2 + alpha.
  const double n1 = std::sqrt(d.lambda1 * d.lambda1 + p.alpha);
  const double n2 = std::sqrt(d.lambda2 * d.lambda2 + p.alpha);
  d.b1 = Eigen::Vector2d(-d.lambda1, 1.0) / n1;
  d.b2 = Eigen::Vector2d(-d.lambda2, 1.0) / n2;
  d.c1 = Eigen::Vector2d(d.lambda1, 1.0);
  d.c2 = Eigen::Vector2d(d.lambda2, 1.0);
  return d;
}

std::pair<Complex, Complex> spectral_components(
    Complex u, Complex v, const FriedrichsDecomposition& d,
    const ModelParams& p) {
  const Complex s1 = u * d.b1(0) + p.alpha * v * d.b1(1);
  const Complex s2 = u * d.b2(0) + p.alpha * v * d.b2(1);
  return {s1, s2};
}

EllipticTensors elliptic_tensors(const ModelParams& p) {
  if (p.regime != Regime::Elliptic)
    throw std::invalid_argument("elliptic_tensors: requires the elliptic regime");
  EllipticTensors t;
  t.A << p.a, -p.beta1, -p.beta1, 1.0;
  const double det = p.a - p.beta1 * p.beta1;
  t.A_inv << 1.0 / det, p.beta1 / det, p.beta1 / det, p.a / det;
  return t;
}

ZeroOrderTerm ZeroOrderTerm::standard(const ModelParams& p) {
  return {Complex(0.0, 2.0 * p.beta0), Complex(0.0, 0.0)};
}

ZeroOrderTerm ZeroOrderTerm::rescaled(const ModelParams& p) {
  return {Complex(1.0, 2.0 * p.beta0), Complex(p.alpha, 0.0)};
}

Eigen::Vector2cd apply_forward_hyperbolic(const ModelParams& p,
                                          const ZeroOrderTerm& z,
                                          const PointSample& u,
                                          const PointSample& v, Complex f1,
                                          Complex f2) {
  require_sample(u, true, "u");
  require_sample(v, true, "v");
  Eigen::Vector2cd r;
  r(0) = u.d_xi - 2.0 * p.beta1 * u.d_tau - p.alpha * v.d_tau +
         z.z11 * u.value - f1;
  r(1) = p.alpha * v.d_xi - p.alpha * u.d_tau + z.z22 * v.value - f2;
  return r;
}

Eigen::Vector3cd apply_forward_elliptic(const ModelParams& p,
                                        const EllipticTensors& t,
                                        const PointSample& u,
                                        const FluxSample& sigma,
                                        const Eigen::Vector2cd& g, Complex f) {
  require_sample(u, true, "u");
  require_flux(sigma, true, "sigma");
  Eigen::Vector3cd r;
  const Eigen::Vector2cd grad(u.d_tau, u.d_xi);
  const Eigen::Vector2cd flux(sigma.v1, sigma.v2);
  const Eigen::Vector2cd r12 = p.c * flux - t.A.cast<Complex>() * grad - g;
  r(0) = r12(0);
  r(1) = r12(1);
  r(2) = sigma.div + Complex(0.0, 2.0 * p.beta0 / p.c) * u.d_xi - f / p.c;
  return r;
}

Eigen::Vector2cd apply_adjoint_hyperbolic(const ModelParams& p,
                                          const ZeroOrderTerm& z,
                                          const PointSample& du,
                                          const PointSample& dv,
                                          bool conjugate_zero_order) {
  require_sample(du, true, "du");
  require_sample(dv, true, "dv");
  const Complex z11 = conjugate_zero_order ? std::conj(z.z11) : z.z11;
  const Complex z22 = conjugate_zero_order ? std::conj(z.z22) : z.z22;
  Eigen::Vector2cd s;
  s(0) = -du.d_xi + 2.0 * p.beta1 * du.d_tau + z11 * du.value +
         p.alpha * dv.d_tau;
  s(1) = -p.alpha * dv.d_xi + p.alpha * du.d_tau + z22 * dv.value;
  return s;
}

Eigen::Vector3cd apply_adjoint_elliptic(const ModelParams& p,
                                        const EllipticTensors& t,
                                        const PointSample& v,
                                        const FluxSample& tau) {
  require_sample(v, true, "v");
  require_flux(tau, true, "tau");
  Eigen::Vector3cd s;
  s(0) = Complex(0.0, 2.0 * p.beta0 / p.c) * v.d_xi + tau.div;
  const Eigen::Vector2cd flux(tau.v1, tau.v2);
  const Eigen::Vector2cd s23 =
      -Eigen::Vector2cd(v.d_tau, v.d_xi) + p.c * t.A_inv.cast<Complex>() * flux;
  s(1) = s23(0);
  s(2) = s23(1);
  return s;
}

}  // namespace pulsedpg
