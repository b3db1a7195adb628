#include "pulsedpg/manufactured.hpp"

#include <cmath>
#include <stdexcept>

namespace pulsedpg {

namespace {
const Complex I(0.0, 1.0);
}

ExactField soliton_first(double omega, double a0) {
  return ExactField{[omega, a0](double tau, double xi) {
    const double th = tau - 0.5;
    const double s = 1.0 / std::cosh(a0 * th);
    const double t = std::tanh(a0 * th);
    const double s1 = -a0 * s * t;
    const double s2 = a0 * a0 * s * (t * t - s * s);
    const Complex E = std::exp(I * omega * xi);
    ExactSample out;
    out.value = s * E;
    out.d_tau = s1 * E;
    out.d_xi = I * omega * s * E;
    out.d_tautau = s2 * E;
    out.d_tauxi = I * omega * s1 * E;
    out.d_xixi = -omega * omega * s * E;
    return out;
  }};
}

ExactField soliton_second(double omega) {
  return ExactField{[omega](double tau, double xi) {
    const double th = tau - 0.5;
    // Numerator N = S(xi) (P(tau) + Q(tau) R(xi)) and denominator D.
    const Complex S = 4.0 * std::exp(I * (0.5 * omega) * xi);
    const Complex S1 = I * (0.5 * omega) * S;
    const Complex S2 = -0.25 * omega * omega * S;
    const double P = std::cosh(3.0 * th), P1 = 3.0 * std::sinh(3.0 * th);
    const double P2 = 9.0 * P;
    const double Q = 3.0 * std::cosh(th), Q1 = 3.0 * std::sinh(th);
    const double Q2 = Q;
    const Complex R = std::exp(4.0 * I * xi);
    const Complex R1 = 4.0 * I * R;
    const Complex R2 = -16.0 * R;
    const Complex N = S * (P + Q * R);
    const Complex N_t = S * (P1 + Q1 * R);
    const Complex N_tt = S * (P2 + Q2 * R);
    const Complex N_x = S1 * (P + Q * R) + S * Q * R1;
    const Complex N_xx = S2 * (P + Q * R) + 2.0 * S1 * Q * R1 + S * Q * R2;
    const Complex N_tx = S1 * (P1 + Q1 * R) + S * Q1 * R1;
    const double D = std::cosh(4.0 * th) + 4.0 * std::cosh(2.0 * th) +
                     3.0 * std::cos(4.0 * omega * xi);
    const double D_t = 4.0 * std::sinh(4.0 * th) + 8.0 * std::sinh(2.0 * th);
    const double D_tt = 16.0 * std::cosh(4.0 * th) + 16.0 * std::cosh(2.0 * th);
    const double D_x = -12.0 * omega * std::sin(4.0 * omega * xi);
    const double D_xx = -48.0 * omega * omega * std::cos(4.0 * omega * xi);
    ExactSample out;
    out.value = N / D;
    out.d_tau = (N_t - out.value * D_t) / D;
    out.d_xi = (N_x - out.value * D_x) / D;
    out.d_tautau =
        (N_tt - 2.0 * out.d_tau * D_t - out.value * D_tt) / D;
    out.d_xixi = (N_xx - 2.0 * out.d_xi * D_x - out.value * D_xx) / D;
    out.d_tauxi =
        (N_tx - out.d_tau * D_x - out.d_xi * D_t - out.value * 0.0) / D;
    return out;
  }};
}

ExactField gaussian_beam(double omega) {
  return ExactField{[omega](double tau, double xi) {
    const double th = tau - 0.5;
    const double amp = 1.0 / std::sqrt(2.0 * M_PI * omega);
    const double g = amp * std::exp(-th * th / (2.0 * omega));
    const double g1 = -(th / omega) * g;
    const double g2 = (th * th / (omega * omega) - 1.0 / omega) * g;
    ExactSample out;
    out.value = g + I * std::sin(xi);
    out.d_tau = g1;
    out.d_xi = I * std::cos(xi);
    out.d_tautau = g2;
    out.d_tauxi = 0.0;
    out.d_xixi = -I * std::sin(xi);
    return out;
  }};
}

ExactField auxiliary_v() {
  return ExactField{[](double tau, double xi) {
    ExactSample out;
    out.value = std::cos(tau) + I * std::sin(xi);
    out.d_tau = -std::sin(tau);
    out.d_xi = I * std::cos(xi);
    out.d_tautau = -std::cos(tau);
    out.d_tauxi = 0.0;
    out.d_xixi = -I * std::sin(xi);
    return out;
  }};
}

ExactField polynomial_field(const Eigen::MatrixXcd& coef) {
  return ExactField{[coef](double tau, double xi) {
    ExactSample out;
    for (int m = 0; m < coef.rows(); ++m) {
      for (int n = 0; n < coef.cols(); ++n) {
        const Complex c = coef(m, n);
        if (c == Complex(0, 0)) continue;
        const double dm = m, dn = n;
        const double tm = std::pow(tau, m), xn = std::pow(xi, n);
        out.value += c * (tm * xn);
        if (m >= 1) out.d_tau += c * (dm * std::pow(tau, m - 1) * xn);
        if (n >= 1) out.d_xi += c * (dn * tm * std::pow(xi, n - 1));
        if (m >= 2)
          out.d_tautau += c * (dm * (dm - 1) * std::pow(tau, m - 2) * xn);
        if (n >= 2)
          out.d_xixi += c * (dn * (dn - 1) * tm * std::pow(xi, n - 2));
        if (m >= 1 && n >= 1)
          out.d_tauxi +=
              c * (dm * dn * std::pow(tau, m - 1) * std::pow(xi, n - 1));
      }
    }
    return out;
  }};
}

ExactField conjugate_field(const ExactField& f) {
  auto eval = f.eval;
  return ExactField{[eval](double tau, double xi) {
    ExactSample s = eval(tau, xi);
    s.value = std::conj(s.value);
    s.d_tau = std::conj(s.d_tau);
    s.d_xi = std::conj(s.d_xi);
    s.d_tautau = std::conj(s.d_tautau);
    s.d_tauxi = std::conj(s.d_tauxi);
    s.d_xixi = std::conj(s.d_xixi);
    return s;
  }};
}

CaseData build_case(Regime regime, const ExactField& u, const ExactField& v,
                    const ModelParams& params, const ZeroOrderTerm& zero) {
  if (!u) throw std::invalid_argument("build_case: missing exact u");
  CaseData cs;
  cs.regime = regime;
  cs.u = u;
  auto ueval = u.eval;

  if (regime == Regime::Hyperbolic) {
    if (!v) throw std::invalid_argument("build_case: hyperbolic needs exact v");
    cs.v = v;
    auto veval = v.eval;
    const double beta1 = params.beta1;
    const double alpha = params.alpha;
    const Complex z11 = zero.z11, z22 = zero.z22;
    cs.sources.f1 = [=](double tau, double xi) {
      const ExactSample su = ueval(tau, xi), sv = veval(tau, xi);
      return su.d_xi - 2.0 * beta1 * su.d_tau - alpha * sv.d_tau +
             z11 * su.value;
    };
    cs.sources.f2 = [=](double tau, double xi) {
      const ExactSample su = ueval(tau, xi), sv = veval(tau, xi);
      return alpha * (sv.d_xi - su.d_tau) + z22 * sv.value;
    };
    const FriedrichsDecomposition dec = friedrichs_decomposition(params);
    const double l1 = dec.lambda1, l2 = dec.lambda2;
    // On every edge u = t - r and alpha v = lambda2 t - lambda1 r; the
    // pair below inverts that map, so r and t are the outgoing and
    // incoming characteristic content of the exact state.
    cs.char_traces = [=](double tau, double xi) {
      const Complex uu = ueval(tau, xi).value;
      const Complex av = alpha * veval(tau, xi).value;
      const double den = l2 - l1;
      return Eigen::Vector2cd((av - l2 * uu) / den, (av - l1 * uu) / den);
    };
    return cs;
  }

  const EllipticTensors t = elliptic_tensors(params);
  const double a = params.a, beta1 = params.beta1, beta0 = params.beta0;
  const double c = params.c;
  cs.sources.g = [](double, double) { return Eigen::Vector2cd::Zero().eval(); };
  cs.sources.f = [=](double tau, double xi) {
    const ExactSample s = ueval(tau, xi);
    return a * s.d_tautau - 2.0 * beta1 * s.d_tauxi + s.d_xixi +
           I * (2.0 * beta0) * s.d_xi;
  };
  cs.sigma_exact = [=](double tau, double xi) {
    const ExactSample s = ueval(tau, xi);
    return Eigen::Vector2cd((a * s.d_tau - beta1 * s.d_xi) / c,
                            (-beta1 * s.d_tau + s.d_xi) / c);
  };
  cs.dirichlet = [=](double tau, double xi) { return ueval(tau, xi).value; };
  cs.flux_top = [=](double tau, double xi) {
    const ExactSample s = ueval(tau, xi);
    return (-beta1 * s.d_tau + s.d_xi) / c;
  };
  (void)t;
  return cs;
}

}  // namespace pulsedpg
