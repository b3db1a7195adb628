#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pulsedpg/assembly.hpp"
#include "pulsedpg/model.hpp"

namespace pulsedpg {

// Closed-form field sample with the first and second derivatives needed
// to manufacture sources for either regime.
struct ExactSample {
  Complex value{0, 0};
  Complex d_tau{0, 0};
  Complex d_xi{0, 0};
  Complex d_tautau{0, 0};
  Complex d_tauxi{0, 0};
  Complex d_xixi{0, 0};

  PointSample point() const { return {value, d_tau, d_xi}; }
};

struct ExactField {
  std::function<ExactSample(double, double)> eval;
  explicit operator bool() const { return static_cast<bool>(eval); }
};

// Single-hump pulse sech(a0 (tau - 1/2)) e^{i omega xi}; value 1 at
// (1/2, 0).
ExactField soliton_first(double omega, double a0);

// Breathing two-hump pulse
//   4 (cosh 3T + 3 cosh T e^{4 i xi}) e^{i omega xi / 2}
//   / (cosh 4T + 4 cosh 2T + 3 cos 4 omega xi),  T = tau - 1/2;
// value 2 at (1/2, 0).
ExactField soliton_second(double omega);

// Narrow Gaussian in tau plus a smooth imaginary carrier:
//   e^{-(tau - 1/2)^2 / (2 omega)} / sqrt(2 pi omega) + i sin xi.
ExactField gaussian_beam(double omega);

// Auxiliary second unknown cos tau + i sin xi paired with the hyperbolic
// system; independent of u because the second source absorbs the slack.
ExactField auxiliary_v();

// Polynomial sum coef(m, n) tau^m xi^n with analytic derivatives.
ExactField polynomial_field(const Eigen::MatrixXcd& coef);

// Pointwise conjugate of a field (derivatives conjugate along).
ExactField conjugate_field(const ExactField& f);

// Everything a solver run needs about one manufactured problem: the exact
// fields, the volume sources consistent with them, and the boundary data.
// Hyperbolic members: char_traces returns the characteristic pair (r, t)
// prescribed on inflow edges. Elliptic members: dirichlet is the scalar
// trace on the bottom and side boundaries, flux_top the normal flux on
// the top boundary, sigma_exact the rescaled flux for error measurement.
struct CaseData {
  Regime regime = Regime::Hyperbolic;
  std::string name;
  ExactField u;
  ExactField v;
  SourceSet sources;
  std::function<Eigen::Vector2cd(double, double)> char_traces;
  std::function<Complex(double, double)> dirichlet;
  std::function<Complex(double, double)> flux_top;
  std::function<Eigen::Vector2cd(double, double)> sigma_exact;
};

// Derives sources and boundary data from the exact fields. The elliptic
// flux source g is identically zero; the balance source carries the
// unscaled strong form, so the assembled load divides it by c. Hyperbolic
// cases require both u and v; elliptic cases ignore v.
CaseData build_case(Regime regime, const ExactField& u, const ExactField& v,
                    const ModelParams& params, const ZeroOrderTerm& zero);

// Relative L2 errors of the solved fields against the exact ones,
// integrated with the assembly quadrature. By default only the real
// parts enter, matching how the pulse envelope is reported; full_complex
// switches to plain complex magnitudes. A vanishing reference norm flips
// absolute_fallback and reports the absolute error instead.
struct ErrorReport {
  double rel = 0.0;
  double abs = 0.0;
  double ref = 0.0;
  bool absolute_fallback = false;
  std::vector<double> per_field_rel;
};

struct GlobalSystem;
struct Solution;

ErrorReport error_norms(const GlobalSystem& sys, const Solution& sol,
                        bool full_complex = false);

}  // namespace pulsedpg
