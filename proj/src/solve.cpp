#include "pulsedpg/solve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace pulsedpg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Interpolation nodes matching the edge shape family: Chebyshev-Lobatto
// nodes for the vertex-anchored family (endpoints included, so vertex
// coefficients equal endpoint values), Gauss nodes otherwise.
Eigen::VectorXd collocation_points(const Shape1D& s) {
  const int n = s.size();
  if (s.kind == BasisKind::Lobatto) {
    Eigen::VectorXd pts(n);
    for (int m = 0; m < n; ++m) pts[m] = -std::cos(kPi * m / (n - 1));
    return pts;
  }
  return gauss_rule(n).points;
}

Eigen::VectorXcd collocate(const Shape1D& s,
                           const std::function<Complex(double)>& f) {
  const Eigen::VectorXd pts = collocation_points(s);
  const Eigen::MatrixXcd V = shape_values(s, pts).cast<Complex>();
  Eigen::VectorXcd vals(pts.size());
  for (int m = 0; m < pts.size(); ++m) vals[m] = f(pts[m]);
  return Eigen::PartialPivLU<Eigen::MatrixXcd>(V).solve(vals);
}

// Maps the reference coordinate of an edge to the physical point on it.
struct EdgeGeometry {
  EdgeRef ref;
  bool vertical = false;

  std::pair<double, double> at(double x) const {
    const double s = ref.lo + 0.5 * (x + 1.0) * ref.length();
    if (vertical) return {ref.fixed, s};
    return {s, ref.fixed};
  }
};

}  // namespace

GlobalDofMap::GlobalDofMap(const TensorMesh& mesh, const ElementSpaces& spaces)
    : mesh_(mesh), spaces_(spaces), layout_(element_dofs(spaces)) {
  const int p = spaces.p;
  const int ne = mesh.n_elements();
  const int nve = mesh.n_vertical_edges();
  const int nhe = mesh.n_horizontal_edges();

  base_fields_ = 0;
  int off = ne * layout_.n_field;
  if (spaces.regime == Regime::Hyperbolic) {
    const int per_edge = layout_.n_trace_per_edge;
    base_vtrace_ = off;
    off += nve * per_edge;
    base_htrace_ = off;
    off += nhe * per_edge;
  } else {
    const int nbub = p;
    const int nflux = p + 1;
    base_vertex_ = off;
    off += mesh.n_vertices();
    base_vbub_ = off;
    off += nve * nbub;
    base_hbub_ = off;
    off += nhe * nbub;
    base_vflux_ = off;
    off += nve * nflux;
    base_hflux_ = off;
    off += nhe * nflux;
  }
  n_dofs_ = off;
  reduced_.assign(n_dofs_, 0);
  bc_values_ = Eigen::VectorXcd::Zero(n_dofs_);

  if (spaces.regime == Regime::Hyperbolic) {
    const int ntr = layout_.n_trace_a;
    // Bottom: both characteristics enter the domain.
    for (int i = 0; i < mesh.n_tau(); ++i) {
      const int e = mesh.horizontal_edge_id(0, i);
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < ntr; ++k)
          mark_constrained(base_htrace_ + e * 2 * ntr + c * ntr + k);
    }
    // Left carries the negative-speed characteristic r, right the
    // positive-speed one t; the top stays free (outflow).
    for (int j = 0; j < mesh.n_xi(); ++j) {
      const int el = mesh.vertical_edge_id(0, j);
      const int er = mesh.vertical_edge_id(mesh.n_tau(), j);
      for (int k = 0; k < ntr; ++k) {
        mark_constrained(base_vtrace_ + el * 2 * ntr + k);
        mark_constrained(base_vtrace_ + er * 2 * ntr + ntr + k);
      }
    }
  } else {
    // Scalar trace prescribed on bottom, left and right; flux on top.
    for (int li = 0; li <= mesh.n_tau(); ++li)
      mark_constrained(base_vertex_ + mesh.vertex_id(li, 0));
    for (int lj = 0; lj <= mesh.n_xi(); ++lj) {
      mark_constrained(base_vertex_ + mesh.vertex_id(0, lj));
      mark_constrained(base_vertex_ + mesh.vertex_id(mesh.n_tau(), lj));
    }
    for (int i = 0; i < mesh.n_tau(); ++i) {
      const int e = mesh.horizontal_edge_id(0, i);
      for (int m = 0; m < p; ++m) mark_constrained(base_hbub_ + e * p + m);
    }
    for (int j = 0; j < mesh.n_xi(); ++j) {
      for (const int line : {0, mesh.n_tau()}) {
        const int e = mesh.vertical_edge_id(line, j);
        for (int m = 0; m < p; ++m) mark_constrained(base_vbub_ + e * p + m);
      }
    }
    for (int i = 0; i < mesh.n_tau(); ++i) {
      const int e = mesh.horizontal_edge_id(mesh.n_xi(), i);
      for (int k = 0; k <= p; ++k)
        mark_constrained(base_hflux_ + e * (p + 1) + k);
    }
  }
  renumber();
}

void GlobalDofMap::renumber() {
  n_free_ = 0;
  for (int d = 0; d < n_dofs_; ++d)
    if (reduced_[d] >= 0) reduced_[d] = n_free_++;
}

void GlobalDofMap::set_boundary_values(const CaseData& cs) {
  if (cs.regime != spaces_.regime)
    throw std::invalid_argument("case regime does not match the spaces");
  const int p = spaces_.p;

  if (spaces_.regime == Regime::Hyperbolic) {
    if (!cs.char_traces)
      throw std::invalid_argument("hyperbolic case lacks characteristic data");
    const int ntr = layout_.n_trace_a;
    const Shape1D shape{p + 1, BasisKind::Legendre};
    auto fill = [&](int base, const EdgeGeometry& g, int comp) {
      const Eigen::VectorXcd coef = collocate(shape, [&](double x) {
        auto [tau, xi] = g.at(x);
        return cs.char_traces(tau, xi)[comp];
      });
      for (int k = 0; k < ntr; ++k) bc_values_[base + comp * ntr + k] = coef[k];
    };
    for (int i = 0; i < mesh_.n_tau(); ++i) {
      const int e = mesh_.horizontal_edge_id(0, i);
      const EdgeGeometry g{mesh_.horizontal_edge(e), false};
      fill(base_htrace_ + e * 2 * ntr, g, 0);
      fill(base_htrace_ + e * 2 * ntr, g, 1);
    }
    for (int j = 0; j < mesh_.n_xi(); ++j) {
      const int el = mesh_.vertical_edge_id(0, j);
      fill(base_vtrace_ + el * 2 * ntr, {mesh_.vertical_edge(el), true}, 0);
      const int er = mesh_.vertical_edge_id(mesh_.n_tau(), j);
      fill(base_vtrace_ + er * 2 * ntr, {mesh_.vertical_edge(er), true}, 1);
    }
    return;
  }

  if (!cs.dirichlet || !cs.flux_top)
    throw std::invalid_argument("elliptic case lacks boundary data");
  const Shape1D trace_shape{p + 1, BasisKind::Lobatto};
  const Shape1D flux_shape{p, BasisKind::Legendre};

  // Vertex values are exact endpoint samples; shared vertices get the
  // same value from either adjacent edge.
  for (int li = 0; li <= mesh_.n_tau(); ++li)
    bc_values_[base_vertex_ + mesh_.vertex_id(li, 0)] =
        cs.dirichlet(mesh_.tau_lines[li], mesh_.xi_lines[0]);
  for (int lj = 0; lj <= mesh_.n_xi(); ++lj) {
    bc_values_[base_vertex_ + mesh_.vertex_id(0, lj)] =
        cs.dirichlet(mesh_.tau_lines[0], mesh_.xi_lines[lj]);
    bc_values_[base_vertex_ + mesh_.vertex_id(mesh_.n_tau(), lj)] =
        cs.dirichlet(mesh_.tau_lines.back(), mesh_.xi_lines[lj]);
  }

  auto fill_trace = [&](int bub_base, const EdgeGeometry& g) {
    const Eigen::VectorXcd coef = collocate(trace_shape, [&](double x) {
      auto [tau, xi] = g.at(x);
      return cs.dirichlet(tau, xi);
    });
    for (int m = 0; m < p; ++m) bc_values_[bub_base + m] = coef[2 + m];
  };
  for (int i = 0; i < mesh_.n_tau(); ++i) {
    const int e = mesh_.horizontal_edge_id(0, i);
    fill_trace(base_hbub_ + e * p, {mesh_.horizontal_edge(e), false});
  }
  for (int j = 0; j < mesh_.n_xi(); ++j) {
    for (const int line : {0, mesh_.n_tau()}) {
      const int e = mesh_.vertical_edge_id(line, j);
      fill_trace(base_vbub_ + e * p, {mesh_.vertical_edge(e), true});
    }
  }

  for (int i = 0; i < mesh_.n_tau(); ++i) {
    const int e = mesh_.horizontal_edge_id(mesh_.n_xi(), i);
    const EdgeGeometry g{mesh_.horizontal_edge(e), false};
    const Eigen::VectorXcd coef = collocate(flux_shape, [&](double x) {
      auto [tau, xi] = g.at(x);
      return cs.flux_top(tau, xi);
    });
    for (int k = 0; k <= p; ++k)
      bc_values_[base_hflux_ + e * (p + 1) + k] = coef[k];
  }
}

std::vector<int> GlobalDofMap::element_global_dofs(int elem) const {
  const int p = spaces_.p;
  std::vector<int> g(layout_.n_total, -1);
  for (int k = 0; k < layout_.n_field; ++k)
    g[k] = base_fields_ + elem * layout_.n_field + k;

  const ElementRef el = mesh_.element(elem);
  struct Edge {
    bool vertical;
    int id;
    int v0;
    int v1;
  };
  // Local edge order bottom, right, top, left; endpoints by increasing
  // coordinate, matching the edge parametrization used at assembly.
  const Edge edges[4] = {
      {false, mesh_.horizontal_edge_id(el.j, el.i),
       mesh_.vertex_id(el.i, el.j), mesh_.vertex_id(el.i + 1, el.j)},
      {true, mesh_.vertical_edge_id(el.i + 1, el.j),
       mesh_.vertex_id(el.i + 1, el.j), mesh_.vertex_id(el.i + 1, el.j + 1)},
      {false, mesh_.horizontal_edge_id(el.j + 1, el.i),
       mesh_.vertex_id(el.i, el.j + 1), mesh_.vertex_id(el.i + 1, el.j + 1)},
      {true, mesh_.vertical_edge_id(el.i, el.j), mesh_.vertex_id(el.i, el.j),
       mesh_.vertex_id(el.i, el.j + 1)}};

  if (spaces_.regime == Regime::Hyperbolic) {
    const int ntr = layout_.n_trace_a;
    for (int ed = 0; ed < 4; ++ed) {
      const int base = (edges[ed].vertical ? base_vtrace_ : base_htrace_) +
                       edges[ed].id * 2 * ntr;
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < ntr; ++k)
          g[layout_.trace_index(ed, c, k)] = base + c * ntr + k;
    }
  } else {
    const int nbub = p;
    const int nflux = p + 1;
    for (int ed = 0; ed < 4; ++ed) {
      const Edge& e = edges[ed];
      const int bub = (e.vertical ? base_vbub_ : base_hbub_) + e.id * nbub;
      const int flx = (e.vertical ? base_vflux_ : base_hflux_) + e.id * nflux;
      g[layout_.trace_index(ed, 0, 0)] = base_vertex_ + e.v0;
      g[layout_.trace_index(ed, 0, 1)] = base_vertex_ + e.v1;
      for (int m = 0; m < nbub; ++m)
        g[layout_.trace_index(ed, 0, 2 + m)] = bub + m;
      for (int k = 0; k < nflux; ++k)
        g[layout_.trace_index(ed, 1, k)] = flx + k;
    }
  }
  return g;
}

int GlobalDofMap::field_dof(int elem, int comp, int k) const {
  return base_fields_ + elem * layout_.n_field +
         comp * layout_.n_field_per_comp + k;
}

namespace {

using ComplexLd = std::complex<long double>;
using MatrixXcld = Eigen::Matrix<ComplexLd, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXcld = Eigen::Matrix<ComplexLd, Eigen::Dynamic, 1>;

// Element-level elimination of the field block, carried out in extended
// precision: K = [B Bhat]^H G^{-1} [B Bhat] is formed and its field rows
// condensed into the edge Schur complement S = K_tt - K_tf K_ff^{-1} K_ft.
// Outputs are rounded to double only at the end.
struct SchurElement {
  MatrixXcld S;         // edge x edge, kept in extended precision
  VectorXcld g;         // edge rhs
  Eigen::MatrixXcd R;   // K_ff^{-1} K_ft, for field recovery
  Eigen::VectorXcd w;   // K_ff^{-1} f_f
};

SchurElement condense_to_edges(const Eigen::MatrixXcd& G,
                               const ElementOperators& ops, int n_field,
                               bool equilibrate) {
  const int n_test = static_cast<int>(ops.B.rows());
  const int ntot = static_cast<int>(ops.B.cols() + ops.Bhat.cols());
  MatrixXcld N(n_test, ntot);
  N.leftCols(ops.B.cols()) = ops.B.cast<ComplexLd>();
  N.rightCols(ops.Bhat.cols()) = ops.Bhat.cast<ComplexLd>();
  MatrixXcld Gl = G.cast<ComplexLd>();
  VectorXcld l = ops.l.cast<ComplexLd>();

  Eigen::Matrix<long double, Eigen::Dynamic, 1> scale =
      Eigen::Matrix<long double, Eigen::Dynamic, 1>::Ones(n_test);
  if (equilibrate) {
    for (int i = 0; i < n_test; ++i) {
      const long double dgl = Gl(i, i).real();
      if (std::isfinite(static_cast<double>(dgl)) && dgl > 0.0L)
        scale(i) = 1.0L / std::sqrt(dgl);
    }
    Gl = scale.asDiagonal() * Gl * scale.asDiagonal();
    N = scale.asDiagonal() * N;
    l = scale.asDiagonal() * l;
  }

  Eigen::LLT<MatrixXcld> llt(Gl);
  MatrixXcld Psi;
  if (llt.info() == Eigen::Success) {
    Psi = llt.solve(N);
  } else {
    Psi = MatrixXcld(Eigen::LDLT<MatrixXcld>(Gl).solve(N));
  }

  MatrixXcld K = N.adjoint() * Psi;
  K = (0.5L * (K + K.adjoint())).eval();
  const VectorXcld f = Psi.adjoint() * l;

  const int nt = ntot - n_field;
  const MatrixXcld K_ff = K.topLeftCorner(n_field, n_field);
  const MatrixXcld K_ft = K.topRightCorner(n_field, nt);
  const Eigen::LDLT<MatrixXcld> ff(K_ff);
  const MatrixXcld R = ff.solve(K_ft);
  const VectorXcld w = ff.solve(f.head(n_field));

  MatrixXcld S = K.bottomRightCorner(nt, nt) - K_ft.adjoint() * R;
  S = (0.5L * (S + S.adjoint())).eval();
  const VectorXcld g = f.tail(nt) - K_ft.adjoint() * w;

  SchurElement out;
  out.S = std::move(S);
  out.g = std::move(g);
  out.R = R.cast<Complex>();
  out.w = w.cast<Complex>();
  return out;
}

}  // namespace

GlobalSystem build_global(const TensorMesh& mesh, const ModelParams& params,
                          const ElementSpaces& spaces, const CaseData& cs,
                          const BuildOptions& opt) {
  GlobalDofMap map(mesh, spaces);
  map.set_boundary_values(cs);
  const Eigen::VectorXcd& bc = map.boundary_values();
  const int ne = mesh.n_elements();
  const int ntot = map.layout().n_total;
  const bool condensed = opt.condense_fields && !opt.full_matrix;

  std::vector<int> order(ne);
  if (opt.element_order) {
    if (static_cast<int>(opt.element_order->size()) != ne)
      throw std::invalid_argument("element order has the wrong length");
    order = *opt.element_order;
    std::vector<char> seen(ne, 0);
    for (int e : order) {
      if (e < 0 || e >= ne || seen[e])
        throw std::invalid_argument("element order is not a permutation");
      seen[e] = 1;
    }
  } else {
    std::iota(order.begin(), order.end(), 0);
  }

  const int nf = map.layout().n_field;
  const int n_loc = condensed ? ntot - nf : ntot;
  const int loc0 = condensed ? nf : 0;
  const int nfree_fields = condensed ? map.n_field_global() : 0;
  const int n_rows = map.n_free() - nfree_fields;

  std::vector<Eigen::Triplet<Complex>> trips;
  std::vector<Eigen::Triplet<ComplexLd>> trips_ld;
  const std::size_t per_elem =
      opt.full_matrix
          ? static_cast<std::size_t>(n_loc) * n_loc
          : static_cast<std::size_t>(n_loc) * (n_loc + 1) / 2;
  trips.reserve(per_elem * static_cast<std::size_t>(ne));
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n_rows);
  VectorXcld rhs_ld;

  GlobalSystem sys;
  if (condensed) {
    sys.recover_R.resize(ne);
    sys.recover_w.resize(ne);
    trips_ld.reserve(per_elem * static_cast<std::size_t>(ne));
    rhs_ld = VectorXcld::Zero(n_rows);
  }

  const auto to_double = [](ComplexLd z) {
    return Complex(static_cast<double>(z.real()),
                   static_cast<double>(z.imag()));
  };

  for (const int e : order) {
    const ElementRef el = mesh.element(e);
    const Eigen::MatrixXcd G = element_gram(el, params, spaces);
    const ElementOperators ops = element_stiffness(el, params, spaces, cs.sources);

    const std::vector<int> l2g = map.element_global_dofs(e);
    if (condensed) {
      SchurElement se = condense_to_edges(G, ops, nf, spaces.gram_equilibrate);
      sys.recover_R[e] = std::move(se.R);
      sys.recover_w[e] = std::move(se.w);
      for (int a = 0; a < n_loc; ++a) {
        const int ra = map.reduced_index(l2g[loc0 + a]) - nfree_fields;
        if (ra < 0) continue;
        rhs_ld[ra] += se.g(a);
        for (int b = 0; b < n_loc; ++b) {
          const int gb = l2g[loc0 + b];
          const int rb = map.reduced_index(gb) - nfree_fields;
          if (map.constrained(gb)) {
            rhs_ld[ra] -= se.S(a, b) * ComplexLd(bc[gb]);
          } else if (ra >= rb) {
            trips.emplace_back(ra, rb, to_double(se.S(a, b)));
            trips_ld.emplace_back(ra, rb, se.S(a, b));
          }
        }
      }
    } else {
      CondensedElement ce = condense(G, ops, e, spaces.gram_equilibrate);
      for (int a = 0; a < n_loc; ++a) {
        const int ra = map.reduced_index(l2g[loc0 + a]) - nfree_fields;
        if (ra < 0) continue;
        rhs[ra] += ce.f(a);
        for (int b = 0; b < n_loc; ++b) {
          const int gb = l2g[loc0 + b];
          const int rb = map.reduced_index(gb) - nfree_fields;
          if (map.constrained(gb)) {
            rhs[ra] -= ce.K(a, b) * bc[gb];
          } else if (opt.full_matrix || ra >= rb) {
            trips.emplace_back(ra, rb, ce.K(a, b));
          }
        }
      }
    }
  }

  sys.mesh = mesh;
  sys.params = params;
  sys.spaces = spaces;
  sys.problem = cs;
  sys.map = std::move(map);
  sys.K.resize(n_rows, n_rows);
  sys.K.setFromTriplets(trips.begin(), trips.end());
  sys.K.makeCompressed();
  if (condensed) {
    sys.K_refine.resize(n_rows, n_rows);
    sys.K_refine.setFromTriplets(trips_ld.begin(), trips_ld.end());
    sys.K_refine.makeCompressed();
    sys.rhs_refine = std::move(rhs_ld);
    for (Eigen::Index i = 0; i < n_rows; ++i)
      rhs[i] = to_double(sys.rhs_refine[i]);
  }
  sys.rhs = std::move(rhs);
  sys.full_matrix = opt.full_matrix;
  sys.fields_condensed = condensed;
  return sys;
}

Solution solve_system(const GlobalSystem& sys) {
  const Eigen::Index n = sys.rhs.size();
  Solution sol;
  sol.n_free = sys.map.n_free();
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);

  const double rhs_norm = sys.rhs.norm();
  auto residual = [&](const Eigen::VectorXcd& y) {
    if (rhs_norm == 0.0) return 0.0;
    const Eigen::VectorXcd r =
        sys.K.selfadjointView<Eigen::Lower>() * y - sys.rhs;
    return r.norm() / rhs_norm;
  };

  // Field, trace, and flux columns carry very different natural scales
  // (the zero-order block alone contributes a factor (2 beta0)^2), so the
  // raw matrix can reach condition numbers that eat most of double
  // precision. Symmetric Jacobi scaling is exact and removes the purely
  // diagonal part of that spread before factorization.
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  if (n > 0) {
    const Eigen::VectorXcd diag = sys.K.diagonal();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = std::abs(diag[i]);
      if (std::isfinite(m) && m > 0.0) d[i] = 1.0 / std::sqrt(m);
    }
  }
  const Eigen::SparseMatrix<Complex> Ks =
      d.asDiagonal() * sys.K * d.asDiagonal();
  const Eigen::VectorXcd rhs_s = d.asDiagonal() * sys.rhs;

  bool ok = false;
  if (n > 0) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Complex>, Eigen::Lower> ldlt;
    ldlt.compute(Ks);
    if (ldlt.info() == Eigen::Success) {
      x = d.asDiagonal() * ldlt.solve(rhs_s);
      ok = x.allFinite();
      // The factorization loses digits to the condition number. A few
      // refinement sweeps against the extended-precision copy of the
      // system recover them as long as the factor is usable at all.
      if (ok && sys.K_refine.nonZeros() > 0 && sys.rhs_refine.size() == n) {
        const long double bnorm = sys.rhs_refine.norm();
        Eigen::VectorXcd best = x;
        long double best_res = -1.0L;
        for (int sweep = 0; sweep < 4; ++sweep) {
          const VectorXcld r =
              sys.rhs_refine -
              sys.K_refine.selfadjointView<Eigen::Lower>() * x.cast<ComplexLd>();
          const long double rn = r.norm();
          if (best_res < 0.0L || rn < best_res) {
            best_res = rn;
            best = x;
          }
          if (bnorm > 0.0L && rn <= 1e-24L * bnorm) break;
          Eigen::VectorXcd rd(n);
          for (Eigen::Index i = 0; i < n; ++i)
            rd[i] = Complex(static_cast<double>(r[i].real()),
                            static_cast<double>(r[i].imag()));
          const Eigen::VectorXcd delta =
              d.asDiagonal() * ldlt.solve(d.asDiagonal() * rd);
          if (!delta.allFinite()) break;
          x += delta;
        }
        const VectorXcld r_final =
            sys.rhs_refine -
            sys.K_refine.selfadjointView<Eigen::Lower>() * x.cast<ComplexLd>();
        if (best_res >= 0.0L && r_final.norm() > best_res) x = best;
      }
    }
  } else {
    ok = true;
  }

  if (!ok) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<Complex>, Eigen::Lower> cg;
    cg.setTolerance(1e-10);
    cg.setMaxIterations(20 * n + 100);
    cg.compute(Ks);
    const Eigen::VectorXcd y = cg.solve(rhs_s);
    x = d.asDiagonal() * y;
    sol.used_fallback = true;
    sol.iterations = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success || !x.allFinite())
      throw SolverFailure("linear solve failed in both the direct and the "
                          "iterative path",
                          x.allFinite() ? residual(x)
                                        : std::numeric_limits<double>::quiet_NaN());
  }

  sol.dofs.resize(sys.map.n_dofs());
  if (!sys.fields_condensed) {
    for (int d = 0; d < sys.map.n_dofs(); ++d) {
      const int r = sys.map.reduced_index(d);
      sol.dofs[d] = r < 0 ? sys.map.boundary_values()[d] : x[r];
    }
    return sol;
  }

  // Edge unknowns come from the reduced solve, fields from the stored
  // per-element recovery factors.
  const int nff = sys.map.n_field_global();
  for (int d = 0; d < sys.map.n_dofs(); ++d) {
    const int r = sys.map.reduced_index(d);
    if (r < 0)
      sol.dofs[d] = sys.map.boundary_values()[d];
    else if (r >= nff)
      sol.dofs[d] = x[r - nff];
  }
  const int nf = sys.map.layout().n_field;
  const int ntot = sys.map.layout().n_total;
  for (int e = 0; e < sys.mesh.n_elements(); ++e) {
    const std::vector<int> l2g = sys.map.element_global_dofs(e);
    Eigen::VectorXcd uhat(ntot - nf);
    for (int k = nf; k < ntot; ++k) uhat[k - nf] = sol.dofs[l2g[k]];
    const Eigen::VectorXcd uf = sys.recover_w[e] - sys.recover_R[e] * uhat;
    for (int k = 0; k < nf; ++k) sol.dofs[l2g[k]] = uf[k];
  }
  return sol;
}

ElementResiduals recover_residual(const GlobalSystem& sys, const Solution& sol) {
  const int ne = sys.mesh.n_elements();
  const DofLayout& lay = sys.map.layout();
  ElementResiduals out;
  out.eta.resize(ne);
  out.psi.resize(ne);
  double total2 = 0.0;
  for (int e = 0; e < ne; ++e) {
    const ElementRef el = sys.mesh.element(e);
    const Eigen::MatrixXcd G = element_gram(el, sys.params, sys.spaces);
    const ElementOperators ops =
        element_stiffness(el, sys.params, sys.spaces, sys.problem.sources);
    const std::vector<int> l2g = sys.map.element_global_dofs(e);
    Eigen::VectorXcd uf(lay.n_field), uh(lay.n_trace);
    for (int k = 0; k < lay.n_field; ++k) uf[k] = sol.dofs[l2g[k]];
    for (int k = 0; k < lay.n_trace; ++k)
      uh[k] = sol.dofs[l2g[lay.n_field + k]];
    const Eigen::VectorXcd r = ops.l - ops.B * uf - ops.Bhat * uh;
    const GramSolver gram(G, e, sys.spaces.gram_equilibrate);
    out.psi[e] = gram.solve(r);
    const double eta2 = std::max(0.0, std::real(r.dot(out.psi[e])));
    out.eta[e] = std::sqrt(eta2);
    total2 += eta2;
  }
  out.total = std::sqrt(total2);
  return out;
}

double condition_estimate(const GlobalSystem& sys, int steps) {
  const Eigen::Index n = sys.rhs.size();
  if (n == 0) return 1.0;
  steps = std::min<Eigen::Index>(steps, n);

  Eigen::MatrixXcd V(n, steps);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(steps);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(steps);

  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = Complex(1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3),
                   0.25 * std::cos(1.3 * static_cast<double>(i)));
  v /= v.norm();

  int used = 0;
  for (int k = 0; k < steps; ++k) {
    V.col(k) = v;
    used = k + 1;
    Eigen::VectorXcd w = sys.K.selfadjointView<Eigen::Lower>() * v;
    alpha[k] = std::real(v.dot(w));
    w -= alpha[k] * v;
    if (k > 0) w -= beta[k - 1] * V.col(k - 1);
    // Full reorthogonalization keeps the Ritz values clean even when the
    // spectrum spans many orders of magnitude.
    for (int pass = 0; pass < 2; ++pass)
      w -= V.leftCols(used) * (V.leftCols(used).adjoint() * w).eval();
    const double b = w.norm();
    if (k + 1 < steps) beta[k] = b;
    if (b < 1e-12 * std::max(1.0, std::abs(alpha[0]))) break;
    v = w / b;
  }

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(used, used);
  for (int i = 0; i < used; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < used) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  const double lmax = es.eigenvalues().maxCoeff();
  double lmin = es.eigenvalues().minCoeff();
  if (!(lmax > 0.0)) return std::numeric_limits<double>::infinity();
  if (lmin <= 0.0) lmin = lmax * 1e-18;
  return lmax / lmin;
}

void dump_matrix(const GlobalSystem& sys, std::ostream& os) {
  os << "row,col,re,im\n";
  char buf[160];
  for (int k = 0; k < sys.K.outerSize(); ++k) {
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(sys.K, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g,%.17g\n",
                    static_cast<long>(it.row()), static_cast<long>(it.col()),
                    it.value().real(), it.value().imag());
      os << buf;
    }
  }
}

Complex evaluate_field(const GlobalSystem& sys, const Solution& sol, int comp,
                       double tau, double xi) {
  const DofLayout& lay = sys.map.layout();
  if (comp < 0 || comp >= lay.n_field_comp)
    throw std::invalid_argument("field component out of range");
  const int e = sys.mesh.locate(tau, xi);
  const ElementRef el = sys.mesh.element(e);
  const double x = 2.0 * (tau - el.tau0) / el.h_tau() - 1.0;
  const double y = 2.0 * (xi - el.xi0) / el.h_xi() - 1.0;
  const Shape1D s{sys.spaces.p, BasisKind::Legendre};
  Eigen::VectorXd px(s.size()), dx(s.size()), py(s.size()), dy(s.size());
  shape_eval(s, x, px, dx);
  shape_eval(s, y, py, dy);
  Complex acc(0, 0);
  for (int j = 0; j < s.size(); ++j)
    for (int i = 0; i < s.size(); ++i)
      acc += sol.dofs[sys.map.field_dof(e, comp, j * s.size() + i)] *
             (px[i] * py[j]);
  return acc;
}

ErrorReport error_norms(const GlobalSystem& sys, const Solution& sol,
                        bool full_complex) {
  const DofLayout& lay = sys.map.layout();
  const int ncomp = lay.n_field_comp;
  const int np = sys.spaces.p + 1;
  const QuadratureRule quad = assembly_quadrature(sys.spaces);
  const int nq = quad.size();
  const Shape1D s{sys.spaces.p, BasisKind::Legendre};
  const Eigen::MatrixXd P = shape_values(s, quad.points);

  const bool hyper = sys.spaces.regime == Regime::Hyperbolic;
  if (!sys.problem.u || (hyper && !sys.problem.v) ||
      (!hyper && !sys.problem.sigma_exact))
    throw std::invalid_argument("error norms require the exact fields");

  std::vector<double> num(ncomp, 0.0), den(ncomp, 0.0);
  for (int e = 0; e < sys.mesh.n_elements(); ++e) {
    const ElementRef el = sys.mesh.element(e);
    const double jac = el.area() / 4.0;
    std::vector<Eigen::MatrixXcd> uh(ncomp);
    for (int c = 0; c < ncomp; ++c) {
      Eigen::MatrixXcd coef(np, np);  // (i, j) = tau index, xi index
      for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
          coef(i, j) = sol.dofs[sys.map.field_dof(e, c, j * np + i)];
      uh[c] = P.cast<Complex>() * coef * P.transpose().cast<Complex>();
    }
    for (int qy = 0; qy < nq; ++qy) {
      const double xi = el.xi0 + 0.5 * (quad.points[qy] + 1.0) * el.h_xi();
      for (int qx = 0; qx < nq; ++qx) {
        const double tau = el.tau0 + 0.5 * (quad.points[qx] + 1.0) * el.h_tau();
        const double w = jac * quad.weights[qx] * quad.weights[qy];
        Eigen::VectorXcd ex(ncomp);
        ex[0] = sys.problem.u.eval(tau, xi).value;
        if (hyper) {
          ex[1] = sys.problem.v.eval(tau, xi).value;
        } else {
          const Eigen::Vector2cd sg = sys.problem.sigma_exact(tau, xi);
          ex[1] = sg[0];
          ex[2] = sg[1];
        }
        for (int c = 0; c < ncomp; ++c) {
          const Complex dh = uh[c](qx, qy);
          if (full_complex) {
            num[c] += w * std::norm(dh - ex[c]);
            den[c] += w * std::norm(ex[c]);
          } else {
            const double d = dh.real() - ex[c].real();
            num[c] += w * d * d;
            den[c] += w * ex[c].real() * ex[c].real();
          }
        }
      }
    }
  }

  ErrorReport rep;
  double num_all = 0.0, den_all = 0.0;
  for (int c = 0; c < ncomp; ++c) {
    num_all += num[c];
    den_all += den[c];
    rep.per_field_rel.push_back(
        den[c] > 0.0 ? std::sqrt(num[c] / den[c]) : std::sqrt(num[c]));
  }
  rep.abs = std::sqrt(num_all);
  rep.ref = std::sqrt(den_all);
  if (rep.ref > 0.0) {
    rep.rel = rep.abs / rep.ref;
  } else {
    rep.rel = rep.abs;
    rep.absolute_fallback = true;
  }
  return rep;
}

}  // namespace pulsedpg
