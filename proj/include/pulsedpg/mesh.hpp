#pragma once

#include <vector>

#include <json.hpp>

namespace pulsedpg {

// Axis-aligned element of a tensor mesh. (i, j) are the strip indices
// along tau and xi, id = j * n_tau + i.
struct ElementRef {
  int id = -1;
  int i = -1;
  int j = -1;
  double tau0 = 0, tau1 = 0, xi0 = 0, xi1 = 0;

  double h_tau() const { return tau1 - tau0; }
  double h_xi() const { return xi1 - xi0; }
  double area() const { return h_tau() * h_xi(); }
};

enum class EdgeOrientation { Horizontal, Vertical };

// Mesh edge. Vertical edges sit on a tau line and span one xi strip,
// horizontal edges sit on a xi line and span one tau strip. Edges are
// parametrized by the increasing coordinate, so the two elements sharing
// an interior edge always see the same orientation.
struct EdgeRef {
  int id = -1;  // within its orientation class
  EdgeOrientation orientation = EdgeOrientation::Horizontal;
  int line = -1;   // index of the mesh line the edge lies on
  int strip = -1;  // index of the strip the edge spans
  double fixed = 0;             // coordinate of the line
  double lo = 0, hi = 0;        // span along the edge
  double length() const { return hi - lo; }
};

// Tensor-product mesh of the space-time rectangle [0, T] x [0, Z],
// defined by strictly increasing tau and xi lines.
struct TensorMesh {
  std::vector<double> tau_lines;
  std::vector<double> xi_lines;

  int n_tau() const { return static_cast<int>(tau_lines.size()) - 1; }
  int n_xi() const { return static_cast<int>(xi_lines.size()) - 1; }
  int n_elements() const { return n_tau() * n_xi(); }
  double extent_tau() const { return tau_lines.back() - tau_lines.front(); }
  double extent_xi() const { return xi_lines.back() - xi_lines.front(); }

  int element_id(int i, int j) const { return j * n_tau() + i; }
  ElementRef element(int id) const;

  int n_vertices() const { return (n_tau() + 1) * (n_xi() + 1); }
  int vertex_id(int li, int lj) const { return lj * (n_tau() + 1) + li; }

  // Edge ids: vertical edges number line-major over xi strips, horizontal
  // edges line-major over tau strips. Adjacent elements share ids:
  // element (i, j) has left/right vertical edges on lines i and i+1 and
  // bottom/top horizontal edges on lines j and j+1.
  int n_vertical_edges() const { return (n_tau() + 1) * n_xi(); }
  int n_horizontal_edges() const { return (n_xi() + 1) * n_tau(); }
  int vertical_edge_id(int line, int j) const { return line * n_xi() + j; }
  int horizontal_edge_id(int line, int i) const { return line * n_tau() + i; }
  EdgeRef vertical_edge(int id) const;
  EdgeRef horizontal_edge(int id) const;

  // Locates the element containing (tau, xi); points on interior lines
  // resolve to the element above/right, points outside clamp to the
  // nearest strip.
  int locate(double tau, double xi) const;
};

// Uniform n_tau x n_xi mesh of [0, T] x [0, Z].
// Throws std::invalid_argument for n < 1 or nonpositive extents.
TensorMesh uniform_mesh(int n_tau, int n_xi, double T, double Z);

// Bisects every strip in both directions.
TensorMesh refine_uniform(const TensorMesh& m);

// Bisects the listed tau and xi strips (indices into the current strips;
// duplicates are ignored). The result is again a tensor mesh, so element
// faces stay conforming by construction.
TensorMesh refine_lines(const TensorMesh& m, const std::vector<int>& tau_strips,
                        const std::vector<int>& xi_strips);

nlohmann::json mesh_to_json(const TensorMesh& m);
TensorMesh mesh_from_json(const nlohmann::json& j);

}  // namespace pulsedpg
