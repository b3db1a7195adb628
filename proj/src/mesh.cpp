#include "pulsedpg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pulsedpg {

namespace {

void check_lines(const std::vector<double>& lines, const char* what) {
  if (lines.size() < 2)
    throw std::invalid_argument(std::string("mesh: need at least two ") + what +
                                " lines");
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (!std::isfinite(lines[k]))
      throw std::invalid_argument(std::string("mesh: non-finite ") + what +
                                  " line");
    if (k > 0 && !(lines[k] > lines[k - 1]))
      throw std::invalid_argument(std::string("mesh: ") + what +
                                  " lines must be strictly increasing");
  }
}

std::vector<double> bisect(const std::vector<double>& lines,
                           const std::vector<int>& strips) {
  std::set<int> marked(strips.begin(), strips.end());
  const int n = static_cast<int>(lines.size()) - 1;
  for (int s : marked)
    if (s < 0 || s >= n)
      throw std::invalid_argument("refine_lines: strip index out of range");
  std::vector<double> out;
  out.reserve(lines.size() + marked.size());
  for (int s = 0; s < n; ++s) {
    out.push_back(lines[s]);
    if (marked.count(s)) out.push_back(0.5 * (lines[s] + lines[s + 1]));
  }
  out.push_back(lines.back());
  return out;
}

int locate_1d(const std::vector<double>& lines, double x) {
  const int n = static_cast<int>(lines.size()) - 1;
  // upper_bound puts points that lie on a line into the strip above it.
  int k = static_cast<int>(std::upper_bound(lines.begin(), lines.end(), x) -
                           lines.begin()) -
          1;
  return std::clamp(k, 0, n - 1);
}

}  // namespace

ElementRef TensorMesh::element(int id) const {
  ElementRef e;
  e.id = id;
  e.i = id % n_tau();
  e.j = id / n_tau();
  e.tau0 = tau_lines[e.i];
  e.tau1 = tau_lines[e.i + 1];
  e.xi0 = xi_lines[e.j];
  e.xi1 = xi_lines[e.j + 1];
  return e;
}

EdgeRef TensorMesh::vertical_edge(int id) const {
  EdgeRef e;
  e.id = id;
  e.orientation = EdgeOrientation::Vertical;
  e.line = id / n_xi();
  e.strip = id % n_xi();
  e.fixed = tau_lines[e.line];
  e.lo = xi_lines[e.strip];
  e.hi = xi_lines[e.strip + 1];
  return e;
}

EdgeRef TensorMesh::horizontal_edge(int id) const {
  EdgeRef e;
  e.id = id;
  e.orientation = EdgeOrientation::Horizontal;
  e.line = id / n_tau();
  e.strip = id % n_tau();
  e.fixed = xi_lines[e.line];
  e.lo = tau_lines[e.strip];
  e.hi = tau_lines[e.strip + 1];
  return e;
}

int TensorMesh::locate(double tau, double xi) const {
  return element_id(locate_1d(tau_lines, tau), locate_1d(xi_lines, xi));
}

TensorMesh uniform_mesh(int n_tau, int n_xi, double T, double Z) {
  if (n_tau < 1 || n_xi < 1)
    throw std::invalid_argument("uniform_mesh: need at least one strip per direction");
  if (!(T > 0.0) || !(Z > 0.0))
    throw std::invalid_argument("uniform_mesh: extents must be positive");
  TensorMesh m;
  m.tau_lines.resize(n_tau + 1);
  m.xi_lines.resize(n_xi + 1);
  for (int i = 0; i <= n_tau; ++i) m.tau_lines[i] = T * i / n_tau;
  for (int j = 0; j <= n_xi; ++j) m.xi_lines[j] = Z * j / n_xi;
  return m;
}

TensorMesh refine_uniform(const TensorMesh& m) {
  std::vector<int> all_tau(m.n_tau()), all_xi(m.n_xi());
  for (int i = 0; i < m.n_tau(); ++i) all_tau[i] = i;
  for (int j = 0; j < m.n_xi(); ++j) all_xi[j] = j;
  return refine_lines(m, all_tau, all_xi);
}

TensorMesh refine_lines(const TensorMesh& m, const std::vector<int>& tau_strips,
                        const std::vector<int>& xi_strips) {
  TensorMesh out;
  out.tau_lines = bisect(m.tau_lines, tau_strips);
  out.xi_lines = bisect(m.xi_lines, xi_strips);
  return out;
}

nlohmann::json mesh_to_json(const TensorMesh& m) {
  return nlohmann::json{{"tau_lines", m.tau_lines}, {"xi_lines", m.xi_lines}};
}

TensorMesh mesh_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tau_lines") || !j.contains("xi_lines"))
    throw std::invalid_argument(
        "mesh_from_json: expected object with tau_lines and xi_lines");
  TensorMesh m;
  m.tau_lines = j.at("tau_lines").get<std::vector<double>>();
  m.xi_lines = j.at("xi_lines").get<std::vector<double>>();
  check_lines(m.tau_lines, "tau");
  check_lines(m.xi_lines, "xi");
  return m;
}

}  // namespace pulsedpg
