#include "mgt/state.hpp"

#include <utility>
#include <vector>

namespace mgt {

Eigen::SparseMatrix<double> node_interpolation_matrix(const BranchedMesh& mesh) {
  const int nt = static_cast<int>(mesh.triangles.size());
  const auto total = static_cast<Eigen::Index>(mesh.total_nodes());
  Eigen::SparseMatrix<double> N(total, static_cast<Eigen::Index>(mesh.vertices.size()));
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(total) * 3);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& rule = mesh.rule(t);
    const auto off = static_cast<Eigen::Index>(mesh.node_offset[t]);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      for (int c = 0; c < 3; ++c) {
        trips.emplace_back(off + static_cast<Eigen::Index>(q), tri.v[c], rule.nodes[q].bary[c]);
      }
    }
  }
  N.setFromTriplets(trips.begin(), trips.end());
  return N;
}

Eigen::VectorXd node_area_weights(const BranchedMesh& mesh) {
  const int nt = static_cast<int>(mesh.triangles.size());
  Eigen::VectorXd w(static_cast<Eigen::Index>(mesh.total_nodes()));
  for (int t = 0; t < nt; ++t) {
    const double area = mesh.chart_area(t);
    const auto& rule = mesh.rule(t);
    const auto off = static_cast<Eigen::Index>(mesh.node_offset[t]);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      w[off + static_cast<Eigen::Index>(q)] = area * rule.nodes[q].weight;
    }
  }
  return w;
}

SurfaceState build_state(const SurfaceModel& model, const MeshParams& params, BranchedMesh mesh) {
  SurfaceState st;
  st.model = model;
  st.params = params;
  st.mesh = std::move(mesh);
  st.basis = orthonormal_basis(st.mesh);
  st.B = bergman_form(st.mesh, st.basis);
  st.laplacian = std::make_unique<ConformalLaplacian>(st.mesh, st.B);

  const int g = st.basis.g;
  st.wedges = wedge_two_forms(st.mesh, st.basis);
  const auto n = static_cast<Eigen::Index>(st.mesh.vertices.size());
  st.wedge_loads.resize(n, g * g);
  for (int k = 0; k < g * g; ++k) st.wedge_loads.col(k) = st.wedges[k].load;
  st.green_fields = st.laplacian->green_apply_batch(st.wedge_loads, &st.max_solve_residual);

  const int nt = static_cast<int>(st.mesh.triangles.size());
  st.psi_tri_means.resize(g, nt);
  for (int t = 0; t < nt; ++t) {
    const auto& rule = st.mesh.rule(t);
    const std::size_t off = st.mesh.node_offset[t];
    Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(g);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      mean += rule.nodes[q].weight * st.basis.psi_values.col(off + q);
    }
    st.psi_tri_means.col(t) = mean;
  }
  st.node_weights = node_area_weights(st.mesh);
  return st;
}

SurfaceState build_state(const SurfaceModel& model, const MeshParams& params) {
  return build_state(model, params, build_surface(model, params));
}

}  // namespace mgt
