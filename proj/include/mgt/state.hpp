#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mgt/basis.hpp"
#include "mgt/laplace.hpp"
#include "mgt/mesh.hpp"
#include "mgt/surface.hpp"

namespace mgt {

// Everything derived from one mesh that downstream computations share:
// orthonormal frame, normalized volume form, Laplace solver, the g^2 wedge
// loads psi_i ^ conj(psi_j) and their Green potentials.
struct SurfaceState {
  SurfaceModel model;
  MeshParams params;
  BranchedMesh mesh;
  DifferentialBasis basis;
  VolumeFormB B;
  std::unique_ptr<ConformalLaplacian> laplacian;

  std::vector<TwoForm> wedges;     // index i*g+j <-> psi_i ^ conj(psi_j)
  Eigen::MatrixXcd wedge_loads;    // n_vertices x g^2, column i*g+j
  Eigen::MatrixXcd green_fields;   // n_vertices x g^2, Green potential of each wedge
  double max_solve_residual = 0.0;

  Eigen::MatrixXcd psi_tri_means;  // g x n_triangles, rule-weighted means of frame values
  Eigen::VectorXd node_weights;    // chart_area * rule weight per quadrature node

  int g() const { return basis.g; }
  int n_vertices() const { return static_cast<int>(mesh.vertices.size()); }
};

// Build the state from a surface description (meshes it first) or from an
// already-built mesh (used by refinement sweeps).
SurfaceState build_state(const SurfaceModel& model, const MeshParams& params);
SurfaceState build_state(const SurfaceModel& model, const MeshParams& params, BranchedMesh mesh);

// Barycentric interpolation matrix from vertex fields to quadrature nodes.
Eigen::SparseMatrix<double> node_interpolation_matrix(const BranchedMesh& mesh);

// chart_area(t) * weight(q) for every node, so integral = weights dot samples.
Eigen::VectorXd node_area_weights(const BranchedMesh& mesh);

}  // namespace mgt
