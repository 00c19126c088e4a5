#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <vector>

#include "mgt/basis.hpp"
#include "mgt/mesh.hpp"

namespace mgt {

// A 2-form in weak (load-vector) representation: load[v] = Int phi_v * Omega
// over the surface, phi_v the piecewise-linear hat function at vertex v.
struct TwoForm {
  Eigen::VectorXcd load;
  cplx total() const { return load.sum(); }
};

// A scalar field as nodal vertex values, with the relative residual of the
// linear solve that produced it.
struct ScalarField {
  Eigen::VectorXcd values;
  double solve_residual = 0;
};

// Load vector of a 2-form given by a density w.r.t. the chart area form,
// sampled at every quadrature node.
TwoForm two_form_from_node_density(const BranchedMesh& mesh, const Eigen::VectorXcd& density);

// Loads of psi_i ^ conj(psi_j) for all ordered pairs (i,j), stored at index
// i*g + j. Density is -2i f_i conj(f_j) w.r.t. chart area. Constructed so
// that load(j,i) == -conj(load(i,j)) holds exactly in floating point.
std::vector<TwoForm> wedge_two_forms(const BranchedMesh& mesh, const DifferentialBasis& basis);

// The volume form B as a TwoForm (its load is exactly the lumped mass vector).
TwoForm b_two_form(const VolumeFormB& B);

// Unit point mass at a mesh vertex.
TwoForm point_two_form(int n_vertices, int vertex);

// Conformal Laplace operator d*d on piecewise-linear functions (cotan
// stiffness, assembled chart-wise; the Dirichlet form is conformally
// invariant so chart choice does not matter). Provides the Green operator
//   u = Phi(Omega):  d*d u = Omega - (Int Omega) B,  Int u B = 0,
// realized as a grounded sparse Cholesky solve plus mass projection.
class ConformalLaplacian {
 public:
  ConformalLaplacian(const BranchedMesh& mesh, const VolumeFormB& B);

  int size() const { return n_; }
  const Eigen::SparseMatrix<double>& stiffness() const { return S_; }
  const Eigen::VectorXd& mass() const { return mass_; }
  // Edges whose cotan weight is negative (obtuse-pair diagnostic); large
  // counts signal mesh-quality trouble, not an error.
  long negative_weight_edges() const { return negative_weight_edges_; }

  // Green operator on one load; real and imaginary parts are solved through
  // the same real factorization, so conj/negation symmetries of the load are
  // preserved exactly in the field.
  ScalarField green_apply(const TwoForm& omega) const;

  // Batched Green operator (one column per load), same semantics.
  Eigen::MatrixXcd green_apply_batch(const Eigen::MatrixXcd& loads, double* max_residual = nullptr) const;

  // Int u * a  (bilinear, no conjugation)
  static cplx pairing(const TwoForm& a, const ScalarField& u) {
    return a.load.cwiseProduct(u.values).sum();
  }

  // Green function column G(vertex, .): field of a point mass at the vertex.
  Eigen::VectorXd green_kernel_column(int vertex) const;

  // Dense Green kernel K with K(p,q) = G(p,q), computed column-block-wise
  // through the factorization. Guarded by max_vertices.
  Eigen::MatrixXd green_kernel_dense(int max_vertices) const;

 private:
  Eigen::MatrixXd solve_real(const Eigen::MatrixXd& rhs) const;

  int n_ = 0;
  double sigma_ = 0;  // grounding weight
  long negative_weight_edges_ = 0;
  Eigen::SparseMatrix<double> S_;        // cotan stiffness (PSD, null = constants)
  Eigen::SparseMatrix<double> Sg_;       // grounded S + sigma e0 e0^T (SPD)
  Eigen::VectorXd mass_;                 // lumped B mass, sum ~= 1
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

// Spectral pseudo-inverse Green kernel on a dense copy of the stiffness
// matrix: K = -(I - 1 m^T) S^+ (I - m 1^T). Independent verification oracle
// for small meshes; throws if the mesh exceeds max_vertices.
Eigen::MatrixXd dense_green_kernel(const ConformalLaplacian& lap, int max_vertices = 600);

}  // namespace mgt
